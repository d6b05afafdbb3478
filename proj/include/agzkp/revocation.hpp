// Copyright 2026 The AGZKP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Privilege control. Each OBU derives the secret-id sets of a session from
// a keyed PRF over (iv, counter); RSUs holding a violator's iv regenerate
// the expected sets and match them against what a session requests.

#include <algorithm>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "agzkp/bytes.hpp"
#include "agzkp/crypto.hpp"
#include "agzkp/error.hpp"
#include "agzkp/keymgmt.hpp"
#include "agzkp/numtheory.hpp"

namespace agzkp {

using IdSet = std::vector<std::uint32_t>;  // ascending, 1-based pool indices

/// k*mu ids as mu blocks of k distinct ids; blocks pairwise distinct.
struct SecretIdSequence {
  std::vector<IdSet> blocks;

  std::vector<std::uint32_t> flat() const {
    std::vector<std::uint32_t> out;
    for (const auto& b : blocks) out.insert(out.end(), b.begin(), b.end());
    return out;
  }
  bool operator==(const SecretIdSequence&) const = default;
};

inline constexpr std::size_t kDefaultScreeningWindow = 64;

namespace detail {

/// HMAC-SHA256 in counter mode over iv || counter || block || attempt || word.
class PrfStream {
 public:
  PrfStream(ByteView key, std::uint64_t iv, std::uint64_t counter, std::uint32_t block,
            std::uint32_t attempt)
      : key_(key.begin(), key.end()) {
    ByteWriter w;
    w.str("agzkp-seq-v1").u64(iv).u64(counter).u32(block).u32(attempt);
    prefix_ = std::move(w).bytes();
  }

  std::uint32_t next_word() {
    if (pos_ == buf_.size()) refill();
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | buf_[pos_++];
    return v;
  }

  /// Uniform in [0, bound) by rejection.
  std::uint32_t below(std::uint32_t bound) {
    const std::uint64_t range = std::uint64_t{1} << 32;
    const std::uint64_t limit = range - range % bound;
    for (;;) {
      const std::uint32_t x = next_word();
      if (x < limit) return static_cast<std::uint32_t>(x % bound);
    }
  }

 private:
  void refill() {
    ByteWriter w;
    w.raw(prefix_).u32(chunk_++);
    const Digest d = hmac_sha256(key_, w.bytes());
    buf_.assign(d.begin(), d.end());
    pos_ = 0;
  }

  Bytes key_;
  Bytes prefix_;
  Bytes buf_;
  std::size_t pos_ = 0;
  std::uint32_t chunk_ = 0;
};

inline IdSet draw_block(PrfStream& s, std::size_t n, std::size_t k) {
  // Partial Fisher-Yates over 1..n.
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + s.below(static_cast<std::uint32_t>(n - i));
    std::swap(ids[i], ids[j]);
  }
  IdSet out(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

inline SecretIdSequence next_sequence(ByteView prf_key, std::uint64_t iv, std::uint64_t counter,
                                      std::size_t n, std::size_t k, std::size_t mu) {
  require(n >= k && k >= 1 && mu >= 1, ErrorCode::kInvalidArgument,
          "sequence needs n >= k >= 1 and mu >= 1");
  require(BigInt(mu) <= binomial(n, k), ErrorCode::kParameterOverflow,
          "mu exceeds the number of distinct k-subsets C(n, k)");
  SecretIdSequence seq;
  for (std::uint32_t b = 0; b < mu; ++b) {
    for (std::uint32_t attempt = 0;; ++attempt) {
      detail::PrfStream stream(prf_key, iv, counter, b, attempt);
      IdSet block = detail::draw_block(stream, n, k);
      if (std::find(seq.blocks.begin(), seq.blocks.end(), block) == seq.blocks.end()) {
        seq.blocks.push_back(std::move(block));
        break;
      }
    }
  }
  return seq;
}

/// The sets an OBU requests in its next session.
inline std::vector<IdSet> obu_choose_proof_sets(const ObuCredential& c, std::size_t mu) {
  require(BigInt(mu) <= binomial(c.n(), c.k()), ErrorCode::kTooManyProofsRequested,
          "mu exceeds C(n, k)");
  return next_sequence(c.prf_key, c.iv, c.counter, c.n(), c.k(), mu).blocks;
}

/// Called after each accepted session only.
inline void advance_counter(ObuCredential& c) { ++c.counter; }

struct RevocationEntry {
  std::uint64_t iv = 0;
  std::uint64_t last_known_counter = 0;
  std::string reason;
  double inserted_at = 0;
  bool operator==(const RevocationEntry&) const = default;
};

/// Versioned broadcast record, serialized like provisioning data.
struct RevocationRecord {
  std::uint64_t version = 0;
  std::uint64_t iv = 0;
  std::uint64_t counter_hint = 0;
  std::string reason;

  Bytes encode() const {
    ByteWriter w;
    w.str("agzkp-revoke-v1").u64(version).u64(iv).u64(counter_hint).str(reason);
    return std::move(w).bytes();
  }

  static RevocationRecord decode(ByteView data) {
    ByteReader r(data);
    require(r.str() == "agzkp-revoke-v1", ErrorCode::kFormatError, "not a revocation record");
    RevocationRecord rec;
    rec.version = r.u64();
    rec.iv = r.u64();
    rec.counter_hint = r.u64();
    rec.reason = r.str();
    r.expect_done();
    return rec;
  }
  bool operator==(const RevocationRecord&) const = default;
};

struct ScreeningMatch {
  std::uint64_t iv = 0;
  std::uint64_t counter = 0;
  bool operator==(const ScreeningMatch&) const = default;
};

/// RSU-local revocation table: concurrent readers, exclusive versioned
/// writers.
class RevocationTable {
 public:
  RevocationTable() = default;
  RevocationTable(const RevocationTable& o) {
    std::shared_lock lock(o.mu_);
    entries_ = o.entries_;
    version_ = o.version_;
  }
  RevocationTable& operator=(const RevocationTable& o) {
    if (this == &o) return *this;
    std::map<std::uint64_t, RevocationEntry> e;
    std::uint64_t v;
    {
      std::shared_lock lock(o.mu_);
      e = o.entries_;
      v = o.version_;
    }
    std::unique_lock lock(mu_);
    entries_ = std::move(e);
    version_ = v;
    return *this;
  }

  /// Idempotent in entries; bumps the version on every call.
  void apply(const RevocationRecord& rec, double now) {
    std::unique_lock lock(mu_);
    auto [it, inserted] = entries_.try_emplace(rec.iv);
    if (inserted) {
      it->second = RevocationEntry{rec.iv, rec.counter_hint, rec.reason, now};
    } else {
      it->second.last_known_counter = std::max(it->second.last_known_counter, rec.counter_hint);
    }
    ++version_;
  }

  /// Replaces the whole state (persistence).
  void restore(std::vector<RevocationEntry> entries, std::uint64_t version) {
    std::unique_lock lock(mu_);
    entries_.clear();
    for (auto& e : entries) entries_[e.iv] = std::move(e);
    version_ = version;
  }

  /// Records that the track was seen at this counter (screening advances).
  void observe_counter(std::uint64_t iv, std::uint64_t counter) {
    std::unique_lock lock(mu_);
    auto it = entries_.find(iv);
    if (it != entries_.end()) {
      it->second.last_known_counter = std::max(it->second.last_known_counter, counter);
    }
  }

  bool contains(std::uint64_t iv) const {
    std::shared_lock lock(mu_);
    return entries_.contains(iv);
  }
  std::size_t size() const {
    std::shared_lock lock(mu_);
    return entries_.size();
  }
  std::uint64_t version() const {
    std::shared_lock lock(mu_);
    return version_;
  }
  std::vector<RevocationEntry> entries() const {
    std::shared_lock lock(mu_);
    std::vector<RevocationEntry> out;
    for (const auto& [iv, e] : entries_) out.push_back(e);
    return out;
  }

  /// Regenerates each entry's sequences over [last, last + window] and
  /// compares them to the observed sets (as an ordered sequence).
  std::optional<ScreeningMatch> screen(ByteView prf_key, const std::vector<IdSet>& observed,
                                       std::size_t n, std::size_t k,
                                       std::size_t window = kDefaultScreeningWindow) const {
    std::shared_lock lock(mu_);
    if (entries_.empty() || observed.empty()) return std::nullopt;
    for (const auto& [iv, e] : entries_) {
      for (std::uint64_t c = e.last_known_counter; c <= e.last_known_counter + window; ++c) {
        if (next_sequence(prf_key, iv, c, n, k, observed.size()).blocks == observed) {
          return ScreeningMatch{iv, c};
        }
      }
    }
    return std::nullopt;
  }

  bool operator==(const RevocationTable& o) const {
    if (this == &o) return true;
    std::shared_lock a(mu_), b(o.mu_);
    return entries_ == o.entries_ && version_ == o.version_;
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::uint64_t, RevocationEntry> entries_;
  std::uint64_t version_ = 0;
};

/// Pushes one record to every table. Same record twice: one entry, two
/// version bumps.
inline RevocationRecord broadcast_revocation(std::uint64_t iv, std::uint64_t counter_hint,
                                             std::string reason,
                                             const std::vector<RevocationTable*>& tables,
                                             double now = 0) {
  RevocationRecord rec{0, iv, counter_hint, std::move(reason)};
  for (RevocationTable* t : tables) {
    rec.version = t->version() + 1;
    t->apply(rec, now);
  }
  return rec;
}

/// Random replacement master witnesses for flagged tracks (keyed by iv).
/// Only the flagged track is affected; co-members keep authenticating.
class GarbleStore {
 public:
  struct Track {
    std::uint32_t group_id = 0;
    std::vector<BigInt> witnesses;
    bool operator==(const Track&) const = default;
  };

  void garble(std::uint64_t iv, std::uint32_t group_id, std::size_t k, const BigInt& m, Rng& rng) {
    std::unique_lock lock(mu_);
    Track t{group_id, {}};
    for (std::size_t i = 0; i < k; ++i) t.witnesses.push_back(sample_unit(rng, m));
    tracks_[iv] = std::move(t);
  }

  std::optional<Track> lookup(std::uint64_t iv) const {
    std::shared_lock lock(mu_);
    auto it = tracks_.find(iv);
    if (it == tracks_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const {
    std::shared_lock lock(mu_);
    return tracks_.size();
  }

  Json to_json() const {
    std::shared_lock lock(mu_);
    Json a = Json::array();
    for (const auto& [iv, t] : tracks_) {
      a.push_back({{"iv", to_hex(iv)},
                   {"group_id", t.group_id},
                   {"witnesses", json_io::integers(t.witnesses)}});
    }
    return a;
  }

  void load_json(const Json& a) {
    std::unique_lock lock(mu_);
    tracks_.clear();
    for (const auto& e : a) {
      tracks_[static_cast<std::uint64_t>(from_hex(e.at("iv").get<std::string>()))] =
          Track{e.at("group_id").get<std::uint32_t>(), json_io::integers_from(e.at("witnesses"))};
    }
  }

 private:
  mutable std::shared_mutex mu_;
  std::map<std::uint64_t, Track> tracks_;
};

inline Json to_json(const RevocationTable& t) {
  Json entries = Json::array();
  for (const auto& e : t.entries()) {
    entries.push_back({{"iv", to_hex(e.iv)},
                       {"last_known_counter", e.last_known_counter},
                       {"reason", e.reason},
                       {"inserted_at", e.inserted_at}});
  }
  return {{"version", t.version()}, {"entries", entries}};
}

inline RevocationTable revocation_table_from_json(const Json& j) {
  std::vector<RevocationEntry> entries;
  for (const auto& e : j.at("entries")) {
    entries.push_back({static_cast<std::uint64_t>(from_hex(e.at("iv").get<std::string>())),
                       e.at("last_known_counter").get<std::uint64_t>(),
                       e.at("reason").get<std::string>(), e.at("inserted_at").get<double>()});
  }
  RevocationTable t;
  t.restore(std::move(entries), j.at("version").get<std::uint64_t>());
  return t;
}

}  // namespace agzkp
