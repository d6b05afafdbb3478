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

// Executable threat models.
//
//  * RSU cheater: holds public witnesses only. Per round it guesses the
//    challenge b^, commits W = +-R^2 * (prod_{b^_i = 1} g_i)^-1 and answers
//    Y = R; the round passes iff the challenge equals b^.
//  * Transcript-replay simulator: a passive observer records accepted
//    (W, challenge, Y) triples from honest sessions and a rogue prover later
//    replays them. Recording needs plaintext visibility of the rounds, which
//    the session envelopes deny; TapLevel makes that assumption explicit.

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agzkp/auth.hpp"
#include "agzkp/bytes.hpp"
#include "agzkp/keymgmt.hpp"
#include "agzkp/montecarlo.hpp"
#include "agzkp/revocation.hpp"
#include "agzkp/numtheory.hpp"
#include "agzkp/wire.hpp"
#include "agzkp/zkp.hpp"

namespace agzkp {

// ---------------------------------------------------------------------------
// RSU cheater.

/// W for a guessed challenge: +-R^2 / prod_{guess_i = 1} g_i.
inline BigInt cheater_commitment(const BigInt& r, bool negative, const Challenge& guess,
                                 std::span<const BigInt> witnesses, const BigInt& m) {
  BigInt denom = 1;
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    if (guess[i]) denom = mod_mul(denom, witnesses[i], m);
  }
  BigInt w = mod_mul(mod_mul(r, r, m), mod_inv(denom, m), m);
  return negative ? mod(-w, m) : w;
}

class CheaterProver final : public ProverStrategy {
 public:
  CheaterProver(BigInt m, std::vector<BigInt> witnesses)
      : m_(std::move(m)), witnesses_(std::move(witnesses)) {}

  std::size_t arity() const override { return witnesses_.size(); }

  BigInt commit(Rng& rng) override {
    guess_ = random_challenge(rng, witnesses_.size());
    r_ = sample_unit(rng, m_);
    return cheater_commitment(r_, rng.coin(), guess_, witnesses_, m_);
  }

  BigInt respond(const Challenge&) override { return r_; }

  const Challenge& last_guess() const { return guess_; }

 private:
  BigInt m_;
  std::vector<BigInt> witnesses_;
  Challenge guess_;
  BigInt r_ = 1;
};

struct CheaterTranscript {
  std::vector<ZkpRound> rounds;
  bool accepted = false;
};

/// One h-round proof attempt by the cheater against a basic verifier. In
/// oracle mode the cheater learns the challenge before committing.
inline CheaterTranscript cheater_attempt(std::span<const BigInt> witnesses, const BigInt& m,
                                         std::size_t h, Rng& rng, bool oracle = false) {
  check_proof_parameters(witnesses.size(), h);
  const std::size_t k = witnesses.size();
  CheaterTranscript out;
  for (std::size_t round = 0; round < h; ++round) {
    Challenge challenge;
    Challenge guess;
    if (oracle) {
      challenge = random_challenge(rng, k);
      guess = challenge;
    } else {
      guess = random_challenge(rng, k);
    }
    const BigInt r = sample_unit(rng, m);
    const BigInt w = cheater_commitment(r, rng.coin(), guess, witnesses, m);
    if (!oracle) challenge = random_challenge(rng, k);  // verifier draws after the commit
    const bool ok = verify_round(w, challenge, r, witnesses, m);
    out.rounds.push_back({w, challenge, r});
    if (!ok) return out;
  }
  out.accepted = true;
  return out;
}

/// Uniform k-subset of [1, n] in ascending order.
inline IdSet random_k_subset(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::uint32_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
  for (std::size_t i = 0; i < k; ++i) std::swap(ids[i], ids[i + rng.below(n - i)]);
  IdSet out(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(out.begin(), out.end());
  return out;
}

/// Cheating RSU in the bundle phase. Set-blind: it does not use the
/// requested set and must guess one of the C(n, k) sets as well as every
/// challenge; this is the model behind P_mu. With set_blind = false it
/// answers the requested set and only guesses challenges.
class CheaterBundleProver final : public BundleProver {
 public:
  CheaterBundleProver(std::vector<BigInt> pool_witnesses, bool set_blind = true)
      : pool_witnesses_(std::move(pool_witnesses)), set_blind_(set_blind) {}

  IdSet claim(std::size_t, const IdSet& requested, Rng& rng) override {
    if (!set_blind_) return requested;
    return random_k_subset(pool_witnesses_.size(), requested.size(), rng);
  }

  std::unique_ptr<ProverStrategy> prover(const IdSet& claimed, const BundleProofContext& ctx) override {
    return std::make_unique<CheaterProver>(ctx.modulus, select(pool_witnesses_, claimed));
  }

 private:
  std::vector<BigInt> pool_witnesses_;
  bool set_blind_;
};

// ---------------------------------------------------------------------------
// Passive observation.

enum class TapLevel {
  kCiphertextOnly,  // sees frames; bodies stay sealed
  kRoundPlaintext,  // envelope compromise: sees decrypted round bodies
};

inline std::string_view to_string(TapLevel t) {
  return t == TapLevel::kCiphertextOnly ? "ciphertext-only" : "round-plaintext";
}

struct ObservedRound {
  IdSet ids;
  BigInt w;
  Challenge challenge;
  BigInt y;
  Variant variant = Variant::kBasic;
  bool operator==(const ObservedRound&) const = default;
};

using Corpus = std::vector<ObservedRound>;

/// Reconstructs accepted bundle rounds from a plaintext tap.
class TranscriptObserver {
 public:
  PlainTap tap() {
    return [this](const PlainEvent& e) { on_event(e); };
  }
  void on_frame(const WireEvent&) { ++frames_seen_; }

  const Corpus& corpus() const { return corpus_; }
  std::size_t frames_seen() const { return frames_seen_; }

  void on_event(const PlainEvent& e) {
    ++frames_seen_;
    try {
      handle(e);
    } catch (const Error&) {
      // Unparseable bodies are not recorded.
    }
  }

 private:
  struct Pending {
    Variant variant = Variant::kBasic;
    std::optional<ObservedRound> round;
    bool complete = false;
    int acked_proofs = 0;
  };

  void handle(const PlainEvent& e) {
    switch (e.type) {
      case MsgType::kAuthRequest:
        next_variant_ = AuthRequestBody::decode(e.body).variant;
        return;
      case MsgType::kSessionAccept:
        sessions_[e.key_id].variant = next_variant_;
        return;
      default:
        break;
    }
    auto it = sessions_.find(e.key_id);
    if (it == sessions_.end()) return;
    Pending& p = it->second;
    switch (e.type) {
      case MsgType::kBundleCommit: {
        const auto c = BundleCommitBody::decode(e.body);
        p.round = ObservedRound{c.ids, c.w, {}, 0, p.variant};
        p.complete = false;
        return;
      }
      case MsgType::kBundleChallenge:
        if (p.round) p.round->challenge = ChallengeBody::decode(e.body).bits;
        return;
      case MsgType::kBundleResponse: {
        const auto r = ResponseBody::decode(e.body);
        if (p.round && !r.degenerate) {
          p.round->y = r.y;
          p.complete = true;
        }
        return;
      }
      case MsgType::kBundleAck: {
        const auto s = AckBody::decode(e.body).status;
        if (s == AckStatus::kNextRound || s == AckStatus::kProofAccepted) commit(p);
        if (s == AckStatus::kProofAccepted) ++p.acked_proofs;
        keep_ids(p);
        return;
      }
      case MsgType::kClosing: {
        const auto c = ClosingBody::decode(e.body);
        if (c.verified_count > p.acked_proofs) commit(p);  // the last proof passed
        sessions_.erase(it);
        return;
      }
      default:
        return;
    }
  }

  void commit(Pending& p) {
    if (p.round && p.complete) corpus_.push_back(*p.round);
    p.complete = false;
  }

  static void keep_ids(Pending& p) {
    if (p.round) {
      p.round->challenge.clear();
      p.round->y = 0;
    }
  }

  Variant next_variant_ = Variant::kBasic;
  std::map<std::uint64_t, Pending> sessions_;
  Corpus corpus_;
  std::size_t frames_seen_ = 0;
};

struct Observation {
  Corpus corpus;
  std::size_t sessions = 0;
  std::size_t frames_seen = 0;
  TapLevel level = TapLevel::kRoundPlaintext;
};

/// Runs honest sessions (OBUs round-robin) past a passive observer.
inline Observation observe_sessions(std::vector<ObuCredential>& obus, RsuEndpoint& rsu,
                                    const SessionConfig& cfg, std::size_t sessions, TapLevel level,
                                    Rng& rng) {
  require(!obus.empty(), ErrorCode::kInvalidArgument, "no OBUs to observe");
  TranscriptObserver observer;
  SessionRunOptions opt;
  opt.envelopes = rsu.options().envelopes;
  if (level == TapLevel::kRoundPlaintext) {
    opt.plain_tap = observer.tap();
  } else {
    opt.wire_tap = [&observer](const WireEvent& e) { observer.on_frame(e); };
  }
  double now = 0;
  for (std::size_t s = 0; s < sessions; ++s) {
    opt.start_time = now;
    run_full_session(obus[s % obus.size()], rsu, cfg, rng, opt);
    now += 1.0;
  }
  return Observation{observer.corpus(), sessions, observer.frames_seen(), level};
}

inline constexpr char kCorpusMagic[] = "AGZC";

/// Corpus files reuse the transcript integer and id-set encodings.
inline Bytes encode_corpus(const Corpus& corpus) {
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>(kCorpusMagic), 4)).u16(1);
  w.u32(static_cast<std::uint32_t>(corpus.size()));
  for (const auto& r : corpus) {
    encode_id_set(w, r.ids);
    w.u8(static_cast<std::uint8_t>(r.variant));
    encode_round(w, ZkpRound{r.w, r.challenge, r.y});
  }
  return std::move(w).bytes();
}

inline Corpus decode_corpus(ByteView data) {
  ByteReader r(data);
  const ByteView magic = r.take(4);
  require(std::string(magic.begin(), magic.end()) == kCorpusMagic, ErrorCode::kFormatError,
          "not a corpus file");
  require(r.u16() == 1, ErrorCode::kFormatError, "unsupported corpus version");
  const std::uint32_t count = r.u32();
  require(count <= r.remaining(), ErrorCode::kFormatError, "corpus count too large");
  Corpus out;
  for (std::uint32_t i = 0; i < count; ++i) {
    ObservedRound o;
    o.ids = decode_id_set(r);
    const std::uint8_t v = r.u8();
    require(v <= 1, ErrorCode::kFormatError, "unknown variant");
    o.variant = static_cast<Variant>(v);
    const ZkpRound z = decode_round(r);
    o.w = z.w;
    o.challenge = z.challenge;
    o.y = z.y;
    out.push_back(std::move(o));
  }
  r.expect_done();
  return out;
}

// ---------------------------------------------------------------------------
// Simulator matrices.

/// Replay table for one k-id set: up to 2^k rows (one per recorded W), each
/// holding the recorded Y per challenge value. Stored sparsely.
struct SimulatorMatrix {
  struct Row {
    BigInt w;
    std::map<std::uint64_t, BigInt> y;  // challenge value -> Y
    bool operator==(const Row&) const = default;
  };

  IdSet secret_ids;
  std::size_t k = 0;
  std::vector<Row> rows;

  std::uint64_t challenge_space() const { return std::uint64_t{1} << k; }
  std::size_t row_cap() const { return static_cast<std::size_t>(challenge_space()); }

  /// Adds a triple; returns false when it was redundant or the row cap is hit.
  bool add(const BigInt& w, const Challenge& challenge, const BigInt& y) {
    const std::uint64_t c = challenge_value(challenge);
    for (auto& row : rows) {
      if (row.w == w) return row.y.emplace(c, y).second;
    }
    if (rows.size() >= row_cap()) return false;
    rows.push_back(Row{w, {{c, y}}});
    return true;
  }

  std::size_t cells() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.y.size();
    return n;
  }

  /// Mean fraction of the 2^k challenge values answerable per row.
  double coverage() const {
    if (rows.empty()) return 0.0;
    return static_cast<double>(cells()) /
           (static_cast<double>(rows.size()) * static_cast<double>(challenge_space()));
  }

  bool fully_populated() const {
    return rows.size() == row_cap() && cells() == row_cap() * challenge_space();
  }

  /// Packed footprint with 64-bit W and Y entries and a 64-bit challenge key
  /// per populated cell.
  std::uint64_t packed_bytes() const { return 8 * rows.size() + 16 * cells(); }

  bool operator==(const SimulatorMatrix&) const = default;
};

using SimulatorSet = std::map<IdSet, SimulatorMatrix>;

struct SimulatorBuild {
  SimulatorSet matrices;
  std::size_t rounds_used = 0;
  std::size_t rounds_skipped = 0;  // malformed for (n, k) or redundant

  double mean_coverage() const {
    if (matrices.empty()) return 0.0;
    double s = 0;
    for (const auto& [ids, m] : matrices) s += m.coverage();
    return s / static_cast<double>(matrices.size());
  }
};

inline SimulatorBuild build_simulators(const Corpus& corpus, std::size_t n, std::size_t k) {
  SimulatorBuild out;
  for (const auto& r : corpus) {
    const bool shape_ok = r.ids.size() == k && r.challenge.size() == k &&
                          std::all_of(r.ids.begin(), r.ids.end(),
                                      [n](std::uint32_t id) { return id >= 1 && id <= n; });
    if (!shape_ok) {
      ++out.rounds_skipped;
      continue;
    }
    auto [it, inserted] = out.matrices.try_emplace(r.ids);
    if (inserted) {
      it->second.secret_ids = r.ids;
      it->second.k = k;
    }
    if (it->second.add(r.w, r.challenge, r.y)) {
      ++out.rounds_used;
    } else {
      ++out.rounds_skipped;
    }
  }
  return out;
}

/// Modelled memory (published formula): 2^(2k+6) * C(n, k) bytes.
inline BigInt simulator_memory_cost(std::size_t n, std::size_t k) {
  require(n >= k, ErrorCode::kInvalidArgument, "need n >= k");
  return (BigInt(1) << (2 * k + 6)) * binomial(n, k);
}

/// Packed bytes of a fully populated simulator set for (n, k) under the
/// SimulatorMatrix layout.
inline BigInt simulator_measured_full_cost(std::size_t n, std::size_t k) {
  const BigInt cells = BigInt(1) << (2 * k);
  const BigInt rows = BigInt(1) << k;
  return (8 * rows + 16 * cells) * binomial(n, k);
}

struct Recording {
  Observation observation;
  SimulatorBuild build;
  bool complete = false;  // every one of the C(n, k) simulators fully populated
};

inline bool simulators_complete(const SimulatorSet& s, std::size_t n, std::size_t k) {
  if (BigInt(s.size()) != binomial(n, k)) return false;
  for (const auto& [ids, m] : s) {
    if (!m.fully_populated()) return false;
  }
  return true;
}

/// Observes honest sessions in batches until the simulators are complete
/// or max_sessions is reached.
inline Recording record_simulators(std::vector<ObuCredential>& obus, RsuEndpoint& rsu,
                                   const SessionConfig& cfg, TapLevel level, std::size_t batch,
                                   std::size_t max_sessions, Rng& rng) {
  const std::size_t n = obus.front().n(), k = obus.front().k();
  Recording out;
  out.observation.level = level;
  while (out.observation.sessions < max_sessions) {
    const std::size_t count = std::min(batch, max_sessions - out.observation.sessions);
    Observation o = observe_sessions(obus, rsu, cfg, count, level, rng);
    out.observation.sessions += o.sessions;
    out.observation.frames_seen += o.frames_seen;
    out.observation.corpus.insert(out.observation.corpus.end(), o.corpus.begin(), o.corpus.end());
    out.build = build_simulators(out.observation.corpus, n, k);
    out.complete = simulators_complete(out.build.matrices, n, k);
    if (out.complete) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replay and control provers.

struct ReplayStats {
  std::size_t proofs = 0;
  std::size_t missing_simulator = 0;
  std::size_t unpopulated_cells = 0;
};

class ReplayStrategy final : public ProverStrategy {
 public:
  ReplayStrategy(const SimulatorMatrix* matrix, std::size_t k, BigInt m, ReplayStats* stats)
      : matrix_(matrix), k_(k), m_(std::move(m)), stats_(stats) {}

  std::size_t arity() const override { return k_; }

  BigInt commit(Rng& rng) override {
    rng_ = rng.split();
    if (!matrix_ || matrix_->rows.empty()) {
      row_ = nullptr;
      return prover_commit(rng, m_).w;
    }
    row_ = &matrix_->rows[rng.below(matrix_->rows.size())];
    return row_->w;
  }

  BigInt respond(const Challenge& challenge) override {
    if (row_) {
      const auto it = row_->y.find(challenge_value(challenge));
      if (it != row_->y.end()) return it->second;
    }
    ++stats_->unpopulated_cells;
    return sample_unit(rng_, m_);
  }

 private:
  const SimulatorMatrix* matrix_;
  const SimulatorMatrix::Row* row_ = nullptr;
  std::size_t k_;
  BigInt m_;
  ReplayStats* stats_;
  Rng rng_{0};
};

/// Rogue prover that answers each requested set from its simulator.
class ReplayBundleProver final : public BundleProver {
 public:
  ReplayBundleProver(const SimulatorSet* matrices, ReplayStats* stats)
      : matrices_(matrices), stats_(stats) {}

  IdSet claim(std::size_t, const IdSet& requested, Rng&) override { return requested; }

  std::unique_ptr<ProverStrategy> prover(const IdSet& claimed, const BundleProofContext& ctx) override {
    ++stats_->proofs;
    const auto it = matrices_->find(claimed);
    const SimulatorMatrix* m = nullptr;
    if (it == matrices_->end()) {
      ++stats_->missing_simulator;  // MissingSimulator: the proof's rounds fail
    } else {
      m = &it->second;
    }
    return std::make_unique<ReplayStrategy>(m, claimed.size(), ctx.modulus, stats_);
  }

 private:
  const SimulatorSet* matrices_;
  ReplayStats* stats_;
};

/// Control: well-formed commitments, uniformly random responses.
class RandomResponseStrategy final : public ProverStrategy {
 public:
  RandomResponseStrategy(std::size_t k, BigInt m) : k_(k), m_(std::move(m)) {}
  std::size_t arity() const override { return k_; }
  BigInt commit(Rng& rng) override {
    rng_ = rng.split();
    return prover_commit(rng, m_).w;
  }
  BigInt respond(const Challenge&) override { return sample_unit(rng_, m_); }

 private:
  std::size_t k_;
  BigInt m_;
  Rng rng_{0};
};

class RandomResponseBundleProver final : public BundleProver {
 public:
  IdSet claim(std::size_t, const IdSet& requested, Rng&) override { return requested; }
  std::unique_ptr<ProverStrategy> prover(const IdSet& claimed, const BundleProofContext& ctx) override {
    return std::make_unique<RandomResponseStrategy>(claimed.size(), ctx.modulus);
  }
};

// ---------------------------------------------------------------------------
// Attack reports.

struct AttackReport {
  std::string kind;
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double closed_form = std::nan("");
  BigInt memory_modeled = 0;
  std::uint64_t memory_measured = 0;
  std::vector<double> per_alpha;  // index a-1: frequency of >= a verified proofs
  std::uint64_t rounds_attempted = 0;
  std::uint64_t rounds_accepted = 0;
  std::uint64_t missing_simulator = 0;

  double frequency() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
  double round_frequency() const {
    return rounds_attempted == 0 ? 0.0 : static_cast<double>(rounds_accepted) / rounds_attempted;
  }
};

inline std::string attack_csv_header() {
  return "kind,trials,successes,frequency,closed_form,rounds_attempted,rounds_accepted,"
         "round_frequency,missing_simulator,memory_modeled_bytes,memory_measured_bytes";
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string attack_csv_row(const AttackReport& r) {
  return r.kind + "," + std::to_string(r.trials) + "," + std::to_string(r.successes) + "," +
         format_double(r.frequency()) + "," + format_double(r.closed_form) + "," +
         std::to_string(r.rounds_attempted) + "," + std::to_string(r.rounds_accepted) + "," +
         format_double(r.round_frequency()) + "," + std::to_string(r.missing_simulator) + "," +
         r.memory_modeled.str() + "," + std::to_string(r.memory_measured);
}

/// P(Binomial(mu, p) >= alpha).
inline double binomial_tail(int mu, double p, int alpha) {
  double total = 0;
  for (int j = alpha; j <= mu; ++j) {
    total += static_cast<double>(binomial(mu, j)) * std::pow(p, j) * std::pow(1 - p, mu - j);
  }
  return total;
}

struct CheaterConfig {
  std::size_t k = 1;
  std::size_t h = 1;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  std::size_t bit_length = 64;
  bool oracle = false;
};

/// Public witnesses of k fresh secrets over a fresh Blum modulus.
struct CheaterTarget {
  BigInt m;
  std::vector<BigInt> witnesses;
};

inline CheaterTarget make_cheater_target(std::size_t k, std::size_t bit_length, std::uint64_t seed) {
  CheaterTarget t;
  t.m = generate_blum_modulus(bit_length, splitmix64(seed ^ 0x6d6f64756c7573ULL)).m;
  Rng rng(splitmix64(seed ^ 0x7769746e657373ULL));
  for (std::size_t i = 0; i < k; ++i) t.witnesses.push_back(random_secret(rng, t.m).witness(t.m));
  return t;
}

/// Monte Carlo of cheater_attempt; closed form 2^-(kh) (1 in oracle mode).
inline AttackReport run_cheater_experiment(const CheaterConfig& cfg) {
  check_proof_parameters(cfg.k, cfg.h);
  const CheaterTarget target = make_cheater_target(cfg.k, cfg.bit_length, cfg.seed);
  const McResult mc = run_trials(cfg.trials, cfg.seed, [&](Rng& rng) {
    return cheater_attempt(target.witnesses, target.m, cfg.h, rng, cfg.oracle).accepted;
  });
  AttackReport r;
  r.kind = cfg.oracle ? "cheater-oracle" : "cheater";
  r.trials = mc.trials;
  r.successes = mc.successes;
  r.closed_form = cfg.oracle ? 1.0 : std::ldexp(1.0, -static_cast<int>(cfg.k * cfg.h));
  return r;
}

struct BundleCheatConfig {
  std::size_t k = 2;
  std::size_t h = 1;
  std::size_t n = 3;
  int mu = 1;
  int alpha = 1;
  bool set_blind = true;
  std::uint64_t trials = 100000;
  std::uint64_t seed = 1;
  std::size_t bit_length = 64;
};

/// Cheating RSU against obu_verify_bundle. The OBU draws its mu sets from
/// the PRF sequence of a fresh random track per trial. Closed form: the
/// binomial tail with per-proof success 2^-(kh) / C(n, k) (set-blind) or
/// 2^-(kh) (informed).
inline AttackReport run_bundle_cheat_experiment(const BundleCheatConfig& cfg) {
  check_proof_parameters(cfg.k, cfg.h);
  require(cfg.alpha >= 1 && cfg.alpha <= cfg.mu, ErrorCode::kInvalidParameters, "need 1 <= alpha <= mu");
  const CheaterTarget target = make_cheater_target(cfg.n, cfg.bit_length, cfg.seed);
  const Bytes prf_key(32, 0x42);
  const RsuGroupMaterial no_secrets;
  const McResult mc = run_trials(cfg.trials, cfg.seed, [&](Rng& rng) {
    const auto sets = next_sequence(prf_key, rng.next(), 0, cfg.n, cfg.k,
                                    static_cast<std::size_t>(cfg.mu)).blocks;
    CheaterBundleProver cheater(target.witnesses, cfg.set_blind);
    Rng rsu_rng = rng.split();
    const auto v = obu_verify_bundle(target.m, target.witnesses, sets, cfg.h, Variant::kBasic,
                                     cheater, no_secrets, {}, rng, rsu_rng);
    return v.verified_count >= cfg.alpha;
  });
  AttackReport r;
  r.kind = cfg.set_blind ? "bundle-cheater-set-blind" : "bundle-cheater-informed";
  r.trials = mc.trials;
  r.successes = mc.successes;
  double p = std::ldexp(1.0, -static_cast<int>(cfg.k * cfg.h));
  if (cfg.set_blind) p /= static_cast<double>(binomial(cfg.n, cfg.k));
  r.closed_form = binomial_tail(cfg.mu, p, cfg.alpha);
  return r;
}

struct SimulatorAttackConfig {
  SessionConfig session;
  std::size_t sessions = 1000;
  std::uint64_t seed = 1;
  bool random_response_control = false;
};

/// Replays the simulators (or the random-response control) from a rogue
/// RSU against an honest OBU running the standard session flow.
inline AttackReport simulator_attack(const SimulatorSet& matrices, const RsuCredential& rsu_cred,
                                     ObuCredential obu, const SimulatorAttackConfig& cfg) {
  RsuOptions options;
  options.seed = cfg.seed;
  RsuEndpoint rsu(rsu_cred, options);
  ReplayStats stats;
  rsu.set_bundle_prover_factory([&](const RsuSessionView&) -> std::unique_ptr<BundleProver> {
    if (cfg.random_response_control) return std::make_unique<RandomResponseBundleProver>();
    return std::make_unique<ReplayBundleProver>(&matrices, &stats);
  });
  const auto& group = rsu_cred.groups.at(obu.group_id);
  const std::size_t k = group.master_witnesses.size();
  const std::size_t n = group.pool.size();

  AttackReport report;
  report.kind = std::string(cfg.random_response_control ? "random-response-control" : "simulator") +
                "-" + std::string(to_string(cfg.session.variant));
  report.per_alpha.assign(static_cast<std::size_t>(cfg.session.mu), 0.0);
  Rng rng(cfg.seed);
  double now = 0;
  for (std::size_t s = 0; s < cfg.sessions; ++s) {
    SessionRunOptions opt;
    opt.start_time = now;
    now += 1.0;
    const SessionRun run = run_full_session(obu, rsu, cfg.session, rng, opt);
    ++report.trials;
    if (run.result.accepted()) ++report.successes;
    for (int a = 1; a <= cfg.session.mu; ++a) {
      if (run.result.verified_count >= a) report.per_alpha[a - 1] += 1;
    }
    for (const auto& proof : run.record.bundle) {
      const auto poly = session_polynomial(proof.variant, k, proof.poly_seed);
      ProofVerifier v(obu.modulus, select(obu.pool_witnesses, proof.secret_ids), proof.variant, poly);
      for (const auto& r : proof.rounds) {
        ++report.rounds_attempted;
        if (v.check(r.w, r.challenge, r.y) == Verdict::kAccept) ++report.rounds_accepted;
      }
    }
  }
  for (auto& f : report.per_alpha) f /= static_cast<double>(std::max<std::uint64_t>(report.trials, 1));
  report.missing_simulator = stats.missing_simulator;
  report.memory_modeled = simulator_memory_cost(n, k);
  for (const auto& [ids, m] : matrices) report.memory_measured += m.packed_bytes();

  // Closed form for replays against the basic variant when every one of the
  // C(n, k) sets has a simulator of the same coverage.
  if (!cfg.random_response_control && cfg.session.variant == Variant::kBasic &&
      BigInt(matrices.size()) == binomial(n, k)) {
    const double c = matrices.begin()->second.coverage();
    bool uniform = true;
    for (const auto& [ids, m] : matrices) uniform = uniform && std::abs(m.coverage() - c) < 1e-12;
    if (uniform) {
      report.closed_form =
          binomial_tail(cfg.session.mu, std::pow(c, cfg.session.h), cfg.session.alpha);
    }
  }
  return report;
}

}  // namespace agzkp
