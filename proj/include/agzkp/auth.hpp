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

// Two-way anonymous authentication between an OBU and an RSU.
//
//   RSU -> OBU  Beacon(cert, time)
//   OBU -> RSU  AuthRequest: seal_rsu(G_i, T1, K_session, serv_id, alpha, mu, h, variant, nonce)
//   RSU -> OBU  SessionAccept(alpha, nonce) under K_session, new key id ID_K
//   OBU -> RSU  SetRequest(mu sets of k pool ids)      -- screened against revocations
//   RSU -> OBU  SetAck
//   h rounds    OBU proves knowledge of Pr_1..Pr_k     (MemCommit/MemChallenge/MemResponse/MemAck)
//   mu proofs   RSU proves the pool secrets of each set (BundleCommit/BundleChallenge/
//               BundleResponse/BundleAck), h rounds each
//   OBU -> RSU  Closing(outcome, verified_count, alpha) -- logged, does not gate access
//
// Endpoints are state machines from frames to frames; a Channel carries the
// bytes, which lets the simulator substitute a lossy, delayed channel.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "agzkp/bytes.hpp"
#include "agzkp/crypto.hpp"
#include "agzkp/error.hpp"
#include "agzkp/keymgmt.hpp"
#include "agzkp/numtheory.hpp"
#include "agzkp/revocation.hpp"
#include "agzkp/wire.hpp"
#include "agzkp/zkp.hpp"

namespace agzkp {

inline constexpr double kDefaultFreshnessWindow = 5.0;
inline constexpr int kMinAlpha = 1;
inline constexpr int kMaxAlpha = 5;

inline bool is_supported_alpha(int alpha) { return alpha >= kMinAlpha && alpha <= kMaxAlpha; }

struct SessionConfig {
  int alpha = 2;
  int mu = 5;
  int h = 4;
  std::string serv_id = "ERS";
  Variant variant = Variant::kBasic;
  bool eager_stop = false;
  double freshness_window = kDefaultFreshnessWindow;

  /// Checks the invariants against the group shape (n pool secrets, k per proof).
  void validate(std::size_t n, std::size_t k) const {
    require(is_supported_alpha(alpha), ErrorCode::kUnsupportedAlpha,
            "alpha must be one of 1, 2, 3, 4, 5");
    require(mu >= 1 && mu <= 0xffff, ErrorCode::kInvalidParameters, "mu out of range");
    require(alpha <= mu, ErrorCode::kInvalidParameters, "alpha must not exceed mu");
    require(h >= 1 && h <= 0xffff, ErrorCode::kDegenerateParameters, "h must be at least 1");
    require(k >= 1 && k < n, ErrorCode::kInvalidParameters, "need 1 <= k < n");
    require(BigInt(mu) <= binomial(n, k), ErrorCode::kTooManyProofsRequested,
            "mu exceeds C(n, k)");
    require(variant == Variant::kBasic || k >= 2, ErrorCode::kDegenerateParameters,
            "the hardened variant needs k >= 2");
  }
};

/// Minimum alpha accepted per service id.
struct PrivacyPolicy {
  std::map<std::string, int> min_alpha;

  static PrivacyPolicy permissive() {
    return PrivacyPolicy{{{"ERS", 1}, {"TOLL", 1}, {"INFO", 1}, {"PARK", 1}}};
  }
};

/// The requested alpha when policy permits it; no other alpha is substituted.
inline std::optional<int> negotiate_privacy(const PrivacyPolicy& policy, const std::string& serv_id,
                                            int alpha) {
  const auto it = policy.min_alpha.find(serv_id);
  if (it == policy.min_alpha.end() || alpha < it->second || !is_supported_alpha(alpha)) {
    return std::nullopt;
  }
  return alpha;
}

struct AuthResult {
  AuthOutcome outcome = AuthOutcome::kAborted;
  int verified_count = 0;
  int alpha = 0;
  std::optional<ErrorCode> error;
  std::string detail;

  bool accepted() const { return outcome == AuthOutcome::kAccepted; }
};

/// Hardened-variant polynomial seed, bound to the session key, key id, both
/// nonces, the proof direction and the proof index.
inline Bytes polynomial_seed(const SessionKey& key, std::uint64_t key_id, const SessionNonce& obu,
                             const SessionNonce& rsu, std::string_view label,
                             std::uint32_t index) {
  ByteWriter w;
  w.str("agzkp-poly-v1").raw(key).u64(key_id).raw(obu).raw(rsu).str(label).u32(index);
  const Digest d = sha256(w.bytes());
  return Bytes(d.begin(), d.end());
}

inline std::optional<SessionPolynomial> session_polynomial(Variant variant, std::size_t k,
                                                           const Bytes& seed) {
  if (variant == Variant::kBasic) return std::nullopt;
  return derive_session_polynomial(seed, k, default_coefficient_modulus());
}

inline std::vector<BigInt> select(std::span<const BigInt> values, const IdSet& ids) {
  std::vector<BigInt> out;
  for (auto id : ids) out.push_back(values[id - 1]);
  return out;
}

inline std::vector<Secret> select(std::span<const Secret> values, const IdSet& ids) {
  std::vector<Secret> out;
  for (auto id : ids) out.push_back(values[id - 1]);
  return out;
}

/// Sets must be mu pairwise-distinct k-subsets of [1, n].
inline void validate_set_request(const std::vector<IdSet>& sets, std::size_t mu, std::size_t n,
                                 std::size_t k) {
  require(sets.size() == mu, ErrorCode::kMalformedSetRequest, "set count differs from mu");
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const IdSet& s = sets[i];
    require(s.size() == k, ErrorCode::kMalformedSetRequest, "set size differs from k");
    for (std::size_t j = 0; j < s.size(); ++j) {
      require(s[j] >= 1 && s[j] <= n, ErrorCode::kMalformedSetRequest, "secret id out of range");
      require(j == 0 || s[j - 1] < s[j], ErrorCode::kMalformedSetRequest,
              "set ids must be strictly ascending");
    }
    for (std::size_t j = 0; j < i; ++j) {
      require(sets[j] != s, ErrorCode::kMalformedSetRequest, "duplicate set in request");
    }
  }
}

// ---------------------------------------------------------------------------
// Plaintext records.

struct PlainEvent {
  Direction direction = Direction::kObuToRsu;
  MsgType type = MsgType::kBeacon;
  std::uint64_t key_id = 0;
  Bytes body;
  double time = 0;
};

/// Receives decrypted message bodies. Only granted to observers whose
/// threat model includes envelope compromise.
using PlainTap = std::function<void(const PlainEvent&)>;

/// What the OBU saw of a session, sufficient to re-verify it offline.
struct SessionRecord {
  std::uint64_t key_id = 0;
  std::uint32_t group_id = 0;
  std::uint32_t rsu_id = 0;
  int alpha = 0;
  int mu = 0;
  int h = 0;
  Variant variant = Variant::kBasic;
  std::vector<IdSet> sets;
  ZkpProof membership;
  std::vector<ZkpProof> bundle;
  std::vector<bool> bundle_verified;
  AuthResult result;
};

// ---------------------------------------------------------------------------
// OBU side.

struct ObuStart {
  AuthRequestBody body;
  Bytes frame;
  std::uint32_t rsu_id = 0;
};

/// Verifies the beacon and seals a fresh request to the beaconing RSU.
inline ObuStart obu_start(const ObuCredential& cred, const BeaconBody& beacon,
                          const SessionConfig& cfg, const AsymmetricEnvelope& env, Rng& rng,
                          double now) {
  require(verify_certificate(beacon.certificate, cred.kdc_root, to_micros(now)),
          ErrorCode::kBadCertificate, "beacon certificate does not verify");
  cfg.validate(cred.n(), cred.k());
  ObuStart out;
  out.rsu_id = beacon.certificate.subject;
  AuthRequestBody& b = out.body;
  b.group_id = cred.group_id;
  b.t1_us = to_micros(now);
  b.session_key = rng.bytes<16>();
  b.serv_id = cfg.serv_id;
  b.alpha = static_cast<std::uint8_t>(cfg.alpha);
  b.mu = static_cast<std::uint16_t>(cfg.mu);
  b.h = static_cast<std::uint16_t>(cfg.h);
  b.variant = cfg.variant;
  b.obu_nonce = rng.bytes<kNonceBytes>();
  Frame f{MsgType::kAuthRequest, 0, env.seal(beacon.certificate.public_key, b.encode(), rng)};
  out.frame = f.encode();
  return out;
}

class ObuEndpoint {
 public:
  /// The credential is updated in place (counter advance on acceptance).
  ObuEndpoint(ObuCredential* cred, SessionConfig cfg, EnvelopeSuite env, Rng rng)
      : cred_(cred), cfg_(std::move(cfg)), env_(std::move(env)), rng_(rng) {}

  void set_plain_tap(PlainTap tap) { tap_ = std::move(tap); }

  bool finished() const { return phase_ == Phase::kDone; }
  const AuthResult& result() const { return record_.result; }
  const SessionRecord& record() const { return record_; }

  /// Marks the session lost (used by channels that drop frames).
  void abort(ErrorCode code, std::string detail) {
    if (!finished()) finish_aborted(code, std::move(detail));
  }

  std::vector<Bytes> handle(ByteView bytes, double now) {
    if (finished()) return {};
    try {
      const Frame f = Frame::decode(bytes);
      return dispatch(f, now);
    } catch (const Error& e) {
      finish_aborted(e.code(), e.what());
      return {};
    }
  }

 private:
  enum class Phase { kAwaitBeacon, kAwaitAccept, kAwaitSetAck, kMembership, kBundle, kDone };

  std::vector<Bytes> dispatch(const Frame& f, double now) {
    if (f.type == MsgType::kReject) return on_reject(f, now);
    switch (phase_) {
      case Phase::kAwaitBeacon:
        require(f.type == MsgType::kBeacon, ErrorCode::kMalformedMessage, "expected a beacon");
        return on_beacon(f, now);
      case Phase::kAwaitAccept:
        require(f.type == MsgType::kSessionAccept, ErrorCode::kMalformedMessage,
                "expected SessionAccept");
        return on_accept(f, now);
      case Phase::kAwaitSetAck:
        require(f.type == MsgType::kSetAck && f.key_id == key_id_, ErrorCode::kMalformedMessage,
                "expected SetAck");
        open(f, now);
        return {commit_membership(now)};
      case Phase::kMembership:
        require(f.key_id == key_id_, ErrorCode::kMalformedMessage, "foreign key id");
        if (f.type == MsgType::kMemChallenge) return on_mem_challenge(f, now);
        if (f.type == MsgType::kMemAck) return on_mem_ack(f, now);
        if (f.type == MsgType::kBundleCommit) {
          phase_ = Phase::kBundle;
          return on_bundle_commit(f, now);
        }
        fail(ErrorCode::kMalformedMessage, "unexpected message during membership proof");
      case Phase::kBundle:
        require(f.key_id == key_id_, ErrorCode::kMalformedMessage, "foreign key id");
        if (f.type == MsgType::kBundleCommit) return on_bundle_commit(f, now);
        if (f.type == MsgType::kBundleResponse) return on_bundle_response(f, now);
        fail(ErrorCode::kMalformedMessage, "unexpected message during bundle");
      case Phase::kDone:
        return {};
    }
    return {};
  }

  Bytes open(const Frame& f, double now) {
    Bytes body = keys_.open_frame(*env_.symmetric, f);
    if (tap_) tap_(PlainEvent{Direction::kRsuToObu, f.type, f.key_id, body, now});
    return body;
  }

  Bytes seal(MsgType type, const Bytes& body, double now) {
    if (tap_) tap_(PlainEvent{Direction::kObuToRsu, type, key_id_, body, now});
    return keys_.seal_frame(*env_.symmetric, type, key_id_, body);
  }

  std::vector<Bytes> on_beacon(const Frame& f, double now) {
    const BeaconBody beacon = BeaconBody::decode(f.payload);
    ObuStart start = obu_start(*cred_, beacon, cfg_, *env_.asymmetric, rng_, now);
    request_ = start.body;
    record_.group_id = cred_->group_id;
    record_.rsu_id = start.rsu_id;
    record_.alpha = cfg_.alpha;
    record_.mu = cfg_.mu;
    record_.h = cfg_.h;
    record_.variant = cfg_.variant;
    record_.result.alpha = cfg_.alpha;
    keys_ = SessionChannelKeys(request_.session_key, Direction::kObuToRsu);
    if (tap_) tap_(PlainEvent{Direction::kObuToRsu, MsgType::kAuthRequest, 0, request_.encode(), now});
    phase_ = Phase::kAwaitAccept;
    return {start.frame};
  }

  std::vector<Bytes> on_accept(const Frame& f, double now) {
    key_id_ = f.key_id;
    const SessionAcceptBody accept = SessionAcceptBody::decode(open(f, now));
    require(accept.alpha == request_.alpha, ErrorCode::kMalformedMessage,
            "rsu substituted a different alpha");
    rsu_nonce_ = accept.rsu_nonce;
    record_.key_id = key_id_;
    sets_ = obu_choose_proof_sets(*cred_, static_cast<std::size_t>(cfg_.mu));
    record_.sets = sets_;
    const auto mem_seed =
        polynomial_seed(request_.session_key, key_id_, request_.obu_nonce, rsu_nonce_, "membership", 0);
    mem_prover_ = std::make_unique<HonestProver>(
        cred_->modulus, cred_->master_key, cfg_.variant,
        session_polynomial(cfg_.variant, cred_->k(), mem_seed));
    record_.membership.variant = cfg_.variant;
    for (std::uint32_t i = 1; i <= cred_->k(); ++i) record_.membership.secret_ids.push_back(i);
    if (cfg_.variant == Variant::kHardened) record_.membership.poly_seed = mem_seed;
    phase_ = Phase::kAwaitSetAck;
    return {seal(MsgType::kSetRequest, SetRequestBody{sets_}.encode(), now)};
  }

  Bytes commit_membership(double now) {
    phase_ = Phase::kMembership;
    mem_w_ = mem_prover_->commit(rng_);
    return seal(MsgType::kMemCommit, MemCommitBody{to_micros(now), mem_w_}.encode(), now);
  }

  std::vector<Bytes> on_mem_challenge(const Frame& f, double now) {
    const ChallengeBody c = ChallengeBody::decode(open(f, now));
    require(c.bits.size() == cred_->k(), ErrorCode::kChallengeLengthMismatch,
            "membership challenge length differs from k");
    ResponseBody r;
    try {
      r.y = mem_prover_->respond(c.bits);
      record_.membership.rounds.push_back({mem_w_, c.bits, r.y});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateEvaluation) throw;
      r.degenerate = true;
      mem_last_degenerate_ = true;
    }
    if (!r.degenerate) mem_last_degenerate_ = false;
    return {seal(MsgType::kMemResponse, r.encode(), now)};
  }

  std::vector<Bytes> on_mem_ack(const Frame& f, double now) {
    const AckBody ack = AckBody::decode(open(f, now));
    if (ack.status == AckStatus::kRerun && !mem_last_degenerate_ &&
        !record_.membership.rounds.empty()) {
      record_.membership.rounds.pop_back();  // verifier-side degenerate round
    }
    require(ack.status == AckStatus::kNextRound || ack.status == AckStatus::kRerun,
            ErrorCode::kMalformedMessage, "unexpected membership ack");
    return {commit_membership(now)};
  }

  void begin_proof(std::size_t index) {
    const IdSet& ids = sets_[index];
    const auto seed = polynomial_seed(request_.session_key, key_id_, request_.obu_nonce, rsu_nonce_,
                                      "bundle", static_cast<std::uint32_t>(index));
    auto poly = session_polynomial(cfg_.variant, cred_->k(), seed);
    verifier_ = std::make_unique<ProofVerifier>(cred_->modulus, select(cred_->pool_witnesses, ids),
                                                cfg_.variant, poly);
    ZkpProof p;
    p.secret_ids = ids;
    p.variant = cfg_.variant;
    if (cfg_.variant == Variant::kHardened) p.poly_seed = seed;
    record_.bundle.push_back(std::move(p));
    proof_round_ = 0;
    proof_reruns_ = 0;
    proof_started_ = true;
  }

  std::vector<Bytes> on_bundle_commit(const Frame& f, double now) {
    const BundleCommitBody c = BundleCommitBody::decode(open(f, now));
    require(c.index == current_proof_, ErrorCode::kMalformedMessage, "proof index out of order");
    if (!proof_started_) begin_proof(current_proof_);
    if (c.ids != sets_[current_proof_]) {
      // The prover claims a different secret set: this proof cannot count.
      return finish_proof(false, now);
    }
    bundle_w_ = c.w;
    bundle_challenge_ = verifier_->draw_challenge(rng_);
    return {seal(MsgType::kBundleChallenge, ChallengeBody{bundle_challenge_}.encode(), now)};
  }

  std::vector<Bytes> on_bundle_response(const Frame& f, double now) {
    const ResponseBody r = ResponseBody::decode(open(f, now));
    Verdict v = Verdict::kDegenerate;
    if (!r.degenerate) v = verifier_->check(bundle_w_, bundle_challenge_, r.y);
    if (v == Verdict::kDegenerate) {
      if (++proof_reruns_ > kMaxDegenerateReruns) return finish_proof(false, now);
      return {seal(MsgType::kBundleAck, AckBody{AckStatus::kRerun}.encode(), now)};
    }
    record_.bundle.back().rounds.push_back({bundle_w_, bundle_challenge_, r.y});
    if (v == Verdict::kReject) return finish_proof(false, now);
    if (++proof_round_ == static_cast<std::size_t>(cfg_.h)) return finish_proof(true, now);
    proof_reruns_ = 0;
    return {seal(MsgType::kBundleAck, AckBody{AckStatus::kNextRound}.encode(), now)};
  }

  std::vector<Bytes> finish_proof(bool verified, double now) {
    record_.bundle_verified.push_back(verified);
    if (verified) ++record_.result.verified_count;
    ++current_proof_;
    proof_started_ = false;
    const bool all_done = current_proof_ == static_cast<std::size_t>(cfg_.mu);
    const bool eager = cfg_.eager_stop && record_.result.verified_count >= cfg_.alpha;
    if (!all_done && !eager) {
      const AckStatus s = verified ? AckStatus::kProofAccepted : AckStatus::kProofFailed;
      return {seal(MsgType::kBundleAck, AckBody{s}.encode(), now)};
    }
    AuthResult& res = record_.result;
    res.outcome = res.verified_count >= cfg_.alpha ? AuthOutcome::kAccepted
                                                   : AuthOutcome::kRejectedInsufficientProofs;
    if (res.accepted()) advance_counter(*cred_);
    phase_ = Phase::kDone;
    ClosingBody closing{res.outcome, static_cast<std::uint16_t>(res.verified_count),
                        static_cast<std::uint8_t>(cfg_.alpha)};
    return {seal(MsgType::kClosing, closing.encode(), now)};
  }

  std::vector<Bytes> on_reject(const Frame& f, double now) {
    RejectBody body;
    if (f.key_id == 0) {
      body = RejectBody::decode(f.payload);
    } else {
      require(f.key_id == key_id_ || phase_ == Phase::kAwaitAccept, ErrorCode::kMalformedMessage,
              "reject for a foreign session");
      if (phase_ == Phase::kAwaitAccept) key_id_ = f.key_id;
      body = RejectBody::decode(open(f, now));
    }
    record_.key_id = key_id_;
    record_.result.outcome = body.outcome;
    if (body.error != 0) record_.result.error = static_cast<ErrorCode>(body.error - 1);
    record_.result.detail = body.detail;
    phase_ = Phase::kDone;
    return {};
  }

  void finish_aborted(ErrorCode code, std::string detail) {
    record_.result.outcome = AuthOutcome::kAborted;
    record_.result.error = code;
    record_.result.detail = std::move(detail);
    phase_ = Phase::kDone;
  }

  ObuCredential* cred_;
  SessionConfig cfg_;
  EnvelopeSuite env_;
  Rng rng_;
  PlainTap tap_;
  Phase phase_ = Phase::kAwaitBeacon;
  AuthRequestBody request_;
  SessionChannelKeys keys_;
  std::uint64_t key_id_ = 0;
  SessionNonce rsu_nonce_{};
  std::vector<IdSet> sets_;
  std::unique_ptr<HonestProver> mem_prover_;
  BigInt mem_w_;
  bool mem_last_degenerate_ = false;
  std::unique_ptr<ProofVerifier> verifier_;
  std::size_t current_proof_ = 0;
  std::size_t proof_round_ = 0;
  std::size_t proof_reruns_ = 0;
  bool proof_started_ = false;
  BigInt bundle_w_;
  Challenge bundle_challenge_;
  SessionRecord record_;
};

// ---------------------------------------------------------------------------
// RSU side.

struct BundleProofContext {
  const BigInt& modulus;
  Variant variant;
  const std::optional<SessionPolynomial>& polynomial;
  std::size_t index;
  const RsuGroupMaterial& group;
};

/// Produces the RSU's proofs. The honest implementation proves the requested
/// set with the pool secrets; adversary models substitute their own.
class BundleProver {
 public:
  virtual ~BundleProver() = default;
  /// The secret-id set this proof claims (sent in the clear in the commit).
  virtual IdSet claim(std::size_t index, const IdSet& requested, Rng& rng) = 0;
  virtual std::unique_ptr<ProverStrategy> prover(const IdSet& claimed,
                                                 const BundleProofContext& ctx) = 0;
};

class HonestBundleProver final : public BundleProver {
 public:
  IdSet claim(std::size_t, const IdSet& requested, Rng&) override { return requested; }
  std::unique_ptr<ProverStrategy> prover(const IdSet& claimed,
                                         const BundleProofContext& ctx) override {
    return std::make_unique<HonestProver>(ctx.modulus, select(ctx.group.pool, claimed),
                                          ctx.variant, ctx.polynomial);
  }
};

/// RSU-observable session state. By construction it carries no member id
/// and no master secret.
struct RsuSessionView {
  std::uint64_t key_id = 0;
  std::uint32_t group_id = 0;
  int alpha = 0;
  std::string serv_id;
  std::vector<IdSet> sets;
  bool membership_verified = false;
  std::optional<AuthOutcome> outcome;
  std::optional<ClosingBody> closing;
};

using BundleProverFactory = std::function<std::unique_ptr<BundleProver>(const RsuSessionView&)>;

struct RsuOptions {
  PrivacyPolicy policy = PrivacyPolicy::permissive();
  double freshness_window = kDefaultFreshnessWindow;
  /// Deny matched sessions outright. When false the RSU lets the session
  /// continue against the garbled witnesses of the flagged track.
  bool deny_on_match = true;
  std::size_t screening_window = kDefaultScreeningWindow;
  std::uint64_t seed = 0;
  EnvelopeSuite envelopes = EnvelopeSuite::reference();
};

struct RegisteredSession {
  std::uint64_t key_id = 0;
  std::vector<Bytes> replies;
};

class RsuEndpoint {
 public:
  RsuEndpoint(RsuCredential cred, RsuOptions options = {},
              std::shared_ptr<RevocationTable> table = std::make_shared<RevocationTable>(),
              std::shared_ptr<GarbleStore> garble = std::make_shared<GarbleStore>())
      : cred_(std::move(cred)),
        options_(std::move(options)),
        table_(std::move(table)),
        garble_(std::move(garble)),
        garble_rng_(options_.seed ^ 0x6a09e667f3bcc908ULL) {}

  RsuEndpoint(const RsuEndpoint&) = delete;
  RsuEndpoint& operator=(const RsuEndpoint&) = delete;

  const RsuCredential& credential() const { return cred_; }
  RevocationTable& revocation_table() { return *table_; }
  std::shared_ptr<RevocationTable> revocation_table_ptr() const { return table_; }
  GarbleStore& garble_store() { return *garble_; }
  const RsuOptions& options() const { return options_; }

  void set_bundle_prover_factory(BundleProverFactory f) {
    std::unique_lock lock(table_mu_);
    factory_ = std::move(f);
  }

  Bytes beacon(double now) const {
    return Frame{MsgType::kBeacon, 0, BeaconBody{cred_.certificate, to_micros(now)}.encode()}
        .encode();
  }

  std::vector<Bytes> handle(ByteView bytes, double now) {
    Frame f;
    try {
      f = Frame::decode(bytes);
    } catch (const Error&) {
      return {};  // unparseable frames are dropped
    }
    if (f.type == MsgType::kAuthRequest) {
      try {
        return register_session(bytes, now).replies;
      } catch (const Error& e) {
        return {clear_reject(e.code(), e.what())};
      }
    }
    Session* s = find(f.key_id);
    if (!s) return {};
    std::lock_guard lock(s->mu);
    if (s->phase == Phase::kClosed) return {};
    try {
      return advance(*s, f, now);
    } catch (const Error& e) {
      return {reject(*s, AuthOutcome::kAborted, e.code(), e.what())};
    }
  }

  /// Opens and registers an AuthRequest; throws UndecryptableRequest,
  /// StaleTimestamp or MalformedMessage instead of creating a session.
  RegisteredSession register_session(ByteView bytes, double now) {
    const Frame f = Frame::decode(bytes);
    require(f.type == MsgType::kAuthRequest, ErrorCode::kMalformedMessage, "not an AuthRequest");
    const auto plain = options_.envelopes.asymmetric->open(cred_.box, f.payload);
    require(plain.has_value(), ErrorCode::kUndecryptableRequest,
            "request is not sealed to this rsu");
    const AuthRequestBody req = AuthRequestBody::decode(*plain);
    const double skew = std::abs(now - static_cast<double>(req.t1_us) / 1e6);
    require(skew <= options_.freshness_window, ErrorCode::kStaleTimestamp,
            "request timestamp outside the freshness window");

    auto session = std::make_unique<Session>();
    Session& s = *session;
    const Digest h = sha256(bytes);
    std::uint64_t seed = options_.seed;
    for (int i = 0; i < 8; ++i) seed = (seed << 8 | h[i]) ^ (seed >> 56);
    s.rng = Rng(splitmix64(seed ^ options_.seed));
    s.request = req;
    s.rsu_nonce = s.rng.bytes<kNonceBytes>();
    s.keys = SessionChannelKeys(req.session_key, Direction::kRsuToObu);
    s.view.group_id = req.group_id;
    s.view.alpha = req.alpha;
    s.view.serv_id = req.serv_id;
    {
      std::unique_lock lock(table_mu_);
      do {
        s.key_id = s.rng.next();
      } while (s.key_id == 0 || sessions_.contains(s.key_id));
      s.view.key_id = s.key_id;
      sessions_.emplace(s.key_id, std::move(session));
    }
    std::lock_guard lock(s.mu);
    RegisteredSession out;
    out.key_id = s.key_id;

    const auto group = cred_.groups.find(req.group_id);
    if (group == cred_.groups.end()) {
      out.replies.push_back(reject(s, AuthOutcome::kRejectedMembership, std::nullopt, "unknown group"));
      return out;
    }
    s.group = &group->second;
    const std::size_t n = s.group->pool.size();
    const std::size_t k = s.group->master_witnesses.size();
    SessionConfig cfg;
    cfg.alpha = req.alpha;
    cfg.mu = req.mu;
    cfg.h = req.h;
    cfg.variant = req.variant;
    try {
      cfg.validate(n, k);
    } catch (const Error& e) {
      const auto outcome = e.code() == ErrorCode::kUnsupportedAlpha ? AuthOutcome::kRejectedPolicy
                                                                    : AuthOutcome::kAborted;
      out.replies.push_back(reject(s, outcome, e.code(), e.what()));
      return out;
    }
    if (!negotiate_privacy(options_.policy, req.serv_id, req.alpha)) {
      out.replies.push_back(
          reject(s, AuthOutcome::kRejectedPolicy, std::nullopt, "privacy policy refuses request"));
      return out;
    }
    s.phase = Phase::kAwaitSets;
    out.replies.push_back(
        s.keys.seal_frame(*options_.envelopes.symmetric, MsgType::kSessionAccept, s.key_id,
                          SessionAcceptBody{req.alpha, s.rsu_nonce}.encode()));
    return out;
  }

  std::vector<RsuSessionView> sessions() const {
    std::shared_lock lock(table_mu_);
    std::vector<RsuSessionView> out;
    for (const auto& [id, s] : sessions_) {
      std::lock_guard slock(s->mu);
      out.push_back(s->view);
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.key_id < b.key_id; });
    return out;
  }

  std::optional<RsuSessionView> session(std::uint64_t key_id) const {
    std::shared_lock lock(table_mu_);
    const auto it = sessions_.find(key_id);
    if (it == sessions_.end()) return std::nullopt;
    std::lock_guard slock(it->second->mu);
    return it->second->view;
  }

  /// Drops closed sessions (long simulations).
  void prune_closed() {
    std::unique_lock lock(table_mu_);
    std::erase_if(sessions_, [](const auto& kv) {
      std::lock_guard slock(kv.second->mu);
      return kv.second->phase == Phase::kClosed;
    });
  }

  /// Persists the revocation table and garbled tracks.
  Json revocation_state_json() const {
    return {{"table", to_json(*table_)}, {"garbled", garble_->to_json()}};
  }
  void load_revocation_state(const Json& j) {
    *table_ = revocation_table_from_json(j.at("table"));
    garble_->load_json(j.at("garbled"));
  }

 private:
  enum class Phase { kAwaitRequest, kAwaitSets, kMembership, kBundle, kAwaitClosing, kClosed };

  struct Session {
    mutable std::mutex mu;
    std::uint64_t key_id = 0;
    Rng rng{0};
    AuthRequestBody request;
    SessionNonce rsu_nonce{};
    SessionChannelKeys keys;
    const RsuGroupMaterial* group = nullptr;
    Phase phase = Phase::kAwaitRequest;
    RsuSessionView view;
    std::optional<std::uint64_t> flagged_iv;
    // membership
    std::unique_ptr<ProofVerifier> mem_verifier;
    std::size_t mem_round = 0;
    std::size_t mem_reruns = 0;
    BigInt mem_w;
    Challenge mem_challenge;
    bool mem_awaiting_response = false;
    // bundle
    std::unique_ptr<BundleProver> bundle_prover;
    std::unique_ptr<ProverStrategy> prover;
    std::optional<SessionPolynomial> poly;
    std::size_t proof_index = 0;
    bool proof_open = false;
    IdSet claimed;
  };

  Session* find(std::uint64_t key_id) const {
    std::shared_lock lock(table_mu_);
    const auto it = sessions_.find(key_id);
    return it == sessions_.end() ? nullptr : it->second.get();
  }

  Bytes open(Session& s, const Frame& f) { return s.keys.open_frame(*options_.envelopes.symmetric, f); }

  Bytes seal(Session& s, MsgType type, const Bytes& body) {
    return s.keys.seal_frame(*options_.envelopes.symmetric, type, s.key_id, body);
  }

  static std::uint16_t wire_error(std::optional<ErrorCode> code) {
    return code ? static_cast<std::uint16_t>(static_cast<int>(*code) + 1) : 0;
  }

  Bytes reject(Session& s, AuthOutcome outcome, std::optional<ErrorCode> code, std::string detail) {
    s.phase = Phase::kClosed;
    s.view.outcome = outcome;
    return seal(s, MsgType::kReject, RejectBody{outcome, wire_error(code), std::move(detail)}.encode());
  }

  static Bytes clear_reject(ErrorCode code, std::string detail) {
    return Frame{MsgType::kReject, 0,
                 RejectBody{AuthOutcome::kAborted, wire_error(code), std::move(detail)}.encode()}
        .encode();
  }

  std::vector<Bytes> advance(Session& s, const Frame& f, double now) {
    switch (s.phase) {
      case Phase::kAwaitSets:
        require(f.type == MsgType::kSetRequest, ErrorCode::kMalformedMessage, "expected SetRequest");
        return on_sets(s, f);
      case Phase::kMembership:
        if (f.type == MsgType::kMemCommit) return on_mem_commit(s, f, now);
        if (f.type == MsgType::kMemResponse) return on_mem_response(s, f);
        fail(ErrorCode::kMalformedMessage, "unexpected message during membership proof");
      case Phase::kBundle:
        if (f.type == MsgType::kBundleChallenge) return on_bundle_challenge(s, f);
        if (f.type == MsgType::kBundleAck) return on_bundle_ack(s, f);
        if (f.type == MsgType::kClosing) return on_closing(s, f);
        fail(ErrorCode::kMalformedMessage, "unexpected message during bundle");
      case Phase::kAwaitClosing:
        if (f.type == MsgType::kClosing) return on_closing(s, f);
        fail(ErrorCode::kMalformedMessage, "expected Closing");
      case Phase::kAwaitRequest:
      case Phase::kClosed:
        return {};
    }
    return {};
  }

  std::vector<Bytes> on_sets(Session& s, const Frame& f) {
    const SetRequestBody body = SetRequestBody::decode(open(s, f));
    const std::size_t n = s.group->pool.size();
    const std::size_t k = s.group->master_witnesses.size();
    validate_set_request(body.sets, s.request.mu, n, k);
    s.view.sets = body.sets;
    if (const auto match =
            table_->screen(cred_.prf_key, body.sets, n, k, options_.screening_window)) {
      table_->observe_counter(match->iv, match->counter);
      {
        std::lock_guard g(garble_mu_);
        if (!garble_->lookup(match->iv)) {
          garble_->garble(match->iv, s.request.group_id, k, cred_.modulus, garble_rng_);
        }
      }
      s.flagged_iv = match->iv;
      if (options_.deny_on_match) {
        return {reject(s, AuthOutcome::kRejectedRevoked, std::nullopt, "revoked track")};
      }
    }
    std::vector<BigInt> witnesses = s.group->master_witnesses;
    if (s.flagged_iv) {
      if (auto track = garble_->lookup(*s.flagged_iv)) witnesses = track->witnesses;
    }
    const auto seed = polynomial_seed(s.request.session_key, s.key_id, s.request.obu_nonce,
                                      s.rsu_nonce, "membership", 0);
    s.mem_verifier = std::make_unique<ProofVerifier>(cred_.modulus, std::move(witnesses),
                                                     s.request.variant,
                                                     session_polynomial(s.request.variant, k, seed));
    s.phase = Phase::kMembership;
    return {seal(s, MsgType::kSetAck, {})};
  }

  std::vector<Bytes> on_mem_commit(Session& s, const Frame& f, double now) {
    require(!s.mem_awaiting_response, ErrorCode::kMalformedMessage, "commit while awaiting response");
    const MemCommitBody c = MemCommitBody::decode(open(s, f));
    const double skew = std::abs(now - static_cast<double>(c.t2_us) / 1e6);
    require(skew <= options_.freshness_window, ErrorCode::kStaleTimestamp,
            "membership timestamp outside the freshness window");
    s.mem_w = c.w;
    s.mem_challenge = s.mem_verifier->draw_challenge(s.rng);
    s.mem_awaiting_response = true;
    return {seal(s, MsgType::kMemChallenge, ChallengeBody{s.mem_challenge}.encode())};
  }

  std::vector<Bytes> on_mem_response(Session& s, const Frame& f) {
    require(s.mem_awaiting_response, ErrorCode::kMalformedMessage, "unsolicited response");
    s.mem_awaiting_response = false;
    const ResponseBody r = ResponseBody::decode(open(s, f));
    Verdict v = Verdict::kDegenerate;
    if (!r.degenerate) v = s.mem_verifier->check(s.mem_w, s.mem_challenge, r.y);
    if (v == Verdict::kDegenerate) {
      if (++s.mem_reruns > kMaxDegenerateReruns) {
        return {reject(s, AuthOutcome::kRejectedMembership, ErrorCode::kDegenerateEvaluation,
                       "rerun budget exhausted")};
      }
      return {seal(s, MsgType::kMemAck, AckBody{AckStatus::kRerun}.encode())};
    }
    if (v == Verdict::kReject) {
      return {reject(s, AuthOutcome::kRejectedMembership, std::nullopt, "membership proof failed")};
    }
    s.mem_reruns = 0;
    if (++s.mem_round < s.request.h) {
      return {seal(s, MsgType::kMemAck, AckBody{AckStatus::kNextRound}.encode())};
    }
    s.view.membership_verified = true;
    s.phase = Phase::kBundle;
    {
      std::shared_lock lock(table_mu_);
      s.bundle_prover = factory_ ? factory_(s.view) : std::make_unique<HonestBundleProver>();
    }
    return {bundle_commit(s, true)};
  }

  Bytes bundle_commit(Session& s, bool new_proof) {
    if (new_proof) {
      const IdSet& requested = s.view.sets[s.proof_index];
      const IdSet claimed = s.bundle_prover->claim(s.proof_index, requested, s.rng);
      const auto seed = polynomial_seed(s.request.session_key, s.key_id, s.request.obu_nonce,
                                        s.rsu_nonce, "bundle", static_cast<std::uint32_t>(s.proof_index));
      s.poly = session_polynomial(s.request.variant, requested.size(), seed);
      const BundleProofContext ctx{cred_.modulus, s.request.variant, s.poly, s.proof_index, *s.group};
      s.prover = s.bundle_prover->prover(claimed, ctx);
      s.proof_open = true;
      s.claimed = claimed;
    }
    const BigInt w = s.prover->commit(s.rng);
    return seal(s, MsgType::kBundleCommit,
                BundleCommitBody{static_cast<std::uint16_t>(s.proof_index), s.claimed, w}.encode());
  }

  std::vector<Bytes> on_bundle_challenge(Session& s, const Frame& f) {
    const ChallengeBody c = ChallengeBody::decode(open(s, f));
    ResponseBody r;
    try {
      r.y = s.prover->respond(c.bits);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateEvaluation) throw;
      r.degenerate = true;
    }
    return {seal(s, MsgType::kBundleResponse, r.encode())};
  }

  std::vector<Bytes> on_bundle_ack(Session& s, const Frame& f) {
    const AckBody ack = AckBody::decode(open(s, f));
    switch (ack.status) {
      case AckStatus::kNextRound:
      case AckStatus::kRerun:
        return {bundle_commit(s, false)};
      case AckStatus::kProofAccepted:
      case AckStatus::kProofFailed:
        if (++s.proof_index >= s.view.sets.size()) {
          s.phase = Phase::kAwaitClosing;
          return {};
        }
        return {bundle_commit(s, true)};
    }
    return {};
  }

  std::vector<Bytes> on_closing(Session& s, const Frame& f) {
    const ClosingBody c = ClosingBody::decode(open(s, f));
    s.view.closing = c;
    s.view.outcome = c.outcome;
    s.phase = Phase::kClosed;
    return {};
  }

  RsuCredential cred_;
  RsuOptions options_;
  std::shared_ptr<RevocationTable> table_;
  std::shared_ptr<GarbleStore> garble_;
  std::mutex garble_mu_;
  Rng garble_rng_;
  mutable std::shared_mutex table_mu_;
  std::unordered_map<std::uint64_t, std::unique_ptr<Session>> sessions_;
  BundleProverFactory factory_;
};

// ---------------------------------------------------------------------------
// Channels and the session pump.

class Channel {
 public:
  virtual ~Channel() = default;
  /// Returns the delivered frame, or nothing when it is lost.
  virtual std::optional<Bytes> carry(Direction dir, Bytes frame, double now) = 0;
};

class PerfectChannel final : public Channel {
 public:
  std::optional<Bytes> carry(Direction, Bytes frame, double) override { return frame; }
};

struct SessionRun {
  AuthResult result;
  SessionRecord record;
  std::vector<WireEvent> log;
};

struct SessionRunOptions {
  double start_time = 0;
  double step = 1e-4;  // simulated seconds per hop
  Channel* channel = nullptr;
  PlainTap plain_tap;
  std::function<void(const WireEvent&)> wire_tap;
  EnvelopeSuite envelopes = EnvelopeSuite::reference();
};

/// Runs one complete session, OBU against RSU, through the channel.
inline SessionRun run_full_session(ObuCredential& obu, RsuEndpoint& rsu, const SessionConfig& cfg,
                                   Rng& rng, const SessionRunOptions& opt = {}) {
  PerfectChannel perfect;
  Channel& channel = opt.channel ? *opt.channel : perfect;
  ObuEndpoint endpoint(&obu, cfg, opt.envelopes, rng.split());
  if (opt.plain_tap) endpoint.set_plain_tap(opt.plain_tap);
  SessionRun run;
  double now = opt.start_time;
  std::vector<std::pair<Direction, Bytes>> queue{{Direction::kRsuToObu, rsu.beacon(now)}};
  constexpr std::size_t kMaxHops = 1u << 22;
  for (std::size_t hop = 0; hop < kMaxHops && !queue.empty(); ++hop) {
    auto [dir, bytes] = std::move(queue.front());
    queue.erase(queue.begin());
    now += opt.step;
    WireEvent ev{dir, now, bytes};
    if (opt.wire_tap) opt.wire_tap(ev);
    run.log.push_back(ev);
    auto delivered = channel.carry(dir, std::move(bytes), now);
    if (!delivered) {
      endpoint.abort(ErrorCode::kEnvelopeFailure, "message lost in transit");
      break;
    }
    if (dir == Direction::kRsuToObu) {
      for (auto& out : endpoint.handle(*delivered, now)) queue.emplace_back(Direction::kObuToRsu, std::move(out));
    } else {
      for (auto& out : rsu.handle(*delivered, now)) queue.emplace_back(Direction::kRsuToObu, std::move(out));
    }
  }
  if (!endpoint.finished()) endpoint.abort(ErrorCode::kMalformedMessage, "session stalled");
  run.result = endpoint.result();
  run.record = endpoint.record();
  return run;
}

// ---------------------------------------------------------------------------
// Bundle phase without transport: the OBU verifier against a BundleProver.
// Same verification logic as the session flow, used for high-volume Monte
// Carlo where the envelopes would dominate the cost.

struct BundleVerification {
  int verified_count = 0;
  std::vector<bool> verified;
  std::vector<ZkpProof> proofs;
};

inline BundleVerification obu_verify_bundle(const BigInt& m, std::span<const BigInt> pool_witnesses,
                                            const std::vector<IdSet>& sets, std::size_t h,
                                            Variant variant, BundleProver& prover,
                                            const RsuGroupMaterial& prover_material,
                                            ByteView seed_material, Rng& obu_rng,
                                            Rng& rsu_rng) {
  BundleVerification out;
  for (std::size_t j = 0; j < sets.size(); ++j) {
    const IdSet& requested = sets[j];
    std::optional<SessionPolynomial> poly;
    if (variant == Variant::kHardened) {
      ByteWriter w;
      w.str("agzkp-poly-offline-v1").blob(seed_material).u32(static_cast<std::uint32_t>(j));
      const Digest d = sha256(w.bytes());
      poly = session_polynomial(variant, requested.size(), Bytes(d.begin(), d.end()));
    }
    const IdSet claimed = prover.claim(j, requested, rsu_rng);
    bool ok = false;
    ZkpProof transcript;
    transcript.secret_ids = claimed;
    transcript.variant = variant;
    if (claimed == requested) {
      const BundleProofContext ctx{m, variant, poly, j, prover_material};
      auto strategy = prover.prover(claimed, ctx);
      ProofVerifier verifier(m, select(pool_witnesses, requested), variant, poly);
      ProofOutcome po = run_proof(*strategy, verifier, h, rsu_rng, obu_rng, requested);
      ok = po.accepted;
      transcript = std::move(po.transcript);
    }
    out.verified.push_back(ok);
    out.proofs.push_back(std::move(transcript));
    if (ok) ++out.verified_count;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Offline re-verification of a recorded session.

struct Reverification {
  bool membership_ok = false;
  int verified_count = 0;
  bool consistent = false;
};

inline bool proof_verifies(const ZkpProof& p, const BigInt& m, std::span<const BigInt> witnesses,
                           std::size_t h) {
  if (p.rounds.size() != h) return false;
  std::optional<SessionPolynomial> poly =
      session_polynomial(p.variant, witnesses.size(), p.poly_seed);
  ProofVerifier v(m, std::vector<BigInt>(witnesses.begin(), witnesses.end()), p.variant, poly);
  for (const auto& r : p.rounds) {
    if (v.check(r.w, r.challenge, r.y) != Verdict::kAccept) return false;
  }
  return true;
}

inline Reverification reverify_session(const SessionRecord& rec, const BigInt& m,
                                       std::span<const BigInt> master_witnesses,
                                       std::span<const BigInt> pool_witnesses) {
  Reverification out;
  const auto h = static_cast<std::size_t>(rec.h);
  out.membership_ok = proof_verifies(rec.membership, m, master_witnesses, h);
  for (std::size_t j = 0; j < rec.bundle.size(); ++j) {
    const ZkpProof& p = rec.bundle[j];
    if (j >= rec.sets.size() || p.secret_ids != rec.sets[j]) continue;
    if (proof_verifies(p, m, select(pool_witnesses, p.secret_ids), h)) ++out.verified_count;
  }
  const bool count_ok = out.verified_count == rec.result.verified_count;
  const bool accept_ok = !rec.result.accepted() ||
                         (out.membership_ok && out.verified_count >= rec.alpha);
  out.consistent = count_ok && accept_ok;
  return out;
}

}  // namespace agzkp
