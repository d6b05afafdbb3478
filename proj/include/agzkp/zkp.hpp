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

// Round-based quadratic-residue identification (Fiat-Shamir style) over a
// Blum modulus, in a basic form and a polynomial-hardened form whose
// responses are bound to a per-session shared polynomial.
//
// Basic round:     W = s*R^2,  Y = R * prod_{b_i=1} S_i,
//                  accept iff Y^2 = +-W * prod_{b_i=1} I_i   (mod m)
// Hardened round:  Y = R^2 * prod_i sum_t a_t * S_i^(2 t b_t),
//                  Y' = 1 / prod_i sum_t a_t * I_i^(t b_t),
//                  accept iff Y * Y' = +-W                   (mod m)

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "agzkp/bytes.hpp"
#include "agzkp/crypto.hpp"
#include "agzkp/error.hpp"
#include "agzkp/numtheory.hpp"

namespace agzkp {

using Challenge = std::vector<bool>;

enum class Variant : std::uint8_t { kBasic = 0, kHardened = 1 };

inline std::string_view to_string(Variant v) { return v == Variant::kBasic ? "basic" : "hardened"; }

/// A secret S together with the sign of its published witness I = sign*S^2.
struct Secret {
  BigInt value;
  int sign = 1;

  BigInt witness(const BigInt& m) const {
    const BigInt sq = mod_mul(value, value, m);
    return sign > 0 ? sq : mod(-sq, m);
  }

  bool operator==(const Secret&) const = default;
};

inline std::vector<BigInt> witnesses_of(std::span<const Secret> secrets, const BigInt& m) {
  std::vector<BigInt> out;
  out.reserve(secrets.size());
  for (const auto& s : secrets) out.push_back(s.witness(m));
  return out;
}

inline std::vector<BigInt> values_of(std::span<const Secret> secrets) {
  std::vector<BigInt> out;
  out.reserve(secrets.size());
  for (const auto& s : secrets) out.push_back(s.value);
  return out;
}

inline std::uint64_t challenge_value(const Challenge& c) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < c.size() && i < 64; ++i) {
    if (c[i]) v |= std::uint64_t{1} << i;
  }
  return v;
}

inline Challenge challenge_from_value(std::uint64_t v, std::size_t k) {
  Challenge c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = (v >> i) & 1;
  return c;
}

inline Challenge random_challenge(Rng& rng, std::size_t k) {
  Challenge c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = rng.coin();
  return c;
}

struct Commitment {
  BigInt r;  // prover-private
  BigInt w;
};

inline Commitment commitment_from(const BigInt& r, bool negative, const BigInt& m) {
  const BigInt sq = mod_mul(r, r, m);
  return {mod(r, m), negative ? mod(-sq, m) : sq};
}

inline Commitment prover_commit(Rng& rng, const BigInt& m) {
  BigInt r = sample_unit(rng, m);
  const bool negative = rng.coin();
  return commitment_from(r, negative, m);
}

inline BigInt prover_respond(const BigInt& r, std::span<const BigInt> secrets,
                             const Challenge& challenge, const BigInt& m) {
  require(secrets.size() == challenge.size(), ErrorCode::kChallengeLengthMismatch,
          "secret count differs from challenge length");
  BigInt y = mod(r, m);
  for (std::size_t i = 0; i < secrets.size(); ++i) {
    if (challenge[i]) y = mod_mul(y, secrets[i], m);
  }
  return y;
}

inline bool verify_round(const BigInt& w, const Challenge& challenge, const BigInt& y,
                         std::span<const BigInt> witnesses, const BigInt& m) {
  require(witnesses.size() == challenge.size(), ErrorCode::kChallengeLengthMismatch,
          "witness count differs from challenge length");
  if (!is_unit(w, m) || !is_unit(y, m)) return false;
  BigInt rhs = mod(w, m);
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    if (challenge[i]) rhs = mod_mul(rhs, witnesses[i], m);
  }
  const BigInt lhs = mod_mul(y, y, m);
  return lhs == rhs || lhs == mod(-rhs, m);
}

// ---------------------------------------------------------------------------
// Hardened variant.

/// 2^61 - 1; public coefficient modulus, larger than any k in use.
inline const BigInt& default_coefficient_modulus() {
  static const BigInt q = (BigInt(1) << 61) - 1;
  return q;
}

struct SessionPolynomial {
  std::vector<BigInt> coefficients;  // a_0 .. a_{k-1}
  BigInt q;
  Bytes seed;
};

/// a_t = SHA-256(seed || tag || t) mod Q, with tag bumped while every
/// coefficient comes out zero.
inline SessionPolynomial derive_session_polynomial(ByteView seed, std::size_t k,
                                                   const BigInt& q = default_coefficient_modulus()) {
  require(k >= 2, ErrorCode::kDegenerateParameters, "hardened proofs need k >= 2");
  require(q >= 2, ErrorCode::kInvalidArgument, "coefficient modulus must be >= 2");
  SessionPolynomial poly{{}, q, Bytes(seed.begin(), seed.end())};
  for (std::uint32_t tag = 0;; ++tag) {
    poly.coefficients.clear();
    bool any_nonzero = false;
    for (std::uint32_t t = 0; t < k; ++t) {
      ByteWriter w;
      w.raw(seed).u32(tag).u32(t);
      const Digest d = sha256(w.bytes());
      BigInt a = from_magnitude_bytes(d) % q;
      any_nonzero = any_nonzero || a != 0;
      poly.coefficients.push_back(std::move(a));
    }
    if (any_nonzero) return poly;
  }
}

namespace detail {

// prod_i sum_t a_t * base_i^(exp_scale * t * b_t); throws DegenerateEvaluation
// when an inner sum is not a unit.
inline BigInt polynomial_product(std::span<const BigInt> bases, unsigned exp_scale,
                                 const Challenge& challenge, const SessionPolynomial& poly,
                                 const BigInt& m) {
  require(challenge.size() == poly.coefficients.size(), ErrorCode::kChallengeLengthMismatch,
          "challenge length differs from polynomial degree");
  BigInt product = 1;
  for (const BigInt& base : bases) {
    BigInt sum = 0;
    for (std::size_t t = 0; t < poly.coefficients.size(); ++t) {
      const std::uint64_t e = challenge[t] ? exp_scale * t : 0;
      sum += poly.coefficients[t] * mod_pow(base, e, m);
    }
    sum = mod(sum, m);
    if (!is_unit(sum, m)) fail(ErrorCode::kDegenerateEvaluation, "inner polynomial sum is not a unit");
    product = mod_mul(product, sum, m);
  }
  return product;
}

}  // namespace detail

/// Y = R^2 * prod_i sum_t a_t * S_i^(2 t b_t). When signs are supplied the
/// prover evaluates on the signed squares sign_i * S_i^2, which equal the
/// published witnesses; without signs every witness is taken as +S_i^2.
inline BigInt hardened_respond(const BigInt& r, std::span<const BigInt> secrets,
                               const Challenge& challenge, const SessionPolynomial& poly,
                               const BigInt& m, std::span<const int> signs = {}) {
  require(secrets.size() == challenge.size(), ErrorCode::kChallengeLengthMismatch,
          "secret count differs from challenge length");
  require(signs.empty() || signs.size() == secrets.size(), ErrorCode::kInvalidArgument,
          "sign count differs from secret count");
  BigInt g;
  if (signs.empty()) {
    g = detail::polynomial_product(secrets, 2, challenge, poly, m);
  } else {
    std::vector<BigInt> signed_squares;
    signed_squares.reserve(secrets.size());
    for (std::size_t i = 0; i < secrets.size(); ++i) {
      signed_squares.push_back(Secret{secrets[i], signs[i]}.witness(m));
    }
    g = detail::polynomial_product(signed_squares, 1, challenge, poly, m);
  }
  return mod_mul(mod_mul(r, r, m), g, m);
}

enum class Verdict { kAccept, kReject, kDegenerate };

inline Verdict hardened_verify(const BigInt& w, const Challenge& challenge, const BigInt& y,
                               std::span<const BigInt> witnesses, const SessionPolynomial& poly,
                               const BigInt& m) {
  require(witnesses.size() == challenge.size(), ErrorCode::kChallengeLengthMismatch,
          "witness count differs from challenge length");
  if (!is_unit(w, m) || !is_unit(y, m)) return Verdict::kReject;
  BigInt y_prime;
  try {
    y_prime = mod_inv(detail::polynomial_product(witnesses, 1, challenge, poly, m), m);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDegenerateEvaluation || e.code() == ErrorCode::kNotInvertible) {
      return Verdict::kDegenerate;
    }
    throw;
  }
  const BigInt lhs = mod_mul(y, y_prime, m);
  const BigInt wm = mod(w, m);
  return (lhs == wm || lhs == mod(-wm, m)) ? Verdict::kAccept : Verdict::kReject;
}

// ---------------------------------------------------------------------------
// Interactive proofs.

struct ZkpRound {
  BigInt w;
  Challenge challenge;
  BigInt y;

  bool operator==(const ZkpRound&) const = default;
};

struct ZkpProof {
  std::vector<std::uint32_t> secret_ids;
  std::vector<ZkpRound> rounds;
  Variant variant = Variant::kBasic;
  Bytes poly_seed;  // hardened only

  bool operator==(const ZkpProof&) const = default;
};

/// The prover side of one proof: commit, then answer the challenge.
class ProverStrategy {
 public:
  virtual ~ProverStrategy() = default;
  virtual std::size_t arity() const = 0;
  virtual BigInt commit(Rng& rng) = 0;
  /// May throw DegenerateEvaluation (hardened), which re-runs the round.
  virtual BigInt respond(const Challenge& challenge) = 0;
};

class HonestProver final : public ProverStrategy {
 public:
  HonestProver(BigInt m, std::vector<Secret> secrets, Variant variant = Variant::kBasic,
               std::optional<SessionPolynomial> poly = std::nullopt)
      : m_(std::move(m)), secrets_(std::move(secrets)), variant_(variant), poly_(std::move(poly)) {
    require(variant_ == Variant::kBasic || poly_.has_value(), ErrorCode::kInvalidArgument,
            "hardened prover needs a session polynomial");
    values_ = values_of(secrets_);
    for (const auto& s : secrets_) signs_.push_back(s.sign);
  }

  std::size_t arity() const override { return secrets_.size(); }

  BigInt commit(Rng& rng) override {
    const Commitment c = prover_commit(rng, m_);
    r_ = c.r;
    return c.w;
  }

  BigInt respond(const Challenge& challenge) override {
    if (variant_ == Variant::kBasic) return prover_respond(r_, values_, challenge, m_);
    return hardened_respond(r_, values_, challenge, *poly_, m_, signs_);
  }

 private:
  BigInt m_;
  std::vector<Secret> secrets_;
  std::vector<BigInt> values_;
  std::vector<int> signs_;
  Variant variant_;
  std::optional<SessionPolynomial> poly_;
  BigInt r_ = 1;
};

class ProofVerifier {
 public:
  ProofVerifier(BigInt m, std::vector<BigInt> witnesses, Variant variant = Variant::kBasic,
                std::optional<SessionPolynomial> poly = std::nullopt)
      : m_(std::move(m)), witnesses_(std::move(witnesses)), variant_(variant), poly_(std::move(poly)) {
    require(variant_ == Variant::kBasic || poly_.has_value(), ErrorCode::kInvalidArgument,
            "hardened verifier needs a session polynomial");
  }

  std::size_t arity() const { return witnesses_.size(); }
  Variant variant() const { return variant_; }
  const BigInt& modulus() const { return m_; }
  const std::vector<BigInt>& witnesses() const { return witnesses_; }
  const std::optional<SessionPolynomial>& polynomial() const { return poly_; }

  Challenge draw_challenge(Rng& rng) const { return random_challenge(rng, arity()); }

  Verdict check(const BigInt& w, const Challenge& challenge, const BigInt& y) const {
    if (challenge.size() != arity()) return Verdict::kReject;
    if (variant_ == Variant::kBasic) {
      return verify_round(w, challenge, y, witnesses_, m_) ? Verdict::kAccept : Verdict::kReject;
    }
    return hardened_verify(w, challenge, y, witnesses_, *poly_, m_);
  }

 private:
  BigInt m_;
  std::vector<BigInt> witnesses_;
  Variant variant_;
  std::optional<SessionPolynomial> poly_;
};

inline constexpr std::size_t kMaxDegenerateReruns = 64;

struct ProofOutcome {
  ZkpProof transcript;
  bool accepted = false;
  std::size_t reruns = 0;
};

inline void check_proof_parameters(std::size_t k, std::size_t h) {
  require(k > 0 && h > 0, ErrorCode::kDegenerateParameters,
          "k = 0 or h = 0 would accept vacuously");
}

/// Runs h rounds between prover and verifier, stopping at the first
/// rejected round. Degenerate hardened evaluations re-run the round with a
/// fresh commitment and fresh challenge.
inline ProofOutcome run_proof(ProverStrategy& prover, const ProofVerifier& verifier, std::size_t h,
                              Rng& prover_rng, Rng& verifier_rng,
                              std::vector<std::uint32_t> secret_ids = {}) {
  check_proof_parameters(verifier.arity(), h);
  require(prover.arity() == verifier.arity(), ErrorCode::kChallengeLengthMismatch,
          "prover and verifier disagree on k");
  ProofOutcome out;
  out.transcript.secret_ids = std::move(secret_ids);
  out.transcript.variant = verifier.variant();
  if (verifier.polynomial()) out.transcript.poly_seed = verifier.polynomial()->seed;
  for (std::size_t round = 0; round < h; ++round) {
    bool done = false;
    for (std::size_t attempt = 0; attempt <= kMaxDegenerateReruns && !done; ++attempt) {
      const BigInt w = prover.commit(prover_rng);
      const Challenge challenge = verifier.draw_challenge(verifier_rng);
      BigInt y;
      try {
        y = prover.respond(challenge);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateEvaluation) throw;
        ++out.reruns;
        continue;
      }
      const Verdict v = verifier.check(w, challenge, y);
      if (v == Verdict::kDegenerate) {
        ++out.reruns;
        continue;
      }
      out.transcript.rounds.push_back({w, challenge, y});
      if (v == Verdict::kReject) return out;
      done = true;
    }
    if (!done) return out;
  }
  out.accepted = true;
  return out;
}

/// Simulated accepting basic transcript without any secret: pick Y and the
/// challenge first, then solve for W = +-Y^2 / prod I^b.
inline ZkpRound simulate_basic_round(std::span<const BigInt> witnesses, const BigInt& m, Rng& rng) {
  ZkpRound round;
  round.challenge = random_challenge(rng, witnesses.size());
  round.y = sample_unit(rng, m);
  BigInt denom = 1;
  for (std::size_t i = 0; i < witnesses.size(); ++i) {
    if (round.challenge[i]) denom = mod_mul(denom, witnesses[i], m);
  }
  round.w = mod_mul(mod_mul(round.y, round.y, m), mod_inv(denom, m), m);
  if (rng.coin()) round.w = mod(-round.w, m);
  return round;
}

// ---------------------------------------------------------------------------
// Transcript encoding.

inline void encode_round(ByteWriter& w, const ZkpRound& r) {
  w.integer(r.w).bits(r.challenge).integer(r.y);
}

inline ZkpRound decode_round(ByteReader& r) {
  ZkpRound round;
  round.w = r.integer();
  round.challenge = r.bits();
  round.y = r.integer();
  return round;
}

inline void encode_proof(ByteWriter& w, const ZkpProof& p) {
  w.u8(static_cast<std::uint8_t>(p.variant));
  w.u16(static_cast<std::uint16_t>(p.secret_ids.size()));
  for (auto id : p.secret_ids) w.u32(id);
  w.blob(p.poly_seed);
  w.u32(static_cast<std::uint32_t>(p.rounds.size()));
  for (const auto& r : p.rounds) encode_round(w, r);
}

inline ZkpProof decode_proof(ByteReader& r) {
  ZkpProof p;
  const std::uint8_t variant = r.u8();
  require(variant <= 1, ErrorCode::kMalformedMessage, "unknown proof variant");
  p.variant = static_cast<Variant>(variant);
  const std::size_t ids = r.u16();
  for (std::size_t i = 0; i < ids; ++i) p.secret_ids.push_back(r.u32());
  p.poly_seed = r.blob();
  const std::size_t rounds = r.u32();
  for (std::size_t i = 0; i < rounds; ++i) p.rounds.push_back(decode_round(r));
  return p;
}

}  // namespace agzkp
