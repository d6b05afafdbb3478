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

// Arbitrary-precision modular arithmetic, seeded randomness and Blum moduli.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "agzkp/error.hpp"

namespace agzkp {

using BigInt = boost::multiprecision::cpp_int;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable, splittable PRNG. Every random decision in the library draws
/// from an explicitly passed Rng; split() hands a child stream to a callee
/// so two owners never share one state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next() { return engine_(); }

  Rng split() { return Rng(splitmix64(next() ^ 0xa0761d6478bd642fULL)); }

  bool coin() { return (next() >> 63) != 0; }

  // Uniform in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    require(bound > 0, ErrorCode::kInvalidArgument, "Rng::below bound is zero");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    for (;;) {
      const std::uint64_t x = next();
      if (x < limit) return x % bound;
    }
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  BigInt below(const BigInt& bound) {
    require(bound > 0, ErrorCode::kInvalidArgument, "Rng::below bound is zero");
    const std::size_t bits = boost::multiprecision::msb(bound) + 1;
    const std::size_t words = (bits + 63) / 64;
    const std::size_t top_bits = bits - (words - 1) * 64;
    const std::uint64_t top_mask =
        top_bits == 64 ? UINT64_MAX : ((std::uint64_t{1} << top_bits) - 1);
    for (;;) {
      BigInt x = 0;
      for (std::size_t w = 0; w < words; ++w) {
        std::uint64_t word = next();
        if (w == 0) word &= top_mask;
        x <<= 64;
        x |= word;
      }
      if (x < bound) return x;
    }
  }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) b = static_cast<std::uint8_t>(next() >> 56);
  }

  template <std::size_t N>
  std::array<std::uint8_t, N> bytes() {
    std::array<std::uint8_t, N> out{};
    fill(out);
    return out;
  }

  std::vector<std::uint8_t> bytes(std::size_t n) {
    std::vector<std::uint8_t> out(n);
    fill(out);
    return out;
  }

 private:
  std::mt19937_64 engine_;
};

inline BigInt mod(const BigInt& a, const BigInt& m) {
  BigInt r = a % m;
  if (r < 0) r += m;
  return r;
}

inline BigInt gcd(const BigInt& a, const BigInt& b) {
  return boost::multiprecision::gcd(a, b);
}

inline bool is_unit(const BigInt& a, const BigInt& m) {
  const BigInt r = mod(a, m);
  return r != 0 && gcd(r, m) == 1;
}

inline BigInt mod_mul(const BigInt& a, const BigInt& b, const BigInt& m) {
  return mod(a * b, m);
}

/// base^exp mod m; exp = 0 yields 1.
inline BigInt mod_pow(const BigInt& base, const BigInt& exp, const BigInt& m) {
  require(m > 1, ErrorCode::kInvalidArgument, "modulus must exceed 1");
  require(exp >= 0, ErrorCode::kInvalidArgument, "negative exponent");
  if (exp == 0) return 1;
  return boost::multiprecision::powm(mod(base, m), exp, m);
}

/// Inverse of a modulo m. Throws NotInvertible when gcd(a, m) > 1.
inline BigInt mod_inv(const BigInt& a, const BigInt& m) {
  require(m > 1, ErrorCode::kInvalidArgument, "modulus must exceed 1");
  BigInt old_r = mod(a, m), r = m;
  BigInt old_s = 1, s = 0;
  while (r != 0) {
    const BigInt quotient = old_r / r;
    BigInt tmp = old_r - quotient * r;
    old_r = r;
    r = tmp;
    tmp = old_s - quotient * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) fail(ErrorCode::kNotInvertible, "value shares a factor with the modulus");
  return mod(old_s, m);
}

/// Jacobi symbol (a/m) for odd m >= 3, via quadratic reciprocity.
inline int jacobi(const BigInt& a_in, const BigInt& m_in) {
  require(m_in >= 3 && (m_in & 1) == 1, ErrorCode::kInvalidArgument,
          "jacobi needs an odd modulus >= 3");
  BigInt a = mod(a_in, m_in);
  BigInt m = m_in;
  int result = 1;
  while (a != 0) {
    while ((a & 1) == 0) {
      a >>= 1;
      const unsigned r = static_cast<unsigned>(m % 8);
      if (r == 3 || r == 5) result = -result;
    }
    std::swap(a, m);
    if (a % 4 == 3 && m % 4 == 3) result = -result;
    a %= m;
  }
  return m == 1 ? result : 0;
}

/// Uniform sample from the units of Z_m by rejection.
inline BigInt sample_unit(Rng& rng, const BigInt& m) {
  require(m >= 3, ErrorCode::kInvalidArgument, "sample_unit needs m >= 3");
  for (;;) {
    BigInt x = rng.below(m);
    if (x != 0 && gcd(x, m) == 1) return x;
  }
}

inline constexpr std::uint32_t kTrialDivisionLimit = 1u << 20;
inline constexpr int kWitnessRounds = 64;

inline bool is_prime_by_trial_division(std::uint64_t n) {
  if (n < 2) return false;
  if (n % 2 == 0) return n == 2;
  for (std::uint64_t d = 3; d * d <= n; d += 2) {
    if (n % d == 0) return false;
  }
  return true;
}

/// Exact below 2^20; 64-round Miller-Rabin with rng-drawn bases above.
inline bool is_prime(const BigInt& n, Rng& rng) {
  if (n < kTrialDivisionLimit) {
    return is_prime_by_trial_division(static_cast<std::uint64_t>(n));
  }
  if ((n & 1) == 0) return false;
  for (std::uint32_t d = 3; d < 2000; d += 2) {
    if (n % d == 0) return false;
  }
  BigInt d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (int round = 0; round < kWitnessRounds; ++round) {
    const BigInt a = 2 + rng.below(BigInt(n - 3));
    BigInt x = boost::multiprecision::powm(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned i = 1; i < s; ++i) {
      x = mod_mul(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// A prime of the form 4r + 3.
inline bool is_blum_prime(const BigInt& candidate, Rng& rng) {
  return candidate % 4 == 3 && is_prime(candidate, rng);
}

struct BlumModulus {
  BigInt m;
  std::optional<BigInt> p;  // KDC only
  std::optional<BigInt> q;  // KDC only
  std::size_t bit_length = 0;

  BlumModulus public_view() const { return BlumModulus{m, std::nullopt, std::nullopt, bit_length}; }
};

inline std::size_t bit_length(const BigInt& x) {
  return x == 0 ? 0 : boost::multiprecision::msb(x) + 1;
}

namespace detail {

inline BigInt random_blum_prime(std::size_t bits, Rng& rng) {
  const BigInt hi = BigInt(1) << bits;
  const BigInt lo = bits <= 3 ? BigInt(3) : BigInt(1) << (bits - 1);
  for (;;) {
    BigInt candidate = lo + rng.below(BigInt(hi - lo));
    candidate |= 3;
    if (candidate < hi && is_blum_prime(candidate, rng)) return candidate;
  }
}

}  // namespace detail

/// m = p*q with p, q distinct primes congruent to 3 mod 4, sized
/// floor(bits/2) and ceil(bits/2) where possible. Deterministic in
/// (bits, seed); bit_length records the width actually obtained.
inline BlumModulus generate_blum_modulus(std::size_t bits, std::uint64_t seed) {
  require(bits >= 6, ErrorCode::kInvalidArgument, "bit_length must be at least 6");
  Rng rng(seed);
  std::size_t p_bits = bits / 2;
  std::size_t q_bits = bits - p_bits;
  BigInt p = detail::random_blum_prime(p_bits, rng);
  BigInt q;
  // Some widths hold a single Blum prime (4 bits: only 11); after repeated
  // collisions move one bit from p to q.
  for (int collisions = 0;; ++collisions) {
    q = detail::random_blum_prime(q_bits, rng);
    if (q != p) break;
    if (collisions == 64 && p_bits > 3) {
      --p_bits;
      ++q_bits;
      p = detail::random_blum_prime(p_bits, rng);
      collisions = 0;
    }
  }
  BlumModulus out;
  out.m = p * q;
  out.p = std::move(p);
  out.q = std::move(q);
  out.bit_length = bit_length(out.m);
  return out;
}

inline BigInt binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  BigInt out = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    out *= n - k + i;
    out /= i;
  }
  return out;
}

inline std::string to_hex(const BigInt& x) {
  if (x == 0) return "0";
  std::string s;
  BigInt v = x;
  static constexpr char kDigits[] = "0123456789abcdef";
  while (v > 0) {
    s.push_back(kDigits[static_cast<unsigned>(v & 15)]);
    v >>= 4;
  }
  return {s.rbegin(), s.rend()};
}

inline BigInt from_hex(const std::string& s) {
  require(!s.empty(), ErrorCode::kFormatError, "empty hex integer");
  BigInt out = 0;
  for (char c : s) {
    int digit;
    if (c >= '0' && c <= '9') digit = c - '0';
    else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') digit = c - 'A' + 10;
    else fail(ErrorCode::kFormatError, "bad hex digit in integer");
    out <<= 4;
    out |= digit;
  }
  return out;
}

}  // namespace agzkp
