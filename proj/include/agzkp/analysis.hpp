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

// Closed-form probabilities as exact rationals, independent sampling
// oracles, figure series and the monotonicity suite.

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "agzkp/adversary.hpp"
#include "agzkp/error.hpp"
#include "agzkp/montecarlo.hpp"
#include "agzkp/numtheory.hpp"
#include "agzkp/revocation.hpp"

namespace agzkp {

using Rational = boost::multiprecision::cpp_rational;

/// log10 of a positive integer, accurate to double precision at any size.
inline double log10_big(const BigInt& x) {
  require(x > 0, ErrorCode::kInvalidArgument, "log10 of a non-positive value");
  const std::size_t bits = bit_length(x);
  if (bits <= 1000) return std::log10(static_cast<double>(x));
  const std::size_t shift = bits - 64;
  const double top = static_cast<double>(static_cast<std::uint64_t>(x >> shift));
  return std::log10(top) + static_cast<double>(shift) * std::log10(2.0);
}

struct Probability {
  Rational exact;

  double log10() const {
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    if (exact <= 0) return -INFINITY;
    return log10_big(numerator(exact)) - log10_big(denominator(exact));
  }

  double to_double() const { return exact <= 0 ? 0.0 : std::pow(10.0, log10()); }

  /// Scientific rendering with `digits` significant digits, computed from
  /// the exact rational (no floating-point rounding of the mantissa).
  std::string decimal(int digits = 15) const {
    using boost::multiprecision::denominator;
    using boost::multiprecision::numerator;
    if (exact == 0) return "0";
    const BigInt num = numerator(exact), den = denominator(exact);
    long e = static_cast<long>(std::floor(log10()));
    auto scaled = [&](long exp10) {
      // round(num / den * 10^(digits - 1 - exp10))
      const long s = digits - 1 - exp10;
      BigInt a = num, b = den;
      if (s >= 0) a *= boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(s));
      else b *= boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(-s));
      return BigInt((2 * a + b) / (2 * b));
    };
    const BigInt lo = boost::multiprecision::pow(BigInt(10), static_cast<unsigned>(digits - 1));
    const BigInt hi = lo * 10;
    BigInt mant = scaled(e);
    if (mant >= hi) mant = scaled(++e);
    if (mant < lo) mant = scaled(--e);
    if (mant >= hi) {  // rounding carried into a new digit
      mant /= 10;
      ++e;
    }
    std::string m = mant.str();
    std::string out = m.substr(0, 1);
    if (m.size() > 1) out += "." + m.substr(1);
    char buf[16];
    std::snprintf(buf, sizeof buf, "e%+03ld", e);
    return out + buf;
  }

  bool operator==(const Probability&) const = default;
  auto operator<=>(const Probability& o) const {
    if (exact < o.exact) return std::strong_ordering::less;
    if (exact > o.exact) return std::strong_ordering::greater;
    return std::strong_ordering::equal;
  }
};

inline Rational pow2_inverse(std::uint64_t e) { return Rational(BigInt(1), BigInt(1) << e); }

inline Rational rational_pow(const Rational& r, std::uint64_t e) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  return Rational(boost::multiprecision::pow(numerator(r), static_cast<unsigned>(e)),
                  boost::multiprecision::pow(denominator(r), static_cast<unsigned>(e)));
}

/// P_c = 2^-(kh).
inline Probability p_cheater(std::size_t k, std::size_t h) {
  require(k >= 1 && h >= 1, ErrorCode::kInvalidArgument, "need k, h >= 1");
  return {pow2_inverse(k * h)};
}

/// P_mu = (1 / (2^(kh) C(n, k)))^mu.
inline Probability p_mu(std::size_t k, std::size_t h, std::size_t n, std::size_t mu) {
  require(k >= 1 && h >= 1 && mu >= 1, ErrorCode::kInvalidArgument, "need k, h, mu >= 1");
  require(k <= n, ErrorCode::kInvalidArgument, "need k <= n");
  const Rational base(BigInt(1), (BigInt(1) << (k * h)) * binomial(n, k));
  return {rational_pow(base, mu)};
}

/// P_L = mu / C(n, k).
inline Probability p_leak(std::size_t n, std::size_t k, std::size_t mu) {
  require(k >= 1 && k <= n && mu >= 1, ErrorCode::kInvalidArgument, "need 1 <= k <= n, mu >= 1");
  const BigInt c = binomial(n, k);
  require(BigInt(mu) <= c, ErrorCode::kParameterOverflow, "mu exceeds C(n, k)");
  return {Rational(BigInt(mu), c)};
}

/// q (two OBUs): printed identically to P_mu.
inline Probability q_false(std::size_t k, std::size_t h, std::size_t n, std::size_t mu) {
  return p_mu(k, h, n, mu);
}

/// q_x = (1 / (2^(x(k-1)) C(n, k)^(x-1)))^mu, exactly as printed.
inline Probability q_x(std::size_t x, std::size_t k, std::size_t n, std::size_t mu) {
  require(x >= 2, ErrorCode::kInvalidArgument, "q_x needs x >= 2");
  require(k >= 1 && k <= n && mu >= 1, ErrorCode::kInvalidArgument, "need 1 <= k <= n, mu >= 1");
  const BigInt den = (BigInt(1) << (x * (k - 1))) *
                     boost::multiprecision::pow(binomial(n, k), static_cast<unsigned>(x - 1));
  return {rational_pow(Rational(BigInt(1), den), mu)};
}

/// p = 1 / (C (C-1) ... (C-mu)): the printed product with mu+1 factors.
inline Probability p_missed(std::size_t n, std::size_t k, std::size_t mu) {
  const BigInt c = binomial(n, k);
  require(c > mu, ErrorCode::kParameterOverflow, "need C(n, k) > mu");
  BigInt den = 1;
  for (std::size_t i = 0; i <= mu; ++i) den *= c - i;
  return {Rational(BigInt(1), den)};
}

/// Companion reading with mu factors, 1 / (C (C-1) ... (C-mu+1)): the
/// probability that two OBUs draw the same ordered sequence of mu distinct sets.
inline Probability p_missed_mu_factors(std::size_t n, std::size_t k, std::size_t mu) {
  const BigInt c = binomial(n, k);
  require(c >= mu, ErrorCode::kParameterOverflow, "need C(n, k) >= mu");
  BigInt den = 1;
  for (std::size_t i = 0; i < mu; ++i) den *= c - i;
  return {Rational(BigInt(1), den)};
}

/// Independent log-domain evaluation of log10 P_mu through lgamma.
inline double log10_p_mu_lgamma(std::size_t k, std::size_t h, std::size_t n, std::size_t mu) {
  const double ln_c = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  return -static_cast<double>(mu) * (static_cast<double>(k * h) * std::log10(2.0) + ln_c / std::log(10.0));
}

/// Independent binomial: product formula over doubles-free big integers,
/// computed via Pascal's rule (used as a cross-check oracle).
inline BigInt binomial_pascal(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::vector<BigInt> row(k + 1, 0);
  row[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = std::min(i, k); j >= 1; --j) row[j] += row[j - 1];
  }
  return row[k];
}

// ---------------------------------------------------------------------------
// Reports.

struct ParamPoint {
  std::optional<std::size_t> n{}, k{}, h{}, mu{}, x{};

  std::string str() const {
    std::string out;
    auto add = [&](const char* name, const std::optional<std::size_t>& v) {
      if (!v) return;
      if (!out.empty()) out += ";";
      out += std::string(name) + "=" + std::to_string(*v);
    };
    add("n", n);
    add("k", k);
    add("h", h);
    add("mu", mu);
    add("x", x);
    return out;
  }
};

struct ProbabilityReport {
  std::string formula;
  ParamPoint params;
  Probability closed_form;
  std::optional<McResult> mc;

  /// Standard error under the closed-form probability (null-hypothesis sigma).
  double mc_stderr() const { return mc ? mc->stderr_at(closed_form.to_double()) : 0.0; }
  bool pass() const { return !mc || mc->within(closed_form.to_double(), 3.0); }
};

inline std::string report_csv_header() {
  return "formula,params,closed_form,log10,mc_estimate,mc_stderr,trials,seed,pass";
}

inline std::string report_csv_row(const ProbabilityReport& r) {
  std::ostringstream o;
  o << r.formula << "," << r.params.str() << "," << r.closed_form.decimal(12) << ","
    << format_double(r.closed_form.log10()) << ",";
  if (r.mc) {
    o << format_double(r.mc->estimate()) << "," << format_double(r.mc_stderr()) << ","
      << r.mc->trials << "," << r.mc->seed << ",";
  } else {
    o << ",,,,";
  }
  o << (r.pass() ? "true" : "false");
  return o.str();
}

// ---------------------------------------------------------------------------
// Sampling oracles.

/// mu distinct uniformly random k-subsets of [1, n].
inline std::vector<IdSet> random_distinct_subsets(std::size_t n, std::size_t k, std::size_t mu, Rng& rng) {
  std::vector<IdSet> out;
  while (out.size() < mu) {
    IdSet s = random_k_subset(n, k, rng);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  return out;
}

/// P_L oracle: do mu distinct random k-subsets contain a fixed designated one?
inline McResult mc_p_leak(std::size_t n, std::size_t k, std::size_t mu, std::uint64_t trials,
                          std::uint64_t seed) {
  require(BigInt(mu) <= binomial(n, k), ErrorCode::kParameterOverflow, "mu exceeds C(n, k)");
  IdSet designated(k);
  for (std::size_t i = 0; i < k; ++i) designated[i] = static_cast<std::uint32_t>(i + 1);
  return run_trials(trials, seed, [&](Rng& rng) {
    const auto sets = random_distinct_subsets(n, k, mu, rng);
    return std::find(sets.begin(), sets.end(), designated) != sets.end();
  });
}

/// q oracle without the 2^(kh) factor: two OBUs each draw mu independent
/// uniformly random k-subsets; success when the sequences coincide.
/// Expected (1/C(n, k))^mu.
inline McResult mc_q_sets(std::size_t n, std::size_t k, std::size_t mu, std::uint64_t trials,
                          std::uint64_t seed) {
  return run_trials(trials, seed, [&](Rng& rng) {
    for (std::size_t j = 0; j < mu; ++j) {
      if (random_k_subset(n, k, rng) != random_k_subset(n, k, rng)) return false;
    }
    return true;
  });
}

/// Two tracks with independent random IVs draw their protocol PRF sequences
/// (mu distinct sets each); success when the sequences coincide.
inline McResult mc_sequence_collision(std::size_t n, std::size_t k, std::size_t mu,
                                      std::uint64_t trials, std::uint64_t seed) {
  const Bytes prf_key = [&] {
    Rng r(splitmix64(seed));
    return r.bytes(32);
  }();
  return run_trials(trials, seed, [&](Rng& rng) {
    const std::uint64_t a = rng.next();
    std::uint64_t b = rng.next();
    while (b == a) b = rng.next();
    return next_sequence(prf_key, a, 0, n, k, mu).blocks ==
           next_sequence(prf_key, b, 0, n, k, mu).blocks;
  });
}

// ---------------------------------------------------------------------------
// Figure series.

struct SeriesPoint {
  std::size_t x = 0;
  std::string series;
  Probability value;
};

struct FigureSeries {
  std::string id;
  std::string title;
  std::string x_label;
  std::vector<SeriesPoint> points;
};

inline const std::vector<std::string>& figure_ids() {
  static const std::vector<std::string> ids{"10a", "10b", "11", "12", "13"};
  return ids;
}

/// Fixed grids:
///   10a  P_mu vs k = 1..10, series h in {4,5,6,8}, n = 50, mu = 5
///   10b  P_mu vs k = 1..10, series mu in {5,6,8,10}, n = 50, h = 4
///   11   P_mu vs n = 10..50 step 5, series mu in {5,6,8,10}, k = 5, h = 4
///   12   P_L vs k = 1..10, series mu in {5,6,8,10}, n = 50
///   13   q vs k = 5..15, series h in {4,5,6,7}, n = 15, mu = 5
inline FigureSeries figure_series(const std::string& id) {
  FigureSeries f;
  f.id = id;
  auto range = [](std::size_t a, std::size_t b, std::size_t step = 1) {
    std::vector<std::size_t> v;
    for (std::size_t x = a; x <= b; x += step) v.push_back(x);
    return v;
  };
  if (id == "10a") {
    f.title = "P_mu of an RSU cheater, n=50, mu=5";
    f.x_label = "k";
    for (std::size_t h : {4, 5, 6, 8})
      for (auto k : range(1, 10)) f.points.push_back({k, "h=" + std::to_string(h), p_mu(k, h, 50, 5)});
  } else if (id == "10b") {
    f.title = "P_mu of an RSU cheater, n=50, h=4";
    f.x_label = "k";
    for (std::size_t mu : {5, 6, 8, 10})
      for (auto k : range(1, 10)) f.points.push_back({k, "mu=" + std::to_string(mu), p_mu(k, 4, 50, mu)});
  } else if (id == "11") {
    f.title = "P_mu of an RSU cheater vs n, k=5, h=4";
    f.x_label = "n";
    for (std::size_t mu : {5, 6, 8, 10})
      for (auto n : range(10, 50, 5)) f.points.push_back({n, "mu=" + std::to_string(mu), p_mu(5, 4, n, mu)});
  } else if (id == "12") {
    f.title = "P_L, n=50";
    f.x_label = "k";
    for (std::size_t mu : {5, 6, 8, 10})
      for (auto k : range(1, 10)) f.points.push_back({k, "mu=" + std::to_string(mu), p_leak(50, k, mu)});
  } else if (id == "13") {
    f.title = "q of false authentication, n=15, mu=5";
    f.x_label = "k";
    for (std::size_t h : {4, 5, 6, 7})
      for (auto k : range(5, 15)) f.points.push_back({k, "h=" + std::to_string(h), q_false(k, h, 15, 5)});
  } else {
    fail(ErrorCode::kUnknownFigure, "unknown figure id '" + id + "' (expected 10a, 10b, 11, 12 or 13)");
  }
  return f;
}

inline std::string figure_csv(const FigureSeries& f) {
  std::string out = "figure,x_name,x,series,value,log10\n";
  for (const auto& p : f.points) {
    out += f.id + "," + f.x_label + "," + std::to_string(p.x) + "," + p.series + "," +
           p.value.decimal(12) + "," + format_double(p.value.log10()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monotonicity suite.

struct MonotonicityCheck {
  std::string claim;
  bool holds = false;
  std::size_t comparisons = 0;
};

namespace detail {

/// Checks f strictly decreasing (or increasing) along `xs` for each fixed
/// context produced by the caller.
template <class F>
MonotonicityCheck monotone(std::string claim, const std::vector<std::vector<std::size_t>>& paths,
                           F&& f, bool increasing) {
  MonotonicityCheck c{std::move(claim), true, 0};
  for (const auto& xs : paths) {
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const Probability a = f(xs[i - 1]), b = f(xs[i]);
      c.holds = c.holds && (increasing ? a < b : b < a);
      ++c.comparisons;
    }
  }
  return c;
}

inline std::vector<std::size_t> seq(std::size_t a, std::size_t b) {
  std::vector<std::size_t> v;
  for (std::size_t x = a; x <= b; ++x) v.push_back(x);
  return v;
}

}  // namespace detail

/// The qualitative claims, evaluated over the figure grids plus small
/// surrounding ranges.
inline std::vector<MonotonicityCheck> monotonicity_suite() {
  using detail::monotone;
  using detail::seq;
  std::vector<MonotonicityCheck> out;
  auto all = [](std::vector<MonotonicityCheck> parts, std::string claim) {
    MonotonicityCheck c{std::move(claim), true, 0};
    for (const auto& p : parts) {
      c.holds = c.holds && p.holds;
      c.comparisons += p.comparisons;
    }
    return c;
  };
  {
    std::vector<MonotonicityCheck> parts;
    for (std::size_t h = 1; h <= 8; ++h)
      parts.push_back(monotone("", {seq(1, 12)}, [h](std::size_t k) { return p_cheater(k, h); }, false));
    for (std::size_t k = 1; k <= 8; ++k)
      parts.push_back(monotone("", {seq(1, 12)}, [k](std::size_t h) { return p_cheater(k, h); }, false));
    out.push_back(all(parts, "P_c strictly decreasing in k and in h"));
  }
  {
    std::vector<MonotonicityCheck> parts;
    for (std::size_t mu : {5, 6, 8, 10})
      for (std::size_t h : {4, 5, 6, 8})
        parts.push_back(monotone("", {seq(1, 10)}, [=](std::size_t k) { return p_mu(k, h, 50, mu); }, false));
    out.push_back(all(parts, "P_mu strictly decreasing in k (n=50, k<=10)"));
    parts.clear();
    for (std::size_t k = 1; k <= 10; ++k)
      parts.push_back(monotone("", {{4, 5, 6, 8}}, [=](std::size_t h) { return p_mu(k, h, 50, 5); }, false));
    out.push_back(all(parts, "P_mu strictly decreasing in h (h in {4,5,6,8})"));
    parts.clear();
    for (std::size_t mu : {5, 6, 8, 10})
      parts.push_back(monotone("", {seq(6, 50)}, [=](std::size_t n) { return p_mu(5, 4, n, mu); }, false));
    out.push_back(all(parts, "P_mu strictly decreasing in n for n > k (k=5, h=4)"));
    parts.clear();
    for (std::size_t k = 1; k <= 10; ++k)
      parts.push_back(monotone("", {{5, 6, 8, 10}}, [=](std::size_t mu) { return p_mu(k, 4, 50, mu); }, false));
    out.push_back(all(parts, "P_mu strictly decreasing in mu (mu 5..10)"));
  }
  {
    std::vector<MonotonicityCheck> parts;
    for (std::size_t k = 1; k <= 10; ++k)
      parts.push_back(monotone("", {{5, 6, 8, 10}}, [=](std::size_t mu) { return p_leak(50, k, mu); }, true));
    out.push_back(all(parts, "P_L increasing in mu (n=50)"));
    parts.clear();
    for (std::size_t k = 2; k <= 5; ++k)
      parts.push_back(monotone("", {seq(k + 4, 50)}, [=](std::size_t n) { return p_leak(n, k, 5); }, false));
    out.push_back(all(parts, "P_L decreasing in n (mu=5)"));
  }
  {
    std::vector<MonotonicityCheck> parts;
    for (std::size_t h : {4, 5, 6, 7})
      parts.push_back(monotone("", {seq(5, 15)}, [=](std::size_t k) { return q_false(k, h, 15, 5); }, false));
    out.push_back(all(parts, "q decreasing in k (n=15, mu=5, k=5..15)"));
    parts.clear();
    for (std::size_t k = 5; k <= 15; ++k)
      parts.push_back(monotone("", {{4, 5, 6, 7}}, [=](std::size_t h) { return q_false(k, h, 15, 5); }, false));
    out.push_back(all(parts, "q decreasing in h (n=15, mu=5)"));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standard report set: every closed form at its reference points, with a
// Monte Carlo oracle wherever sampling is feasible.

inline std::vector<ProbabilityReport> standard_reports(std::uint64_t trials, std::uint64_t seed) {
  std::vector<ProbabilityReport> out;
  auto mc_of = [](const AttackReport& a, std::uint64_t s) {
    return McResult{a.successes, a.trials, s};
  };
  std::uint64_t salt = 0;
  auto next_seed = [&] { return splitmix64(seed + ++salt); };
  for (auto [k, h] : std::vector<std::pair<std::size_t, std::size_t>>{{1, 1}, {2, 1}, {2, 2}, {3, 2}}) {
    CheaterConfig c;
    c.k = k;
    c.h = h;
    c.trials = trials;
    c.seed = next_seed();
    out.push_back({"p_cheater", {.k = k, .h = h}, p_cheater(k, h), mc_of(run_cheater_experiment(c), c.seed)});
  }
  out.push_back({"p_cheater", {.k = 5, .h = 4}, p_cheater(5, 4), std::nullopt});
  {
    BundleCheatConfig c;
    c.trials = trials;
    c.seed = next_seed();
    out.push_back({"p_mu", {.n = 3, .k = 2, .h = 1, .mu = 1}, p_mu(2, 1, 3, 1),
                   mc_of(run_bundle_cheat_experiment(c), c.seed)});
  }
  out.push_back({"p_mu", {.n = 50, .k = 5, .h = 4, .mu = 5}, p_mu(5, 4, 50, 5), std::nullopt});
  for (std::size_t mu : {1, 5, 10}) {
    const std::uint64_t s = next_seed();
    out.push_back({"p_leak", {.n = 6, .k = 3, .mu = mu}, p_leak(6, 3, mu), mc_p_leak(6, 3, mu, trials, s)});
  }
  out.push_back({"p_leak", {.n = 6, .k = 3, .mu = 20}, p_leak(6, 3, 20), std::nullopt});
  out.push_back({"p_leak", {.n = 50, .k = 5, .mu = 5}, p_leak(50, 5, 5), std::nullopt});
  out.push_back({"q_false", {.n = 15, .k = 5, .h = 4, .mu = 5}, q_false(5, 4, 15, 5), std::nullopt});
  {
    // The sampling oracle reaches only the C(n, k) factor of q.
    const std::uint64_t s = next_seed();
    const Rational c_only = rational_pow(Rational(BigInt(1), binomial(4, 2)), 2);
    out.push_back({"q_sets_factor", {.n = 4, .k = 2, .mu = 2}, Probability{c_only},
                   mc_q_sets(4, 2, 2, trials, s)});
  }
  out.push_back({"q_x", {.n = 5, .k = 3, .mu = 1, .x = 2}, q_x(2, 3, 5, 1), std::nullopt});
  out.push_back({"p_missed", {.n = 3, .k = 2, .mu = 2}, p_missed(3, 2, 2), std::nullopt});
  {
    const std::uint64_t s = next_seed();
    const McResult mc = mc_sequence_collision(4, 2, 2, trials, s);
    out.push_back({"p_missed", {.n = 4, .k = 2, .mu = 2}, p_missed(4, 2, 2), mc});
    out.push_back({"p_missed_mu_factors", {.n = 4, .k = 2, .mu = 2}, p_missed_mu_factors(4, 2, 2), mc});
  }
  return out;
}

inline std::string reports_csv(const std::vector<ProbabilityReport>& reports) {
  std::string out = report_csv_header() + "\n";
  for (const auto& r : reports) out += report_csv_row(r) + "\n";
  return out;
}

}  // namespace agzkp
