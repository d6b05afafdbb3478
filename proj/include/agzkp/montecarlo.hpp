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

// Deterministic parallel Monte Carlo. Trials are split into fixed-size
// chunks; chunk c draws from its own stream seeded by (seed, c), and the
// chunk counts are summed in chunk order. The result therefore depends on
// (trials, seed, chunk size) only, never on the thread count or schedule.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "agzkp/numtheory.hpp"

namespace agzkp {

struct McResult {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;

  double estimate() const { return trials == 0 ? 0.0 : static_cast<double>(successes) / trials; }
  /// Binomial standard error at probability p (defaults to the estimate).
  double stderr_at(double p) const {
    return trials == 0 ? 0.0 : std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  }
  double stderr_() const { return stderr_at(estimate()); }
  /// |estimate - p| <= sigmas * stderr_at(p).
  bool within(double p, double sigmas = 3.0) const {
    return std::abs(estimate() - p) <= sigmas * stderr_at(p) + 1e-15;
  }
};

inline constexpr std::uint64_t kDefaultChunk = 4096;

inline Rng chunk_rng(std::uint64_t seed, std::uint64_t chunk) {
  return Rng(splitmix64(seed ^ splitmix64(chunk + 0x243f6a8885a308d3ULL)));
}

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs `trials` independent trials of trial(Rng&) -> bool. The callable
/// must be safe to invoke concurrently from several threads.
template <class Trial>
McResult run_trials(std::uint64_t trials, std::uint64_t seed, Trial&& trial, unsigned threads = 0,
                    std::uint64_t chunk = kDefaultChunk) {
  const std::uint64_t chunks = (trials + chunk - 1) / chunk;
  std::vector<std::uint64_t> counts(chunks, 0);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      Rng rng = chunk_rng(seed, c);
      const std::uint64_t begin = c * chunk;
      const std::uint64_t end = std::min(trials, begin + chunk);
      std::uint64_t hits = 0;
      for (std::uint64_t t = begin; t < end; ++t) hits += trial(rng) ? 1 : 0;
      counts[c] = hits;
    }
  };
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(chunks, 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  McResult out;
  out.trials = trials;
  out.seed = seed;
  for (auto c : counts) out.successes += c;
  return out;
}

/// Two-proportion z statistic (pooled); 0 when both samples are degenerate.
inline double two_proportion_z(std::uint64_t s1, std::uint64_t n1, std::uint64_t s2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0) return 0.0;
  const double p1 = static_cast<double>(s1) / n1, p2 = static_cast<double>(s2) / n2;
  const double pooled = static_cast<double>(s1 + s2) / static_cast<double>(n1 + n2);
  const double se = std::sqrt(pooled * (1 - pooled) * (1.0 / n1 + 1.0 / n2));
  if (se == 0) return 0.0;
  return (p1 - p2) / se;
}

}  // namespace agzkp
