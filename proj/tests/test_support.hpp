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

#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "agzkp/error.hpp"
#include "agzkp/numtheory.hpp"

namespace agzkp::test {

#define EXPECT_AGZKP_ERROR(stmt, expected_code)                          \
  do {                                                                   \
    try {                                                                \
      stmt;                                                              \
      ADD_FAILURE() << "expected " << ::agzkp::to_string(expected_code); \
    } catch (const ::agzkp::Error& e) {                                  \
      EXPECT_EQ(e.code(), expected_code) << e.what();                    \
    }                                                                    \
  } while (0)

// Squares of units, by enumeration.
inline std::set<std::uint64_t> unit_squares(std::uint64_t m) {
  std::set<std::uint64_t> out;
  for (std::uint64_t x = 1; x < m; ++x) {
    if (std::gcd(x, m) == 1) out.insert(x * x % m);
  }
  return out;
}

inline double binomial_sigma(double p, double trials) {
  return std::sqrt(p * (1.0 - p) / trials);
}

inline bool within_sigma(double observed, double expected, double trials, double k = 3.0) {
  const double sigma = binomial_sigma(expected, trials);
  return std::abs(observed - expected) <= k * sigma + 1e-12;
}

}  // namespace agzkp::test
