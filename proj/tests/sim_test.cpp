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


#include "agzkp/sim.hpp"
#include "test_support.hpp"

namespace agzkp {
namespace {

// A short, small road keeps each run well under a second.
SimConfig small_config() {
  SimConfig c;
  c.rsu_count = 3;
  c.obus_per_rsu = 5;
  c.duration_s = 10;
  c.session_interval_s = 5;
  return c;
}

TEST(Sim, ZeroObusGiveZeroAttempts) {
  SimConfig c = small_config();
  c.obus_per_rsu = 0;
  const SimMetrics m = run_sim(c, 1);
  EXPECT_EQ(m.sessions_attempted, 0u);
  EXPECT_EQ(m.packets_sent, 0u);
  EXPECT_EQ(m.packet_loss_ratio, 0.0);
  EXPECT_TRUE(m.conserved());
}

TEST(Sim, DeterministicForConfigAndSeed) {
  const SimConfig c = small_config();
  const SimMetrics a = run_sim(c, 7);
  const SimMetrics b = run_sim(c, 7);
  EXPECT_EQ(a, b);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  const SimMetrics other = run_sim(c, 8);
  EXPECT_NE(to_json(a).dump(), to_json(other).dump());
}

TEST(Sim, ConservationAndBounds) {
  for (int alpha : sim_alphas()) {
    for (std::uint64_t seed : {1, 2, 3}) {
      SimConfig c = small_config();
      c.alpha = alpha;
      const SimMetrics m = run_sim(c, seed);
      EXPECT_TRUE(m.conserved()) << alpha << " " << seed;
      EXPECT_LE(m.sessions_accepted, m.sessions_attempted);
      EXPECT_GE(m.packet_loss_ratio, 0.0);
      EXPECT_LE(m.packet_loss_ratio, 1.0);
      EXPECT_GT(m.sessions_attempted, 0u);
    }
  }
}

TEST(Sim, AcceptedSessionsReverifyOffline) {
  const SimMetrics m = run_sim(small_config(), 4);
  ASSERT_GT(m.sessions_accepted, 0u);
  EXPECT_EQ(m.reverified, m.sessions_accepted);
  EXPECT_EQ(m.reverify_failures, 0u);
}

TEST(Sim, LosslessChannelAcceptsEverySession) {
  SimConfig c = small_config();
  c.base_loss = 0;
  c.loss_per_queued = 0;
  const SimMetrics m = run_sim(c, 5);
  EXPECT_GT(m.sessions_attempted, 0u);
  EXPECT_EQ(m.sessions_accepted, m.sessions_attempted);
  EXPECT_EQ(m.packets_lost, 0u);
  EXPECT_EQ(m.packet_loss_ratio, 0.0);
}

TEST(Sim, DelayMatchesServiceModelOnIdleChannel) {
  // One OBU, no loss: a packet takes the service time plus propagation,
  // plus a short wait behind beacons or a reply burst from the same step.
  SimConfig c = small_config();
  c.rsu_count = 1;
  c.obus_per_rsu = 1;
  c.base_loss = 0;
  c.loss_per_queued = 0;
  for (int alpha : sim_alphas()) {
    c.alpha = alpha;
    const SimMetrics m = run_sim(c, 2);
    ASSERT_GT(m.sessions_accepted, 0u);
    const double service =
        c.per_packet_overhead_s + static_cast<double>(c.packet_bytes.at(alpha)) * c.per_byte_service_s;
    EXPECT_GE(m.avg_delay_s, service) << alpha;
    EXPECT_LE(m.avg_delay_s, 1.05 * service) << alpha;
  }
}

TEST(Sim, DelayIncreasesWithAlphaAtEqualLoad) {
  SimConfig c = small_config();
  c.obus_per_rsu = 15;
  double previous = 0;
  for (int alpha : sim_alphas()) {
    c.alpha = alpha;
    const double d = run_sim(c, 3).avg_delay_s;
    EXPECT_GT(d, previous) << alpha;
    previous = d;
  }
}

TEST(Sim, LossGrowsWithLoad) {
  SimConfig c = small_config();
  c.duration_s = 20;
  c.obus_per_rsu = 5;
  const double light = run_sim(c, 9).packet_loss_ratio;
  c.obus_per_rsu = 40;
  const double heavy = run_sim(c, 9).packet_loss_ratio;
  EXPECT_GT(heavy, light);
}

TEST(Sim, FastVehiclesLeaveRangeMidSession) {
  SimConfig c = small_config();
  c.speed_mps = 20000;  // crosses an RSU's 1 km footprint in 50 ms
  c.base_loss = 0;
  c.loss_per_queued = 0;
  const SimMetrics m = run_sim(c, 1);
  EXPECT_GT(m.lost_out_of_range, 0u);
  EXPECT_GT(m.sessions_lost, 0u);
  EXPECT_TRUE(m.conserved());
}

TEST(Sim, QueueCapacityDropsPackets) {
  SimConfig c = small_config();
  c.queue_capacity = 1;
  c.obus_per_rsu = 40;
  c.per_byte_service_s = 1e-3;  // saturate the channel
  c.duration_s = 5;
  const SimMetrics m = run_sim(c, 1);
  EXPECT_GT(m.lost_queue_full, 0u);
  EXPECT_TRUE(m.conserved());
}

TEST(Sim, InvalidConfigurations) {
  auto expect_invalid = [](auto mutate) {
    SimConfig c = small_config();
    mutate(c);
    EXPECT_AGZKP_ERROR(run_sim(c, 1), ErrorCode::kInvalidConfig);
  };
  expect_invalid([](SimConfig& c) { c.rsu_spacing_m = 0; });
  expect_invalid([](SimConfig& c) { c.comm_range_m = -1; });
  expect_invalid([](SimConfig& c) { c.rsu_count = 0; });
  expect_invalid([](SimConfig& c) { c.packet_bytes[7] = 10; });
  expect_invalid([](SimConfig& c) { c.packet_bytes.erase(2); });
  expect_invalid([](SimConfig& c) { c.base_loss = 1.5; });
  expect_invalid([](SimConfig& c) { c.queue_capacity = 0; });
  expect_invalid([](SimConfig& c) { c.alpha = 5; c.mu = 4; });
  expect_invalid([](SimConfig& c) { c.k = c.n; });
  expect_invalid([](SimConfig& c) { c.speed_jitter = 1; });
}

TEST(Sim, ConfigFileRoundTrip) {
  SimConfig c;
  c.obus_per_rsu = 33;
  c.speed_mps = 17.5;
  c.packet_bytes = {{2, 60}, {4, 110}, {5, 130}};
  c.variant = Variant::kHardened;
  c.seed = 99;
  const std::string text = format_sim_config(c);
  const SimConfig back = parse_sim_config(text);
  EXPECT_EQ(format_sim_config(back), text);
  EXPECT_EQ(back.packet_bytes, c.packet_bytes);
  EXPECT_EQ(back.variant, Variant::kHardened);

  const SimConfig partial = parse_sim_config("# comment\n obus_per_rsu = 7 # trailing\n\nalpha=4\n");
  EXPECT_EQ(partial.obus_per_rsu, 7u);
  EXPECT_EQ(partial.alpha, 4);
  EXPECT_EQ(partial.rsu_count, SimConfig{}.rsu_count);

  EXPECT_AGZKP_ERROR(parse_sim_config("bogus = 1\n"), ErrorCode::kInvalidConfig);
  EXPECT_AGZKP_ERROR(parse_sim_config("rsu_count = ten\n"), ErrorCode::kInvalidConfig);
  EXPECT_AGZKP_ERROR(parse_sim_config("rsu_count = -3\n"), ErrorCode::kInvalidConfig);
  EXPECT_AGZKP_ERROR(parse_sim_config("rsu_count\n"), ErrorCode::kInvalidConfig);
  EXPECT_AGZKP_ERROR(parse_sim_config("packet_bytes = 2-50\n"), ErrorCode::kInvalidConfig);
  EXPECT_AGZKP_ERROR(parse_sim_config("comm_range_m = 0\n"), ErrorCode::kInvalidConfig);
}

TEST(Sim, SweepEmitsOneRowPerValuePerAlpha) {
  SimConfig c = small_config();
  c.duration_s = 4;
  const std::vector<double> values{2, 4};
  const auto rows = sweep(c, SweepDimension::kLoad, values);
  ASSERT_EQ(rows.size(), values.size() * sim_alphas().size());
  EXPECT_EQ(rows[0].alpha, 2);
  EXPECT_EQ(rows[0].sweep_value, 2);
  EXPECT_EQ(rows[0].metrics.obus_per_rsu, 2u);
  const std::string csv = sweep_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "alpha,sweep_value,avg_delay_s,loss_ratio,attempted,accepted");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);
  // Parallel and serial execution agree.
  EXPECT_EQ(sweep_csv(sweep(c, SweepDimension::kLoad, values, 1)), csv);
  EXPECT_AGZKP_ERROR(sweep(c, SweepDimension::kLoad, {2.5}), ErrorCode::kInvalidConfig);
}

TEST(Sim, GridHasFortyEightPointsPerAlpha) {
  SimConfig c = small_config();
  c.rsu_count = 1;
  c.duration_s = 0.5;
  const auto cells = grid(c);
  EXPECT_EQ(cells.size(), 48 * sim_alphas().size());
  std::map<int, int> per_alpha;
  for (const auto& m : cells) ++per_alpha[m.alpha];
  for (int a : sim_alphas()) EXPECT_EQ(per_alpha[a], 48);
}

TEST(Sim, SpeedBarelyChangesDelay) {
  SimConfig c = small_config();
  std::vector<double> delays;
  for (double v : {14.0, 20.0, 27.0}) {
    c.speed_mps = v;
    delays.push_back(run_sim(c, 6).avg_delay_s);
  }
  EXPECT_LT(coefficient_of_variation(delays), 0.25);
  EXPECT_NEAR(coefficient_of_variation({1, 1, 1}), 0.0, 1e-15);
  EXPECT_NEAR(coefficient_of_variation({1, 3}), 0.5, 1e-15);
}

}  // namespace
}  // namespace agzkp
