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


#include "agzkp/adversary.hpp"
#include "test_support.hpp"

namespace agzkp {
namespace {

TEST(Adversary, CheaterCommitmentPassesWhenGuessMatches) {
  const auto t = make_cheater_target(3, 64, 5);
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Challenge guess = random_challenge(rng, 3);
    const BigInt r = sample_unit(rng, t.m);
    const BigInt w = cheater_commitment(r, rng.coin(), guess, t.witnesses, t.m);
    EXPECT_TRUE(verify_round(w, guess, r, t.witnesses, t.m));
  }
}

TEST(Adversary, CheaterRateMatchesClosedForm) {
  for (auto [k, h, trials] : {std::tuple{1, 1, 20000}, std::tuple{2, 3, 40000}}) {
    CheaterConfig cfg;
    cfg.k = k;
    cfg.h = h;
    cfg.trials = trials;
    cfg.seed = 17;
    const AttackReport r = run_cheater_experiment(cfg);
    EXPECT_TRUE(test::within_sigma(r.frequency(), r.closed_form, trials))
        << k << "," << h << " freq " << r.frequency() << " vs " << r.closed_form;
  }
}

TEST(Adversary, OracleCheaterAlwaysSucceeds) {
  CheaterConfig cfg;
  cfg.k = 3;
  cfg.h = 4;
  cfg.trials = 500;
  cfg.oracle = true;
  EXPECT_EQ(run_cheater_experiment(cfg).frequency(), 1.0);
}

TEST(Adversary, ExperimentsAreDeterministic) {
  CheaterConfig cfg;
  cfg.trials = 3000;
  cfg.seed = 9;
  EXPECT_EQ(run_cheater_experiment(cfg).successes, run_cheater_experiment(cfg).successes);
  EXPECT_EQ(run_trials(10000, 3, [](Rng& r) { return r.coin(); }, 1).successes,
            run_trials(10000, 3, [](Rng& r) { return r.coin(); }, 4).successes);
}

TEST(Adversary, BundleCheaterSetBlindAndInformed) {
  BundleCheatConfig cfg;
  cfg.trials = 24000;
  cfg.seed = 3;
  AttackReport blind = run_bundle_cheat_experiment(cfg);
  EXPECT_NEAR(blind.closed_form, 1.0 / 12, 1e-12);
  EXPECT_TRUE(test::within_sigma(blind.frequency(), blind.closed_form, cfg.trials)) << blind.frequency();
  cfg.set_blind = false;
  AttackReport informed = run_bundle_cheat_experiment(cfg);
  EXPECT_NEAR(informed.closed_form, 0.25, 1e-12);
  EXPECT_TRUE(test::within_sigma(informed.frequency(), 0.25, cfg.trials)) << informed.frequency();
}

Ceremony small_ceremony(std::size_t bits, std::size_t n, std::size_t k, std::uint64_t seed) {
  CeremonyParams p;
  p.groups = 1;
  p.n = n;
  p.k = k;
  p.bit_length = bits;
  p.obus_per_group = 2;
  p.seed = seed;
  return run_ceremony(p);
}

SessionConfig cfg_of(int alpha, int mu, int h, Variant v = Variant::kBasic) {
  SessionConfig c;
  c.alpha = alpha;
  c.mu = mu;
  c.h = h;
  c.variant = v;
  return c;
}

TEST(Adversary, ObserverRecordsAcceptedRoundsOnly) {
  Ceremony c = small_ceremony(64, 8, 2, 4);
  RsuEndpoint rsu(c.rsus.front());
  Rng rng(2);
  const Observation o = observe_sessions(c.obus, rsu, cfg_of(2, 3, 2), 1, TapLevel::kRoundPlaintext, rng);
  ASSERT_EQ(o.corpus.size(), 6u);
  const auto& pool = c.groups.front().pool_witnesses;
  for (const auto& r : o.corpus) {
    EXPECT_TRUE(verify_round(r.w, r.challenge, r.y, select(pool, r.ids), c.kdc.modulus.m));
  }
  const Observation blind = observe_sessions(c.obus, rsu, cfg_of(2, 3, 2), 2, TapLevel::kCiphertextOnly, rng);
  EXPECT_TRUE(blind.corpus.empty());
  EXPECT_GT(blind.frames_seen, 0u);
}

TEST(Adversary, CorpusRoundTrip) {
  Ceremony c = small_ceremony(64, 8, 2, 4);
  RsuEndpoint rsu(c.rsus.front());
  Rng rng(3);
  const Observation o = observe_sessions(c.obus, rsu, cfg_of(1, 2, 2), 2, TapLevel::kRoundPlaintext, rng);
  EXPECT_EQ(decode_corpus(encode_corpus(o.corpus)), o.corpus);
  Bytes bad = encode_corpus(o.corpus);
  bad[1] = 'X';
  EXPECT_AGZKP_ERROR(decode_corpus(bad), ErrorCode::kFormatError);
}

TEST(Adversary, CoverageCounting) {
  Corpus corpus;
  for (std::uint64_t c = 0; c < 4; ++c) corpus.push_back({{1, 2}, 5, challenge_from_value(c, 2), 7});
  SimulatorBuild b = build_simulators(corpus, 4, 2);
  ASSERT_EQ(b.matrices.size(), 1u);
  EXPECT_DOUBLE_EQ(b.matrices.begin()->second.coverage(), 1.0);
  corpus.resize(3);
  b = build_simulators(corpus, 4, 2);
  EXPECT_DOUBLE_EQ(b.matrices.begin()->second.coverage(), 0.75);
  // Rows are capped at 2^k.
  Corpus many;
  for (int w = 0; w < 10; ++w) many.push_back({{1, 3}, w + 10, challenge_from_value(0, 2), 1});
  EXPECT_EQ(build_simulators(many, 4, 2).matrices.begin()->second.rows.size(), 4u);
  EXPECT_TRUE(build_simulators({}, 4, 2).matrices.empty());
}

TEST(Adversary, MemoryCostFormula) {
  EXPECT_EQ(simulator_memory_cost(10, 5), BigInt(16515072));
  EXPECT_EQ(simulator_memory_cost(7, 0), BigInt(64));
  // 65536 * 2,118,760 evaluated exactly.
  EXPECT_EQ(simulator_memory_cost(50, 5), BigInt("138855055360"));
  EXPECT_EQ(binomial(10, 5), BigInt(252));  // simulators needed for the full attack
  EXPECT_AGZKP_ERROR(simulator_memory_cost(3, 4), ErrorCode::kInvalidArgument);
  // Packed layout: 2^(2k+6) / (8*2^k + 16*4^k) stays within a factor 8 of the formula.
  for (std::size_t k = 1; k <= 4; ++k) {
    const double ratio = static_cast<double>(simulator_memory_cost(8, k)) /
                         static_cast<double>(simulator_measured_full_cost(8, k));
    EXPECT_GT(ratio, 1.0);
    EXPECT_LT(ratio, 4.0);
  }
}

struct ReplayFixture {
  Ceremony c = small_ceremony(8, 4, 2, 21);
  Recording rec;
  explicit ReplayFixture(Variant v) {
    RsuOptions o;
    o.seed = 5;
    RsuEndpoint rsu(c.rsus.front(), o);
    Rng rng(8);
    rec = record_simulators(c.obus, rsu, cfg_of(1, 6, 8, v), TapLevel::kRoundPlaintext, 50, 3000, rng);
  }
};

TEST(Adversary, FullMatricesBreakBasicVariant) {
  ReplayFixture f(Variant::kBasic);
  ASSERT_TRUE(f.rec.complete) << f.rec.build.mean_coverage();
  SimulatorAttackConfig cfg;
  cfg.session = cfg_of(2, 5, 4);
  cfg.sessions = 100;
  const AttackReport r = simulator_attack(f.rec.build.matrices, f.c.rsus.front(), f.c.obus.front(), cfg);
  EXPECT_EQ(r.frequency(), 1.0);
  EXPECT_EQ(r.closed_form, 1.0);
  for (double a : r.per_alpha) EXPECT_EQ(a, 1.0);
}

TEST(Adversary, HalfCoverageFollowsBinomialTail) {
  ReplayFixture f(Variant::kBasic);
  ASSERT_TRUE(f.rec.complete);
  SimulatorSet half = f.rec.build.matrices;
  for (auto& [ids, m] : half)
    for (auto& row : m.rows) std::erase_if(row.y, [](const auto& kv) { return kv.first >= 2; });
  SimulatorAttackConfig cfg;
  cfg.session = cfg_of(2, 3, 1);
  cfg.sessions = 600;
  const AttackReport r = simulator_attack(half, f.c.rsus.front(), f.c.obus.front(), cfg);
  EXPECT_NEAR(r.closed_form, binomial_tail(3, 0.5, 2), 1e-12);
  EXPECT_TRUE(test::within_sigma(r.frequency(), r.closed_form, cfg.sessions)) << r.frequency();
}

TEST(Adversary, MissingSimulatorCountsAsFailure) {
  ReplayFixture f(Variant::kBasic);
  SimulatorSet partial = f.rec.build.matrices;
  partial.erase(partial.begin());
  SimulatorAttackConfig cfg;
  cfg.session = cfg_of(5, 6, 2);  // every session requests all C(4,2) = 6 sets
  cfg.sessions = 20;
  const AttackReport r = simulator_attack(partial, f.c.rsus.front(), f.c.obus.front(), cfg);
  EXPECT_EQ(r.missing_simulator, 20u);
  EXPECT_EQ(r.per_alpha[4], 1.0);  // the five covered sets verify
  EXPECT_LT(r.per_alpha[5], 0.1);  // the missing one (almost) never does
}

TEST(Adversary, HardenedReplayIsChanceLevel) {
  ReplayFixture f(Variant::kHardened);
  ASSERT_GT(f.rec.build.matrices.size(), 0u);
  SimulatorAttackConfig cfg;
  cfg.session = cfg_of(1, 5, 2, Variant::kHardened);
  cfg.sessions = 300;
  const AttackReport replay = simulator_attack(f.rec.build.matrices, f.c.rsus.front(), f.c.obus.front(), cfg);
  cfg.random_response_control = true;
  const AttackReport control = simulator_attack(f.rec.build.matrices, f.c.rsus.front(), f.c.obus.front(), cfg);
  const double z = two_proportion_z(replay.rounds_accepted, replay.rounds_attempted,
                                    control.rounds_accepted, control.rounds_attempted);
  EXPECT_LE(std::abs(z), 3.0) << replay.round_frequency() << " vs " << control.round_frequency();
  EXPECT_LT(replay.frequency(), 0.2);
}

}  // namespace
}  // namespace agzkp
