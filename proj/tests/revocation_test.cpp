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


#include <map>
#include <set>
#include <thread>

#include "agzkp/keymgmt.hpp"
#include "agzkp/revocation.hpp"
#include "test_support.hpp"

namespace agzkp {
namespace {

const Bytes kPrfKey(32, 0x5a);

TEST(Revocation, SequenceIsDeterministicAndWellFormed) {
  const auto a = next_sequence(kPrfKey, 77, 3, 10, 3, 6);
  const auto b = next_sequence(kPrfKey, 77, 3, 10, 3, 6);
  EXPECT_EQ(a.blocks, b.blocks);
  ASSERT_EQ(a.blocks.size(), 6u);
  std::set<IdSet> distinct(a.blocks.begin(), a.blocks.end());
  EXPECT_EQ(distinct.size(), 6u);
  for (const auto& blk : a.blocks) {
    ASSERT_EQ(blk.size(), 3u);
    EXPECT_TRUE(std::is_sorted(blk.begin(), blk.end()));
    EXPECT_GE(blk.front(), 1u);
    EXPECT_LE(blk.back(), 10u);
    EXPECT_LT(blk[0], blk[1]);
    EXPECT_LT(blk[1], blk[2]);
  }
  EXPECT_EQ(a.flat().size(), 18u);
}

TEST(Revocation, SequenceDependsOnIvCounterAndKey) {
  const auto base = next_sequence(kPrfKey, 1, 0, 20, 4, 5).blocks;
  EXPECT_NE(base, next_sequence(kPrfKey, 2, 0, 20, 4, 5).blocks);
  EXPECT_NE(base, next_sequence(kPrfKey, 1, 1, 20, 4, 5).blocks);
  EXPECT_NE(base, next_sequence(Bytes(32, 1), 1, 0, 20, 4, 5).blocks);
}

TEST(Revocation, FullEnumerationWhenMuEqualsBinomial) {
  const auto s = next_sequence(kPrfKey, 9, 0, 5, 2, 10);
  std::set<IdSet> distinct(s.blocks.begin(), s.blocks.end());
  EXPECT_EQ(distinct.size(), 10u);
}

TEST(Revocation, SequenceParameterErrors) {
  EXPECT_AGZKP_ERROR(next_sequence(kPrfKey, 1, 0, 4, 2, 7), ErrorCode::kParameterOverflow);
  EXPECT_AGZKP_ERROR(next_sequence(kPrfKey, 1, 0, 4, 0, 1), ErrorCode::kInvalidArgument);
  EXPECT_AGZKP_ERROR(next_sequence(kPrfKey, 1, 0, 4, 2, 0), ErrorCode::kInvalidArgument);
}

TEST(Revocation, PropertyBlockMarginalsAreUniform) {
  // Every id appears in a block with probability k/n.
  const std::size_t n = 8, k = 3, trials = 20000;
  std::map<std::uint32_t, int> hits;
  for (std::uint64_t c = 0; c < trials; ++c) {
    const auto seq = next_sequence(kPrfKey, 123, c, n, k, 1);
    for (auto id : seq.blocks[0]) ++hits[id];
  }
  const double p = static_cast<double>(k) / n;
  for (std::uint32_t id = 1; id <= n; ++id) {
    EXPECT_TRUE(test::within_sigma(hits[id] / static_cast<double>(trials), p, trials, 4.0))
        << "id " << id << " freq " << hits[id] / static_cast<double>(trials);
  }
}

TEST(Revocation, ChooseSetsAndCounter) {
  const Ceremony c = run_ceremony(CeremonyParams{});
  ObuCredential obu = c.obus.front();
  const auto s0 = obu_choose_proof_sets(obu, 5);
  EXPECT_EQ(s0, obu_choose_proof_sets(obu, 5));
  advance_counter(obu);
  EXPECT_EQ(obu.counter, 1u);
  EXPECT_NE(s0, obu_choose_proof_sets(obu, 5));
  EXPECT_AGZKP_ERROR(obu_choose_proof_sets(obu, 46), ErrorCode::kTooManyProofsRequested);
}

TEST(Revocation, ScreeningMatchesWithinWindowOnly) {
  RevocationTable t;
  t.apply(RevocationRecord{1, 500, 10, "stolen"}, 0);
  for (std::uint64_t drift : {0u, 1u, 30u, 64u}) {
    const auto seq = next_sequence(kPrfKey, 500, 10 + drift, 12, 3, 5).blocks;
    const auto m = t.screen(kPrfKey, seq, 12, 3, 64);
    ASSERT_TRUE(m.has_value()) << drift;
    EXPECT_EQ(m->iv, 500u);
    EXPECT_EQ(m->counter, 10 + drift);
  }
  EXPECT_FALSE(t.screen(kPrfKey, next_sequence(kPrfKey, 500, 75, 12, 3, 5).blocks, 12, 3, 64));
  EXPECT_FALSE(t.screen(kPrfKey, next_sequence(kPrfKey, 501, 10, 12, 3, 5).blocks, 12, 3, 64));
  EXPECT_FALSE(t.screen(kPrfKey, next_sequence(kPrfKey, 500, 5, 12, 3, 5).blocks, 12, 3, 64));
  t.observe_counter(500, 60);
  EXPECT_TRUE(t.screen(kPrfKey, next_sequence(kPrfKey, 500, 120, 12, 3, 5).blocks, 12, 3, 64));
}

TEST(Revocation, ApplyIsIdempotentButVersioned) {
  RevocationTable t;
  const RevocationRecord rec{1, 42, 3, "r"};
  t.apply(rec, 1.0);
  t.apply(rec, 2.0);
  EXPECT_EQ(t.size(), 1u);
  EXPECT_EQ(t.version(), 2u);
  EXPECT_EQ(t.entries().front().inserted_at, 1.0);
  t.apply(RevocationRecord{3, 42, 9, "r"}, 3.0);
  EXPECT_EQ(t.entries().front().last_known_counter, 9u);
  t.apply(RevocationRecord{4, 42, 2, "r"}, 3.0);
  EXPECT_EQ(t.entries().front().last_known_counter, 9u);
}

TEST(Revocation, BroadcastReachesAllTables) {
  RevocationTable a, b, c;
  broadcast_revocation(7, 0, "x", {&a, &b, &c});
  broadcast_revocation(7, 0, "x", {&a, &b, &c});
  for (auto* t : {&a, &b, &c}) {
    EXPECT_TRUE(t->contains(7));
    EXPECT_EQ(t->size(), 1u);
    EXPECT_EQ(t->version(), 2u);
  }
}

TEST(Revocation, RecordRoundTripAndErrors) {
  const RevocationRecord rec{5, 99, 12, "compromised"};
  EXPECT_EQ(RevocationRecord::decode(rec.encode()), rec);
  Bytes bad = rec.encode();
  bad.pop_back();
  EXPECT_AGZKP_ERROR(RevocationRecord::decode(bad), ErrorCode::kMalformedMessage);
}

TEST(Revocation, PersistenceRoundTrip) {
  RevocationTable t;
  t.apply(RevocationRecord{1, 10, 1, "a"}, 1.5);
  t.apply(RevocationRecord{2, 20, 2, "b"}, 2.5);
  const RevocationTable back = revocation_table_from_json(Json::parse(to_json(t).dump()));
  EXPECT_TRUE(back == t);

  GarbleStore g;
  Rng rng(3);
  const BigInt m = generate_blum_modulus(64, 1).m;
  g.garble(10, 1, 3, m, rng);
  GarbleStore g2;
  g2.load_json(Json::parse(g.to_json().dump()));
  ASSERT_TRUE(g2.lookup(10));
  EXPECT_EQ(*g2.lookup(10), *g.lookup(10));
  EXPECT_FALSE(g2.lookup(11));
}

TEST(Revocation, ConcurrentReadersAndWriter) {
  RevocationTable t;
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (std::uint64_t i = 0; i < 200; ++i) t.apply(RevocationRecord{i + 1, i, 0, "w"}, 0);
    stop = true;
  });
  std::size_t reads = 0;
  while (!stop) {
    (void)t.screen(kPrfKey, next_sequence(kPrfKey, 1000, 0, 8, 2, 2).blocks, 8, 2, 1);
    ++reads;
  }
  writer.join();
  EXPECT_EQ(t.size(), 200u);
  EXPECT_EQ(t.version(), 200u);
  EXPECT_GT(reads, 0u);
}

}  // namespace
}  // namespace agzkp
