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


#include <deque>

#include "agzkp/auth.hpp"
#include "test_support.hpp"

namespace agzkp {
namespace {

struct Fixture {
  Ceremony ceremony;
  std::unique_ptr<RsuEndpoint> rsu;

  explicit Fixture(std::uint64_t seed = 1, RsuOptions options = {}, std::size_t n = 10,
                   std::size_t k = 2) {
    CeremonyParams p;
    p.seed = seed;
    p.n = n;
    p.k = k;
    p.obus_per_group = 3;
    ceremony = run_ceremony(p);
    options.seed = seed;
    rsu = std::make_unique<RsuEndpoint>(ceremony.rsus.front(), options);
  }
  ObuCredential& obu(std::size_t i = 0) { return ceremony.obus.at(i); }
};

SessionConfig config(int alpha = 2, int mu = 5, int h = 4, Variant v = Variant::kBasic) {
  SessionConfig c;
  c.alpha = alpha;
  c.mu = mu;
  c.h = h;
  c.variant = v;
  return c;
}

TEST(Auth, ConfigValidation) {
  EXPECT_AGZKP_ERROR(config(6, 6).validate(10, 2), ErrorCode::kUnsupportedAlpha);
  EXPECT_AGZKP_ERROR(config(0, 5).validate(10, 2), ErrorCode::kUnsupportedAlpha);
  EXPECT_AGZKP_ERROR(config(3, 2).validate(10, 2), ErrorCode::kInvalidParameters);
  EXPECT_AGZKP_ERROR(config(2, 5, 0).validate(10, 2), ErrorCode::kDegenerateParameters);
  EXPECT_AGZKP_ERROR(config(2, 11).validate(5, 2), ErrorCode::kTooManyProofsRequested);
  EXPECT_AGZKP_ERROR(config(2, 5, 4, Variant::kHardened).validate(10, 1),
                     ErrorCode::kDegenerateParameters);
  EXPECT_NO_THROW(config(5, 10).validate(5, 2));
}

TEST(Auth, NegotiatePrivacy) {
  PrivacyPolicy p{{{"ERS", 3}}};
  EXPECT_EQ(negotiate_privacy(p, "ERS", 3), 3);
  EXPECT_EQ(negotiate_privacy(p, "ERS", 5), 5);
  EXPECT_FALSE(negotiate_privacy(p, "ERS", 2));
  EXPECT_FALSE(negotiate_privacy(p, "TOLL", 5));
}

TEST(Auth, HonestSessionBasicAccepted) {
  Fixture f;
  Rng rng(3);
  auto run = run_full_session(f.obu(), *f.rsu, config(), rng);
  EXPECT_EQ(run.result.outcome, AuthOutcome::kAccepted) << run.result.detail;
  EXPECT_EQ(run.result.verified_count, 5);
  EXPECT_EQ(f.obu().counter, 1u);
  const auto& g = f.ceremony.groups.front();
  const auto rv = reverify_session(run.record, f.rsu->credential().modulus, g.master_witnesses,
                                   g.pool_witnesses);
  EXPECT_TRUE(rv.membership_ok);
  EXPECT_EQ(rv.verified_count, 5);
  EXPECT_TRUE(rv.consistent);
  // The RSU closing log agrees with the OBU.
  const auto view = f.rsu->session(run.record.key_id);
  ASSERT_TRUE(view);
  ASSERT_TRUE(view->closing);
  EXPECT_EQ(view->closing->verified_count, 5);
  EXPECT_TRUE(view->membership_verified);
}

TEST(Auth, HonestSessionHardenedAccepted) {
  Fixture f(2, {}, 10, 3);
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    auto run = run_full_session(f.obu(), *f.rsu, config(2, 4, 3, Variant::kHardened), rng);
    EXPECT_EQ(run.result.outcome, AuthOutcome::kAccepted) << run.result.detail;
    const auto& g = f.ceremony.groups.front();
    EXPECT_TRUE(reverify_session(run.record, f.rsu->credential().modulus, g.master_witnesses,
                                 g.pool_witnesses)
                    .consistent);
  }
}

TEST(Auth, InsecureStubEnvelopesInteroperate) {
  RsuOptions o;
  o.envelopes = EnvelopeSuite::insecure_stub();
  Fixture f(5, o);
  Rng rng(1);
  SessionRunOptions ro;
  ro.envelopes = EnvelopeSuite::insecure_stub();
  EXPECT_TRUE(run_full_session(f.obu(), *f.rsu, config(), rng, ro).result.accepted());
}

TEST(Auth, RsuViewCarriesNoMemberIdentity) {
  Fixture f;
  Rng rng(8);
  // Two members of the same group: the RSU sees group, alpha and service only.
  auto a = run_full_session(f.obu(0), *f.rsu, config(), rng);
  auto b = run_full_session(f.obu(1), *f.rsu, config(), rng);
  ASSERT_TRUE(a.result.accepted());
  ASSERT_TRUE(b.result.accepted());
  const auto va = *f.rsu->session(a.record.key_id);
  const auto vb = *f.rsu->session(b.record.key_id);
  EXPECT_EQ(va.group_id, vb.group_id);
  EXPECT_EQ(va.alpha, vb.alpha);
  EXPECT_EQ(va.serv_id, vb.serv_id);
  EXPECT_NE(va.key_id, vb.key_id);
  EXPECT_NE(va.sets, vb.sets);  // unlinkable PRF sets, not identities
}

TEST(Auth, PolicyRejection) {
  RsuOptions o;
  o.policy = PrivacyPolicy{{{"ERS", 3}}};
  Fixture f(1, o);
  Rng rng(2);
  auto run = run_full_session(f.obu(), *f.rsu, config(2, 5), rng);
  EXPECT_EQ(run.result.outcome, AuthOutcome::kRejectedPolicy);
  EXPECT_EQ(f.obu().counter, 0u);
  auto cfg = config(2, 5);
  cfg.serv_id = "UNKNOWN";
  EXPECT_EQ(run_full_session(f.obu(), *f.rsu, cfg, rng).result.outcome, AuthOutcome::kRejectedPolicy);
  EXPECT_TRUE(run_full_session(f.obu(), *f.rsu, config(3, 5), rng).result.accepted());
}

TEST(Auth, UnsupportedAlphaFailsAtObu) {
  Fixture f;
  Rng rng(2);
  auto run = run_full_session(f.obu(), *f.rsu, config(6, 8), rng);
  EXPECT_EQ(run.result.outcome, AuthOutcome::kAborted);
  EXPECT_EQ(run.result.error, ErrorCode::kUnsupportedAlpha);
}

TEST(Auth, BadCertificateFailsAtObu) {
  Fixture f;
  CeremonyParams other;
  other.seed = 99;
  Ceremony foreign = run_ceremony(other);
  ObuCredential& obu = foreign.obus.front();  // trusts a different KDC root
  Rng rng(3);
  auto run = run_full_session(obu, *f.rsu, config(), rng);
  EXPECT_EQ(run.result.error, ErrorCode::kBadCertificate);
}

TEST(Auth, StaleAndUndecryptableRequests) {
  Fixture f;
  Rng rng(4);
  const auto beacon = BeaconBody::decode(Frame::decode(f.rsu->beacon(100.0)).payload);
  const auto env = EnvelopeSuite::reference();
  const ObuStart s = obu_start(f.obu(), beacon, config(), *env.asymmetric, rng, 100.0);
  EXPECT_AGZKP_ERROR(f.rsu->register_session(s.frame, 106.0), ErrorCode::kStaleTimestamp);
  EXPECT_NO_THROW(f.rsu->register_session(s.frame, 104.0));

  Rng r2(5);
  const BoxKeyPair wrong = BoxKeyPair::generate(r2);
  const Frame bogus{MsgType::kAuthRequest, 0, env.asymmetric->seal(wrong.public_key, Bytes{1, 2}, r2)};
  EXPECT_AGZKP_ERROR(f.rsu->register_session(bogus.encode(), 100.0), ErrorCode::kUndecryptableRequest);
  // Through handle() the same failure becomes a clear reject frame.
  const auto replies = f.rsu->handle(bogus.encode(), 100.0);
  ASSERT_EQ(replies.size(), 1u);
  const Frame rf = Frame::decode(replies.front());
  EXPECT_EQ(rf.type, MsgType::kReject);
  EXPECT_EQ(RejectBody::decode(rf.payload).error,
            static_cast<int>(ErrorCode::kUndecryptableRequest) + 1);
}

TEST(Auth, WrongMasterKeyRejectedMembership) {
  Fixture f;
  ObuCredential impostor = f.obu();
  Rng rng(6);
  for (auto& s : impostor.master_key) s = random_secret(rng, impostor.modulus);
  auto run = run_full_session(impostor, *f.rsu, config(2, 5, 8), rng);
  EXPECT_EQ(run.result.outcome, AuthOutcome::kRejectedMembership);
}

TEST(Auth, UnknownGroupRejectedMembership) {
  Fixture f;
  ObuCredential obu = f.obu();
  obu.group_id = 77;
  Rng rng(6);
  EXPECT_EQ(run_full_session(obu, *f.rsu, config(), rng).result.outcome,
            AuthOutcome::kRejectedMembership);
}

TEST(Auth, RevokedObuDeniedCoMemberUnaffected) {
  Fixture f;
  Rng rng(9);
  ASSERT_TRUE(run_full_session(f.obu(0), *f.rsu, config(), rng).result.accepted());
  broadcast_revocation(f.obu(0).iv, 0, "stolen", {&f.rsu->revocation_table()});
  auto denied = run_full_session(f.obu(0), *f.rsu, config(), rng);
  EXPECT_EQ(denied.result.outcome, AuthOutcome::kRejectedRevoked);
  EXPECT_EQ(f.rsu->garble_store().size(), 1u);
  EXPECT_TRUE(run_full_session(f.obu(1), *f.rsu, config(), rng).result.accepted());
}

TEST(Auth, MonitorModeFailsMembershipAgainstGarbledTrack) {
  RsuOptions o;
  o.deny_on_match = false;
  Fixture f(1, o);
  Rng rng(10);
  broadcast_revocation(f.obu(0).iv, 0, "stolen", {&f.rsu->revocation_table()});
  EXPECT_EQ(run_full_session(f.obu(0), *f.rsu, config(2, 5, 8), rng).result.outcome,
            AuthOutcome::kRejectedMembership);
  EXPECT_TRUE(run_full_session(f.obu(1), *f.rsu, config(), rng).result.accepted());
}

class WrongSecretsProver final : public BundleProver {
 public:
  IdSet claim(std::size_t, const IdSet& requested, Rng&) override { return requested; }
  std::unique_ptr<ProverStrategy> prover(const IdSet& claimed, const BundleProofContext& ctx) override {
    Rng rng(static_cast<std::uint64_t>(ctx.index) + 1);
    std::vector<Secret> fake;
    for (std::size_t i = 0; i < claimed.size(); ++i) fake.push_back(random_secret(rng, ctx.modulus));
    return std::make_unique<HonestProver>(ctx.modulus, fake, ctx.variant, ctx.polynomial);
  }
};

class WrongIdsProver final : public BundleProver {
 public:
  IdSet claim(std::size_t, const IdSet& requested, Rng&) override {
    IdSet s = requested;
    s.back() = s.back() == 1 ? 2 : 1;
    std::sort(s.begin(), s.end());
    return s;
  }
  std::unique_ptr<ProverStrategy> prover(const IdSet& claimed, const BundleProofContext& ctx) override {
    return HonestBundleProver().prover(claimed, ctx);
  }
};

TEST(Auth, CheatingRsuRejected) {
  Fixture f;
  f.rsu->set_bundle_prover_factory(
      [](const RsuSessionView&) { return std::make_unique<WrongSecretsProver>(); });
  Rng rng(11);
  int rejected = 0;
  for (int i = 0; i < 10; ++i) {
    auto run = run_full_session(f.obu(), *f.rsu, config(1, 3, 8), rng);
    if (run.result.outcome == AuthOutcome::kRejectedInsufficientProofs) ++rejected;
  }
  EXPECT_EQ(rejected, 10);
  EXPECT_EQ(f.obu().counter, 0u);
}

TEST(Auth, MismatchedIdsNeverCount) {
  Fixture f;
  f.rsu->set_bundle_prover_factory(
      [](const RsuSessionView&) { return std::make_unique<WrongIdsProver>(); });
  Rng rng(12);
  auto run = run_full_session(f.obu(), *f.rsu, config(1, 3, 2), rng);
  EXPECT_EQ(run.result.verified_count, 0);
  EXPECT_EQ(run.result.outcome, AuthOutcome::kRejectedInsufficientProofs);
}

TEST(Auth, EagerStopEndsAfterAlphaProofs) {
  Fixture f;
  Rng rng(13);
  auto cfg = config(2, 5, 2);
  cfg.eager_stop = true;
  auto run = run_full_session(f.obu(), *f.rsu, cfg, rng);
  EXPECT_TRUE(run.result.accepted());
  EXPECT_EQ(run.result.verified_count, 2);
  EXPECT_EQ(run.record.bundle.size(), 2u);
}

class DropNth final : public Channel {
 public:
  explicit DropNth(std::size_t n) : n_(n) {}
  std::optional<Bytes> carry(Direction, Bytes frame, double) override {
    if (count_++ == n_) return std::nullopt;
    return frame;
  }

 private:
  std::size_t n_;
  std::size_t count_ = 0;
};

TEST(Auth, LostMessageAbortsAndDoesNotAdvanceCounter) {
  Fixture f;
  Rng rng(14);
  DropNth drop(6);
  SessionRunOptions ro;
  ro.channel = &drop;
  auto run = run_full_session(f.obu(), *f.rsu, config(), rng, ro);
  EXPECT_EQ(run.result.outcome, AuthOutcome::kAborted);
  EXPECT_EQ(f.obu().counter, 0u);
}

TEST(Auth, TamperedFrameAbortsSession) {
  Fixture f;
  Rng rng(14);
  ObuEndpoint obu(&f.obu(), config(), EnvelopeSuite::reference(), rng.split());
  auto out = obu.handle(f.rsu->beacon(0), 0);
  auto replies = f.rsu->handle(out.at(0), 0);
  out = obu.handle(replies.at(0), 0);  // SetRequest
  Bytes tampered = out.at(0);
  tampered.back() ^= 1;
  replies = f.rsu->handle(tampered, 0);
  ASSERT_EQ(replies.size(), 1u);
  EXPECT_EQ(Frame::decode(replies[0]).type, MsgType::kReject);
  obu.handle(replies[0], 0);
  EXPECT_TRUE(obu.finished());
  EXPECT_EQ(obu.result().outcome, AuthOutcome::kAborted);
}

/// Pumps several sessions against one RSU, alternating one frame each.
std::vector<AuthResult> run_interleaved(std::vector<ObuCredential*> obus, RsuEndpoint& rsu, Rng& rng) {
  std::vector<std::unique_ptr<ObuEndpoint>> eps;
  std::vector<std::deque<std::pair<Direction, Bytes>>> queues(obus.size());
  for (std::size_t i = 0; i < obus.size(); ++i) {
    eps.push_back(std::make_unique<ObuEndpoint>(obus[i], config(), EnvelopeSuite::reference(), rng.split()));
    queues[i].emplace_back(Direction::kRsuToObu, rsu.beacon(0));
  }
  for (bool progress = true; progress;) {
    progress = false;
    for (std::size_t i = 0; i < obus.size(); ++i) {
      if (queues[i].empty()) continue;
      progress = true;
      auto [dir, bytes] = std::move(queues[i].front());
      queues[i].pop_front();
      if (dir == Direction::kRsuToObu) {
        for (auto& o : eps[i]->handle(bytes, 0.01)) queues[i].emplace_back(Direction::kObuToRsu, o);
      } else {
        for (auto& o : rsu.handle(bytes, 0.01)) queues[i].emplace_back(Direction::kRsuToObu, o);
      }
    }
  }
  std::vector<AuthResult> out;
  for (auto& e : eps) out.push_back(e->result());
  return out;
}

TEST(Auth, InterleavedSessionsAreIsolated) {
  Fixture f;
  Rng rng(21);
  const auto results = run_interleaved({&f.obu(0), &f.obu(1), &f.obu(2)}, *f.rsu, rng);
  for (const auto& r : results) EXPECT_TRUE(r.accepted()) << r.detail;
  EXPECT_EQ(f.rsu->sessions().size(), 3u);
}

TEST(Auth, CrossSessionFramesAreRejected) {
  Fixture f;
  Rng rng(22);
  ObuEndpoint a(&f.obu(0), config(), EnvelopeSuite::reference(), rng.split());
  ObuEndpoint b(&f.obu(1), config(), EnvelopeSuite::reference(), rng.split());
  const auto ra = f.rsu->handle(a.handle(f.rsu->beacon(0), 0).at(0), 0);
  const auto rb = f.rsu->handle(b.handle(f.rsu->beacon(0), 0).at(0), 0);
  // Feed a's SessionAccept to b: it opens under the wrong key and aborts b.
  b.handle(ra.at(0), 0);
  EXPECT_TRUE(b.finished());
  EXPECT_EQ(b.result().outcome, AuthOutcome::kAborted);
  EXPECT_EQ(b.result().error, ErrorCode::kEnvelopeFailure);
  EXPECT_FALSE(a.finished());
  (void)rb;
}

TEST(Auth, PropertyRandomHonestSessionsAccepted) {
  Rng meta(31);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t k = 1 + meta.below(4);
    const std::size_t n = k + 3 + meta.below(6);
    Fixture f(100 + trial, {}, n, k);
    const int alpha = 1 + static_cast<int>(meta.below(4));
    const int mu = alpha + static_cast<int>(meta.below(3));
    const int h = 1 + static_cast<int>(meta.below(4));
    const Variant v = k >= 2 && meta.coin() ? Variant::kHardened : Variant::kBasic;
    auto cfg = config(alpha, mu, h, v);
    if (BigInt(mu) > binomial(n, k)) continue;
    auto run = run_full_session(f.obu(), *f.rsu, cfg, meta);
    EXPECT_TRUE(run.result.accepted())
        << "n=" << n << " k=" << k << " a=" << alpha << " mu=" << mu << " h=" << h << " "
        << run.result.detail;
  }
}

}  // namespace
}  // namespace agzkp
