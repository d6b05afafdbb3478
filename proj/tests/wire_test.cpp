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


#include "agzkp/keymgmt.hpp"
#include "agzkp/wire.hpp"
#include "test_support.hpp"

namespace agzkp {
namespace {

TEST(Wire, FrameRoundTripAndAad) {
  const Frame f{MsgType::kMemCommit, 0x1122334455667788ULL, Bytes{1, 2, 3}};
  const Frame back = Frame::decode(f.encode());
  EXPECT_EQ(back.type, f.type);
  EXPECT_EQ(back.key_id, f.key_id);
  EXPECT_EQ(back.payload, f.payload);
  EXPECT_NE(f.aad(), (Frame{MsgType::kMemChallenge, f.key_id, {}}.aad()));
}

TEST(Wire, MalformedFramesRejected) {
  EXPECT_AGZKP_ERROR(Frame::decode(Bytes{}), ErrorCode::kMalformedMessage);
  Bytes b = Frame{MsgType::kBeacon, 0, Bytes{9}}.encode();
  b[0] = 0x55;
  EXPECT_AGZKP_ERROR(Frame::decode(b), ErrorCode::kMalformedMessage);
  b = Frame{MsgType::kBeacon, 0, Bytes{9}}.encode();
  b.push_back(0);
  EXPECT_AGZKP_ERROR(Frame::decode(b), ErrorCode::kMalformedMessage);
}

TEST(Wire, BodiesRoundTrip) {
  const Ceremony c = run_ceremony(CeremonyParams{});
  const BeaconBody beacon{c.rsus.front().certificate, 123456};
  const BeaconBody beacon2 = BeaconBody::decode(beacon.encode());
  EXPECT_EQ(beacon2.certificate, beacon.certificate);
  EXPECT_EQ(beacon2.timestamp_us, beacon.timestamp_us);

  AuthRequestBody req;
  req.group_id = 3;
  req.t1_us = 99;
  req.session_key.fill(7);
  req.serv_id = "TOLL";
  req.alpha = 4;
  req.mu = 9;
  req.h = 5;
  req.variant = Variant::kHardened;
  req.obu_nonce.fill(1);
  EXPECT_EQ(AuthRequestBody::decode(req.encode()), req);

  const SetRequestBody sets{{{1, 2}, {3, 9}}};
  EXPECT_EQ(SetRequestBody::decode(sets.encode()).sets, sets.sets);
  const ChallengeBody ch{{true, false, true}};
  EXPECT_EQ(ChallengeBody::decode(ch.encode()).bits, ch.bits);
  const ResponseBody r{false, BigInt("123456789012345678901234567890")};
  EXPECT_EQ(ResponseBody::decode(r.encode()).y, r.y);
  const BundleCommitBody bc{2, {4, 5}, 77};
  const auto bc2 = BundleCommitBody::decode(bc.encode());
  EXPECT_EQ(bc2.index, 2);
  EXPECT_EQ(bc2.ids, bc.ids);
  EXPECT_EQ(bc2.w, 77);
  const RejectBody rj{AuthOutcome::kRejectedRevoked, 4, "no"};
  const auto rj2 = RejectBody::decode(rj.encode());
  EXPECT_EQ(rj2.outcome, rj.outcome);
  EXPECT_EQ(rj2.error, 4);
  EXPECT_EQ(rj2.detail, "no");
}

TEST(Wire, ChannelKeysEnforceSequenceAndDirection) {
  const auto env = EnvelopeSuite::reference();
  SessionKey key{};
  key.fill(3);
  SessionChannelKeys obu(key, Direction::kObuToRsu), rsu(key, Direction::kRsuToObu);
  const Bytes f1 = obu.seal_frame(*env.symmetric, MsgType::kMemCommit, 5, Bytes{1});
  const Bytes f2 = obu.seal_frame(*env.symmetric, MsgType::kMemCommit, 5, Bytes{2});
  EXPECT_EQ(rsu.open_frame(*env.symmetric, Frame::decode(f1)), Bytes{1});
  // Replaying f1 is refused.
  EXPECT_AGZKP_ERROR(rsu.open_frame(*env.symmetric, Frame::decode(f1)), ErrorCode::kEnvelopeFailure);
  EXPECT_EQ(rsu.open_frame(*env.symmetric, Frame::decode(f2)), Bytes{2});
  // Reflection of the rsu's own frame back at it is refused.
  SessionChannelKeys rsu2(key, Direction::kRsuToObu);
  const Bytes own = rsu2.seal_frame(*env.symmetric, MsgType::kSetAck, 5, Bytes{});
  EXPECT_AGZKP_ERROR(rsu2.open_frame(*env.symmetric, Frame::decode(own)), ErrorCode::kEnvelopeFailure);
  // Retagging a frame (type or key id) breaks the AAD.
  Frame retagged = Frame::decode(obu.seal_frame(*env.symmetric, MsgType::kMemCommit, 5, Bytes{3}));
  retagged.key_id = 6;
  EXPECT_AGZKP_ERROR(rsu.open_frame(*env.symmetric, retagged), ErrorCode::kEnvelopeFailure);
}

TEST(Wire, WireLogRoundTrip) {
  std::vector<WireEvent> log{{Direction::kRsuToObu, 0.5, Bytes{1, 2}},
                             {Direction::kObuToRsu, 0.75, Bytes{}}};
  EXPECT_EQ(decode_wire_log(encode_wire_log(log)), log);
  Bytes bad = encode_wire_log(log);
  bad[0] = 'X';
  EXPECT_AGZKP_ERROR(decode_wire_log(bad), ErrorCode::kFormatError);
}

TEST(Wire, PropertyTruncationNeverCrashes) {
  AuthRequestBody req;
  req.serv_id = "ERS";
  const Bytes full = req.encode();
  for (std::size_t len = 0; len < full.size(); ++len) {
    EXPECT_AGZKP_ERROR(AuthRequestBody::decode(ByteView(full).first(len)), ErrorCode::kMalformedMessage);
  }
}

}  // namespace
}  // namespace agzkp
