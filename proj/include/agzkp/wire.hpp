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

// Wire format and message bodies.
//
// Frame:   tag (1 byte) || key id (8 bytes, big-endian) || u32 length || payload
//
// The payload is cleartext for Beacon and for Reject frames with key id 0,
// the asymmetric seal for AuthRequest, and otherwise the symmetric envelope
// output under the session key with
//   nonce = direction (1 byte) || 0x000000 || u64 per-direction sequence
//   aad   = tag || key id
// Message bodies use the canonical encoding of bytes.hpp.

#include <cstdint>
#include <string>
#include <vector>

#include "agzkp/bytes.hpp"
#include "agzkp/crypto.hpp"
#include "agzkp/error.hpp"
#include "agzkp/keymgmt.hpp"
#include "agzkp/numtheory.hpp"
#include "agzkp/revocation.hpp"
#include "agzkp/zkp.hpp"

namespace agzkp {

enum class MsgType : std::uint8_t {
  kBeacon = 0x01,
  kAuthRequest = 0x02,
  kSessionAccept = 0x03,
  kSetRequest = 0x04,
  kSetAck = 0x05,
  kMemCommit = 0x06,
  kMemChallenge = 0x07,
  kMemResponse = 0x08,
  kMemAck = 0x09,
  kBundleCommit = 0x0a,
  kBundleChallenge = 0x0b,
  kBundleResponse = 0x0c,
  kBundleAck = 0x0d,
  kClosing = 0x0e,
  kReject = 0x7f,
};

inline std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::kBeacon: return "Beacon";
    case MsgType::kAuthRequest: return "AuthRequest";
    case MsgType::kSessionAccept: return "SessionAccept";
    case MsgType::kSetRequest: return "SetRequest";
    case MsgType::kSetAck: return "SetAck";
    case MsgType::kMemCommit: return "MemCommit";
    case MsgType::kMemChallenge: return "MemChallenge";
    case MsgType::kMemResponse: return "MemResponse";
    case MsgType::kMemAck: return "MemAck";
    case MsgType::kBundleCommit: return "BundleCommit";
    case MsgType::kBundleChallenge: return "BundleChallenge";
    case MsgType::kBundleResponse: return "BundleResponse";
    case MsgType::kBundleAck: return "BundleAck";
    case MsgType::kClosing: return "Closing";
    case MsgType::kReject: return "Reject";
  }
  return "Unknown";
}

inline bool is_known_type(std::uint8_t t) {
  return (t >= 0x01 && t <= 0x0e) || t == 0x7f;
}

enum class Direction : std::uint8_t { kObuToRsu = 0, kRsuToObu = 1 };

struct Frame {
  MsgType type = MsgType::kBeacon;
  std::uint64_t key_id = 0;
  Bytes payload;

  Bytes encode() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(type)).u64(key_id).blob(payload);
    return std::move(w).bytes();
  }

  static Frame decode(ByteView data) {
    ByteReader r(data);
    Frame f;
    const std::uint8_t tag = r.u8();
    require(is_known_type(tag), ErrorCode::kMalformedMessage, "unknown message tag");
    f.type = static_cast<MsgType>(tag);
    f.key_id = r.u64();
    f.payload = r.blob();
    r.expect_done();
    return f;
  }

  Bytes aad() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(type)).u64(key_id);
    return std::move(w).bytes();
  }

  bool operator==(const Frame&) const = default;
};

inline Bytes envelope_nonce(Direction dir, std::uint64_t seq) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(dir)).u8(0).u8(0).u8(0).u64(seq);
  return std::move(w).bytes();
}

/// Per-session, per-direction sealing state.
class SessionChannelKeys {
 public:
  SessionChannelKeys() = default;
  SessionChannelKeys(SessionKey key, Direction own) : key_(key), own_(own) {}

  const SessionKey& key() const { return key_; }

  Bytes seal_frame(const SymmetricEnvelope& env, MsgType type, std::uint64_t key_id,
                   ByteView body) {
    Frame f{type, key_id, {}};
    f.payload = env.seal(key_, envelope_nonce(own_, send_seq_++), body, f.aad());
    return f.encode();
  }

  /// Opens a frame from the peer; rejects envelope failures and any nonce
  /// that does not advance the peer sequence. Every symmetric envelope
  /// carries its nonce as the first 12 bytes of the sealed output.
  Bytes open_frame(const SymmetricEnvelope& env, const Frame& f) {
    const auto plain = env.open(key_, f.payload, f.aad());
    require(plain.has_value(), ErrorCode::kEnvelopeFailure, "envelope open failed");
    require(f.payload.size() >= kNonceSize, ErrorCode::kEnvelopeFailure, "short envelope");
    ByteReader nr(ByteView(f.payload).first(kNonceSize));
    const std::uint8_t dir = nr.u8();
    nr.take(3);
    const std::uint64_t seq = nr.u64();
    const auto peer = own_ == Direction::kObuToRsu ? Direction::kRsuToObu : Direction::kObuToRsu;
    require(dir == static_cast<std::uint8_t>(peer), ErrorCode::kEnvelopeFailure,
            "envelope direction mismatch");
    require(seq == recv_seq_, ErrorCode::kEnvelopeFailure, "envelope sequence replayed or skipped");
    ++recv_seq_;
    return *plain;
  }

 private:
  SessionKey key_{};
  Direction own_ = Direction::kObuToRsu;
  std::uint64_t send_seq_ = 0;
  std::uint64_t recv_seq_ = 0;
};

inline std::uint64_t to_micros(double seconds) {
  return seconds <= 0 ? 0 : static_cast<std::uint64_t>(seconds * 1e6 + 0.5);
}

// ---------------------------------------------------------------------------
// Outcomes.

enum class AuthOutcome : std::uint8_t {
  kAccepted = 0,
  kRejectedInsufficientProofs = 1,
  kRejectedMembership = 2,
  kRejectedPolicy = 3,
  kRejectedRevoked = 4,
  kAborted = 5,  // envelope, freshness, malformed input or lost messages
};

inline std::string_view to_string(AuthOutcome o) {
  switch (o) {
    case AuthOutcome::kAccepted: return "Accepted";
    case AuthOutcome::kRejectedInsufficientProofs: return "RejectedInsufficientProofs";
    case AuthOutcome::kRejectedMembership: return "RejectedMembership";
    case AuthOutcome::kRejectedPolicy: return "RejectedPolicy";
    case AuthOutcome::kRejectedRevoked: return "RejectedRevoked";
    case AuthOutcome::kAborted: return "Aborted";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Message bodies.

inline constexpr std::size_t kNonceBytes = 16;
using SessionNonce = std::array<std::uint8_t, kNonceBytes>;

template <std::size_t N>
inline std::array<std::uint8_t, N> take_array(ByteReader& r) {
  const ByteView v = r.take(N);
  std::array<std::uint8_t, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

struct BeaconBody {
  Certificate certificate;
  std::uint64_t timestamp_us = 0;

  Bytes encode() const {
    ByteWriter w;
    certificate.encode(w);
    w.u64(timestamp_us);
    return std::move(w).bytes();
  }
  static BeaconBody decode(ByteView data) {
    ByteReader r(data);
    BeaconBody b;
    b.certificate = Certificate::decode(r);
    b.timestamp_us = r.u64();
    r.expect_done();
    return b;
  }
};

struct AuthRequestBody {
  std::uint32_t group_id = 0;
  std::uint64_t t1_us = 0;
  SessionKey session_key{};
  std::string serv_id;
  std::uint8_t alpha = 0;
  std::uint16_t mu = 0;
  std::uint16_t h = 0;
  Variant variant = Variant::kBasic;
  SessionNonce obu_nonce{};

  Bytes encode() const {
    ByteWriter w;
    w.u32(group_id).u64(t1_us).raw(session_key).str(serv_id).u8(alpha).u16(mu).u16(h).u8(
        static_cast<std::uint8_t>(variant));
    w.raw(obu_nonce);
    return std::move(w).bytes();
  }
  static AuthRequestBody decode(ByteView data) {
    ByteReader r(data);
    AuthRequestBody b;
    b.group_id = r.u32();
    b.t1_us = r.u64();
    b.session_key = take_array<16>(r);
    b.serv_id = r.str();
    b.alpha = r.u8();
    b.mu = r.u16();
    b.h = r.u16();
    const std::uint8_t v = r.u8();
    require(v <= 1, ErrorCode::kMalformedMessage, "unknown variant");
    b.variant = static_cast<Variant>(v);
    b.obu_nonce = take_array<kNonceBytes>(r);
    r.expect_done();
    return b;
  }
  bool operator==(const AuthRequestBody&) const = default;
};

struct SessionAcceptBody {
  std::uint8_t alpha = 0;
  SessionNonce rsu_nonce{};

  Bytes encode() const {
    ByteWriter w;
    w.u8(alpha).raw(rsu_nonce);
    return std::move(w).bytes();
  }
  static SessionAcceptBody decode(ByteView data) {
    ByteReader r(data);
    SessionAcceptBody b;
    b.alpha = r.u8();
    b.rsu_nonce = take_array<kNonceBytes>(r);
    r.expect_done();
    return b;
  }
};

inline void encode_id_set(ByteWriter& w, const IdSet& s) {
  w.u16(static_cast<std::uint16_t>(s.size()));
  for (auto id : s) w.u32(id);
}

inline IdSet decode_id_set(ByteReader& r) {
  IdSet s(r.u16());
  for (auto& id : s) id = r.u32();
  return s;
}

struct SetRequestBody {
  std::vector<IdSet> sets;

  Bytes encode() const {
    ByteWriter w;
    w.u16(static_cast<std::uint16_t>(sets.size()));
    for (const auto& s : sets) encode_id_set(w, s);
    return std::move(w).bytes();
  }
  static SetRequestBody decode(ByteView data) {
    ByteReader r(data);
    SetRequestBody b;
    b.sets.resize(r.u16());
    for (auto& s : b.sets) s = decode_id_set(r);
    r.expect_done();
    return b;
  }
};

struct MemCommitBody {
  std::uint64_t t2_us = 0;
  BigInt w;

  Bytes encode() const {
    ByteWriter wr;
    wr.u64(t2_us).integer(w);
    return std::move(wr).bytes();
  }
  static MemCommitBody decode(ByteView data) {
    ByteReader r(data);
    MemCommitBody b;
    b.t2_us = r.u64();
    b.w = r.integer();
    r.expect_done();
    return b;
  }
};

struct ChallengeBody {
  Challenge bits;

  Bytes encode() const {
    ByteWriter w;
    w.bits(bits);
    return std::move(w).bytes();
  }
  static ChallengeBody decode(ByteView data) {
    ByteReader r(data);
    ChallengeBody b;
    b.bits = r.bits();
    r.expect_done();
    return b;
  }
};

struct ResponseBody {
  bool degenerate = false;
  BigInt y;

  Bytes encode() const {
    ByteWriter w;
    w.u8(degenerate ? 1 : 0).integer(y);
    return std::move(w).bytes();
  }
  static ResponseBody decode(ByteView data) {
    ByteReader r(data);
    ResponseBody b;
    b.degenerate = r.u8() != 0;
    b.y = r.integer();
    r.expect_done();
    return b;
  }
};

enum class AckStatus : std::uint8_t {
  kNextRound = 0,
  kRerun = 1,
  kProofAccepted = 2,
  kProofFailed = 3,
};

struct AckBody {
  AckStatus status = AckStatus::kNextRound;

  Bytes encode() const { return Bytes{static_cast<std::uint8_t>(status)}; }
  static AckBody decode(ByteView data) {
    ByteReader r(data);
    const std::uint8_t s = r.u8();
    require(s <= 3, ErrorCode::kMalformedMessage, "unknown ack status");
    r.expect_done();
    return AckBody{static_cast<AckStatus>(s)};
  }
};

struct BundleCommitBody {
  std::uint16_t index = 0;
  IdSet ids;
  BigInt w;

  Bytes encode() const {
    ByteWriter wr;
    wr.u16(index);
    encode_id_set(wr, ids);
    wr.integer(w);
    return std::move(wr).bytes();
  }
  static BundleCommitBody decode(ByteView data) {
    ByteReader r(data);
    BundleCommitBody b;
    b.index = r.u16();
    b.ids = decode_id_set(r);
    b.w = r.integer();
    r.expect_done();
    return b;
  }
};

struct ClosingBody {
  AuthOutcome outcome = AuthOutcome::kAccepted;
  std::uint16_t verified_count = 0;
  std::uint8_t alpha = 0;

  Bytes encode() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(outcome)).u16(verified_count).u8(alpha);
    return std::move(w).bytes();
  }
  static ClosingBody decode(ByteView data) {
    ByteReader r(data);
    ClosingBody b;
    const std::uint8_t o = r.u8();
    require(o <= 5, ErrorCode::kMalformedMessage, "unknown outcome");
    b.outcome = static_cast<AuthOutcome>(o);
    b.verified_count = r.u16();
    b.alpha = r.u8();
    r.expect_done();
    return b;
  }
};

struct RejectBody {
  AuthOutcome outcome = AuthOutcome::kAborted;
  std::uint16_t error = 0;  // ErrorCode + 1, or 0
  std::string detail;

  Bytes encode() const {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(outcome)).u16(error).str(detail);
    return std::move(w).bytes();
  }
  static RejectBody decode(ByteView data) {
    ByteReader r(data);
    RejectBody b;
    const std::uint8_t o = r.u8();
    require(o <= 5, ErrorCode::kMalformedMessage, "unknown outcome");
    b.outcome = static_cast<AuthOutcome>(o);
    b.error = r.u16();
    b.detail = r.str();
    r.expect_done();
    return b;
  }
};

// ---------------------------------------------------------------------------
// Transcript files: "AGZT" || u16 version || u32 count || count x
// (u8 direction || u64 time_us || blob frame).

struct WireEvent {
  Direction direction = Direction::kObuToRsu;
  double time = 0;
  Bytes frame;
  bool operator==(const WireEvent&) const = default;
};

inline Bytes encode_wire_log(const std::vector<WireEvent>& events) {
  ByteWriter w;
  w.raw(ByteView(reinterpret_cast<const std::uint8_t*>("AGZT"), 4)).u16(1);
  w.u32(static_cast<std::uint32_t>(events.size()));
  for (const auto& e : events) {
    w.u8(static_cast<std::uint8_t>(e.direction)).u64(to_micros(e.time)).blob(e.frame);
  }
  return std::move(w).bytes();
}

inline std::vector<WireEvent> decode_wire_log(ByteView data) {
  ByteReader r(data);
  const ByteView magic = r.take(4);
  require(std::string(magic.begin(), magic.end()) == "AGZT", ErrorCode::kFormatError,
          "not a transcript file");
  require(r.u16() == 1, ErrorCode::kFormatError, "unsupported transcript version");
  const std::uint32_t count = r.u32();
  // Each event takes at least 13 bytes; reject counts the input cannot hold.
  require(count <= r.remaining() / 13, ErrorCode::kFormatError, "transcript count too large");
  std::vector<WireEvent> out(count);
  for (auto& e : out) {
    const std::uint8_t d = r.u8();
    require(d <= 1, ErrorCode::kFormatError, "bad direction");
    e.direction = static_cast<Direction>(d);
    e.time = static_cast<double>(r.u64()) / 1e6;
    e.frame = r.blob();
  }
  r.expect_done();
  return out;
}

}  // namespace agzkp
