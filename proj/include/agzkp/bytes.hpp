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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agzkp/error.hpp"
#include "agzkp/numtheory.hpp"

namespace agzkp {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline std::string hex_encode(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 15]);
  }
  return out;
}

inline Bytes hex_decode(std::string_view hex) {
  require(hex.size() % 2 == 0, ErrorCode::kFormatError, "odd-length hex string");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    fail(ErrorCode::kFormatError, "bad hex digit");
  };
  Bytes out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

/// Big-endian magnitude of a non-negative integer; zero encodes as no bytes.
inline Bytes magnitude_bytes(const BigInt& x) {
  require(x >= 0, ErrorCode::kInvalidArgument, "negative integers are not encodable");
  Bytes out;
  BigInt v = x;
  while (v > 0) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    v >>= 8;
  }
  return {out.rbegin(), out.rend()};
}

inline BigInt from_magnitude_bytes(ByteView bytes) {
  BigInt out = 0;
  for (std::uint8_t b : bytes) {
    out <<= 8;
    out |= b;
  }
  return out;
}

// Canonical encodings shared by the wire layer, transcripts and corpora:
//   u8/u16/u32/u64  big-endian fixed width
//   integer         u32 length, then big-endian magnitude
//   bits            u16 bit count, then ceil(count/8) bytes, MSB first
//   blob            u32 length, then raw bytes
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v) {
    buf_.push_back(v);
    return *this;
  }
  ByteWriter& u16(std::uint16_t v) { return fixed(v, 2); }
  ByteWriter& u32(std::uint32_t v) { return fixed(v, 4); }
  ByteWriter& u64(std::uint64_t v) { return fixed(v, 8); }

  ByteWriter& integer(const BigInt& x) { return blob(magnitude_bytes(x)); }

  ByteWriter& bits(const std::vector<bool>& bits) {
    require(bits.size() <= 0xffff, ErrorCode::kInvalidArgument, "bit string too long");
    u16(static_cast<std::uint16_t>(bits.size()));
    std::uint8_t acc = 0;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) acc |= static_cast<std::uint8_t>(0x80u >> (i % 8));
      if (i % 8 == 7) {
        buf_.push_back(acc);
        acc = 0;
      }
    }
    if (bits.size() % 8 != 0) buf_.push_back(acc);
    return *this;
  }

  ByteWriter& blob(ByteView bytes) {
    require(bytes.size() <= UINT32_MAX, ErrorCode::kInvalidArgument, "blob too long");
    u32(static_cast<std::uint32_t>(bytes.size()));
    return raw(bytes);
  }

  ByteWriter& raw(ByteView bytes) {
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
    return *this;
  }

  ByteWriter& str(std::string_view s) {
    return blob(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
  }

  const Bytes& bytes() const& { return buf_; }
  Bytes bytes() && { return std::move(buf_); }

 private:
  ByteWriter& fixed(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    return *this;
  }

  Bytes buf_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(fixed(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(fixed(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(fixed(4)); }
  std::uint64_t u64() { return fixed(8); }

  BigInt integer() { return from_magnitude_bytes(blob_view()); }

  std::vector<bool> bits() {
    const std::size_t count = u16();
    const ByteView packed = take((count + 7) / 8);
    std::vector<bool> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = (packed[i / 8] >> (7 - i % 8)) & 1;
    return out;
  }

  Bytes blob() {
    const ByteView v = blob_view();
    return {v.begin(), v.end()};
  }

  std::string str() {
    const ByteView v = blob_view();
    return {v.begin(), v.end()};
  }

  ByteView take(std::size_t n) {
    require(n <= remaining(), ErrorCode::kMalformedMessage, "truncated input");
    const ByteView out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return remaining() == 0; }

  void expect_done() const {
    require(done(), ErrorCode::kMalformedMessage, "trailing bytes after message");
  }

 private:
  ByteView blob_view() { return take(u32()); }

  std::uint64_t fixed(int width) {
    const ByteView v = take(static_cast<std::size_t>(width));
    std::uint64_t out = 0;
    for (std::uint8_t b : v) out = (out << 8) | b;
    return out;
  }

  ByteView data_;
  std::size_t pos_ = 0;
};

}  // namespace agzkp
