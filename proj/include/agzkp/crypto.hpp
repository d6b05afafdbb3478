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

// Hashing, signatures and the two envelope contracts used by the protocol.
// Everything is backed by OpenSSL's EVP interface; key material is always
// derived from a caller-supplied Rng so runs replay exactly.

#include <array>
#include <cstdint>
#include <cstring>
#include <memory>
#include <optional>
#include <string_view>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "agzkp/bytes.hpp"
#include "agzkp/error.hpp"
#include "agzkp/numtheory.hpp"

namespace agzkp {

using Digest = std::array<std::uint8_t, 32>;
using SessionKey = std::array<std::uint8_t, 16>;
using PublicKey = std::array<std::uint8_t, 32>;
using PrivateKey = std::array<std::uint8_t, 32>;

namespace detail {

struct EvpPkeyDeleter {
  void operator()(EVP_PKEY* p) const { EVP_PKEY_free(p); }
};
struct EvpPkeyCtxDeleter {
  void operator()(EVP_PKEY_CTX* p) const { EVP_PKEY_CTX_free(p); }
};
struct EvpMdCtxDeleter {
  void operator()(EVP_MD_CTX* p) const { EVP_MD_CTX_free(p); }
};
struct EvpCipherCtxDeleter {
  void operator()(EVP_CIPHER_CTX* p) const { EVP_CIPHER_CTX_free(p); }
};

using PkeyPtr = std::unique_ptr<EVP_PKEY, EvpPkeyDeleter>;
using PkeyCtxPtr = std::unique_ptr<EVP_PKEY_CTX, EvpPkeyCtxDeleter>;
using MdCtxPtr = std::unique_ptr<EVP_MD_CTX, EvpMdCtxDeleter>;
using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, EvpCipherCtxDeleter>;

inline void check(int ok, const char* what) {
  if (ok != 1) fail(ErrorCode::kCryptoFailure, what);
}

inline PkeyPtr raw_private(int type, const PrivateKey& key) {
  PkeyPtr p(EVP_PKEY_new_raw_private_key(type, nullptr, key.data(), key.size()));
  if (!p) fail(ErrorCode::kCryptoFailure, "raw private key import");
  return p;
}

inline PkeyPtr raw_public(int type, const PublicKey& key) {
  PkeyPtr p(EVP_PKEY_new_raw_public_key(type, nullptr, key.data(), key.size()));
  if (!p) fail(ErrorCode::kCryptoFailure, "raw public key import");
  return p;
}

inline PublicKey public_of(EVP_PKEY* pkey) {
  PublicKey out{};
  std::size_t len = out.size();
  check(EVP_PKEY_get_raw_public_key(pkey, out.data(), &len), "raw public key export");
  return out;
}

}  // namespace detail

inline Digest sha256(ByteView data) {
  Digest out{};
  unsigned int len = 0;
  detail::check(EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr),
                "sha256");
  return out;
}

inline Digest hmac_sha256(ByteView key, ByteView data) {
  Digest out{};
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr) {
    fail(ErrorCode::kCryptoFailure, "hmac-sha256");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ed25519 signatures (certificates).

struct SigningKey {
  PrivateKey seed{};
  PublicKey public_key{};

  static SigningKey from_seed(const PrivateKey& seed) {
    SigningKey k;
    k.seed = seed;
    auto pkey = detail::raw_private(EVP_PKEY_ED25519, seed);
    k.public_key = detail::public_of(pkey.get());
    return k;
  }

  static SigningKey generate(Rng& rng) { return from_seed(rng.bytes<32>()); }
};

inline Bytes ed25519_sign(const SigningKey& key, ByteView message) {
  auto pkey = detail::raw_private(EVP_PKEY_ED25519, key.seed);
  detail::MdCtxPtr ctx(EVP_MD_CTX_new());
  detail::check(EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()),
                "ed25519 sign init");
  Bytes sig(64);
  std::size_t len = sig.size();
  detail::check(EVP_DigestSign(ctx.get(), sig.data(), &len, message.data(), message.size()),
                "ed25519 sign");
  sig.resize(len);
  return sig;
}

inline bool ed25519_verify(const PublicKey& key, ByteView message, ByteView signature) {
  auto pkey = detail::raw_public(EVP_PKEY_ED25519, key);
  detail::MdCtxPtr ctx(EVP_MD_CTX_new());
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) != 1) return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), message.data(),
                          message.size()) == 1;
}

// ---------------------------------------------------------------------------
// X25519 key agreement (request sealing).

struct BoxKeyPair {
  PrivateKey private_key{};
  PublicKey public_key{};

  static BoxKeyPair from_private(const PrivateKey& priv) {
    BoxKeyPair k;
    k.private_key = priv;
    auto pkey = detail::raw_private(EVP_PKEY_X25519, priv);
    k.public_key = detail::public_of(pkey.get());
    return k;
  }

  static BoxKeyPair generate(Rng& rng) { return from_private(rng.bytes<32>()); }
};

inline std::optional<Digest> x25519_shared(const PrivateKey& priv, const PublicKey& peer) {
  auto self = detail::raw_private(EVP_PKEY_X25519, priv);
  auto other = detail::raw_public(EVP_PKEY_X25519, peer);
  detail::PkeyCtxPtr ctx(EVP_PKEY_CTX_new(self.get(), nullptr));
  if (!ctx || EVP_PKEY_derive_init(ctx.get()) != 1) return std::nullopt;
  if (EVP_PKEY_derive_set_peer(ctx.get(), other.get()) != 1) return std::nullopt;
  Digest out{};
  std::size_t len = out.size();
  if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != out.size()) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// AES-128-GCM primitive. Layout: nonce(12) || ciphertext || tag(16).

inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;

inline Bytes aes128gcm_seal(const SessionKey& key, ByteView nonce, ByteView plaintext,
                            ByteView aad) {
  require(nonce.size() == kNonceSize, ErrorCode::kInvalidArgument, "gcm nonce must be 12 bytes");
  detail::CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  detail::check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(), nonce.data()),
                "gcm init");
  int len = 0;
  if (!aad.empty()) {
    detail::check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
                  "gcm aad");
  }
  Bytes out(kNonceSize + plaintext.size() + kTagSize);
  std::memcpy(out.data(), nonce.data(), kNonceSize);
  int written = 0;
  if (!plaintext.empty()) {
    detail::check(EVP_EncryptUpdate(ctx.get(), out.data() + kNonceSize, &len, plaintext.data(),
                                    static_cast<int>(plaintext.size())),
                  "gcm encrypt");
    written = len;
  }
  detail::check(EVP_EncryptFinal_ex(ctx.get(), out.data() + kNonceSize + written, &len), "gcm final");
  detail::check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, static_cast<int>(kTagSize),
                                    out.data() + kNonceSize + plaintext.size()),
                "gcm tag");
  return out;
}

inline std::optional<Bytes> aes128gcm_open(const SessionKey& key, ByteView sealed, ByteView aad) {
  if (sealed.size() < kNonceSize + kTagSize) return std::nullopt;
  const std::size_t body = sealed.size() - kNonceSize - kTagSize;
  detail::CipherCtxPtr ctx(EVP_CIPHER_CTX_new());
  if (EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(), sealed.data()) != 1) {
    return std::nullopt;
  }
  int len = 0;
  if (!aad.empty() &&
      EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) != 1) {
    return std::nullopt;
  }
  Bytes plain(body);
  if (body > 0 && EVP_DecryptUpdate(ctx.get(), plain.data(), &len, sealed.data() + kNonceSize,
                                    static_cast<int>(body)) != 1) {
    return std::nullopt;
  }
  std::array<std::uint8_t, kTagSize> tag{};
  std::memcpy(tag.data(), sealed.data() + kNonceSize + body, kTagSize);
  if (EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, static_cast<int>(kTagSize), tag.data()) != 1) {
    return std::nullopt;
  }
  std::array<std::uint8_t, 16> scratch{};
  if (EVP_DecryptFinal_ex(ctx.get(), scratch.data(), &len) != 1) return std::nullopt;
  return plain;
}

// ---------------------------------------------------------------------------
// Envelope contracts.

/// Authenticated symmetric encryption under a 128-bit session key.
class SymmetricEnvelope {
 public:
  virtual ~SymmetricEnvelope() = default;
  virtual std::string_view name() const = 0;
  virtual Bytes seal(const SessionKey& key, ByteView nonce, ByteView plaintext,
                     ByteView aad) const = 0;
  virtual std::optional<Bytes> open(const SessionKey& key, ByteView sealed, ByteView aad) const = 0;
};

/// Public-key seal to a recipient's X25519 key.
class AsymmetricEnvelope {
 public:
  virtual ~AsymmetricEnvelope() = default;
  virtual std::string_view name() const = 0;
  virtual Bytes seal(const PublicKey& recipient, ByteView plaintext, Rng& rng) const = 0;
  virtual std::optional<Bytes> open(const BoxKeyPair& recipient, ByteView sealed) const = 0;
};

class Aes128GcmEnvelope final : public SymmetricEnvelope {
 public:
  std::string_view name() const override { return "aes128gcm"; }
  Bytes seal(const SessionKey& key, ByteView nonce, ByteView plaintext,
             ByteView aad) const override {
    return aes128gcm_seal(key, nonce, plaintext, aad);
  }
  std::optional<Bytes> open(const SessionKey& key, ByteView sealed, ByteView aad) const override {
    return aes128gcm_open(key, sealed, aad);
  }
};

/// Ephemeral X25519, key = SHA-256(shared || eph_pub || recipient_pub)[0..16),
/// AES-128-GCM with an all-zero nonce (the key is single-use).
/// Layout: eph_pub(32) || gcm envelope.
class X25519SealEnvelope final : public AsymmetricEnvelope {
 public:
  std::string_view name() const override { return "x25519-aes128gcm"; }

  Bytes seal(const PublicKey& recipient, ByteView plaintext, Rng& rng) const override {
    const BoxKeyPair eph = BoxKeyPair::generate(rng);
    auto shared = x25519_shared(eph.private_key, recipient);
    if (!shared) fail(ErrorCode::kCryptoFailure, "x25519 derive");
    const SessionKey key = derive_key(*shared, eph.public_key, recipient);
    const std::array<std::uint8_t, kNonceSize> nonce{};
    Bytes out(eph.public_key.begin(), eph.public_key.end());
    const Bytes body = aes128gcm_seal(key, nonce, plaintext, recipient);
    out.insert(out.end(), body.begin(), body.end());
    return out;
  }

  std::optional<Bytes> open(const BoxKeyPair& recipient, ByteView sealed) const override {
    if (sealed.size() < 32 + kNonceSize + kTagSize) return std::nullopt;
    PublicKey eph{};
    std::memcpy(eph.data(), sealed.data(), eph.size());
    auto shared = x25519_shared(recipient.private_key, eph);
    if (!shared) return std::nullopt;
    const SessionKey key = derive_key(*shared, eph, recipient.public_key);
    return aes128gcm_open(key, sealed.subspan(32), recipient.public_key);
  }

 private:
  static SessionKey derive_key(const Digest& shared, const PublicKey& eph, const PublicKey& recipient) {
    ByteWriter w;
    w.raw(shared).raw(eph).raw(recipient);
    const Digest d = sha256(w.bytes());
    SessionKey key{};
    std::memcpy(key.data(), d.data(), key.size());
    return key;
  }
};

/// NOT SECURE. XOR keystream from SHA-256(key || nonce || block) with a
/// truncated keyed checksum. Exists only for deterministic fixtures.
class InsecureTestEnvelope final : public SymmetricEnvelope {
 public:
  std::string_view name() const override { return "insecure-test-stub"; }

  Bytes seal(const SessionKey& key, ByteView nonce, ByteView plaintext,
             ByteView aad) const override {
    require(nonce.size() == kNonceSize, ErrorCode::kInvalidArgument, "stub nonce must be 12 bytes");
    Bytes out(nonce.begin(), nonce.end());
    Bytes body = xor_stream(key, nonce, plaintext);
    out.insert(out.end(), body.begin(), body.end());
    const Digest mac = checksum(key, nonce, body, aad);
    out.insert(out.end(), mac.begin(), mac.begin() + 8);
    return out;
  }

  std::optional<Bytes> open(const SessionKey& key, ByteView sealed, ByteView aad) const override {
    if (sealed.size() < kNonceSize + 8) return std::nullopt;
    const ByteView nonce = sealed.first(kNonceSize);
    const ByteView body = sealed.subspan(kNonceSize, sealed.size() - kNonceSize - 8);
    const Digest mac = checksum(key, nonce, body, aad);
    if (!std::equal(mac.begin(), mac.begin() + 8, sealed.end() - 8)) return std::nullopt;
    return xor_stream(key, nonce, body);
  }

 private:
  static Bytes xor_stream(const SessionKey& key, ByteView nonce, ByteView data) {
    Bytes out(data.begin(), data.end());
    for (std::size_t block = 0; block * 32 < out.size(); ++block) {
      ByteWriter w;
      w.raw(key).raw(nonce).u64(block);
      const Digest pad = sha256(w.bytes());
      for (std::size_t i = 0; i < 32 && block * 32 + i < out.size(); ++i) out[block * 32 + i] ^= pad[i];
    }
    return out;
  }

  static Digest checksum(const SessionKey& key, ByteView nonce, ByteView body, ByteView aad) {
    ByteWriter w;
    w.str("stub-mac").raw(key).raw(nonce).blob(body).blob(aad);
    return sha256(w.bytes());
  }
};

/// NOT SECURE. Seals by encrypting under SHA-256(recipient public key), so
/// anyone knowing the public key can open it. For deterministic fixtures.
class InsecureTestSeal final : public AsymmetricEnvelope {
 public:
  std::string_view name() const override { return "insecure-test-seal"; }

  Bytes seal(const PublicKey& recipient, ByteView plaintext, Rng&) const override {
    const std::array<std::uint8_t, kNonceSize> nonce{};
    return InsecureTestEnvelope{}.seal(key_for(recipient), nonce, plaintext, recipient);
  }

  std::optional<Bytes> open(const BoxKeyPair& recipient, ByteView sealed) const override {
    return InsecureTestEnvelope{}.open(key_for(recipient.public_key), sealed, recipient.public_key);
  }

 private:
  static SessionKey key_for(const PublicKey& pk) {
    const Digest d = sha256(pk);
    SessionKey k{};
    std::memcpy(k.data(), d.data(), k.size());
    return k;
  }
};

struct EnvelopeSuite {
  std::shared_ptr<const SymmetricEnvelope> symmetric;
  std::shared_ptr<const AsymmetricEnvelope> asymmetric;

  static EnvelopeSuite reference() {
    return {std::make_shared<Aes128GcmEnvelope>(), std::make_shared<X25519SealEnvelope>()};
  }
  static EnvelopeSuite insecure_stub() {
    return {std::make_shared<InsecureTestEnvelope>(), std::make_shared<InsecureTestSeal>()};
  }
};

}  // namespace agzkp
