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

// Offline key ceremony: OBU-group formation, witness generation, RSU
// certificates and the provisioning records handed to OBUs and RSUs.
//
// Per group G_i the KDC draws
//   pool secrets   S_1..S_n   (kept by RSUs)   with witnesses I_x = +-S_x^2 (given to OBUs)
//   master secrets Pr_1..Pr_k (kept by OBUs)   with witnesses g_y = +-Pr_y^2 (given to RSUs)

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "agzkp/bytes.hpp"
#include "agzkp/crypto.hpp"
#include "agzkp/error.hpp"
#include "agzkp/numtheory.hpp"
#include "agzkp/zkp.hpp"

namespace agzkp {

using Json = nlohmann::ordered_json;

inline constexpr int kBundleFormatVersion = 1;

/// Guidance only: pools comfortably larger than the master key.
inline constexpr std::size_t kRecommendedPoolFactor = 10;

struct GroupSpec {
  std::uint32_t group_id = 0;
  std::vector<Secret> pool;                // S_1..S_n, RSU side
  std::vector<BigInt> pool_witnesses;      // I_1..I_n, OBU side
  std::vector<Secret> master_key;          // Pr_1..Pr_k, OBU side
  std::vector<BigInt> master_witnesses;    // g_1..g_k, RSU side

  std::size_t n() const { return pool.size(); }
  std::size_t k() const { return master_key.size(); }
  bool operator==(const GroupSpec&) const = default;
};

struct Certificate {
  std::uint32_t subject = 0;  // rsu id
  PublicKey public_key{};     // X25519 key that requests are sealed to
  std::string issuer;
  std::uint64_t valid_from_us = 0;
  std::uint64_t valid_until_us = 0;
  Bytes signature;

  /// Canonical byte string covered by the signature.
  Bytes signed_bytes() const {
    ByteWriter w;
    w.str("agzkp-cert-v1").u32(subject).raw(public_key).str(issuer).u64(valid_from_us).u64(
        valid_until_us);
    return std::move(w).bytes();
  }

  void encode(ByteWriter& w) const {
    w.u32(subject).raw(public_key).str(issuer).u64(valid_from_us).u64(valid_until_us).blob(
        signature);
  }

  static Certificate decode(ByteReader& r) {
    Certificate c;
    c.subject = r.u32();
    const ByteView pk = r.take(c.public_key.size());
    std::copy(pk.begin(), pk.end(), c.public_key.begin());
    c.issuer = r.str();
    c.valid_from_us = r.u64();
    c.valid_until_us = r.u64();
    c.signature = r.blob();
    return c;
  }

  bool operator==(const Certificate&) const = default;
};

inline bool verify_certificate(const Certificate& cert, const PublicKey& root,
                               std::uint64_t now_us) {
  if (now_us < cert.valid_from_us || now_us > cert.valid_until_us) return false;
  return ed25519_verify(root, cert.signed_bytes(), cert.signature);
}

struct ObuCredential {
  std::uint32_t group_id = 0;
  std::uint32_t member_id = 0;
  std::vector<Secret> master_key;
  std::vector<BigInt> pool_witnesses;
  std::uint64_t iv = 0;
  std::uint64_t counter = 0;
  BigInt modulus;
  PublicKey kdc_root{};
  Bytes prf_key;  // network-wide key of the secret-id sequence PRF

  std::size_t n() const { return pool_witnesses.size(); }
  std::size_t k() const { return master_key.size(); }
  bool operator==(const ObuCredential&) const = default;
};

struct RsuGroupMaterial {
  std::vector<Secret> pool;
  std::vector<BigInt> master_witnesses;
  bool operator==(const RsuGroupMaterial&) const = default;
};

struct RsuCredential {
  std::uint32_t rsu_id = 0;
  Certificate certificate;
  BoxKeyPair box;
  std::map<std::uint32_t, RsuGroupMaterial> groups;
  BigInt modulus;
  PublicKey kdc_root{};
  Bytes prf_key;

  bool operator==(const RsuCredential& o) const {
    return rsu_id == o.rsu_id && certificate == o.certificate &&
           box.private_key == o.box.private_key && groups == o.groups && modulus == o.modulus &&
           kdc_root == o.kdc_root && prf_key == o.prf_key;
  }
};

/// The offline authority. Holds the factored modulus, the signing root and
/// the IV registry that keeps OBU IVs unique.
struct KdcState {
  std::string id = "kdc-0";
  BlumModulus modulus;
  SigningKey root;
  Bytes prf_key;
  std::set<std::uint64_t> issued_ivs;
  std::uint64_t cert_lifetime_us = 365ULL * 24 * 3600 * 1000000;
};

inline KdcState make_kdc(BlumModulus modulus, Rng& rng, std::string id = "kdc-0") {
  KdcState kdc;
  kdc.id = std::move(id);
  kdc.modulus = std::move(modulus);
  kdc.root = SigningKey::generate(rng);
  kdc.prf_key = rng.bytes(32);
  return kdc;
}

inline Secret random_secret(Rng& rng, const BigInt& m) {
  Secret s;
  s.value = sample_unit(rng, m);
  s.sign = rng.coin() ? 1 : -1;
  return s;
}

inline void validate_group_parameters(std::size_t q, std::size_t n, std::size_t k) {
  require(q >= 1, ErrorCode::kInvalidParameters, "need at least one group (q >= 1)");
  require(k >= 1, ErrorCode::kInvalidParameters, "need at least one master secret (k >= 1)");
  require(k < n, ErrorCode::kInvalidParameters, "k must be smaller than n (k << n)");
}

/// q independent groups with fresh pool and master secrets each.
inline std::vector<GroupSpec> form_groups(std::size_t q, std::size_t n, std::size_t k,
                                          const BigInt& m, Rng& rng) {
  validate_group_parameters(q, n, k);
  std::vector<GroupSpec> groups;
  for (std::size_t g = 0; g < q; ++g) {
    GroupSpec spec;
    spec.group_id = static_cast<std::uint32_t>(g + 1);
    for (std::size_t x = 0; x < n; ++x) {
      spec.pool.push_back(random_secret(rng, m));
      spec.pool_witnesses.push_back(spec.pool.back().witness(m));
    }
    for (std::size_t y = 0; y < k; ++y) {
      spec.master_key.push_back(random_secret(rng, m));
      spec.master_witnesses.push_back(spec.master_key.back().witness(m));
    }
    groups.push_back(std::move(spec));
  }
  return groups;
}

inline Certificate issue_certificate(const KdcState& kdc, std::uint32_t rsu_id,
                                     const PublicKey& rsu_key, std::uint64_t now_us = 0) {
  Certificate c;
  c.subject = rsu_id;
  c.public_key = rsu_key;
  c.issuer = kdc.id;
  c.valid_from_us = now_us;
  c.valid_until_us = now_us + kdc.cert_lifetime_us;
  c.signature = ed25519_sign(kdc.root, c.signed_bytes());
  return c;
}

inline ObuCredential provision_obu(KdcState& kdc, const GroupSpec& group, std::uint32_t member_id,
                                   std::uint64_t iv) {
  require(!kdc.issued_ivs.contains(iv), ErrorCode::kDuplicateIv, "iv already provisioned");
  kdc.issued_ivs.insert(iv);
  ObuCredential c;
  c.group_id = group.group_id;
  c.member_id = member_id;
  c.master_key = group.master_key;
  c.pool_witnesses = group.pool_witnesses;
  c.iv = iv;
  c.counter = 0;
  c.modulus = kdc.modulus.m;
  c.kdc_root = kdc.root.public_key;
  c.prf_key = kdc.prf_key;
  return c;
}

inline RsuCredential provision_rsu(const KdcState& kdc, const std::vector<GroupSpec>& groups,
                                   std::uint32_t rsu_id, const BoxKeyPair& box,
                                   const Certificate& cert) {
  require(cert.subject == rsu_id && cert.public_key == box.public_key, ErrorCode::kBadCertificate,
          "certificate was not issued for this rsu key");
  RsuCredential c;
  c.rsu_id = rsu_id;
  c.certificate = cert;
  c.box = box;
  for (const auto& g : groups) c.groups[g.group_id] = RsuGroupMaterial{g.pool, g.master_witnesses};
  c.modulus = kdc.modulus.m;
  c.kdc_root = kdc.root.public_key;
  c.prf_key = kdc.prf_key;
  return c;
}

struct CeremonyParams {
  std::size_t groups = 2;           // q
  std::size_t n = 10;
  std::size_t k = 2;
  std::size_t bit_length = 64;
  std::size_t obus_per_group = 2;
  std::size_t rsu_count = 1;
  std::uint64_t seed = 1;

  bool operator==(const CeremonyParams&) const = default;
};

/// Everything the ceremony produces; a pure function of the parameters.
struct Ceremony {
  CeremonyParams params;
  KdcState kdc;
  std::vector<GroupSpec> groups;
  std::vector<RsuCredential> rsus;
  std::vector<ObuCredential> obus;
};

inline Ceremony run_ceremony(const CeremonyParams& p) {
  validate_group_parameters(p.groups, p.n, p.k);
  require(p.rsu_count >= 1, ErrorCode::kInvalidParameters, "need at least one rsu");
  Ceremony out;
  out.params = p;
  Rng rng(p.seed);
  out.kdc = make_kdc(generate_blum_modulus(p.bit_length, rng.next()), rng);
  out.groups = form_groups(p.groups, p.n, p.k, out.kdc.modulus.m, rng);
  for (std::size_t r = 0; r < p.rsu_count; ++r) {
    const auto id = static_cast<std::uint32_t>(r + 1);
    const BoxKeyPair box = BoxKeyPair::generate(rng);
    out.rsus.push_back(
        provision_rsu(out.kdc, out.groups, id, box, issue_certificate(out.kdc, id, box.public_key)));
  }
  for (const auto& g : out.groups) {
    for (std::size_t j = 0; j < p.obus_per_group; ++j) {
      std::uint64_t iv;
      do {
        iv = rng.next();
      } while (out.kdc.issued_ivs.contains(iv));
      out.obus.push_back(provision_obu(out.kdc, g, static_cast<std::uint32_t>(j + 1), iv));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON bundle. Integers are lowercase hex strings, byte strings hex too;
// nlohmann::ordered_json keeps key order, so dumps are canonical.

namespace json_io {

inline std::string hex(const BigInt& x) { return to_hex(x); }

template <std::size_t N>
inline std::array<std::uint8_t, N> fixed_bytes(const Json& j) {
  const Bytes b = hex_decode(j.get<std::string>());
  require(b.size() == N, ErrorCode::kFormatError, "fixed-size byte field has the wrong length");
  std::array<std::uint8_t, N> out{};
  std::copy(b.begin(), b.end(), out.begin());
  return out;
}

inline Json secrets(const std::vector<Secret>& v) {
  Json a = Json::array();
  for (const auto& s : v) a.push_back({{"value", hex(s.value)}, {"sign", s.sign}});
  return a;
}

inline std::vector<Secret> secrets_from(const Json& a) {
  std::vector<Secret> out;
  for (const auto& e : a) {
    const int sign = e.at("sign").get<int>();
    require(sign == 1 || sign == -1, ErrorCode::kFormatError, "secret sign must be +1 or -1");
    out.push_back({from_hex(e.at("value").get<std::string>()), sign});
  }
  return out;
}

inline Json integers(const std::vector<BigInt>& v) {
  Json a = Json::array();
  for (const auto& x : v) a.push_back(hex(x));
  return a;
}

inline std::vector<BigInt> integers_from(const Json& a) {
  std::vector<BigInt> out;
  for (const auto& e : a) out.push_back(from_hex(e.get<std::string>()));
  return out;
}

}  // namespace json_io

inline Json to_json(const Certificate& c) {
  return {{"subject", c.subject},
          {"public_key", hex_encode(c.public_key)},
          {"issuer", c.issuer},
          {"valid_from_us", c.valid_from_us},
          {"valid_until_us", c.valid_until_us},
          {"signature", hex_encode(c.signature)}};
}

inline Certificate certificate_from_json(const Json& j) {
  Certificate c;
  c.subject = j.at("subject").get<std::uint32_t>();
  c.public_key = json_io::fixed_bytes<32>(j.at("public_key"));
  c.issuer = j.at("issuer").get<std::string>();
  c.valid_from_us = j.at("valid_from_us").get<std::uint64_t>();
  c.valid_until_us = j.at("valid_until_us").get<std::uint64_t>();
  c.signature = hex_decode(j.at("signature").get<std::string>());
  return c;
}

inline Json to_json(const ObuCredential& c) {
  return {{"group_id", c.group_id},
          {"member_id", c.member_id},
          {"master_key", json_io::secrets(c.master_key)},
          {"pool_witnesses", json_io::integers(c.pool_witnesses)},
          {"iv", to_hex(c.iv)},
          {"counter", c.counter},
          {"modulus", to_hex(c.modulus)},
          {"kdc_root", hex_encode(c.kdc_root)},
          {"prf_key", hex_encode(c.prf_key)}};
}

inline ObuCredential obu_from_json(const Json& j) {
  ObuCredential c;
  c.group_id = j.at("group_id").get<std::uint32_t>();
  c.member_id = j.at("member_id").get<std::uint32_t>();
  c.master_key = json_io::secrets_from(j.at("master_key"));
  c.pool_witnesses = json_io::integers_from(j.at("pool_witnesses"));
  c.iv = static_cast<std::uint64_t>(from_hex(j.at("iv").get<std::string>()));
  c.counter = j.at("counter").get<std::uint64_t>();
  c.modulus = from_hex(j.at("modulus").get<std::string>());
  c.kdc_root = json_io::fixed_bytes<32>(j.at("kdc_root"));
  c.prf_key = hex_decode(j.at("prf_key").get<std::string>());
  return c;
}

inline Json to_json(const RsuCredential& c) {
  Json groups = Json::array();
  for (const auto& [id, g] : c.groups) {
    groups.push_back({{"group_id", id},
                      {"pool", json_io::secrets(g.pool)},
                      {"master_witnesses", json_io::integers(g.master_witnesses)}});
  }
  return {{"rsu_id", c.rsu_id},
          {"certificate", to_json(c.certificate)},
          {"box_private", hex_encode(c.box.private_key)},
          {"modulus", to_hex(c.modulus)},
          {"kdc_root", hex_encode(c.kdc_root)},
          {"prf_key", hex_encode(c.prf_key)},
          {"groups", groups}};
}

inline RsuCredential rsu_from_json(const Json& j) {
  RsuCredential c;
  c.rsu_id = j.at("rsu_id").get<std::uint32_t>();
  c.certificate = certificate_from_json(j.at("certificate"));
  c.box = BoxKeyPair::from_private(json_io::fixed_bytes<32>(j.at("box_private")));
  c.modulus = from_hex(j.at("modulus").get<std::string>());
  c.kdc_root = json_io::fixed_bytes<32>(j.at("kdc_root"));
  c.prf_key = hex_decode(j.at("prf_key").get<std::string>());
  for (const auto& g : j.at("groups")) {
    c.groups[g.at("group_id").get<std::uint32_t>()] =
        RsuGroupMaterial{json_io::secrets_from(g.at("pool")),
                         json_io::integers_from(g.at("master_witnesses"))};
  }
  return c;
}

inline Json to_json(const CeremonyParams& p) {
  return {{"groups", p.groups},       {"n", p.n},
          {"k", p.k},                 {"bit_length", p.bit_length},
          {"obus_per_group", p.obus_per_group}, {"rsu_count", p.rsu_count},
          {"seed", p.seed}};
}

inline CeremonyParams ceremony_params_from_json(const Json& j) {
  CeremonyParams p;
  p.groups = j.at("groups").get<std::size_t>();
  p.n = j.at("n").get<std::size_t>();
  p.k = j.at("k").get<std::size_t>();
  p.bit_length = j.at("bit_length").get<std::size_t>();
  p.obus_per_group = j.at("obus_per_group").get<std::size_t>();
  p.rsu_count = j.at("rsu_count").get<std::size_t>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

/// Provisioning bundle: KDC public data, the KDC private record (factors,
/// root seed, group specs) and every RSU / OBU credential.
inline Json bundle_to_json(const Ceremony& c) {
  Json groups = Json::array();
  for (const auto& g : c.groups) {
    groups.push_back({{"group_id", g.group_id},
                      {"pool", json_io::secrets(g.pool)},
                      {"master_key", json_io::secrets(g.master_key)}});
  }
  Json ivs = Json::array();
  for (auto iv : c.kdc.issued_ivs) ivs.push_back(to_hex(iv));
  Json rsus = Json::array();
  for (const auto& r : c.rsus) rsus.push_back(to_json(r));
  Json obus = Json::array();
  for (const auto& o : c.obus) obus.push_back(to_json(o));
  return {{"format", "agzkp-bundle"},
          {"version", kBundleFormatVersion},
          {"params", to_json(c.params)},
          {"kdc",
           {{"id", c.kdc.id},
            {"modulus", to_hex(c.kdc.modulus.m)},
            {"p", c.kdc.modulus.p ? to_hex(*c.kdc.modulus.p) : ""},
            {"q", c.kdc.modulus.q ? to_hex(*c.kdc.modulus.q) : ""},
            {"root_seed", hex_encode(c.kdc.root.seed)},
            {"root_public", hex_encode(c.kdc.root.public_key)},
            {"prf_key", hex_encode(c.kdc.prf_key)},
            {"issued_ivs", ivs},
            {"groups", groups}}},
          {"rsus", rsus},
          {"obus", obus}};
}

inline Ceremony bundle_from_json(const Json& j) {
  require(j.value("format", "") == "agzkp-bundle", ErrorCode::kFormatError, "not an agzkp bundle");
  require(j.value("version", 0) == kBundleFormatVersion, ErrorCode::kFormatError,
          "unsupported bundle version");
  Ceremony c;
  c.params = ceremony_params_from_json(j.at("params"));
  const Json& k = j.at("kdc");
  c.kdc.id = k.at("id").get<std::string>();
  c.kdc.modulus.m = from_hex(k.at("modulus").get<std::string>());
  c.kdc.modulus.bit_length = bit_length(c.kdc.modulus.m);
  if (!k.at("p").get<std::string>().empty()) c.kdc.modulus.p = from_hex(k.at("p").get<std::string>());
  if (!k.at("q").get<std::string>().empty()) c.kdc.modulus.q = from_hex(k.at("q").get<std::string>());
  c.kdc.root = SigningKey::from_seed(json_io::fixed_bytes<32>(k.at("root_seed")));
  c.kdc.prf_key = hex_decode(k.at("prf_key").get<std::string>());
  for (const auto& iv : k.at("issued_ivs")) {
    c.kdc.issued_ivs.insert(static_cast<std::uint64_t>(from_hex(iv.get<std::string>())));
  }
  const BigInt& m = c.kdc.modulus.m;
  for (const auto& g : k.at("groups")) {
    GroupSpec spec;
    spec.group_id = g.at("group_id").get<std::uint32_t>();
    spec.pool = json_io::secrets_from(g.at("pool"));
    spec.master_key = json_io::secrets_from(g.at("master_key"));
    spec.pool_witnesses = witnesses_of(spec.pool, m);
    spec.master_witnesses = witnesses_of(spec.master_key, m);
    c.groups.push_back(std::move(spec));
  }
  for (const auto& r : j.at("rsus")) c.rsus.push_back(rsu_from_json(r));
  for (const auto& o : j.at("obus")) c.obus.push_back(obu_from_json(o));
  return c;
}

}  // namespace agzkp
