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


#include <set>

#include "agzkp/keymgmt.hpp"
#include "test_support.hpp"

namespace agzkp {
namespace {

TEST(KeyMgmt, GroupParametersValidated) {
  EXPECT_AGZKP_ERROR(validate_group_parameters(0, 10, 2), ErrorCode::kInvalidParameters);
  EXPECT_AGZKP_ERROR(validate_group_parameters(1, 10, 0), ErrorCode::kInvalidParameters);
  EXPECT_AGZKP_ERROR(validate_group_parameters(1, 4, 4), ErrorCode::kInvalidParameters);
  EXPECT_NO_THROW(validate_group_parameters(1, 5, 4));
}

TEST(KeyMgmt, GroupsAreIndependentAndWitnessesMatch) {
  Rng rng(7);
  const BlumModulus bm = generate_blum_modulus(64, 3);
  const auto groups = form_groups(3, 12, 3, bm.m, rng);
  ASSERT_EQ(groups.size(), 3u);
  std::set<BigInt> values;
  for (const auto& g : groups) {
    EXPECT_EQ(g.n(), 12u);
    EXPECT_EQ(g.k(), 3u);
    for (std::size_t i = 0; i < g.n(); ++i) {
      EXPECT_EQ(g.pool_witnesses[i], g.pool[i].witness(bm.m));
      EXPECT_TRUE(is_unit(g.pool[i].value, bm.m));
      values.insert(g.pool[i].value);
    }
    for (std::size_t i = 0; i < g.k(); ++i) {
      EXPECT_EQ(g.master_witnesses[i], g.master_key[i].witness(bm.m));
      values.insert(g.master_key[i].value);
    }
  }
  EXPECT_EQ(values.size(), 3u * 15u);  // no accidental sharing across groups
}

TEST(KeyMgmt, ObuHoldsNoPoolSecretsRsuHoldsNoMasterSecrets) {
  const Ceremony c = run_ceremony(CeremonyParams{});
  const auto& obu = c.obus.front();
  const auto& g = c.groups.at(obu.group_id - 1);
  EXPECT_EQ(obu.master_key, g.master_key);
  EXPECT_EQ(obu.pool_witnesses, g.pool_witnesses);
  const auto& rsu = c.rsus.front();
  ASSERT_EQ(rsu.groups.size(), c.groups.size());
  EXPECT_EQ(rsu.groups.at(obu.group_id).pool, g.pool);
  EXPECT_EQ(rsu.groups.at(obu.group_id).master_witnesses, g.master_witnesses);
  // The bundle types simply carry no field for the other side's secrets.
  EXPECT_FALSE(rsu.modulus == 0);
}

TEST(KeyMgmt, DuplicateIvRejected) {
  Ceremony c = run_ceremony(CeremonyParams{});
  const std::uint64_t iv = c.obus.front().iv;
  EXPECT_AGZKP_ERROR(provision_obu(c.kdc, c.groups.front(), 99, iv), ErrorCode::kDuplicateIv);
  std::set<std::uint64_t> ivs;
  for (const auto& o : c.obus) ivs.insert(o.iv);
  EXPECT_EQ(ivs.size(), c.obus.size());
}

TEST(KeyMgmt, CertificatesVerifyAndDetectTampering) {
  const Ceremony c = run_ceremony(CeremonyParams{});
  const Certificate& cert = c.rsus.front().certificate;
  EXPECT_TRUE(verify_certificate(cert, c.kdc.root.public_key, 10));
  Certificate forged = cert;
  forged.subject += 1;
  EXPECT_FALSE(verify_certificate(forged, c.kdc.root.public_key, 10));
  EXPECT_FALSE(verify_certificate(cert, c.kdc.root.public_key, cert.valid_until_us + 1));
  Rng rng(1);
  const SigningKey other = SigningKey::generate(rng);
  EXPECT_FALSE(verify_certificate(cert, other.public_key, 10));
}

TEST(KeyMgmt, ProvisionRsuChecksCertificateBinding) {
  Ceremony c = run_ceremony(CeremonyParams{});
  Rng rng(5);
  const BoxKeyPair box = BoxKeyPair::generate(rng);
  const Certificate cert = issue_certificate(c.kdc, 9, box.public_key);
  EXPECT_NO_THROW(provision_rsu(c.kdc, c.groups, 9, box, cert));
  EXPECT_AGZKP_ERROR(provision_rsu(c.kdc, c.groups, 8, box, cert), ErrorCode::kBadCertificate);
  const BoxKeyPair other = BoxKeyPair::generate(rng);
  EXPECT_AGZKP_ERROR(provision_rsu(c.kdc, c.groups, 9, other, cert), ErrorCode::kBadCertificate);
}

TEST(KeyMgmt, CeremonyIsDeterministic) {
  CeremonyParams p;
  p.seed = 42;
  const Json a = bundle_to_json(run_ceremony(p));
  const Json b = bundle_to_json(run_ceremony(p));
  EXPECT_EQ(a.dump(), b.dump());
  p.seed = 43;
  EXPECT_NE(a.dump(), bundle_to_json(run_ceremony(p)).dump());
}

TEST(KeyMgmt, BundleRoundTrip) {
  CeremonyParams p;
  p.groups = 3;
  p.n = 8;
  p.k = 3;
  p.rsu_count = 2;
  p.seed = 11;
  const Ceremony c = run_ceremony(p);
  const Json j = bundle_to_json(c);
  const Ceremony back = bundle_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(back.groups, c.groups);
  EXPECT_EQ(back.obus, c.obus);
  ASSERT_EQ(back.rsus.size(), c.rsus.size());
  for (std::size_t i = 0; i < c.rsus.size(); ++i) EXPECT_TRUE(back.rsus[i] == c.rsus[i]);
  EXPECT_EQ(back.kdc.issued_ivs, c.kdc.issued_ivs);
  EXPECT_EQ(bundle_to_json(back).dump(), j.dump());
}

TEST(KeyMgmt, BundleRejectsWrongFormat) {
  Json j = bundle_to_json(run_ceremony(CeremonyParams{}));
  j["format"] = "something-else";
  EXPECT_AGZKP_ERROR(bundle_from_json(j), ErrorCode::kFormatError);
}

TEST(KeyMgmt, PropertyCredentialsJsonRoundTrip) {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    CeremonyParams p;
    p.seed = seed;
    p.n = 5 + seed % 7;
    p.k = 1 + seed % 4;
    const Ceremony c = run_ceremony(p);
    for (const auto& o : c.obus) EXPECT_EQ(obu_from_json(to_json(o)), o);
    for (const auto& r : c.rsus) EXPECT_TRUE(rsu_from_json(to_json(r)) == r);
  }
}

}  // namespace
}  // namespace agzkp
