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


// End-to-end tests of the agzkp command-line tool: exit codes, manifests,
// determinism and rerun.

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "agzkp/agzkp.hpp"

namespace fs = std::filesystem;
using agzkp::Json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + AGZKP_CLI_PATH + std::string(" ") + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Json manifest(const fs::path& dir) { return Json::parse(slurp(dir / "manifest.json")); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("agzkp_cli_test_" + std::to_string(::getpid())) / info->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_.parent_path()); }

  std::string d(const std::string& name) const { return (dir_ / name).string(); }

  std::string keygen(const std::string& name = "kg", const std::string& extra = "") {
    const auto r = run("keygen --out-dir " + d(name) + " " + extra);
    EXPECT_EQ(r.exit_code, 0) << r.out;
    return d(name) + "/bundle.json";
  }

  fs::path dir_;
};

TEST_F(CliTest, KeygenWritesCredentialsAndManifest) {
  keygen("kg", "--groups 3 --obus-per-group 2 --rsus 2 --seed 9");
  for (const char* f : {"bundle.json", "kdc_public.json", "rsu_1.json", "rsu_2.json", "obu_1_1.json",
                        "obu_3_2.json", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "kg" / f)) << f;
  }
  const Json m = manifest(dir_ / "kg");
  EXPECT_EQ(m["format"], "agzkp-manifest");
  EXPECT_EQ(m["artifact_version"], agzkp::kVersion);
  EXPECT_EQ(m["subcommand"], "keygen");
  EXPECT_EQ(m["seed"], 9);
  EXPECT_EQ(m["params"]["groups"], 3);
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_EQ(m["outputs"].size(), 10u);  // bundle, kdc, 2 rsus, 6 obus
  for (const auto& o : m["outputs"]) {
    const std::string data = slurp(dir_ / "kg" / o["path"].get<std::string>());
    EXPECT_EQ(data.size(), o["bytes"].get<std::size_t>());
    EXPECT_EQ(agzkp::hex_encode(agzkp::sha256(agzkp::ByteView(
                  reinterpret_cast<const std::uint8_t*>(data.data()), data.size()))),
              o["sha256"].get<std::string>());
  }
  // The bundle round-trips through the library.
  const auto c = agzkp::bundle_from_json(Json::parse(slurp(dir_ / "kg" / "bundle.json")));
  EXPECT_EQ(c.groups.size(), 3u);
  EXPECT_EQ(c.obus.size(), 6u);
}

TEST_F(CliTest, SameSeedSameOutputsDifferentSeedDifferentOutputs) {
  keygen("a", "--seed 4");
  keygen("b", "--seed 4");
  keygen("c", "--seed 5");
  EXPECT_EQ(manifest(dir_ / "a")["outputs"], manifest(dir_ / "b")["outputs"]);
  EXPECT_NE(manifest(dir_ / "a")["outputs"], manifest(dir_ / "c")["outputs"]);
}

TEST_F(CliTest, SeedComesFromEnvironmentWhenNotGiven) {
  ASSERT_EQ(run("keygen --out-dir " + d("env"), "AGZKP_SEED=77").exit_code, 0);
  EXPECT_EQ(manifest(dir_ / "env")["seed"], 77);
  ASSERT_EQ(run("keygen --seed 3 --out-dir " + d("flag"), "AGZKP_SEED=77").exit_code, 0);
  EXPECT_EQ(manifest(dir_ / "flag")["seed"], 3);
  EXPECT_EQ(run("keygen --out-dir " + d("bad"), "AGZKP_SEED=abc").exit_code, 2);
}

TEST_F(CliTest, AuthDemoAcceptsAnHonestObu) {
  const std::string bundle = keygen();
  const auto r = run("auth-demo --bundle " + bundle + " --alpha 2 --mu 4 --h 3 --out-dir " + d("ad"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("Accepted"), std::string::npos);
  const Json res = Json::parse(slurp(dir_ / "ad" / "result.json"));
  EXPECT_EQ(res["outcome"], "Accepted");
  EXPECT_GE(res["verified_count"].get<int>(), 2);
  EXPECT_TRUE(res["offline_reverification_consistent"].get<bool>());
  EXPECT_GT(fs::file_size(dir_ / "ad" / "transcript.bin"), 0u);
  // The OBU counter advanced and the bundle was hashed as an input.
  const Json after = Json::parse(slurp(dir_ / "ad" / "obu_after.json"));
  const Json before = Json::parse(slurp(dir_ / "kg" / "obu_1_1.json"));
  EXPECT_NE(after["counter"], before["counter"]);
  EXPECT_EQ(manifest(dir_ / "ad")["inputs"].size(), 1u);
}

TEST_F(CliTest, AuthDemoHardenedVariant) {
  const std::string bundle = keygen();
  const auto r = run("auth-demo --bundle " + bundle + " --variant hardened --out-dir " + d("ad"));
  EXPECT_EQ(r.exit_code, 0) << r.out;
}

TEST_F(CliTest, AuthDemoExitCodes) {
  const std::string bundle = keygen();
  EXPECT_EQ(run("auth-demo --bundle " + bundle + " --revoked-iv self --out-dir " + d("r")).exit_code, 3);
  EXPECT_EQ(Json::parse(slurp(dir_ / "r" / "result.json"))["outcome"], "RejectedRevoked");
  EXPECT_EQ(run("auth-demo --bundle " + bundle + " --alpha 4 --mu 3 --out-dir " + d("p")).exit_code, 2);
  EXPECT_EQ(run("auth-demo --bundle " + bundle + " --alpha 6 --mu 6 --out-dir " + d("p")).exit_code, 2);
  EXPECT_EQ(run("auth-demo --bundle " + bundle + " --variant fancy --out-dir " + d("p")).exit_code, 2);
  EXPECT_EQ(run("auth-demo --bundle " + bundle + " --obu 99 --out-dir " + d("p")).exit_code, 2);
  EXPECT_EQ(run("auth-demo --bundle " + d("missing.json") + " --out-dir " + d("p")).exit_code, 2);
  EXPECT_EQ(run("auth-demo --out-dir " + d("p")).exit_code, 2);  // --bundle is required
  EXPECT_EQ(run("auth-demo --bundle " + bundle + " --transcript-out ../escape.bin --out-dir " + d("p")).exit_code,
            2);
  EXPECT_FALSE(fs::exists(dir_ / "escape.bin"));
}

TEST_F(CliTest, ParseErrorsAndVersion) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("no-such-command").exit_code, 2);
  EXPECT_EQ(run("keygen --no-such-flag").exit_code, 2);
  EXPECT_EQ(run("keygen --n notanumber").exit_code, 2);
  EXPECT_EQ(run("keygen --n 3 --k 5 --out-dir " + d("x")).exit_code, 2);
  const auto v = run("--version");
  EXPECT_EQ(v.exit_code, 0);
  EXPECT_NE(v.out.find(agzkp::kVersion), std::string::npos);
  EXPECT_EQ(run("--help").exit_code, 0);
}

TEST_F(CliTest, CheaterAndBundleAttacks) {
  auto r = run("attack cheater --k 2 --h 2 --trials 20000 --out-dir " + d("c"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  std::string csv = slurp(dir_ / "c" / "attack.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), agzkp::attack_csv_header());
  EXPECT_NE(csv.find("cheater,20000,"), std::string::npos);
  r = run("attack bundle --trials 20000 --out-dir " + d("b"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(slurp(dir_ / "b" / "attack.csv").find("bundle-cheater-set-blind,20000,"), std::string::npos);
  EXPECT_EQ(run("attack cheater --k 0 --out-dir " + d("z")).exit_code, 2);
  EXPECT_EQ(run("attack --out-dir " + d("z")).exit_code, 2);
}

TEST_F(CliTest, RecordAndReplayAttack) {
  auto r = run("attack record --out-dir " + d("rec"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const Json rec = Json::parse(slurp(dir_ / "rec" / "record.json"));
  EXPECT_TRUE(rec["complete"].get<bool>());
  EXPECT_EQ(rec["simulators"], 6);  // C(4, 2)
  EXPECT_EQ(rec["memory_modeled_bytes"], agzkp::simulator_memory_cost(4, 2).str());
  EXPECT_GT(fs::file_size(dir_ / "rec" / "corpus.bin"), 0u);

  r = run("attack simulate --sessions 100 --out-dir " + d("sim"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const Json s = Json::parse(slurp(dir_ / "sim" / "summary.json"));
  EXPECT_DOUBLE_EQ(s["replay_frequency"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(s["control_frequency"].get<double>(), 0.0);
  EXPECT_FALSE(s["chance_level"].get<bool>());
}

TEST_F(CliTest, InfeasibleAttacksExitFour) {
  auto r = run("attack record --n 30 --k 5 --out-dir " + d("big"));
  EXPECT_EQ(r.exit_code, 4) << r.out;
  EXPECT_FALSE(Json::parse(slurp(dir_ / "big" / "record.json"))["feasible"].get<bool>());
  // An observation budget too small to complete the simulators.
  r = run("attack record --batch 1 --max-sessions 2 --out-dir " + d("short"));
  EXPECT_EQ(r.exit_code, 4) << r.out;
}

TEST_F(CliTest, AnalyzeWritesFiguresAndReports) {
  auto r = run("analyze --figure all --out-dir " + d("a"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  for (const auto& id : agzkp::figure_ids()) {
    EXPECT_EQ(slurp(dir_ / "a" / ("figure_" + id + ".csv")), agzkp::figure_csv(agzkp::figure_series(id)));
  }
  EXPECT_EQ(slurp(dir_ / "a" / "monotonicity.csv").find(",false,"), std::string::npos);
  r = run("analyze --figure 12 --reports --trials 5000 --out-dir " + d("b"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(fs::exists(dir_ / "b" / "figure_12.csv"));
  EXPECT_FALSE(fs::exists(dir_ / "b" / "figure_11.csv"));
  EXPECT_EQ(slurp(dir_ / "b" / "reports.csv"), agzkp::reports_csv(agzkp::standard_reports(5000, 1)));
  EXPECT_EQ(run("analyze --figure 9 --out-dir " + d("c")).exit_code, 2);
}

TEST_F(CliTest, SimulateWithConfigFileAndOverrides) {
  {
    std::ofstream cfg(dir_ / "sim.cfg");
    cfg << "# small network\nrsu_count = 3\nduration_s = 10\n";
  }
  auto r = run("simulate --config " + d("sim.cfg") + " --set obus_per_rsu=4 --sweep load --values 5 10 --out-dir " +
               d("s"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const auto cfg = agzkp::parse_sim_config(slurp(dir_ / "s" / "sim_config.txt"));
  EXPECT_EQ(cfg.rsu_count, 3u);
  EXPECT_EQ(cfg.obus_per_rsu, 4u);
  const std::string csv = slurp(dir_ / "s" / "load_sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 7);  // header + 2 values x 3 alphas
  EXPECT_EQ(Json::parse(slurp(dir_ / "s" / "cells.json")).size(), 6u);
  EXPECT_EQ(manifest(dir_ / "s")["inputs"].size(), 1u);

  EXPECT_EQ(run("simulate --set nonsense=1 --out-dir " + d("x")).exit_code, 2);
  EXPECT_EQ(run("simulate --set rsu_count --out-dir " + d("x")).exit_code, 2);
  EXPECT_EQ(run("simulate --set speed_mps=-3 --out-dir " + d("x")).exit_code, 2);
  EXPECT_EQ(run("simulate --sweep sideways --out-dir " + d("x")).exit_code, 2);
  EXPECT_EQ(run("simulate --config " + d("absent.cfg") + " --out-dir " + d("x")).exit_code, 2);
}

TEST_F(CliTest, RevokeDemoDeniesTheRevokedObuOnly) {
  const auto r = run("revoke-demo --drift 5 --out-dir " + d("rv"));
  ASSERT_EQ(r.exit_code, 0) << r.out;
  const std::string steps = slurp(dir_ / "rv" / "steps.csv");
  EXPECT_NE(steps.find("RejectedRevoked"), std::string::npos);
  EXPECT_EQ(std::count(steps.begin(), steps.end(), '\n'), 1 + 5 + 3);
  EXPECT_FALSE(Json::parse(slurp(dir_ / "rv" / "revocation_state.json")).empty());
}

TEST_F(CliTest, RerunReproducesOutputs) {
  const std::string bundle = keygen();
  ASSERT_EQ(run("auth-demo --bundle " + bundle + " --out-dir " + d("ad")).exit_code, 0);
  auto r = run("rerun --manifest " + d("ad") + "/manifest.json --out-dir " + d("ad2"));
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("bit-identically"), std::string::npos);
  EXPECT_EQ(manifest(dir_ / "ad")["outputs"], manifest(dir_ / "ad2")["outputs"]);
  // A rejected run reruns to the same exit code.
  ASSERT_EQ(run("auth-demo --bundle " + bundle + " --revoked-iv self --out-dir " + d("rj")).exit_code, 3);
  EXPECT_EQ(run("rerun --manifest " + d("rj") + "/manifest.json --out-dir " + d("rj2")).exit_code, 0);
}

TEST_F(CliTest, RerunDetectsChangedInputsAndBadManifests) {
  const std::string bundle = keygen();
  ASSERT_EQ(run("auth-demo --bundle " + bundle + " --out-dir " + d("ad")).exit_code, 0);
  { std::ofstream(bundle, std::ios::app) << "\n"; }
  const auto r = run("rerun --manifest " + d("ad") + "/manifest.json --out-dir " + d("ad2"));
  EXPECT_EQ(r.exit_code, 1) << r.out;
  EXPECT_NE(r.out.find("input changed"), std::string::npos);
  EXPECT_EQ(run("rerun --manifest " + bundle + " --out-dir " + d("x")).exit_code, 2);
  EXPECT_EQ(run("rerun --manifest " + d("nothing.json") + " --out-dir " + d("x")).exit_code, 2);
  EXPECT_EQ(run("rerun --manifest " + d("ad") + "/manifest.json --out-dir " + d("ad")).exit_code, 2);
}

}  // namespace
