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


// agzkp: key ceremony, demo sessions, attacks, analysis, revocation demo
// and simulation, each run recorded in a manifest that reproduces it.
//
// Exit codes: 0 success, 1 internal or I/O failure (and rerun mismatch),
// 2 parameter error, 3 session rejected or OBU revoked, 4 attack infeasible.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "agzkp/agzkp.hpp"

namespace fs = std::filesystem;
using agzkp::Json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitParameter = 2;
constexpr int kExitRejected = 3;
constexpr int kExitInfeasible = 4;

/// Bad command-line input detected by the tool itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(agzkp::ErrorCode code) {
  using agzkp::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidParameters:
    case ErrorCode::kDegenerateParameters:
    case ErrorCode::kUnsupportedAlpha:
    case ErrorCode::kTooManyProofsRequested:
    case ErrorCode::kParameterOverflow:
    case ErrorCode::kUnknownFigure:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kDuplicateIv:
    case ErrorCode::kFormatError:
    case ErrorCode::kChallengeLengthMismatch:
      return kExitParameter;
    default:
      return kExitFailure;
  }
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw UsageError("cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_hex(std::string_view data) {
  const auto d = agzkp::sha256(agzkp::ByteView(reinterpret_cast<const std::uint8_t*>(data.data()), data.size()));
  return agzkp::hex_encode(d);
}

/// Every file a command produces goes through here, so nothing is written
/// outside the declared output directory and every output is hashed.
class OutDir {
 public:
  explicit OutDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  void write(const std::string& name, std::string_view data) {
    const fs::path rel(name);
    if (rel.empty() || rel.is_absolute() || rel.has_root_name()) {
      throw UsageError("output name must be a relative path: " + name);
    }
    for (const auto& part : rel) {
      if (part == "..") throw UsageError("output name must stay inside the output directory: " + name);
    }
    const fs::path full = root_ / rel;
    if (full.has_parent_path()) fs::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("cannot write " + full.string());
    outputs_.push_back({{"path", rel.generic_string()}, {"sha256", sha256_hex(data)}, {"bytes", data.size()}});
  }

  void write(const std::string& name, const agzkp::Bytes& data) {
    write(name, std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
  }

  const fs::path& root() const { return root_; }
  const Json& outputs() const { return outputs_; }

 private:
  fs::path root_;
  Json outputs_ = Json::array();
};

/// Inputs read by a command, recorded by content hash.
struct Inputs {
  Json list = Json::array();

  std::string read(const std::string& path) {
    const std::string data = read_file(path);
    list.push_back({{"path", fs::absolute(path).lexically_normal().generic_string()},
                    {"sha256", sha256_hex(data)}});
    return data;
  }
};

agzkp::Variant parse_variant(const std::string& s) {
  if (s == "basic") return agzkp::Variant::kBasic;
  if (s == "hardened") return agzkp::Variant::kHardened;
  throw UsageError("variant must be basic or hardened, not " + s);
}

std::string csv_lines(const std::string& header, const std::vector<std::string>& rows) {
  std::string out = header + "\n";
  for (const auto& r : rows) out += r + "\n";
  return out;
}

template <typename T>
T get(const Json& p, const char* key) {
  return p.at(key).get<T>();
}

using Command = std::function<int(const Json& params, OutDir& out, Inputs& in)>;

// ---------------------------------------------------------------------------
// keygen

int cmd_keygen(const Json& p, OutDir& out, Inputs&) {
  agzkp::CeremonyParams cp;
  cp.groups = get<std::size_t>(p, "groups");
  cp.n = get<std::size_t>(p, "n");
  cp.k = get<std::size_t>(p, "k");
  cp.bit_length = get<std::size_t>(p, "bit_length");
  cp.obus_per_group = get<std::size_t>(p, "obus_per_group");
  cp.rsu_count = get<std::size_t>(p, "rsus");
  cp.seed = get<std::uint64_t>(p, "seed");
  const agzkp::Ceremony c = agzkp::run_ceremony(cp);
  out.write("bundle.json", agzkp::bundle_to_json(c).dump(2) + "\n");
  const Json pub = {{"modulus", agzkp::to_hex(c.kdc.modulus.m)},
                    {"root_public", agzkp::hex_encode(c.kdc.root.public_key)},
                    {"params", agzkp::to_json(cp)}};
  out.write("kdc_public.json", pub.dump(2) + "\n");
  for (const auto& r : c.rsus) {
    out.write("rsu_" + std::to_string(r.rsu_id) + ".json", agzkp::to_json(r).dump(2) + "\n");
  }
  for (const auto& o : c.obus) {
    out.write("obu_" + std::to_string(o.group_id) + "_" + std::to_string(o.member_id) + ".json",
              agzkp::to_json(o).dump(2) + "\n");
  }
  std::cout << "ceremony: " << c.groups.size() << " groups, " << c.rsus.size() << " rsus, "
            << c.obus.size() << " obus, modulus " << c.kdc.modulus.bit_length << " bits\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// auth-demo

agzkp::SessionConfig session_config_of(const Json& p) {
  agzkp::SessionConfig cfg;
  cfg.alpha = get<int>(p, "alpha");
  cfg.mu = get<int>(p, "mu");
  cfg.h = get<int>(p, "h");
  cfg.serv_id = get<std::string>(p, "serv_id");
  cfg.variant = parse_variant(get<std::string>(p, "variant"));
  return cfg;
}

int cmd_auth_demo(const Json& p, OutDir& out, Inputs& in) {
  agzkp::Ceremony c = agzkp::bundle_from_json(Json::parse(in.read(get<std::string>(p, "bundle"))));
  const auto obu_index = get<std::size_t>(p, "obu");
  const auto rsu_index = get<std::size_t>(p, "rsu");
  if (obu_index >= c.obus.size()) throw UsageError("--obu out of range");
  if (rsu_index >= c.rsus.size()) throw UsageError("--rsu out of range");
  agzkp::ObuCredential obu = c.obus[obu_index];
  const agzkp::SessionConfig cfg = session_config_of(p);
  cfg.validate(obu.n(), obu.k());  // parameter errors surface before any session

  const auto seed = get<std::uint64_t>(p, "seed");
  agzkp::RsuOptions opt;
  opt.seed = seed;
  agzkp::RsuEndpoint rsu(c.rsus[rsu_index], opt);
  const std::string revoked = get<std::string>(p, "revoked_iv");
  if (!revoked.empty()) {
    const std::uint64_t iv =
        revoked == "self" ? obu.iv : static_cast<std::uint64_t>(agzkp::from_hex(revoked));
    agzkp::broadcast_revocation(iv, 0, "injected by auth-demo", {&rsu.revocation_table()});
  }
  agzkp::Rng rng(seed);
  const agzkp::SessionRun run = agzkp::run_full_session(obu, rsu, cfg, rng);
  const agzkp::AuthResult& res = run.result;
  out.write(get<std::string>(p, "transcript_out"), agzkp::encode_wire_log(run.log));
  Json result = {{"outcome", std::string(agzkp::to_string(res.outcome))},
                 {"verified_count", res.verified_count},
                 {"alpha", cfg.alpha},
                 {"mu", cfg.mu},
                 {"h", cfg.h},
                 {"serv_id", cfg.serv_id},
                 {"variant", std::string(agzkp::to_string(cfg.variant))},
                 {"error", res.error ? std::string(agzkp::to_string(*res.error)) : ""},
                 {"detail", res.detail},
                 {"frames", run.log.size()},
                 {"sets", Json::array()}};
  for (const auto& s : run.record.sets) result["sets"].push_back(s);
  const agzkp::Reverification rv = agzkp::reverify_session(
      run.record, obu.modulus, c.rsus[rsu_index].groups.at(obu.group_id).master_witnesses,
      obu.pool_witnesses);
  result["offline_reverification_consistent"] = rv.consistent;
  out.write("result.json", result.dump(2) + "\n");
  out.write("obu_after.json", agzkp::to_json(obu).dump(2) + "\n");
  std::cout << "outcome: " << agzkp::to_string(res.outcome) << "\nverified_count: " << res.verified_count
            << "\n";
  if (res.error) std::cout << "error: " << agzkp::to_string(*res.error) << " (" << res.detail << ")\n";
  return res.accepted() ? kExitOk : kExitRejected;
}

// ---------------------------------------------------------------------------
// attack

int cmd_attack_cheater(const Json& p, OutDir& out, Inputs&) {
  agzkp::CheaterConfig cfg;
  cfg.k = get<std::size_t>(p, "k");
  cfg.h = get<std::size_t>(p, "h");
  cfg.trials = get<std::uint64_t>(p, "trials");
  cfg.bit_length = get<std::size_t>(p, "bit_length");
  cfg.oracle = get<bool>(p, "oracle");
  cfg.seed = get<std::uint64_t>(p, "seed");
  const agzkp::AttackReport r = agzkp::run_cheater_experiment(cfg);
  out.write("attack.csv", csv_lines(agzkp::attack_csv_header(), {agzkp::attack_csv_row(r)}));
  std::cout << r.kind << ": " << r.successes << "/" << r.trials << " = " << agzkp::format_double(r.frequency())
            << " (closed form " << agzkp::format_double(r.closed_form) << ")\n";
  return kExitOk;
}

int cmd_attack_bundle(const Json& p, OutDir& out, Inputs&) {
  agzkp::BundleCheatConfig cfg;
  cfg.k = get<std::size_t>(p, "k");
  cfg.h = get<std::size_t>(p, "h");
  cfg.n = get<std::size_t>(p, "n");
  cfg.mu = get<int>(p, "mu");
  cfg.alpha = get<int>(p, "alpha");
  cfg.set_blind = !get<bool>(p, "informed");
  cfg.trials = get<std::uint64_t>(p, "trials");
  cfg.bit_length = get<std::size_t>(p, "bit_length");
  cfg.seed = get<std::uint64_t>(p, "seed");
  const agzkp::AttackReport r = agzkp::run_bundle_cheat_experiment(cfg);
  out.write("attack.csv", csv_lines(agzkp::attack_csv_header(), {agzkp::attack_csv_row(r)}));
  std::cout << r.kind << ": " << r.successes << "/" << r.trials << " = " << agzkp::format_double(r.frequency())
            << " (closed form " << agzkp::format_double(r.closed_form) << ")\n";
  return kExitOk;
}

struct RecordedAttack {
  agzkp::Ceremony ceremony;
  agzkp::Recording recording;
};

/// An eavesdropper with the round plaintext records honest sessions of a
/// small group until every set has a complete simulator.
RecordedAttack record_phase(const Json& p) {
  agzkp::CeremonyParams cp;
  cp.groups = 1;
  cp.n = get<std::size_t>(p, "n");
  cp.k = get<std::size_t>(p, "k");
  cp.bit_length = get<std::size_t>(p, "bits");
  cp.obus_per_group = 2;
  cp.rsu_count = 1;
  cp.seed = get<std::uint64_t>(p, "seed");
  RecordedAttack out{agzkp::run_ceremony(cp), {}};
  agzkp::SessionConfig cfg;
  cfg.alpha = 1;
  cfg.mu = get<int>(p, "record_mu");
  cfg.h = get<int>(p, "record_h");
  cfg.variant = parse_variant(get<std::string>(p, "variant"));
  agzkp::RsuOptions opt;
  opt.seed = agzkp::splitmix64(cp.seed ^ 0x7265636f7264ULL);
  agzkp::RsuEndpoint rsu(out.ceremony.rsus.front(), opt);
  agzkp::Rng rng(agzkp::splitmix64(cp.seed + 1));
  out.recording = agzkp::record_simulators(out.ceremony.obus, rsu, cfg, agzkp::TapLevel::kRoundPlaintext,
                                           get<std::size_t>(p, "batch"),
                                           get<std::size_t>(p, "max_sessions"), rng);
  return out;
}

/// Memory gate: refuses attacks whose simulators exceed the budget.
bool memory_feasible(const Json& p, Json& summary) {
  const agzkp::BigInt need = agzkp::simulator_memory_cost(get<std::size_t>(p, "n"), get<std::size_t>(p, "k"));
  const agzkp::BigInt budget(get<std::uint64_t>(p, "memory_budget"));
  summary["memory_modeled_bytes"] = need.str();
  summary["memory_budget_bytes"] = budget.str();
  summary["feasible"] = need <= budget;
  if (need > budget) {
    std::cout << "attack infeasible: simulators need " << need.str() << " bytes, budget " << budget.str()
              << "\n";
  }
  return need <= budget;
}

Json recording_summary(const agzkp::Recording& rec) {
  return {{"sessions_observed", rec.observation.sessions},
          {"frames_seen", rec.observation.frames_seen},
          {"rounds_recorded", rec.observation.corpus.size()},
          {"simulators", rec.build.matrices.size()},
          {"complete", rec.complete},
          {"mean_coverage", rec.build.mean_coverage()}};
}

int cmd_attack_record(const Json& p, OutDir& out, Inputs&) {
  Json summary;
  if (!memory_feasible(p, summary)) {
    out.write("record.json", summary.dump(2) + "\n");
    return kExitInfeasible;
  }
  const RecordedAttack ra = record_phase(p);
  summary.update(recording_summary(ra.recording));
  std::uint64_t measured = 0;
  for (const auto& [ids, m] : ra.recording.build.matrices) measured += m.packed_bytes();
  summary["memory_measured_bytes"] = measured;
  out.write("corpus.bin", agzkp::encode_corpus(ra.recording.observation.corpus));
  out.write("record.json", summary.dump(2) + "\n");
  std::cout << "recorded " << ra.recording.observation.corpus.size() << " rounds from "
            << ra.recording.observation.sessions << " sessions; simulators "
            << (ra.recording.complete ? "complete" : "incomplete") << "\n";
  return ra.recording.complete ? kExitOk : kExitInfeasible;
}

int cmd_attack_simulate(const Json& p, OutDir& out, Inputs&) {
  Json summary;
  if (!memory_feasible(p, summary)) {
    out.write("summary.json", summary.dump(2) + "\n");
    return kExitInfeasible;
  }
  const RecordedAttack ra = record_phase(p);
  summary.update(recording_summary(ra.recording));
  agzkp::SimulatorAttackConfig cfg;
  cfg.session = session_config_of(p);
  cfg.sessions = get<std::size_t>(p, "sessions");
  cfg.seed = get<std::uint64_t>(p, "seed");
  const auto& matrices = ra.recording.build.matrices;
  const agzkp::AttackReport replay =
      agzkp::simulator_attack(matrices, ra.ceremony.rsus.front(), ra.ceremony.obus.front(), cfg);
  cfg.random_response_control = true;
  const agzkp::AttackReport control =
      agzkp::simulator_attack(matrices, ra.ceremony.rsus.front(), ra.ceremony.obus.front(), cfg);
  // The verdict compares session success with the control; the per-round
  // comparison is a diagnostic (tiny moduli make polynomial products collide
  // more often than uniformly random responses do).
  const double z = agzkp::two_proportion_z(replay.successes, replay.trials, control.successes, control.trials);
  const double round_z = agzkp::two_proportion_z(replay.rounds_accepted, replay.rounds_attempted,
                                                 control.rounds_accepted, control.rounds_attempted);
  summary["replay_frequency"] = replay.frequency();
  summary["control_frequency"] = control.frequency();
  summary["session_z"] = z;
  summary["chance_level"] = std::abs(z) <= 3.0;
  summary["replay_round_frequency"] = replay.round_frequency();
  summary["control_round_frequency"] = control.round_frequency();
  summary["round_z"] = round_z;
  out.write("attack.csv", csv_lines(agzkp::attack_csv_header(),
                                    {agzkp::attack_csv_row(replay), agzkp::attack_csv_row(control)}));
  out.write("summary.json", summary.dump(2) + "\n");
  std::cout << replay.kind << ": sessions " << replay.successes << "/" << replay.trials << " = "
            << agzkp::format_double(replay.frequency()) << ", rounds "
            << agzkp::format_double(replay.round_frequency()) << "\n"
            << control.kind << ": sessions " << control.successes << "/" << control.trials << " = "
            << agzkp::format_double(control.frequency()) << ", rounds "
            << agzkp::format_double(control.round_frequency()) << "\n"
            << "replay vs control: session z = " << agzkp::format_double(z)
            << (std::abs(z) <= 3.0 ? " (chance level)" : " (replay beats chance)")
            << ", round z = " << agzkp::format_double(round_z) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const Json& p, OutDir& out, Inputs&) {
  const std::string figure = get<std::string>(p, "figure");
  std::vector<std::string> ids;
  if (figure == "all") ids = agzkp::figure_ids();
  else if (figure != "none") ids = {figure};
  for (const auto& id : ids) {
    out.write("figure_" + id + ".csv", agzkp::figure_csv(agzkp::figure_series(id)));
  }
  std::vector<std::string> rows;
  bool all_hold = true;
  for (const auto& c : agzkp::monotonicity_suite()) {
    rows.push_back("\"" + c.claim + "\"," + (c.holds ? "true" : "false") + "," + std::to_string(c.comparisons));
    all_hold = all_hold && c.holds;
  }
  out.write("monotonicity.csv", csv_lines("claim,holds,comparisons", rows));
  std::cout << "figures: " << ids.size() << ", monotonicity suite " << (all_hold ? "holds" : "VIOLATED") << "\n";
  if (get<bool>(p, "reports")) {
    const auto reports = agzkp::standard_reports(get<std::uint64_t>(p, "trials"), get<std::uint64_t>(p, "seed"));
    out.write("reports.csv", agzkp::reports_csv(reports));
    std::size_t passing = 0;
    for (const auto& r : reports) passing += r.pass();
    std::cout << "reports: " << passing << "/" << reports.size() << " pass at 3 sigma\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// simulate

agzkp::SimConfig sim_config_of(const Json& p, Inputs& in) {
  agzkp::SimConfig cfg;
  const std::string path = get<std::string>(p, "config");
  if (!path.empty()) cfg = agzkp::parse_sim_config(in.read(path));
  for (const auto& kv : p.at("set")) {
    const std::string s = kv.get<std::string>();
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + s);
    agzkp::apply_config_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.seed = get<std::uint64_t>(p, "seed");
  cfg.validate();
  return cfg;
}

int cmd_simulate(const Json& p, OutDir& out, Inputs& in) {
  const agzkp::SimConfig cfg = sim_config_of(p, in);
  const std::string sweep = get<std::string>(p, "sweep");
  const auto values = get<std::vector<double>>(p, "values");
  out.write("sim_config.txt", agzkp::format_sim_config(cfg));
  Json cells = Json::array();
  auto run_dimension = [&](agzkp::SweepDimension d) {
    const auto rows = agzkp::sweep(cfg, d, values.empty() ? agzkp::default_sweep_values(d) : values);
    out.write(agzkp::to_string(d) + "_sweep.csv", agzkp::sweep_csv(rows));
    for (const auto& r : rows) cells.push_back(agzkp::to_json(r.metrics));
    std::uint64_t attempted = 0, accepted = 0, conserved = 0;
    for (const auto& r : rows) {
      attempted += r.metrics.sessions_attempted;
      accepted += r.metrics.sessions_accepted;
      conserved += r.metrics.conserved();
    }
    std::cout << agzkp::to_string(d) << " sweep: " << rows.size() << " cells, " << accepted << "/" << attempted
              << " sessions accepted, conservation " << conserved << "/" << rows.size() << "\n";
  };
  if (sweep == "load" || sweep == "both") run_dimension(agzkp::SweepDimension::kLoad);
  if (sweep == "speed" || sweep == "both") run_dimension(agzkp::SweepDimension::kSpeed);
  if (sweep == "grid") {
    const auto grid = agzkp::grid(cfg);
    out.write("grid.csv", agzkp::grid_csv(grid));
    for (const auto& m : grid) cells.push_back(agzkp::to_json(m));
    std::cout << "grid: " << grid.size() << " cells\n";
  }
  out.write("cells.json", cells.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// revoke-demo

int cmd_revoke_demo(const Json& p, OutDir& out, Inputs&) {
  agzkp::CeremonyParams cp;
  cp.groups = 2;
  cp.n = get<std::size_t>(p, "n");
  cp.k = get<std::size_t>(p, "k");
  cp.bit_length = get<std::size_t>(p, "bits");
  cp.obus_per_group = 2;
  cp.rsu_count = 1;
  cp.seed = get<std::uint64_t>(p, "seed");
  agzkp::Ceremony c = agzkp::run_ceremony(cp);
  agzkp::SessionConfig cfg;
  cfg.alpha = get<int>(p, "alpha");
  cfg.mu = get<int>(p, "mu");
  cfg.h = get<int>(p, "h");
  cfg.validate(cp.n, cp.k);
  agzkp::RsuOptions opt;
  opt.seed = cp.seed;
  opt.screening_window = get<std::size_t>(p, "window");
  agzkp::RsuEndpoint rsu(c.rsus.front(), opt);
  agzkp::Rng rng(agzkp::splitmix64(cp.seed + 7));
  const auto drift = get<std::size_t>(p, "drift");

  std::vector<std::string> rows;
  double now = 0;
  std::size_t step = 0;
  auto session = [&](std::size_t index) {
    agzkp::ObuCredential& obu = c.obus[index];
    const std::uint64_t counter = obu.counter;
    agzkp::SessionRunOptions so;
    so.start_time = now;
    now += 1.0;
    const agzkp::SessionRun run = agzkp::run_full_session(obu, rsu, cfg, rng, so);
    rows.push_back(std::to_string(step++) + "," + std::to_string(index) + "," + agzkp::to_hex(obu.iv) + "," +
                   std::to_string(counter) + "," + std::string(agzkp::to_string(run.result.outcome)) + "," +
                   std::to_string(run.result.verified_count));
    rsu.prune_closed();
    return run.result.outcome;
  };

  // The target authenticates `drift` times, moving its counter past the
  // hint the revocation record carries.
  for (std::size_t i = 0; i < drift; ++i) session(0);
  agzkp::broadcast_revocation(c.obus[0].iv, 0, "revoke-demo", {&rsu.revocation_table()}, now);
  const auto revoked = session(0);
  const auto same_group = session(1);
  const auto other_group = session(2);
  out.write("steps.csv", csv_lines("step,obu,iv,counter,outcome,verified_count", rows));
  out.write("revocation_state.json", rsu.revocation_state_json().dump(2) + "\n");
  const bool denied = revoked == agzkp::AuthOutcome::kRejectedRevoked;
  const bool others_ok = same_group == agzkp::AuthOutcome::kAccepted &&
                         other_group == agzkp::AuthOutcome::kAccepted;
  std::cout << "revoked obu after drift " << drift << ": " << agzkp::to_string(revoked) << "\n"
            << "same-group obu: " << agzkp::to_string(same_group) << "\nother-group obu: "
            << agzkp::to_string(other_group) << "\n";
  return denied && others_ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// Dispatch, manifests and rerun.

const std::map<std::string, Command>& commands() {
  static const std::map<std::string, Command> m{
      {"keygen", cmd_keygen},
      {"auth-demo", cmd_auth_demo},
      {"attack cheater", cmd_attack_cheater},
      {"attack bundle", cmd_attack_bundle},
      {"attack record", cmd_attack_record},
      {"attack simulate", cmd_attack_simulate},
      {"analyze", cmd_analyze},
      {"simulate", cmd_simulate},
      {"revoke-demo", cmd_revoke_demo},
  };
  return m;
}

/// Runs a command and writes its manifest next to the outputs.
int execute(const std::string& name, const Json& params, const fs::path& out_dir) {
  const auto it = commands().find(name);
  if (it == commands().end()) throw UsageError("unknown subcommand in manifest: " + name);
  OutDir out(out_dir);
  Inputs in;
  const int rc = it->second(params, out, in);
  const Json manifest = {{"format", "agzkp-manifest"},
                         {"manifest_version", 1},
                         {"artifact_version", agzkp::kVersion},
                         {"subcommand", name},
                         {"params", params},
                         {"seed", params.value("seed", std::uint64_t{0})},
                         {"exit_code", rc},
                         {"inputs", in.list},
                         {"outputs", out.outputs()}};
  std::ofstream mf(out.root() / "manifest.json", std::ios::trunc);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw std::runtime_error("cannot write manifest");
  return rc;
}

int rerun(const fs::path& manifest_path, const fs::path& out_dir) {
  const Json m = Json::parse(read_file(manifest_path));
  if (m.value("format", "") != "agzkp-manifest") throw UsageError("not an agzkp manifest");
  if (fs::exists(out_dir) && fs::equivalent(out_dir, manifest_path.parent_path().empty() ? "." : manifest_path.parent_path())) {
    throw UsageError("rerun needs an output directory different from the original run");
  }
  for (const auto& input : m.at("inputs")) {
    const std::string path = input.at("path").get<std::string>();
    if (sha256_hex(read_file(path)) != input.at("sha256").get<std::string>()) {
      std::cerr << "input changed since the manifest was written: " << path << "\n";
      return kExitFailure;
    }
  }
  const int rc = execute(m.at("subcommand").get<std::string>(), m.at("params"), out_dir);
  const Json fresh = Json::parse(read_file(out_dir / "manifest.json"));
  bool identical = rc == m.at("exit_code").get<int>();
  if (!identical) std::cout << "exit code differs: " << rc << " vs " << m.at("exit_code") << "\n";
  const Json& a = m.at("outputs");
  const Json& b = fresh.at("outputs");
  if (a.size() != b.size()) {
    identical = false;
    std::cout << "output count differs: " << b.size() << " vs " << a.size() << "\n";
  }
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
    const bool same = a[i].at("path") == b[i].at("path") && a[i].at("sha256") == b[i].at("sha256");
    std::cout << (same ? "identical " : "MISMATCH  ") << b[i].at("path").get<std::string>() << " "
              << b[i].at("sha256").get<std::string>() << "\n";
    identical = identical && same;
  }
  std::cout << (identical ? "rerun reproduced every output bit-identically\n" : "rerun differs\n");
  return identical ? kExitOk : kExitFailure;
}

std::uint64_t default_seed() {
  if (const char* s = std::getenv("AGZKP_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw UsageError("AGZKP_SEED must be an unsigned integer");
    }
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"agzkp: anonymous group zero-knowledge authentication toolkit"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", agzkp::kVersion);

  std::string selected;
  std::function<Json()> build_params;
  std::string out_dir = "agzkp-out";
  std::uint64_t seed = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out-dir", out_dir, "Directory receiving every output and the manifest");
    sub->add_option("--seed", seed, "Seed (default: $AGZKP_SEED, else 1)")->each([&](const std::string&) {
      seed_given = true;
    });
  };
  auto on = [&](CLI::App* sub, std::string name, std::function<Json()> params) {
    sub->callback([&, name, params] {
      selected = name;
      build_params = params;
    });
  };

  // keygen
  struct {
    std::size_t groups = 2, n = 10, k = 2, bit_length = 64, obus_per_group = 2, rsus = 1;
  } kg;
  auto* keygen = app.add_subcommand("keygen", "Run the KDC ceremony and write a provisioning bundle");
  keygen->add_option("--groups,-q", kg.groups, "Number of OBU groups");
  keygen->add_option("--n", kg.n, "Pool secrets per group");
  keygen->add_option("--k", kg.k, "Master-key secrets per OBU (k < n)");
  keygen->add_option("--bit-length", kg.bit_length, "Blum modulus width in bits");
  keygen->add_option("--obus-per-group", kg.obus_per_group, "OBUs provisioned per group");
  keygen->add_option("--rsus", kg.rsus, "RSUs provisioned");
  add_common(keygen);
  on(keygen, "keygen", [&] {
    return Json{{"groups", kg.groups}, {"n", kg.n}, {"k", kg.k}, {"bit_length", kg.bit_length},
                {"obus_per_group", kg.obus_per_group}, {"rsus", kg.rsus}, {"seed", seed}};
  });

  // auth-demo
  struct {
    std::string bundle, serv_id = "ERS", variant = "basic", revoked_iv, transcript_out = "transcript.bin";
    int alpha = 2, mu = 5, h = 4;
    std::size_t obu = 0, rsu = 0;
  } ad;
  auto* auth = app.add_subcommand("auth-demo", "Run one end-to-end session from a bundle");
  auth->add_option("--bundle", ad.bundle, "Provisioning bundle (bundle.json from keygen)")->required();
  auth->add_option("--alpha", ad.alpha, "Privacy parameter: proofs the OBU must verify (1..5)");
  auth->add_option("--mu", ad.mu, "Proofs in the RSU bundle");
  auth->add_option("--h", ad.h, "Rounds per proof");
  auth->add_option("--serv-id", ad.serv_id, "Requested service id");
  auth->add_option("--variant", ad.variant, "basic or hardened");
  auth->add_option("--obu", ad.obu, "Index of the OBU in the bundle");
  auth->add_option("--rsu", ad.rsu, "Index of the RSU in the bundle");
  auth->add_option("--revoked-iv", ad.revoked_iv, "Revoke this IV (hex, or 'self') before the session");
  auth->add_option("--transcript-out", ad.transcript_out, "Wire transcript file name inside --out-dir");
  add_common(auth);
  on(auth, "auth-demo", [&] {
    return Json{{"bundle", fs::absolute(ad.bundle).lexically_normal().generic_string()},
                {"alpha", ad.alpha}, {"mu", ad.mu}, {"h", ad.h}, {"serv_id", ad.serv_id},
                {"variant", ad.variant}, {"obu", ad.obu}, {"rsu", ad.rsu},
                {"revoked_iv", ad.revoked_iv}, {"transcript_out", ad.transcript_out}, {"seed", seed}};
  });

  // attack
  auto* attack = app.add_subcommand("attack", "Adversary experiments");
  attack->require_subcommand(1);
  struct {
    std::size_t k = 1, h = 1, bit_length = 64;
    std::uint64_t trials = 100000;
    bool oracle = false;
  } ch;
  auto* cheater = attack->add_subcommand("cheater", "Cheating prover without the secrets");
  cheater->add_option("--k", ch.k, "Secrets per proof");
  cheater->add_option("--h", ch.h, "Rounds per proof");
  cheater->add_option("--trials", ch.trials, "Monte Carlo trials");
  cheater->add_option("--bit-length", ch.bit_length, "Modulus width");
  cheater->add_flag("--oracle", ch.oracle, "Cheater knows the challenge in advance (sanity control)");
  add_common(cheater);
  on(cheater, "attack cheater", [&] {
    return Json{{"k", ch.k}, {"h", ch.h}, {"trials", ch.trials}, {"bit_length", ch.bit_length},
                {"oracle", ch.oracle}, {"seed", seed}};
  });

  struct {
    std::size_t k = 2, h = 1, n = 3, bit_length = 64;
    int mu = 1, alpha = 1;
    std::uint64_t trials = 100000;
    bool informed = false;
  } bc;
  auto* bundle = attack->add_subcommand("bundle", "Cheating RSU against the OBU bundle verifier");
  bundle->add_option("--k", bc.k, "Secrets per proof");
  bundle->add_option("--h", bc.h, "Rounds per proof");
  bundle->add_option("--n", bc.n, "Pool size");
  bundle->add_option("--mu", bc.mu, "Proofs in the bundle");
  bundle->add_option("--alpha", bc.alpha, "Proofs the OBU must verify");
  bundle->add_option("--trials", bc.trials, "Monte Carlo trials");
  bundle->add_option("--bit-length", bc.bit_length, "Modulus width");
  bundle->add_flag("--informed", bc.informed, "Cheater reads the requested sets before committing");
  add_common(bundle);
  on(bundle, "attack bundle", [&] {
    return Json{{"k", bc.k}, {"h", bc.h}, {"n", bc.n}, {"mu", bc.mu}, {"alpha", bc.alpha},
                {"trials", bc.trials}, {"bit_length", bc.bit_length}, {"informed", bc.informed},
                {"seed", seed}};
  });

  struct {
    std::size_t bits = 8, n = 4, k = 2, batch = 50, max_sessions = 3000, sessions = 1000;
    int record_mu = 6, record_h = 8, alpha = 2, mu = 5, h = 4;
    std::string variant = "basic";
    std::uint64_t memory_budget = 1ULL << 30;
  } sa;
  auto add_record_options = [&](CLI::App* sub) {
    sub->add_option("--bits", sa.bits, "Modulus width of the recorded group");
    sub->add_option("--n", sa.n, "Pool size");
    sub->add_option("--k", sa.k, "Secrets per proof");
    sub->add_option("--record-mu", sa.record_mu, "Proofs per observed session");
    sub->add_option("--record-h", sa.record_h, "Rounds per observed proof");
    sub->add_option("--batch", sa.batch, "Sessions observed between completeness checks");
    sub->add_option("--max-sessions", sa.max_sessions, "Observation budget in sessions");
    sub->add_option("--variant", sa.variant, "basic or hardened");
    sub->add_option("--memory-budget", sa.memory_budget, "Largest simulator footprint attempted, bytes");
    add_common(sub);
  };
  auto record_params = [&] {
    return Json{{"bits", sa.bits}, {"n", sa.n}, {"k", sa.k}, {"record_mu", sa.record_mu},
                {"record_h", sa.record_h}, {"batch", sa.batch}, {"max_sessions", sa.max_sessions},
                {"variant", sa.variant}, {"memory_budget", sa.memory_budget}, {"seed", seed}};
  };
  auto* record = attack->add_subcommand("record", "Eavesdrop honest sessions and build simulators");
  add_record_options(record);
  on(record, "attack record", record_params);
  auto* simulate_attack = attack->add_subcommand("simulate", "Replay recorded simulators from a rogue RSU");
  add_record_options(simulate_attack);
  simulate_attack->add_option("--sessions", sa.sessions, "Attacked sessions");
  simulate_attack->add_option("--alpha", sa.alpha, "Attacked sessions: alpha");
  simulate_attack->add_option("--mu", sa.mu, "Attacked sessions: mu");
  simulate_attack->add_option("--h", sa.h, "Attacked sessions: rounds per proof");
  on(simulate_attack, "attack simulate", [&] {
    Json p = record_params();
    p["sessions"] = sa.sessions;
    p["alpha"] = sa.alpha;
    p["mu"] = sa.mu;
    p["h"] = sa.h;
    p["serv_id"] = "ERS";
    return p;
  });

  // analyze
  struct {
    std::string figure = "all";
    bool reports = false;
    std::uint64_t trials = 100000;
  } an;
  auto* analyze = app.add_subcommand("analyze", "Closed-form probabilities, figure series and reports");
  analyze->add_option("--figure", an.figure, "10a, 10b, 11, 12, 13, all or none");
  analyze->add_flag("--reports", an.reports, "Also write closed form vs Monte Carlo reports");
  analyze->add_option("--trials", an.trials, "Monte Carlo trials per report");
  add_common(analyze);
  on(analyze, "analyze", [&] {
    return Json{{"figure", an.figure}, {"reports", an.reports}, {"trials", an.trials}, {"seed", seed}};
  });

  // simulate
  struct {
    std::string config, sweep = "both";
    std::vector<double> values;
    std::vector<std::string> set;
  } sm;
  auto* simulate = app.add_subcommand("simulate", "VANET simulation sweeps");
  simulate->add_option("--config", sm.config, "Key-value configuration file");
  simulate->add_option("--sweep", sm.sweep, "load, speed, both or grid")
      ->check(CLI::IsMember({"load", "speed", "both", "grid"}));
  simulate->add_option("--values", sm.values, "Sweep values (default: the standard grid)");
  simulate->add_option("--set", sm.set, "Override a configuration key: key=value");
  add_common(simulate);
  on(simulate, "simulate", [&] {
    return Json{{"config", sm.config.empty() ? "" : fs::absolute(sm.config).lexically_normal().generic_string()},
                {"sweep", sm.sweep}, {"values", sm.values}, {"set", sm.set}, {"seed", seed}};
  });

  // revoke-demo
  struct {
    std::size_t n = 15, k = 5, bits = 64, drift = 3, window = agzkp::kDefaultScreeningWindow;
    int alpha = 2, mu = 5, h = 2;
  } rv;
  auto* revoke = app.add_subcommand("revoke-demo", "Revoke an OBU after counter drift and show it denied");
  revoke->add_option("--n", rv.n, "Pool size");
  revoke->add_option("--k", rv.k, "Secrets per proof");
  revoke->add_option("--bits", rv.bits, "Modulus width");
  revoke->add_option("--alpha", rv.alpha, "Privacy parameter");
  revoke->add_option("--mu", rv.mu, "Proofs per bundle");
  revoke->add_option("--h", rv.h, "Rounds per proof");
  revoke->add_option("--drift", rv.drift, "Sessions the target completes before revocation");
  revoke->add_option("--window", rv.window, "RSU screening window");
  add_common(revoke);
  on(revoke, "revoke-demo", [&] {
    return Json{{"n", rv.n}, {"k", rv.k}, {"bits", rv.bits}, {"alpha", rv.alpha}, {"mu", rv.mu},
                {"h", rv.h}, {"drift", rv.drift}, {"window", rv.window}, {"seed", seed}};
  });

  // rerun
  std::string manifest;
  std::string rerun_out;
  auto* rr = app.add_subcommand("rerun", "Re-execute a manifest and compare output hashes");
  rr->add_option("--manifest", manifest, "manifest.json of an earlier run")->required();
  rr->add_option("--out-dir", rerun_out, "Fresh directory for the re-executed outputs")->required();
  rr->callback([&] { selected = "rerun"; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitParameter;
  }

  try {
    if (selected == "rerun") return rerun(manifest, rerun_out);
    if (!seed_given) seed = default_seed();
    return execute(selected, build_params(), out_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitParameter;
  } catch (const agzkp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return kExitParameter;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
