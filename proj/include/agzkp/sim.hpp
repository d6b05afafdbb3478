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

// Deterministic discrete-event VANET simulation: RSUs on a circular road,
// OBUs at constant speed, one shared FIFO channel per RSU with occupancy-
// scaled Bernoulli loss, and complete protocol sessions run between the
// real endpoints. The engine emits per-cell delay and loss metrics.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <exception>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agzkp/auth.hpp"
#include "agzkp/keymgmt.hpp"
#include "agzkp/montecarlo.hpp"

namespace agzkp {

/// The anonymity levels simulated by sweeps.
inline const std::vector<int>& sim_alphas() {
  static const std::vector<int> v{2, 4, 5};
  return v;
}

struct SimConfig {
  // Topology and mobility.
  std::size_t rsu_count = 10;
  double rsu_spacing_m = 900;
  double comm_range_m = 500;
  std::size_t obus_per_rsu = 20;
  double speed_mps = 20;
  double speed_jitter = 0.1;  // per-OBU speed uniform in speed·[1 − j, 1 + j]

  // Channel.
  std::map<int, std::size_t> packet_bytes{{2, 50}, {4, 100}, {5, 125}};
  double base_loss = 0.002;
  double loss_per_queued = 0.2;       // added loss probability per packet already queued
  double per_byte_service_s = 2e-5;
  double per_packet_overhead_s = 6e-4;
  std::size_t queue_capacity = 64;
  double propagation_mps = 3e8;

  // Traffic.
  double beacon_interval_s = 0.1;
  double access_backoff_s = 0.1;  // OBU waits uniform [0, backoff) after a beacon before requesting
  double session_interval_s = 20;
  double duration_s = 40;

  // Protocol.
  int alpha = 2;
  int mu = 5;
  int h = 2;
  std::size_t n = 10;
  std::size_t k = 2;
  std::size_t groups = 2;
  std::size_t bit_length = 64;
  Variant variant = Variant::kBasic;
  std::string serv_id = "ERS";

  std::uint64_t seed = 1;

  double road_length_m() const { return static_cast<double>(rsu_count) * rsu_spacing_m; }
  std::size_t obu_count() const { return obus_per_rsu * rsu_count; }

  void validate() const {
    auto check = [](bool ok, const char* what) {
      require(ok, ErrorCode::kInvalidConfig, what);
    };
    check(rsu_count >= 1, "rsu_count must be at least 1");
    check(std::isfinite(rsu_spacing_m) && rsu_spacing_m > 0, "rsu_spacing_m must be positive");
    check(std::isfinite(comm_range_m) && comm_range_m > 0, "comm_range_m must be positive");
    check(std::isfinite(speed_mps) && speed_mps >= 0, "speed_mps must be non-negative");
    check(speed_jitter >= 0 && speed_jitter < 1, "speed_jitter must lie in [0, 1)");
    check(!packet_bytes.empty(), "packet_bytes must not be empty");
    for (const auto& [a, bytes] : packet_bytes) {
      check(is_supported_alpha(a), "packet_bytes keys must be supported alpha values");
      check(bytes >= 1, "packet sizes must be positive");
    }
    check(packet_bytes.contains(alpha), "no packet size configured for alpha");
    check(base_loss >= 0 && base_loss <= 1, "base_loss must lie in [0, 1]");
    check(loss_per_queued >= 0 && std::isfinite(loss_per_queued), "loss_per_queued must be >= 0");
    check(per_byte_service_s >= 0 && std::isfinite(per_byte_service_s),
          "per_byte_service_s must be >= 0");
    check(per_packet_overhead_s >= 0 && std::isfinite(per_packet_overhead_s),
          "per_packet_overhead_s must be >= 0");
    check(per_byte_service_s > 0 || per_packet_overhead_s > 0, "service time must be positive");
    check(queue_capacity >= 1, "queue_capacity must be at least 1");
    check(propagation_mps > 0, "propagation_mps must be positive");
    check(beacon_interval_s > 0 && std::isfinite(beacon_interval_s),
          "beacon_interval_s must be positive");
    check(access_backoff_s >= 0 && std::isfinite(access_backoff_s),
          "access_backoff_s must be non-negative");
    check(session_interval_s > 0 && std::isfinite(session_interval_s),
          "session_interval_s must be positive");
    check(duration_s >= 0 && std::isfinite(duration_s), "duration_s must be non-negative");
    check(groups >= 1, "groups must be at least 1");
    try {
      SessionConfig{alpha, mu, h, serv_id, variant}.validate(n, k);
    } catch (const Error& e) {
      fail(ErrorCode::kInvalidConfig, std::string("protocol parameters: ") + e.what());
    }
  }

  SessionConfig session() const {
    SessionConfig s;
    s.alpha = alpha;
    s.mu = mu;
    s.h = h;
    s.serv_id = serv_id;
    s.variant = variant;
    return s;
  }
};

/// Metrics of one (alpha, load, speed) cell.
struct SimMetrics {
  int alpha = 0;
  std::size_t obus_per_rsu = 0;
  double speed_mps = 0;
  std::uint64_t seed = 0;

  double avg_delay_s = 0;          // over delivered session packets
  double packet_loss_ratio = 0;    // lost / sent over all packets incl. beacon receptions
  std::uint64_t packets_sent = 0;
  std::uint64_t packets_lost = 0;
  std::uint64_t session_packets_sent = 0;
  std::uint64_t session_packets_lost = 0;
  std::uint64_t lost_out_of_range = 0;
  std::uint64_t lost_queue_full = 0;
  std::uint64_t beacon_receptions = 0;

  std::uint64_t sessions_attempted = 0;
  std::uint64_t sessions_accepted = 0;
  std::uint64_t sessions_rejected = 0;
  std::uint64_t sessions_lost = 0;
  std::uint64_t reverified = 0;         // accepted sessions whose transcript re-verified offline
  std::uint64_t reverify_failures = 0;

  double avg_session_time_s = 0;  // accepted sessions, beacon reception to verdict

  bool conserved() const {
    return sessions_attempted == sessions_accepted + sessions_rejected + sessions_lost;
  }
  bool operator==(const SimMetrics&) const = default;
};

inline Json to_json(const SimMetrics& m) {
  return {{"alpha", m.alpha},
          {"obus_per_rsu", m.obus_per_rsu},
          {"speed_mps", m.speed_mps},
          {"seed", m.seed},
          {"avg_delay_s", m.avg_delay_s},
          {"packet_loss_ratio", m.packet_loss_ratio},
          {"packets_sent", m.packets_sent},
          {"packets_lost", m.packets_lost},
          {"session_packets_sent", m.session_packets_sent},
          {"session_packets_lost", m.session_packets_lost},
          {"lost_out_of_range", m.lost_out_of_range},
          {"lost_queue_full", m.lost_queue_full},
          {"beacon_receptions", m.beacon_receptions},
          {"sessions_attempted", m.sessions_attempted},
          {"sessions_accepted", m.sessions_accepted},
          {"sessions_rejected", m.sessions_rejected},
          {"sessions_lost", m.sessions_lost},
          {"reverified", m.reverified},
          {"reverify_failures", m.reverify_failures},
          {"avg_session_time_s", m.avg_session_time_s}};
}

// ---------------------------------------------------------------------------
// Key-value configuration file: one `key = value` per line, `#` comments.
// packet_bytes is written as `alpha:bytes` pairs separated by commas.

namespace sim_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  require(!in.fail() && in.eof(), ErrorCode::kInvalidConfig, "bad value for " + key + ": " + value);
  if constexpr (std::is_unsigned_v<T>) {
    require(value.find('-') == std::string::npos, ErrorCode::kInvalidConfig,
            "negative value for " + key);
  }
  return out;
}

inline std::string format_packet_bytes(const std::map<int, std::size_t>& m) {
  std::string out;
  for (const auto& [a, b] : m) {
    if (!out.empty()) out += ",";
    out += std::to_string(a) + ":" + std::to_string(b);
  }
  return out;
}

inline std::map<int, std::size_t> parse_packet_bytes(const std::string& value) {
  std::map<int, std::size_t> out;
  std::istringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto colon = item.find(':');
    require(colon != std::string::npos, ErrorCode::kInvalidConfig,
            "packet_bytes entries must be alpha:bytes");
    out[parse_number<int>("packet_bytes", trim(item.substr(0, colon)))] =
        parse_number<std::size_t>("packet_bytes", trim(item.substr(colon + 1)));
  }
  return out;
}

/// Shortest text that parses back to exactly v.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace sim_detail

inline void apply_config_value(SimConfig& c, const std::string& key, const std::string& value) {
  using sim_detail::parse_number;
  if (key == "rsu_count") c.rsu_count = parse_number<std::size_t>(key, value);
  else if (key == "rsu_spacing_m") c.rsu_spacing_m = parse_number<double>(key, value);
  else if (key == "comm_range_m") c.comm_range_m = parse_number<double>(key, value);
  else if (key == "obus_per_rsu") c.obus_per_rsu = parse_number<std::size_t>(key, value);
  else if (key == "speed_mps") c.speed_mps = parse_number<double>(key, value);
  else if (key == "speed_jitter") c.speed_jitter = parse_number<double>(key, value);
  else if (key == "packet_bytes") c.packet_bytes = sim_detail::parse_packet_bytes(value);
  else if (key == "base_loss") c.base_loss = parse_number<double>(key, value);
  else if (key == "loss_per_queued") c.loss_per_queued = parse_number<double>(key, value);
  else if (key == "per_byte_service_s") c.per_byte_service_s = parse_number<double>(key, value);
  else if (key == "per_packet_overhead_s") c.per_packet_overhead_s = parse_number<double>(key, value);
  else if (key == "queue_capacity") c.queue_capacity = parse_number<std::size_t>(key, value);
  else if (key == "propagation_mps") c.propagation_mps = parse_number<double>(key, value);
  else if (key == "beacon_interval_s") c.beacon_interval_s = parse_number<double>(key, value);
  else if (key == "access_backoff_s") c.access_backoff_s = parse_number<double>(key, value);
  else if (key == "session_interval_s") c.session_interval_s = parse_number<double>(key, value);
  else if (key == "duration_s") c.duration_s = parse_number<double>(key, value);
  else if (key == "alpha") c.alpha = parse_number<int>(key, value);
  else if (key == "mu") c.mu = parse_number<int>(key, value);
  else if (key == "h") c.h = parse_number<int>(key, value);
  else if (key == "n") c.n = parse_number<std::size_t>(key, value);
  else if (key == "k") c.k = parse_number<std::size_t>(key, value);
  else if (key == "groups") c.groups = parse_number<std::size_t>(key, value);
  else if (key == "bit_length") c.bit_length = parse_number<std::size_t>(key, value);
  else if (key == "variant") {
    if (value == "basic") c.variant = Variant::kBasic;
    else if (value == "hardened") c.variant = Variant::kHardened;
    else fail(ErrorCode::kInvalidConfig, "variant must be basic or hardened");
  } else if (key == "serv_id") c.serv_id = value;
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else fail(ErrorCode::kInvalidConfig, "unknown configuration key: " + key);
}

/// Parses a key-value document over the defaults and validates the result.
inline SimConfig parse_sim_config(const std::string& text, SimConfig base = {}) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = sim_detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kInvalidConfig,
            "line " + std::to_string(lineno) + ": expected key = value");
    apply_config_value(base, sim_detail::trim(line.substr(0, eq)),
                       sim_detail::trim(line.substr(eq + 1)));
  }
  base.validate();
  return base;
}

inline SimConfig load_sim_config(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kInvalidConfig, "cannot read configuration file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_sim_config(buf.str());
}

inline std::string format_sim_config(const SimConfig& c) {
  using sim_detail::format_double;
  std::ostringstream o;
  o << "rsu_count = " << c.rsu_count << "\n"
    << "rsu_spacing_m = " << format_double(c.rsu_spacing_m) << "\n"
    << "comm_range_m = " << format_double(c.comm_range_m) << "\n"
    << "obus_per_rsu = " << c.obus_per_rsu << "\n"
    << "speed_mps = " << format_double(c.speed_mps) << "\n"
    << "speed_jitter = " << format_double(c.speed_jitter) << "\n"
    << "packet_bytes = " << sim_detail::format_packet_bytes(c.packet_bytes) << "\n"
    << "base_loss = " << format_double(c.base_loss) << "\n"
    << "loss_per_queued = " << format_double(c.loss_per_queued) << "\n"
    << "per_byte_service_s = " << format_double(c.per_byte_service_s) << "\n"
    << "per_packet_overhead_s = " << format_double(c.per_packet_overhead_s) << "\n"
    << "queue_capacity = " << c.queue_capacity << "\n"
    << "propagation_mps = " << format_double(c.propagation_mps) << "\n"
    << "beacon_interval_s = " << format_double(c.beacon_interval_s) << "\n"
    << "access_backoff_s = " << format_double(c.access_backoff_s) << "\n"
    << "session_interval_s = " << format_double(c.session_interval_s) << "\n"
    << "duration_s = " << format_double(c.duration_s) << "\n"
    << "alpha = " << c.alpha << "\n"
    << "mu = " << c.mu << "\n"
    << "h = " << c.h << "\n"
    << "n = " << c.n << "\n"
    << "k = " << c.k << "\n"
    << "groups = " << c.groups << "\n"
    << "bit_length = " << c.bit_length << "\n"
    << "variant = " << (c.variant == Variant::kBasic ? "basic" : "hardened") << "\n"
    << "serv_id = " << c.serv_id << "\n"
    << "seed = " << c.seed << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Engine.

namespace sim_detail {

enum class EventKind { kAttempt, kBeacon, kStart, kDeliver };

struct Event {
  double time = 0;
  std::uint64_t seq = 0;
  EventKind kind = EventKind::kAttempt;
  std::size_t obu = 0;
  std::size_t rsu = 0;
  Direction direction = Direction::kRsuToObu;
  std::uint64_t generation = 0;  // session generation of the OBU the frame belongs to
  Bytes frame{};

  bool operator>(const Event& o) const {
    return time != o.time ? time > o.time : seq > o.seq;
  }
};

struct ActiveSession {
  std::unique_ptr<ObuEndpoint> endpoint;
  std::size_t rsu = 0;
  double started = 0;
};

/// Independent stream for one simulated entity. Keying streams by entity
/// index (not by draw order) makes the traffic of a run a superset of the
/// traffic of the same run with fewer OBUs, so load points share their
/// randomness and differ only by the added vehicles.
inline Rng entity_rng(std::uint64_t seed, std::uint64_t kind, std::uint64_t index) {
  return Rng(splitmix64(seed ^ splitmix64(kind * 0x9e3779b97f4a7c15ULL + index)));
}

enum StreamKind : std::uint64_t {
  kCeremonyStream = 1,
  kRsuStream,
  kMobilityStream,
  kBeaconLossStream,
  kSessionLossStream,
  kProtocolStream,
};

struct ObuState {
  ObuCredential* cred = nullptr;
  Rng mobility{0};      // placement, speed, attempt phase, backoff
  Rng beacon_loss{0};   // reception draws for beacons
  Rng session_loss{0};  // loss draws for this OBU's session packets
  Rng protocol{0};      // endpoint randomness
  double x0 = 0;
  double speed = 0;
  bool wants_session = false;
  bool pending = false;  // beacon heard, request not yet sent
  std::uint64_t generation = 0;
  std::unique_ptr<ActiveSession> session;
};

/// FIFO channel of one RSU. Every packet to or from the RSU is served in
/// arrival order; occupancy is the count of packets still queued or in service.
struct RsuChannel {
  double busy_until = 0;
  std::deque<double> completions;

  std::size_t occupancy(double now) {
    while (!completions.empty() && completions.front() <= now) completions.pop_front();
    return completions.size();
  }
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg)
      : cfg_(cfg),
        service_s_(cfg.per_packet_overhead_s +
                   static_cast<double>(cfg.packet_bytes.at(cfg.alpha)) * cfg.per_byte_service_s),
        session_cfg_(cfg.session()) {}

  SimMetrics run() {
    SimMetrics m;
    m.alpha = cfg_.alpha;
    m.obus_per_rsu = cfg_.obus_per_rsu;
    m.speed_mps = cfg_.speed_mps;
    m.seed = cfg_.seed;
    metrics_ = &m;
    setup();
    while (!events_.empty()) {
      Event e = events_.top();
      events_.pop();
      current_time_ = e.time;
      switch (e.kind) {
        case EventKind::kAttempt: on_attempt(e); break;
        case EventKind::kBeacon: on_beacon(e); break;
        case EventKind::kStart: on_start(e); break;
        case EventKind::kDeliver: on_deliver(e); break;
      }
    }
    // A session still open here waits on a frame that will never come.
    for (auto& o : obus_) {
      if (o.session) finish(o, /*lost=*/true);
    }
    if (delay_count_ > 0) m.avg_delay_s = delay_sum_ / static_cast<double>(delay_count_);
    if (m.packets_sent > 0) {
      m.packet_loss_ratio = static_cast<double>(m.packets_lost) / static_cast<double>(m.packets_sent);
    }
    if (m.sessions_accepted > 0) {
      m.avg_session_time_s = session_time_sum_ / static_cast<double>(m.sessions_accepted);
    }
    metrics_ = nullptr;
    return m;
  }

 private:
  void setup() {
    if (cfg_.obu_count() == 0) return;
    CeremonyParams p;
    p.groups = cfg_.groups;
    p.n = cfg_.n;
    p.k = cfg_.k;
    p.bit_length = cfg_.bit_length;
    p.obus_per_group = (cfg_.obu_count() + cfg_.groups - 1) / cfg_.groups;
    p.rsu_count = cfg_.rsu_count;
    p.seed = entity_rng(cfg_.seed, kCeremonyStream, 0).next();
    ceremony_ = run_ceremony(p);
    for (std::size_t r = 0; r < cfg_.rsu_count; ++r) {
      Rng rsu_rng = entity_rng(cfg_.seed, kRsuStream, r);
      RsuOptions opt;
      opt.seed = rsu_rng.next();
      rsus_.push_back(std::make_unique<RsuEndpoint>(ceremony_.rsus[r], opt));
      channels_.emplace_back();
      // Beacon phases are staggered so neighbouring RSUs do not tick together.
      push(Event{rsu_rng.uniform01() * cfg_.beacon_interval_s, 0, EventKind::kBeacon, 0, r});
    }
    const double road = cfg_.road_length_m();
    for (std::size_t i = 0; i < cfg_.obu_count(); ++i) {
      ObuState o;
      o.cred = &ceremony_.obus[i];
      o.mobility = entity_rng(cfg_.seed, kMobilityStream, i);
      o.beacon_loss = entity_rng(cfg_.seed, kBeaconLossStream, i);
      o.session_loss = entity_rng(cfg_.seed, kSessionLossStream, i);
      o.protocol = entity_rng(cfg_.seed, kProtocolStream, i);
      o.x0 = o.mobility.uniform01() * road;
      o.speed = cfg_.speed_mps *
                (1 - cfg_.speed_jitter + 2 * cfg_.speed_jitter * o.mobility.uniform01());
      const double phase = o.mobility.uniform01() * cfg_.session_interval_s;
      obus_.push_back(std::move(o));
      push(Event{phase, 0, EventKind::kAttempt, i, 0});
    }
  }

  void push(Event e) {
    e.seq = seq_++;
    events_.push(std::move(e));
  }

  double position(const ObuState& o, double t) const {
    const double road = cfg_.road_length_m();
    return std::fmod(o.x0 + o.speed * t, road);
  }

  double distance(const ObuState& o, std::size_t rsu, double t) const {
    const double road = cfg_.road_length_m();
    const double d = std::fabs(position(o, t) - static_cast<double>(rsu) * cfg_.rsu_spacing_m);
    return std::min(d, road - d);
  }

  std::size_t nearest_rsu(const ObuState& o, double t) const {
    const double x = position(o, t);
    const auto r = static_cast<std::size_t>(std::llround(x / cfg_.rsu_spacing_m));
    return r % cfg_.rsu_count;
  }

  enum class Fate { kDelivered, kLost, kOutOfRange, kQueueFull };

  struct Transmission {
    Fate fate = Fate::kLost;
    double arrival = 0;
  };

  /// One packet through the RSU's channel, sent at `now` by either end.
  Transmission transmit(std::size_t rsu, ObuState& o, double now) {
    RsuChannel& ch = channels_[rsu];
    const std::size_t occ = ch.occupancy(now);
    if (occ >= cfg_.queue_capacity) return {Fate::kQueueFull, now};
    const double start = std::max(now, ch.busy_until);
    const double done = start + service_s_;
    ch.busy_until = done;
    ch.completions.push_back(done);
    const double arrival = done + distance(o, rsu, now) / cfg_.propagation_mps;
    const double p = std::min(1.0, cfg_.base_loss + cfg_.loss_per_queued * static_cast<double>(occ));
    if (o.session_loss.uniform01() < p) return {Fate::kLost, arrival};
    if (distance(o, rsu, arrival) > cfg_.comm_range_m) return {Fate::kOutOfRange, arrival};
    return {Fate::kDelivered, arrival};
  }

  void count_loss(Fate f) {
    ++metrics_->packets_lost;
    if (f == Fate::kOutOfRange) ++metrics_->lost_out_of_range;
    if (f == Fate::kQueueFull) ++metrics_->lost_queue_full;
  }

  void on_attempt(const Event& e) {
    ObuState& o = obus_[e.obu];
    if (!o.session) o.wants_session = true;
    const double next = e.time + cfg_.session_interval_s;
    if (next < cfg_.duration_s) push(Event{next, 0, EventKind::kAttempt, e.obu, 0});
  }

  void on_beacon(const Event& e) {
    const std::size_t r = e.rsu;
    if (r == 0 && e.time >= prune_at_) {
      for (auto& rsu : rsus_) rsu->prune_closed();
      prune_at_ = e.time + 1.0;
    }
    // A beacon is broadcast once: it seizes the channel for one service
    // time, and every OBU in range receives or loses it independently.
    RsuChannel& ch = channels_[r];
    const std::size_t occ = ch.occupancy(e.time);
    const double start = std::max(e.time, ch.busy_until);
    const double done = start + service_s_;
    ch.busy_until = done;
    ch.completions.push_back(done);
    const double p = std::min(1.0, cfg_.base_loss + cfg_.loss_per_queued * static_cast<double>(occ));
    std::optional<Bytes> frame;
    for (std::size_t i = 0; i < obus_.size(); ++i) {
      ObuState& o = obus_[i];
      if (distance(o, r, done) > cfg_.comm_range_m) continue;
      ++metrics_->beacon_receptions;
      ++metrics_->packets_sent;
      if (o.beacon_loss.uniform01() < p) {
        ++metrics_->packets_lost;
        continue;
      }
      if (!o.wants_session || o.pending || o.session || nearest_rsu(o, done) != r) continue;
      if (!frame) frame = rsus_[r]->beacon(done);
      o.wants_session = false;
      o.pending = true;
      push(Event{done + o.mobility.uniform01() * cfg_.access_backoff_s, 0, EventKind::kStart, i, r,
                 Direction::kRsuToObu, 0, *frame});
    }
    const double next = e.time + cfg_.beacon_interval_s;
    if (next < cfg_.duration_s) push(Event{next, 0, EventKind::kBeacon, 0, r});
  }

  void on_start(const Event& e) {
    ObuState& o = obus_[e.obu];
    o.pending = false;
    // Drove out of range while backing off: wait for the next attempt.
    if (distance(o, e.rsu, e.time) > cfg_.comm_range_m) return;
    start_session(e.obu, e.rsu, e.time, e.frame);
  }

  void start_session(std::size_t i, std::size_t r, double now, const Bytes& beacon) {
    ObuState& o = obus_[i];
    ++o.generation;
    ++metrics_->sessions_attempted;
    o.session = std::make_unique<ActiveSession>(ActiveSession{
        std::make_unique<ObuEndpoint>(o.cred, session_cfg_, EnvelopeSuite::reference(),
                                      o.protocol.split()),
        r, now});
    forward(i, o.session->endpoint->handle(beacon, now), Direction::kObuToRsu, now);
  }

  void forward(std::size_t i, std::vector<Bytes> frames, Direction dir, double now) {
    ObuState& o = obus_[i];
    if (!o.session) return;
    const std::size_t r = o.session->rsu;
    for (auto& f : frames) {
      ++metrics_->packets_sent;
      ++metrics_->session_packets_sent;
      const Transmission t = transmit(r, o, now);
      if (t.fate != Fate::kDelivered) {
        count_loss(t.fate);
        ++metrics_->session_packets_lost;
        o.session->endpoint->abort(ErrorCode::kEnvelopeFailure, "message lost in transit");
        finish(o, true);
        return;
      }
      delay_sum_ += t.arrival - now;
      ++delay_count_;
      push(Event{t.arrival, 0, EventKind::kDeliver, i, r, dir, o.generation, std::move(f)});
    }
    if (dir == Direction::kObuToRsu && o.session->endpoint->finished()) finish(o, false);
  }

  void on_deliver(const Event& e) {
    ObuState& o = obus_[e.obu];
    if (e.direction == Direction::kObuToRsu) {
      // The RSU answers even when the OBU already concluded (e.g. Closing).
      std::vector<Bytes> replies = rsus_[e.rsu]->handle(e.frame, e.time);
      if (!o.session || o.generation != e.generation) return;
      forward(e.obu, std::move(replies), Direction::kRsuToObu, e.time);
      return;
    }
    if (!o.session || o.generation != e.generation) return;
    std::vector<Bytes> out = o.session->endpoint->handle(e.frame, e.time);
    const bool done = o.session->endpoint->finished();
    forward(e.obu, std::move(out), Direction::kObuToRsu, e.time);
    if (done && o.session) finish(o, false);
  }

  void finish(ObuState& o, bool lost) {
    const std::unique_ptr<ActiveSession> s = std::move(o.session);
    const AuthResult& res = s->endpoint->result();
    if (res.accepted()) {
      ++metrics_->sessions_accepted;
      session_time_sum_ += current_time_ - s->started;
      const RsuCredential& cred = ceremony_.rsus[s->rsu];
      const auto& material = cred.groups.at(o.cred->group_id);
      const Reverification rv = reverify_session(s->endpoint->record(), o.cred->modulus,
                                                 material.master_witnesses, o.cred->pool_witnesses);
      if (rv.consistent && rv.membership_ok) ++metrics_->reverified;
      else ++metrics_->reverify_failures;
    } else if (lost || (res.error && *res.error == ErrorCode::kEnvelopeFailure)) {
      ++metrics_->sessions_lost;
    } else {
      ++metrics_->sessions_rejected;
    }
  }

  const SimConfig& cfg_;
  double service_s_;
  SessionConfig session_cfg_;
  Ceremony ceremony_;
  std::vector<std::unique_ptr<RsuEndpoint>> rsus_;
  std::vector<RsuChannel> channels_;
  std::vector<ObuState> obus_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t seq_ = 0;
  SimMetrics* metrics_ = nullptr;
  double delay_sum_ = 0;
  std::uint64_t delay_count_ = 0;
  double session_time_sum_ = 0;
  double current_time_ = 0;
  double prune_at_ = 0;
};

}  // namespace sim_detail

/// One deterministic run of the configuration under the given seed.
inline SimMetrics run_sim(SimConfig config, std::uint64_t seed) {
  config.seed = seed;
  config.validate();
  return sim_detail::Engine(config).run();
}

// ---------------------------------------------------------------------------
// Sweeps.

enum class SweepDimension { kLoad, kSpeed };

inline std::string to_string(SweepDimension d) { return d == SweepDimension::kLoad ? "load" : "speed"; }

inline SweepDimension parse_sweep_dimension(const std::string& s) {
  if (s == "load") return SweepDimension::kLoad;
  if (s == "speed") return SweepDimension::kSpeed;
  fail(ErrorCode::kInvalidConfig, "sweep dimension must be load or speed");
}

inline std::vector<double> default_sweep_values(SweepDimension d) {
  if (d == SweepDimension::kLoad) return {5, 10, 15, 20, 25, 30, 35, 40};
  std::vector<double> v;
  for (int s = 14; s <= 27; ++s) v.push_back(s);
  return v;
}

/// Load values and speeds whose product forms the 48-point grid per alpha.
inline std::vector<double> grid_loads() { return {5, 10, 15, 20, 25, 30, 35, 40}; }
inline std::vector<double> grid_speeds() { return {14, 16.6, 19.2, 21.8, 24.4, 27}; }

struct SweepRow {
  int alpha = 0;
  double sweep_value = 0;
  SimMetrics metrics;
};

/// Runs independent configurations in parallel; results keep input order.
inline std::vector<SimMetrics> run_many(const std::vector<SimConfig>& configs, unsigned threads = 0) {
  for (const auto& c : configs) c.validate();
  std::vector<SimMetrics> out(configs.size());
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(configs.size(), 1)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= configs.size()) return;
      try {
        out[i] = run_sim(configs[i], configs[i].seed);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

inline SimConfig with_value(SimConfig c, SweepDimension d, double v) {
  if (d == SweepDimension::kLoad) {
    require(v >= 0 && v == std::floor(v), ErrorCode::kInvalidConfig,
            "load sweep values must be non-negative integers");
    c.obus_per_rsu = static_cast<std::size_t>(v);
  } else {
    c.speed_mps = v;
  }
  return c;
}

/// One row per value per alpha in sim_alphas(); all runs share config.seed.
inline std::vector<SweepRow> sweep(const SimConfig& config, SweepDimension dimension,
                                   const std::vector<double>& values, unsigned threads = 0) {
  std::vector<SimConfig> configs;
  std::vector<SweepRow> rows;
  for (int a : sim_alphas()) {
    for (double v : values) {
      SimConfig c = with_value(config, dimension, v);
      c.alpha = a;
      configs.push_back(c);
      rows.push_back(SweepRow{a, v, {}});
    }
  }
  const auto metrics = run_many(configs, threads);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].metrics = metrics[i];
  return rows;
}

/// The load × speed grid: 48 cells per alpha.
inline std::vector<SimMetrics> grid(const SimConfig& config, unsigned threads = 0) {
  std::vector<SimConfig> configs;
  for (int a : sim_alphas()) {
    for (double load : grid_loads()) {
      for (double speed : grid_speeds()) {
        SimConfig c = with_value(with_value(config, SweepDimension::kLoad, load),
                                 SweepDimension::kSpeed, speed);
        c.alpha = a;
        configs.push_back(c);
      }
    }
  }
  return run_many(configs, threads);
}

inline std::string sweep_csv_header() {
  return "alpha,sweep_value,avg_delay_s,loss_ratio,attempted,accepted";
}

inline std::string sweep_csv_row(const SweepRow& r) {
  using sim_detail::format_double;
  std::ostringstream o;
  o << r.alpha << "," << format_double(r.sweep_value) << "," << format_double(r.metrics.avg_delay_s)
    << "," << format_double(r.metrics.packet_loss_ratio) << "," << r.metrics.sessions_attempted
    << "," << r.metrics.sessions_accepted;
  return o.str();
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = sweep_csv_header() + "\n";
  for (const auto& r : rows) out += sweep_csv_row(r) + "\n";
  return out;
}

inline std::string grid_csv(const std::vector<SimMetrics>& cells) {
  using sim_detail::format_double;
  std::ostringstream o;
  o << "alpha,obus_per_rsu,speed_mps,avg_delay_s,loss_ratio,attempted,accepted\n";
  for (const auto& m : cells) {
    o << m.alpha << "," << m.obus_per_rsu << "," << format_double(m.speed_mps) << ","
      << format_double(m.avg_delay_s) << "," << format_double(m.packet_loss_ratio) << ","
      << m.sessions_attempted << "," << m.sessions_accepted << "\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Trend suite: the four qualitative relationships checked across seeds.

struct TrendCheck {
  std::string name;
  bool holds = true;
  std::string detail;  // first violation, or a summary when the check holds
};

struct TrendReport {
  std::vector<TrendCheck> checks;
  std::vector<SweepRow> load_rows;   // all seeds, in seed order
  std::vector<SweepRow> speed_rows;
  double min_delay_s = 0;
  double max_delay_s = 0;

  bool all_hold() const {
    return std::all_of(checks.begin(), checks.end(), [](const TrendCheck& c) { return c.holds; });
  }
};

inline double coefficient_of_variation(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  if (mean == 0) return 0;
  double var = 0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return std::sqrt(var) / mean;
}

/// Runs the load and speed sweeps for every seed and evaluates:
/// (a) loss ratio non-decreasing in load per alpha, (b) delay strictly
/// ordered by alpha at every load, (c) delay CV across speeds below
/// `max_cv` per alpha, (d) every delay within [lo, hi] seconds.
inline TrendReport trend_suite(const SimConfig& config, const std::vector<std::uint64_t>& seeds,
                               std::size_t speed_load = 10, double max_cv = 0.25,
                               double lo = 1e-4, double hi = 1e-1, unsigned threads = 0) {
  TrendReport rep;
  TrendCheck a{"loss ratio non-decreasing in OBUs per RSU", true, ""};
  TrendCheck b{"delay(alpha=2) < delay(alpha=4) < delay(alpha=5) at every load", true, ""};
  TrendCheck c{"delay coefficient of variation across speeds < " + sim_detail::format_double(max_cv),
               true, ""};
  TrendCheck d{"delays within [" + sim_detail::format_double(lo) + ", " +
                   sim_detail::format_double(hi) + "] s",
               true, ""};
  rep.min_delay_s = INFINITY;
  rep.max_delay_s = 0;
  double worst_cv = 0;
  const auto loads = default_sweep_values(SweepDimension::kLoad);
  const auto speeds = default_sweep_values(SweepDimension::kSpeed);
  for (std::uint64_t seed : seeds) {
    SimConfig base = config;
    base.seed = seed;
    const auto load_rows = sweep(base, SweepDimension::kLoad, loads, threads);
    SimConfig speed_base = base;
    speed_base.obus_per_rsu = speed_load;
    const auto speed_rows = sweep(speed_base, SweepDimension::kSpeed, speeds, threads);
    std::map<int, std::vector<const SweepRow*>> by_alpha_load, by_alpha_speed;
    for (const auto& r : load_rows) by_alpha_load[r.alpha].push_back(&r);
    for (const auto& r : speed_rows) by_alpha_speed[r.alpha].push_back(&r);
    for (const auto& [alpha, rows] : by_alpha_load) {
      for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i]->metrics.packet_loss_ratio < rows[i - 1]->metrics.packet_loss_ratio && a.holds) {
          a.holds = false;
          a.detail = "seed " + std::to_string(seed) + " alpha " + std::to_string(alpha) + ": load " +
                     sim_detail::format_double(rows[i]->sweep_value) + " loss " +
                     sim_detail::format_double(rows[i]->metrics.packet_loss_ratio) + " < " +
                     sim_detail::format_double(rows[i - 1]->metrics.packet_loss_ratio);
        }
      }
    }
    const auto& alphas = sim_alphas();
    for (std::size_t li = 0; li < loads.size(); ++li) {
      for (std::size_t ai = 1; ai < alphas.size(); ++ai) {
        const double lower = by_alpha_load[alphas[ai - 1]][li]->metrics.avg_delay_s;
        const double upper = by_alpha_load[alphas[ai]][li]->metrics.avg_delay_s;
        if (!(lower < upper) && b.holds) {
          b.holds = false;
          b.detail = "seed " + std::to_string(seed) + " load " + sim_detail::format_double(loads[li]);
        }
      }
    }
    for (const auto& [alpha, rows] : by_alpha_speed) {
      std::vector<double> delays;
      for (const auto* r : rows) delays.push_back(r->metrics.avg_delay_s);
      const double cv = coefficient_of_variation(delays);
      worst_cv = std::max(worst_cv, cv);
      if (!(cv < max_cv) && c.holds) {
        c.holds = false;
        c.detail = "seed " + std::to_string(seed) + " alpha " + std::to_string(alpha) + ": cv " +
                   sim_detail::format_double(cv);
      }
    }
    for (const auto* rows : {&load_rows, &speed_rows}) {
      for (const auto& r : *rows) {
        const double v = r.metrics.avg_delay_s;
        rep.min_delay_s = std::min(rep.min_delay_s, v);
        rep.max_delay_s = std::max(rep.max_delay_s, v);
        if (!(v >= lo && v <= hi) && d.holds) {
          d.holds = false;
          d.detail = "seed " + std::to_string(seed) + " alpha " + std::to_string(r.alpha) +
                     " value " + sim_detail::format_double(r.sweep_value) + ": delay " +
                     sim_detail::format_double(v);
        }
      }
    }
    rep.load_rows.insert(rep.load_rows.end(), load_rows.begin(), load_rows.end());
    rep.speed_rows.insert(rep.speed_rows.end(), speed_rows.begin(), speed_rows.end());
  }
  if (a.holds) a.detail = std::to_string(seeds.size()) + " seeds x 3 alphas";
  if (b.holds) b.detail = std::to_string(seeds.size() * loads.size()) + " load points";
  if (c.holds) c.detail = "worst cv " + sim_detail::format_double(worst_cv);
  if (d.holds) {
    d.detail = "range [" + sim_detail::format_double(rep.min_delay_s) + ", " +
               sim_detail::format_double(rep.max_delay_s) + "] s";
  }
  rep.checks = {a, b, c, d};
  return rep;
}

}  // namespace agzkp
