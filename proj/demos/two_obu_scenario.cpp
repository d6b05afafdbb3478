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


// Two OBUs from different groups authenticate concurrently with one RSU.
// Their frames are interleaved one at a time on the shared medium; each
// session keeps its own key id and ends Accepted. The demo then repeats the
// two sessions serially from the same seeds and checks the results match.

#include <deque>
#include <iostream>
#include <memory>
#include <utility>
#include <vector>

#include "agzkp/agzkp.hpp"

using namespace agzkp;

namespace {

SessionConfig demo_config() {
  SessionConfig cfg;
  cfg.alpha = 2;
  cfg.mu = 4;
  cfg.h = 3;
  cfg.serv_id = "ERS";
  return cfg;
}

struct Party {
  const char* name;
  std::unique_ptr<ObuEndpoint> obu;
  std::deque<std::pair<Direction, Bytes>> queue;
};

std::vector<AuthResult> interleave(std::vector<ObuCredential*> creds, RsuEndpoint& rsu,
                                   const std::vector<std::uint64_t>& seeds, bool verbose) {
  std::vector<Party> parties;
  const char* names[] = {"OBU_1", "OBU_2"};
  for (std::size_t i = 0; i < creds.size(); ++i) {
    parties.push_back({names[i],
                       std::make_unique<ObuEndpoint>(creds[i], demo_config(), EnvelopeSuite::reference(),
                                                     Rng(seeds[i])),
                       {}});
    parties.back().queue.emplace_back(Direction::kRsuToObu, rsu.beacon(0));
  }
  for (bool progress = true; progress;) {
    progress = false;
    for (auto& p : parties) {
      if (p.queue.empty()) continue;
      progress = true;
      auto [dir, bytes] = std::move(p.queue.front());
      p.queue.pop_front();
      const Frame f = Frame::decode(bytes);
      if (verbose) {
        std::cout << "  " << p.name << (dir == Direction::kRsuToObu ? " <- RSU  " : " -> RSU  ")
                  << to_string(f.type) << " key_id=" << std::hex << f.key_id << std::dec << " ("
                  << bytes.size() << " bytes)\n";
      }
      const auto replies = dir == Direction::kRsuToObu ? p.obu->handle(bytes, 0.01) : rsu.handle(bytes, 0.01);
      const Direction back = dir == Direction::kRsuToObu ? Direction::kObuToRsu : Direction::kRsuToObu;
      for (const auto& r : replies) p.queue.emplace_back(back, r);
    }
  }
  std::vector<AuthResult> results;
  for (auto& p : parties) results.push_back(p.obu->result());
  return results;
}

}  // namespace

int main() {
  CeremonyParams params;
  params.groups = 2;
  params.obus_per_group = 1;
  params.n = 10;
  params.k = 2;
  params.seed = 2024;
  const Ceremony ceremony = run_ceremony(params);
  std::cout << "KDC: modulus of " << ceremony.kdc.modulus.bit_length << " bits, groups G_1 and G_2, one RSU\n";

  std::vector<ObuCredential> obus = ceremony.obus;
  RsuOptions options;
  options.seed = 7;
  RsuEndpoint rsu(ceremony.rsus.front(), options);
  const std::vector<std::uint64_t> seeds{101, 202};

  std::cout << "Interleaved sessions:\n";
  const auto concurrent = interleave({&obus[0], &obus[1]}, rsu, seeds, true);
  bool ok = true;
  for (std::size_t i = 0; i < concurrent.size(); ++i) {
    std::cout << "OBU_" << i + 1 << " (group " << obus[i].group_id << "): " << to_string(concurrent[i].outcome)
              << ", " << concurrent[i].verified_count << " RSU proofs verified\n";
    ok = ok && concurrent[i].accepted();
  }
  const auto views = rsu.sessions();
  std::cout << "RSU holds " << views.size() << " sessions with distinct key ids\n";
  ok = ok && views.size() == 2;

  // Same seeds, one session after the other, on a fresh RSU.
  std::vector<ObuCredential> serial_obus = ceremony.obus;
  RsuEndpoint serial_rsu(ceremony.rsus.front(), options);
  std::vector<AuthResult> serial;
  for (std::size_t i = 0; i < 2; ++i) {
    serial.push_back(interleave({&serial_obus[i]}, serial_rsu, {seeds[i]}, false).front());
  }
  for (std::size_t i = 0; i < 2; ++i) {
    const bool same = serial[i].outcome == concurrent[i].outcome &&
                      serial[i].verified_count == concurrent[i].verified_count;
    std::cout << "OBU_" << i + 1 << " serial rerun: " << to_string(serial[i].outcome)
              << (same ? " (matches interleaved run)\n" : " (DIFFERS from interleaved run)\n");
    ok = ok && same;
  }
  std::cout << (ok ? "two-OBU scenario: OK\n" : "two-OBU scenario: FAILED\n");
  return ok ? 0 : 1;
}
