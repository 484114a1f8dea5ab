#include "ftfrc/scen/profiles.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

#include "ftfrc/tfrc/equations.hpp"

namespace ftfrc::scen {

const std::vector<TechnologyProfile>& technologies() {
  // One-way delay is set to the technology's nominal round-trip figure; with
  // symmetric forward/reverse paths and queueing on the loaded direction this
  // reproduces the measured steady-state RTTs below.
  // Warm-up lengths leave at least one full stationarity-detector window of
  // slack past the point where a lone flow settles in this simulator.
  static const std::vector<TechnologyProfile> techs = {
      {"UMTS", 384e3, 0.25, 0.044e6, 0.96, 130.0},
      {"802.16", 9.5e6, 0.08, 1.10e6, 0.17, 190.0},
      {"802.11b", 11e6, 0.02, 1.27e6, 0.05, 100.0},
      {"802.11g", 54e6, 0.02, 4.82e6, 0.04, 130.0},
  };
  return techs;
}

const TechnologyProfile* find_technology(std::string_view name) {
  std::string key(name);
  std::transform(key.begin(), key.end(), key.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto canon = [](const std::string& k) -> const char* {
    if (k == "umts" || k == "3g") return "UMTS";
    if (k == "802.16" || k == "wimax" || k == "16") return "802.16";
    if (k == "802.11b" || k == "11b" || k == "b") return "802.11b";
    if (k == "802.11g" || k == "11g" || k == "g") return "802.11g";
    return nullptr;
  };
  const char* c = canon(key);
  if (c == nullptr) return nullptr;
  for (const TechnologyProfile& t : technologies()) {
    if (t.name == c) return &t;
  }
  return nullptr;
}

const TechnologyProfile& technology_or_throw(std::string_view name) {
  const TechnologyProfile* t = find_technology(name);
  if (t == nullptr) {
    throw std::invalid_argument("unknown technology '" + std::string(name) +
                                "' (expected UMTS, 802.16, 802.11b or 802.11g)");
  }
  return *t;
}

double stationary_loss_rate(const TechnologyProfile& tech, double seg_size) {
  const tfrc::ThroughputInversion inv =
      tfrc::invert_throughput(tech.stationary_rate, tech.stationary_rtt, seg_size);
  return inv.p;
}

double handover_delay(const TechnologyProfile& to) {
  return 2.5 + to.stationary_rtt;
}

sim::LinkSpec link_spec(const TechnologyProfile& tech) {
  sim::LinkSpec l;
  l.capacity_bps = tech.capacity_bps;
  l.one_way_delay = tech.one_way_delay;
  l.queue_capacity = 50;
  return l;
}

}  // namespace ftfrc::scen
