#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ftfrc/sim/simulator.hpp"

namespace ftfrc::scen {

// A wireless access technology: the link parameters fed to the simulator plus
// the steady-state operating point a single TFRC flow reaches on it.
struct TechnologyProfile {
  std::string name;        // canonical name
  double capacity_bps;     // downlink capacity
  double one_way_delay;    // per-direction propagation delay, seconds
  double stationary_rate;  // steady-state X_recv, bytes/s
  double stationary_rtt;   // steady-state RTT, seconds
  double warmup;           // seconds a fresh flow needs to reach steady state
};

// The four built-in technologies, in canonical matrix order.
const std::vector<TechnologyProfile>& technologies();

// Case-insensitive lookup accepting common aliases ("umts", "wimax", "11b",
// "b", ...). Returns nullptr when unknown.
const TechnologyProfile* find_technology(std::string_view name);

// Like find_technology but throws std::invalid_argument when unknown.
const TechnologyProfile& technology_or_throw(std::string_view name);

// Steady-state loss event rate implied by the technology's operating point:
// the p for which the throughput equation yields stationary_rate at
// stationary_rtt (retransmission timeout 4R).
double stationary_loss_rate(const TechnologyProfile& tech, double seg_size = 500.0);

// Interruption length of a handover into `to`: detection/registration lag
// plus one settled round trip on the new link.
double handover_delay(const TechnologyProfile& to);

// Wireless LinkSpec for the simulator (50-packet DropTail queue).
sim::LinkSpec link_spec(const TechnologyProfile& tech);

}  // namespace ftfrc::scen
