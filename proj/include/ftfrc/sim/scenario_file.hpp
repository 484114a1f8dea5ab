#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ftfrc/sim/simulator.hpp"

namespace ftfrc::sim {

// Parse failure for a scenario text; line is 1-based.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Line-oriented scenario text, one directive per line ('#' starts a comment):
//
//   version 1
//   duration <seconds>
//   seed <uint64>
//   seg_size <bytes>
//   feedback_bytes <bytes>
//   wireless <capacity_bps> <one_way_delay_s> [queue_pkts]
//   access <capacity_bps> <one_way_delay_s> [queue_pkts]
//   reverse_capacity <bps>
//   flow <tfrc|reno> <start_t>
//   disconnect <t>
//   reconnect <t> <capacity_bps> <one_way_delay_s> [queue_pkts]
//   freeze <t> <flow>
//   unfreeze <t> <flow>
//   freeze_request <t> <flow>
//   unfreeze_request <t> <flow>
//
// Directives map 1:1 onto Scenario fields; event directives append to the
// event list in file order. The result is validated before it is returned.
// Throws ScenarioParseError with the offending line number.
Scenario parse_scenario_text(std::istream& in);
Scenario parse_scenario_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);

// Inverse of parse_scenario_text: a text round-trips to an equal Scenario.
std::string format_scenario_text(const Scenario& sc);

}  // namespace ftfrc::sim
