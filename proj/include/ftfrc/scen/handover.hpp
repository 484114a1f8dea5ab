#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ftfrc/scen/metrics.hpp"
#include "ftfrc/scen/profiles.hpp"
#include "ftfrc/sim/simulator.hpp"

namespace ftfrc::scen {

enum class Variant { Standard, Freeze };
std::string to_string(Variant v);

// Timing of one randomized handover experiment. The interruption starts at a
// uniformly drawn instant inside a four-RTT band after the warm-up point
// (offset by one RTT so the freeze lead also falls after warm-up), lasts
// handover_delay(to), and the run continues until rates settle.
struct HandoverTimes {
  double warmup = 0.0;
  double t_down = 0.0;
  double t_up = 0.0;
  double freeze_at = 0.0;    // one RTT before the interruption
  double unfreeze_at = 0.0;  // 0.1 ms after restoration
  double end = 0.0;
};

HandoverTimes handover_times(const TechnologyProfile& from,
                             const TechnologyProfile& to, std::uint64_t seed);

// Flow 0 (and optionally a competing byte-counting TCP flow) on `from`'s
// link, with no handover events; long enough to host any seed's handover.
sim::Scenario build_base_scenario(const TechnologyProfile& from,
                                  bool with_competitor = false);

// The complete scripted experiment: warm-up, optional freeze lead, the
// interruption, reconnection with `to`'s link, optional unfreeze.
sim::Scenario build_handover_scenario(const TechnologyProfile& from,
                                      const TechnologyProfile& to,
                                      Variant variant, std::uint64_t seed,
                                      bool with_competitor = false);

struct CalibrationResult {
  double x_recv = 0.0;        // settled delivery rate, bytes/s
  double rtt = 0.0;           // settled RTT estimate
  double mean_rate = 0.0;     // settled allowed rate
  double t_stationary = -1.0;
};

// A warmed simulation plus the steady state it reached.
struct WarmBase {
  sim::Simulation sim;
  CalibrationResult cal;
};

// Warm a base scenario to its technology's warm-up point. When
// `require_stationary`, throws std::runtime_error if the flow has not
// stabilized (two consecutive 30 s windows within 5%) by then.
WarmBase warm_base(const TechnologyProfile& tech, bool with_competitor,
                   bool require_stationary);

// Steady state a lone flow reaches on this technology (warm_base shorthand).
CalibrationResult calibrate_technology(const TechnologyProfile& tech);

// One (variant, from, to, seed) experiment's measurements.
struct CellOutcome {
  std::string from;
  std::string to;
  Variant variant = Variant::Standard;
  std::uint64_t seed = 0;
  long long n_lost = 0;        // data packets lost to the interruption
  double n_wasted = 0.0;       // shortfall vs x_ref, in segment equivalents
  double fairness = -1.0;      // TFRC/TCP goodput ratio; -1 when not measured
  bool settled = false;
  double settle_latency = -1.0;  // settle time minus t_up
  double x_ref = 0.0;
  double t_down = 0.0;
  double t_up = 0.0;
  double pre_freeze_rate = 0.0;  // allowed rate sampled at the freeze lead
  double restored_rate = 0.0;    // allowed rate just after unfreeze
  double t_idle = -1.0;          // first post-reconnect data send minus t_up
  long long halvings = 0;        // no-feedback expiries during the outage
};

struct SweepOptions {
  std::vector<const TechnologyProfile*> techs;  // empty: all built-ins
  std::vector<std::uint64_t> seeds;             // empty: 0..19
  bool run_standard = true;
  bool run_freeze = true;
  bool fairness = false;  // add a TCP competitor and measure the ratio
  bool stop_after_settlement = true;
  int jobs = 1;
  // Called as each outcome is produced (any order, serialized).
  std::function<void(const CellOutcome&)> on_result;
};

// The full matrix sweep. Results ordered by (variant, from, to, seed).
std::vector<CellOutcome> run_matrix_sweep(const SweepOptions& opt);

// One standalone experiment (warms its own base; convenient but slower than
// the sweep's shared warm bases).
CellOutcome run_handover(const TechnologyProfile& from,
                         const TechnologyProfile& to, Variant variant,
                         std::uint64_t seed, bool fairness = false);

struct CellAggregate {
  std::string from;
  std::string to;
  Variant variant = Variant::Standard;
  int runs = 0;
  double mean_lost = 0.0;
  double mean_wasted = 0.0;
  double mean_fairness = -1.0;
};

std::vector<CellAggregate> aggregate_outcomes(const std::vector<CellOutcome>& outs);

// Per-seed rows: variant,from,to,seed,n_lost,n_wasted,fairness.
std::string format_outcomes_csv(const std::vector<CellOutcome>& outs);
// Matrix-shaped aggregates (one row per (table, variant, from)).
std::string format_aggregate_csv(const std::vector<CellAggregate>& aggs);

}  // namespace ftfrc::scen
