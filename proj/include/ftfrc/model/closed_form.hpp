#pragma once

#include <cstdint>
#include <vector>

namespace ftfrc::model {

// Inputs describing a sender cut off mid-transfer: it keeps sending into the
// void, halving its rate at every nofeedback expiry, until connectivity
// returns after t_disc seconds.
struct DisconnectInputs {
  double x_d = 0.0;      // steady send rate before the cut, bytes/s
  double rtt = 0.0;      // smoothed RTT before the cut, seconds
  double t_disc = 0.0;   // disconnection duration, seconds
  double seg_size = 500.0;
  double t_mbi = 64.0;
};

struct BackoffStep {
  int index = 0;        // number of expiries that preceded this interval
  double start = 0.0;   // offset from the cut, seconds
  double duration = 0.0;
  double rate = 0.0;    // send rate during the interval, bytes/s
  double timeout = 0.0; // nofeedback timeout armed for the interval
};

struct BackoffTimeline {
  std::vector<BackoffStep> steps;  // last one truncated at t_disc
  int expiries = 0;                // expiries that fired within t_disc
  double x_at_reconnect = 0.0;
  double timeout_at_reconnect = 0.0;
  double credit = 0.0;             // segments worth of sending during the cut
  std::int64_t lost_packets = 0;   // floor(credit)
};

// Send rate after i nofeedback expiries: exact halvings down to the
// one-segment-per-t_mbi floor.
double rate_after_expiries(const DisconnectInputs& in, int i);
double timeout_after_expiries(const DisconnectInputs& in, int i);
// Smallest i at which the rate sits on the floor.
int rate_floor_index(const DisconnectInputs& in);
// Smallest i at which the timeout is governed by the inter-packet gap rather
// than 4*RTT; INT_MAX when that never happens.
int timeout_switch_index(const DisconnectInputs& in);

// Closed-form timeline over the disconnection.
BackoffTimeline disconnect_timeline(const DisconnectInputs& in);
std::int64_t lost_packets(const DisconnectInputs& in);

// Largest loss-rate decrease that adding delta_n loss-free packets to the
// history can produce from p_prev (a negative number).
double delta_p_min(double delta_n, double p_prev);

// Smoothed RTT i feedbacks after the path RTT jumps from r_old to r_new.
double converged_rtt(double r_old, double r_new, int i, double q = 0.9);
// Feedback count until the smoothed RTT is within eps of r_new.
int rtt_convergence_rounds(double r_old, double r_new, double eps,
                           double q = 0.9);
// Equation-driven rate while the smoothed RTT still reflects r_old.
double rate_during_convergence(double x_d, double r_old, double r_new, int i,
                               double q = 0.9);

// Doubling rounds needed to grow back from x_c to ratio*x_c while the
// smoothed RTT converges from r_old to r_new.
int slow_start_rounds(double ratio, double r_new_over_r_old, double q = 0.9);

// Full post-reconnect accounting for a handover between technologies.
struct HandoverInputs {
  double x_d = 0.0;    // stationary rate on the old path, bytes/s
  double r_old = 0.0;  // stationary RTT on the old path
  double r_new = 0.0;  // stationary RTT on the new path
  double x_max = 0.0;  // stationary rate achievable on the new path
  double t_disc = 0.0;
  double p_r = 0.0;    // loss event rate consistent with (x_d, r_old)
  double seg_size = 500.0;
  double t_mbi = 64.0;
  double q = 0.9;
};

struct HandoverEstimate {
  BackoffTimeline timeline;
  double idle_time = 0.0;          // gap until the first packet after resume
  int ss_rounds = 0;               // doubling rounds to regain x_d
  double wasted = 0.0;             // send opportunities lost regaining x_d
  double ss_packets = 0.0;         // packets delivered during those rounds
  double recovery_time = 0.0;      // extra time until p decays back to p_r
  double extra_wasted = 0.0;       // opportunities lost growing x_d -> x_max
  int growth_rounds = 0;
  double total_wasted = 0.0;       // matrix convention, floored per component
};

HandoverEstimate estimate_handover(const HandoverInputs& in);

}  // namespace ftfrc::model
