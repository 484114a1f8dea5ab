#pragma once

#include "ftfrc/tfrc/constants.hpp"

namespace ftfrc::tfrc {

// Equation-based fair rate in bytes/s for loss event rate p in (0, 1],
// round-trip time rtt, segment size and retransmission timeout in seconds.
// Throws std::domain_error for p outside (0, 1].
double throughput_equation(double p, double rtt, double seg_size, double t_rto);

// Allowed sending rate: equation rate capped at twice the reported receive
// rate, floored at one packet per t_mbi.
double update_allowed_rate(double x_bps, double x_recv, double seg_size,
                           double t_mbi = kMaxBackoffInterval);

// Slow-start update: doubles per RTT, capped at twice the receive rate.
double slow_start_update(double x, double x_recv);

// EWMA RTT filter. q is the weight of the old estimate.
double update_rtt_estimate(double r_est, double sample,
                           double q = kRttFilterWeight);

struct ThroughputInversion {
  double p = 1.0;
  // Set when x_target is too fast to be matched within the search resolution.
  bool saturated = false;
};

// Finds p in (0, 1] with throughput_equation(p, rtt, seg, 4*rtt) == x_target,
// by bisection to 1e-6 relative rate tolerance within 64 iterations.
// x_target at or below the p = 1 rate returns p = 1.
ThroughputInversion invert_throughput(double x_target, double rtt,
                                      double seg_size);

}  // namespace ftfrc::tfrc
