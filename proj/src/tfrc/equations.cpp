#include "ftfrc/tfrc/equations.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftfrc::tfrc {

double throughput_equation(double p, double rtt, double seg_size,
                           double t_rto) {
  if (!(p > 0.0) || p > 1.0)
    throw std::domain_error("throughput_equation: p must be in (0, 1]");
  if (!(rtt > 0.0) || !(seg_size > 0.0) || !(t_rto > 0.0))
    throw std::domain_error("throughput_equation: rtt/seg/t_rto must be > 0");
  const double denom = rtt * std::sqrt(2.0 * p / 3.0) +
                       t_rto * (3.0 * std::sqrt(3.0 * p / 8.0)) * p *
                           (1.0 + 32.0 * p * p);
  return seg_size / denom;
}

double update_allowed_rate(double x_bps, double x_recv, double seg_size,
                           double t_mbi) {
  return std::max(std::min(x_bps, 2.0 * x_recv), seg_size / t_mbi);
}

double slow_start_update(double x, double x_recv) {
  return std::min(2.0 * x, 2.0 * x_recv);
}

double update_rtt_estimate(double r_est, double sample, double q) {
  return q * r_est + (1.0 - q) * sample;
}

ThroughputInversion invert_throughput(double x_target, double rtt,
                                      double seg_size) {
  if (!(x_target > 0.0))
    throw std::domain_error("invert_throughput: x_target must be > 0");
  const double t_rto = 4.0 * rtt;
  if (throughput_equation(1.0, rtt, seg_size, t_rto) >= x_target)
    return {1.0, false};
  double lo = 0.0, hi = 1.0, mid = 0.5;
  for (int i = 0; i < 64; ++i) {
    mid = 0.5 * (lo + hi);
    const double t = throughput_equation(mid, rtt, seg_size, t_rto);
    if (std::abs(t - x_target) <= 1e-6 * x_target) return {mid, false};
    if (t > x_target)
      lo = mid;  // rate too fast: more loss needed
    else
      hi = mid;
  }
  // Tolerance unmet after 64 halvings: the solution sits below the search
  // resolution next to p = 0.
  return {hi, true};
}

}  // namespace ftfrc::tfrc
