#include "ftfrc/model/closed_form.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <stdexcept>

#include "ftfrc/tfrc/equations.hpp"

namespace ftfrc::model {

namespace {
constexpr int kMaxExpiries = 100000;
constexpr int kMaxGrowthRounds = 10000000;

void check_inputs(const DisconnectInputs& in) {
  if (in.x_d <= 0.0 || in.rtt <= 0.0 || in.t_disc < 0.0 || in.seg_size <= 0.0 ||
      in.t_mbi <= 0.0) {
    throw std::domain_error("disconnect inputs must be positive");
  }
}
}  // namespace

double rate_after_expiries(const DisconnectInputs& in, int i) {
  const double floor = in.seg_size / in.t_mbi;
  const double halved = std::ldexp(in.x_d, -i);
  return halved > floor ? halved : floor;
}

double timeout_after_expiries(const DisconnectInputs& in, int i) {
  const double x = rate_after_expiries(in, i);
  return std::max(4.0 * in.rtt, 2.0 * in.seg_size / x);
}

int rate_floor_index(const DisconnectInputs& in) {
  const double floor = in.seg_size / in.t_mbi;
  int i = 0;
  while (std::ldexp(in.x_d, -i) > floor) {
    if (++i > kMaxExpiries) throw std::runtime_error("rate floor index overflow");
  }
  return i;
}

int timeout_switch_index(const DisconnectInputs& in) {
  if (2.0 * in.seg_size / (in.seg_size / in.t_mbi) <= 4.0 * in.rtt) {
    return INT_MAX;  // even the floor rate keeps 4*RTT dominant
  }
  int i = 0;
  while (2.0 * in.seg_size / rate_after_expiries(in, i) <= 4.0 * in.rtt) {
    if (++i > kMaxExpiries) throw std::runtime_error("timeout switch index overflow");
  }
  return i;
}

BackoffTimeline disconnect_timeline(const DisconnectInputs& in) {
  check_inputs(in);
  BackoffTimeline tl;
  double elapsed = 0.0;
  int i = 0;
  while (true) {
    const double x = rate_after_expiries(in, i);
    const double trto = std::max(4.0 * in.rtt, 2.0 * in.seg_size / x);
    const double dt = std::min(trto, in.t_disc - elapsed);
    tl.steps.push_back({i, elapsed, dt, x, trto});
    tl.credit += dt * x / in.seg_size;
    elapsed += dt;
    if (elapsed >= in.t_disc) {
      tl.expiries = i;
      tl.x_at_reconnect = x;
      tl.timeout_at_reconnect = trto;
      tl.lost_packets = static_cast<std::int64_t>(std::floor(tl.credit));
      return tl;
    }
    if (++i > kMaxExpiries) throw std::runtime_error("timeline overflow");
  }
}

std::int64_t lost_packets(const DisconnectInputs& in) {
  return disconnect_timeline(in).lost_packets;
}

double delta_p_min(double delta_n, double p_prev) {
  if (p_prev <= 0.0 || delta_n < 0.0) {
    throw std::domain_error("delta_p_min: p_prev must be positive, delta_n >= 0");
  }
  return 6.0 / (delta_n + 6.0 / p_prev) - p_prev;
}

double converged_rtt(double r_old, double r_new, int i, double q) {
  const double w = std::pow(q, i);
  return (1.0 - w) * r_new + w * r_old;
}

int rtt_convergence_rounds(double r_old, double r_new, double eps, double q) {
  if (eps <= 0.0 || q <= 0.0 || q >= 1.0) {
    throw std::domain_error("rtt_convergence_rounds: need eps > 0 and q in (0,1)");
  }
  const double dr = std::fabs(r_new - r_old);
  if (dr <= eps) return 0;
  int n = static_cast<int>(std::ceil((std::log(eps) - std::log(dr)) / std::log(q)));
  n = std::max(n, 0);
  while (std::pow(q, n) * dr > eps) ++n;
  while (n > 0 && std::pow(q, n - 1) * dr <= eps) --n;
  return n;
}

double rate_during_convergence(double x_d, double r_old, double r_new, int i,
                               double q) {
  return x_d * r_old / converged_rtt(r_old, r_new, i, q);
}

int slow_start_rounds(double ratio, double r_new_over_r_old, double q) {
  if (ratio <= 1.0) return 0;
  const double rr = r_new_over_r_old;
  const auto f = [&](double n) {
    return rr * std::exp2(n) + (1.0 - rr) * std::pow(2.0 * q, n) - ratio;
  };
  const auto fprime = [&](double n) {
    return rr * std::log(2.0) * std::exp2(n) +
           (1.0 - rr) * std::log(2.0 * q) * std::pow(2.0 * q, n);
  };
  // The left side grows monotonically past the single crossing, so Newton
  // from a mid-range guess converges; the integer scan below makes the
  // answer exact regardless.
  double n = 10.0;
  for (int iter = 0; iter < 64; ++iter) {
    const double fp = fprime(n);
    if (fp <= 0.0 || !std::isfinite(fp)) break;
    const double step = f(n) / fp;
    n -= step;
    if (!std::isfinite(n) || n < 0.0 || n > 4000.0) {
      n = 10.0;
      break;
    }
    if (std::fabs(step) < 1e-9) break;
  }
  const auto exceeds = [&](int k) {
    return rr * std::ldexp(1.0, k) + (1.0 - rr) * std::pow(2.0 * q, k) > ratio;
  };
  int k = std::max(0, static_cast<int>(std::ceil(n)));
  while (!exceeds(k)) {
    if (++k > 100000) throw std::runtime_error("slow_start_rounds overflow");
  }
  while (k > 0 && exceeds(k - 1)) --k;
  return k;
}

HandoverEstimate estimate_handover(const HandoverInputs& in) {
  if (in.p_r <= 0.0 || in.p_r > 1.0) {
    throw std::domain_error("estimate_handover: p_r must be in (0,1]");
  }
  if (in.r_new <= 0.0 || in.x_max <= 0.0) {
    throw std::domain_error("estimate_handover: r_new and x_max must be positive");
  }
  const double s = in.seg_size;
  const double q = in.q;

  HandoverEstimate est;
  est.timeline = disconnect_timeline(
      {in.x_d, in.r_old, in.t_disc, in.seg_size, in.t_mbi});
  const double xc = est.timeline.x_at_reconnect;

  est.idle_time = s / (2.0 * xc);
  est.ss_rounds = slow_start_rounds(in.x_d / xc, in.r_new / in.r_old, q);

  double wasted = est.idle_time * in.x_d;
  for (int i = 0; i <= est.ss_rounds; ++i) {
    wasted += in.r_new * std::max(in.x_d - std::ldexp(xc, i), 0.0);
  }
  est.wasted = wasted / s;

  double pkts = 0.0;
  for (int j = 0; j <= est.ss_rounds; ++j) {
    const double r_j = converged_rtt(in.r_old, in.r_new, j, q);
    const double x_j = std::min(std::ldexp(xc, j), (in.r_old / r_j) * in.x_d);
    pkts += r_j * x_j / s;
  }
  est.ss_packets = pkts;

  est.recovery_time =
      1.0 / in.p_r > pkts ? (s / in.x_d) * (1.0 / in.p_r - pkts) : 0.0;

  if (in.x_max > in.x_d) {
    const double t_ss = (est.ss_rounds + 1) * in.r_new;
    double extra =
        (in.x_max - in.x_d) * (est.idle_time + t_ss + est.recovery_time) / s;
    const int off =
        est.ss_rounds + static_cast<int>(std::ceil(est.recovery_time / in.r_new));
    double n_pkts = 1.0 / in.p_r;
    double x_r = in.x_d;
    int i = 0;
    while (x_r < in.x_max) {
      extra += (in.r_new / s) * (in.x_max - x_r);
      ++i;
      const double r_i = converged_rtt(in.r_old, in.r_new, off + i, q);
      const double p_i = 6.0 / (n_pkts + 6.0 / in.p_r);
      const double x_eq = tfrc::throughput_equation(p_i, r_i, s, 4.0 * r_i);
      n_pkts += r_i * x_r / s;
      x_r = std::min(x_eq, 2.0 * x_r);
      if (i > kMaxGrowthRounds) throw std::runtime_error("growth recursion overflow");
    }
    est.extra_wasted = extra;
    est.growth_rounds = i;
  }

  if (in.x_max < in.x_d) {
    est.total_wasted = 0.0;
  } else if (in.x_max == in.x_d) {
    est.total_wasted = std::floor(est.wasted);
  } else {
    est.total_wasted = std::floor(est.wasted) + std::floor(est.extra_wasted);
  }
  return est;
}

}  // namespace ftfrc::model
