#include "ftfrc/tfrc/sender.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ftfrc/model/closed_form.hpp"
#include "ftfrc/tfrc/equations.hpp"

namespace ftfrc::tfrc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

bool has_option(const std::vector<SignalOption>& opts, SignalOption want) {
  return std::find(opts.begin(), opts.end(), want) != opts.end();
}
}  // namespace

std::string to_string(SenderPhase phase) {
  switch (phase) {
    case SenderPhase::SlowStart: return "slow_start";
    case SenderPhase::CongestionAvoidance: return "congestion_avoidance";
    case SenderPhase::Frozen: return "frozen";
    case SenderPhase::Restoring: return "restoring";
    case SenderPhase::Probing: return "probing";
  }
  return "unknown";
}

TfrcSender::TfrcSender(SenderConfig config) : cfg_(config) {
  // One segment per initial timeout until the first feedback arrives.
  x_ = cfg_.seg_size / cfg_.initial_timeout;
  x_recv_cache_ = kInf;
  t_rto_ = cfg_.initial_timeout;
}

DataHeader TfrcSender::next_packet(double now) {
  DataHeader hdr;
  hdr.seq = next_seq_++;
  hdr.t_sent = now;
  hdr.rtt_est = r_est_;
  return hdr;
}

std::vector<SignalOption> TfrcSender::options_for_packet() const {
  switch (phase_) {
    case SenderPhase::Restoring: return {SignalOption::Restoring};
    case SenderPhase::Probing: return {SignalOption::Probing};
    default: return {};
  }
}

double TfrcSender::equation_rate() const {
  if (p_last_ <= 0.0 || r_est_ <= 0.0) return kInf;
  return throughput_equation(p_last_, r_est_, cfg_.seg_size, 4.0 * r_est_);
}

void TfrcSender::apply_rate_update(double x_bps, double x_recv) {
  x_recv_cache_ = x_recv;
  x_ = update_allowed_rate(x_bps, x_recv, cfg_.seg_size, cfg_.t_mbi);
}

void TfrcSender::refresh_timeout() {
  const double base = r_est_ > 0.0 ? 4.0 * r_est_ : cfg_.initial_timeout;
  t_rto_ = std::max(base, 2.0 * cfg_.seg_size / x_);
}

void TfrcSender::enter_phase(SenderPhase next) { phase_ = next; }

void TfrcSender::on_feedback(const Feedback& fb, double now) {
  if (phase_ == SenderPhase::Frozen) {
    // Content predates the disconnection; only the resume signal matters.
    if (has_option(fb.options, SignalOption::Unfreeze)) {
      if (has_option(fb.options, SignalOption::Freeze)) ++diag_.contradictory_options;
      unfreeze(now);
    } else {
      ++diag_.feedback_discarded_frozen;
    }
    return;
  }

  const double sample = now - fb.echo_ts - fb.echo_hold;
  if (sample > 0.0) {
    r_est_ = r_est_ > 0.0 ? update_rtt_estimate(r_est_, sample) : sample;
  }
  has_feedback_ = true;

  // A report that covers no measurable interval (e.g. the bootstrap feedback
  // sent on the very first packet) advertises no receive rate; keep the
  // cached one rather than capping against zero.
  const double x_recv_eff = fb.x_recv > 0.0 ? fb.x_recv : x_recv_cache_;

  switch (phase_) {
    case SenderPhase::SlowStart:
      if (fb.p > 0.0) {
        p_last_ = fb.p;
        enter_phase(SenderPhase::CongestionAvoidance);
        apply_rate_update(equation_rate(), x_recv_eff);
      } else {
        x_recv_cache_ = x_recv_eff;
        x_ = slow_start_update(x_, x_recv_eff);
      }
      break;

    case SenderPhase::CongestionAvoidance:
      if (fb.p > 0.0) p_last_ = fb.p;
      apply_rate_update(equation_rate(), x_recv_eff);
      break;

    case SenderPhase::Restoring:
      // Reported receive rate reflects the pre-freeze path; ignore it. A
      // strict increase in p means fresh congestion: fall back to normal
      // operation. The restoration-done signal moves us to probing.
      if (fb.p > p_last_) {
        p_last_ = fb.p;
        enter_phase(SenderPhase::CongestionAvoidance);
        apply_rate_update(equation_rate(), x_recv_eff);
      } else {
        p_last_ = fb.p;
        if (has_option(fb.options, SignalOption::Unfrozen)) {
          p_probe_ref_ = p_last_;
          enter_phase(SenderPhase::Probing);
        }
      }
      break;

    case SenderPhase::Probing: {
      // Exit once the observed change in p is no longer consistent with
      // plain dilution of the loss history by the probe traffic: any
      // increase, or a drop steeper than adding a loss-free RTT's worth of
      // packets could explain.
      if (fb.p <= 0.0 && p_probe_ref_ <= 0.0) break;  // pre-loss probing
      const double dp = fb.p - p_probe_ref_;
      const double dn = x_ * r_est_ / cfg_.seg_size;
      const double dp_min = p_probe_ref_ > 0.0
                                ? model::delta_p_min(dn, p_probe_ref_)
                                : 0.0;
      const bool degenerate = dp == 0.0 && fb.packets_covered == 0;
      if (!degenerate && (dp >= 0.0 || dp <= dp_min)) {
        p_last_ = fb.p;
        enter_phase(SenderPhase::CongestionAvoidance);
        apply_rate_update(equation_rate(), x_recv_eff);
      } else {
        p_probe_ref_ = fb.p;
        p_last_ = fb.p;
      }
      break;
    }

    case SenderPhase::Frozen:
      break;  // handled above
  }

  if (has_option(fb.options, SignalOption::Freeze)) {
    if (has_option(fb.options, SignalOption::Unfreeze)) ++diag_.contradictory_options;
    freeze(now);
    return;
  }
  refresh_timeout();
}

void TfrcSender::on_nofeedback_expiry(double now) {
  (void)now;
  if (phase_ == SenderPhase::Frozen) return;
  ++diag_.nofeedback_expiries;

  const double floor = cfg_.seg_size / cfg_.t_mbi;
  if (!has_feedback_) {
    x_ = std::max(x_ / 2.0, floor);
  } else {
    const double x_bps = equation_rate();
    if (x_bps > 2.0 * x_recv_cache_) {
      x_recv_cache_ /= 2.0;
    } else {
      x_recv_cache_ = x_bps / 4.0;
    }
    const double x_new =
        update_allowed_rate(x_bps, x_recv_cache_, cfg_.seg_size, cfg_.t_mbi);
    x_ = std::max(std::min(x_new, x_ / 2.0), floor);
  }
  refresh_timeout();
}

void TfrcSender::on_probe_tick(double now) {
  (void)now;
  if (phase_ != SenderPhase::Probing) return;
  ++diag_.probe_ticks;
  x_ = 2.0 * x_;  // deliberate uncapped doubling; the exit test bounds it
}

void TfrcSender::freeze(double now) {
  (void)now;
  if (phase_ == SenderPhase::Frozen) {
    ++diag_.redundant_freeze;
    return;
  }
  saved_x_recv_ = x_recv_cache_;
  enter_phase(SenderPhase::Frozen);
}

void TfrcSender::unfreeze(double now) {
  (void)now;
  if (phase_ != SenderPhase::Frozen) {
    ++diag_.redundant_unfreeze;
    return;
  }
  x_recv_cache_ = saved_x_recv_;
  enter_phase(SenderPhase::Restoring);
  refresh_timeout();
}

}  // namespace ftfrc::tfrc
