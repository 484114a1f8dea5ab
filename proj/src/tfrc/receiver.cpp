#include "ftfrc/tfrc/receiver.hpp"

#include <algorithm>
#include <cmath>

#include "ftfrc/tfrc/equations.hpp"

namespace ftfrc::tfrc {

namespace {
// Grouping window and inversion both need a positive RTT even before the
// first estimate has been advertised.
constexpr double kBootstrapRtt = 1e-3;
constexpr double kBootstrapFeedbackInterval = 0.5;

std::int64_t interval_from_rate(double p) {
  return std::max<std::int64_t>(1, std::llround(1.0 / p));
}
}  // namespace

std::string to_string(ReceiverPhase phase) {
  switch (phase) {
    case ReceiverPhase::Normal: return "normal";
    case ReceiverPhase::Restoration: return "restoration";
    case ReceiverPhase::Probed: return "probed";
  }
  return "unknown";
}

TfrcReceiver::TfrcReceiver(ReceiverConfig config) : cfg_(config) {}

double TfrcReceiver::rate_for_inversion() const {
  double rate = last_x_recv_;
  if (rate <= 0.0 && last_arrival_ > first_arrival_) {
    rate = total_bytes_ / (last_arrival_ - first_arrival_);
  }
  if (rate <= 0.0) rate = cfg_.seg_size;  // nothing measured yet
  return std::max(rate, cfg_.seg_size / kMaxBackoffInterval);
}

void TfrcReceiver::reinit_loss_history(double x_recv, double rtt) {
  if (x_recv <= 0.0) throw std::invalid_argument("reinit_loss_history: x_recv must be positive");
  if (rtt <= 0.0) throw std::invalid_argument("reinit_loss_history: rtt must be positive");
  const double p_eq = invert_throughput(x_recv, rtt, cfg_.seg_size).p;
  history_.reinitialize(interval_from_rate(p_eq), kLossIntervalCount);
  loss_seen_ = true;
  ++diag_.history_reinits;
}

void TfrcReceiver::note_losses(std::int64_t missing, double now) {
  const double base = last_arrival_;
  const double step = (now - base) / static_cast<double>(missing + 1);
  const double window = rtt_view_ > 0.0 ? rtt_view_ : kBootstrapRtt;

  for (std::int64_t j = 1; j <= missing; ++j) {
    const double t_lost = base + static_cast<double>(j) * step;
    if (!loss_seen_) {
      // First loss ever: seed the history with one interval sized so the
      // reported p matches the throughput relation at the observed rate.
      const double p_init =
          invert_throughput(rate_for_inversion(), window, cfg_.seg_size).p;
      history_.reinitialize(interval_from_rate(p_init), 1);
      loss_seen_ = true;
      event_anchor_ = t_lost;
      loss_pending_fb_ = true;
      ++diag_.loss_events;
    } else if (t_lost - event_anchor_ > window) {
      if (phase_ == ReceiverPhase::Probed) {
        // Losses while being probed end the probe: restart the history at
        // the loss rate implied by the last measured receive rate, so the
        // next report reflects current conditions instead of stale ones.
        reinit_loss_history(rate_for_inversion(), window);
      } else {
        history_.start_new_event();
      }
      event_anchor_ = t_lost;
      loss_pending_fb_ = true;
      ++diag_.loss_events;
    }
    history_.add_packet(1);  // lost packets still occupy the interval
  }
}

void TfrcReceiver::on_packet(const DataHeader& hdr,
                             const std::vector<SignalOption>& opts,
                             double size_bytes, double now) {
  if (hdr.rtt_est > 0.0) rtt_view_ = hdr.rtt_est;

  bool signalled = false;
  for (SignalOption opt : opts) {
    if (opt == SignalOption::Restoring) {
      signalled = true;
      if (phase_ != ReceiverPhase::Restoration) {
        phase_ = ReceiverPhase::Restoration;
        restoration_entered_ = now;
      }
    } else if (opt == SignalOption::Probing) {
      signalled = true;
      phase_ = ReceiverPhase::Probed;
    }
  }
  if (!signalled && phase_ != ReceiverPhase::Normal) {
    // Plain packet after a signalled phase: the episode is over.
    phase_ = ReceiverPhase::Normal;
    ++diag_.recovery_passes;
  }

  if (!any_received_) {
    any_received_ = true;
    cursor_ = hdr.seq;
    first_arrival_ = now;
    last_fb_time_ = now;
  } else if (hdr.seq <= cursor_) {
    ++diag_.duplicate_packets;
    return;
  } else if (hdr.seq > cursor_ + 1) {
    note_losses(hdr.seq - cursor_ - 1, now);
    cursor_ = hdr.seq;
  } else {
    cursor_ = hdr.seq;
  }

  history_.add_packet(1);
  last_arrival_ = now;
  last_echo_ts_ = hdr.t_sent;
  bytes_since_fb_ += size_bytes;
  total_bytes_ += size_bytes;
  ++pkts_since_fb_;
}

bool TfrcReceiver::feedback_due() const {
  if (loss_pending_fb_) return true;
  if (rtt_view_ <= 0.0 && pkts_since_fb_ > 0) return true;  // bootstrap
  if (freeze_budget_ > 0 || unfreeze_budget_ > 0) return true;
  return false;
}

double TfrcReceiver::feedback_interval() const {
  return rtt_view_ > 0.0 ? rtt_view_ : kBootstrapFeedbackInterval;
}

std::optional<Feedback> TfrcReceiver::make_feedback(double now) {
  const bool signalling = freeze_budget_ > 0 || unfreeze_budget_ > 0;
  if (pkts_since_fb_ == 0 && !signalling) return std::nullopt;

  Feedback fb;
  fb.t_sent = now;
  fb.echo_ts = last_echo_ts_;
  fb.echo_hold = now - last_arrival_;
  fb.p = history_.loss_event_rate().value_or(0.0);
  fb.packets_covered = pkts_since_fb_;
  const double elapsed = now - last_fb_time_;
  fb.x_recv = elapsed > 0.0 ? bytes_since_fb_ / elapsed : last_x_recv_;

  if (freeze_budget_ > 0) {
    fb.options.push_back(SignalOption::Freeze);
    --freeze_budget_;
  }
  if (unfreeze_budget_ > 0) {
    fb.options.push_back(SignalOption::Unfreeze);
    --unfreeze_budget_;
  }
  if (phase_ == ReceiverPhase::Restoration && rtt_view_ > 0.0 &&
      now - restoration_entered_ >= rtt_view_) {
    fb.options.push_back(SignalOption::Unfrozen);
  }

  if (pkts_since_fb_ > 0) last_x_recv_ = fb.x_recv;
  last_fb_time_ = now;
  bytes_since_fb_ = 0.0;
  pkts_since_fb_ = 0;
  loss_pending_fb_ = false;
  return fb;
}

void TfrcReceiver::request_freeze() {
  freeze_budget_ = 3;
  unfreeze_budget_ = 0;
}

void TfrcReceiver::request_unfreeze() {
  unfreeze_budget_ = 3;
  freeze_budget_ = 0;
}

}  // namespace ftfrc::tfrc
