#include "ftfrc/sim/tcp_reno.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftfrc::sim {

RenoSender::RenoSender(RenoConfig config)
    : cfg_(config),
      cwnd_(config.mss),
      ssthresh_(config.initial_ssthresh),
      rto_(config.initial_rto) {
  cfg_.rwnd = std::max(cfg_.rwnd, 2.0 * cfg_.mss);
}

bool RenoSender::can_send() const {
  if (pending_retx_ >= 0) return true;
  return flight_bytes() + cfg_.mss <= std::min(cwnd_, cfg_.rwnd);
}

RenoSender::Emission RenoSender::on_send(double now) {
  if (pending_retx_ >= 0) {
    const std::int64_t seq = pending_retx_;
    pending_retx_ = -1;
    const std::size_t idx = static_cast<std::size_t>(seq - snd_una_);
    if (idx < send_times_.size()) send_times_[idx] = -1.0;  // Karn
    if (rto_deadline_ == kNever) arm_rto(now);
    return {seq, true};
  }
  if (flight_bytes() + cfg_.mss > std::min(cwnd_, cfg_.rwnd)) {
    throw std::logic_error("RenoSender::on_send called while window is full");
  }
  const std::int64_t seq = snd_nxt_++;
  const bool resend = seq < karn_until_;  // go-back-N pass after a timeout
  send_times_.push_back(resend ? -1.0 : now);
  if (rto_deadline_ == kNever) arm_rto(now);
  return {seq, resend};
}

void RenoSender::take_rtt_sample(double sample) {
  if (sample <= 0.0) return;
  if (!srtt_valid_) {
    srtt_ = sample;
    rttvar_ = sample / 2.0;
    srtt_valid_ = true;
  } else {
    rttvar_ = 0.75 * rttvar_ + 0.25 * std::abs(srtt_ - sample);
    srtt_ = 0.875 * srtt_ + 0.125 * sample;
  }
  rto_ = std::clamp(srtt_ + 4.0 * rttvar_, cfg_.min_rto, cfg_.max_rto);
}

void RenoSender::arm_rto(double now) { rto_deadline_ = now + rto_; }

void RenoSender::on_ack(std::int64_t ack, double now) {
  if (ack > snd_una_) {
    // Advance: sample RTT from the oldest newly covered segment, the one this
    // ACK directly acknowledges. Segments covered later in the same cumulative
    // jump sat delivered behind a hole, so their timestamps no longer measure
    // the path. An ACK may run past snd_nxt_ when originals still in flight at
    // a timeout are delivered after the go-back-N rollback; clamp, don't
    // reject.
    double oldest = -1.0;
    const std::int64_t n_acked = std::min(ack, snd_nxt_) - snd_una_;
    for (std::int64_t i = 0; i < n_acked; ++i) {
      if (i == 0) oldest = send_times_.front();
      send_times_.pop_front();
    }
    if (oldest >= 0.0) take_rtt_sample(now - oldest);

    const double acked_bytes = static_cast<double>(ack - snd_una_) * cfg_.mss;
    snd_una_ = ack;
    if (snd_nxt_ < ack) snd_nxt_ = ack;
    dup_acks_ = 0;
    if (pending_retx_ >= 0 && pending_retx_ < snd_una_) pending_retx_ = -1;

    if (in_recovery_) {
      if (ack >= recover_) {
        // Full ACK: the whole window outstanding at loss detection is now
        // acknowledged; deflate and leave recovery.
        in_recovery_ = false;
        cwnd_ = ssthresh_;
      } else {
        // NewReno partial ACK: the next hole is retransmitted immediately and
        // the inflated window is deflated by the amount acknowledged.
        pending_retx_ = snd_una_;
        cwnd_ = std::max(cwnd_ - acked_bytes + cfg_.mss, cfg_.mss);
      }
    } else if (cwnd_ < ssthresh_) {
      cwnd_ = std::min(cwnd_ + cfg_.mss, cfg_.rwnd);  // slow start
    } else {
      cwnd_ = std::min(cwnd_ + cfg_.mss * cfg_.mss / cwnd_,
                       cfg_.rwnd);  // congestion avoidance
    }

    rto_deadline_ = rto_armed() ? now + rto_ : kNever;
    return;
  }

  // Duplicate ACK.
  if (!rto_armed()) return;
  ++dup_acks_;
  if (in_recovery_) {
    // Inflate while the gap persists so delivered data keeps freeing window;
    // the advertised window bounds how far this can run.
    cwnd_ = std::min(cwnd_ + cfg_.mss, cfg_.rwnd);
    return;
  }
  // The guard suppresses spurious fast retransmits triggered by duplicate
  // ACKs for the pre-timeout flight during a go-back-N pass.
  if (dup_acks_ == 3 && snd_una_ >= fastrtx_guard_) {
    ssthresh_ = std::max(flight_bytes() / 2.0, 2.0 * cfg_.mss);
    cwnd_ = ssthresh_ + 3.0 * cfg_.mss;
    in_recovery_ = true;
    recover_ = snd_nxt_;
    pending_retx_ = snd_una_;
    ++fast_retx_;
  }
}

void RenoSender::on_rto_expiry(double now) {
  if (!rto_armed()) {
    rto_deadline_ = kNever;
    return;
  }
  ++timeouts_;
  // Only the first expiry of a loss event halves ssthresh. Repeated backoffs
  // while the same go-back-N range is still unacked leave it alone, as real
  // stacks do, so a long outage does not compound the collapse.
  if (snd_una_ >= karn_until_) {
    ssthresh_ = std::max(flight_bytes() / 2.0, 2.0 * cfg_.mss);
  }
  cwnd_ = cfg_.mss;
  dup_acks_ = 0;
  in_recovery_ = false;
  pending_retx_ = -1;
  // Go-back-N: everything past the cumulative ACK point is presumed lost and
  // is resent through the normal send path. Karn's rule taints the resent
  // range so no RTT sample is taken from an ambiguous segment.
  karn_until_ = std::max(karn_until_, snd_nxt_);
  fastrtx_guard_ = std::max(fastrtx_guard_, snd_nxt_);
  snd_nxt_ = snd_una_;
  send_times_.clear();
  rto_ = std::min(rto_ * 2.0, cfg_.max_rto);  // exponential backoff
  arm_rto(now);
}

RenoReceiver::Reaction RenoReceiver::on_segment(std::int64_t seq) {
  Reaction r;
  if (seq == rcv_nxt_) {
    r.new_data = true;
    ++rcv_nxt_;
    auto it = out_of_order_.begin();
    while (it != out_of_order_.end() && *it == rcv_nxt_) {
      ++rcv_nxt_;
      it = out_of_order_.erase(it);
    }
  } else if (seq > rcv_nxt_) {
    r.new_data = out_of_order_.insert(seq).second;
  }
  r.ack = rcv_nxt_;
  return r;
}

}  // namespace ftfrc::sim
