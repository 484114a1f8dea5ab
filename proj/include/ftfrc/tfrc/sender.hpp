#pragma once

#include <cstdint>
#include <string>

#include "ftfrc/tfrc/constants.hpp"
#include "ftfrc/tfrc/wire.hpp"

namespace ftfrc::tfrc {

enum class SenderPhase {
  SlowStart,
  CongestionAvoidance,
  Frozen,
  Restoring,
  Probing,
};

std::string to_string(SenderPhase phase);

struct SenderConfig {
  double seg_size = kDefaultSegmentSize;
  double t_mbi = kMaxBackoffInterval;
  double initial_timeout = kInitialNofeedbackTimeout;
};

struct SenderDiagnostics {
  std::uint64_t feedback_discarded_frozen = 0;
  std::uint64_t redundant_freeze = 0;
  std::uint64_t redundant_unfreeze = 0;
  std::uint64_t contradictory_options = 0;
  std::uint64_t nofeedback_expiries = 0;
  std::uint64_t probe_ticks = 0;
};

// Rate-control state machine for the sending side. Purely passive: the host
// owns all timers and calls in; the machine never schedules anything itself.
//
// Host contract:
//  - send pacing: emit one segment every seg_size / allowed_rate() seconds
//    while send_timer_active() is true; re-read the rate after every call.
//  - nofeedback timer: re-arm to nofeedback_timeout() after every
//    on_feedback / on_nofeedback_expiry; cancel on freeze, re-arm on
//    unfreeze.
//  - probe timer: while phase() == Probing, call on_probe_tick once per
//    rtt_estimate().
class TfrcSender {
 public:
  explicit TfrcSender(SenderConfig config = {});

  SenderPhase phase() const { return phase_; }
  double allowed_rate() const { return x_; }
  double rtt_estimate() const { return r_est_; }
  double nofeedback_timeout() const { return t_rto_; }
  double loss_event_rate_view() const { return p_last_; }
  bool send_timer_active() const { return phase_ != SenderPhase::Frozen; }
  const SenderDiagnostics& diagnostics() const { return diag_; }

  // Stamps the next outgoing data packet and advances the sequence counter.
  DataHeader next_packet(double now);

  // Signalling options to attach to every data packet in the current phase.
  std::vector<SignalOption> options_for_packet() const;

  void on_feedback(const Feedback& fb, double now);
  void on_nofeedback_expiry(double now);
  void on_probe_tick(double now);

  // Suspend: snapshot the receive-rate cap, stop sending. Feedback arriving
  // while frozen is discarded except for an Unfreeze option.
  void freeze(double now);
  // Resume at the pre-freeze rate and enter the restoration phase.
  void unfreeze(double now);

 private:
  void enter_phase(SenderPhase next);
  double equation_rate() const;  // +inf while no loss has been reported
  void apply_rate_update(double x_bps, double x_recv);
  void refresh_timeout();

  SenderConfig cfg_;
  SenderPhase phase_ = SenderPhase::SlowStart;
  double x_ = 0.0;             // allowed send rate, bytes/s
  double x_recv_cache_ = 0.0;  // most recent receive-rate report (inf before one)
  double saved_x_recv_ = 0.0;  // snapshot taken at freeze()
  double r_est_ = 0.0;         // smoothed RTT, 0 before first sample
  double t_rto_ = 0.0;
  double p_last_ = 0.0;        // latest applied loss event rate
  double p_probe_ref_ = 0.0;   // reference p for the probing exit test
  bool has_feedback_ = false;
  std::int64_t next_seq_ = 0;
  SenderDiagnostics diag_;
};

}  // namespace ftfrc::tfrc
