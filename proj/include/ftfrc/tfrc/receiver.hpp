#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ftfrc/tfrc/constants.hpp"
#include "ftfrc/tfrc/loss_history.hpp"
#include "ftfrc/tfrc/wire.hpp"

namespace ftfrc::tfrc {

enum class ReceiverPhase {
  Normal,
  Restoration,
  Probed,
};

std::string to_string(ReceiverPhase phase);

struct ReceiverConfig {
  double seg_size = kDefaultSegmentSize;
};

struct ReceiverDiagnostics {
  std::uint64_t duplicate_packets = 0;
  std::uint64_t recovery_passes = 0;
  std::uint64_t history_reinits = 0;
  std::uint64_t loss_events = 0;
};

// Receiving side: loss detection via sequence gaps, loss-event grouping
// within one RTT, receive-rate measurement, and feedback assembly. Passive;
// the host owns the feedback timer.
//
// Host contract: call on_packet for every arriving data packet, then send a
// feedback immediately if feedback_due() says so; otherwise once per
// feedback_interval(). Signalling requests (request_freeze / request_unfreeze)
// also make feedback due, even without new data.
class TfrcReceiver {
 public:
  explicit TfrcReceiver(ReceiverConfig config = {});

  ReceiverPhase phase() const { return phase_; }
  double rtt_view() const { return rtt_view_; }
  double last_measured_rate() const { return last_x_recv_; }
  const ReceiverDiagnostics& diagnostics() const { return diag_; }
  const LossIntervalHistory& history() const { return history_; }

  void on_packet(const DataHeader& hdr, const std::vector<SignalOption>& opts,
                 double size_bytes, double now);

  bool feedback_due() const;
  double feedback_interval() const;
  std::optional<Feedback> make_feedback(double now);

  // Ask the sender to suspend/resume; repeated on the next three feedbacks
  // to survive reverse-path loss.
  void request_freeze();
  void request_unfreeze();

  // Replace the loss history with eight intervals matching the loss rate
  // that the throughput relation associates with (x_recv, rtt).
  void reinit_loss_history(double x_recv, double rtt);

 private:
  void note_losses(std::int64_t missing, double now);
  double rate_for_inversion() const;

  ReceiverConfig cfg_;
  ReceiverPhase phase_ = ReceiverPhase::Normal;
  LossIntervalHistory history_;

  bool any_received_ = false;
  std::int64_t cursor_ = 0;         // highest in-order-processed seq
  double last_arrival_ = 0.0;       // arrival time of packet `cursor_`
  double last_echo_ts_ = 0.0;       // sender stamp of that packet
  double rtt_view_ = 0.0;           // sender-advertised RTT, 0 while unknown
  double first_arrival_ = 0.0;

  bool loss_seen_ = false;
  double event_anchor_ = 0.0;       // estimated time of current loss event

  double last_fb_time_ = 0.0;
  double bytes_since_fb_ = 0.0;
  std::int64_t pkts_since_fb_ = 0;
  double total_bytes_ = 0.0;
  double last_x_recv_ = 0.0;
  bool loss_pending_fb_ = false;

  double restoration_entered_ = 0.0;
  int freeze_budget_ = 0;
  int unfreeze_budget_ = 0;

  ReceiverDiagnostics diag_;
};

}  // namespace ftfrc::tfrc
