#pragma once

#include <cstdint>
#include <deque>
#include <set>

namespace ftfrc::sim {

struct RenoConfig {
  double mss = 500.0;            // segment payload bytes
  double initial_rto = 1.0;
  double min_rto = 0.2;          // Linux-style floor
  double max_rto = 60.0;
  double initial_ssthresh = 1e9; // effectively unbounded
  // Receiver's advertised window. Bounds the flight regardless of cwnd, which
  // also bounds how far duplicate-ACK inflation can carry a long recovery.
  double rwnd = 256000.0;
};

// Byte-counting TCP NewReno sender: slow start, AIMD congestion avoidance,
// fast retransmit on three duplicate ACKs with partial-ACK recovery, and an
// exponentially backed-off retransmission timer with go-back-N resend. No
// SACK; one ACK per received segment. Passive: the host sends segments while
// can_send(), delivers ACKs, and fires the retransmission timer at
// rto_deadline().
class RenoSender {
 public:
  explicit RenoSender(RenoConfig config = {});

  bool can_send() const;
  bool has_pending_retransmit() const { return pending_retx_ >= 0; }

  struct Emission {
    std::int64_t seq = 0;
    bool retransmit = false;
  };
  Emission on_send(double now);

  void on_ack(std::int64_t ack, double now);

  bool rto_armed() const { return snd_nxt_ > snd_una_; }
  double rto_deadline() const { return rto_armed() ? rto_deadline_ : kNever; }
  void on_rto_expiry(double now);

  double cwnd_bytes() const { return cwnd_; }
  double ssthresh_bytes() const { return ssthresh_; }
  double smoothed_rtt() const { return srtt_; }
  double rto() const { return rto_; }
  std::int64_t next_seq() const { return snd_nxt_; }
  std::int64_t unacked_seq() const { return snd_una_; }
  bool in_recovery() const { return in_recovery_; }
  std::uint64_t timeouts() const { return timeouts_; }
  std::uint64_t fast_retransmits() const { return fast_retx_; }

  static constexpr double kNever = 1e300;

 private:
  double flight_bytes() const {
    return static_cast<double>(snd_nxt_ - snd_una_) * cfg_.mss;
  }
  void take_rtt_sample(double sample);
  void arm_rto(double now);

  RenoConfig cfg_;
  double cwnd_;
  double ssthresh_;
  std::int64_t snd_una_ = 0;
  std::int64_t snd_nxt_ = 0;
  std::int64_t karn_until_ = 0;  // seqs below this resend without RTT samples
  std::int64_t recover_ = 0;     // recovery ends when cumulatively acked
  std::int64_t fastrtx_guard_ = 0;  // no fast retransmit below this seq
  int dup_acks_ = 0;
  bool in_recovery_ = false;
  std::int64_t pending_retx_ = -1;

  // Send timestamp per outstanding segment, front = snd_una_. A negative
  // entry marks a retransmitted segment (Karn: never sampled).
  std::deque<double> send_times_;

  double srtt_ = 0.0;
  double rttvar_ = 0.0;
  bool srtt_valid_ = false;
  double rto_;
  double rto_deadline_ = kNever;

  std::uint64_t timeouts_ = 0;
  std::uint64_t fast_retx_ = 0;
};

// Reno receiver: cumulative ACKs, out-of-order buffering, duplicate
// detection.
class RenoReceiver {
 public:
  struct Reaction {
    std::int64_t ack = 0;   // cumulative: next expected seq
    bool new_data = false;  // first receipt of this segment
  };
  Reaction on_segment(std::int64_t seq);

  std::int64_t next_expected() const { return rcv_nxt_; }

 private:
  std::int64_t rcv_nxt_ = 0;
  std::set<std::int64_t> out_of_order_;
};

}  // namespace ftfrc::sim
