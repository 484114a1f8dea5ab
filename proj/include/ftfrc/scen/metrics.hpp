#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "ftfrc/sim/trace.hpp"

namespace ftfrc::scen {

// Counts data packets lost to link disconnection, and remembers the last
// down/up window seen in the trace.
class LossMeter : public sim::TraceSink {
 public:
  explicit LossMeter(int flow = -1) : flow_(flow) {}  // -1: all flows

  void on_event(const sim::TraceEvent& ev) override;

  long long losses() const { return losses_; }
  bool saw_down() const { return t_down_ >= 0.0; }
  bool saw_up() const { return t_up_ >= 0.0; }
  double t_down() const { return t_down_; }
  double t_up() const { return t_up_; }

 private:
  int flow_;
  long long losses_ = 0;
  double t_down_ = -1.0;
  double t_up_ = -1.0;
};

// Integrates one flow's rate shortfall against a steady-state reference,
// from link restoration until the rate recovers to within 10% of the
// reference or a time cap expires. Reported in segment equivalents.
class WastedMeter : public sim::TraceSink {
 public:
  WastedMeter(int flow, double x_ref, double seg_size, double cap = 100.0);

  void on_event(const sim::TraceEvent& ev) override;
  bool stop_requested() const override { return stop_when_done_ && done_; }

  // Ends integration at `t_end` (e.g. end of the run) if still open.
  void finalize(double t_end);

  void set_stop_when_done(bool v) { stop_when_done_ = v; }
  bool active() const { return active_; }
  bool done() const { return done_; }
  bool settled() const { return settled_; }
  double settle_time() const { return settle_time_; }
  double start_time() const { return start_; }
  double wasted_packets() const { return integral_ / seg_size_; }

 private:
  void advance(double t);
  void close(double t, bool settled);

  int flow_;
  double x_ref_;
  double seg_size_;
  double cap_;
  bool stop_when_done_ = false;
  double x_cur_ = 0.0;
  bool active_ = false;
  bool done_ = false;
  bool settled_ = false;
  double start_ = -1.0;
  double settle_time_ = -1.0;
  double last_t_ = 0.0;
  double integral_ = 0.0;  // byte-seconds of shortfall
};

// Per-flow goodput (bytes of first-time deliveries) over a fixed window.
class GoodputMeter : public sim::TraceSink {
 public:
  GoodputMeter(double t0, double t1);

  void on_event(const sim::TraceEvent& ev) override;

  double bytes(int flow) const;
  double goodput(int flow) const;  // bytes/s over the window

 private:
  double t0_;
  double t1_;
  std::vector<double> bytes_;
};

struct StationarityReport {
  bool stationary = false;
  double t_stationary = -1.0;  // end of the second agreeing window
  double mean_rate = 0.0;      // time-mean allowed rate over that window
  double x_recv = 0.0;         // delivery rate over that window, bytes/s
  double rtt = 0.0;            // time-mean RTT estimate over that window
};

// Declares a flow stationary when the windowed mean of its allowed rate
// changes by less than `tolerance` across two consecutive windows.
class StationarityDetector : public sim::TraceSink {
 public:
  explicit StationarityDetector(int flow, double window = 30.0,
                                double tolerance = 0.05);

  void on_event(const sim::TraceEvent& ev) override;
  bool stop_requested() const override {
    return stop_when_stationary_ && report_.stationary;
  }

  void set_stop_when_stationary(bool v) { stop_when_stationary_ = v; }
  const StationarityReport& report() const { return report_; }

 private:
  void advance(double t);

  int flow_;
  double window_;
  double tol_;
  bool stop_when_stationary_ = false;
  double x_cur_ = 0.0;
  double rtt_cur_ = 0.0;
  double last_t_ = 0.0;
  double window_end_;
  double rate_integral_ = 0.0;
  double rtt_integral_ = 0.0;
  double bytes_in_window_ = 0.0;
  double prev_mean_ = -1.0;
  StationarityReport report_;
};

// TFRC-to-competitor goodput ratio over [t0, t1].
double fairness_ratio(const GoodputMeter& m, int tfrc_flow, int reno_flow);

}  // namespace ftfrc::scen
