#include "ftfrc/scen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftfrc::scen {

using sim::DropReason;
using sim::PacketClass;
using sim::TraceEvent;
using sim::TraceKind;

void LossMeter::on_event(const TraceEvent& ev) {
  switch (ev.kind) {
    case TraceKind::LinkDown:
      t_down_ = ev.t;
      break;
    case TraceKind::LinkUp:
      t_up_ = ev.t;
      break;
    case TraceKind::Drop:
      if (ev.pclass == PacketClass::Data && ev.drop == DropReason::Disconnected &&
          (flow_ < 0 || ev.flow == flow_)) {
        ++losses_;
      }
      break;
    default:
      break;
  }
}

WastedMeter::WastedMeter(int flow, double x_ref, double seg_size, double cap)
    : flow_(flow), x_ref_(x_ref), seg_size_(seg_size), cap_(cap) {
  if (x_ref <= 0.0) throw std::invalid_argument("WastedMeter: x_ref must be positive");
  if (seg_size <= 0.0) throw std::invalid_argument("WastedMeter: seg_size must be positive");
}

void WastedMeter::advance(double t) {
  if (!active_ || done_) return;
  const double cap_t = start_ + cap_;
  const double upto = std::min(t, cap_t);
  if (upto > last_t_) {
    integral_ += (upto - last_t_) * std::max(x_ref_ - x_cur_, 0.0);
    last_t_ = upto;
  }
  if (t >= cap_t) close(cap_t, false);
}

void WastedMeter::close(double t, bool settled) {
  done_ = true;
  active_ = false;
  settled_ = settled;
  if (settled) settle_time_ = t;
}

void WastedMeter::on_event(const TraceEvent& ev) {
  if (ev.kind == TraceKind::RateChange && ev.flow == flow_) {
    advance(ev.t);
    x_cur_ = ev.value;
    if (active_ && !done_ && x_cur_ >= 0.9 * x_ref_) close(ev.t, true);
    return;
  }
  if (ev.kind == TraceKind::LinkUp && !done_) {
    active_ = true;
    start_ = ev.t;
    last_t_ = ev.t;
    if (x_cur_ >= 0.9 * x_ref_) close(ev.t, true);
    return;
  }
  advance(ev.t);
}

void WastedMeter::finalize(double t_end) {
  advance(t_end);
  if (active_ && !done_) close(std::min(t_end, start_ + cap_), false);
}

GoodputMeter::GoodputMeter(double t0, double t1) : t0_(t0), t1_(t1) {
  if (t1 <= t0) throw std::invalid_argument("GoodputMeter: empty window");
}

void GoodputMeter::on_event(const TraceEvent& ev) {
  if (ev.kind != TraceKind::Deliver || !ev.first_delivery) return;
  if (ev.t < t0_ || ev.t >= t1_) return;
  const auto f = static_cast<std::size_t>(ev.flow);
  if (f >= bytes_.size()) bytes_.resize(f + 1, 0.0);
  bytes_[f] += ev.value;
}

double GoodputMeter::bytes(int flow) const {
  const auto f = static_cast<std::size_t>(flow);
  return f < bytes_.size() ? bytes_[f] : 0.0;
}

double GoodputMeter::goodput(int flow) const { return bytes(flow) / (t1_ - t0_); }

StationarityDetector::StationarityDetector(int flow, double window, double tolerance)
    : flow_(flow), window_(window), tol_(tolerance), window_end_(window) {
  if (window <= 0.0) throw std::invalid_argument("StationarityDetector: window must be positive");
  if (tolerance <= 0.0) throw std::invalid_argument("StationarityDetector: tolerance must be positive");
}

void StationarityDetector::advance(double t) {
  while (t >= window_end_) {
    const double span = window_end_ - last_t_;
    rate_integral_ += span * x_cur_;
    rtt_integral_ += span * rtt_cur_;
    last_t_ = window_end_;

    const double mean = rate_integral_ / window_;
    if (!report_.stationary && prev_mean_ > 0.0 &&
        std::abs(mean - prev_mean_) < tol_ * prev_mean_) {
      report_.stationary = true;
      report_.t_stationary = window_end_;
      report_.mean_rate = mean;
      report_.x_recv = bytes_in_window_ / window_;
      report_.rtt = rtt_integral_ / window_;
    }
    prev_mean_ = mean;
    rate_integral_ = 0.0;
    rtt_integral_ = 0.0;
    bytes_in_window_ = 0.0;
    window_end_ += window_;
  }
  if (t > last_t_) {
    rate_integral_ += (t - last_t_) * x_cur_;
    rtt_integral_ += (t - last_t_) * rtt_cur_;
    last_t_ = t;
  }
}

void StationarityDetector::on_event(const TraceEvent& ev) {
  advance(ev.t);
  if (ev.flow != flow_) return;
  if (ev.kind == TraceKind::RateChange) {
    x_cur_ = ev.value;
    if (ev.aux > 0.0) rtt_cur_ = ev.aux;
  } else if (ev.kind == TraceKind::Deliver && ev.first_delivery) {
    bytes_in_window_ += ev.value;
  }
}

double fairness_ratio(const GoodputMeter& m, int tfrc_flow, int reno_flow) {
  const double denom = m.goodput(reno_flow);
  if (denom <= 0.0) throw std::runtime_error("fairness_ratio: competitor had no goodput in the window");
  return m.goodput(tfrc_flow) / denom;
}

}  // namespace ftfrc::scen
