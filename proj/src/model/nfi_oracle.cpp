#include "ftfrc/model/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ftfrc::model {

BackoffTimeline stepped_timeline(const DisconnectInputs& in) {
  if (in.x_d <= 0.0 || in.rtt <= 0.0 || in.t_disc < 0.0 || in.seg_size <= 0.0 ||
      in.t_mbi <= 0.0) {
    throw std::domain_error("disconnect inputs must be positive");
  }
  const double floor_rate = in.seg_size / in.t_mbi;
  BackoffTimeline tl;
  double x = in.x_d;
  double elapsed = 0.0;
  int i = 0;
  while (true) {
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
    x = std::max(x / 2.0, floor_rate);
    if (++i > 100000) throw std::runtime_error("stepped timeline overflow");
  }
}

bool timelines_identical(const BackoffTimeline& a, const BackoffTimeline& b) {
  if (a.steps.size() != b.steps.size() || a.expiries != b.expiries ||
      a.x_at_reconnect != b.x_at_reconnect ||
      a.timeout_at_reconnect != b.timeout_at_reconnect || a.credit != b.credit ||
      a.lost_packets != b.lost_packets) {
    return false;
  }
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const BackoffStep& sa = a.steps[i];
    const BackoffStep& sb = b.steps[i];
    if (sa.index != sb.index || sa.start != sb.start ||
        sa.duration != sb.duration || sa.rate != sb.rate ||
        sa.timeout != sb.timeout) {
      return false;
    }
  }
  return true;
}

}  // namespace ftfrc::model
