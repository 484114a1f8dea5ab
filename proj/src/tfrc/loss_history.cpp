#include "ftfrc/tfrc/loss_history.hpp"

#include <algorithm>

namespace ftfrc::tfrc {

void LossIntervalHistory::start_new_event() {
  completed_.insert(completed_.begin(), open_);
  if (completed_.size() > kLossIntervalCount) completed_.pop_back();
  open_ = 0;
}

void LossIntervalHistory::reinitialize(std::int64_t interval_len,
                                       std::size_t count) {
  completed_.assign(std::min(count, kLossIntervalCount), interval_len);
  open_ = 0;
}

std::optional<double> LossIntervalHistory::loss_event_rate() const {
  const std::size_t k = completed_.size();
  if (k == 0) return std::nullopt;
  // s0 weights intervals 0..k-1 (interval 0 = the open one), s1 shifts the
  // window one interval back so a fresh loss does not move the average.
  double wsum = 0.0, s0 = 0.0, s1 = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double w = kLossIntervalWeights[i];
    wsum += w;
    const double i_cur = (i == 0) ? static_cast<double>(open_)
                                  : static_cast<double>(completed_[i - 1]);
    s0 += w * i_cur;
    s1 += w * static_cast<double>(completed_[i]);
  }
  const double denom = std::max(s0, s1);
  if (denom <= 0.0) return 1.0;
  return wsum / denom;
}

}  // namespace ftfrc::tfrc
