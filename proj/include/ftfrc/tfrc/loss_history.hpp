#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ftfrc/tfrc/constants.hpp"

namespace ftfrc::tfrc {

// Loss interval bookkeeping for the weighted average of Eq-style loss event
// rate computation. Interval 0 is the open interval counting packets since
// the most recent loss event; up to kLossIntervalCount completed intervals
// follow, most recent first.
class LossIntervalHistory {
 public:
  // Packets received since the last loss event (interval 0).
  void add_packet(std::int64_t n = 1) { open_ += n; }

  // Closes interval 0 and starts a new one. The closed interval joins the
  // completed list; the oldest entry beyond kLossIntervalCount drops off.
  void start_new_event();

  // Replaces the whole history with `count` completed intervals of
  // `interval_len` packets each, and an empty open interval.
  void reinitialize(std::int64_t interval_len,
                    std::size_t count = kLossIntervalCount);

  // Weighted loss event rate. Empty history (no completed interval) means
  // no loss has been seen yet.
  std::optional<double> loss_event_rate() const;

  std::size_t completed_count() const { return completed_.size(); }
  std::int64_t open_interval() const { return open_; }
  const std::vector<std::int64_t>& completed() const { return completed_; }

 private:
  std::int64_t open_ = 0;
  std::vector<std::int64_t> completed_;  // most recent first
};

}  // namespace ftfrc::tfrc
