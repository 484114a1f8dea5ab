#pragma once

#include <array>
#include <cstddef>

namespace ftfrc::tfrc {

// Rate floor horizon: one packet per t_mbi seconds.
inline constexpr double kMaxBackoffInterval = 64.0;

// Number of weighted loss intervals used in the loss event rate.
inline constexpr std::size_t kLossIntervalCount = 8;

inline constexpr std::array<double, kLossIntervalCount> kLossIntervalWeights = {
    1.0, 1.0, 1.0, 1.0, 0.8, 0.6, 0.4, 0.2};

inline constexpr double kLossIntervalWeightSum = 6.0;

// EWMA coefficient for the RTT estimator (weight of the old estimate).
inline constexpr double kRttFilterWeight = 0.9;

// Nofeedback timeout before the first RTT sample exists.
inline constexpr double kInitialNofeedbackTimeout = 2.0;

inline constexpr double kDefaultSegmentSize = 500.0;

}  // namespace ftfrc::tfrc
