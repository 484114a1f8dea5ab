#pragma once

#include "ftfrc/model/closed_form.hpp"

namespace ftfrc::model {

// Mechanistic re-derivation of the disconnection timeline: walks expiry by
// expiry, halving a running rate, instead of evaluating per-index closed
// forms. Exists to validate disconnect_timeline against an independent
// construction; the two must agree bit for bit.
BackoffTimeline stepped_timeline(const DisconnectInputs& in);

// Exact (bitwise) comparison of two timelines, including every step.
bool timelines_identical(const BackoffTimeline& a, const BackoffTimeline& b);

}  // namespace ftfrc::model
