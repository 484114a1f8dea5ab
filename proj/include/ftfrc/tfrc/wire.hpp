#pragma once

#include <cstdint>
#include <vector>

#include "ftfrc/tfrc/options.hpp"

namespace ftfrc::tfrc {

// Stamp placed on each outgoing data packet.
struct DataHeader {
  std::int64_t seq = 0;
  double t_sent = 0.0;
  double rtt_est = 0.0;  // sender's RTT estimate, 0 while unknown
};

// Receiver report. echo_ts/echo_hold let the sender compute an RTT sample
// free of receiver hold time.
struct Feedback {
  double t_sent = 0.0;
  double echo_ts = 0.0;
  double echo_hold = 0.0;
  double p = 0.0;       // loss event rate, 0 before any loss
  double x_recv = 0.0;  // measured receive rate, bytes/s
  std::int64_t packets_covered = 0;  // data packets since previous feedback
  std::vector<SignalOption> options;
};

}  // namespace ftfrc::tfrc
