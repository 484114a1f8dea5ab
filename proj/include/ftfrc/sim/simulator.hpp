#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <queue>
#include <string>
#include <vector>

#include "ftfrc/sim/tcp_reno.hpp"
#include "ftfrc/sim/trace.hpp"
#include "ftfrc/tfrc/receiver.hpp"
#include "ftfrc/tfrc/sender.hpp"

namespace ftfrc::sim {

struct LinkSpec {
  double capacity_bps = 0.0;
  double one_way_delay = 0.0;
  int queue_capacity = 50;
};

enum class FlowKind : std::uint8_t { Tfrc, Reno };

enum class ScenarioEventKind : std::uint8_t {
  StartFlow,        // flow_kind
  Disconnect,       // wireless link down
  Reconnect,        // wireless link up, re-parameterized to `link`
  Freeze,           // local suspend command to the TFRC sender of `flow`
  Unfreeze,         // local resume command
  FreezeRequest,    // receiver-initiated: signal the sender over the wire
  UnfreezeRequest,
};

struct ScenarioEvent {
  double t = 0.0;
  ScenarioEventKind kind = ScenarioEventKind::StartFlow;
  LinkSpec link{};                       // Reconnect only
  FlowKind flow_kind = FlowKind::Tfrc;   // StartFlow only
  int flow = 0;                          // Freeze/Unfreeze*/StartFlow target
};

// Sender(s) — router — receiver(s). Every flow has its own wired access link
// to the router; all flows share the wireless link between the router and
// the far side. Only the wireless link disconnects.
struct Scenario {
  LinkSpec wireless{384000.0, 0.25, 50};
  LinkSpec access{1e9, 1e-4, 1000};
  double reverse_capacity_bps = 1e9;  // ample reverse wireless capacity
  std::vector<ScenarioEvent> events;  // strictly time-ordered
  std::uint64_t seed = 0;
  double duration = 0.0;
  double seg_size = 500.0;
  double feedback_bytes = 40.0;
  // Uniform random host-egress delay for data packets, expressed in wireless
  // service slots (bytes / current wireless capacity). Zero keeps departures
  // exact; competition scenarios enable it to break drop-tail phase lockout
  // between deterministically spaced flows.
  double send_jitter_slots = 0.0;
  // Per-packet wireless transmission-time variability: each forward wireless
  // transmission takes bytes/capacity * (1 + U[0, x]). Models MAC/link-layer
  // service noise; keeps shared-queue occupancy phases mixed. Zero = exact.
  double service_jitter = 0.0;
};

// Throws std::invalid_argument describing the first violated invariant.
void validate_scenario(const Scenario& sc);

struct SimHooks {
  // 1-based count of option-carrying packets (data or feedback); that packet
  // is dropped with reason `injected` at emission. 0 disables.
  std::int64_t drop_nth_option_packet = 0;
};

struct FlowCounters {
  std::int64_t data_sent = 0;
  std::int64_t data_delivered = 0;       // arrivals, duplicates included
  std::int64_t data_delivered_new = 0;   // first receipts
  std::int64_t data_drop_queue = 0;
  std::int64_t data_drop_disconnected = 0;
  std::int64_t data_drop_injected = 0;
  std::int64_t ctl_sent = 0;
  std::int64_t ctl_delivered = 0;
  std::int64_t ctl_dropped = 0;
  double bytes_delivered_new = 0.0;
};

struct TfrcFlowState {
  int flow = -1;
  double rate = 0.0;
  double rtt = 0.0;
  double p = 0.0;
  tfrc::SenderPhase sender_phase = tfrc::SenderPhase::SlowStart;
  tfrc::ReceiverPhase receiver_phase = tfrc::ReceiverPhase::Normal;
  tfrc::SenderDiagnostics sender_diag{};
  tfrc::ReceiverDiagnostics receiver_diag{};
};

struct RenoFlowState {
  int flow = -1;
  double cwnd = 0.0;
  double ssthresh = 0.0;
  double srtt = 0.0;
  double rto = 0.0;
  std::uint64_t timeouts = 0;
  std::uint64_t fast_retransmits = 0;
  bool in_recovery = false;
};

struct SimResult {
  std::vector<FlowCounters> flows;
  std::vector<TfrcFlowState> tfrc_flows;
  std::vector<RenoFlowState> reno_flows;
  int peak_wireless_queue = 0;
  double end_time = 0.0;
};

// Deterministic event-driven execution. The object has value semantics: a
// copy is an independent fork of the world, which lets a sweep warm one
// simulation to stationarity and replay many seeds from the same snapshot.
class Simulation {
 public:
  explicit Simulation(const Scenario& sc, const SimHooks& hooks = {});
  Simulation(const Simulation&);
  Simulation& operator=(const Simulation&);
  Simulation(Simulation&&) noexcept;
  Simulation& operator=(Simulation&&) noexcept;
  ~Simulation();

  // Process events up to and including time t (capped by scenario duration).
  void run_until(double t, TraceSink* sink = nullptr);
  void run(TraceSink* sink = nullptr) { run_until(scenario().duration, sink); }

  // Inject a control event at t >= now(); used by sweeps after forking.
  void schedule_event(const ScenarioEvent& ev);

  double now() const;
  const Scenario& scenario() const;
  SimResult result() const;

  // Flow-0-style introspection for metrics and tests.
  double tfrc_rate(int flow) const;
  double tfrc_rtt(int flow) const;
  tfrc::SenderPhase tfrc_sender_phase(int flow) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimResult run_scenario(const Scenario& sc, TraceSink* sink = nullptr,
                       const SimHooks& hooks = {});

}  // namespace ftfrc::sim
