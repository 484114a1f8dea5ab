#include "ftfrc/sim/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <deque>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>

#include "ftfrc/tfrc/options.hpp"

namespace ftfrc::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class PacketKind : std::uint8_t { TfrcData, TfrcFeedback, RenoData, RenoAck };

bool is_data(PacketKind k) {
  return k == PacketKind::TfrcData || k == PacketKind::RenoData;
}

struct SimPacket {
  PacketKind kind = PacketKind::TfrcData;
  std::uint8_t flow = 0;
  std::uint8_t opt_len = 0;
  std::array<std::uint8_t, 10> opts{};  // encoded signalling options
  std::uint32_t epoch = 0;
  double bytes = 0.0;
  std::int64_t seq = 0;  // data seq / cumulative ACK / feedback packet count
  double t_sent = 0.0;
  double rtt_est = 0.0;   // TfrcData
  double echo_ts = 0.0;   // TfrcFeedback
  double echo_hold = 0.0; // TfrcFeedback
  double p = 0.0;         // TfrcFeedback
  double x_recv = 0.0;    // TfrcFeedback
};

enum class EvKind : std::uint8_t { Arrival, Timer, Control, HostEgress };

constexpr int kTimerSend = 0;
constexpr int kTimerNofeedback = 1;
constexpr int kTimerProbe = 2;
constexpr int kTimerFeedback = 3;
constexpr int kTimerCount = 4;

constexpr int kNodeTfrcSender = 0;
constexpr int kNodeTfrcReceiver = 1;
constexpr int kNodeRenoSender = 2;

struct Event {
  double t = 0.0;
  std::uint64_t ord = 0;
  EvKind kind = EvKind::Timer;
  int pipe = -1;          // Arrival
  SimPacket pkt{};        // Arrival
  int node_kind = 0;      // Timer
  int flow = 0;           // Timer
  int timer = 0;          // Timer
  std::uint64_t gen = 0;  // Timer
  ScenarioEvent ctl{};    // Control
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.ord > b.ord;
  }
};

enum class PipeRole : std::uint8_t {
  AccessFwd,
  WirelessFwd,
  WirelessRev,
  AccessRev,
};

// Unidirectional link with a DropTail queue. Occupancy counts packets whose
// transmission has not finished; the deque of completion times is pruned
// lazily on each offer.
struct Pipe {
  PipeRole role{};
  int flow = -1;  // owning flow for access pipes, -1 for shared wireless
  double capacity_Bps = 0.0;
  double delay = 0.0;
  int limit = 0;
  bool connected = true;
  std::uint32_t epoch = 0;
  double busy_until = 0.0;
  std::deque<double> tx_ends;
  int peak = 0;
};

double uniform_cap(double capacity_bps) { return capacity_bps / 8.0; }

}  // namespace

void validate_scenario(const Scenario& sc) {
  if (sc.duration <= 0.0) throw std::invalid_argument("scenario: duration must be positive");
  if (sc.seg_size <= 0.0) throw std::invalid_argument("scenario: seg_size must be positive");
  if (sc.feedback_bytes <= 0.0) throw std::invalid_argument("scenario: feedback_bytes must be positive");
  auto check_link = [](const LinkSpec& l, const char* name) {
    if (l.capacity_bps <= 0.0) throw std::invalid_argument(std::string("scenario: ") + name + " capacity must be positive");
    if (l.one_way_delay < 0.0) throw std::invalid_argument(std::string("scenario: ") + name + " delay must be non-negative");
    if (l.queue_capacity < 1) throw std::invalid_argument(std::string("scenario: ") + name + " queue capacity must be >= 1");
  };
  check_link(sc.wireless, "wireless");
  check_link(sc.access, "access");
  if (sc.reverse_capacity_bps <= 0.0) throw std::invalid_argument("scenario: reverse capacity must be positive");
  if (sc.send_jitter_slots < 0.0) throw std::invalid_argument("scenario: send jitter must be non-negative");
  if (sc.service_jitter < 0.0) throw std::invalid_argument("scenario: service jitter must be non-negative");

  double prev_t = -kInf;
  int flows = 0;
  int open_disconnects = 0;
  std::vector<FlowKind> kinds;
  for (std::size_t i = 0; i < sc.events.size(); ++i) {
    const ScenarioEvent& ev = sc.events[i];
    if (ev.t < 0.0) throw std::invalid_argument("scenario: event " + std::to_string(i) + " has negative time");
    if (ev.t <= prev_t) throw std::invalid_argument("scenario: events must be strictly time-ordered (event " + std::to_string(i) + ")");
    prev_t = ev.t;
    switch (ev.kind) {
      case ScenarioEventKind::StartFlow:
        kinds.push_back(ev.flow_kind);
        ++flows;
        break;
      case ScenarioEventKind::Disconnect:
        if (open_disconnects > 0) throw std::invalid_argument("scenario: Disconnect while already disconnected (event " + std::to_string(i) + ")");
        ++open_disconnects;
        break;
      case ScenarioEventKind::Reconnect:
        if (open_disconnects == 0) throw std::invalid_argument("scenario: Reconnect without a preceding Disconnect (event " + std::to_string(i) + ")");
        --open_disconnects;
        check_link(ev.link, "reconnect");
        break;
      case ScenarioEventKind::Freeze:
      case ScenarioEventKind::Unfreeze:
      case ScenarioEventKind::FreezeRequest:
      case ScenarioEventKind::UnfreezeRequest:
        if (ev.flow < 0 || ev.flow >= flows) {
          throw std::invalid_argument("scenario: event " + std::to_string(i) + " references unknown flow " + std::to_string(ev.flow));
        }
        if (kinds[static_cast<std::size_t>(ev.flow)] != FlowKind::Tfrc) {
          throw std::invalid_argument("scenario: event " + std::to_string(i) + " targets a non-TFRC flow");
        }
        break;
    }
  }
  if (flows == 0) throw std::invalid_argument("scenario: no StartFlow event");
}

struct Simulation::Impl {
  struct TfrcSndNode {
    tfrc::TfrcSender m;
    bool started = false;
    double last_send = -kInf;
    double traced_rate = -1.0;
    tfrc::SenderPhase traced_phase = tfrc::SenderPhase::SlowStart;
    std::array<std::uint64_t, kTimerCount> gen{};
  };
  struct TfrcRcvNode {
    tfrc::TfrcReceiver m;
    bool fb_timer_armed = false;
    tfrc::ReceiverPhase traced_phase = tfrc::ReceiverPhase::Normal;
    std::array<std::uint64_t, kTimerCount> gen{};
  };
  struct RenoSndNode {
    RenoSender m;
    bool started = false;
    double rto_event_at = kInf;
  };
  struct RenoRcvNode {
    RenoReceiver m;
  };

  Scenario sc;
  SimHooks hooks;
  std::vector<FlowKind> flow_kinds;
  std::vector<int> kind_index;  // flow id -> index within its kind's vector
  std::vector<TfrcSndNode> tsnd;
  std::vector<TfrcRcvNode> trcv;
  std::vector<RenoSndNode> rsnd;
  std::vector<RenoRcvNode> rrcv;
  std::vector<Pipe> pipes;  // [0] wireless fwd, [1] wireless rev, then per flow
  std::priority_queue<Event, std::vector<Event>, EventAfter> pq;
  std::uint64_t next_ord = 0;
  double now = 0.0;
  TraceSink* sink = nullptr;  // live only inside run_until
  std::vector<FlowCounters> counters;
  std::int64_t option_pkts_seen = 0;
  std::vector<std::mt19937_64> egress_rng;  // per flow, for send jitter
  std::vector<double> last_egress;          // per flow, keeps egress in order
  std::mt19937_64 service_rng{0};           // wireless transmission variability

  explicit Impl(const Scenario& scenario, const SimHooks& h)
      : sc(scenario), hooks(h) {
    validate_scenario(sc);
    for (const ScenarioEvent& ev : sc.events) {
      if (ev.kind != ScenarioEventKind::StartFlow) continue;
      const int flow = static_cast<int>(flow_kinds.size());
      flow_kinds.push_back(ev.flow_kind);
      if (ev.flow_kind == FlowKind::Tfrc) {
        kind_index.push_back(static_cast<int>(tsnd.size()));
        tfrc::SenderConfig scfg;
        scfg.seg_size = sc.seg_size;
        tsnd.push_back(TfrcSndNode{tfrc::TfrcSender(scfg), false, -kInf, -1.0,
                                   tfrc::SenderPhase::SlowStart, {}});
        tfrc::ReceiverConfig rcfg;
        rcfg.seg_size = sc.seg_size;
        trcv.push_back(TfrcRcvNode{tfrc::TfrcReceiver(rcfg), false,
                                   tfrc::ReceiverPhase::Normal, {}});
      } else {
        kind_index.push_back(static_cast<int>(rsnd.size()));
        RenoConfig rcfg;
        rcfg.mss = sc.seg_size;
        rsnd.push_back(RenoSndNode{RenoSender(rcfg), false, kInf});
        rrcv.push_back(RenoRcvNode{});
      }
      (void)flow;
    }
    counters.resize(flow_kinds.size());
    for (std::size_t f = 0; f < flow_kinds.size(); ++f) {
      egress_rng.emplace_back(sc.seed * 0x9E3779B97F4A7C15ULL + f + 1);
    }
    last_egress.assign(flow_kinds.size(), 0.0);
    service_rng.seed(sc.seed * 0x9E3779B97F4A7C15ULL + 0x5851F42D4C957F2DULL);

    pipes.resize(2 + 2 * flow_kinds.size());
    pipes[0] = Pipe{PipeRole::WirelessFwd, -1, uniform_cap(sc.wireless.capacity_bps),
                    sc.wireless.one_way_delay, sc.wireless.queue_capacity,
                    true, 0, 0.0, {}, 0};
    pipes[1] = Pipe{PipeRole::WirelessRev, -1, uniform_cap(sc.reverse_capacity_bps),
                    sc.wireless.one_way_delay, sc.access.queue_capacity,
                    true, 0, 0.0, {}, 0};
    for (std::size_t f = 0; f < flow_kinds.size(); ++f) {
      pipes[2 + 2 * f] = Pipe{PipeRole::AccessFwd, static_cast<int>(f),
                              uniform_cap(sc.access.capacity_bps),
                              sc.access.one_way_delay, sc.access.queue_capacity,
                              true, 0, 0.0, {}, 0};
      pipes[3 + 2 * f] = Pipe{PipeRole::AccessRev, static_cast<int>(f),
                              uniform_cap(sc.access.capacity_bps),
                              sc.access.one_way_delay, sc.access.queue_capacity,
                              true, 0, 0.0, {}, 0};
    }

    int next_flow = 0;
    for (const ScenarioEvent& ev : sc.events) {
      Event e;
      e.t = ev.t;
      e.kind = EvKind::Control;
      e.ctl = ev;
      if (ev.kind == ScenarioEventKind::StartFlow) e.ctl.flow = next_flow++;
      push(std::move(e));
    }
  }

  void push(Event&& e) {
    e.ord = next_ord++;
    pq.push(std::move(e));
  }

  void emit(const TraceEvent& ev) {
    if (sink != nullptr) sink->on_event(ev);
  }

  // ---- timers ---------------------------------------------------------

  template <typename Node>
  void arm(Node& n, int node_kind, int flow, int timer, double t) {
    ++n.gen[timer];
    arm_keep(n, node_kind, flow, timer, t);
  }

  template <typename Node>
  void arm_keep(Node& n, int node_kind, int flow, int timer, double t) {
    Event e;
    e.t = t;
    e.kind = EvKind::Timer;
    e.node_kind = node_kind;
    e.flow = flow;
    e.timer = timer;
    e.gen = n.gen[timer];
    push(std::move(e));
  }

  template <typename Node>
  void cancel(Node& n, int timer) {
    ++n.gen[timer];
  }

  // ---- packet plumbing ------------------------------------------------

  int access_fwd(int flow) const { return 2 + 2 * flow; }
  int access_rev(int flow) const { return 3 + 2 * flow; }

  void record_drop(const SimPacket& pkt, DropReason reason) {
    FlowCounters& c = counters[pkt.flow];
    if (is_data(pkt.kind)) {
      switch (reason) {
        case DropReason::Queue: ++c.data_drop_queue; break;
        case DropReason::Disconnected: ++c.data_drop_disconnected; break;
        case DropReason::Injected: ++c.data_drop_injected; break;
        case DropReason::None: break;
      }
    } else {
      ++c.ctl_dropped;
    }
    TraceEvent ev;
    ev.t = now;
    ev.kind = TraceKind::Drop;
    ev.drop = reason;
    ev.pclass = is_data(pkt.kind) ? PacketClass::Data : PacketClass::Control;
    ev.flow = pkt.flow;
    ev.actor = 2;
    ev.seq = pkt.seq;
    ev.value = pkt.bytes;
    emit(ev);
  }

  void offer(int pipe_idx, SimPacket pkt) {
    Pipe& p = pipes[static_cast<std::size_t>(pipe_idx)];
    if (!p.connected) {
      record_drop(pkt, DropReason::Disconnected);
      return;
    }
    while (!p.tx_ends.empty() && p.tx_ends.front() <= now) p.tx_ends.pop_front();
    if (static_cast<int>(p.tx_ends.size()) >= p.limit) {
      record_drop(pkt, DropReason::Queue);
      return;
    }
    const double start = std::max(now, p.busy_until);
    double tx = pkt.bytes / p.capacity_Bps;
    if (sc.service_jitter > 0.0 && pipe_idx == 0) {
      const double u = static_cast<double>(service_rng() >> 11) * 0x1.0p-53;
      tx *= 1.0 + u * sc.service_jitter;
    }
    const double done = start + tx;
    p.busy_until = done;
    p.tx_ends.push_back(done);
    p.peak = std::max(p.peak, static_cast<int>(p.tx_ends.size()));
    pkt.epoch = p.epoch;
    Event e;
    e.t = done + p.delay;
    e.kind = EvKind::Arrival;
    e.pipe = pipe_idx;
    e.pkt = pkt;
    push(std::move(e));
  }

  // First hop from an endpoint, with the option-drop test hook applied.
  void send_from_node(SimPacket pkt) {
    if (pkt.opt_len > 0 && hooks.drop_nth_option_packet > 0) {
      if (++option_pkts_seen == hooks.drop_nth_option_packet) {
        record_drop(pkt, DropReason::Injected);
        return;
      }
    }
    if (!is_data(pkt.kind)) {
      offer(1, pkt);
      return;
    }
    if (sc.send_jitter_slots > 0.0) {
      const double u = static_cast<double>(egress_rng[pkt.flow]() >> 11) * 0x1.0p-53;
      const double slot = pkt.bytes / pipes[0].capacity_Bps;
      Event e;
      // Clamped to the previous departure so jitter never reorders a flow.
      e.t = std::max(now + u * sc.send_jitter_slots * slot, last_egress[pkt.flow]);
      last_egress[pkt.flow] = e.t;
      e.kind = EvKind::HostEgress;
      e.pkt = pkt;
      push(std::move(e));
      return;
    }
    offer(access_fwd(pkt.flow), pkt);
  }

  void handle_arrival(const Event& ev) {
    const Pipe& p = pipes[static_cast<std::size_t>(ev.pipe)];
    if (ev.pkt.epoch != p.epoch) {
      // The link was torn down while this packet was in flight.
      record_drop(ev.pkt, DropReason::Disconnected);
      return;
    }
    switch (p.role) {
      case PipeRole::AccessFwd: offer(0, ev.pkt); break;
      case PipeRole::WirelessFwd: deliver_to_receiver(ev.pkt); break;
      case PipeRole::WirelessRev: offer(access_rev(ev.pkt.flow), ev.pkt); break;
      case PipeRole::AccessRev: deliver_to_sender(ev.pkt); break;
    }
  }

  // ---- TFRC sender ----------------------------------------------------

  TfrcSndNode& tfrc_snd(int flow) { return tsnd[static_cast<std::size_t>(kind_index[static_cast<std::size_t>(flow)])]; }
  TfrcRcvNode& tfrc_rcv(int flow) { return trcv[static_cast<std::size_t>(kind_index[static_cast<std::size_t>(flow)])]; }
  RenoSndNode& reno_snd(int flow) { return rsnd[static_cast<std::size_t>(kind_index[static_cast<std::size_t>(flow)])]; }
  RenoRcvNode& reno_rcv(int flow) { return rrcv[static_cast<std::size_t>(kind_index[static_cast<std::size_t>(flow)])]; }

  // Reconcile timers and trace after any TFRC sender machine call.
  void sync_tfrc_sender(int flow, bool rearm_nofeedback) {
    TfrcSndNode& n = tfrc_snd(flow);
    const double x = n.m.allowed_rate();
    if (x != n.traced_rate) {
      TraceEvent ev;
      ev.t = now;
      ev.kind = TraceKind::RateChange;
      ev.flow = static_cast<std::uint8_t>(flow);
      ev.actor = 0;
      ev.value = x;
      ev.aux = n.m.rtt_estimate();
      emit(ev);
      n.traced_rate = x;
    }
    const tfrc::SenderPhase ph = n.m.phase();
    if (ph != n.traced_phase) {
      TraceEvent ev;
      ev.t = now;
      ev.kind = TraceKind::StateTransition;
      ev.flow = static_cast<std::uint8_t>(flow);
      ev.actor = 0;
      ev.value = static_cast<double>(ph);
      ev.aux = static_cast<double>(n.traced_phase);
      emit(ev);
      const bool was_probing = n.traced_phase == tfrc::SenderPhase::Probing;
      const bool is_probing = ph == tfrc::SenderPhase::Probing;
      if (is_probing && !was_probing) {
        arm(n, kNodeTfrcSender, flow, kTimerProbe,
            now + std::max(n.m.rtt_estimate(), 1e-3));
      } else if (was_probing && !is_probing) {
        cancel(n, kTimerProbe);
      }
      n.traced_phase = ph;
    }
    if (rearm_nofeedback) {
      if (n.m.phase() == tfrc::SenderPhase::Frozen) {
        cancel(n, kTimerNofeedback);
      } else {
        arm(n, kNodeTfrcSender, flow, kTimerNofeedback,
            now + n.m.nofeedback_timeout());
      }
    }
    if (n.m.send_timer_active()) {
      if (n.started) {
        const double gap = sc.seg_size / n.m.allowed_rate();
        arm(n, kNodeTfrcSender, flow, kTimerSend,
            std::max(now, n.last_send + gap));
      }
    } else {
      cancel(n, kTimerSend);
    }
  }

  void tfrc_send_fire(int flow) {
    TfrcSndNode& n = tfrc_snd(flow);
    if (!n.m.send_timer_active()) return;
    const double gap = sc.seg_size / n.m.allowed_rate();
    if (now + 1e-15 < n.last_send + gap) {
      arm_keep(n, kNodeTfrcSender, flow, kTimerSend, n.last_send + gap);
      return;
    }
    const tfrc::DataHeader hdr = n.m.next_packet(now);
    SimPacket pkt;
    pkt.kind = PacketKind::TfrcData;
    pkt.flow = static_cast<std::uint8_t>(flow);
    pkt.bytes = sc.seg_size;
    pkt.seq = hdr.seq;
    pkt.t_sent = hdr.t_sent;
    pkt.rtt_est = hdr.rtt_est;
    const std::vector<tfrc::SignalOption> opts = n.m.options_for_packet();
    if (!opts.empty()) {
      std::vector<std::uint8_t> buf;
      tfrc::encode_options(opts, buf);
      pkt.opt_len = static_cast<std::uint8_t>(buf.size());
      std::copy(buf.begin(), buf.end(), pkt.opts.begin());
    }
    ++counters[static_cast<std::size_t>(flow)].data_sent;
    TraceEvent ev;
    ev.t = now;
    ev.kind = TraceKind::Send;
    ev.pclass = PacketClass::Data;
    ev.flow = static_cast<std::uint8_t>(flow);
    ev.actor = 0;
    ev.seq = pkt.seq;
    ev.value = pkt.bytes;
    emit(ev);
    n.last_send = now;
    arm_keep(n, kNodeTfrcSender, flow, kTimerSend, now + gap);
    send_from_node(pkt);
  }

  void tfrc_sender_on_feedback(int flow, const SimPacket& pkt) {
    TfrcSndNode& n = tfrc_snd(flow);
    tfrc::Feedback fb;
    fb.t_sent = pkt.t_sent;
    fb.echo_ts = pkt.echo_ts;
    fb.echo_hold = pkt.echo_hold;
    fb.p = pkt.p;
    fb.x_recv = pkt.x_recv;
    fb.packets_covered = pkt.seq;
    if (pkt.opt_len > 0) {
      tfrc::OptionDecodeResult dec = tfrc::decode_options(pkt.opts.data(), pkt.opt_len);
      if (!dec.ok) throw std::logic_error("internal: undecodable options on feedback");
      fb.options = std::move(dec.options);
    }
    n.m.on_feedback(fb, now);
    sync_tfrc_sender(flow, /*rearm_nofeedback=*/true);
  }

  void tfrc_nofeedback_fire(int flow) {
    TfrcSndNode& n = tfrc_snd(flow);
    n.m.on_nofeedback_expiry(now);
    sync_tfrc_sender(flow, /*rearm_nofeedback=*/true);
  }

  void tfrc_probe_fire(int flow) {
    TfrcSndNode& n = tfrc_snd(flow);
    if (n.m.phase() != tfrc::SenderPhase::Probing) return;
    n.m.on_probe_tick(now);
    sync_tfrc_sender(flow, /*rearm_nofeedback=*/false);
    arm_keep(n, kNodeTfrcSender, flow, kTimerProbe,
             now + std::max(n.m.rtt_estimate(), 1e-3));
  }

  // ---- TFRC receiver --------------------------------------------------

  void tfrc_emit_feedback(int flow) {
    TfrcRcvNode& n = tfrc_rcv(flow);
    std::optional<tfrc::Feedback> fb = n.m.make_feedback(now);
    if (!fb) return;
    SimPacket pkt;
    pkt.kind = PacketKind::TfrcFeedback;
    pkt.flow = static_cast<std::uint8_t>(flow);
    pkt.bytes = sc.feedback_bytes;
    pkt.seq = fb->packets_covered;
    pkt.t_sent = fb->t_sent;
    pkt.echo_ts = fb->echo_ts;
    pkt.echo_hold = fb->echo_hold;
    pkt.p = fb->p;
    pkt.x_recv = fb->x_recv;
    if (!fb->options.empty()) {
      std::vector<std::uint8_t> buf;
      tfrc::encode_options(fb->options, buf);
      pkt.opt_len = static_cast<std::uint8_t>(buf.size());
      std::copy(buf.begin(), buf.end(), pkt.opts.begin());
    }
    ++counters[static_cast<std::size_t>(flow)].ctl_sent;
    TraceEvent ev;
    ev.t = now;
    ev.kind = TraceKind::FeedbackSent;
    ev.pclass = PacketClass::Control;
    ev.flow = static_cast<std::uint8_t>(flow);
    ev.actor = 1;
    ev.seq = fb->packets_covered;
    ev.value = fb->x_recv;
    ev.aux = fb->p;
    emit(ev);
    send_from_node(pkt);
  }

  void tfrc_receiver_after(int flow) {
    TfrcRcvNode& n = tfrc_rcv(flow);
    const tfrc::ReceiverPhase ph = n.m.phase();
    if (ph != n.traced_phase) {
      TraceEvent ev;
      ev.t = now;
      ev.kind = TraceKind::StateTransition;
      ev.flow = static_cast<std::uint8_t>(flow);
      ev.actor = 1;
      ev.value = static_cast<double>(ph);
      ev.aux = static_cast<double>(n.traced_phase);
      emit(ev);
      n.traced_phase = ph;
    }
  }

  void tfrc_receiver_on_data(int flow, const SimPacket& pkt) {
    TfrcRcvNode& n = tfrc_rcv(flow);
    FlowCounters& c = counters[static_cast<std::size_t>(flow)];
    ++c.data_delivered;
    ++c.data_delivered_new;  // TFRC never retransmits: every arrival is new
    c.bytes_delivered_new += pkt.bytes;
    TraceEvent ev;
    ev.t = now;
    ev.kind = TraceKind::Deliver;
    ev.pclass = PacketClass::Data;
    ev.flow = static_cast<std::uint8_t>(flow);
    ev.actor = 1;
    ev.first_delivery = true;
    ev.seq = pkt.seq;
    ev.value = pkt.bytes;
    emit(ev);

    tfrc::DataHeader hdr;
    hdr.seq = pkt.seq;
    hdr.t_sent = pkt.t_sent;
    hdr.rtt_est = pkt.rtt_est;
    std::vector<tfrc::SignalOption> opts;
    if (pkt.opt_len > 0) {
      tfrc::OptionDecodeResult dec = tfrc::decode_options(pkt.opts.data(), pkt.opt_len);
      if (!dec.ok) throw std::logic_error("internal: undecodable options on data");
      opts = std::move(dec.options);
    }
    n.m.on_packet(hdr, opts, pkt.bytes, now);
    tfrc_receiver_after(flow);

    if (!n.fb_timer_armed) {
      n.fb_timer_armed = true;
      arm(n, kNodeTfrcReceiver, flow, kTimerFeedback, now + n.m.feedback_interval());
    }
    if (n.m.feedback_due()) {
      tfrc_emit_feedback(flow);
      arm(n, kNodeTfrcReceiver, flow, kTimerFeedback, now + n.m.feedback_interval());
    }
  }

  void tfrc_feedback_fire(int flow) {
    TfrcRcvNode& n = tfrc_rcv(flow);
    tfrc_emit_feedback(flow);
    arm_keep(n, kNodeTfrcReceiver, flow, kTimerFeedback,
             now + n.m.feedback_interval());
  }

  // ---- Reno -----------------------------------------------------------

  void reno_send_segment(int flow) {
    RenoSndNode& n = reno_snd(flow);
    const RenoSender::Emission em = n.m.on_send(now);
    SimPacket pkt;
    pkt.kind = PacketKind::RenoData;
    pkt.flow = static_cast<std::uint8_t>(flow);
    pkt.bytes = sc.seg_size;
    pkt.seq = em.seq;
    pkt.t_sent = now;
    ++counters[static_cast<std::size_t>(flow)].data_sent;
    TraceEvent ev;
    ev.t = now;
    ev.kind = TraceKind::Send;
    ev.pclass = PacketClass::Data;
    ev.flow = static_cast<std::uint8_t>(flow);
    ev.actor = 0;
    ev.seq = em.seq;
    ev.value = pkt.bytes;
    ev.aux = em.retransmit ? 1.0 : 0.0;
    emit(ev);
    send_from_node(pkt);
  }

  void reno_ensure_rto_event(int flow) {
    RenoSndNode& n = reno_snd(flow);
    const double d = n.m.rto_deadline();
    if (d < n.rto_event_at) {
      n.rto_event_at = d;
      Event e;
      e.t = d;
      e.kind = EvKind::Timer;
      e.node_kind = kNodeRenoSender;
      e.flow = flow;
      e.timer = 0;
      push(std::move(e));
    }
  }

  void reno_pump(int flow) {
    RenoSndNode& n = reno_snd(flow);
    while (n.started && n.m.can_send()) reno_send_segment(flow);
    reno_ensure_rto_event(flow);
  }

  void reno_rto_fire(int flow) {
    RenoSndNode& n = reno_snd(flow);
    n.rto_event_at = kInf;
    if (!n.m.rto_armed()) return;
    const double d = n.m.rto_deadline();
    if (d > now + 1e-12) {
      // Deadline moved forward by intervening ACKs; chase it lazily.
      reno_ensure_rto_event(flow);
      return;
    }
    n.m.on_rto_expiry(now);
    reno_pump(flow);
  }

  void reno_sender_on_ack(int flow, const SimPacket& pkt) {
    RenoSndNode& n = reno_snd(flow);
    ++counters[static_cast<std::size_t>(flow)].ctl_delivered;
    n.m.on_ack(pkt.seq, now);
    reno_pump(flow);
  }

  void reno_receiver_on_data(int flow, const SimPacket& pkt) {
    RenoRcvNode& n = reno_rcv(flow);
    FlowCounters& c = counters[static_cast<std::size_t>(flow)];
    const RenoReceiver::Reaction r = n.m.on_segment(pkt.seq);
    ++c.data_delivered;
    if (r.new_data) {
      ++c.data_delivered_new;
      c.bytes_delivered_new += pkt.bytes;
    }
    TraceEvent ev;
    ev.t = now;
    ev.kind = TraceKind::Deliver;
    ev.pclass = PacketClass::Data;
    ev.flow = static_cast<std::uint8_t>(flow);
    ev.actor = 1;
    ev.first_delivery = r.new_data;
    ev.seq = pkt.seq;
    ev.value = pkt.bytes;
    emit(ev);

    SimPacket ack;
    ack.kind = PacketKind::RenoAck;
    ack.flow = static_cast<std::uint8_t>(flow);
    ack.bytes = sc.feedback_bytes;
    ack.seq = r.ack;
    ack.t_sent = now;
    ++c.ctl_sent;
    TraceEvent fe;
    fe.t = now;
    fe.kind = TraceKind::FeedbackSent;
    fe.pclass = PacketClass::Control;
    fe.flow = static_cast<std::uint8_t>(flow);
    fe.actor = 1;
    fe.seq = r.ack;
    fe.value = static_cast<double>(r.ack);
    emit(fe);
    send_from_node(ack);
  }

  // ---- delivery dispatch ---------------------------------------------

  void deliver_to_receiver(const SimPacket& pkt) {
    const FlowKind k = flow_kinds[pkt.flow];
    if (k == FlowKind::Tfrc) {
      if (pkt.kind != PacketKind::TfrcData) throw std::logic_error("internal: wrong packet kind at TFRC receiver");
      tfrc_receiver_on_data(pkt.flow, pkt);
    } else {
      if (pkt.kind != PacketKind::RenoData) throw std::logic_error("internal: wrong packet kind at Reno receiver");
      reno_receiver_on_data(pkt.flow, pkt);
    }
  }

  void deliver_to_sender(const SimPacket& pkt) {
    const FlowKind k = flow_kinds[pkt.flow];
    if (k == FlowKind::Tfrc) {
      if (pkt.kind != PacketKind::TfrcFeedback) throw std::logic_error("internal: wrong packet kind at TFRC sender");
      ++counters[pkt.flow].ctl_delivered;
      tfrc_sender_on_feedback(pkt.flow, pkt);
    } else {
      if (pkt.kind != PacketKind::RenoAck) throw std::logic_error("internal: wrong packet kind at Reno sender");
      reno_sender_on_ack(pkt.flow, pkt);
    }
  }

  // ---- control --------------------------------------------------------

  void handle_control(const ScenarioEvent& ev) {
    switch (ev.kind) {
      case ScenarioEventKind::StartFlow: {
        const int flow = ev.flow;
        if (flow_kinds[static_cast<std::size_t>(flow)] == FlowKind::Tfrc) {
          TfrcSndNode& n = tfrc_snd(flow);
          n.started = true;
          n.traced_rate = n.m.allowed_rate();
          arm(n, kNodeTfrcSender, flow, kTimerSend, now);
          arm(n, kNodeTfrcSender, flow, kTimerNofeedback,
              now + n.m.nofeedback_timeout());
          TraceEvent tr;
          tr.t = now;
          tr.kind = TraceKind::RateChange;
          tr.flow = static_cast<std::uint8_t>(flow);
          tr.value = n.m.allowed_rate();
          emit(tr);
        } else {
          RenoSndNode& n = reno_snd(flow);
          n.started = true;
          reno_pump(flow);
        }
        break;
      }
      case ScenarioEventKind::Disconnect: {
        for (int i : {0, 1}) {
          Pipe& p = pipes[static_cast<std::size_t>(i)];
          p.connected = false;
          ++p.epoch;
          p.tx_ends.clear();
          p.busy_until = now;
        }
        TraceEvent tr;
        tr.t = now;
        tr.kind = TraceKind::LinkDown;
        tr.actor = 2;
        emit(tr);
        break;
      }
      case ScenarioEventKind::Reconnect: {
        Pipe& fwd = pipes[0];
        fwd.capacity_Bps = uniform_cap(ev.link.capacity_bps);
        fwd.delay = ev.link.one_way_delay;
        fwd.limit = ev.link.queue_capacity;
        fwd.connected = true;
        fwd.busy_until = now;
        Pipe& rev = pipes[1];
        rev.delay = ev.link.one_way_delay;  // mirrored; capacity stays ample
        rev.connected = true;
        rev.busy_until = now;
        TraceEvent tr;
        tr.t = now;
        tr.kind = TraceKind::LinkUp;
        tr.actor = 2;
        tr.value = ev.link.capacity_bps;
        tr.aux = ev.link.one_way_delay;
        emit(tr);
        break;
      }
      case ScenarioEventKind::Freeze: {
        TfrcSndNode& n = tfrc_snd(ev.flow);
        n.m.freeze(now);
        sync_tfrc_sender(ev.flow, /*rearm_nofeedback=*/true);
        break;
      }
      case ScenarioEventKind::Unfreeze: {
        TfrcSndNode& n = tfrc_snd(ev.flow);
        n.m.unfreeze(now);
        sync_tfrc_sender(ev.flow, /*rearm_nofeedback=*/true);
        break;
      }
      case ScenarioEventKind::FreezeRequest: {
        TfrcRcvNode& n = tfrc_rcv(ev.flow);
        n.m.request_freeze();
        if (n.m.feedback_due()) tfrc_emit_feedback(ev.flow);
        break;
      }
      case ScenarioEventKind::UnfreezeRequest: {
        TfrcRcvNode& n = tfrc_rcv(ev.flow);
        n.m.request_unfreeze();
        if (n.m.feedback_due()) tfrc_emit_feedback(ev.flow);
        break;
      }
    }
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EvKind::Arrival:
        handle_arrival(ev);
        break;
      case EvKind::Control:
        handle_control(ev.ctl);
        break;
      case EvKind::HostEgress:
        offer(access_fwd(ev.pkt.flow), ev.pkt);
        break;
      case EvKind::Timer:
        switch (ev.node_kind) {
          case kNodeTfrcSender: {
            TfrcSndNode& n = tfrc_snd(ev.flow);
            if (ev.gen != n.gen[ev.timer]) return;  // cancelled/superseded
            if (ev.timer == kTimerSend) tfrc_send_fire(ev.flow);
            else if (ev.timer == kTimerNofeedback) tfrc_nofeedback_fire(ev.flow);
            else if (ev.timer == kTimerProbe) tfrc_probe_fire(ev.flow);
            break;
          }
          case kNodeTfrcReceiver: {
            TfrcRcvNode& n = tfrc_rcv(ev.flow);
            if (ev.gen != n.gen[ev.timer]) return;
            if (ev.timer == kTimerFeedback) tfrc_feedback_fire(ev.flow);
            break;
          }
          case kNodeRenoSender:
            reno_rto_fire(ev.flow);
            break;
          default:
            throw std::logic_error("internal: unknown timer node kind");
        }
        break;
    }
  }

  void run_until(double t_target, TraceSink* s) {
    sink = s;
    bool stopped = false;
    const double limit = std::min(t_target, sc.duration);
    while (!pq.empty() && pq.top().t <= limit) {
      Event ev = pq.top();
      pq.pop();
      now = ev.t;
      dispatch(ev);
      if (sink != nullptr && sink->stop_requested()) {
        stopped = true;
        break;
      }
    }
    if (!stopped) now = std::max(now, limit);
    sink = nullptr;
  }

  SimResult result() const {
    SimResult r;
    r.flows = counters;
    r.peak_wireless_queue = pipes[0].peak;
    r.end_time = now;
    for (std::size_t f = 0; f < flow_kinds.size(); ++f) {
      if (flow_kinds[f] != FlowKind::Tfrc) continue;
      const TfrcSndNode& s = tsnd[static_cast<std::size_t>(kind_index[f])];
      const TfrcRcvNode& rc = trcv[static_cast<std::size_t>(kind_index[f])];
      TfrcFlowState st;
      st.flow = static_cast<int>(f);
      st.rate = s.m.allowed_rate();
      st.rtt = s.m.rtt_estimate();
      st.p = s.m.loss_event_rate_view();
      st.sender_phase = s.m.phase();
      st.receiver_phase = rc.m.phase();
      st.sender_diag = s.m.diagnostics();
      st.receiver_diag = rc.m.diagnostics();
      r.tfrc_flows.push_back(st);
    }
    for (std::size_t f = 0; f < flow_kinds.size(); ++f) {
      if (flow_kinds[f] != FlowKind::Reno) continue;
      const RenoSndNode& s = rsnd[static_cast<std::size_t>(kind_index[f])];
      RenoFlowState st;
      st.flow = static_cast<int>(f);
      st.cwnd = s.m.cwnd_bytes();
      st.ssthresh = s.m.ssthresh_bytes();
      st.srtt = s.m.smoothed_rtt();
      st.rto = s.m.rto();
      st.timeouts = s.m.timeouts();
      st.fast_retransmits = s.m.fast_retransmits();
      st.in_recovery = s.m.in_recovery();
      r.reno_flows.push_back(st);
    }
    return r;
  }
};

Simulation::Simulation(const Scenario& sc, const SimHooks& hooks)
    : impl_(std::make_unique<Impl>(sc, hooks)) {}
Simulation::Simulation(const Simulation& other)
    : impl_(std::make_unique<Impl>(*other.impl_)) {}
Simulation& Simulation::operator=(const Simulation& other) {
  if (this != &other) impl_ = std::make_unique<Impl>(*other.impl_);
  return *this;
}
Simulation::Simulation(Simulation&&) noexcept = default;
Simulation& Simulation::operator=(Simulation&&) noexcept = default;
Simulation::~Simulation() = default;

void Simulation::run_until(double t, TraceSink* sink) { impl_->run_until(t, sink); }

void Simulation::schedule_event(const ScenarioEvent& ev) {
  if (ev.t < impl_->now) {
    throw std::invalid_argument("schedule_event: time is in the past");
  }
  if (ev.kind == ScenarioEventKind::StartFlow) {
    throw std::invalid_argument("schedule_event: flows must be declared in the scenario");
  }
  const bool targets_flow = ev.kind == ScenarioEventKind::Freeze ||
                            ev.kind == ScenarioEventKind::Unfreeze ||
                            ev.kind == ScenarioEventKind::FreezeRequest ||
                            ev.kind == ScenarioEventKind::UnfreezeRequest;
  if (targets_flow) {
    if (ev.flow < 0 || ev.flow >= static_cast<int>(impl_->flow_kinds.size())) {
      throw std::invalid_argument("schedule_event: unknown flow");
    }
    if (impl_->flow_kinds[static_cast<std::size_t>(ev.flow)] != FlowKind::Tfrc) {
      throw std::invalid_argument("schedule_event: event targets a non-TFRC flow");
    }
  }
  Event e;
  e.t = ev.t;
  e.kind = EvKind::Control;
  e.ctl = ev;
  impl_->push(std::move(e));
}

double Simulation::now() const { return impl_->now; }
const Scenario& Simulation::scenario() const { return impl_->sc; }
SimResult Simulation::result() const { return impl_->result(); }

double Simulation::tfrc_rate(int flow) const { return impl_->tfrc_snd(flow).m.allowed_rate(); }
double Simulation::tfrc_rtt(int flow) const { return impl_->tfrc_snd(flow).m.rtt_estimate(); }
tfrc::SenderPhase Simulation::tfrc_sender_phase(int flow) const {
  return impl_->tfrc_snd(flow).m.phase();
}

SimResult run_scenario(const Scenario& sc, TraceSink* sink, const SimHooks& hooks) {
  Simulation sim(sc, hooks);
  sim.run(sink);
  return sim.result();
}

}  // namespace ftfrc::sim
