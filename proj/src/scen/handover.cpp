#include "ftfrc/scen/handover.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace ftfrc::scen {

namespace {

double uniform01(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// First data-packet send/delivery of a flow at or after a threshold time.
class FirstAfter final : public sim::TraceSink {
 public:
  FirstAfter(int flow, double threshold) : flow_(flow), thr_(threshold) {}

  void on_event(const sim::TraceEvent& ev) override {
    if (ev.flow != flow_ || ev.pclass != sim::PacketClass::Data) return;
    if (ev.t < thr_) return;
    if (ev.kind == sim::TraceKind::Send && first_send_ < 0.0) first_send_ = ev.t;
    if (ev.kind == sim::TraceKind::Deliver && first_deliver_ < 0.0) first_deliver_ = ev.t;
  }

  double first_send() const { return first_send_; }
  double first_deliver() const { return first_deliver_; }

 private:
  int flow_;
  double thr_;
  double first_send_ = -1.0;
  double first_deliver_ = -1.0;
};

std::string fmt_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct RunFlags {
  bool fairness = false;
  bool stop_after_settlement = true;
};

CellOutcome run_cell(const sim::Simulation& warmed, const TechnologyProfile& from,
                     const TechnologyProfile& to, Variant variant,
                     std::uint64_t seed, double x_ref, const RunFlags& flags) {
  sim::Simulation sim = warmed;  // independent fork of the warmed world
  const HandoverTimes tm = handover_times(from, to, seed);

  sim::ScenarioEvent ev;
  if (variant == Variant::Freeze) {
    ev = {};
    ev.t = tm.freeze_at;
    ev.kind = sim::ScenarioEventKind::Freeze;
    ev.flow = 0;
    sim.schedule_event(ev);
  }
  ev = {};
  ev.t = tm.t_down;
  ev.kind = sim::ScenarioEventKind::Disconnect;
  sim.schedule_event(ev);
  ev = {};
  ev.t = tm.t_up;
  ev.kind = sim::ScenarioEventKind::Reconnect;
  ev.link = link_spec(to);
  sim.schedule_event(ev);
  if (variant == Variant::Freeze) {
    ev = {};
    ev.t = tm.unfreeze_at;
    ev.kind = sim::ScenarioEventKind::Unfreeze;
    ev.flow = 0;
    sim.schedule_event(ev);
  }

  LossMeter loss(0);
  WastedMeter wasted(0, x_ref, sim.scenario().seg_size, 100.0);
  FirstAfter first(0, tm.t_up);
  std::optional<GoodputMeter> goodput;
  sim::MultiSink sinks;
  sinks.add(&loss);
  sinks.add(&wasted);
  sinks.add(&first);
  if (flags.fairness) {
    // Capacity shares are averaged over the 100 s that follow the initial
    // post-reconnection settlement period.
    goodput.emplace(tm.t_up + 30.0, tm.t_up + 130.0);
    sinks.add(&*goodput);
  }

  CellOutcome out;
  out.from = from.name;
  out.to = to.name;
  out.variant = variant;
  out.seed = seed;
  out.x_ref = x_ref;
  out.t_down = tm.t_down;
  out.t_up = tm.t_up;

  sim.run_until(tm.freeze_at, &sinks);
  out.pre_freeze_rate = sim.tfrc_rate(0);
  const long long halv0 = sim.result().tfrc_flows[0].sender_diag.nofeedback_expiries;

  sim.run_until(tm.unfreeze_at + 1e-6, &sinks);
  out.restored_rate = sim.tfrc_rate(0);
  const long long halv1 = sim.result().tfrc_flows[0].sender_diag.nofeedback_expiries;
  out.halvings = halv1 - halv0;

  // Early termination is only enabled once the restoration sample is taken.
  wasted.set_stop_when_done(flags.stop_after_settlement && !flags.fairness);
  sim.run_until(tm.end, &sinks);
  wasted.finalize(sim.now());

  out.n_lost = loss.losses();
  out.n_wasted = wasted.wasted_packets();
  out.settled = wasted.settled();
  out.settle_latency = wasted.settled() ? wasted.settle_time() - tm.t_up : -1.0;
  out.t_idle = first.first_send() >= 0.0 ? first.first_send() - tm.t_up : -1.0;
  if (flags.fairness) out.fairness = fairness_ratio(*goodput, 0, 1);
  return out;
}

}  // namespace

std::string to_string(Variant v) {
  return v == Variant::Freeze ? "freeze" : "standard";
}

HandoverTimes handover_times(const TechnologyProfile& from,
                             const TechnologyProfile& to, std::uint64_t seed) {
  HandoverTimes tm;
  const double r = from.stationary_rtt;
  tm.warmup = from.warmup;
  tm.t_down = tm.warmup + r + uniform01(seed) * 4.0 * r;
  tm.t_up = tm.t_down + handover_delay(to);
  tm.freeze_at = tm.t_down - r;
  tm.unfreeze_at = tm.t_up + 1e-4;
  tm.end = tm.t_up + 130.0;
  return tm;
}

sim::Scenario build_base_scenario(const TechnologyProfile& from,
                                  bool with_competitor) {
  sim::Scenario sc;
  sc.wireless = link_spec(from);
  sc.duration = from.warmup + 5.0 * from.stationary_rtt + 135.0;
  sc.seed = 0;
  sc.events.clear();
  sim::ScenarioEvent ev;
  ev.t = 0.0;
  ev.kind = sim::ScenarioEventKind::StartFlow;
  ev.flow_kind = sim::FlowKind::Tfrc;
  sc.events.push_back(ev);
  if (with_competitor) {
    // One service slot of host-egress jitter keeps two deterministic flows
    // from phase-locking against the drop-tail queue, and a quarter of
    // per-packet transmission-time variability models link-layer service
    // noise. Single-flow scenarios stay exactly deterministic.
    sc.send_jitter_slots = 1.0;
    sc.service_jitter = 0.25;
    ev = {};
    ev.t = 0.5;
    ev.kind = sim::ScenarioEventKind::StartFlow;
    ev.flow_kind = sim::FlowKind::Reno;
    sc.events.push_back(ev);
  }
  return sc;
}

sim::Scenario build_handover_scenario(const TechnologyProfile& from,
                                      const TechnologyProfile& to,
                                      Variant variant, std::uint64_t seed,
                                      bool with_competitor) {
  sim::Scenario sc = build_base_scenario(from, with_competitor);
  sc.seed = seed;
  const HandoverTimes tm = handover_times(from, to, seed);
  sim::ScenarioEvent ev;
  if (variant == Variant::Freeze) {
    ev = {};
    ev.t = tm.freeze_at;
    ev.kind = sim::ScenarioEventKind::Freeze;
    ev.flow = 0;
    sc.events.push_back(ev);
  }
  ev = {};
  ev.t = tm.t_down;
  ev.kind = sim::ScenarioEventKind::Disconnect;
  sc.events.push_back(ev);
  ev = {};
  ev.t = tm.t_up;
  ev.kind = sim::ScenarioEventKind::Reconnect;
  ev.link = link_spec(to);
  sc.events.push_back(ev);
  if (variant == Variant::Freeze) {
    ev = {};
    ev.t = tm.unfreeze_at;
    ev.kind = sim::ScenarioEventKind::Unfreeze;
    ev.flow = 0;
    sc.events.push_back(ev);
  }
  return sc;
}

WarmBase warm_base(const TechnologyProfile& tech, bool with_competitor,
                   bool require_stationary) {
  const sim::Scenario sc = build_base_scenario(tech, with_competitor);
  sim::Simulation sim(sc);
  StationarityDetector det(0);
  sim.run_until(tech.warmup, &det);
  const StationarityReport& rep = det.report();
  if (require_stationary && !rep.stationary) {
    throw std::runtime_error("flow on " + tech.name + " is not stationary by " +
                             fmt_num(tech.warmup) + " s; aborting");
  }
  CalibrationResult cal;
  cal.x_recv = rep.x_recv;
  cal.rtt = rep.rtt;
  cal.mean_rate = rep.mean_rate;
  cal.t_stationary = rep.t_stationary;
  return WarmBase{std::move(sim), cal};
}

CalibrationResult calibrate_technology(const TechnologyProfile& tech) {
  return warm_base(tech, false, true).cal;
}

std::vector<CellOutcome> run_matrix_sweep(const SweepOptions& opt) {
  std::vector<const TechnologyProfile*> techs = opt.techs;
  if (techs.empty()) {
    for (const TechnologyProfile& t : technologies()) techs.push_back(&t);
  }
  std::vector<std::uint64_t> seeds = opt.seeds;
  if (seeds.empty()) {
    for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
  }
  std::vector<Variant> variants;
  if (opt.run_standard) variants.push_back(Variant::Standard);
  if (opt.run_freeze) variants.push_back(Variant::Freeze);
  if (variants.empty()) return {};

  // One calibrated single-flow base per technology; it provides both the
  // x_ref for handovers into that technology and (in non-fairness sweeps)
  // the warm fork source for handovers out of it.
  std::vector<WarmBase> singles;
  singles.reserve(techs.size());
  for (const TechnologyProfile* t : techs) singles.push_back(warm_base(*t, false, true));
  std::vector<WarmBase> fair_bases;
  if (opt.fairness) {
    fair_bases.reserve(techs.size());
    for (const TechnologyProfile* t : techs) fair_bases.push_back(warm_base(*t, true, false));
  }

  struct Task {
    Variant variant;
    std::size_t fi, ti;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (Variant v : variants) {
    for (std::size_t fi = 0; fi < techs.size(); ++fi) {
      for (std::size_t ti = 0; ti < techs.size(); ++ti) {
        for (std::uint64_t s : seeds) tasks.push_back(Task{v, fi, ti, s});
      }
    }
  }

  std::vector<CellOutcome> results(tasks.size());
  RunFlags flags;
  flags.fairness = opt.fairness;
  flags.stop_after_settlement = opt.stop_after_settlement;

  std::mutex cb_mutex;
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& t = tasks[i];
      try {
        const sim::Simulation& base =
            opt.fairness ? fair_bases[t.fi].sim : singles[t.fi].sim;
        results[i] = run_cell(base, *techs[t.fi], *techs[t.ti], t.variant,
                              t.seed, singles[t.ti].cal.x_recv, flags);
        if (opt.on_result) {
          std::lock_guard<std::mutex> lock(cb_mutex);
          opt.on_result(results[i]);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(tasks.size());
        return;
      }
    }
  };

  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    const int n = std::min<int>(jobs, static_cast<int>(tasks.size()));
    pool.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return results;
}

CellOutcome run_handover(const TechnologyProfile& from, const TechnologyProfile& to,
                         Variant variant, std::uint64_t seed, bool fairness) {
  const CalibrationResult ref = calibrate_technology(to);
  const WarmBase base = warm_base(from, fairness, !fairness);
  RunFlags flags;
  flags.fairness = fairness;
  return run_cell(base.sim, from, to, variant, seed, ref.x_recv, flags);
}

std::vector<CellAggregate> aggregate_outcomes(const std::vector<CellOutcome>& outs) {
  std::vector<CellAggregate> aggs;
  auto find = [&](const CellOutcome& o) -> CellAggregate& {
    for (CellAggregate& a : aggs) {
      if (a.variant == o.variant && a.from == o.from && a.to == o.to) return a;
    }
    CellAggregate a;
    a.from = o.from;
    a.to = o.to;
    a.variant = o.variant;
    aggs.push_back(a);
    return aggs.back();
  };
  for (const CellOutcome& o : outs) {
    CellAggregate& a = find(o);
    const double n = static_cast<double>(a.runs);
    a.mean_lost = (a.mean_lost * n + static_cast<double>(o.n_lost)) / (n + 1.0);
    a.mean_wasted = (a.mean_wasted * n + o.n_wasted) / (n + 1.0);
    if (o.fairness >= 0.0) {
      const double prev = a.mean_fairness < 0.0 ? 0.0 : a.mean_fairness;
      a.mean_fairness = (prev * n + o.fairness) / (n + 1.0);
    }
    ++a.runs;
  }
  return aggs;
}

std::string format_outcomes_csv(const std::vector<CellOutcome>& outs) {
  std::ostringstream ss;
  ss << "# ftfrc-sweep-csv v1\n";
  ss << "variant,from,to,seed,n_lost,n_wasted,fairness\n";
  for (const CellOutcome& o : outs) {
    ss << to_string(o.variant) << ',' << o.from << ',' << o.to << ',' << o.seed
       << ',' << o.n_lost << ',' << fmt_num(o.n_wasted) << ','
       << fmt_num(o.fairness) << '\n';
  }
  return ss.str();
}

std::string format_aggregate_csv(const std::vector<CellAggregate>& aggs) {
  // Matrix layout: one row per (table, variant, from), one column per "to".
  std::vector<std::string> tos;
  for (const CellAggregate& a : aggs) {
    if (std::find(tos.begin(), tos.end(), a.to) == tos.end()) tos.push_back(a.to);
  }
  std::ostringstream ss;
  ss << "# ftfrc-aggregate-csv v1\n";
  ss << "table,variant,from";
  for (const std::string& t : tos) ss << ',' << t;
  ss << '\n';

  auto cell = [&](const char* table, Variant v, const std::string& from,
                  const std::string& to) -> std::string {
    for (const CellAggregate& a : aggs) {
      if (a.variant != v || a.from != from || a.to != to) continue;
      if (std::string(table) == "losses") return fmt_num(a.mean_lost);
      if (std::string(table) == "wasted") return fmt_num(a.mean_wasted);
      return a.mean_fairness < 0.0 ? std::string() : fmt_num(a.mean_fairness);
    }
    return {};
  };
  std::vector<std::string> froms;
  for (const CellAggregate& a : aggs) {
    if (std::find(froms.begin(), froms.end(), a.from) == froms.end()) {
      froms.push_back(a.from);
    }
  }
  bool any_fairness = false;
  for (const CellAggregate& a : aggs) any_fairness |= a.mean_fairness >= 0.0;
  std::vector<std::string> tables = {"losses", "wasted"};
  if (any_fairness) tables.push_back("fairness");

  for (const std::string& table : tables) {
    for (Variant v : {Variant::Standard, Variant::Freeze}) {
      bool variant_present = false;
      for (const CellAggregate& a : aggs) variant_present |= a.variant == v;
      if (!variant_present) continue;
      for (const std::string& from : froms) {
        ss << table << ',' << to_string(v) << ',' << from;
        for (const std::string& to : tos) ss << ',' << cell(table.c_str(), v, from, to);
        ss << '\n';
      }
    }
  }
  return ss.str();
}

}  // namespace ftfrc::scen
