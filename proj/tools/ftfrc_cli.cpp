// ftfrc — evaluate the analytic handover model, validate it against the
// step oracle, run single scenarios, sweep the technology matrix, and run
// fairness experiments. All outputs are versioned CSV files; a
// machine-readable summary line goes to stderr and the exit code is 0 iff
// every requested check passed.

#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ftfrc/model/closed_form.hpp"
#include "ftfrc/model/oracle.hpp"
#include "ftfrc/scen/handover.hpp"
#include "ftfrc/scen/metrics.hpp"
#include "ftfrc/scen/model_table.hpp"
#include "ftfrc/scen/profiles.hpp"
#include "ftfrc/sim/scenario_file.hpp"
#include "ftfrc/sim/simulator.hpp"
#include "ftfrc/sim/trace.hpp"
#include "ftfrc/tfrc/equations.hpp"

namespace fs = std::filesystem;
using namespace ftfrc;

namespace {

struct Summary {
  std::string command;
  long long checks = 0;
  long long failures = 0;
  std::vector<std::string> files;

  void emit() const {
    std::ostringstream ss;
    ss << "ftfrc-summary: command=" << command
       << " status=" << (failures == 0 ? "pass" : "fail")
       << " checks=" << checks << " failures=" << failures << " files=";
    for (std::size_t i = 0; i < files.size(); ++i) {
      if (i) ss << ';';
      ss << files[i];
    }
    std::cerr << ss.str() << '\n';
  }
};

fs::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FTFRC_OUT_DIR"); env && *env) return env;
  return ".";
}

std::string write_text_file(const fs::path& dir, const std::string& name,
                            const std::string& text) {
  fs::create_directories(dir);
  const fs::path path = dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return path.string();
}

// "7" | "1,4,9" | "0..19" (inclusive range)
std::vector<std::uint64_t> parse_seed_spec(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const auto parse_one = [](const std::string& tok) {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("bad seed: " + tok);
    return static_cast<std::uint64_t>(v);
  };
  if (const auto dots = spec.find(".."); dots != std::string::npos) {
    const std::uint64_t lo = parse_one(spec.substr(0, dots));
    const std::uint64_t hi = parse_one(spec.substr(dots + 2));
    if (hi < lo) throw std::invalid_argument("descending seed range: " + spec);
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream ss(spec);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) seeds.push_back(parse_one(tok));
  }
  if (seeds.empty()) throw std::invalid_argument("empty seed list: " + spec);
  return seeds;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------- model --

struct ModelArgs {
  std::string from, to;
  double xd = -1.0, rold = -1.0, rnew = -1.0, xmax = -1.0;
  double td = -1.0, pr = -1.0;
  double q = 0.9, seg = 500.0, tmbi = 64.0;
  bool matrix = false;
};

model::HandoverInputs build_model_inputs(const ModelArgs& a) {
  model::HandoverInputs in;
  if (!a.from.empty() || !a.to.empty()) {
    if (a.from.empty() || a.to.empty()) {
      throw CLI::ValidationError("--from and --to must be given together");
    }
    in = scen::model_inputs(scen::technology_or_throw(a.from),
                            scen::technology_or_throw(a.to));
  } else {
    if (a.xd <= 0.0) throw CLI::ValidationError("--xd must be positive");
    if (a.rold <= 0.0) throw CLI::ValidationError("--rold must be positive");
    if (a.rnew <= 0.0) throw CLI::ValidationError("--rnew must be positive");
    if (a.td < 0.0) throw CLI::ValidationError("--td must be non-negative");
    in.x_d = a.xd;
    in.r_old = a.rold;
    in.r_new = a.rnew;
    in.x_max = a.xd;
    in.t_disc = a.td;
  }
  // Explicit flags override profile-derived values.
  if (a.xd > 0.0) in.x_d = a.xd;
  if (a.rold > 0.0) in.r_old = a.rold;
  if (a.rnew > 0.0) in.r_new = a.rnew;
  if (a.xmax > 0.0) in.x_max = a.xmax;
  if (a.td >= 0.0) in.t_disc = a.td;
  in.q = a.q;
  in.seg_size = a.seg;
  in.t_mbi = a.tmbi;
  if (a.pr > 0.0) {
    in.p_r = a.pr;
  } else if (in.p_r <= 0.0) {
    // Loss event rate consistent with the old operating point.
    in.p_r = tfrc::invert_throughput(in.x_d, in.r_old, in.seg_size).p;
  }
  return in;
}

std::string model_row_csv(const ModelArgs& a, const model::HandoverInputs& in,
                          const model::HandoverEstimate& est) {
  std::ostringstream ss;
  ss << "# ftfrc-model-csv v1\n";
  ss << "from,to,x_d,r_old,r_new,x_max,t_disc,p_r,n_lost,expiries,"
        "x_reconnect,rto_reconnect,idle_time,ss_rounds,wasted,recovery_time,"
        "growth_rounds,extra_wasted,total_wasted\n";
  ss << (a.from.empty() ? "-" : a.from) << ',' << (a.to.empty() ? "-" : a.to)
     << ',' << fmt(in.x_d) << ',' << fmt(in.r_old) << ',' << fmt(in.r_new)
     << ',' << fmt(in.x_max) << ',' << fmt(in.t_disc) << ',' << fmt(in.p_r)
     << ',' << est.timeline.lost_packets << ',' << est.timeline.expiries << ','
     << fmt(est.timeline.x_at_reconnect) << ','
     << fmt(est.timeline.timeout_at_reconnect) << ',' << fmt(est.idle_time)
     << ',' << est.ss_rounds << ',' << fmt(est.wasted) << ','
     << fmt(est.recovery_time) << ',' << est.growth_rounds << ','
     << fmt(est.extra_wasted) << ',' << fmt(est.total_wasted) << '\n';
  return ss.str();
}

int cmd_model(const ModelArgs& a, const fs::path& out_dir) {
  Summary sum{"model"};
  if (a.matrix) {
    const std::string csv = scen::format_model_matrix_csv();
    sum.files.push_back(write_text_file(out_dir, "model_matrix.csv", csv));
    std::cout << csv;
    sum.checks = 1;
    sum.emit();
    return 0;
  }
  const model::HandoverInputs in = build_model_inputs(a);
  const model::HandoverEstimate est = model::estimate_handover(in);
  const std::string csv = model_row_csv(a, in, est);
  sum.files.push_back(write_text_file(out_dir, "model.csv", csv));
  std::cout << csv;
  sum.checks = 1;
  sum.emit();
  return 0;
}

// --------------------------------------------------------------- oracle --

struct OracleArgs {
  int tuples = 1000;
  std::uint64_t seed = 1;
  bool grid = true;
  bool inject_off_by_one = false;  // negative control for the gate itself
};

struct OracleCase {
  std::string label;
  model::DisconnectInputs in;
};

std::vector<OracleCase> oracle_grid() {
  std::vector<OracleCase> cases;
  for (const double mbps : {10.0, 54.0, 100.0}) {
    for (int ms = 1; ms <= 100; ++ms) {
      model::DisconnectInputs in;
      in.x_d = mbps * 1e6 / 8.0;
      in.rtt = 2.0 * ms / 1000.0;
      in.t_disc = 60.0;
      char label[64];
      std::snprintf(label, sizeof label, "grid-%gMbps-%dms", mbps, ms);
      cases.push_back({label, in});
    }
  }
  return cases;
}

std::vector<OracleCase> oracle_fuzz(int n, std::uint64_t seed) {
  std::vector<OracleCase> cases;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> log_rate(std::log(10.0), std::log(1.25e8));
  std::uniform_real_distribution<double> log_rtt(std::log(1e-4), std::log(3.0));
  std::uniform_real_distribution<double> disc(0.0, 120.0);
  const double segs[] = {250.0, 500.0, 1000.0, 1460.0};
  for (int i = 0; i < n; ++i) {
    model::DisconnectInputs in;
    in.x_d = std::exp(log_rate(rng));
    in.rtt = std::exp(log_rtt(rng));
    in.t_disc = disc(rng);
    in.seg_size = segs[rng() % 4];
    cases.push_back({"fuzz-" + std::to_string(i), in});
  }
  return cases;
}

int cmd_oracle(const OracleArgs& a, const fs::path& out_dir) {
  Summary sum{"oracle"};
  std::vector<OracleCase> cases;
  if (a.grid) cases = oracle_grid();
  const auto fuzz = oracle_fuzz(a.tuples, a.seed);
  cases.insert(cases.end(), fuzz.begin(), fuzz.end());

  std::ostringstream csv;
  csv << "# ftfrc-oracle-csv v1\n";
  csv << "case,step,start,duration,rate,timeout,cum_lost,verdict\n";

  for (const OracleCase& c : cases) {
    model::BackoffTimeline closed = model::disconnect_timeline(c.in);
    const model::BackoffTimeline stepped = model::stepped_timeline(c.in);
    if (a.inject_off_by_one && !closed.steps.empty()) {
      closed.steps.back().rate *= 2.0;  // deliberate divergence
    }
    ++sum.checks;
    const bool ok = model::timelines_identical(closed, stepped);
    if (!ok) ++sum.failures;

    double credit = 0.0;
    for (std::size_t i = 0; i < closed.steps.size(); ++i) {
      const model::BackoffStep& st = closed.steps[i];
      credit += st.duration * st.rate / c.in.seg_size;
      const bool step_ok =
          i < stepped.steps.size() &&
          std::memcmp(&st, &stepped.steps[i], sizeof st) == 0;
      csv << c.label << ',' << st.index << ',' << fmt(st.start) << ','
          << fmt(st.duration) << ',' << fmt(st.rate) << ',' << fmt(st.timeout)
          << ',' << static_cast<std::int64_t>(std::floor(credit)) << ','
          << (step_ok ? "ok" : "DIVERGED") << '\n';
    }
    if (!ok) {
      std::size_t first = 0;
      const std::size_t n = std::min(closed.steps.size(), stepped.steps.size());
      while (first < n && std::memcmp(&closed.steps[first], &stepped.steps[first],
                                      sizeof closed.steps[first]) == 0) {
        ++first;
      }
      std::cout << "FAIL " << c.label << ": first divergent interval index "
                << first << '\n';
    }
  }

  sum.files.push_back(write_text_file(out_dir, "oracle.csv", csv.str()));
  std::cout << (sum.failures == 0 ? "PASS" : "FAIL") << ": " << sum.checks
            << " timelines compared, " << sum.failures << " mismatched\n";
  sum.emit();
  return sum.failures == 0 ? 0 : 1;
}

// ------------------------------------------------------------------ sim --

// Streams RateChange series for rate-controlled flows and 1 s goodput
// buckets for window-controlled ones; emits one plot file per flow.
class PlotCollector final : public sim::TraceSink {
 public:
  void on_event(const sim::TraceEvent& ev) override {
    if (ev.kind == sim::TraceKind::RateChange) {
      rate_series_[ev.flow].emplace_back(ev.t, ev.value);
    } else if (ev.kind == sim::TraceKind::Deliver && ev.first_delivery &&
               ev.pclass == sim::PacketClass::Data) {
      buckets_[ev.flow][static_cast<long>(ev.t)] += ev.value;
    }
  }

  std::vector<std::string> write(const fs::path& dir) const {
    std::vector<std::string> files;
    std::set<int> flows;
    for (const auto& [f, _] : rate_series_) flows.insert(f);
    for (const auto& [f, _] : buckets_) flows.insert(f);
    for (const int f : flows) {
      std::ostringstream ss;
      ss << "# ftfrc-plot-csv v1\n";
      ss << "t,rate\n";
      if (const auto it = rate_series_.find(f); it != rate_series_.end()) {
        for (const auto& [t, x] : it->second) ss << fmt(t) << ',' << fmt(x) << '\n';
      } else {
        for (const auto& [sec, bytes] : buckets_.at(f)) {
          ss << fmt(sec + 1.0) << ',' << fmt(bytes) << '\n';
        }
      }
      files.push_back(write_text_file(dir, "plot_flow" + std::to_string(f) + ".csv",
                                      ss.str()));
    }
    return files;
  }

 private:
  std::map<int, std::vector<std::pair<double, double>>> rate_series_;
  std::map<int, std::map<long, double>> buckets_;
};

struct SimArgs {
  std::string scenario_path;
  bool trace_csv = false;
  bool trace_bin = false;
};

sim::Scenario default_scenario() {
  // A lone flow on the 802.11b profile, long enough to settle: the "no
  // events" steady time series.
  sim::Scenario sc = scen::build_base_scenario(scen::technology_or_throw("802.11b"));
  sc.duration = 120.0;
  return sc;
}

int cmd_sim(const SimArgs& a, const fs::path& out_dir) {
  Summary sum{"sim"};
  const sim::Scenario sc = a.scenario_path.empty()
                               ? default_scenario()
                               : sim::load_scenario_file(a.scenario_path);
  PlotCollector plot;
  sim::MultiSink sinks;
  sinks.add(&plot);
  sim::VectorTrace full;
  if (a.trace_csv || a.trace_bin) sinks.add(&full);

  sim::Simulation s(sc);
  s.run_until(sc.duration, &sinks);
  const sim::SimResult res = s.result();

  for (const std::string& f : plot.write(out_dir)) sum.files.push_back(f);
  if (a.trace_csv) {
    std::ostringstream ss;
    sim::write_trace_csv(full.events, ss);
    sum.files.push_back(write_text_file(out_dir, "trace.csv", ss.str()));
  }
  if (a.trace_bin) {
    std::ostringstream ss(std::ios::binary);
    sim::write_trace_binary(full.events, ss);
    sum.files.push_back(write_text_file(out_dir, "trace.bin", ss.str()));
  }

  for (std::size_t f = 0; f < res.flows.size(); ++f) {
    const sim::FlowCounters& c = res.flows[f];
    std::cout << "flow " << f << ": sent=" << c.data_sent
              << " delivered_new=" << c.data_delivered_new
              << " drop_queue=" << c.data_drop_queue
              << " drop_disconnected=" << c.data_drop_disconnected << '\n';
  }
  for (const sim::TfrcFlowState& st : res.tfrc_flows) {
    std::cout << "tfrc flow " << st.flow << ": rate=" << fmt(st.rate)
              << " rtt=" << fmt(st.rtt) << " p=" << fmt(st.p) << '\n';
  }
  std::cout << "end_time=" << fmt(res.end_time)
            << " peak_queue=" << res.peak_wireless_queue << '\n';
  sum.checks = 1;
  sum.emit();
  return 0;
}

// ---------------------------------------------------------------- sweep --

struct SweepArgs {
  std::string variant = "both";
  std::string seeds = "0..19";
  int jobs = 1;
  bool fairness = false;
};

int cmd_sweep(const SweepArgs& a, const fs::path& out_dir) {
  Summary sum{"sweep"};
  scen::SweepOptions opt;
  opt.seeds = parse_seed_spec(a.seeds);
  opt.run_standard = a.variant == "both" || a.variant == "standard";
  opt.run_freeze = a.variant == "both" || a.variant == "freeze";
  opt.fairness = a.fairness;
  opt.jobs = a.jobs;

  // Completed rows are flushed to the partial file as they arrive, so an
  // aborted sweep leaves its finished cells behind; on success the ordered
  // per-seed CSV replaces it.
  fs::create_directories(out_dir);
  const fs::path partial = out_dir / "sweep_seeds.partial.csv";
  std::ofstream part_out(partial, std::ios::binary);
  part_out << "# ftfrc-sweep-csv v1 (partial, completion order)\n";
  std::mutex part_mutex;
  opt.on_result = [&](const scen::CellOutcome& o) {
    std::lock_guard<std::mutex> lock(part_mutex);
    part_out << scen::to_string(o.variant) << ',' << o.from << ',' << o.to
             << ',' << o.seed << ',' << o.n_lost << ',' << fmt(o.n_wasted)
             << ',' << fmt(o.fairness) << '\n';
    part_out.flush();
  };

  const std::vector<scen::CellOutcome> outs = scen::run_matrix_sweep(opt);
  part_out.close();

  sum.files.push_back(
      write_text_file(out_dir, "sweep_seeds.csv", scen::format_outcomes_csv(outs)));
  const auto aggs = scen::aggregate_outcomes(outs);
  const std::string agg_csv = scen::format_aggregate_csv(aggs);
  sum.files.push_back(write_text_file(out_dir, "sweep_aggregate.csv", agg_csv));
  fs::remove(partial);

  std::cout << agg_csv;
  std::cout << "runs=" << outs.size() << '\n';
  sum.checks = static_cast<long long>(outs.size());
  sum.emit();
  return 0;
}

// ------------------------------------------------------------- fairness --

struct FairnessArgs {
  std::string from, to;
  std::string variant = "freeze";
  std::string seeds = "0..2";
};

int cmd_fairness(const FairnessArgs& a, const fs::path& out_dir) {
  Summary sum{"fairness"};
  const scen::TechnologyProfile& from = scen::technology_or_throw(a.from);
  const scen::TechnologyProfile& to = scen::technology_or_throw(a.to);
  const scen::Variant variant =
      a.variant == "standard" ? scen::Variant::Standard : scen::Variant::Freeze;

  std::ostringstream csv;
  csv << "# ftfrc-fairness-csv v1\n";
  csv << "variant,from,to,seed,ratio\n";
  double mean = 0.0;
  const std::vector<std::uint64_t> seeds = parse_seed_spec(a.seeds);
  for (const std::uint64_t seed : seeds) {
    const scen::CellOutcome o = scen::run_handover(from, to, variant, seed, true);
    ++sum.checks;
    if (o.fairness <= 0.0) ++sum.failures;
    csv << scen::to_string(o.variant) << ',' << o.from << ',' << o.to << ','
        << seed << ',' << fmt(o.fairness) << '\n';
    std::cout << "seed " << seed << ": ratio=" << fmt(o.fairness) << '\n';
    mean += o.fairness;
  }
  mean /= static_cast<double>(seeds.size());
  std::cout << "mean ratio=" << fmt(mean)
            << (mean >= 0.5 && mean <= 2.0 ? " (within [0.5, 2])"
                                           : " (outside [0.5, 2])")
            << '\n';
  sum.files.push_back(write_text_file(out_dir, "fairness.csv", csv.str()));
  sum.emit();
  return sum.failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TFRC handover model, oracle, simulator, and sweep front end"};
  app.require_subcommand(1);
  std::string out_flag;
  app.add_option("--out", out_flag,
                 "output directory (default: $FTFRC_OUT_DIR or '.')");

  ModelArgs ma;
  CLI::App* model = app.add_subcommand("model", "evaluate the analytic handover model");
  model->add_option("--from", ma.from, "source technology profile");
  model->add_option("--to", ma.to, "destination technology profile");
  model->add_option("--xd", ma.xd, "pre-handover send rate, bytes/s");
  model->add_option("--rold", ma.rold, "old-path round-trip time, s");
  model->add_option("--rnew", ma.rnew, "new-path round-trip time, s");
  model->add_option("--xmax", ma.xmax, "new-path achievable rate, bytes/s");
  model->add_option("--td", ma.td, "disconnection duration, s");
  model->add_option("--pr", ma.pr, "steady loss event rate (default: derived from xd, rold)");
  model->add_option("--q", ma.q, "RTT filter weight", true);
  model->add_option("--seg", ma.seg, "segment size, bytes", true);
  model->add_option("--tmbi", ma.tmbi, "maximum backoff interval, s", true);
  model->add_flag("--matrix", ma.matrix, "emit the full technology matrix");

  OracleArgs oa;
  CLI::App* oracle = app.add_subcommand(
      "oracle", "validate closed forms against the step oracle (the gate)");
  oracle->add_option("--tuples", oa.tuples, "number of random fuzz tuples", true)
      ->check(CLI::NonNegativeNumber);
  oracle->add_option("--seed", oa.seed, "fuzz RNG seed", true);
  oracle->add_flag("!--no-grid", oa.grid, "skip the fixed validation grid");
  oracle
      ->add_flag("--inject-off-by-one", oa.inject_off_by_one,
                 "negative control: corrupt one interval and expect FAIL")
      ->group("");

  SimArgs sa;
  CLI::App* simc = app.add_subcommand("sim", "run one scenario, emit plot data");
  simc->add_option("scenario", sa.scenario_path, "scenario file (default: built-in steady flow)")
      ->check(CLI::ExistingFile);
  simc->add_flag("--trace-csv", sa.trace_csv, "also write the full event trace as CSV");
  simc->add_flag("--trace-bin", sa.trace_bin, "also write the full event trace as binary");

  SweepArgs wa;
  CLI::App* sweep = app.add_subcommand("sweep", "run the technology matrix sweep");
  sweep->add_option("--variant", wa.variant, "both|standard|freeze", true)
      ->check(CLI::IsMember({"both", "standard", "freeze"}));
  sweep->add_option("--seeds", wa.seeds, "seed list or range, e.g. 0..19", true);
  sweep->add_option("--jobs", wa.jobs, "parallel workers", true)
      ->check(CLI::PositiveNumber);
  sweep->add_flag("--fairness", wa.fairness, "add a TCP competitor and measure ratios");

  FairnessArgs fa;
  CLI::App* fair = app.add_subcommand("fairness", "TFRC/TCP ratio for one handover cell");
  fair->add_option("--from", fa.from, "source technology")->required();
  fair->add_option("--to", fa.to, "destination technology")->required();
  fair->add_option("--variant", fa.variant, "freeze|standard", true)
      ->check(CLI::IsMember({"freeze", "standard"}));
  fair->add_option("--seeds", fa.seeds, "seed list or range", true);

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out_dir = resolve_out_dir(out_flag);
    if (model->parsed()) return cmd_model(ma, out_dir);
    if (oracle->parsed()) return cmd_oracle(oa, out_dir);
    if (simc->parsed()) return cmd_sim(sa, out_dir);
    if (sweep->parsed()) return cmd_sweep(wa, out_dir);
    if (fair->parsed()) return cmd_fairness(fa, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    std::cerr << "ftfrc-summary: command=? status=fail checks=0 failures=1 files=\n";
    return 2;
  }
  return 0;
}
