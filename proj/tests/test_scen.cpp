#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ftfrc/scen/handover.hpp"
#include "ftfrc/scen/metrics.hpp"
#include "ftfrc/scen/model_table.hpp"
#include "ftfrc/scen/profiles.hpp"
#include "ftfrc/sim/simulator.hpp"
#include "ftfrc/sim/trace.hpp"

using namespace ftfrc;

namespace {

sim::TraceEvent rate_ev(double t, double rate, double rtt) {
  sim::TraceEvent ev;
  ev.t = t;
  ev.kind = sim::TraceKind::RateChange;
  ev.flow = 0;
  ev.value = rate;
  ev.aux = rtt;
  return ev;
}

sim::TraceEvent deliver_ev(double t, double bytes) {
  sim::TraceEvent ev;
  ev.t = t;
  ev.kind = sim::TraceKind::Deliver;
  ev.pclass = sim::PacketClass::Data;
  ev.flow = 0;
  ev.first_delivery = true;
  ev.value = bytes;
  return ev;
}

}  // namespace

TEST_CASE("built-in technologies and aliases") {
  const auto& techs = scen::technologies();
  REQUIRE(techs.size() == 4);
  CHECK(techs[0].name == "UMTS");
  CHECK(techs[1].name == "802.16");
  CHECK(techs[2].name == "802.11b");
  CHECK(techs[3].name == "802.11g");

  CHECK(scen::find_technology("umts") == &techs[0]);
  CHECK(scen::find_technology("3G") == &techs[0]);
  CHECK(scen::find_technology("WiMAX") == &techs[1]);
  CHECK(scen::find_technology("11b") == &techs[2]);
  CHECK(scen::find_technology("g") == &techs[3]);
  CHECK(scen::find_technology("ethernet") == nullptr);
  CHECK_THROWS_AS((void)scen::technology_or_throw("ethernet"),
                  std::invalid_argument);

  for (const auto& t : techs) {
    CHECK(scen::handover_delay(t) == 2.5 + t.stationary_rtt);
    const auto l = scen::link_spec(t);
    CHECK(l.capacity_bps == t.capacity_bps);
    CHECK(l.one_way_delay == t.one_way_delay);
    CHECK(l.queue_capacity == 50);
  }
}

TEST_CASE("operating points imply pinned steady-state loss rates") {
  const auto& techs = scen::technologies();
  CHECK(scen::stationary_loss_rate(techs[0]) ==
        doctest::Approx(2.0938624639018768e-4).epsilon(1e-12));
  CHECK(scen::stationary_loss_rate(techs[1]) ==
        doctest::Approx(1.0721714630098728e-5).epsilon(1e-12));
  CHECK(scen::stationary_loss_rate(techs[2]) ==
        doctest::Approx(9.284495777860005e-5).epsilon(1e-12));
  CHECK(scen::stationary_loss_rate(techs[3]) ==
        doctest::Approx(1.0086450542352294e-5).epsilon(1e-12));
}

TEST_CASE("model inputs mirror the two operating points") {
  const auto& techs = scen::technologies();
  const model::HandoverInputs in = scen::model_inputs(techs[2], techs[0]);
  CHECK(in.x_d == techs[2].stationary_rate);
  CHECK(in.r_old == techs[2].stationary_rtt);
  CHECK(in.r_new == techs[0].stationary_rtt);
  CHECK(in.x_max == techs[0].stationary_rate);
  CHECK(in.t_disc == scen::handover_delay(techs[0]));
  CHECK(in.p_r == scen::stationary_loss_rate(techs[2]));
}

TEST_CASE("stationarity detector on synthetic traces") {
  SUBCASE("constant rate settles after two agreeing windows") {
    scen::StationarityDetector det(0, 5.0, 0.05);
    det.on_event(rate_ev(0.0, 1000.0, 0.05));
    det.on_event(rate_ev(5.0, 1000.0, 0.05));
    for (int t = 6; t <= 9; ++t) det.on_event(deliver_ev(t, 500.0));
    det.on_event(rate_ev(10.0, 1000.0, 0.05));

    const scen::StationarityReport& r = det.report();
    REQUIRE(r.stationary);
    CHECK(r.t_stationary == 10.0);
    CHECK(r.mean_rate == doctest::Approx(1000.0).epsilon(1e-12));
    CHECK(r.x_recv == doctest::Approx(400.0).epsilon(1e-12));  // 2000B / 5s
    CHECK(r.rtt == doctest::Approx(0.05).epsilon(1e-12));
  }

  SUBCASE("a rate that keeps doubling never settles") {
    scen::StationarityDetector det(0, 5.0, 0.05);
    for (int k = 0; k <= 5; ++k) {
      det.on_event(rate_ev(5.0 * k, 1000.0 * (1 << k), 0.05));
    }
    CHECK(!det.report().stationary);
  }

  SUBCASE("events from other flows are ignored") {
    scen::StationarityDetector det(0, 5.0, 0.05);
    sim::TraceEvent other = rate_ev(0.0, 9e9, 0.05);
    other.flow = 1;
    det.on_event(other);
    det.on_event(rate_ev(0.0, 1000.0, 0.05));
    det.on_event(rate_ev(5.0, 1000.0, 0.05));
    det.on_event(rate_ev(10.0, 1000.0, 0.05));
    CHECK(det.report().stationary);
    CHECK(det.report().mean_rate == doctest::Approx(1000.0).epsilon(1e-12));
  }
}

TEST_CASE("prediction matrix regenerates byte-identically") {
  std::ifstream in(std::string(FTFRC_DATA_DIR) + "/golden_model_matrix.csv",
                   std::ios::binary);
  REQUIRE(in.good());
  std::stringstream buf;
  buf << in.rdbuf();
  CHECK(scen::format_model_matrix_csv() == buf.str());
}

TEST_CASE("a lone flow settles near its published operating point") {
  const auto& b = scen::technology_or_throw("802.11b");
  const scen::CalibrationResult cal = scen::calibrate_technology(b);
  CHECK(cal.t_stationary > 0.0);
  CHECK(cal.x_recv == doctest::Approx(b.stationary_rate).epsilon(0.25));
  CHECK(cal.rtt == doctest::Approx(b.stationary_rtt).epsilon(0.25));
}

TEST_CASE("frozen handover keeps the rate and loses nothing") {
  const auto& b = scen::technology_or_throw("802.11b");
  const scen::CellOutcome out =
      scen::run_handover(b, b, scen::Variant::Freeze, 0);
  CHECK(out.n_lost == 0);
  CHECK(out.restored_rate == out.pre_freeze_rate);  // exact, by construction
  CHECK(out.halvings == 0);
  CHECK(out.settled);
  CHECK(out.settle_latency >= 0.0);
  CHECK(out.settle_latency <= 3.0 * b.stationary_rtt);
}

TEST_CASE("standard handover idles, halves, and drops packets") {
  const auto& b = scen::technology_or_throw("802.11b");
  const scen::CellOutcome out =
      scen::run_handover(b, b, scen::Variant::Standard, 0);
  CHECK(out.n_lost > 0);
  CHECK(out.t_idle > 0.0);
  CHECK(out.halvings >= 1);
}

TEST_CASE("frozen cross-technology handover settles within a few RTTs") {
  const auto& g = scen::technology_or_throw("802.11g");
  const auto& b = scen::technology_or_throw("802.11b");
  const scen::CellOutcome out =
      scen::run_handover(g, b, scen::Variant::Freeze, 1);
  CHECK(out.n_lost == 0);
  CHECK(out.settled);
  CHECK(out.settle_latency <= 3.0 * b.stationary_rtt);
}

TEST_CASE("a lost request packet does not wedge the protocol") {
  sim::Scenario sc;
  sc.wireless = {11e6, 0.02, 50};
  sc.duration = 30.0;
  sim::ScenarioEvent ev;
  ev.t = 0.0;
  ev.kind = sim::ScenarioEventKind::StartFlow;
  ev.flow_kind = sim::FlowKind::Tfrc;
  sc.events.push_back(ev);
  ev = {};
  ev.t = 10.0;
  ev.kind = sim::ScenarioEventKind::FreezeRequest;
  ev.flow = 0;
  sc.events.push_back(ev);
  ev = {};
  ev.t = 14.0;
  ev.kind = sim::ScenarioEventKind::UnfreezeRequest;
  ev.flow = 0;
  sc.events.push_back(ev);

  // The very first option-carrying packet is the request feedback itself;
  // drop it and rely on the receiver's repeats.
  sim::SimHooks hooks;
  hooks.drop_nth_option_packet = 1;

  sim::Simulation s(sc, hooks);
  sim::VectorTrace trace;
  s.run_until(13.0, &trace);
  CHECK(s.tfrc_sender_phase(0) == tfrc::SenderPhase::Frozen);
  const sim::SimResult mid = s.result();

  s.run_until(30.0, &trace);
  CHECK(s.tfrc_sender_phase(0) != tfrc::SenderPhase::Frozen);
  const sim::SimResult fin = s.result();
  CHECK(fin.flows[0].data_delivered_new >
        mid.flows[0].data_delivered_new + 100);

  int injected = 0;
  int sends_while_frozen = 0;
  for (const auto& e : trace.events) {
    if (e.kind == sim::TraceKind::Drop &&
        e.drop == sim::DropReason::Injected) {
      ++injected;
    }
    if (e.kind == sim::TraceKind::Send &&
        e.pclass == sim::PacketClass::Data && e.t > 11.0 && e.t < 14.0) {
      ++sends_while_frozen;
    }
  }
  CHECK(injected == 1);
  CHECK(sends_while_frozen == 0);
}
