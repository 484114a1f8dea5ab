#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <climits>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ftfrc/model/closed_form.hpp"
#include "ftfrc/model/oracle.hpp"

using namespace ftfrc;

namespace {

model::DisconnectInputs inputs(double x_d, double rtt, double t_disc) {
  model::DisconnectInputs in;
  in.x_d = x_d;
  in.rtt = rtt;
  in.t_disc = t_disc;
  return in;
}

}  // namespace

TEST_CASE("backoff timeline: hand-computed small case") {
  // 1000 B/s, 100 ms RTT, 10 s cut. Timeouts: 1, 2, 4, 8 s; the fourth
  // interval is truncated to 3 s. Credit = (1000 + 1000 + 1000 + 375)/500.
  const auto tl = model::disconnect_timeline(inputs(1000.0, 0.1, 10.0));
  REQUIRE(tl.steps.size() == 4);
  CHECK(tl.steps[0].rate == 1000.0);
  CHECK(tl.steps[0].timeout == 1.0);
  CHECK(tl.steps[0].duration == 1.0);
  CHECK(tl.steps[1].rate == 500.0);
  CHECK(tl.steps[1].timeout == 2.0);
  CHECK(tl.steps[2].rate == 250.0);
  CHECK(tl.steps[2].timeout == 4.0);
  CHECK(tl.steps[3].rate == 125.0);
  CHECK(tl.steps[3].timeout == 8.0);
  CHECK(tl.steps[3].duration == 3.0);
  CHECK(tl.expiries == 3);
  CHECK(tl.x_at_reconnect == 125.0);
  CHECK(tl.timeout_at_reconnect == 8.0);
  CHECK(tl.credit == doctest::Approx(6.75).epsilon(1e-15));
  CHECK(tl.lost_packets == 6);
}

TEST_CASE("backoff timeline: rate floors at one segment per 64 s") {
  const auto in = inputs(1000.0, 0.1, 1000.0);
  CHECK(model::rate_floor_index(in) == 7);  // 1000 / 2^7 = 7.8125 = 500/64
  CHECK(model::rate_after_expiries(in, 7) == 500.0 / 64.0);
  CHECK(model::rate_after_expiries(in, 30) == 500.0 / 64.0);
  CHECK(model::timeout_after_expiries(in, 7) == 128.0);  // 2s / floor rate

  const auto tl = model::disconnect_timeline(in);
  for (const auto& st : tl.steps) CHECK(st.rate >= 500.0 / 64.0);
  CHECK(tl.x_at_reconnect == 500.0 / 64.0);
}

TEST_CASE("backoff timeline: timeout switches from 4R to the packet gap") {
  // At 1 Mbps the gap term is negligible until deep backoff.
  const auto in = inputs(125000.0, 0.5, 3600.0);
  const int sw = model::timeout_switch_index(in);
  REQUIRE(sw < INT_MAX);
  CHECK(2.0 * 500.0 / model::rate_after_expiries(in, sw - 1) <= 2.0);
  CHECK(2.0 * 500.0 / model::rate_after_expiries(in, sw) > 2.0);

  // With 4R above the floor rate's packet gap the switch never happens.
  CHECK(model::timeout_switch_index(inputs(1e9, 40.0, 60.0)) == INT_MAX);
}

TEST_CASE("backoff timeline: a zero-length cut loses nothing") {
  for (const double x : {250.0, 44000.0, 1.27e6, 1.25e7}) {
    const auto tl = model::disconnect_timeline(inputs(x, 0.05, 0.0));
    CHECK(tl.lost_packets == 0);
    CHECK(tl.credit == 0.0);
    CHECK(tl.expiries == 0);
    CHECK(tl.x_at_reconnect == x);
  }
}

TEST_CASE("closed form and step oracle agree bit for bit") {
  for (const double x : {250.0, 1e4, 1.25e6, 1.25e7}) {
    for (const double r : {0.002, 0.05, 0.25, 1.0}) {
      for (const double td : {0.0, 0.5, 3.46, 60.0, 127.0}) {
        const auto in = inputs(x, r, td);
        CHECK(model::timelines_identical(model::disconnect_timeline(in),
                                         model::stepped_timeline(in)));
      }
    }
  }

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lx(std::log(10.0), std::log(1.25e8));
  std::uniform_real_distribution<double> lr(std::log(1e-4), std::log(3.0));
  std::uniform_real_distribution<double> td(0.0, 120.0);
  for (int i = 0; i < 2000; ++i) {
    const auto in = inputs(std::exp(lx(rng)), std::exp(lr(rng)), td(rng));
    CHECK(model::timelines_identical(model::disconnect_timeline(in),
                                     model::stepped_timeline(in)));
  }
}

TEST_CASE("oracle comparison flags injected divergence") {
  const auto in = inputs(44000.0, 0.96, 3.46);
  const auto reference = model::stepped_timeline(in);

  auto tampered = model::disconnect_timeline(in);
  REQUIRE(model::timelines_identical(tampered, reference));
  tampered.steps[1].rate = std::nextafter(tampered.steps[1].rate, 0.0);
  CHECK(!model::timelines_identical(tampered, reference));

  auto truncated = model::disconnect_timeline(in);
  truncated.steps.pop_back();
  CHECK(!model::timelines_identical(truncated, reference));

  auto off_count = model::disconnect_timeline(in);
  off_count.expiries += 1;
  CHECK(!model::timelines_identical(off_count, reference));
}

TEST_CASE("delta_p_min: pinned value and domain") {
  CHECK(model::delta_p_min(100.0, 0.01) ==
        doctest::Approx(-0.0014285714285714286).epsilon(1e-12));
  CHECK(model::delta_p_min(0.0, 0.01) == 0.0);
  CHECK_THROWS_AS(model::delta_p_min(10.0, 0.0), std::domain_error);
  CHECK_THROWS_AS(model::delta_p_min(-1.0, 0.01), std::domain_error);
}

TEST_CASE("rtt convergence: closed form matches the filter") {
  const double q = 0.9;
  for (const auto [r_old, r_new] : {std::pair{1.0, 0.04}, {0.05, 0.96},
                                    {0.17, 0.05}}) {
    double r = r_old;
    for (int i = 1; i <= 60; ++i) {
      r = q * r + (1.0 - q) * r_new;
      CHECK(std::fabs(r - model::converged_rtt(r_old, r_new, i, q)) < 1e-12);
    }
  }
}

TEST_CASE("rtt convergence: a one-second jump needs 29 feedbacks") {
  CHECK(model::rtt_convergence_rounds(1.05, 0.05, 0.05, 0.9) == 29);
  CHECK(model::rtt_convergence_rounds(0.05, 1.05, 0.05, 0.9) == 29);
  CHECK(model::rtt_convergence_rounds(0.96, 1.96, 0.05, 0.9) == 29);
  CHECK(model::rtt_convergence_rounds(0.5, 0.52, 0.05, 0.9) == 0);

  // n is minimal: q^n dr <= eps < q^(n-1) dr.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dr(0.051, 10.0);
  for (int i = 0; i < 100; ++i) {
    const double d = dr(rng);
    const int n = model::rtt_convergence_rounds(1.0, 1.0 + d, 0.05, 0.9);
    REQUIRE(n > 0);
    CHECK(std::pow(0.9, n) * d <= 0.05);
    CHECK(std::pow(0.9, n - 1) * d > 0.05);
  }
}

TEST_CASE("rate during convergence scales with the stale rtt view") {
  // While the filter still reports the old RTT, the equation rate is the old
  // rate times r_old / R_i.
  const double x = model::rate_during_convergence(1e6, 0.05, 0.96, 0, 0.9);
  CHECK(x == doctest::Approx(1e6 * 0.05 / 0.96).epsilon(1e-12));
  const double late = model::rate_during_convergence(1e6, 0.05, 0.96, 60, 0.9);
  CHECK(late == doctest::Approx(1e6).epsilon(1e-3));
}

TEST_CASE("slow-start rounds: newton seed always matches the integer scan") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lratio(0.0, std::log(1e6));
  std::uniform_real_distribution<double> lrr(std::log(0.01), std::log(100.0));
  for (int it = 0; it < 10000; ++it) {
    const double ratio = std::exp(lratio(rng));
    const double rr = std::exp(lrr(rng));
    const double q = 0.9;
    int k = 0;
    while (rr * std::ldexp(1.0, k) + (1.0 - rr) * std::pow(2.0 * q, k) <=
           ratio) {
      ++k;
      REQUIRE(k < 100);
    }
    CHECK(model::slow_start_rounds(ratio, rr, q) == k);
  }
  CHECK(model::slow_start_rounds(1.0, 1.0, 0.9) == 0);
  CHECK(model::slow_start_rounds(0.5, 1.0, 0.9) == 0);
}

TEST_CASE("handover estimate: pinned technology cells") {
  model::HandoverInputs in;
  in.seg_size = 500.0;
  in.t_mbi = 64.0;
  in.q = 0.9;

  SUBCASE("slow cell, equal capacity: 3.46 s cut at 44 kB/s") {
    in.x_d = 44000.0;
    in.r_old = 0.96;
    in.r_new = 0.96;
    in.x_max = 44000.0;
    in.t_disc = 3.46;
    in.p_r = 2.0938624639018768e-4;
    const auto est = model::estimate_handover(in);
    CHECK(est.timeline.lost_packets == 304);
    CHECK(est.total_wasted == 0.0);  // floor of a sub-packet shortfall
  }

  SUBCASE("fast cell, equal capacity: 2.55 s cut at 1.27 MB/s") {
    in.x_d = 1.27e6;
    in.r_old = 0.05;
    in.r_new = 0.05;
    in.x_max = 1.27e6;
    in.t_disc = 2.55;
    in.p_r = 9.284495777860005e-5;
    const auto est = model::estimate_handover(in);
    CHECK(est.timeline.lost_packets == 1016);
    CHECK(est.total_wasted == 1655.0);
  }

  SUBCASE("down-switch wastes nothing by convention") {
    in.x_d = 1.27e6;
    in.r_old = 0.05;
    in.r_new = 0.96;
    in.x_max = 44000.0;
    in.t_disc = 3.46;
    in.p_r = 9.284495777860005e-5;
    const auto est = model::estimate_handover(in);
    CHECK(est.timeline.lost_packets == 1018);
    CHECK(est.total_wasted == 0.0);
  }

  SUBCASE("up-switch adds growth-phase waste") {
    in.x_d = 44000.0;
    in.r_old = 0.96;
    in.r_new = 0.04;
    in.x_max = 4.82e6;
    in.t_disc = 2.54;
    in.p_r = 2.0938624639018768e-4;
    const auto est = model::estimate_handover(in);
    CHECK(est.timeline.lost_packets == 223);
    CHECK(est.growth_rounds > 0);
    CHECK(est.extra_wasted > 0.0);
    CHECK(est.total_wasted ==
          std::floor(est.wasted) + std::floor(est.extra_wasted));
  }
}

TEST_CASE("handover estimate: input validation") {
  model::HandoverInputs in;
  in.x_d = 1000.0;
  in.r_old = 0.1;
  in.r_new = 0.1;
  in.x_max = 1000.0;
  in.t_disc = 1.0;
  in.p_r = 0.0;
  CHECK_THROWS_AS(model::estimate_handover(in), std::domain_error);
  in.p_r = 0.01;
  in.r_new = 0.0;
  CHECK_THROWS_AS(model::estimate_handover(in), std::domain_error);
}
