#include "ftfrc/scen/model_table.hpp"

#include <cinttypes>
#include <cstdio>
#include <sstream>

namespace ftfrc::scen {

model::HandoverInputs model_inputs(const TechnologyProfile& from,
                                   const TechnologyProfile& to) {
  model::HandoverInputs in;
  in.x_d = from.stationary_rate;
  in.r_old = from.stationary_rtt;
  in.r_new = to.stationary_rtt;
  in.x_max = to.stationary_rate;
  in.t_disc = handover_delay(to);
  in.p_r = stationary_loss_rate(from);
  return in;
}

model::HandoverEstimate model_cell(const TechnologyProfile& from,
                                   const TechnologyProfile& to) {
  return model::estimate_handover(model_inputs(from, to));
}

std::string format_model_matrix_csv() {
  const auto& techs = technologies();
  std::ostringstream ss;
  ss << "# ftfrc-model-matrix-csv v1\n";
  ss << "table,from";
  for (const auto& t : techs) ss << ',' << t.name;
  ss << '\n';
  for (int table = 0; table < 2; ++table) {
    for (const auto& from : techs) {
      ss << (table == 0 ? "losses" : "wasted") << ',' << from.name;
      for (const auto& to : techs) {
        const model::HandoverEstimate est = model_cell(from, to);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%" PRId64,
                      table == 0 ? est.timeline.lost_packets
                                 : static_cast<std::int64_t>(est.total_wasted));
        ss << ',' << buf;
      }
      ss << '\n';
    }
  }
  return ss.str();
}

}  // namespace ftfrc::scen
