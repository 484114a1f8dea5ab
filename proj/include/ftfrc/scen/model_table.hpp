#pragma once

#include <string>

#include "ftfrc/model/closed_form.hpp"
#include "ftfrc/scen/profiles.hpp"

namespace ftfrc::scen {

// Analytic-model inputs for a handover between two technologies, built from
// their steady-state operating points. The interruption lasts
// handover_delay(to); the loss event rate is the one the throughput relation
// associates with the old operating point.
model::HandoverInputs model_inputs(const TechnologyProfile& from,
                                   const TechnologyProfile& to);

// Closed-form estimate for one cell of the technology matrix.
model::HandoverEstimate model_cell(const TechnologyProfile& from,
                                   const TechnologyProfile& to);

// Matrix-shaped CSV of predicted losses and wasted capacity across all
// built-in technologies (schema ftfrc-model-matrix-csv v1). Byte-stable:
// regenerating it always yields the same text.
std::string format_model_matrix_csv();

}  // namespace ftfrc::scen
