#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "dronefusion/sim/runner.hpp"

namespace dronefusion::sim {

std::vector<std::string> state_component_names(ModelKind model);
std::vector<std::string> sensor_names(ModelKind model);

/// Column layout:
///   t,model,truth_<c>...,est_<c>...,cov_<c>...,nees,nis_<sensor>...,meas_mask
/// Numbers print with %.17g so identical runs produce identical bytes;
/// NIS fields are empty on ticks where the sensor did not fire.
void write_csv(std::ostream& out, const ScenarioLog& log);

std::string csv_header(ModelKind model);

}  // namespace dronefusion::sim
