#include "dronefusion/sim/csv.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace dronefusion::sim {
namespace {

void append_double(std::string& row, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  row += buf;
}

}  // namespace

std::vector<std::string> state_component_names(ModelKind model) {
  switch (model) {
    case ModelKind::kQuad1d: return {"zdot", "z"};
    case ModelKind::kQuad2d: return {"phi", "ydot", "y"};
    case ModelKind::kQuad3d: return {"x", "y", "z", "vx", "vy", "vz", "psi"};
  }
  return {};
}

std::vector<std::string> sensor_names(ModelKind model) {
  if (model == ModelKind::kQuad3d) {
    return {"gps", "mag"};
  }
  return {"range"};
}

std::string csv_header(ModelKind model) {
  std::string header = "t,model";
  for (const char* prefix : {"truth_", "est_", "cov_"}) {
    for (const auto& name : state_component_names(model)) {
      header += ',';
      header += prefix;
      header += name;
    }
  }
  header += ",nees";
  for (const auto& name : sensor_names(model)) {
    header += ",nis_";
    header += name;
  }
  header += ",meas_mask";
  return header;
}

void write_csv(std::ostream& out, const ScenarioLog& log) {
  out << csv_header(log.model) << '\n';
  const std::string model = to_string(log.model);
  std::string row;
  for (const StepRecord& step : log.steps) {
    row.clear();
    append_double(row, step.t);
    row += ',';
    row += model;
    for (const VectorXd* vec : {&step.truth, &step.estimate, &step.cov_diag}) {
      for (Eigen::Index i = 0; i < vec->size(); ++i) {
        row += ',';
        append_double(row, (*vec)[i]);
      }
    }
    row += ',';
    append_double(row, step.nees);
    for (double nis : step.nis) {
      row += ',';
      if (!std::isnan(nis)) {
        append_double(row, nis);
      }
    }
    row += ',';
    row += std::to_string(step.meas_mask);
    out << row << '\n';
  }
}

}  // namespace dronefusion::sim
