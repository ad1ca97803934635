#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dronefusion/sim/scenario.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion::sim {

/// One base tick of a finished run. `nis` and `measurements` are parallel to
/// ScenarioLog::sensor_names; on ticks where a sensor did not fire its NIS is
/// NaN (the CSV writer prints an empty field) and its measurement is empty.
struct StepRecord {
  double t{0.0};
  VectorXd truth;
  VectorXd control;
  VectorXd estimate;
  VectorXd cov_diag;
  double nees{0.0};
  std::vector<double> nis;
  std::vector<VectorXd> measurements;  // raw sensor readings, not written to CSV
  std::uint32_t meas_mask{0};
};

struct ScenarioLog {
  ModelKind model{ModelKind::kQuad1d};
  std::vector<std::string> state_names;
  std::vector<std::string> sensor_names;
  std::vector<StepRecord> steps;
  std::vector<std::string> events;  // skipped updates etc., human-readable
  bool failed{false};
  std::string failure_reason;
};

/// Runs one scenario to completion. Filter-breaking errors (NumericError,
/// GimbalLockError) mark the log failed and stop early, keeping the partial
/// log; a quad2d range singularity only skips that update and logs an event.
ScenarioLog run_scenario(const ScenarioConfig& config);

struct SensorMetrics {
  std::string name;
  double nis_mean{0.0};
  double in_envelope{0.0};  // fraction inside the central 95% chi-square band
  std::int64_t count{0};
};

struct Metrics {
  std::vector<std::string> state_names;
  VectorXd rmse;          // per state component, angle components wrapped
  double nees_mean{0.0};  // excludes the first 10% of ticks (warm-up)
  std::vector<SensorMetrics> sensors;
  std::int64_t steps{0};
  bool failed{false};
  std::string failure_reason;
};

Metrics compute_metrics(const ScenarioLog& log);

nlohmann::json metrics_to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& j);

/// Monte-Carlo summary: run i uses seed base+i, results merge in seed order
/// regardless of how many worker threads executed them.
struct AggregateMetrics {
  int seeds{0};
  std::vector<std::string> state_names;
  VectorXd rmse_mean;
  VectorXd rmse_std;  // sample std across runs, zero for a single run
  double nees_mean{0.0};
  /// Two-sided 95% band for the per-step NEES averaged across runs, and the
  /// fraction of post-warm-up steps inside it.
  double nees_envelope_lo{0.0};
  double nees_envelope_hi{0.0};
  double nees_envelope_fraction{0.0};
  std::vector<SensorMetrics> sensors;  // means across runs, counts summed
  int failed_runs{0};
};

AggregateMetrics run_montecarlo(const ScenarioConfig& base, int seeds, int jobs);

nlohmann::json aggregate_to_json(const AggregateMetrics& agg);

}  // namespace dronefusion::sim
