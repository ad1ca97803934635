#include "dronefusion/sim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dronefusion/attitude.hpp"
#include "dronefusion/belief.hpp"
#include "dronefusion/ekf.hpp"
#include "dronefusion/errors.hpp"
#include "dronefusion/quad1d.hpp"
#include "dronefusion/quad2d.hpp"
#include "dronefusion/quad3d.hpp"
#include "dronefusion/sim/csv.hpp"
#include "dronefusion/sim/rng.hpp"
#include "dronefusion/sim/stats.hpp"
#include "dronefusion/ukf.hpp"

namespace dronefusion::sim {
namespace {

/// A fresh distribution per call keeps each draw a pure function of the
/// stream state (normal_distribution caches a spare sample otherwise).
double draw_normal(std::mt19937_64& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  return unit(rng);
}

VectorXd draw_vector(std::mt19937_64& rng, const VectorXd& std) {
  VectorXd v(std.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = std[i] * draw_normal(rng);
  }
  return v;
}

struct SensorRig {
  std::string name;
  MeasurementModeld model;
  VectorXd noise_std;
  std::int64_t every{1};
  bool wrap_output{false};  // angular channel: wrap the synthesized reading
  std::mt19937_64 rng;
};

/// Truth roll/pitch profile the 3D vehicle flies, with Euler-angle rates.
struct AttitudeSample {
  double phi{0.0};
  double theta{0.0};
  double phi_dot{0.0};
  double theta_dot{0.0};
};

AttitudeSample attitude_profile(const ScenarioConfig& config, double t) {
  AttitudeSample a;
  const double amp = config.attitude.amplitude;
  if (amp == 0.0) {
    return a;
  }
  const double w = 2.0 * std::numbers::pi / config.attitude.period;
  const double shift = std::numbers::pi / 3.0;  // keep roll and pitch out of phase
  a.phi = amp * std::sin(w * t);
  a.phi_dot = amp * w * std::cos(w * t);
  a.theta = amp * std::sin(w * t + shift);
  a.theta_dot = amp * w * std::cos(w * t + shift);
  return a;
}

/// Euler-angle rates to body rates for the roll-pitch-yaw convention.
Eigen::Vector3d body_rates(const AttitudeSample& att, double psi_dot) {
  const double sphi = std::sin(att.phi), cphi = std::cos(att.phi);
  const double sth = std::sin(att.theta), cth = std::cos(att.theta);
  Eigen::Vector3d w;
  w[0] = att.phi_dot - psi_dot * sth;
  w[1] = att.theta_dot * cphi + psi_dot * cth * sphi;
  w[2] = -att.theta_dot * sphi + psi_dot * cth * cphi;
  return w;
}

double nis_of(const KalmanGainReportd& report) {
  return report.innovation.dot(report.innovation_cov.ldlt().solve(report.innovation));
}

Eigen::Index sensor_dim(const std::string& name) {
  return name == "gps" ? 6 : 1;
}

Eigen::Index wrapped_component(ModelKind model) {
  switch (model) {
    case ModelKind::kQuad2d: return quad2d::kPhi;
    case ModelKind::kQuad3d: return quad3d::kPsi;
    default: return -1;
  }
}

}  // namespace

ScenarioLog run_scenario(const ScenarioConfig& config) {
  config.validate();
  const double dt = config.dt_imu;
  const std::int64_t ticks = std::llround(config.duration / dt);
  const Eigen::Index n = config.state_dim();

  ScenarioLog log;
  log.model = config.model;
  log.state_names = state_component_names(config.model);
  log.sensor_names = sensor_names(config.model);
  log.steps.reserve(static_cast<std::size_t>(ticks));

  std::mt19937_64 process_rng = make_stream(config.seed, "process");
  std::mt19937_64 init_rng = make_stream(config.seed, "init");
  std::mt19937_64 accel_rng = make_stream(config.seed, "accel_ctrl");
  std::mt19937_64 gyro_rng = make_stream(config.seed, "gyro_ctrl");
  std::mt19937_64 att_acc_rng = make_stream(config.seed, "att_acc");
  std::mt19937_64 att_gyro_rng = make_stream(config.seed, "att_gyro");

  const quad3d::Paramsd world{config.gravity, config.gravity_down_positive
                                                  ? quad3d::GravitySign::kDownPositive
                                                  : quad3d::GravitySign::kDownNegative};
  const quad2d::Walld wall{config.wall_y};
  const MatrixXd q_mat = config.process_q.asDiagonal();
  const MatrixXd q_zero = MatrixXd::Zero(n, n);

  // The filter reads roll/pitch from this slot; the loop refreshes it from
  // the attitude estimator after every predict.
  auto att_slot = std::make_shared<quad3d::AttitudeInputd>();

  ProcessModeld process;
  std::vector<SensorRig> rigs;
  switch (config.model) {
    case ModelKind::kQuad1d:
      process = quad1d::make_process_model<double>(q_mat);
      rigs.push_back({"range", quad1d::make_range_model<double>(config.r_range.asDiagonal()),
                      config.noise_range, std::llround(config.dt_range / dt), false,
                      make_stream(config.seed, "range")});
      break;
    case ModelKind::kQuad2d:
      process = quad2d::make_process_model<double>(q_mat);
      rigs.push_back({"range",
                      quad2d::make_range_model<double>(wall, config.r_range.asDiagonal()),
                      config.noise_range, std::llround(config.dt_range / dt), false,
                      make_stream(config.seed, "range")});
      break;
    case ModelKind::kQuad3d:
      process = quad3d::make_process_model<double>(att_slot, world, q_mat);
      rigs.push_back({"gps", quad3d::make_gps_model<double>(config.r_gps.asDiagonal()),
                      config.noise_gps, std::llround(config.dt_gps / dt), false,
                      make_stream(config.seed, "gps")});
      rigs.push_back({"mag", quad3d::make_mag_model<double>(config.r_mag.asDiagonal()),
                      config.noise_mag, std::llround(config.dt_mag / dt), true,
                      make_stream(config.seed, "mag")});
      break;
  }

  VectorXd truth = config.init_state;
  GaussianBeliefd belief;
  belief.mean = truth + draw_vector(init_rng, config.init_std);
  belief.covariance = config.init_std.array().square().matrix().asDiagonal();

  AttitudeSample att_true = attitude_profile(config, 0.0);
  attitude::AttitudeEstimated att_est{att_true.theta, att_true.phi};
  att_slot->phi = att_est.phi;
  att_slot->theta = att_est.theta;

  for (std::int64_t k = 1; k <= ticks; ++k) {
    const double t_prev = static_cast<double>(k - 1) * dt;
    const double t_now = static_cast<double>(k) * dt;
    try {
      const VectorXd u_true = config.control.at(t_prev, config.control_dim());
      VectorXd u_meas = u_true;
      if (config.model == ModelKind::kQuad3d) {
        for (Eigen::Index i = 0; i < 3; ++i) {
          u_meas[i] += config.noise_accel * draw_normal(accel_rng);
        }
        u_meas[3] += config.noise_gyro * draw_normal(gyro_rng);
      } else {
        u_meas[0] += config.noise_accel * draw_normal(accel_rng);
      }

      // Truth propagates on its own attitude; the filter's model reads the
      // estimated attitude out of the slot, still holding the previous tick.
      switch (config.model) {
        case ModelKind::kQuad1d:
          truth = quad1d::transition<double>(truth, u_true, dt);
          break;
        case ModelKind::kQuad2d:
          truth = quad2d::transition<double>(truth, u_true, dt);
          break;
        case ModelKind::kQuad3d:
          truth = quad3d::transition<double>(truth, {att_true.phi, att_true.theta}, u_true, dt,
                                             world);
          break;
      }
      truth += draw_vector(process_rng, config.truth_process_std);
      if (config.model == ModelKind::kQuad3d) {
        truth[quad3d::kPsi] = wrap_angle(truth[quad3d::kPsi]);
      }

      StepRecord record;
      record.t = t_now;
      record.control = u_true;
      record.nis.assign(log.sensor_names.size(), std::numeric_limits<double>::quiet_NaN());
      record.measurements.assign(log.sensor_names.size(), VectorXd());

      if (config.filter == FilterKind::kEkf) {
        belief = ekf_predict(belief, process, u_meas, dt);
        for (std::size_t s = 0; s < rigs.size(); ++s) {
          SensorRig& rig = rigs[s];
          if (k % rig.every != 0) {
            continue;
          }
          try {
            VectorXd z = rig.model.h(truth) + draw_vector(rig.rng, rig.noise_std);
            if (rig.wrap_output) {
              z[0] = wrap_angle(z[0]);
            }
            auto [updated, report] = ekf_update(belief, rig.model, z, config.ekf);
            belief = std::move(updated);
            record.nis[s] = nis_of(report);
            record.measurements[s] = std::move(z);
            record.meas_mask |= 1u << s;
          } catch (const SingularityError& e) {
            log.events.push_back("t=" + std::to_string(t_now) + " " + rig.name +
                                 " update skipped: " + e.what());
          }
        }
      } else {
        SigmaPointSetd sigmas = ukf_predict(belief, process, u_meas, dt, config.ukf);
        bool q_consumed = false;  // Q folds into the first refit of this tick
        for (std::size_t s = 0; s < rigs.size(); ++s) {
          SensorRig& rig = rigs[s];
          if (k % rig.every != 0) {
            continue;
          }
          try {
            VectorXd z = rig.model.h(truth) + draw_vector(rig.rng, rig.noise_std);
            if (rig.wrap_output) {
              z[0] = wrap_angle(z[0]);
            }
            if (q_consumed) {
              // Second sensor on the same tick: re-draw sigma points from the
              // posterior; the process noise is already in the covariance.
              sigmas = compute_sigmas(belief.mean, belief.covariance, config.ukf);
            }
            auto [updated, report] =
                ukf_update(sigmas, rig.model, q_consumed ? q_zero : q_mat, z);
            belief = std::move(updated);
            q_consumed = true;
            record.nis[s] = nis_of(report);
            record.measurements[s] = std::move(z);
            record.meas_mask |= 1u << s;
          } catch (const SingularityError& e) {
            log.events.push_back("t=" + std::to_string(t_now) + " " + rig.name +
                                 " update skipped: " + e.what());
          }
        }
        if (!q_consumed) {
          belief = ukf_reconstruct(sigmas, q_mat);
        }
      }

      if (config.model == ModelKind::kQuad3d) {
        // Attitude estimator steps after the filter consumed the slot, so
        // both sides of the tick saw the start-of-interval attitude.
        const AttitudeSample att_now = attitude_profile(config, t_now);
        attitude::ImuSampled imu;
        imu.theta_acc = att_now.theta + config.noise_att_acc * draw_normal(att_acc_rng);
        imu.phi_acc = att_now.phi + config.noise_att_acc * draw_normal(att_acc_rng);
        const Eigen::Vector3d w = body_rates(att_true, u_true[3]);
        imu.p = w[0] + config.noise_gyro * draw_normal(att_gyro_rng);
        imu.q = w[1] + config.noise_gyro * draw_normal(att_gyro_rng);
        imu.r = w[2] + config.noise_gyro * draw_normal(att_gyro_rng);
        if (config.attitude.filter == AttitudeFilterKind::kLinear) {
          att_est = attitude::linear_complementary(att_est, imu, config.attitude.tau, dt);
        } else {
          att_est = attitude::nonlinear_complementary(att_est, belief.mean[quad3d::kPsi], imu,
                                                      config.attitude.tau, dt);
        }
        att_slot->phi = att_est.phi;
        att_slot->theta = att_est.theta;
        att_true = att_now;
      }

      VectorXd error = truth - belief.mean;
      const Eigen::Index wrap_idx = wrapped_component(config.model);
      if (wrap_idx >= 0) {
        error[wrap_idx] = wrap_angle(error[wrap_idx]);
      }
      record.truth = truth;
      record.estimate = belief.mean;
      record.cov_diag = belief.covariance.diagonal();
      record.nees = error.dot(belief.covariance.ldlt().solve(error));
      log.steps.push_back(std::move(record));
    } catch (const Error& e) {
      log.failed = true;
      log.failure_reason = "t=" + std::to_string(t_now) + ": " + e.what();
      break;
    }
  }
  return log;
}

Metrics compute_metrics(const ScenarioLog& log) {
  if (log.steps.empty()) {
    throw DomainError("compute_metrics: empty log");
  }
  const Eigen::Index n = log.steps.front().truth.size();
  const Eigen::Index wrap_idx = wrapped_component(log.model);

  Metrics m;
  m.state_names = log.state_names;
  m.steps = static_cast<std::int64_t>(log.steps.size());
  m.failed = log.failed;
  m.failure_reason = log.failure_reason;

  VectorXd sq_sum = VectorXd::Zero(n);
  for (const StepRecord& step : log.steps) {
    VectorXd error = step.truth - step.estimate;
    if (wrap_idx >= 0) {
      error[wrap_idx] = wrap_angle(error[wrap_idx]);
    }
    sq_sum += error.array().square().matrix();
  }
  m.rmse = (sq_sum / static_cast<double>(log.steps.size())).array().sqrt();

  const std::size_t skip = log.steps.size() / 10;
  double nees_sum = 0.0;
  for (std::size_t i = skip; i < log.steps.size(); ++i) {
    nees_sum += log.steps[i].nees;
  }
  m.nees_mean = nees_sum / static_cast<double>(log.steps.size() - skip);

  for (std::size_t s = 0; s < log.sensor_names.size(); ++s) {
    SensorMetrics sm;
    sm.name = log.sensor_names[s];
    const double d = static_cast<double>(sensor_dim(sm.name));
    const double lo = chi2_quantile(0.025, d);
    const double hi = chi2_quantile(0.975, d);
    double sum = 0.0;
    std::int64_t inside = 0;
    for (const StepRecord& step : log.steps) {
      const double nis = step.nis[s];
      if (std::isnan(nis)) {
        continue;
      }
      ++sm.count;
      sum += nis;
      if (nis >= lo && nis <= hi) {
        ++inside;
      }
    }
    if (sm.count > 0) {
      sm.nis_mean = sum / static_cast<double>(sm.count);
      sm.in_envelope = static_cast<double>(inside) / static_cast<double>(sm.count);
    }
    m.sensors.push_back(std::move(sm));
  }
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  nlohmann::json j;
  j["failed"] = m.failed;
  j["failure_reason"] = m.failure_reason;
  j["steps"] = m.steps;
  j["state_names"] = m.state_names;
  nlohmann::json rmse = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rmse.size(); ++i) {
    rmse.push_back(m.rmse[i]);
  }
  j["rmse"] = std::move(rmse);
  j["nees_mean"] = m.nees_mean;
  nlohmann::json sensors = nlohmann::json::array();
  for (const SensorMetrics& sm : m.sensors) {
    sensors.push_back({{"name", sm.name},
                       {"nis_mean", sm.nis_mean},
                       {"in_envelope", sm.in_envelope},
                       {"count", sm.count}});
  }
  j["sensors"] = std::move(sensors);
  return j;
}

Metrics metrics_from_json(const nlohmann::json& j) {
  Metrics m;
  m.failed = j.at("failed").get<bool>();
  m.failure_reason = j.at("failure_reason").get<std::string>();
  m.steps = j.at("steps").get<std::int64_t>();
  m.state_names = j.at("state_names").get<std::vector<std::string>>();
  const auto& rmse = j.at("rmse");
  m.rmse.resize(static_cast<Eigen::Index>(rmse.size()));
  for (Eigen::Index i = 0; i < m.rmse.size(); ++i) {
    m.rmse[i] = rmse[static_cast<std::size_t>(i)].get<double>();
  }
  m.nees_mean = j.at("nees_mean").get<double>();
  for (const auto& entry : j.at("sensors")) {
    SensorMetrics sm;
    sm.name = entry.at("name").get<std::string>();
    sm.nis_mean = entry.at("nis_mean").get<double>();
    sm.in_envelope = entry.at("in_envelope").get<double>();
    sm.count = entry.at("count").get<std::int64_t>();
    m.sensors.push_back(std::move(sm));
  }
  return m;
}

AggregateMetrics run_montecarlo(const ScenarioConfig& base, int seeds, int jobs) {
  if (seeds < 1) {
    throw DomainError("run_montecarlo: seeds must be >= 1");
  }
  std::vector<ScenarioLog> logs(static_cast<std::size_t>(seeds));
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (int i = next.fetch_add(1); i < seeds; i = next.fetch_add(1)) {
      ScenarioConfig c = base;
      c.seed = base.seed + static_cast<std::uint64_t>(i);
      try {
        logs[static_cast<std::size_t>(i)] = run_scenario(c);
      } catch (const std::exception& e) {
        logs[static_cast<std::size_t>(i)].failed = true;
        logs[static_cast<std::size_t>(i)].failure_reason = e.what();
      }
    }
  };
  const int workers = std::clamp(jobs, 1, seeds);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& th : pool) {
      th.join();
    }
  }

  AggregateMetrics agg;
  agg.seeds = seeds;
  agg.state_names = state_component_names(base.model);
  const Eigen::Index n = static_cast<Eigen::Index>(agg.state_names.size());
  agg.rmse_mean = VectorXd::Zero(n);
  agg.rmse_std = VectorXd::Zero(n);

  std::vector<Metrics> per_run;
  std::vector<const ScenarioLog*> ok_logs;
  for (const ScenarioLog& log : logs) {
    if (log.failed || log.steps.empty()) {
      ++agg.failed_runs;
      continue;
    }
    per_run.push_back(compute_metrics(log));
    ok_logs.push_back(&log);
  }
  const std::size_t runs = per_run.size();
  if (runs == 0) {
    return agg;
  }

  for (const Metrics& m : per_run) {
    agg.rmse_mean += m.rmse;
    agg.nees_mean += m.nees_mean;
  }
  agg.rmse_mean /= static_cast<double>(runs);
  agg.nees_mean /= static_cast<double>(runs);
  if (runs > 1) {
    VectorXd var = VectorXd::Zero(n);
    for (const Metrics& m : per_run) {
      var += (m.rmse - agg.rmse_mean).array().square().matrix();
    }
    agg.rmse_std = (var / static_cast<double>(runs - 1)).array().sqrt();
  }

  // Band for the across-run mean of R chi-square(n) variables, scaled back
  // down by R; fraction of post-warm-up steps whose mean NEES stays inside.
  const double r_count = static_cast<double>(runs);
  agg.nees_envelope_lo = chi2_quantile(0.025, r_count * static_cast<double>(n)) / r_count;
  agg.nees_envelope_hi = chi2_quantile(0.975, r_count * static_cast<double>(n)) / r_count;
  std::size_t min_len = ok_logs.front()->steps.size();
  for (const ScenarioLog* log : ok_logs) {
    min_len = std::min(min_len, log->steps.size());
  }
  const std::size_t skip = min_len / 10;
  std::size_t inside = 0;
  for (std::size_t s = skip; s < min_len; ++s) {
    double mean = 0.0;
    for (const ScenarioLog* log : ok_logs) {
      mean += log->steps[s].nees;
    }
    mean /= r_count;
    if (mean >= agg.nees_envelope_lo && mean <= agg.nees_envelope_hi) {
      ++inside;
    }
  }
  if (min_len > skip) {
    agg.nees_envelope_fraction =
        static_cast<double>(inside) / static_cast<double>(min_len - skip);
  }

  for (std::size_t s = 0; s < per_run.front().sensors.size(); ++s) {
    SensorMetrics sm;
    sm.name = per_run.front().sensors[s].name;
    double nis_weighted = 0.0;
    double inside_weighted = 0.0;
    for (const Metrics& m : per_run) {
      const SensorMetrics& run_sm = m.sensors[s];
      nis_weighted += run_sm.nis_mean * static_cast<double>(run_sm.count);
      inside_weighted += run_sm.in_envelope * static_cast<double>(run_sm.count);
      sm.count += run_sm.count;
    }
    if (sm.count > 0) {
      sm.nis_mean = nis_weighted / static_cast<double>(sm.count);
      sm.in_envelope = inside_weighted / static_cast<double>(sm.count);
    }
    agg.sensors.push_back(std::move(sm));
  }
  return agg;
}

nlohmann::json aggregate_to_json(const AggregateMetrics& agg) {
  nlohmann::json j;
  j["seeds"] = agg.seeds;
  j["failed_runs"] = agg.failed_runs;
  j["state_names"] = agg.state_names;
  nlohmann::json mean = nlohmann::json::array(), std = nlohmann::json::array();
  for (Eigen::Index i = 0; i < agg.rmse_mean.size(); ++i) {
    mean.push_back(agg.rmse_mean[i]);
    std.push_back(agg.rmse_std[i]);
  }
  j["rmse_mean"] = std::move(mean);
  j["rmse_std"] = std::move(std);
  j["nees_mean"] = agg.nees_mean;
  j["nees_envelope"] = {{"lo", agg.nees_envelope_lo},
                        {"hi", agg.nees_envelope_hi},
                        {"fraction", agg.nees_envelope_fraction}};
  nlohmann::json sensors = nlohmann::json::array();
  for (const SensorMetrics& sm : agg.sensors) {
    sensors.push_back({{"name", sm.name},
                       {"nis_mean", sm.nis_mean},
                       {"in_envelope", sm.in_envelope},
                       {"count", sm.count}});
  }
  j["sensors"] = std::move(sensors);
  return j;
}

}  // namespace dronefusion::sim
