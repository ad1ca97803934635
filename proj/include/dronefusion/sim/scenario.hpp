#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "dronefusion/ekf.hpp"
#include "dronefusion/types.hpp"
#include "dronefusion/ukf.hpp"

namespace dronefusion::sim {

enum class ModelKind { kQuad1d, kQuad2d, kQuad3d };
enum class FilterKind { kEkf, kUkf };
enum class AttitudeFilterKind { kLinear, kNonlinear };

std::string to_string(ModelKind m);
std::string to_string(FilterKind f);

/// Deterministic control signal, evaluated per component:
/// zero, constant (offset), or sine (offset + amplitude sin(2 pi t / period + phase)).
struct ControlProgram {
  std::string profile{"zero"};
  VectorXd offset;     // empty means all zeros
  VectorXd amplitude;  // sine only
  double period{10.0};
  double phase{0.0};

  VectorXd at(double t, Eigen::Index control_dim) const;
};

/// Truth attitude profile for the 3D model: roll/pitch sines the vehicle
/// actually flies, which the attitude filter has to track.
struct AttitudeProgram {
  double amplitude{0.0};  // rad
  double period{6.0};     // s
  double tau{0.5};        // complementary filter time constant
  AttitudeFilterKind filter{AttitudeFilterKind::kNonlinear};
};

/// Everything a scenario run depends on. parse_config fills unset fields
/// from per-model defaults; validate() rejects inconsistent combinations
/// and names the offending field.
struct ScenarioConfig {
  ModelKind model{ModelKind::kQuad1d};
  FilterKind filter{FilterKind::kEkf};
  std::uint64_t seed{1};
  double duration{20.0};

  double dt_imu{0.02};   // base tick: one predict per tick
  double dt_gps{0.2};    // quad3d
  double dt_mag{0.1};    // quad3d
  double dt_range{0.1};  // quad1d / quad2d

  ControlProgram control;
  AttitudeProgram attitude;

  VectorXd init_state;         // truth at t = 0
  VectorXd init_std;           // initial belief standard deviations
  VectorXd process_q;          // filter Q diagonal
  VectorXd truth_process_std;  // truth disturbance std per state
  VectorXd r_range, r_gps, r_mag;              // filter R diagonals
  VectorXd noise_range, noise_gps, noise_mag;  // measurement noise std

  double noise_accel{0.0};    // control-channel noise (body accel / commanded angle)
  double noise_gyro{0.0};     // yaw-rate channel + attitude body rates
  double noise_att_acc{0.0};  // accelerometer-derived angle noise

  double wall_y{5.0};
  double gravity{9.80665};
  bool gravity_down_positive{false};  // strict-NED sign instead of the -g dt form

  UkfParamsd ukf;
  EkfOptions ekf;

  Eigen::Index state_dim() const;
  Eigen::Index control_dim() const;

  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// Baseline scenario for a model: the defaults every config file starts from.
ScenarioConfig default_config(ModelKind model);

/// Parse a JSON document into a config: unknown keys are rejected, missing
/// keys fall back to model defaults.
ScenarioConfig parse_config(const nlohmann::json& j);

/// Applies one `--set key=value` override onto the raw JSON document using
/// dotted paths (e.g. control.amplitude=[0.1]). Values parse as JSON when
/// possible and fall back to plain strings.
void apply_override(nlohmann::json& j, const std::string& assignment);

nlohmann::json to_json(const ScenarioConfig& config);

}  // namespace dronefusion::sim
