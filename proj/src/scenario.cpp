#include "dronefusion/sim/scenario.hpp"

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <string>
#include <utility>

#include "dronefusion/errors.hpp"
#include "dronefusion/quad1d.hpp"
#include "dronefusion/quad2d.hpp"
#include "dronefusion/quad3d.hpp"

namespace dronefusion::sim {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError("config field " + field + ": " + what);
}

double as_number(const json& j, const std::string& field) {
  if (!j.is_number()) {
    fail(field, "expected a number");
  }
  return j.get<double>();
}

std::string as_string(const json& j, const std::string& field) {
  if (!j.is_string()) {
    fail(field, "expected a string");
  }
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& field) {
  if (!j.is_boolean()) {
    fail(field, "expected true or false");
  }
  return j.get<bool>();
}

std::uint64_t as_seed(const json& j, const std::string& field) {
  if (j.is_number_unsigned()) {
    return j.get<std::uint64_t>();
  }
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  fail(field, "expected a non-negative integer");
}

VectorXd as_vector(const json& j, const std::string& field) {
  if (!j.is_array()) {
    fail(field, "expected an array of numbers");
  }
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& entry : j) {
    if (!entry.is_number()) {
      fail(field, "expected an array of numbers");
    }
    v[i++] = entry.get<double>();
  }
  return v;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    a.push_back(v[i]);
  }
  return a;
}

void reject_unknown_keys(const json& obj, const std::string& prefix,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (item.key() == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(prefix.empty() ? item.key() : prefix + "." + item.key(), "unknown field");
    }
  }
}

const json* member(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

ModelKind model_from_string(const std::string& s, const std::string& field) {
  if (s == "quad1d") return ModelKind::kQuad1d;
  if (s == "quad2d") return ModelKind::kQuad2d;
  if (s == "quad3d") return ModelKind::kQuad3d;
  fail(field, "must be one of quad1d, quad2d, quad3d");
}

FilterKind filter_from_string(const std::string& s, const std::string& field) {
  if (s == "ekf") return FilterKind::kEkf;
  if (s == "ukf") return FilterKind::kUkf;
  fail(field, "must be one of ekf, ukf");
}

}  // namespace

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::kQuad1d: return "quad1d";
    case ModelKind::kQuad2d: return "quad2d";
    case ModelKind::kQuad3d: return "quad3d";
  }
  throw DomainError("to_string: invalid ModelKind");
}

std::string to_string(FilterKind f) {
  return f == FilterKind::kEkf ? "ekf" : "ukf";
}

VectorXd ControlProgram::at(double t, Eigen::Index control_dim) const {
  if (profile == "zero") {
    return VectorXd::Zero(control_dim);
  }
  VectorXd u = offset.size() == 0 ? VectorXd::Zero(control_dim) : offset;
  if (profile == "constant") {
    return u;
  }
  if (profile == "sine") {
    if (amplitude.size() != 0) {
      u += amplitude * std::sin(2.0 * std::numbers::pi * t / period + phase);
    }
    return u;
  }
  throw ConfigError("config field control.profile: must be one of zero, constant, sine");
}

Eigen::Index ScenarioConfig::state_dim() const {
  switch (model) {
    case ModelKind::kQuad1d: return quad1d::kStateDim;
    case ModelKind::kQuad2d: return quad2d::kStateDim;
    case ModelKind::kQuad3d: return quad3d::kStateDim;
  }
  throw DomainError("ScenarioConfig: invalid model");
}

Eigen::Index ScenarioConfig::control_dim() const {
  switch (model) {
    case ModelKind::kQuad1d: return quad1d::kControlDim;
    case ModelKind::kQuad2d: return quad2d::kControlDim;
    case ModelKind::kQuad3d: return quad3d::kControlDim;
  }
  throw DomainError("ScenarioConfig: invalid model");
}

void ScenarioConfig::validate() const {
  const Eigen::Index n = state_dim();
  const Eigen::Index m = control_dim();

  const auto positive = [](double v, const char* field) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      fail(field, "must be a positive finite number");
    }
  };
  const auto finite = [](double v, const char* field) {
    if (!std::isfinite(v)) {
      fail(field, "must be finite");
    }
  };
  const auto sized = [n](const VectorXd& v, Eigen::Index want, const char* field) {
    if (v.size() != want) {
      fail(field, "expected " + std::to_string(want) + " entries, got " +
                      std::to_string(v.size()));
    }
    if (!all_finite(v)) {
      fail(field, "entries must be finite");
    }
    (void)n;
  };
  const auto non_negative = [&sized](const VectorXd& v, Eigen::Index want, const char* field) {
    sized(v, want, field);
    if (v.size() > 0 && v.minCoeff() < 0.0) {
      fail(field, "entries must be non-negative");
    }
  };
  const auto strictly_positive = [&sized](const VectorXd& v, Eigen::Index want,
                                          const char* field) {
    sized(v, want, field);
    if (v.size() > 0 && !(v.minCoeff() > 0.0)) {
      fail(field, "entries must be positive");
    }
  };

  positive(duration, "duration");
  positive(dt_imu, "dt.imu");
  if (duration / dt_imu < 0.5) {
    fail("duration", "must cover at least one dt.imu tick");
  }
  const auto tick_multiple = [this, &positive](double v, const char* field) {
    positive(v, field);
    const double ratio = v / dt_imu;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, rounded)) {
      fail(field, "must be a positive integer multiple of dt.imu");
    }
  };
  if (model == ModelKind::kQuad3d) {
    tick_multiple(dt_gps, "dt.gps");
    tick_multiple(dt_mag, "dt.mag");
  } else {
    tick_multiple(dt_range, "dt.range");
  }

  if (control.profile != "zero" && control.profile != "constant" && control.profile != "sine") {
    fail("control.profile", "must be one of zero, constant, sine");
  }
  if (control.offset.size() != 0) {
    sized(control.offset, m, "control.offset");
  }
  if (control.amplitude.size() != 0) {
    sized(control.amplitude, m, "control.amplitude");
  }
  if (control.profile == "sine") {
    positive(control.period, "control.period");
  }
  finite(control.phase, "control.phase");

  sized(init_state, n, "init.state");
  non_negative(init_std, n, "init.std");
  non_negative(process_q, n, "process.q");
  non_negative(truth_process_std, n, "process.truth_std");

  if (model == ModelKind::kQuad3d) {
    strictly_positive(r_gps, 6, "sensors.gps.r");
    non_negative(noise_gps, 6, "sensors.gps.noise_std");
    strictly_positive(r_mag, 1, "sensors.mag.r");
    non_negative(noise_mag, 1, "sensors.mag.noise_std");
  } else {
    strictly_positive(r_range, 1, "sensors.range.r");
    non_negative(noise_range, 1, "sensors.range.noise_std");
  }

  if (!std::isfinite(noise_accel) || noise_accel < 0.0) {
    fail("noise.accel", "must be non-negative");
  }
  if (!std::isfinite(noise_gyro) || noise_gyro < 0.0) {
    fail("noise.gyro", "must be non-negative");
  }
  if (!std::isfinite(noise_att_acc) || noise_att_acc < 0.0) {
    fail("noise.att_acc", "must be non-negative");
  }

  finite(wall_y, "world.wall_y");
  if (!std::isfinite(gravity) || gravity < 0.0) {
    fail("world.gravity", "must be non-negative");
  }

  if (!std::isfinite(attitude.amplitude) || attitude.amplitude < 0.0) {
    fail("attitude.amplitude", "must be non-negative");
  }
  if (attitude.amplitude > 0.0) {
    positive(attitude.period, "attitude.period");
  }
  if (!std::isfinite(attitude.tau) || attitude.tau < 0.0) {
    fail("attitude.tau", "must be non-negative");
  }

  if (!(ukf.alpha > 0.0 && ukf.alpha <= 1.0)) {
    fail("ukf.alpha", "must lie in (0, 1]");
  }
  finite(ukf.beta, "ukf.beta");
  if (!(ukf.scaled_dim(n) > 0.0)) {
    fail("ukf.kappa", "alpha^2 (N + kappa) must be positive");
  }
}

ScenarioConfig default_config(ModelKind model) {
  ScenarioConfig c;
  c.model = model;
  c.filter = FilterKind::kEkf;
  c.seed = 1;
  switch (model) {
    case ModelKind::kQuad1d:
      c.duration = 20.0;
      c.dt_imu = 0.1;
      c.dt_range = 0.1;
      c.control.profile = "sine";
      c.control.offset = VectorXd::Zero(1);
      c.control.amplitude = VectorXd::Constant(1, 0.5);
      c.control.period = 4.0;
      c.init_state = (VectorXd(2) << 0.0, 1.0).finished();
      c.init_std = (VectorXd(2) << 0.1, 0.1).finished();
      c.process_q = (VectorXd(2) << 0.01, 0.01).finished();
      c.truth_process_std = (VectorXd(2) << 0.1, 0.1).finished();
      c.r_range = VectorXd::Constant(1, 0.01);
      c.noise_range = VectorXd::Constant(1, 0.1);
      break;
    case ModelKind::kQuad2d:
      c.duration = 20.0;
      c.dt_imu = 0.1;
      c.dt_range = 0.1;
      c.control.profile = "sine";
      c.control.offset = VectorXd::Zero(1);
      c.control.amplitude = VectorXd::Constant(1, 0.3);
      c.control.period = 8.0;
      c.init_state = VectorXd::Zero(3);
      c.init_std = (VectorXd(3) << 0.05, 0.1, 0.1).finished();
      // The commanded-roll channel carries noise.accel, so q[phi] matches
      // its variance; position disturbance enters mostly through velocity.
      c.process_q = (VectorXd(3) << 0.0025, 0.01, 0.0001).finished();
      c.truth_process_std = (VectorXd(3) << 0.0, 0.1, 0.01).finished();
      c.r_range = VectorXd::Constant(1, 0.01);
      c.noise_range = VectorXd::Constant(1, 0.1);
      c.noise_accel = 0.05;
      break;
    case ModelKind::kQuad3d:
      c.duration = 40.0;
      c.dt_imu = 0.02;
      c.dt_gps = 0.2;
      c.dt_mag = 0.1;
      c.control.profile = "sine";
      c.control.offset = (VectorXd(4) << 0.0, 0.0, quad3d::kStandardGravity, 0.0).finished();
      c.control.amplitude = (VectorXd(4) << 0.2, 0.2, 0.3, 0.02).finished();
      c.control.period = 7.0;
      c.attitude.amplitude = 0.05;
      c.attitude.period = 6.0;
      c.attitude.tau = 0.5;
      c.attitude.filter = AttitudeFilterKind::kNonlinear;
      c.init_state = VectorXd::Zero(7);
      c.init_std = (VectorXd(7) << 0.5, 0.5, 0.5, 0.3, 0.3, 0.3, 0.1).finished();
      c.process_q = (VectorXd(7) << 2.5e-5, 2.5e-5, 2.5e-5, 2.25e-4, 2.25e-4, 2.25e-4, 2.5e-5)
                        .finished();
      c.truth_process_std =
          (VectorXd(7) << 0.005, 0.005, 0.005, 0.015, 0.015, 0.015, 0.005).finished();
      c.r_gps = (VectorXd(6) << 1.0, 1.0, 1.0, 0.09, 0.09, 0.09).finished();
      c.noise_gps = (VectorXd(6) << 1.0, 1.0, 1.0, 0.3, 0.3, 0.3).finished();
      c.r_mag = VectorXd::Constant(1, 0.01);
      c.noise_mag = VectorXd::Constant(1, 0.1);
      c.noise_accel = 0.02;
      c.noise_gyro = 0.002;
      c.noise_att_acc = 0.01;
      break;
  }
  return c;
}

ScenarioConfig parse_config(const json& j) {
  if (!j.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }
  reject_unknown_keys(j, "", {"model", "filter", "seed", "duration", "dt", "control", "attitude",
                              "init", "process", "sensors", "noise", "world", "ukf", "ekf"});

  ModelKind model = ModelKind::kQuad1d;
  if (const json* v = member(j, "model")) {
    model = model_from_string(as_string(*v, "model"), "model");
  }
  ScenarioConfig c = default_config(model);

  if (const json* v = member(j, "filter")) {
    c.filter = filter_from_string(as_string(*v, "filter"), "filter");
  }
  if (const json* v = member(j, "seed")) {
    c.seed = as_seed(*v, "seed");
  }
  if (const json* v = member(j, "duration")) {
    c.duration = as_number(*v, "duration");
  }

  if (const json* dt = member(j, "dt")) {
    if (!dt->is_object()) {
      fail("dt", "expected an object");
    }
    reject_unknown_keys(*dt, "dt", {"imu", "gps", "mag", "range"});
    if (const json* v = member(*dt, "imu")) c.dt_imu = as_number(*v, "dt.imu");
    if (const json* v = member(*dt, "gps")) c.dt_gps = as_number(*v, "dt.gps");
    if (const json* v = member(*dt, "mag")) c.dt_mag = as_number(*v, "dt.mag");
    if (const json* v = member(*dt, "range")) c.dt_range = as_number(*v, "dt.range");
  }

  if (const json* ctl = member(j, "control")) {
    if (!ctl->is_object()) {
      fail("control", "expected an object");
    }
    reject_unknown_keys(*ctl, "control", {"profile", "offset", "amplitude", "period", "phase"});
    if (const json* v = member(*ctl, "profile")) {
      c.control.profile = as_string(*v, "control.profile");
    }
    if (const json* v = member(*ctl, "offset")) {
      c.control.offset = as_vector(*v, "control.offset");
    }
    if (const json* v = member(*ctl, "amplitude")) {
      c.control.amplitude = as_vector(*v, "control.amplitude");
    }
    if (const json* v = member(*ctl, "period")) c.control.period = as_number(*v, "control.period");
    if (const json* v = member(*ctl, "phase")) c.control.phase = as_number(*v, "control.phase");
  }

  if (const json* att = member(j, "attitude")) {
    if (!att->is_object()) {
      fail("attitude", "expected an object");
    }
    reject_unknown_keys(*att, "attitude", {"amplitude", "period", "tau", "filter"});
    if (const json* v = member(*att, "amplitude")) {
      c.attitude.amplitude = as_number(*v, "attitude.amplitude");
    }
    if (const json* v = member(*att, "period")) {
      c.attitude.period = as_number(*v, "attitude.period");
    }
    if (const json* v = member(*att, "tau")) c.attitude.tau = as_number(*v, "attitude.tau");
    if (const json* v = member(*att, "filter")) {
      const std::string s = as_string(*v, "attitude.filter");
      if (s == "linear") {
        c.attitude.filter = AttitudeFilterKind::kLinear;
      } else if (s == "nonlinear") {
        c.attitude.filter = AttitudeFilterKind::kNonlinear;
      } else {
        fail("attitude.filter", "must be one of linear, nonlinear");
      }
    }
  }

  if (const json* init = member(j, "init")) {
    if (!init->is_object()) {
      fail("init", "expected an object");
    }
    reject_unknown_keys(*init, "init", {"state", "std"});
    if (const json* v = member(*init, "state")) c.init_state = as_vector(*v, "init.state");
    if (const json* v = member(*init, "std")) c.init_std = as_vector(*v, "init.std");
  }

  if (const json* proc = member(j, "process")) {
    if (!proc->is_object()) {
      fail("process", "expected an object");
    }
    reject_unknown_keys(*proc, "process", {"q", "truth_std"});
    if (const json* v = member(*proc, "q")) c.process_q = as_vector(*v, "process.q");
    if (const json* v = member(*proc, "truth_std")) {
      c.truth_process_std = as_vector(*v, "process.truth_std");
    }
  }

  if (const json* sensors = member(j, "sensors")) {
    if (!sensors->is_object()) {
      fail("sensors", "expected an object");
    }
    reject_unknown_keys(*sensors, "sensors", {"range", "gps", "mag"});
    const auto sensor_block = [&](const char* name, VectorXd& r, VectorXd& noise) {
      const json* blk = member(*sensors, name);
      if (blk == nullptr) {
        return;
      }
      const std::string prefix = std::string("sensors.") + name;
      if (!blk->is_object()) {
        fail(prefix, "expected an object");
      }
      reject_unknown_keys(*blk, prefix, {"r", "noise_std"});
      if (const json* v = member(*blk, "r")) r = as_vector(*v, prefix + ".r");
      if (const json* v = member(*blk, "noise_std")) {
        noise = as_vector(*v, prefix + ".noise_std");
      }
    };
    sensor_block("range", c.r_range, c.noise_range);
    sensor_block("gps", c.r_gps, c.noise_gps);
    sensor_block("mag", c.r_mag, c.noise_mag);
  }

  if (const json* noise = member(j, "noise")) {
    if (!noise->is_object()) {
      fail("noise", "expected an object");
    }
    reject_unknown_keys(*noise, "noise", {"accel", "gyro", "att_acc"});
    if (const json* v = member(*noise, "accel")) c.noise_accel = as_number(*v, "noise.accel");
    if (const json* v = member(*noise, "gyro")) c.noise_gyro = as_number(*v, "noise.gyro");
    if (const json* v = member(*noise, "att_acc")) {
      c.noise_att_acc = as_number(*v, "noise.att_acc");
    }
  }

  if (const json* world = member(j, "world")) {
    if (!world->is_object()) {
      fail("world", "expected an object");
    }
    reject_unknown_keys(*world, "world", {"wall_y", "gravity", "gravity_sign"});
    if (const json* v = member(*world, "wall_y")) c.wall_y = as_number(*v, "world.wall_y");
    if (const json* v = member(*world, "gravity")) c.gravity = as_number(*v, "world.gravity");
    if (const json* v = member(*world, "gravity_sign")) {
      const std::string s = as_string(*v, "world.gravity_sign");
      if (s == "down_negative") {
        c.gravity_down_positive = false;
      } else if (s == "ned") {
        c.gravity_down_positive = true;
      } else {
        fail("world.gravity_sign", "must be one of down_negative, ned");
      }
    }
  }

  if (const json* ukf = member(j, "ukf")) {
    if (!ukf->is_object()) {
      fail("ukf", "expected an object");
    }
    reject_unknown_keys(*ukf, "ukf", {"alpha", "beta", "kappa"});
    if (const json* v = member(*ukf, "alpha")) c.ukf.alpha = as_number(*v, "ukf.alpha");
    if (const json* v = member(*ukf, "beta")) c.ukf.beta = as_number(*v, "ukf.beta");
    if (const json* v = member(*ukf, "kappa")) c.ukf.kappa = as_number(*v, "ukf.kappa");
  }

  if (const json* ekf = member(j, "ekf")) {
    if (!ekf->is_object()) {
      fail("ekf", "expected an object");
    }
    reject_unknown_keys(*ekf, "ekf", {"joseph"});
    if (const json* v = member(*ekf, "joseph")) {
      c.ekf.joseph_update = as_bool(*v, "ekf.joseph");
    }
  }

  c.validate();
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' must look like key=value");
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) {
      throw ConfigError("override '" + assignment + "' has an empty path segment");
    }
    if (dot == std::string::npos) {
      json value;
      try {
        value = json::parse(raw);
      } catch (const json::parse_error&) {
        value = raw;  // bare words (ukf, sine, ...) pass through as strings
      }
      (*node)[key] = std::move(value);
      return;
    }
    if (!node->is_object() && !node->is_null()) {
      throw ConfigError("override '" + assignment + "' descends into a non-object");
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json to_json(const ScenarioConfig& c) {
  json j;
  j["model"] = to_string(c.model);
  j["filter"] = to_string(c.filter);
  j["seed"] = c.seed;
  j["duration"] = c.duration;
  j["dt"] = {{"imu", c.dt_imu}, {"gps", c.dt_gps}, {"mag", c.dt_mag}, {"range", c.dt_range}};
  j["control"] = {{"profile", c.control.profile},
                  {"offset", vector_to_json(c.control.offset)},
                  {"amplitude", vector_to_json(c.control.amplitude)},
                  {"period", c.control.period},
                  {"phase", c.control.phase}};
  j["attitude"] = {{"amplitude", c.attitude.amplitude},
                   {"period", c.attitude.period},
                   {"tau", c.attitude.tau},
                   {"filter", c.attitude.filter == AttitudeFilterKind::kLinear ? "linear"
                                                                               : "nonlinear"}};
  j["init"] = {{"state", vector_to_json(c.init_state)}, {"std", vector_to_json(c.init_std)}};
  j["process"] = {{"q", vector_to_json(c.process_q)},
                  {"truth_std", vector_to_json(c.truth_process_std)}};
  json sensors;
  if (c.model == ModelKind::kQuad3d) {
    sensors["gps"] = {{"r", vector_to_json(c.r_gps)}, {"noise_std", vector_to_json(c.noise_gps)}};
    sensors["mag"] = {{"r", vector_to_json(c.r_mag)}, {"noise_std", vector_to_json(c.noise_mag)}};
  } else {
    sensors["range"] = {{"r", vector_to_json(c.r_range)},
                        {"noise_std", vector_to_json(c.noise_range)}};
  }
  j["sensors"] = std::move(sensors);
  j["noise"] = {{"accel", c.noise_accel}, {"gyro", c.noise_gyro}, {"att_acc", c.noise_att_acc}};
  j["world"] = {{"wall_y", c.wall_y},
                {"gravity", c.gravity},
                {"gravity_sign", c.gravity_down_positive ? "ned" : "down_negative"}};
  j["ukf"] = {{"alpha", c.ukf.alpha}, {"beta", c.ukf.beta}, {"kappa", c.ukf.kappa}};
  j["ekf"] = {{"joseph", c.ekf.joseph_update}};
  return j;
}

}  // namespace dronefusion::sim
