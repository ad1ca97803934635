#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <memory>

#include "dronefusion/errors.hpp"
#include "dronefusion/models.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion::quad3d {

// State layout (NED): [x, y, z, xdot, ydot, zdot, psi]. Position and velocity
// live in the global frame; psi is the heading from magnetic north, stored
// wrapped to (-pi, pi]. Control: body-frame acceleration plus global yaw rate.
inline constexpr Eigen::Index kStateDim = 7;
inline constexpr Eigen::Index kControlDim = 4;
inline constexpr Eigen::Index kX = 0;
inline constexpr Eigen::Index kY = 1;
inline constexpr Eigen::Index kZ = 2;
inline constexpr Eigen::Index kVx = 3;
inline constexpr Eigen::Index kVy = 4;
inline constexpr Eigen::Index kVz = 5;
inline constexpr Eigen::Index kPsi = 6;

inline constexpr double kStandardGravity = 9.80665;  // m/s^2

/// Which way gravity enters the zdot row. kDownNegative is the printed
/// "- g dt" form; kDownPositive flips it for strict NED down-positive z.
enum class GravitySign { kDownNegative, kDownPositive };

/// Roll and pitch supplied from outside the filter state (the attitude
/// estimator owns them).
template <typename Scalar>
struct AttitudeInput {
  Scalar phi{0};
  Scalar theta{0};
};

using AttitudeInputd = AttitudeInput<double>;

template <typename Scalar>
struct Params {
  Scalar gravity{Scalar(kStandardGravity)};
  GravitySign gravity_sign{GravitySign::kDownNegative};
};

using Paramsd = Params<double>;

/// Body-to-global rotation in the aerospace 1-2-3 (roll, pitch, yaw) order:
/// R = Rz(psi) Ry(theta) Rx(phi).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_bg(const AttitudeInput<Scalar>& att, Scalar psi) {
  const Scalar cphi = std::cos(att.phi), sphi = std::sin(att.phi);
  const Scalar cth = std::cos(att.theta), sth = std::sin(att.theta);
  const Scalar cpsi = std::cos(psi), spsi = std::sin(psi);
  Eigen::Matrix<Scalar, 3, 3> r;
  r << cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi,
       cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi,
       -sth,       cth * sphi,                      cth * cphi;
  return r;
}

/// d(rotation_bg)/d(psi); the third row is identically zero.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> rotation_bg_prime(const AttitudeInput<Scalar>& att, Scalar psi) {
  const Scalar cphi = std::cos(att.phi), sphi = std::sin(att.phi);
  const Scalar cth = std::cos(att.theta), sth = std::sin(att.theta);
  const Scalar cpsi = std::cos(psi), spsi = std::sin(psi);
  Eigen::Matrix<Scalar, 3, 3> r;
  r << -cth * spsi, -sphi * sth * spsi - cphi * cpsi, -cphi * sth * spsi + sphi * cpsi,
       cth * cpsi,  sphi * sth * cpsi - cphi * spsi,  cphi * sth * cpsi + sphi * spsi,
       Scalar(0),   Scalar(0),                        Scalar(0);
  return r;
}

template <typename Scalar>
Scalar gravity_rate(const Params<Scalar>& params) {
  return params.gravity_sign == GravitySign::kDownNegative ? -params.gravity : params.gravity;
}

/// pos += vel dt; vel += R_bg a_body dt with the gravity term on zdot;
/// psi += psidot dt, wrapped.
template <typename Scalar>
VectorX<Scalar> transition(const VectorX<Scalar>& x, const AttitudeInput<Scalar>& att,
                           const VectorX<Scalar>& u, Scalar dt,
                           const Params<Scalar>& params = {}) {
  const Eigen::Matrix<Scalar, 3, 3> r = rotation_bg<Scalar>(att, x[kPsi]);
  VectorX<Scalar> next(kStateDim);
  next.template segment<3>(kX) = x.template segment<3>(kX) + x.template segment<3>(kVx) * dt;
  next.template segment<3>(kVx) =
      x.template segment<3>(kVx) + r * u.template head<3>() * dt;
  next[kVz] += gravity_rate(params) * dt;
  next[kPsi] = wrap_angle(x[kPsi] + u[3] * dt);
  return next;
}

/// Identity plus the dt position/velocity coupling; the psi column of the
/// velocity rows carries R'_bg a_body dt.
template <typename Scalar>
MatrixX<Scalar> transition_jacobian(const VectorX<Scalar>& x, const AttitudeInput<Scalar>& att,
                                    const VectorX<Scalar>& u, Scalar dt) {
  const Eigen::Matrix<Scalar, 3, 3> rp = rotation_bg_prime<Scalar>(att, x[kPsi]);
  MatrixX<Scalar> g = MatrixX<Scalar>::Identity(kStateDim, kStateDim);
  g(kX, kVx) = dt;
  g(kY, kVy) = dt;
  g(kZ, kVz) = dt;
  g.template block<3, 1>(kVx, kPsi) = rp * u.template head<3>() * dt;
  return g;
}

/// GPS reports global position and velocity; heading is deliberately absent.
template <typename Scalar>
VectorX<Scalar> gps_measurement(const VectorX<Scalar>& x) {
  return x.template head<6>();
}

template <typename Scalar>
MatrixX<Scalar> gps_jacobian() {
  MatrixX<Scalar> h = MatrixX<Scalar>::Zero(6, kStateDim);
  h.template block<6, 6>(0, 0).setIdentity();
  return h;
}

/// Magnetometer reports yaw in the global frame.
template <typename Scalar>
VectorX<Scalar> mag_measurement(const VectorX<Scalar>& x) {
  VectorX<Scalar> z(1);
  z[0] = x[kPsi];
  return z;
}

template <typename Scalar>
MatrixX<Scalar> mag_jacobian() {
  MatrixX<Scalar> h = MatrixX<Scalar>::Zero(1, kStateDim);
  h(0, kPsi) = Scalar(1);
  return h;
}

template <typename Scalar>
MatrixX<Scalar> default_process_noise() {
  VectorX<Scalar> d(kStateDim);
  d << Scalar(1e-4), Scalar(1e-4), Scalar(1e-4),
       Scalar(1e-2), Scalar(1e-2), Scalar(1e-2),
       Scalar(1e-4);
  return d.asDiagonal();
}

template <typename Scalar>
MatrixX<Scalar> default_gps_noise() {
  VectorX<Scalar> d(6);
  d << Scalar(1), Scalar(1), Scalar(1), Scalar(0.09), Scalar(0.09), Scalar(0.09);
  return d.asDiagonal();
}

template <typename Scalar>
MatrixX<Scalar> default_mag_noise() {
  return MatrixX<Scalar>::Constant(1, 1, Scalar(0.01));
}

/// The process model reads roll/pitch from a shared slot the caller refreshes
/// each tick, keeping attitude out of the filter state.
template <typename Scalar = double>
ProcessModel<Scalar> make_process_model(
    std::shared_ptr<const AttitudeInput<Scalar>> attitude, Params<Scalar> params = {},
    MatrixX<Scalar> q = default_process_noise<Scalar>()) {
  if (!attitude) {
    throw DomainError("quad3d make_process_model: null attitude source");
  }
  ProcessModel<Scalar> model;
  model.state_dim = kStateDim;
  model.control_dim = kControlDim;
  model.g = [attitude, params](const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt) {
    return transition<Scalar>(x, *attitude, u, dt, params);
  };
  model.g_prime = [attitude](const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt) {
    return transition_jacobian<Scalar>(x, *attitude, u, dt);
  };
  model.Q = std::move(q);
  return model;
}

template <typename Scalar = double>
MeasurementModel<Scalar> make_gps_model(MatrixX<Scalar> r = default_gps_noise<Scalar>()) {
  MeasurementModel<Scalar> model;
  model.meas_dim = 6;
  model.h = [](const VectorX<Scalar>& x) { return gps_measurement<Scalar>(x); };
  model.h_prime = [](const VectorX<Scalar>&) { return gps_jacobian<Scalar>(); };
  model.R = std::move(r);
  return model;
}

template <typename Scalar = double>
MeasurementModel<Scalar> make_mag_model(MatrixX<Scalar> r = default_mag_noise<Scalar>()) {
  MeasurementModel<Scalar> model;
  model.meas_dim = 1;
  model.h = [](const VectorX<Scalar>& x) { return mag_measurement<Scalar>(x); };
  model.h_prime = [](const VectorX<Scalar>&) { return mag_jacobian<Scalar>(); };
  model.R = std::move(r);
  model.residual_wrap = {true};
  return model;
}

}  // namespace dronefusion::quad3d
