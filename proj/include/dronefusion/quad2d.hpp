#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "dronefusion/errors.hpp"
#include "dronefusion/models.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion::quad2d {

// State layout: [phi, ydot, y]. Control: commanded roll angle.
// The vehicle holds a fixed height and slides laterally; rolling by phi
// tilts the thrust vector and accelerates it sideways by -sin(phi).
inline constexpr Eigen::Index kStateDim = 3;
inline constexpr Eigen::Index kControlDim = 1;
inline constexpr Eigen::Index kPhi = 0;
inline constexpr Eigen::Index kYdot = 1;
inline constexpr Eigen::Index kY = 2;

/// Range beams closer to parallel with the wall than this are rejected.
inline constexpr double kCosSingularityGuard = 1e-6;

/// Sideways range sensor target.
template <typename Scalar>
struct Wall {
  Scalar wall_y{Scalar(5)};
};

using Walld = Wall<double>;

/// phi' = u (control overrides the angle), ydot' = ydot - sin(phi) dt,
/// y' = y + ydot dt.
template <typename Scalar>
VectorX<Scalar> transition(const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt) {
  VectorX<Scalar> next(kStateDim);
  next[kPhi] = u[0];
  next[kYdot] = x[kYdot] - std::sin(x[kPhi]) * dt;
  next[kY] = x[kY] + x[kYdot] * dt;
  return next;
}

/// Row 0 is zero because the control fully overrides phi.
template <typename Scalar>
MatrixX<Scalar> transition_jacobian(const VectorX<Scalar>& x, Scalar dt) {
  MatrixX<Scalar> g(kStateDim, kStateDim);
  g << Scalar(0),                Scalar(0), Scalar(0),
       -std::cos(x[kPhi]) * dt,  Scalar(1), Scalar(0),
       Scalar(0),                dt,        Scalar(1);
  return g;
}

/// Slant range to the wall: (wall_y - y) / cos(phi).
template <typename Scalar>
VectorX<Scalar> range(const VectorX<Scalar>& x, const Wall<Scalar>& wall) {
  const Scalar c = std::cos(x[kPhi]);
  if (std::abs(c) <= Scalar(kCosSingularityGuard)) {
    throw SingularityError("quad2d range: beam parallel to wall (cos(phi) ~ 0)");
  }
  VectorX<Scalar> z(1);
  z[0] = (wall.wall_y - x[kY]) / c;
  return z;
}

template <typename Scalar>
MatrixX<Scalar> range_jacobian(const VectorX<Scalar>& x, const Wall<Scalar>& wall) {
  const Scalar c = std::cos(x[kPhi]);
  if (std::abs(c) <= Scalar(kCosSingularityGuard)) {
    throw SingularityError("quad2d range_jacobian: beam parallel to wall (cos(phi) ~ 0)");
  }
  MatrixX<Scalar> h(1, kStateDim);
  h << (wall.wall_y - x[kY]) * std::sin(x[kPhi]) / (c * c), Scalar(0), Scalar(-1) / c;
  return h;
}

template <typename Scalar>
MatrixX<Scalar> default_process_noise() {
  return Eigen::Vector3<Scalar>(Scalar(0.0025), Scalar(0.01), Scalar(0.01)).asDiagonal();
}

template <typename Scalar>
MatrixX<Scalar> default_range_noise() {
  return MatrixX<Scalar>::Constant(1, 1, Scalar(0.01));
}

template <typename Scalar = double>
ProcessModel<Scalar> make_process_model(MatrixX<Scalar> q = default_process_noise<Scalar>()) {
  ProcessModel<Scalar> model;
  model.state_dim = kStateDim;
  model.control_dim = kControlDim;
  model.g = [](const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt) {
    return transition<Scalar>(x, u, dt);
  };
  model.g_prime = [](const VectorX<Scalar>& x, const VectorX<Scalar>&, Scalar dt) {
    return transition_jacobian<Scalar>(x, dt);
  };
  model.Q = std::move(q);
  return model;
}

template <typename Scalar = double>
MeasurementModel<Scalar> make_range_model(Wall<Scalar> wall = {},
                                          MatrixX<Scalar> r = default_range_noise<Scalar>()) {
  MeasurementModel<Scalar> model;
  model.meas_dim = 1;
  model.h = [wall](const VectorX<Scalar>& x) { return range<Scalar>(x, wall); };
  model.h_prime = [wall](const VectorX<Scalar>& x) { return range_jacobian<Scalar>(x, wall); };
  model.R = std::move(r);
  return model;
}

}  // namespace dronefusion::quad2d
