#pragma once

#include <Eigen/Dense>

#include "dronefusion/errors.hpp"
#include "dronefusion/models.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion::quad1d {

// State layout: [zdot, z]. Control: commanded vertical acceleration.
inline constexpr Eigen::Index kStateDim = 2;
inline constexpr Eigen::Index kControlDim = 1;
inline constexpr Eigen::Index kZdot = 0;
inline constexpr Eigen::Index kZ = 1;

/// zdot' = zdot + u dt, z' = z + zdot dt (velocity taken before the update,
/// so the map is exactly A x + B u).
template <typename Scalar>
VectorX<Scalar> transition(const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt) {
  VectorX<Scalar> next(kStateDim);
  next[kZdot] = x[kZdot] + u[0] * dt;
  next[kZ] = x[kZ] + x[kZdot] * dt;
  return next;
}

/// Constant Jacobian [[1, 0], [dt, 1]]; the model is linear.
template <typename Scalar>
MatrixX<Scalar> transition_jacobian(Scalar dt) {
  MatrixX<Scalar> a(kStateDim, kStateDim);
  a << Scalar(1), Scalar(0),
       dt,        Scalar(1);
  return a;
}

/// Downward range sensor over ground at z = 0: reads the height directly.
template <typename Scalar>
VectorX<Scalar> range(const VectorX<Scalar>& x) {
  VectorX<Scalar> z(1);
  z[0] = x[kZ];
  return z;
}

template <typename Scalar>
MatrixX<Scalar> range_jacobian() {
  MatrixX<Scalar> h(1, kStateDim);
  h << Scalar(0), Scalar(1);
  return h;
}

template <typename Scalar>
MatrixX<Scalar> default_process_noise() {
  return Eigen::Vector2<Scalar>(Scalar(0.01), Scalar(0.01)).asDiagonal();
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
  model.g_prime = [](const VectorX<Scalar>&, const VectorX<Scalar>&, Scalar dt) {
    return transition_jacobian<Scalar>(dt);
  };
  model.Q = std::move(q);
  return model;
}

template <typename Scalar = double>
MeasurementModel<Scalar> make_range_model(MatrixX<Scalar> r = default_range_noise<Scalar>()) {
  MeasurementModel<Scalar> model;
  model.meas_dim = 1;
  model.h = [](const VectorX<Scalar>& x) { return range<Scalar>(x); };
  model.h_prime = [](const VectorX<Scalar>&) { return range_jacobian<Scalar>(); };
  model.R = std::move(r);
  return model;
}

}  // namespace dronefusion::quad1d
