#pragma once

#include <functional>
#include <vector>

#include "dronefusion/errors.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion {

/// State transition g, its Jacobian g', and the process noise Q for one vehicle.
/// Instances are immutable after construction and shareable across threads.
template <typename Scalar>
struct ProcessModel {
  using TransitionFn =
      std::function<VectorX<Scalar>(const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt)>;
  using JacobianFn =
      std::function<MatrixX<Scalar>(const VectorX<Scalar>& x, const VectorX<Scalar>& u, Scalar dt)>;

  Eigen::Index state_dim{0};
  Eigen::Index control_dim{0};
  TransitionFn g;
  JacobianFn g_prime;
  MatrixX<Scalar> Q;
};

/// Measurement function h, its Jacobian h', the noise R, and per-component
/// angle flags for residual wrapping.
template <typename Scalar>
struct MeasurementModel {
  using MeasurementFn = std::function<VectorX<Scalar>(const VectorX<Scalar>& x)>;
  using JacobianFn = std::function<MatrixX<Scalar>(const VectorX<Scalar>& x)>;

  Eigen::Index meas_dim{0};
  MeasurementFn h;
  JacobianFn h_prime;
  MatrixX<Scalar> R;
  std::vector<bool> residual_wrap;  // empty means no angular components
};

using ProcessModeld = ProcessModel<double>;
using MeasurementModeld = MeasurementModel<double>;

/// Maps the components flagged angular in the model into (-pi, pi].
/// Wrapping lives on the measurement model because only the model knows
/// which residual components are angles.
template <typename Scalar>
VectorX<Scalar> wrap_residual(VectorX<Scalar> r, const MeasurementModel<Scalar>& model) {
  if (!all_finite(r)) {
    throw DomainError("wrap_residual: non-finite residual");
  }
  if (model.residual_wrap.empty()) {
    return r;
  }
  if (static_cast<Eigen::Index>(model.residual_wrap.size()) != r.size()) {
    throw DimensionError("wrap_residual: flag count does not match residual length");
  }
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    if (model.residual_wrap[static_cast<std::size_t>(i)]) {
      r[i] = wrap_angle(r[i]);
    }
  }
  return r;
}

}  // namespace dronefusion
