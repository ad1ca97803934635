#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>

namespace dronefusion {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXd = VectorX<double>;
using MatrixXd = MatrixX<double>;

/// Maps an angle into (-pi, pi].
template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  constexpr Scalar two_pi = Scalar(2) * pi;
  a = std::fmod(a, two_pi);
  if (a <= -pi) {
    a += two_pi;
  } else if (a > pi) {
    a -= two_pi;
  }
  return a;
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

}  // namespace dronefusion
