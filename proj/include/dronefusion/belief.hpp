#pragma once

#include <Eigen/Dense>

#include "dronefusion/errors.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion {

/// Gaussian state belief: mean and covariance.
template <typename Scalar>
struct GaussianBelief {
  VectorX<Scalar> mean;
  MatrixX<Scalar> covariance;

  Eigen::Index dim() const { return mean.size(); }
};

using GaussianBeliefd = GaussianBelief<double>;

/// Eigenvalues below -psd_tolerance_scale * trace(Sigma) count as indefinite.
inline constexpr double kPsdToleranceScale = 1e-9;

/// Symmetrizes the covariance as (S + S^T)/2 and rejects beliefs whose
/// covariance has an eigenvalue below the PSD tolerance. Symmetrization is a
/// fixed point: applying it to an already symmetric matrix is bit-exact.
template <typename Scalar>
GaussianBelief<Scalar> validate_belief(GaussianBelief<Scalar> b) {
  if (b.covariance.rows() != b.covariance.cols() || b.covariance.rows() != b.mean.size()) {
    throw DimensionError("validate_belief: covariance shape does not match mean length");
  }
  if (!all_finite(b.mean) || !all_finite(b.covariance)) {
    throw NumericError("validate_belief: non-finite belief entries");
  }
  b.covariance = ((b.covariance + b.covariance.transpose()) / Scalar(2)).eval();

  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(b.covariance, Eigen::EigenvaluesOnly);
  const Scalar tol = Scalar(kPsdToleranceScale) * b.covariance.trace();
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw ConditioningError("validate_belief: covariance is not positive semi-definite");
  }
  return b;
}

}  // namespace dronefusion
