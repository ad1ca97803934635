#pragma once

#include <Eigen/Dense>

#include <utility>

#include "dronefusion/belief.hpp"
#include "dronefusion/errors.hpp"
#include "dronefusion/models.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion {

/// Gain, innovation, and innovation covariance of one update step.
template <typename Scalar>
struct KalmanGainReport {
  MatrixX<Scalar> gain;             // N x M
  VectorX<Scalar> innovation;       // M
  MatrixX<Scalar> innovation_cov;   // M x M, symmetric positive definite
};

using KalmanGainReportd = KalmanGainReport<double>;

struct EkfOptions {
  /// Covariance update via the Joseph form instead of (I - KH) * Sigma.
  bool joseph_update = false;
};

/// Innovation covariances with a larger condition number are rejected.
inline constexpr double kMaxInnovationCondition = 1e12;

namespace detail {

template <typename Scalar>
void check_spd_conditioning(const MatrixX<Scalar>& s, const char* what) {
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(s, Eigen::EigenvaluesOnly);
  const Scalar lo = eig.eigenvalues().minCoeff();
  const Scalar hi = eig.eigenvalues().maxCoeff();
  if (!(lo > Scalar(0)) || hi / lo > Scalar(kMaxInnovationCondition)) {
    throw NumericError(std::string(what) + ": singular or ill-conditioned matrix");
  }
}

}  // namespace detail

/// Predict step: mean through g, covariance as G Sigma G^T + Q with G
/// evaluated at the prior mean.
template <typename Scalar>
GaussianBelief<Scalar> ekf_predict(const GaussianBelief<Scalar>& belief,
                                   const ProcessModel<Scalar>& model,
                                   const VectorX<Scalar>& u, Scalar dt) {
  if (belief.dim() != model.state_dim || u.size() != model.control_dim) {
    throw DimensionError("ekf_predict: state or control length does not match model");
  }
  if (!(dt > Scalar(0))) {
    throw DomainError("ekf_predict: dt must be positive");
  }
  GaussianBelief<Scalar> out;
  out.mean = model.g(belief.mean, u, dt);
  const MatrixX<Scalar> G = model.g_prime(belief.mean, u, dt);
  if (out.mean.size() != model.state_dim || G.rows() != model.state_dim ||
      G.cols() != model.state_dim) {
    throw DimensionError("ekf_predict: model returned wrong shape");
  }
  out.covariance = G * belief.covariance * G.transpose() + model.Q;
  out.covariance = ((out.covariance + out.covariance.transpose()) / Scalar(2)).eval();
  if (!all_finite(out.mean) || !all_finite(out.covariance)) {
    throw NumericError("ekf_predict: non-finite prediction");
  }
  return out;
}

/// Update step of the E(KF): gain from a linear solve against the innovation
/// covariance, angular residual components wrapped by the model.
template <typename Scalar>
std::pair<GaussianBelief<Scalar>, KalmanGainReport<Scalar>> ekf_update(
    const GaussianBelief<Scalar>& belief, const MeasurementModel<Scalar>& model,
    const VectorX<Scalar>& z, const EkfOptions& options = {}) {
  if (z.size() != model.meas_dim) {
    throw DimensionError("ekf_update: measurement length does not match model");
  }
  if (!all_finite(z)) {
    throw DomainError("ekf_update: non-finite measurement");
  }
  const Eigen::Index n = belief.dim();
  const MatrixX<Scalar> H = model.h_prime(belief.mean);
  if (H.rows() != model.meas_dim || H.cols() != n) {
    throw DimensionError("ekf_update: Jacobian shape does not match model");
  }

  KalmanGainReport<Scalar> report;
  report.innovation_cov = H * belief.covariance * H.transpose() + model.R;
  report.innovation_cov =
      ((report.innovation_cov + report.innovation_cov.transpose()) / Scalar(2)).eval();
  detail::check_spd_conditioning<Scalar>(report.innovation_cov, "ekf_update innovation covariance");

  // K = Sigma H^T S^{-1}, computed as a solve rather than an explicit inverse.
  report.gain =
      report.innovation_cov.ldlt().solve(H * belief.covariance).transpose();
  report.innovation = wrap_residual<Scalar>(z - model.h(belief.mean), model);

  GaussianBelief<Scalar> out;
  out.mean = belief.mean + report.gain * report.innovation;
  const MatrixX<Scalar> ikh =
      MatrixX<Scalar>::Identity(n, n) - report.gain * H;
  if (options.joseph_update) {
    out.covariance = ikh * belief.covariance * ikh.transpose() +
                     report.gain * model.R * report.gain.transpose();
  } else {
    out.covariance = ikh * belief.covariance;
  }
  out.covariance = ((out.covariance + out.covariance.transpose()) / Scalar(2)).eval();
  if (!all_finite(out.mean) || !all_finite(out.covariance)) {
    throw NumericError("ekf_update: non-finite posterior");
  }
  return {std::move(out), std::move(report)};
}

}  // namespace dronefusion
