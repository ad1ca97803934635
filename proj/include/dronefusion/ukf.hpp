#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <utility>

#include "dronefusion/belief.hpp"
#include "dronefusion/ekf.hpp"
#include "dronefusion/errors.hpp"
#include "dronefusion/models.hpp"
#include "dronefusion/types.hpp"

namespace dronefusion {

/// Unscented-transform tuning. lambda and gamma derive from the state
/// dimension: lambda = alpha^2 (N + kappa) - N, gamma = sqrt(N + lambda).
template <typename Scalar>
struct UkfParams {
  Scalar alpha{Scalar(1e-3)};
  Scalar beta{Scalar(2)};
  Scalar kappa{Scalar(0)};

  /// N + lambda, computed as alpha^2 (N + kappa) directly. For small alpha
  /// the N + lambda form cancels N against itself and loses ~6 digits.
  Scalar scaled_dim(Eigen::Index n) const { return alpha * alpha * (Scalar(n) + kappa); }

  Scalar lambda(Eigen::Index n) const { return scaled_dim(n) - Scalar(n); }
  Scalar gamma(Eigen::Index n) const { return std::sqrt(scaled_dim(n)); }

  void validate(Eigen::Index n) const {
    if (!(alpha > Scalar(0) && alpha <= Scalar(1))) {
      throw DomainError("UkfParams: alpha must lie in (0, 1]");
    }
    if (!(scaled_dim(n) > Scalar(0))) {
      throw DomainError("UkfParams: N + lambda must be positive");
    }
  }
};

using UkfParamsd = UkfParams<double>;

/// 2N+1 sigma points (columns) with their mean and covariance weights.
/// Column 0 is the generating mean.
template <typename Scalar>
struct SigmaPointSet {
  MatrixX<Scalar> points;           // N x (2N+1)
  VectorX<Scalar> mean_weights;     // 2N+1, sums to 1
  VectorX<Scalar> cov_weights;      // 2N+1

  Eigen::Index state_dim() const { return points.rows(); }
  Eigen::Index count() const { return points.cols(); }
};

using SigmaPointSetd = SigmaPointSet<double>;

/// Lower-triangular L with L L^T = S (Cholesky). Indefinite input is rejected;
/// a semi-definite matrix gets a trace-relative diagonal shift and one retry.
template <typename Scalar>
MatrixX<Scalar> matrix_sqrt(const MatrixX<Scalar>& s) {
  if (s.rows() != s.cols()) {
    throw DimensionError("matrix_sqrt: matrix must be square");
  }
  if (!all_finite(s)) {
    throw NumericError("matrix_sqrt: non-finite entries");
  }
  const MatrixX<Scalar> sym = (s + s.transpose()) / Scalar(2);
  Eigen::LLT<MatrixX<Scalar>> llt(sym);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(sym, Eigen::EigenvaluesOnly);
  const Scalar tol = Scalar(kPsdToleranceScale) * sym.trace();
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw ConditioningError("matrix_sqrt: matrix is indefinite");
  }
  const Scalar shift = Scalar(1e-12) * sym.trace() + Scalar(1e-300);
  llt.compute(sym + shift * MatrixX<Scalar>::Identity(sym.rows(), sym.cols()));
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("matrix_sqrt: Cholesky failed on semi-definite matrix");
  }
  return llt.matrixL();
}

namespace detail {

/// Weighted mean anchored at point 0. Algebraically identical to the direct
/// weighted sum because the mean weights sum to 1, but immune to the
/// cancellation the near-unit center weight causes for small alpha.
template <typename Scalar>
VectorX<Scalar> sigma_weighted_mean(const MatrixX<Scalar>& points,
                                    const VectorX<Scalar>& weights) {
  VectorX<Scalar> mean = points.col(0);
  VectorX<Scalar> shift = VectorX<Scalar>::Zero(points.rows());
  for (Eigen::Index i = 1; i < points.cols(); ++i) {
    shift += weights[i] * (points.col(i) - points.col(0));
  }
  return mean + shift;
}

template <typename Scalar>
MatrixX<Scalar> sigma_weighted_cov(const MatrixX<Scalar>& a, const VectorX<Scalar>& mean_a,
                                   const MatrixX<Scalar>& b, const VectorX<Scalar>& mean_b,
                                   const VectorX<Scalar>& weights) {
  MatrixX<Scalar> cov = MatrixX<Scalar>::Zero(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    cov += weights[i] * (a.col(i) - mean_a) * (b.col(i) - mean_b).transpose();
  }
  return cov;
}

}  // namespace detail

/// Sigma points X_0 = mu, X_i = mu + gamma S_i, X_{N+i} = mu - gamma S_i,
/// with S the Cholesky factor of Sigma, plus the mean/covariance weights.
template <typename Scalar>
SigmaPointSet<Scalar> compute_sigmas(const VectorX<Scalar>& mu, const MatrixX<Scalar>& sigma,
                                     const UkfParams<Scalar>& params) {
  const Eigen::Index n = mu.size();
  params.validate(n);
  if (sigma.rows() != n || sigma.cols() != n) {
    throw DimensionError("compute_sigmas: covariance shape does not match mean");
  }
  const MatrixX<Scalar> root = matrix_sqrt<Scalar>(sigma);
  const Scalar scaled = params.scaled_dim(n);  // N + lambda
  const Scalar gamma = params.gamma(n);

  SigmaPointSet<Scalar> set;
  set.points.resize(n, 2 * n + 1);
  set.points.col(0) = mu;
  for (Eigen::Index i = 0; i < n; ++i) {
    set.points.col(1 + i) = mu + gamma * root.col(i);
    set.points.col(1 + n + i) = mu - gamma * root.col(i);
  }

  const Scalar side_weight = Scalar(1) / (Scalar(2) * scaled);
  set.mean_weights = VectorX<Scalar>::Constant(2 * n + 1, side_weight);
  set.cov_weights = VectorX<Scalar>::Constant(2 * n + 1, side_weight);
  set.mean_weights[0] = params.lambda(n) / scaled;
  set.cov_weights[0] =
      params.lambda(n) / scaled + (Scalar(1) - params.alpha * params.alpha + params.beta);
  return set;
}

/// Predict: draw sigma points from the belief and push each through g.
/// The weights carry over; Q is applied later, inside the update.
template <typename Scalar>
SigmaPointSet<Scalar> ukf_predict(const GaussianBelief<Scalar>& belief,
                                  const ProcessModel<Scalar>& model, const VectorX<Scalar>& u,
                                  Scalar dt, const UkfParams<Scalar>& params) {
  if (belief.dim() != model.state_dim || u.size() != model.control_dim) {
    throw DimensionError("ukf_predict: state or control length does not match model");
  }
  if (!(dt > Scalar(0))) {
    throw DomainError("ukf_predict: dt must be positive");
  }
  SigmaPointSet<Scalar> set = compute_sigmas<Scalar>(belief.mean, belief.covariance, params);
  for (Eigen::Index i = 0; i < set.count(); ++i) {
    set.points.col(i) = model.g(set.points.col(i), u, dt);
  }
  if (!all_finite(set.points)) {
    throw NumericError("ukf_predict: non-finite transformed sigma points");
  }
  return set;
}

/// Refit a Gaussian to a transformed sigma set: weighted mean and spread
/// plus the process noise Q. This is the measurement-free tail of the update.
template <typename Scalar>
GaussianBelief<Scalar> ukf_reconstruct(const SigmaPointSet<Scalar>& sigmas,
                                       const MatrixX<Scalar>& Q) {
  GaussianBelief<Scalar> out;
  out.mean = detail::sigma_weighted_mean<Scalar>(sigmas.points, sigmas.mean_weights);
  out.covariance = detail::sigma_weighted_cov<Scalar>(sigmas.points, out.mean, sigmas.points,
                                                      out.mean, sigmas.cov_weights) +
                   Q;
  out.covariance = ((out.covariance + out.covariance.transpose()) / Scalar(2)).eval();
  if (!all_finite(out.mean) || !all_finite(out.covariance)) {
    throw NumericError("ukf_reconstruct: non-finite belief");
  }
  return out;
}

/// Update: refit (mu_bar, Sigma_bar + Q), map every sigma point through h,
/// then the cross-covariance gain K = Sigma^{xz} (Sigma^z)^{-1} and
/// Sigma = Sigma_bar - K Sigma^z K^T.
template <typename Scalar>
std::pair<GaussianBelief<Scalar>, KalmanGainReport<Scalar>> ukf_update(
    const SigmaPointSet<Scalar>& sigmas, const MeasurementModel<Scalar>& model,
    const MatrixX<Scalar>& Q, const VectorX<Scalar>& z) {
  if (z.size() != model.meas_dim) {
    throw DimensionError("ukf_update: measurement length does not match model");
  }
  if (!all_finite(z)) {
    throw DomainError("ukf_update: non-finite measurement");
  }
  const GaussianBelief<Scalar> prior = ukf_reconstruct<Scalar>(sigmas, Q);

  MatrixX<Scalar> meas_points(model.meas_dim, sigmas.count());
  for (Eigen::Index i = 0; i < sigmas.count(); ++i) {
    meas_points.col(i) = model.h(sigmas.points.col(i));
  }
  const VectorX<Scalar> meas_mean =
      detail::sigma_weighted_mean<Scalar>(meas_points, sigmas.mean_weights);

  KalmanGainReport<Scalar> report;
  report.innovation_cov = detail::sigma_weighted_cov<Scalar>(meas_points, meas_mean, meas_points,
                                                             meas_mean, sigmas.cov_weights) +
                          model.R;
  report.innovation_cov =
      ((report.innovation_cov + report.innovation_cov.transpose()) / Scalar(2)).eval();
  detail::check_spd_conditioning<Scalar>(report.innovation_cov, "ukf_update innovation covariance");

  const MatrixX<Scalar> cross = detail::sigma_weighted_cov<Scalar>(
      sigmas.points, prior.mean, meas_points, meas_mean, sigmas.cov_weights);
  report.gain = report.innovation_cov.ldlt().solve(cross.transpose()).transpose();
  report.innovation = wrap_residual<Scalar>(z - meas_mean, model);

  GaussianBelief<Scalar> out;
  out.mean = prior.mean + report.gain * report.innovation;
  out.covariance = prior.covariance -
                   report.gain * report.innovation_cov * report.gain.transpose();
  out.covariance = ((out.covariance + out.covariance.transpose()) / Scalar(2)).eval();
  if (!all_finite(out.mean) || !all_finite(out.covariance)) {
    throw NumericError("ukf_update: non-finite posterior");
  }
  return {std::move(out), std::move(report)};
}

}  // namespace dronefusion
