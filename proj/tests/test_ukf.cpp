#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dronefusion/ekf.hpp"
#include "dronefusion/quad1d.hpp"
#include "dronefusion/quad2d.hpp"
#include "dronefusion/ukf.hpp"

using dronefusion::GaussianBeliefd;
using dronefusion::MatrixXd;
using dronefusion::SigmaPointSetd;
using dronefusion::UkfParamsd;
using dronefusion::VectorXd;
using dronefusion::compute_sigmas;
using dronefusion::ekf_predict;
using dronefusion::ekf_update;
using dronefusion::matrix_sqrt;
using dronefusion::ukf_predict;
using dronefusion::ukf_reconstruct;
using dronefusion::ukf_update;

namespace {

VectorXd vec1(double a) {
  VectorXd v(1);
  v << a;
  return v;
}

VectorXd vec2(double a, double b) {
  VectorXd v(2);
  v << a, b;
  return v;
}

// alpha = 1, beta = 0, kappa = 1: the unscented transform is exact for the
// generating Gaussian and every weight is moderate.
UkfParamsd plain_params() { return UkfParamsd{1.0, 0.0, 1.0}; }

MatrixXd random_spd(std::mt19937_64& rng, int n, double ridge = 0.1) {
  std::normal_distribution<double> gauss;
  MatrixXd a(n, n);
  for (int i = 0; i < n * n; ++i) a(i / n, i % n) = gauss(rng);
  return a * a.transpose() + ridge * MatrixXd::Identity(n, n);
}

dronefusion::ProcessModeld identity_process(int n) {
  dronefusion::ProcessModeld m;
  m.state_dim = n;
  m.control_dim = 0;
  m.g = [](const VectorXd& x, const VectorXd&, double) { return x; };
  m.g_prime = [n](const VectorXd&, const VectorXd&, double) { return MatrixXd::Identity(n, n); };
  m.Q = MatrixXd::Zero(n, n);
  return m;
}

}  // namespace

TEST_CASE("matrix_sqrt on identity and diagonal input") {
  CHECK((matrix_sqrt<double>(MatrixXd::Identity(3, 3)) - MatrixXd::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() == 0.0);

  MatrixXd d = MatrixXd::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const MatrixXd root = matrix_sqrt<double>(d);
  CHECK(root(0, 0) == doctest::Approx(2.0));
  CHECK(root(1, 1) == doctest::Approx(3.0));
  CHECK(root(0, 1) == 0.0);
  CHECK(root(1, 0) == 0.0);
}

TEST_CASE("matrix_sqrt reconstructs its input") {
  MatrixXd s(2, 2);
  s << 2.0, 1.0,
       1.0, 2.0;
  const MatrixXd l = matrix_sqrt<double>(s);
  CHECK((l * l.transpose() - s).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(l(0, 1) == 0.0);  // lower triangular

  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd spd = random_spd(rng, 5);
    const MatrixXd root = matrix_sqrt<double>(spd);
    CHECK((root * root.transpose() - spd).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("matrix_sqrt survives a semi-definite matrix but rejects indefinite ones") {
  MatrixXd rank1(2, 2);
  rank1 << 1.0, 1.0,
           1.0, 1.0;
  const MatrixXd l = matrix_sqrt<double>(rank1);
  CHECK((l * l.transpose() - rank1).cwiseAbs().maxCoeff() <= 1e-10);

  MatrixXd indef = MatrixXd::Identity(2, 2);
  indef(1, 1) = -1.0;
  CHECK_THROWS_AS(matrix_sqrt<double>(indef), dronefusion::ConditioningError);

  CHECK_THROWS_AS(matrix_sqrt<double>(MatrixXd::Zero(2, 3)), dronefusion::DimensionError);
}

TEST_CASE("sigma points and weights for the worked 2-state case") {
  // n=2, alpha=1, kappa=1: lambda = 1, gamma = sqrt(3).
  const auto set = compute_sigmas<double>(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                          plain_params());
  const double g = std::sqrt(3.0);
  REQUIRE(set.count() == 5);
  CHECK(set.points.col(0).cwiseAbs().maxCoeff() == 0.0);
  CHECK(set.points(0, 1) == doctest::Approx(g));
  CHECK(set.points(1, 1) == doctest::Approx(0.0));
  CHECK(set.points(1, 2) == doctest::Approx(g));
  CHECK(set.points(0, 3) == doctest::Approx(-g));
  CHECK(set.points(1, 4) == doctest::Approx(-g));

  CHECK(set.mean_weights[0] == doctest::Approx(1.0 / 3.0));
  for (int i = 1; i < 5; ++i) CHECK(set.mean_weights[i] == doctest::Approx(1.0 / 6.0));
  // beta = 0 here, so the center covariance weight equals the mean weight.
  CHECK(set.cov_weights[0] == doctest::Approx(1.0 / 3.0));

  // With beta = 2 the center covariance weight picks up (1 - alpha^2 + beta).
  UkfParamsd with_beta = plain_params();
  with_beta.beta = 2.0;
  const auto set2 = compute_sigmas<double>(VectorXd::Zero(2), MatrixXd::Identity(2, 2), with_beta);
  CHECK(set2.cov_weights[0] == doctest::Approx(7.0 / 3.0));
  for (int i = 1; i < 5; ++i) CHECK(set2.cov_weights[i] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("mean weights sum to one") {
  std::mt19937_64 rng(11);
  for (int n : {1, 2, 3, 7}) {
    const MatrixXd sigma = random_spd(rng, n);
    const VectorXd mu = VectorXd::Random(n);

    const auto plain = compute_sigmas<double>(mu, sigma, plain_params());
    CHECK(std::abs(plain.mean_weights.sum() - 1.0) <= 1e-12);

    // Default tuning has center weight ~ -1e6; the sum of such weights cannot
    // beat |w|_max * eps in floating point, so the bound scales with it.
    const auto sharp = compute_sigmas<double>(mu, sigma, UkfParamsd{});
    const double scale = sharp.mean_weights.cwiseAbs().maxCoeff();
    CHECK(std::abs(sharp.mean_weights.sum() - 1.0) <= 1e-12 * scale);
  }
}

TEST_CASE("unscented transform is exact on the generating Gaussian") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const MatrixXd sigma = random_spd(rng, n);
    const VectorXd mu = 10.0 * VectorXd::Random(n);

    for (const auto& params : {plain_params(), UkfParamsd{}}) {
      const auto set = compute_sigmas<double>(mu, sigma, params);
      const auto refit = ukf_reconstruct<double>(set, MatrixXd::Zero(n, n));
      CHECK((refit.mean - mu).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, mu.cwiseAbs().maxCoeff()));
      CHECK((refit.covariance - sigma).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("params are validated") {
  CHECK_THROWS_AS(compute_sigmas<double>(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                         UkfParamsd{0.0, 0.0, 0.0}),
                  dronefusion::DomainError);
  CHECK_THROWS_AS(compute_sigmas<double>(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                         UkfParamsd{2.0, 0.0, 0.0}),
                  dronefusion::DomainError);
  // kappa pushing N + lambda negative
  CHECK_THROWS_AS(compute_sigmas<double>(VectorXd::Zero(2), MatrixXd::Identity(2, 2),
                                         UkfParamsd{1.0, 0.0, -5.0}),
                  dronefusion::DomainError);
  CHECK_THROWS_AS(compute_sigmas<double>(VectorXd::Zero(3), MatrixXd::Identity(2, 2),
                                         plain_params()),
                  dronefusion::DimensionError);
}

TEST_CASE("identity transition returns the drawn set unchanged") {
  const auto model = identity_process(2);
  GaussianBeliefd b{vec2(1.0, -2.0), MatrixXd::Identity(2, 2)};
  const auto drawn = compute_sigmas<double>(b.mean, b.covariance, plain_params());
  const auto pushed = ukf_predict(b, model, VectorXd(0), 0.1, plain_params());
  CHECK((drawn.points - pushed.points).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear predict matches the closed form") {
  const auto model = dronefusion::quad1d::make_process_model<double>(MatrixXd::Zero(2, 2));
  GaussianBeliefd b{vec2(0.0, 10.0), MatrixXd::Identity(2, 2)};
  const auto set = ukf_predict(b, model, vec1(2.0), 0.1, plain_params());
  const auto refit = ukf_reconstruct<double>(set, MatrixXd::Zero(2, 2));

  CHECK(refit.mean[0] == doctest::Approx(0.2).epsilon(1e-10));
  CHECK(refit.mean[1] == doctest::Approx(10.0).epsilon(1e-10));

  MatrixXd a(2, 2);
  a << 1.0, 0.0,
       0.1, 1.0;
  const MatrixXd expected = a * b.covariance * a.transpose();
  CHECK((refit.covariance - expected).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("linear update equals the EKF posterior") {
  const auto pm = dronefusion::quad1d::make_process_model<double>(MatrixXd::Zero(2, 2));
  const auto mm = dronefusion::quad1d::make_range_model<double>(MatrixXd::Identity(1, 1));
  GaussianBeliefd b{vec2(0.0, 10.0), MatrixXd::Identity(2, 2)};

  const auto sigmas = ukf_predict(b, pm, vec1(2.0), 0.1, plain_params());
  const auto [upost, ureport] = ukf_update<double>(sigmas, mm, MatrixXd::Zero(2, 2), vec1(12.0));

  const auto prior = ekf_predict(b, pm, vec1(2.0), 0.1);
  const auto [epost, ereport] = ekf_update(prior, mm, vec1(12.0));

  CHECK((upost.mean - epost.mean).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK((upost.covariance - epost.covariance).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("zero innovation preserves the predicted mean") {
  const auto pm = dronefusion::quad1d::make_process_model<double>(MatrixXd::Zero(2, 2));
  const auto mm = dronefusion::quad1d::make_range_model<double>();
  GaussianBeliefd b{vec2(0.3, 7.0), MatrixXd::Identity(2, 2)};
  const auto sigmas = ukf_predict(b, pm, vec1(0.5), 0.1, plain_params());
  const auto prior = ukf_reconstruct<double>(sigmas, MatrixXd::Zero(2, 2));

  // The measurement mean of a linear h is computed by the same anchored sum
  // as the state mean, so feeding it back gives an exactly zero innovation.
  const auto [post, report] = ukf_update<double>(sigmas, mm, MatrixXd::Zero(2, 2),
                                                 vec1(prior.mean[1]));
  CHECK(report.innovation[0] == 0.0);
  CHECK((post.mean - prior.mean).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("an uninformative measurement leaves the prior alone") {
  const auto pm = dronefusion::quad1d::make_process_model<double>(MatrixXd::Zero(2, 2));
  const auto mm = dronefusion::quad1d::make_range_model<double>(MatrixXd::Constant(1, 1, 1e12));
  GaussianBeliefd b{vec2(0.0, 10.0), MatrixXd::Identity(2, 2)};
  const auto sigmas = ukf_predict(b, pm, vec1(0.0), 0.1, plain_params());
  const auto prior = ukf_reconstruct<double>(sigmas, MatrixXd::Zero(2, 2));
  const auto [post, report] = ukf_update<double>(sigmas, mm, MatrixXd::Zero(2, 2), vec1(12.0));
  CHECK((post.mean - prior.mean).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("Q enters the posterior covariance but not the gain") {
  const auto pm = dronefusion::quad1d::make_process_model<double>();
  const auto mm = dronefusion::quad1d::make_range_model<double>();
  GaussianBeliefd b{vec2(0.1, 5.0), MatrixXd::Identity(2, 2)};
  const auto sigmas = ukf_predict(b, pm, vec1(1.0), 0.1, plain_params());

  const MatrixXd q = 0.2 * MatrixXd::Identity(2, 2);
  const auto [with_q, rq] = ukf_update<double>(sigmas, mm, q, vec1(5.3));
  const auto [no_q, r0] = ukf_update<double>(sigmas, mm, MatrixXd::Zero(2, 2), vec1(5.3));

  CHECK((rq.gain - r0.gain).cwiseAbs().maxCoeff() == 0.0);
  CHECK((with_q.mean - no_q.mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((with_q.covariance - no_q.covariance - q).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("full UKF cycle equals the EKF on the linear model without process noise") {
  // With Q = 0 the sigma spread is the whole predicted covariance and the
  // unscented update reduces algebraically to the Kalman update.
  const double dt = 0.1;
  const auto pm = dronefusion::quad1d::make_process_model<double>(MatrixXd::Zero(2, 2));
  const auto mm = dronefusion::quad1d::make_range_model<double>();

  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;

  for (const auto& params : {plain_params(), UkfParamsd{}}) {
    for (int seed = 0; seed < 100; ++seed) {
      GaussianBeliefd ekf_b{vec2(gauss(rng), gauss(rng)), random_spd(rng, 2, 0.5)};
      GaussianBeliefd ukf_b = ekf_b;

      for (int step = 0; step < 50; ++step) {
        const VectorXd u = vec1(gauss(rng));
        const VectorXd z = vec1(ekf_b.mean[1] + gauss(rng));

        const auto prior = ekf_predict(ekf_b, pm, u, dt);
        ekf_b = ekf_update(prior, mm, z).first;

        const auto sigmas = ukf_predict(ukf_b, pm, u, dt, params);
        ukf_b = ukf_update<double>(sigmas, mm, pm.Q, z).first;

        CHECK((ekf_b.mean - ukf_b.mean).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK((ekf_b.covariance - ukf_b.covariance).cwiseAbs().maxCoeff() <= 1e-8);
      }
    }
  }
}

TEST_CASE("posterior covariance stays PSD through a long noisy run") {
  const double dt = 0.1;
  const auto pm = dronefusion::quad1d::make_process_model<double>();
  const auto mm = dronefusion::quad1d::make_range_model<double>();
  std::mt19937_64 rng(77);
  std::normal_distribution<double> gauss;

  GaussianBeliefd b{vec2(0.0, 1.0), MatrixXd::Identity(2, 2)};
  for (int step = 0; step < 1000; ++step) {
    const auto sigmas = ukf_predict(b, pm, vec1(gauss(rng)), dt, UkfParamsd{});
    b = ukf_update<double>(sigmas, mm, pm.Q, vec1(1.0 + gauss(rng))).first;

    CHECK((b.covariance - b.covariance.transpose()).cwiseAbs().maxCoeff() == 0.0);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(b.covariance, Eigen::EigenvaluesOnly);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-9 * b.covariance.trace());
  }
}

TEST_CASE("the measurement loop must include sigma point zero") {
  // On a nonlinear h the center point carries weight: summing only the
  // 2N side points gives a different measurement mean.
  const auto mm = dronefusion::quad2d::make_range_model<double>();
  VectorXd mu(3);
  mu << 0.4, 0.0, 2.0;
  const auto set = compute_sigmas<double>(mu, 0.25 * MatrixXd::Identity(3, 3), plain_params());

  MatrixXd meas(1, set.count());
  for (Eigen::Index i = 0; i < set.count(); ++i) meas.col(i) = mm.h(set.points.col(i));

  double all_points = meas(0, 0);
  double side_only = 0.0;
  for (Eigen::Index i = 1; i < set.count(); ++i) {
    all_points += set.mean_weights[i] * (meas(0, i) - meas(0, 0));
    side_only += set.mean_weights[i] * meas(0, i);
  }
  CHECK(std::abs(all_points - side_only) > 1e-6);
}
