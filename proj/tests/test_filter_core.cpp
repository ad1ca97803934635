#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dronefusion/belief.hpp"
#include "dronefusion/models.hpp"
#include "dronefusion/types.hpp"

using dronefusion::GaussianBeliefd;
using dronefusion::MatrixXd;
using dronefusion::MeasurementModeld;
using dronefusion::VectorXd;
using dronefusion::validate_belief;
using dronefusion::wrap_angle;
using dronefusion::wrap_residual;

namespace {

constexpr double kPi = std::numbers::pi;

MeasurementModeld yaw_like_model() {
  MeasurementModeld m;
  m.meas_dim = 1;
  m.h = [](const VectorXd& x) { return x; };
  m.h_prime = [](const VectorXd&) { return MatrixXd::Identity(1, 1); };
  m.R = MatrixXd::Identity(1, 1);
  m.residual_wrap = {true};
  return m;
}

}  // namespace

TEST_CASE("wrap_angle maps onto (-pi, pi]") {
  CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
  CHECK(wrap_angle(2 * kPi + 0.3) == doctest::Approx(0.3));
  CHECK(wrap_angle(-2 * kPi - 0.3) == doctest::Approx(-0.3));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  // -pi is excluded from the range: it maps to +pi.
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = angle(rng);
    const double w = wrap_angle(a);
    CHECK(w > -kPi);
    CHECK(w <= kPi);
    // Same angle modulo 2 pi.
    CHECK(std::remainder(a - w, 2 * kPi) == doctest::Approx(0.0).epsilon(1e-9));
  }
}

TEST_CASE("validate_belief leaves an identity covariance untouched") {
  GaussianBeliefd b{VectorXd::Zero(2), MatrixXd::Identity(2, 2)};
  const auto out = validate_belief(b);
  CHECK(out.covariance == MatrixXd::Identity(2, 2));
  CHECK(out.mean == b.mean);
}

TEST_CASE("validate_belief symmetrizes small asymmetry") {
  MatrixXd sigma(2, 2);
  sigma << 1.0, 1e-12,
           0.0, 1.0;
  const auto out = validate_belief(GaussianBeliefd{VectorXd::Zero(2), sigma});
  CHECK(out.covariance(0, 1) == doctest::Approx(5e-13));
  CHECK(out.covariance(0, 1) == out.covariance(1, 0));
}

TEST_CASE("validate_belief is idempotent bit for bit") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd a(4, 4);
    for (int i = 0; i < 16; ++i) a(i / 4, i % 4) = gauss(rng);
    MatrixXd sigma = a * a.transpose();  // PSD by construction
    sigma(0, 1) += 1e-13;               // small asymmetry to exercise the fix-up
    VectorXd mu = VectorXd::Zero(4);

    const auto once = validate_belief(GaussianBeliefd{mu, sigma});
    const auto twice = validate_belief(once);
    CHECK((once.covariance.array() == twice.covariance.array()).all());
  }
}

TEST_CASE("validate_belief rejects indefinite covariance") {
  MatrixXd sigma(2, 2);
  sigma << 1.0, 0.0,
           0.0, -1.0;
  CHECK_THROWS_AS(validate_belief(GaussianBeliefd{VectorXd::Zero(2), sigma}),
                  dronefusion::ConditioningError);
}

TEST_CASE("validate_belief rejects malformed beliefs") {
  CHECK_THROWS_AS(validate_belief(GaussianBeliefd{VectorXd::Zero(3), MatrixXd::Identity(2, 2)}),
                  dronefusion::DimensionError);

  MatrixXd sigma = MatrixXd::Identity(2, 2);
  sigma(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(validate_belief(GaussianBeliefd{VectorXd::Zero(2), sigma}),
                  dronefusion::NumericError);
}

TEST_CASE("wrap_residual touches only angular components") {
  const auto model = yaw_like_model();

  VectorXd in_range(1);
  in_range << 0.1;
  CHECK(wrap_residual(in_range, model)[0] == doctest::Approx(0.1));

  VectorXd out_of_range(1);
  out_of_range << 2 * kPi + 0.3;
  CHECK(wrap_residual(out_of_range, model)[0] == doctest::Approx(0.3));

  // No flags at all: pure passthrough, even far outside (-pi, pi].
  MeasurementModeld linear = yaw_like_model();
  linear.residual_wrap.clear();
  VectorXd large(1);
  large << 5.0;
  CHECK(wrap_residual(large, linear)[0] == 5.0);
}

TEST_CASE("wrap_residual handles mixed angular and linear components") {
  MeasurementModeld m;
  m.meas_dim = 2;
  m.residual_wrap = {false, true};
  VectorXd r(2);
  r << 10.0, 7.0;
  const VectorXd out = wrap_residual(r, m);
  CHECK(out[0] == 10.0);
  CHECK(out[1] == doctest::Approx(7.0 - 2 * kPi));
  CHECK(out[1] > -kPi);
  CHECK(out[1] <= kPi);
}

TEST_CASE("wrap_residual validates its inputs") {
  auto model = yaw_like_model();
  VectorXd bad(1);
  bad << std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(wrap_residual(bad, model), dronefusion::DomainError);

  model.residual_wrap = {true, false};  // two flags, one component
  VectorXd r(1);
  r << 0.5;
  CHECK_THROWS_AS(wrap_residual(r, model), dronefusion::DimensionError);
}
