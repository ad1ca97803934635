#pragma once

#include <cmath>
#include <cstdlib>

#include "dronefusion/errors.hpp"

namespace dronefusion::sim {

/// Regularized lower incomplete gamma P(a, x): series expansion below the
/// diagonal x < a+1, Lentz continued fraction above it.
inline double gamma_p(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0)) {
    throw DomainError("gamma_p: requires a > 0 and x >= 0");
  }
  if (x == 0.0) {
    return 0.0;
  }
  const double log_prefactor = -x + a * std::log(x) - std::lgamma(a);

  if (x < a + 1.0) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
      term *= x / (a + n);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum * std::exp(log_prefactor);
  }

  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-17) break;
  }
  return 1.0 - std::exp(log_prefactor) * h;
}

/// CDF of the chi-square distribution with k degrees of freedom.
inline double chi2_cdf(double x, double k) {
  if (!(k > 0.0)) {
    throw DomainError("chi2_cdf: degrees of freedom must be positive");
  }
  if (x <= 0.0) return 0.0;
  return gamma_p(k / 2.0, x / 2.0);
}

/// Quantile (inverse CDF) of the chi-square distribution, by bisection on
/// the monotone CDF. Accurate to ~1e-12 relative.
inline double chi2_quantile(double p, double k) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("chi2_quantile: probability must lie in (0, 1)");
  }
  if (!(k > 0.0)) {
    throw DomainError("chi2_quantile: degrees of freedom must be positive");
  }
  double lo = 0.0;
  double hi = k > 1.0 ? 2.0 * k : 2.0;
  while (chi2_cdf(hi, k) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) break;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (chi2_cdf(mid, k) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-13 * hi) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace dronefusion::sim
