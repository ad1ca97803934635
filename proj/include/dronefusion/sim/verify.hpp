#pragma once

#include <string>
#include <vector>

namespace dronefusion::sim {

struct VerifyCheck {
  std::string name;
  bool passed{false};
  std::string detail;  // worst error, envelope fraction, ... for the report
};

struct VerifyResult {
  std::string suite;
  std::vector<VerifyCheck> checks;
  bool passed() const;
};

/// Every model Jacobian against central differences at random states.
VerifyResult verify_jacobians(std::uint64_t seed);

/// EKF and UKF agree on the linear 1D model to 1e-8 over long runs, for
/// both the untuned (alpha=1, beta=0, kappa=1) and default sigma-point
/// parameters. Runs with zero process noise, where the two algorithms are
/// algebraically identical.
VerifyResult verify_linear_equivalence(std::uint64_t seed);

/// Full 3D scenario NEES stays inside the central 95% chi-square envelope
/// for both filters across seeds.
VerifyResult verify_consistency(std::uint64_t seed);

/// All suites, in the order above. `which` filters by suite name;
/// empty string means run everything.
std::vector<VerifyResult> run_verify(const std::string& which, std::uint64_t seed);

}  // namespace dronefusion::sim
