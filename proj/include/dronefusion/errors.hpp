#pragma once

#include <stdexcept>
#include <string>

namespace dronefusion {

/// Base class for all errors raised by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invalid argument values (empty sequence, parameter out of range, non-finite input).
struct DomainError : Error {
  using Error::Error;
};

/// Vector/matrix shapes do not match the model's declared dimensions.
struct DimensionError : Error {
  using Error::Error;
};

/// A matrix fails a definiteness or symmetry requirement beyond tolerance.
struct ConditioningError : Error {
  using Error::Error;
};

/// A computation produced non-finite values or an unusably ill-conditioned system.
struct NumericError : Error {
  using Error::Error;
};

/// A measurement model was evaluated at a geometric singularity.
struct SingularityError : Error {
  using Error::Error;
};

/// Euler-angle extraction attempted inside the gimbal-lock region.
struct GimbalLockError : Error {
  using Error::Error;
};

/// Scenario or CLI configuration failed validation.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace dronefusion
