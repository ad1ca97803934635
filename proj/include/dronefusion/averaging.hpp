#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "dronefusion/errors.hpp"

namespace dronefusion::averaging {

/// Running arithmetic mean: the estimate plus how many samples produced it.
/// The count is kept as an integer so the recursive update reweights exactly.
template <typename Scalar>
struct RunningMeanState {
  Scalar estimate{0};
  std::int64_t count{0};
};

using RunningMeanStated = RunningMeanState<double>;

template <typename Scalar>
Scalar batch_mean(std::span<const Scalar> measurements) {
  if (measurements.empty()) {
    throw DomainError("batch_mean: empty measurement sequence");
  }
  Scalar sum{0};
  for (Scalar z : measurements) {
    if (!std::isfinite(z)) {
      throw DomainError("batch_mean: non-finite measurement");
    }
    sum += z;
  }
  return sum / static_cast<Scalar>(measurements.size());
}

/// Absorbs one sample: estimate' = (estimate * count + z) / (count + 1).
template <typename Scalar>
RunningMeanState<Scalar> recursive_mean(const RunningMeanState<Scalar>& state, Scalar z) {
  if (state.count < 0) {
    throw DomainError("recursive_mean: negative sample count");
  }
  if (!std::isfinite(z)) {
    throw DomainError("recursive_mean: non-finite measurement");
  }
  RunningMeanState<Scalar> next;
  next.count = state.count + 1;
  next.estimate =
      (state.estimate * static_cast<Scalar>(state.count) + z) / static_cast<Scalar>(next.count);
  return next;
}

/// Exponentially weighted average: alpha on the old estimate, (1 - alpha) on the measurement.
template <typename Scalar>
Scalar exponential_average(Scalar prev, Scalar z, Scalar alpha) {
  if (!(alpha >= Scalar(0) && alpha <= Scalar(1))) {
    throw DomainError("exponential_average: alpha must lie in [0, 1]");
  }
  if (!std::isfinite(prev) || !std::isfinite(z)) {
    throw DomainError("exponential_average: non-finite input");
  }
  return alpha * prev + (Scalar(1) - alpha) * z;
}

}  // namespace dronefusion::averaging
