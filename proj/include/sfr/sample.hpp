#pragma once

#include "sfr/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace sfr {

/// n (regressor, response) curve pairs on one shared grid, with the sample
/// time index s of each pair.
struct BivariateCurveSample {
  TimeGrid grid;
  std::vector<ManifoldCurve> regressors;
  std::vector<ManifoldCurve> responses;
  std::vector<std::int64_t> sample_times;

  std::size_t size() const noexcept { return regressors.size(); }

  /// Throws GridMismatch / InvalidArgument when lengths or grids disagree.
  void validate() const;

  /// Pairs at the given positions, in the given order.
  BivariateCurveSample subset(std::span<const std::size_t> indices) const;
};

}  // namespace sfr
