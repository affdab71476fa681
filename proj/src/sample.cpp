#include "sfr/sample.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

namespace sfr {

void BivariateCurveSample::validate() const {
  if (regressors.size() != responses.size() || regressors.size() != sample_times.size()) {
    throw InvalidArgument(fmt::format("sample has {} regressors, {} responses, {} times",
                                      regressors.size(), responses.size(), sample_times.size()));
  }
  for (std::size_t i = 0; i < regressors.size(); ++i) {
    if (!(regressors[i].grid() == grid) || !(responses[i].grid() == grid)) {
      throw GridMismatch(fmt::format("sample pair {} is not on the shared grid", i));
    }
  }
}

BivariateCurveSample BivariateCurveSample::subset(std::span<const std::size_t> indices) const {
  BivariateCurveSample out{grid, {}, {}, {}};
  out.regressors.reserve(indices.size());
  out.responses.reserve(indices.size());
  out.sample_times.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= size()) throw InvalidArgument(fmt::format("subset index {} out of range", i));
    out.regressors.push_back(regressors[i]);
    out.responses.push_back(responses[i]);
    out.sample_times.push_back(sample_times[i]);
  }
  return out;
}

}  // namespace sfr
