#pragma once

#include "sfr/geometry.hpp"

#include <span>
#include <vector>

namespace sfr {

/// Points with real weights, possibly negative.
struct WeightedPointSet {
  std::vector<SpherePoint> points;
  std::vector<double> weights;

  /// Throws InvalidArgument on size mismatch or empty input, DegenerateWeights
  /// when sum |w_i| < 1e-14.
  void validate() const;
};

struct SolverOptions {
  int max_iters = 100;
  double step_tol = 1e-10;  // radians
  int grid_level = 4;
  int retries = 2;

  void validate() const;
};

struct FrechetResult {
  SpherePoint point;
  double objective = 0.0;
  /// |sum_i w_i log_omega(y_i)| / sum_i |w_i| at the returned point.
  double gradient_norm = 0.0;
  int iterations = 0;
  bool grid_search = false;
  /// Accepted on the grid certificate rather than the gradient certificate.
  bool grid_certified = false;
};

/// F(omega) = sum_i w_i d^2(y_i, omega).
double frechet_objective(const WeightedPointSet& set, const SpherePoint& omega);

/// Minimizer of frechet_objective. Riemannian gradient descent with backtracking
/// from the projected Euclidean mean; when a weight is negative, or positive
/// points do not fit in an open hemisphere, a second descent is seeded from the
/// best vertex of an icosphere grid and the lower of the two is returned.
/// Throws DegenerateWeights, NonConvergence.
FrechetResult weighted_frechet_mean_detailed(const WeightedPointSet& set,
                                             const SolverOptions& opts = {});

inline SpherePoint weighted_frechet_mean(const WeightedPointSet& set,
                                         const SolverOptions& opts = {}) {
  return weighted_frechet_mean_detailed(set, opts).point;
}

/// Node-wise unweighted Fréchet mean of curves on a shared grid. Solver errors
/// are rethrown with the failing node index in the message.
ManifoldCurve frechet_curve_mean(std::span<const ManifoldCurve> curves,
                                 const SolverOptions& opts = {});

}  // namespace sfr
