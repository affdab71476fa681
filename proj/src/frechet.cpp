#include "sfr/frechet.hpp"

#include "sfr/errors.hpp"
#include "sfr/icosphere.hpp"
#include "sfr/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace sfr {

namespace {

constexpr double kGradientCertificate = 1e-8;
constexpr double kHemisphereMargin = 1e-6;
constexpr int kMaxHalvings = 60;

// Nonzero-weight part of a WeightedPointSet in raw coordinates.
struct Problem {
  std::vector<Vec3> y;
  std::vector<double> w;
  double abs_sum = 0.0;
  double sum = 0.0;
  bool any_negative = false;
};

struct Objective {
  double value;
  double magnitude;  // sum |w_i| d_i^2, the rounding scale of value
};

// Abramowitz & Stegun 4.4.45.
inline double screening_acos(double c) {
  const double x = std::min(std::abs(c), 1.0);
  const double p =
      ((((((-0.0012624911 * x + 0.0066700901) * x - 0.0170881256) * x + 0.0308918810) * x - 0.0501743046) * x +
        0.0889789874) * x - 0.2145988016) * x + 1.5707963050;
  const double r = std::sqrt(1.0 - x) * p;
  return c < 0.0 ? std::numbers::pi - r : r;
}

inline double dist(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), std::clamp(a.dot(b), -1.0, 1.0));
}

Objective evaluate(const Problem& pr, const Vec3& omega) {
  double f = 0.0;
  double mag = 0.0;
  for (std::size_t i = 0; i < pr.y.size(); ++i) {
    const double d = dist(pr.y[i], omega);
    f += pr.w[i] * d * d;
    mag += std::abs(pr.w[i]) * d * d;
  }
  return {f, mag};
}

// sum_i w_i log_omega(y_i); points at the cut locus have no defined direction
// and contribute nothing.
Vec3 weighted_log_sum(const Problem& pr, const Vec3& omega) {
  Vec3 g = Vec3::Zero();
  for (std::size_t i = 0; i < pr.y.size(); ++i) {
    const double d = dist(omega, pr.y[i]);
    if (d == 0.0 || d >= std::numbers::pi - kAntipodalMargin) continue;
    Vec3 u = pr.y[i] - omega.dot(pr.y[i]) * omega;
    const double un = u.norm();
    if (un == 0.0) continue;
    g += pr.w[i] * (d / un) * u;
  }
  g -= omega.dot(g) * omega;
  return g;
}

Vec3 exp_at(const Vec3& p, const Vec3& v) {
  const double t = v.norm();
  if (t == 0.0) return p;
  return (std::cos(t) * p + (std::sin(t) / t) * v).normalized();
}

struct Descent {
  Vec3 omega;
  double objective;
  double gradient_norm;
  int iterations;
};

Descent descend(const Problem& pr, const Vec3& start, int max_iters, double step_tol) {
  // The step is normalized by the total mass when it is positive, which makes
  // alpha = 1 the Karcher fixed-point step; the backtracking guards signed cases.
  const double scale = pr.sum > 0.0 ? pr.sum : pr.abs_sum;
  Vec3 omega = start;
  Objective f = evaluate(pr, omega);
  int it = 0;
  for (; it < max_iters; ++it) {
    const Vec3 g = weighted_log_sum(pr, omega) / scale;
    const double gn = g.norm();
    if (gn < step_tol) break;

    double alpha = 1.0;
    bool accepted = false;
    Vec3 cand;
    Objective fc{};
    for (int h = 0; h < kMaxHalvings; ++h, alpha *= 0.5) {
      cand = exp_at(omega, alpha * g);
      fc = evaluate(pr, cand);
      const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (f.magnitude + fc.magnitude);
      if (fc.value <= f.value + slack) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    omega = cand;
    f = fc;
    if (alpha * gn < step_tol) {
      ++it;
      break;
    }
  }
  const double grad = weighted_log_sum(pr, omega).norm() / pr.abs_sum;
  return {omega, f.value, grad, it};
}

Descent descend_with_retries(const Problem& pr, const Vec3& start, const SolverOptions& opts) {
  Descent d = descend(pr, start, opts.max_iters, opts.step_tol);
  for (int r = 0; r < opts.retries && d.gradient_norm > kGradientCertificate; ++r) {
    Descent next = descend(pr, d.omega, opts.max_iters, opts.step_tol);
    next.iterations += d.iterations;
    d = next;
  }
  return d;
}

// True when some direction v has v.y_i > kHemisphereMargin for every point,
// i.e. the origin is outside the convex hull of the points. Gilbert's
// min-norm iteration; an undecided run counts as not fitting.
bool fits_open_hemisphere(const Problem& pr) {
  Vec3 v = Vec3::Zero();
  for (const Vec3& y : pr.y) v += y;
  v /= static_cast<double>(pr.y.size());
  for (int it = 0; it < 1000; ++it) {
    const double vn = v.norm();
    if (vn < 1e-12) return false;
    std::size_t arg = 0;
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pr.y.size(); ++i) {
      const double d = v.dot(pr.y[i]);
      if (d < lo) {
        lo = d;
        arg = i;
      }
    }
    if (lo > kHemisphereMargin * vn) return true;
    const Vec3 step = pr.y[arg] - v;
    const double ss = step.squaredNorm();
    if (ss == 0.0) return false;
    const double t = std::clamp(-v.dot(step) / ss, 0.0, 1.0);
    if (t == 0.0) return false;
    v += t * step;
  }
  return false;
}

Vec3 initial_point(const Problem& pr) {
  Vec3 m = Vec3::Zero();
  for (std::size_t i = 0; i < pr.y.size(); ++i) m += pr.w[i] * pr.y[i];
  if (m.norm() > 1e-12 * pr.abs_sum) return m.normalized();
  std::size_t best = 0;
  for (std::size_t i = 1; i < pr.w.size(); ++i) {
    if (std::abs(pr.w[i]) > std::abs(pr.w[best])) best = i;
  }
  return pr.y[best];
}

}  // namespace

void WeightedPointSet::validate() const {
  if (points.empty()) throw InvalidArgument("weighted point set is empty");
  if (points.size() != weights.size()) {
    throw InvalidArgument(fmt::format("{} points but {} weights", points.size(), weights.size()));
  }
  double abs_sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw InvalidArgument("non-finite weight");
    abs_sum += std::abs(w);
  }
  if (abs_sum < 1e-14) throw DegenerateWeights(fmt::format("sum of |weights| is {}", abs_sum));
}

void SolverOptions::validate() const {
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (!(step_tol > 0.0)) throw InvalidArgument("step_tol must be > 0");
  if (retries < 0) throw InvalidArgument("retries must be >= 0");
  if (grid_level < 0) throw InvalidArgument("grid_level must be >= 0");
}

double frechet_objective(const WeightedPointSet& set, const SpherePoint& omega) {
  double f = 0.0;
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const double d = geodesic_distance(set.points[i], omega);
    f += set.weights[i] * d * d;
  }
  return f;
}

FrechetResult weighted_frechet_mean_detailed(const WeightedPointSet& set,
                                             const SolverOptions& opts) {
  set.validate();
  opts.validate();

  Problem pr;
  for (std::size_t i = 0; i < set.points.size(); ++i) {
    const double w = set.weights[i];
    if (w == 0.0) continue;
    pr.y.push_back(set.points[i].coords());
    pr.w.push_back(w);
    pr.abs_sum += std::abs(w);
    pr.sum += w;
    pr.any_negative = pr.any_negative || w < 0.0;
  }

  if (pr.y.size() == 1 && pr.w[0] > 0.0) {
    return {SpherePoint::from_coords(pr.y[0]), 0.0, 0.0, 0, false, false};
  }

  const bool needs_grid = pr.any_negative || !fits_open_hemisphere(pr);

  Descent best = descend_with_retries(pr, initial_point(pr), opts);
  bool used_grid = false;
  bool grid_certified = false;

  if (needs_grid) {
    used_grid = true;
    // Candidate set: icosphere vertices followed by the observed points.
    // Ties within 1e-12 keep the lowest candidate index.
    const Icosphere& ico = icosphere(opts.grid_level);
    // Screening pass with a polynomial arccos (absolute error below 3e-8);
    // the winner is re-evaluated exactly below.
    const std::size_t m = pr.y.size();
    Vec3 seed = ico.vertices[0];
    double seed_f = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ico.vertices.size(); ++k) {
      const Vec3& v = ico.vertices[k];
      double f = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double a = screening_acos(v.dot(pr.y[i]));
        f += pr.w[i] * a * a;
      }
      if (f < seed_f - 1e-12) {
        seed_f = f;
        seed = v;
      }
    }
    seed_f = evaluate(pr, seed).value;
    for (const Vec3& y : pr.y) {
      const double f = evaluate(pr, y).value;
      if (f < seed_f - 1e-12) {
        seed_f = f;
        seed = y;
      }
    }

    const Descent refined = descend_with_retries(pr, seed, opts);
    if (refined.objective < best.objective) best = refined;
    grid_certified = best.objective <= seed_f + 1e-12 * (1.0 + std::abs(seed_f));
  }

  const bool gradient_ok = best.gradient_norm <= kGradientCertificate;
  if (!gradient_ok && !grid_certified) {
    throw NonConvergence(fmt::format(
        "weighted Fréchet mean did not converge: gradient norm {} after {} iterations",
        best.gradient_norm, best.iterations));
  }
  return {SpherePoint::from_coords(best.omega), best.objective, best.gradient_norm,
          best.iterations, used_grid, !gradient_ok && grid_certified};
}

ManifoldCurve frechet_curve_mean(std::span<const ManifoldCurve> curves, const SolverOptions& opts) {
  if (curves.empty()) throw EmptySample("frechet_curve_mean: no curves");
  const TimeGrid& grid = curves.front().grid();
  for (std::size_t c = 1; c < curves.size(); ++c) {
    if (!(curves[c].grid() == grid)) {
      throw GridMismatch(fmt::format("frechet_curve_mean: curve {} has a different grid", c));
    }
  }

  std::vector<std::optional<SpherePoint>> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t j) {
    WeightedPointSet set;
    set.points.reserve(curves.size());
    for (const auto& c : curves) set.points.push_back(c[j]);
    set.weights.assign(curves.size(), 1.0);
    try {
      out[j] = weighted_frechet_mean(set, opts);
    } catch (const NonConvergence& e) {
      throw NonConvergence(fmt::format("node {}: {}", j, e.what()));
    } catch (const DegenerateWeights& e) {
      throw DegenerateWeights(fmt::format("node {}: {}", j, e.what()));
    }
  });

  std::vector<SpherePoint> points;
  points.reserve(out.size());
  for (auto& p : out) points.push_back(*p);
  return ManifoldCurve(grid, std::move(points));
}

}  // namespace sfr
