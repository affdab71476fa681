#include "sfr/intrinsic.hpp"

#include "sfr/errors.hpp"
#include "sfr/parallel.hpp"

#include <fmt/format.h>

#include <cmath>
#include <optional>

namespace sfr {

namespace {

void check_sizes(std::span<const SpherePoint> x_t, std::span<const SpherePoint> y_t) {
  if (x_t.size() != y_t.size()) {
    throw InvalidArgument(fmt::format("{} regressor points but {} response points", x_t.size(), y_t.size()));
  }
  if (x_t.empty()) throw EmptyWindow("no samples");
}

}  // namespace

void GeodesicKernel::validate() const {
  if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument(fmt::format("geodesic kernel bandwidth must be positive, got {}", bandwidth));
  }
}

double geodesic_kernel(double d, const GeodesicKernel& k) {
  if (!(d >= 0.0)) throw InvalidArgument(fmt::format("geodesic distance {} is negative", d));
  return kernel_value(k.family, d, k.bandwidth);
}

SpherePoint nw_predict_node(std::span<const SpherePoint> x_t, std::span<const SpherePoint> y_t,
                            const SpherePoint& target, const GeodesicKernel& k,
                            const SolverOptions& opts) {
  k.validate();
  check_sizes(x_t, y_t);
  WeightedPointSet set;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    const double w = geodesic_kernel(geodesic_distance(x_t[i], target), k);
    if (w > 0.0) {
      set.points.push_back(y_t[i]);
      set.weights.push_back(w);
    }
  }
  if (set.points.empty()) throw EmptyWindow(fmt::format("no sample within bandwidth {}", k.bandwidth));
  return weighted_frechet_mean(set, opts);
}

LocalLinearWeights ll_weights_node(std::span<const SpherePoint> x_t, const SpherePoint& target,
                                   const GeodesicKernel& k) {
  k.validate();
  if (x_t.empty()) throw EmptyWindow("no samples");
  const std::size_t n = x_t.size();
  std::vector<double> kw(n);
  std::vector<double> d(n);
  double wsum = 0.0;
  double wd = 0.0;
  double wdd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = geodesic_distance(x_t[i], target);
    kw[i] = geodesic_kernel(d[i], k);
    wsum += kw[i];
    wd += kw[i] * d[i];
    wdd += kw[i] * d[i] * d[i];
  }
  if (!(wsum > 0.0)) throw EmptyWindow(fmt::format("no sample within bandwidth {}", k.bandwidth));

  const double inv_n = 1.0 / static_cast<double>(n);
  LocalLinearWeights out;
  out.mu0 = wsum * inv_n;
  out.mu1 = wd * inv_n;
  out.mu2 = wdd * inv_n;
  double dbar = wd / wsum;
  // Second pass so that sum K_i (d_i - dbar) vanishes to rounding.
  double resid = 0.0;
  for (std::size_t i = 0; i < n; ++i) resid += kw[i] * (d[i] - dbar);
  dbar += resid / wsum;
  double centered = 0.0;
  for (std::size_t i = 0; i < n; ++i) centered += kw[i] * (d[i] - dbar) * (d[i] - dbar);
  out.sigma0sq = out.mu0 * centered * inv_n;
  if (!(out.sigma0sq > 1e-14 * (1.0 + out.mu0 * out.mu2))) {
    throw DegenerateWindow(fmt::format("distance spread {} too small for a local linear fit", out.sigma0sq));
  }
  // mu2 - mu1 d_i == sigma0sq / mu0 + mu1 (dbar - d_i)
  out.s.resize(n);
  out.s_over_n.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.s[i] = kw[i] * (1.0 / out.mu0 + out.mu1 * (dbar - d[i]) / out.sigma0sq);
    out.s_over_n[i] = kw[i] * (1.0 / wsum + dbar * (dbar - d[i]) / centered);
  }
  return out;
}

SpherePoint ll_predict_node(std::span<const SpherePoint> x_t, std::span<const SpherePoint> y_t,
                            const SpherePoint& target, const GeodesicKernel& k,
                            const SolverOptions& opts) {
  check_sizes(x_t, y_t);
  const LocalLinearWeights w = ll_weights_node(x_t, target, k);
  WeightedPointSet set;
  for (std::size_t i = 0; i < x_t.size(); ++i) {
    if (w.s_over_n[i] != 0.0) {
      set.points.push_back(y_t[i]);
      set.weights.push_back(w.s_over_n[i]);
    }
  }
  return weighted_frechet_mean(set, opts);
}

std::string_view to_string(IntrinsicKind k) { return k == IntrinsicKind::NW ? "NW" : "LL"; }

std::string_view to_string(NodeStatus s) { return s == NodeStatus::Ok ? "ok" : "interpolated"; }

CurvePrediction predict_curve(IntrinsicKind kind, const BivariateCurveSample& sample,
                              const ManifoldCurve& x0, const GeodesicKernel& k,
                              const SolverOptions& opts) {
  sample.validate();
  k.validate();
  if (!(x0.grid() == sample.grid)) throw GridMismatch("predict_curve: x0 is not on the sample grid");
  const std::size_t N = sample.grid.size();
  const std::size_t n = sample.size();

  std::vector<std::optional<SpherePoint>> node(N);
  parallel_for(N, [&](std::size_t j) {
    std::vector<SpherePoint> xs;
    std::vector<SpherePoint> ys;
    xs.reserve(n);
    ys.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(sample.regressors[i][j]);
      ys.push_back(sample.responses[i][j]);
    }
    try {
      node[j] = kind == IntrinsicKind::NW ? nw_predict_node(xs, ys, x0[j], k, opts)
                                          : ll_predict_node(xs, ys, x0[j], k, opts);
    } catch (const EmptyWindow&) {
    } catch (const DegenerateWindow&) {
    } catch (const NonConvergence&) {
    } catch (const DegenerateWeights&) {
    }
  });

  std::vector<std::size_t> ok;
  for (std::size_t j = 0; j < N; ++j) {
    if (node[j]) ok.push_back(j);
  }
  if (ok.empty()) {
    throw AllNodesFailed(fmt::format("{} prediction failed at all {} nodes (bandwidth {})",
                                     to_string(kind), N, k.bandwidth));
  }

  CurvePrediction out{ManifoldCurve::constant(sample.grid, *node[ok.front()]), {}, 0};
  std::vector<SpherePoint> pts;
  pts.reserve(N);
  out.status.assign(N, NodeStatus::Ok);
  std::size_t next = 0;  // index into ok of the first success at or after j
  for (std::size_t j = 0; j < N; ++j) {
    while (next < ok.size() && ok[next] < j) ++next;
    if (node[j]) {
      pts.push_back(*node[j]);
      continue;
    }
    out.status[j] = NodeStatus::Interpolated;
    ++out.interpolated;
    const bool has_prev = next > 0;
    const bool has_next = next < ok.size();
    if (has_prev && has_next) {
      const std::size_t a = ok[next - 1];
      const std::size_t b = ok[next];
      const double tau = (sample.grid[j] - sample.grid[a]) / (sample.grid[b] - sample.grid[a]);
      try {
        pts.push_back(geodesic_interpolate(*node[a], *node[b], tau));
      } catch (const AntipodalPoints&) {
        pts.push_back(tau < 0.5 ? *node[a] : *node[b]);
      }
    } else {
      pts.push_back(has_prev ? *node[ok[next - 1]] : *node[ok[next]]);
    }
  }
  out.curve = ManifoldCurve(sample.grid, std::move(pts));
  return out;
}

}  // namespace sfr
