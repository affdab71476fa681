#pragma once

#include "sfr/frechet.hpp"
#include "sfr/kernel.hpp"
#include "sfr/sample.hpp"

#include <span>
#include <string_view>
#include <vector>

namespace sfr {

/// Kernel on geodesic distance with support radius `bandwidth` (radians).
/// A concentration index h maps to bandwidth 1/h.
struct GeodesicKernel {
  double bandwidth = 0.5;
  KernelFamily family = KernelFamily::Epanechnikov;

  void validate() const;
};

/// (3 / (4 bw)) (1 - (d / bw)^2) for d < bw, else 0.
double geodesic_kernel(double d, const GeodesicKernel& k);

/// Weighted Fréchet mean of Y_t under weights K(d(X_i, x_t)). Throws EmptyWindow.
SpherePoint nw_predict_node(std::span<const SpherePoint> x_t, std::span<const SpherePoint> y_t,
                            const SpherePoint& target, const GeodesicKernel& k,
                            const SolverOptions& opts = {});

struct LocalLinearWeights {
  /// Signed weight per sample; (1/n) sum s_i == 1.
  std::vector<double> s;
  /// s_i / n from sums that skip the 1/n factors; these are the solver weights,
  /// so samples outside the support leave the prediction bit-for-bit unchanged.
  std::vector<double> s_over_n;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double sigma0sq = 0.0;
};

/// mu_j = (1/n) sum K_i d_i^j, sigma0sq = mu0 mu2 - mu1^2,
/// s_i = K_i (mu2 - mu1 d_i) / sigma0sq, with d_i = d(X_i, x_t) unsigned.
/// Throws EmptyWindow when no sample is in the support and DegenerateWindow
/// when sigma0sq <= 1e-14 (1 + mu0 mu2).
LocalLinearWeights ll_weights_node(std::span<const SpherePoint> x_t, const SpherePoint& target,
                                   const GeodesicKernel& k);

/// Weighted Fréchet mean of Y_t under the signed local linear weights (s_over_n).
SpherePoint ll_predict_node(std::span<const SpherePoint> x_t, std::span<const SpherePoint> y_t,
                            const SpherePoint& target, const GeodesicKernel& k,
                            const SolverOptions& opts = {});

enum class IntrinsicKind { NW, LL };
std::string_view to_string(IntrinsicKind k);

enum class NodeStatus { Ok, Interpolated };
std::string_view to_string(NodeStatus s);

struct CurvePrediction {
  ManifoldCurve curve;
  std::vector<NodeStatus> status;
  std::size_t interpolated = 0;
};

/// Node-wise prediction at x0. Nodes whose window is empty or degenerate (or
/// whose solver fails) are filled by geodesic interpolation between the
/// nearest successful nodes and flagged. Throws AllNodesFailed.
CurvePrediction predict_curve(IntrinsicKind kind, const BivariateCurveSample& sample,
                              const ManifoldCurve& x0, const GeodesicKernel& k,
                              const SolverOptions& opts = {});

}  // namespace sfr
