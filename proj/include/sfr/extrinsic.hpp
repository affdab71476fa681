#pragma once

#include "sfr/frechet.hpp"
#include "sfr/kernel.hpp"
#include "sfr/sample.hpp"
#include "sfr/tangent_space.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace sfr {

/// Bandwidth B_n for kernels on H-distances.
struct BandwidthSpec {
  double value = 1.0;
  KernelFamily kernel = KernelFamily::Epanechnikov;

  void validate() const;
};

/// K_{B_n}(dist). dist must be >= 0.
double kernel_weight_H(double dist, const BandwidthSpec& bw);

/// Kernel-weighted empirical moments of the score differences
/// delta_ik = X_scores(i, k) - x0[k], per component k:
///   mu0    = (1/n) sum K_i
///   mu1[k] = (1/n) sum K_i delta_ik,   mu2[k] = (1/n) sum K_i delta_ik^2
///   r0[k]  = (1/n) sum K_i Y_ik,       r1[k]  = (1/n) sum K_i delta_ik Y_ik
///   sigma0sq[k] = mu2[k] mu0 - mu1[k]^2
struct LocalMoments {
  double mu0 = 0.0;
  Eigen::VectorXd mu1, mu2, r0, r1, sigma0sq;
  /// mu0 r1[k] - r0[k] mu1[k], accumulated in centered form.
  Eigen::VectorXd cross;
  /// Kernel-weighted means of delta and Y, and the centered sums
  /// sum K_i (delta_i - dbar)^2 and sum K_i (delta_i - dbar)(Y_i - ybar).
  /// These carry no 1/n factor, so samples outside the window do not affect them.
  Eigen::VectorXd dbar, ybar, sdd, sdy;
  std::size_t in_window = 0;
  std::size_t n = 0;

  std::size_t components() const { return static_cast<std::size_t>(mu1.size()); }
};

/// Throws EmptyWindow when fewer than two samples carry positive weight.
/// sigma0sq and cross are computed from centered sums, which agree with the
/// raw-moment formulas to rounding but do not cancel catastrophically.
LocalMoments empirical_local_moments(const Eigen::MatrixXd& x_scores, const Eigen::MatrixXd& y_scores,
                                     const ScoreVector& x0, std::span<const double> dists,
                                     const BandwidthSpec& bw);

/// Below this, sigma0sq[k] is treated as no spread: 1e-10 * mu2[k] mu0. Relative, so
/// small windows in large samples (all moments carry 1/n) are not rejected.
double ridge_floor(const LocalMoments& m, std::size_t k);

/// (mu0 r1 - r0 mu1) / sigma0sq. Throws DegenerateWindow.
double slope_eigenvalue(const LocalMoments& m, std::size_t k);

/// (mu2 r0 - mu1 r1) / sigma0sq. Throws DegenerateWindow.
double predict_coefficient(const LocalMoments& m, std::size_t k);

/// Per-sample effective weights S^(k)_i = K_i (mu2 - mu1 delta_ik) / sigma0sq,
/// whose mean is 1. The coefficient equals (1/n) sum S_i Y_ik.
Eigen::VectorXd projection_weights(const LocalMoments& m, const Eigen::MatrixXd& x_scores,
                                   const ScoreVector& x0, std::span<const double> dists,
                                   const BandwidthSpec& bw, std::size_t k);

struct ExtrinsicPrediction {
  ManifoldCurve curve;
  /// Node-wise: tangent norm was clipped to pi - 1e-6 before the exp map.
  std::vector<bool> clipped;
  bool any_clipped = false;
  /// Predicted coefficient per entry of the component set.
  ScoreVector coefficients;
  /// Estimated slope eigenvalue per entry of the component set.
  Eigen::VectorXd slopes;
};

/// Training sample log-mapped at the basis' base curve and projected on the
/// retained components. Predicts for any number of x0 / bandwidth pairs.
class ExtrinsicModel {
 public:
  /// component_set holds 0-based indices into `basis`.
  ExtrinsicModel(const BivariateCurveSample& sample, EigenSystem basis,
                 std::vector<std::size_t> component_set);

  /// Throws EmptyWindow / DegenerateWindow carrying the offending component index.
  ExtrinsicPrediction predict(const ManifoldCurve& x0, const BandwidthSpec& bw) const;

  /// Retained-component scores of a regressor-like curve.
  ScoreVector project(const ManifoldCurve& curve) const;

  const EigenSystem& basis() const noexcept { return basis_; }
  const std::vector<std::size_t>& components() const noexcept { return components_; }
  const Eigen::MatrixXd& x_scores() const noexcept { return x_scores_; }
  const Eigen::MatrixXd& y_scores() const noexcept { return y_scores_; }

  /// ||X_i - x0||_H over the retained components (Parseval).
  std::vector<double> distances(const ScoreVector& x0) const;

 private:
  EigenSystem basis_;
  std::vector<std::size_t> components_;
  Eigen::MatrixXd x_scores_;  // n x |components|
  Eigen::MatrixXd y_scores_;
};

/// Top-K eigenbasis of the equal-weight average of the regressor and response
/// covariances, both log-mapped at the Fréchet mean curve of all 2n curves.
EigenSystem pooled_basis(const BivariateCurveSample& sample, std::size_t K, const SolverOptions& opts = {});

/// One-shot form of ExtrinsicModel::predict.
ExtrinsicPrediction extrinsic_predict(const BivariateCurveSample& sample, const ManifoldCurve& x0,
                                      const EigenSystem& basis,
                                      std::span<const std::size_t> component_set,
                                      const BandwidthSpec& bw);

/// (ln n)^(-1/beta), natural log. n >= 2 (real n is accepted).
double bandwidth_from_log_model(double n, double beta);
/// n^(-beta), beta in (0, 1), n >= 1.
double bandwidth_from_power_model(double n, double beta);

}  // namespace sfr
