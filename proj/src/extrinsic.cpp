#include "sfr/extrinsic.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace sfr {

namespace {

constexpr double kClipNorm = std::numbers::pi - 1e-6;

void check_component(const LocalMoments& m, std::size_t k) {
  if (k >= m.components()) {
    throw InvalidArgument(fmt::format("component {} outside the {} moment components", k, m.components()));
  }
}

double checked_sigma(const LocalMoments& m, std::size_t k) {
  check_component(m, k);
  const auto i = static_cast<Eigen::Index>(k);
  if (!(m.sigma0sq[i] > ridge_floor(m, k))) {
    throw DegenerateWindow(
        fmt::format("component {}: local score spread {} is below the ridge floor", k, m.sigma0sq[i]), k);
  }
  return m.sigma0sq[i];
}

}  // namespace

void BandwidthSpec::validate() const {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidArgument(fmt::format("bandwidth must be positive and finite, got {}", value));
  }
}

double kernel_weight_H(double dist, const BandwidthSpec& bw) {
  if (!(dist >= 0.0)) throw InvalidArgument(fmt::format("kernel distance {} is negative", dist));
  return kernel_value(bw.kernel, dist, bw.value);
}

LocalMoments empirical_local_moments(const Eigen::MatrixXd& x_scores, const Eigen::MatrixXd& y_scores,
                                     const ScoreVector& x0, std::span<const double> dists,
                                     const BandwidthSpec& bw) {
  bw.validate();
  const Eigen::Index n = x_scores.rows();
  const Eigen::Index K = x_scores.cols();
  if (y_scores.rows() != n || y_scores.cols() != K || x0.values.size() != K ||
      static_cast<Eigen::Index>(dists.size()) != n) {
    throw InvalidArgument("empirical_local_moments: inconsistent input sizes");
  }
  if (n < 2) throw EmptyWindow(fmt::format("need at least 2 samples, got {}", n));

  Eigen::VectorXd kw(n);
  std::size_t in_window = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    kw[i] = kernel_weight_H(dists[static_cast<std::size_t>(i)], bw);
    if (kw[i] > 0.0) ++in_window;
  }
  if (in_window < 2) {
    throw EmptyWindow(fmt::format("{} sample(s) inside bandwidth {}; at least 2 required", in_window, bw.value));
  }

  // Sums run sequentially so that zero-weight samples add exact zeros.
  const double inv_n = 1.0 / static_cast<double>(n);
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) wsum += kw[i];
  LocalMoments m;
  m.n = static_cast<std::size_t>(n);
  m.in_window = in_window;
  m.mu0 = wsum * inv_n;
  for (Eigen::VectorXd* v : {&m.mu1, &m.mu2, &m.r0, &m.r1, &m.sigma0sq, &m.cross, &m.dbar, &m.ybar, &m.sdd, &m.sdy}) {
    v->resize(K);
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    double s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = kw[i];
      const double d = x_scores(i, k) - x0.values[k];
      const double y = y_scores(i, k);
      s1 += w * d;
      s2 += w * d * d;
      t0 += w * y;
      t1 += w * d * y;
    }
    m.mu1[k] = s1 * inv_n;
    m.mu2[k] = s2 * inv_n;
    m.r0[k] = t0 * inv_n;
    m.r1[k] = t1 * inv_n;
    const double dbar = s1 / wsum;
    const double ybar = t0 / wsum;
    double sdd = 0.0, sdy = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = kw[i];
      const double dc = x_scores(i, k) - x0.values[k] - dbar;
      sdd += w * dc * dc;
      sdy += w * dc * (y_scores(i, k) - ybar);
    }
    m.dbar[k] = dbar;
    m.ybar[k] = ybar;
    m.sdd[k] = sdd;
    m.sdy[k] = sdy;
    m.sigma0sq[k] = m.mu0 * sdd * inv_n;
    m.cross[k] = m.mu0 * sdy * inv_n;
  }
  return m;
}

double ridge_floor(const LocalMoments& m, std::size_t k) {
  check_component(m, k);
  return 1e-10 * m.mu2[static_cast<Eigen::Index>(k)] * m.mu0;
}

double slope_eigenvalue(const LocalMoments& m, std::size_t k) {
  checked_sigma(m, k);
  const auto i = static_cast<Eigen::Index>(k);
  return m.sdy[i] / m.sdd[i];
}

double predict_coefficient(const LocalMoments& m, std::size_t k) {
  const double slope = slope_eigenvalue(m, k);
  const auto i = static_cast<Eigen::Index>(k);
  // (mu2 r0 - mu1 r1) / sigma0sq, written as the weighted mean of Y minus the
  // slope times the weighted mean offset.
  return m.ybar[i] - slope * m.dbar[i];
}

Eigen::VectorXd projection_weights(const LocalMoments& m, const Eigen::MatrixXd& x_scores,
                                   const ScoreVector& x0, std::span<const double> dists,
                                   const BandwidthSpec& bw, std::size_t k) {
  const double s2 = checked_sigma(m, k);
  const auto c = static_cast<Eigen::Index>(k);
  const double dbar = m.mu1[c] / m.mu0;
  Eigen::VectorXd s(x_scores.rows());
  for (Eigen::Index i = 0; i < x_scores.rows(); ++i) {
    const double kw = kernel_weight_H(dists[static_cast<std::size_t>(i)], bw);
    const double delta = x_scores(i, c) - x0.values[c];
    s[i] = kw * (1.0 / m.mu0 + m.mu1[c] * (dbar - delta) / s2);
  }
  return s;
}

// ---------------------------------------------------------------------------

ExtrinsicModel::ExtrinsicModel(const BivariateCurveSample& sample, EigenSystem basis,
                               std::vector<std::size_t> component_set)
    : basis_(std::move(basis)), components_(std::move(component_set)) {
  sample.validate();
  if (components_.empty()) throw InvalidArgument("extrinsic predictor needs a nonempty component set");
  for (std::size_t k : components_) {
    if (k >= basis_.size()) {
      throw InvalidArgument(fmt::format("component {} outside the {}-component basis", k, basis_.size()));
    }
  }
  if (!(sample.grid == basis_.grid())) throw GridMismatch("extrinsic: sample and basis grids differ");

  const auto n = static_cast<Eigen::Index>(sample.size());
  const auto K = static_cast<Eigen::Index>(components_.size());
  x_scores_.resize(n, K);
  y_scores_.resize(n, K);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ScoreVector sx = project(sample.regressors[static_cast<std::size_t>(i)]);
    const ScoreVector sy = project(sample.responses[static_cast<std::size_t>(i)]);
    x_scores_.row(i) = sx.values.transpose();
    y_scores_.row(i) = sy.values.transpose();
  }
}

ScoreVector ExtrinsicModel::project(const ManifoldCurve& curve) const {
  const ScoreVector full = scores(log_map_curve(curve, basis_.base), basis_);
  ScoreVector out{Eigen::VectorXd(static_cast<Eigen::Index>(components_.size()))};
  for (std::size_t c = 0; c < components_.size(); ++c) {
    out.values[static_cast<Eigen::Index>(c)] = full.values[static_cast<Eigen::Index>(components_[c])];
  }
  return out;
}

std::vector<double> ExtrinsicModel::distances(const ScoreVector& x0) const {
  std::vector<double> d(static_cast<std::size_t>(x_scores_.rows()));
  for (Eigen::Index i = 0; i < x_scores_.rows(); ++i) {
    d[static_cast<std::size_t>(i)] = (x_scores_.row(i).transpose() - x0.values).norm();
  }
  return d;
}

ExtrinsicPrediction ExtrinsicModel::predict(const ManifoldCurve& x0, const BandwidthSpec& bw) const {
  const ScoreVector x0s = project(x0);
  const std::vector<double> d = distances(x0s);
  LocalMoments m;
  try {
    m = empirical_local_moments(x_scores_, y_scores_, x0s, d, bw);
  } catch (const EmptyWindow& e) {
    throw EmptyWindow(e.what(), components_.front());
  }

  const auto K = static_cast<Eigen::Index>(components_.size());
  ScoreVector coef{Eigen::VectorXd(K)};
  Eigen::VectorXd slopes(K);
  for (Eigen::Index c = 0; c < K; ++c) {
    try {
      slopes[c] = slope_eigenvalue(m, static_cast<std::size_t>(c));
      coef.values[c] = predict_coefficient(m, static_cast<std::size_t>(c));
    } catch (const DegenerateWindow& e) {
      const std::size_t comp = components_[static_cast<std::size_t>(c)];
      throw DegenerateWindow(fmt::format("basis component {}: {}", comp, e.what()), comp);
    }
  }

  const TangentCurve v = reconstruct(coef, basis_, components_);
  NodeVectors vecs = v.vecs();
  std::vector<bool> clipped(v.size(), false);
  bool any = false;
  for (Eigen::Index j = 0; j < vecs.rows(); ++j) {
    const double nrm = vecs.row(j).norm();
    if (nrm > kClipNorm) {
      vecs.row(j) *= kClipNorm / nrm;
      clipped[static_cast<std::size_t>(j)] = true;
      any = true;
    }
  }
  ManifoldCurve curve = exp_map_curve(TangentCurve(basis_.base, std::move(vecs)));
  return {std::move(curve), std::move(clipped), any, std::move(coef), std::move(slopes)};
}

ExtrinsicPrediction extrinsic_predict(const BivariateCurveSample& sample, const ManifoldCurve& x0,
                                      const EigenSystem& basis,
                                      std::span<const std::size_t> component_set,
                                      const BandwidthSpec& bw) {
  ExtrinsicModel model(sample, basis, {component_set.begin(), component_set.end()});
  return model.predict(x0, bw);
}

EigenSystem pooled_basis(const BivariateCurveSample& sample, std::size_t K, const SolverOptions& opts) {
  sample.validate();
  std::vector<ManifoldCurve> pooled = sample.regressors;
  pooled.insert(pooled.end(), sample.responses.begin(), sample.responses.end());
  const auto mu = std::make_shared<const ManifoldCurve>(frechet_curve_mean(pooled, opts));
  const CovarianceOperator cx = empirical_covariance(log_map_sample(sample.regressors, mu));
  const CovarianceOperator cy = empirical_covariance(log_map_sample(sample.responses, mu));
  return rfpca(CovarianceOperator::average(cx, cy), K);
}

double bandwidth_from_log_model(double n, double beta) {
  if (!(n > 1.0)) throw InvalidArgument(fmt::format("log bandwidth model needs n > 1, got {}", n));
  if (!(beta > 0.0)) throw InvalidArgument("log bandwidth model needs beta > 0");
  return std::pow(std::log(n), -1.0 / beta);
}

double bandwidth_from_power_model(double n, double beta) {
  if (!(n >= 1.0)) throw InvalidArgument(fmt::format("power bandwidth model needs n >= 1, got {}", n));
  if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("power bandwidth model needs beta in (0, 1)");
  return std::pow(n, -beta);
}

}  // namespace sfr
