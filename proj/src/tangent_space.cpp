#include "sfr/tangent_space.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sfr {

namespace {

void require_same_base(const ManifoldCurve& a, const ManifoldCurve& b, const char* what) {
  if (!same_base(a, b)) throw GridMismatch(fmt::format("{}: curves do not share grid and base", what));
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> phi) {
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    if (std::abs(phi[i]) > 1e-8) {
      if (phi[i] < 0.0) phi = -phi;
      return;
    }
  }
}

NodeVectors project_nodes(const ManifoldCurve& base, const FlatCurve& flat) {
  const auto n = static_cast<Eigen::Index>(base.size());
  NodeVectors out(n, 3);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Vec3& p = base[static_cast<std::size_t>(j)].coords();
    Vec3 w = flat.segment<3>(3 * j);
    w -= p.dot(w) * p;
    w -= p.dot(w) * p;
    out.row(j) = w.transpose();
  }
  return out;
}

}  // namespace

TangentCurve::TangentCurve(std::shared_ptr<const ManifoldCurve> base, NodeVectors vecs)
    : base_(std::move(base)), vecs_(std::move(vecs)) {
  if (!base_) throw InvalidArgument("tangent curve needs a base curve");
  if (static_cast<std::size_t>(vecs_.rows()) != base_->size()) {
    throw GridMismatch(fmt::format("tangent curve has {} nodes, base has {}", vecs_.rows(),
                                   base_->size()));
  }
  for (Eigen::Index j = 0; j < vecs_.rows(); ++j) {
    const Vec3 v = vecs_.row(j).transpose();
    const double radial = (*base_)[static_cast<std::size_t>(j)].coords().dot(v);
    if (!v.allFinite() || std::abs(radial) > 1e-8 * std::max(1.0, v.norm())) {
      throw InvalidTangent(fmt::format("node {}: vector not tangent to base (radial {})", j, radial));
    }
  }
}

TangentCurve TangentCurve::zero(std::shared_ptr<const ManifoldCurve> base) {
  const auto n = static_cast<Eigen::Index>(base->size());
  return TangentCurve(std::move(base), NodeVectors::Zero(n, 3));
}

bool same_base(const ManifoldCurve& a, const ManifoldCurve& b) { return &a == &b || a == b; }

TangentCurve log_map_curve(const ManifoldCurve& curve, std::shared_ptr<const ManifoldCurve> mu) {
  if (!(curve.grid() == mu->grid())) throw GridMismatch("log_map_curve: grid differs from base");
  NodeVectors v(static_cast<Eigen::Index>(curve.size()), 3);
  for (std::size_t j = 0; j < curve.size(); ++j) {
    try {
      v.row(static_cast<Eigen::Index>(j)) = log_map((*mu)[j], curve[j]).vec().transpose();
    } catch (const AntipodalPoints& e) {
      throw AntipodalPoints(fmt::format("node {}: {}", j, e.what()), std::nullopt, j);
    }
  }
  return TangentCurve(std::move(mu), std::move(v));
}

std::vector<TangentCurve> log_map_sample(std::span<const ManifoldCurve> curves,
                                         std::shared_ptr<const ManifoldCurve> mu) {
  std::vector<TangentCurve> out;
  out.reserve(curves.size());
  for (std::size_t i = 0; i < curves.size(); ++i) {
    try {
      out.push_back(log_map_curve(curves[i], mu));
    } catch (const AntipodalPoints& e) {
      throw AntipodalPoints(fmt::format("curve {}, {}", i, e.what()), i, e.node());
    }
  }
  return out;
}

ManifoldCurve exp_map_curve(const TangentCurve& v) {
  std::vector<SpherePoint> pts;
  pts.reserve(v.size());
  for (std::size_t j = 0; j < v.size(); ++j) pts.push_back(exp_map(TangentVector(v.base()[j], v.vec(j))));
  return ManifoldCurve(v.grid(), std::move(pts));
}

double inner_product_H(const TangentCurve& f, const TangentCurve& g) {
  require_same_base(f.base(), g.base(), "inner_product_H");
  const Eigen::VectorXd& w = f.grid().quadrature_weights();
  return (w.array() * (f.vecs().array() * g.vecs().array()).rowwise().sum()).sum();
}

double norm_H(const TangentCurve& f) { return std::sqrt(inner_product_H(f, f)); }

Eigen::VectorXd sqrt_quadrature_weights3(const TimeGrid& grid) {
  const Eigen::VectorXd& w = grid.quadrature_weights();
  Eigen::VectorXd out(3 * w.size());
  for (Eigen::Index j = 0; j < w.size(); ++j) out.segment<3>(3 * j).setConstant(std::sqrt(w[j]));
  return out;
}

// ---------------------------------------------------------------------------

CovarianceOperator::CovarianceOperator(std::shared_ptr<const ManifoldCurve> base,
                                       Eigen::MatrixXd factor)
    : base_(std::move(base)), factor_(std::move(factor)) {
  if (!base_) throw InvalidArgument("covariance operator needs a base curve");
  if (factor_.cols() != static_cast<Eigen::Index>(3 * base_->size())) {
    throw GridMismatch(fmt::format("covariance factor has {} columns, expected {}", factor_.cols(),
                                   3 * base_->size()));
  }
}

Eigen::MatrixXd CovarianceOperator::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(factor_.cols(), factor_.cols());
  m.selfadjointView<Eigen::Lower>().rankUpdate(factor_.transpose());
  return m.selfadjointView<Eigen::Lower>();
}

CovarianceOperator CovarianceOperator::average(const CovarianceOperator& a,
                                               const CovarianceOperator& b) {
  require_same_base(*a.base_, *b.base_, "CovarianceOperator::average");
  Eigen::MatrixXd f(a.factor_.rows() + b.factor_.rows(), a.factor_.cols());
  f << a.factor_, b.factor_;
  f *= std::sqrt(0.5);
  return CovarianceOperator(a.base_, std::move(f));
}

CovarianceOperator empirical_covariance(std::span<const TangentCurve> sample) {
  if (sample.size() < 2) {
    throw EmptySample(fmt::format("covariance needs at least 2 curves, got {}", sample.size()));
  }
  const auto& base = sample.front().base_ptr();
  const Eigen::VectorXd sw = sqrt_quadrature_weights3(base->grid());
  const double scale = 1.0 / std::sqrt(static_cast<double>(sample.size()));
  Eigen::MatrixXd factor(static_cast<Eigen::Index>(sample.size()), sw.size());
  for (std::size_t s = 0; s < sample.size(); ++s) {
    require_same_base(sample[s].base(), *base, "empirical_covariance");
    factor.row(static_cast<Eigen::Index>(s)) = (scale * sw.array() * sample[s].flat().array()).matrix().transpose();
  }
  return CovarianceOperator(base, std::move(factor));
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> EigenSystem::usable_components() const {
  std::vector<std::size_t> out;
  if (eigvals.size() == 0) return out;
  const double floor = 1e-12 * eigvals[0];
  for (Eigen::Index k = 0; k < eigvals.size(); ++k) {
    if (eigvals[k] > 0.0 && eigvals[k] >= floor) out.push_back(static_cast<std::size_t>(k));
  }
  return out;
}

EigenSystem rfpca(const CovarianceOperator& cov, std::size_t K) {
  const Eigen::Index dim = cov.dimension();
  if (K == 0 || static_cast<Eigen::Index>(K) > dim) {
    throw InvalidArgument(fmt::format("rfpca: K = {} outside [1, {}]", K, dim));
  }
  const auto k = static_cast<Eigen::Index>(K);
  const Eigen::MatrixXd& A = cov.factor();
  if (!(cov.trace() > 0.0)) throw DegenerateSpectrum("rfpca: covariance operator is zero");

  Eigen::VectorXd vals(k);
  Eigen::MatrixXd u(dim, k);
  bool done = false;

  // Thin route through the r x r Gram matrix when it is smaller and the
  // requested eigenvalues are all clearly nonzero.
  if (A.rows() < dim && k <= A.rows()) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(A.rows(), A.rows());
    gram.selfadjointView<Eigen::Lower>().rankUpdate(A);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram.selfadjointView<Eigen::Lower>());
    const Eigen::VectorXd& ev = es.eigenvalues();  // ascending
    const double top = ev[ev.size() - 1];
    bool ok = top > 0.0;
    for (Eigen::Index i = 0; i < k && ok; ++i) {
      const double lam = ev[ev.size() - 1 - i];
      if (!(lam > 1e-10 * top)) ok = false;
    }
    if (ok) {
      for (Eigen::Index i = 0; i < k; ++i) {
        const double lam = ev[ev.size() - 1 - i];
        vals[i] = lam;
        u.col(i) = A.transpose() * es.eigenvectors().col(ev.size() - 1 - i) / std::sqrt(lam);
        u.col(i).normalize();
      }
      done = true;
    }
  }
  if (!done) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov.dense());
    const Eigen::VectorXd& ev = es.eigenvalues();
    for (Eigen::Index i = 0; i < k; ++i) {
      vals[i] = ev[dim - 1 - i];
      u.col(i) = es.eigenvectors().col(dim - 1 - i);
    }
  }
  if (!(vals[0] > 0.0)) throw DegenerateSpectrum("rfpca: leading eigenvalue is not positive");

  EigenSystem sys;
  sys.base = cov.base_ptr();
  const Eigen::VectorXd sw = sqrt_quadrature_weights3(cov.grid());
  sys.eigfuns = u.array().colwise() / sw.array();
  sys.eigvals = vals;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (sys.eigvals[i] < 0.0) sys.eigvals[i] = 0.0;
    fix_sign(sys.eigfuns.col(i));
  }
  return sys;
}

EigenSystem sinusoidal_basis(std::shared_ptr<const ManifoldCurve> base,
                             std::span<const std::size_t> indices, const CovarianceOperator* cov) {
  if (indices.empty()) throw InvalidArgument("sinusoidal_basis: no indices");
  const TimeGrid& grid = base->grid();
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto k = static_cast<Eigen::Index>(indices.size());
  const Eigen::VectorXd sw = sqrt_quadrature_weights3(grid);

  EigenSystem sys;
  sys.base = base;
  sys.eigfuns.resize(3 * n, k);
  sys.eigvals = Eigen::VectorXd::Zero(k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const std::size_t idx = indices[static_cast<std::size_t>(c)];
    if (idx == 0) throw InvalidArgument("sinusoidal_basis: indices are 1-based");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double s = std::sin(std::numbers::pi * static_cast<double>(idx + 1) * grid[static_cast<std::size_t>(j)]);
      sys.eigfuns.col(c).segment<3>(3 * j).setConstant(s);
    }
    const double nrm = (sw.array() * sys.eigfuns.col(c).array()).matrix().norm();
    if (!(nrm > 0.0)) {
      throw DegenerateSpectrum(fmt::format("sinusoid {} vanishes on the grid", idx));
    }
    sys.eigfuns.col(c) /= nrm;
    if (cov != nullptr) {
      require_same_base(*cov->base_ptr(), *base, "sinusoidal_basis");
      const Eigen::VectorXd u = sw.array() * sys.eigfuns.col(c).array();
      sys.eigvals[c] = (cov->factor() * u).squaredNorm();
    }
  }
  return sys;
}

ScoreVector scores(const TangentCurve& f, const EigenSystem& basis) {
  require_same_base(f.base(), *basis.base, "scores");
  const Eigen::VectorXd sw = sqrt_quadrature_weights3(f.grid());
  const Eigen::VectorXd wf = sw.array().square() * f.flat().array();
  return {basis.eigfuns.transpose() * wf};
}

TangentCurve reconstruct(const ScoreVector& c, const EigenSystem& basis) {
  if (c.values.size() > basis.eigfuns.cols()) {
    throw InvalidArgument(fmt::format("reconstruct: {} scores for a {}-component basis",
                                      c.values.size(), basis.eigfuns.cols()));
  }
  const FlatCurve flat = basis.eigfuns.leftCols(c.values.size()) * c.values;
  return TangentCurve(basis.base, project_nodes(*basis.base, flat));
}

TangentCurve reconstruct(const ScoreVector& c, const EigenSystem& basis,
                         std::span<const std::size_t> components) {
  if (static_cast<std::size_t>(c.values.size()) != components.size()) {
    throw InvalidArgument("reconstruct: score count does not match component list");
  }
  FlatCurve flat = FlatCurve::Zero(basis.eigfuns.rows());
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i] >= basis.size()) {
      throw InvalidArgument(fmt::format("reconstruct: component {} not in basis", components[i]));
    }
    flat += c.values[static_cast<Eigen::Index>(i)] * basis.eigfuns.col(static_cast<Eigen::Index>(components[i]));
  }
  return TangentCurve(basis.base, project_nodes(*basis.base, flat));
}

}  // namespace sfr
