#pragma once

#include "sfr/geometry.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <vector>

namespace sfr {

/// Node-major flattening of a curve of 3-vectors: entry 3*j + c is axis c at node j.
using FlatCurve = Eigen::VectorXd;
using NodeVectors = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// A log-mapped curve: vecs.row(j) lies in the tangent plane at base[j].
/// Curves produced from the same base share it by pointer.
class TangentCurve {
 public:
  /// Throws GridMismatch on size mismatch, InvalidTangent when a node vector
  /// has a radial component above 1e-8 * max(1, |v|).
  TangentCurve(std::shared_ptr<const ManifoldCurve> base, NodeVectors vecs);

  static TangentCurve zero(std::shared_ptr<const ManifoldCurve> base);

  const TimeGrid& grid() const noexcept { return base_->grid(); }
  const ManifoldCurve& base() const noexcept { return *base_; }
  const std::shared_ptr<const ManifoldCurve>& base_ptr() const noexcept { return base_; }
  const NodeVectors& vecs() const noexcept { return vecs_; }
  Vec3 vec(std::size_t j) const { return vecs_.row(static_cast<Eigen::Index>(j)).transpose(); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(vecs_.rows()); }

  Eigen::Map<const FlatCurve> flat() const { return {vecs_.data(), vecs_.size()}; }

 private:
  std::shared_ptr<const ManifoldCurve> base_;
  NodeVectors vecs_;
};

/// True when both curves live over the same base curve (pointer or value equality).
bool same_base(const ManifoldCurve& a, const ManifoldCurve& b);

/// Node-wise log map of every curve at mu. AntipodalPoints carries (curve, node).
std::vector<TangentCurve> log_map_sample(std::span<const ManifoldCurve> curves,
                                         std::shared_ptr<const ManifoldCurve> mu);
TangentCurve log_map_curve(const ManifoldCurve& curve, std::shared_ptr<const ManifoldCurve> mu);

/// Node-wise exp map back to the sphere.
ManifoldCurve exp_map_curve(const TangentCurve& v);

/// Trapezoidal quadrature of sum_c f_c(t) g_c(t) over the grid. Throws GridMismatch.
double inner_product_H(const TangentCurve& f, const TangentCurve& g);
double norm_H(const TangentCurve& f);

/// sqrt of the trapezoid weight for each flattened coordinate (length 3N).
Eigen::VectorXd sqrt_quadrature_weights3(const TimeGrid& grid);

/// Symmetric operator on H, stored through a factor A with M = A^T A acting on
/// quadrature-weighted coordinates u = W^{1/2} f. The eigenproblem of M equals
/// the operator eigenproblem in H.
class CovarianceOperator {
 public:
  CovarianceOperator(std::shared_ptr<const ManifoldCurve> base, Eigen::MatrixXd factor);

  const TimeGrid& grid() const noexcept { return base_->grid(); }
  const std::shared_ptr<const ManifoldCurve>& base_ptr() const noexcept { return base_; }
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }
  Eigen::Index dimension() const noexcept { return factor_.cols(); }

  /// The (3N)x(3N) matrix A^T A.
  Eigen::MatrixXd dense() const;
  double trace() const { return factor_.squaredNorm(); }

  /// Equal-weight average of two operators over the same base.
  static CovarianceOperator average(const CovarianceOperator& a, const CovarianceOperator& b);

 private:
  std::shared_ptr<const ManifoldCurve> base_;
  Eigen::MatrixXd factor_;
};

/// (1/n) sum_s v_s (x) v_s. Throws EmptySample when n < 2, GridMismatch when
/// the curves do not share a base.
CovarianceOperator empirical_covariance(std::span<const TangentCurve> sample);

/// Orthonormal (in H) vector eigenfunctions with descending eigenvalues.
struct EigenSystem {
  std::shared_ptr<const ManifoldCurve> base;
  Eigen::VectorXd eigvals;
  /// 3N x K, column k is phi_k flattened node-major.
  Eigen::MatrixXd eigfuns;

  const TimeGrid& grid() const { return base->grid(); }
  std::size_t size() const { return static_cast<std::size_t>(eigvals.size()); }
  /// Components whose eigenvalue is at least 1e-12 * lambda_1.
  std::vector<std::size_t> usable_components() const;
};

/// Top-K eigenpairs. Eigenfunctions are normalized in H and signed so that the
/// first flattened entry with |value| > 1e-8 is positive. Throws
/// InvalidArgument when K is 0 or exceeds 3N, DegenerateSpectrum for a zero operator.
EigenSystem rfpca(const CovarianceOperator& cov, std::size_t K);

/// Analytic basis phi_k(t) = c_k (s, s, s), s = sin(pi (k + 1) t), normalized in H,
/// for the given 1-based indices k. These vectors are not tangent to the base;
/// reconstruct() projects. Eigenvalues are Rayleigh quotients of `cov` when
/// given, otherwise zero.
EigenSystem sinusoidal_basis(std::shared_ptr<const ManifoldCurve> base,
                             std::span<const std::size_t> indices,
                             const CovarianceOperator* cov = nullptr);

struct ScoreVector {
  Eigen::VectorXd values;
};

/// values[k] = <f, phi_k>_H. Throws GridMismatch.
ScoreVector scores(const TangentCurve& f, const EigenSystem& basis);

/// sum_k c_k phi_k, projected onto the tangent plane node by node.
TangentCurve reconstruct(const ScoreVector& c, const EigenSystem& basis);
/// Same, restricted to the listed components; c is indexed like `components`.
TangentCurve reconstruct(const ScoreVector& c, const EigenSystem& basis,
                         std::span<const std::size_t> components);

}  // namespace sfr
