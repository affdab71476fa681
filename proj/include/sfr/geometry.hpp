#pragma once

#include <Eigen/Dense>

#include <concepts>
#include <memory>
#include <span>
#include <vector>

namespace sfr {

using Vec3 = Eigen::Vector3d;

/// Largest geodesic distance at which log_map is still accepted.
inline constexpr double kAntipodalMargin = 1e-9;
/// Inputs within this distance of unit norm are renormalized; others are rejected.
inline constexpr double kUnitNormTolerance = 1e-6;

/// A point on the unit sphere S^2 in R^3.
class SpherePoint {
 public:
  /// Accepts coordinates within kUnitNormTolerance of unit norm and renormalizes them.
  static SpherePoint from_coords(const Vec3& coords);
  static SpherePoint from_coords(double x, double y, double z) { return from_coords(Vec3(x, y, z)); }
  /// Radial projection of any nonzero vector.
  static SpherePoint from_direction(const Vec3& v);
  /// Geocentric latitude/longitude in degrees; lat=90 is the north pole (0,0,1).
  static SpherePoint from_lat_lon_deg(double lat_deg, double lon_deg);
  /// Polar angle measured from the north pole (colatitude) and azimuth, in degrees.
  static SpherePoint from_colatitude_azimuth_deg(double colat_deg, double azimuth_deg);

  static SpherePoint north_pole() { return SpherePoint(Vec3::UnitZ()); }

  const Vec3& coords() const noexcept { return coords_; }
  double x() const noexcept { return coords_.x(); }
  double y() const noexcept { return coords_.y(); }
  double z() const noexcept { return coords_.z(); }

  double lat_deg() const;
  double lon_deg() const;

  bool operator==(const SpherePoint&) const = default;

 private:
  explicit SpherePoint(const Vec3& c) : coords_(c) {}
  Vec3 coords_;
};

/// A vector in the tangent plane at `base`. Its norm is a geodesic length in radians.
class TangentVector {
 public:
  /// Rejects vectors whose radial component exceeds 1e-10 * max(1, |vec|).
  TangentVector(const SpherePoint& base, const Vec3& vec);

  static TangentVector zero(const SpherePoint& base) { return TangentVector(base, Vec3::Zero()); }

  const SpherePoint& base() const noexcept { return base_; }
  const Vec3& vec() const noexcept { return vec_; }
  double norm() const { return vec_.norm(); }

 private:
  SpherePoint base_;
  Vec3 vec_;
};

/// Strictly increasing time nodes on [0, 1]. Copies share storage.
class TimeGrid {
 public:
  /// Nodes must be strictly increasing with nodes.front() == 0 and nodes.back() == 1.
  explicit TimeGrid(std::vector<double> nodes);

  static TimeGrid uniform(std::size_t count);
  /// Affinely maps arbitrary strictly increasing times onto [0, 1].
  static TimeGrid rescaled(std::span<const double> times);

  std::size_t size() const noexcept { return nodes_->size(); }
  double operator[](std::size_t j) const { return (*nodes_)[j]; }
  const std::vector<double>& nodes() const noexcept { return *nodes_; }

  /// Trapezoidal quadrature weights, one per node.
  const Eigen::VectorXd& quadrature_weights() const noexcept { return *weights_; }

  bool operator==(const TimeGrid& other) const;

 private:
  std::shared_ptr<const std::vector<double>> nodes_;
  std::shared_ptr<const Eigen::VectorXd> weights_;
};

/// A sphere-valued curve sampled on a time grid.
class ManifoldCurve {
 public:
  ManifoldCurve(TimeGrid grid, std::vector<SpherePoint> points);

  /// Same point at every node.
  static ManifoldCurve constant(const TimeGrid& grid, const SpherePoint& p);

  const TimeGrid& grid() const noexcept { return grid_; }
  const std::vector<SpherePoint>& points() const noexcept { return points_; }
  const SpherePoint& operator[](std::size_t j) const { return points_[j]; }
  std::size_t size() const noexcept { return points_.size(); }

  bool operator==(const ManifoldCurve& other) const {
    return grid_ == other.grid_ && points_ == other.points_;
  }

 private:
  TimeGrid grid_;
  std::vector<SpherePoint> points_;
};

// ---------------------------------------------------------------------------
// Geometry of S^2

/// Great-circle distance in [0, pi]. Equal to arccos(p.q); evaluated as
/// atan2(|p x q|, p.q) which keeps full precision near 0 and pi.
double geodesic_distance(const SpherePoint& p, const SpherePoint& q);

/// Throws AntipodalPoints when d(base, q) >= pi - kAntipodalMargin.
TangentVector log_map(const SpherePoint& base, const SpherePoint& q);

SpherePoint exp_map(const TangentVector& v);

/// Removes the radial component of w at base.
TangentVector project_to_tangent(const SpherePoint& base, const Vec3& w);

/// Supremum over nodes of the geodesic distance. Throws GridMismatch.
double curve_distance(const ManifoldCurve& x, const ManifoldCurve& y);

/// Point at fraction `tau` along the minimizing geodesic from p to q.
SpherePoint geodesic_interpolate(const SpherePoint& p, const SpherePoint& q, double tau);

/// Operations the regression code needs from a manifold. Only S^2 is shipped.
template <typename M>
concept RiemannianManifold = requires(const typename M::Point& p, const typename M::Tangent& v,
                                      const Vec3& w) {
  { M::distance(p, p) } -> std::convertible_to<double>;
  { M::log(p, p) } -> std::same_as<typename M::Tangent>;
  { M::exp(v) } -> std::same_as<typename M::Point>;
  { M::project(p, w) } -> std::same_as<typename M::Tangent>;
};

struct Sphere2 {
  using Point = SpherePoint;
  using Tangent = TangentVector;
  static constexpr double injectivity_radius = 3.14159265358979323846;

  static double distance(const Point& p, const Point& q) { return geodesic_distance(p, q); }
  static Tangent log(const Point& base, const Point& q) { return log_map(base, q); }
  static Point exp(const Tangent& v) { return exp_map(v); }
  static Tangent project(const Point& base, const Vec3& w) { return project_to_tangent(base, w); }
};

static_assert(RiemannianManifold<Sphere2>);

}  // namespace sfr
