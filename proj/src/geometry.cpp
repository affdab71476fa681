#include "sfr/geometry.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sfr {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

SpherePoint SpherePoint::from_coords(const Vec3& coords) {
  const double n = coords.norm();
  if (!std::isfinite(n) || std::abs(n - 1.0) > kUnitNormTolerance) {
    throw InvalidPoint(fmt::format("point ({}, {}, {}) has norm {}, expected 1", coords.x(),
                                   coords.y(), coords.z(), n));
  }
  return SpherePoint(coords / n);
}

SpherePoint SpherePoint::from_direction(const Vec3& v) {
  const double n = v.norm();
  if (!std::isfinite(n) || n == 0.0) {
    throw InvalidPoint("cannot project a zero or non-finite vector onto the sphere");
  }
  return SpherePoint(v / n);
}

SpherePoint SpherePoint::from_lat_lon_deg(double lat_deg, double lon_deg) {
  const double lat = lat_deg * kDegToRad;
  const double lon = lon_deg * kDegToRad;
  // sin/cos of exact multiples of 90 degrees are not exact in floating point
  const double cl = std::abs(lat_deg) == 90.0 ? 0.0 : std::cos(lat);
  const double sl = lat_deg == 90.0 ? 1.0 : lat_deg == -90.0 ? -1.0 : std::sin(lat);
  return from_direction(Vec3(cl * std::cos(lon), cl * std::sin(lon), sl));
}

SpherePoint SpherePoint::from_colatitude_azimuth_deg(double colat_deg, double azimuth_deg) {
  return from_lat_lon_deg(90.0 - colat_deg, azimuth_deg);
}

double SpherePoint::lat_deg() const {
  return std::atan2(coords_.z(), std::hypot(coords_.x(), coords_.y())) / kDegToRad;
}

double SpherePoint::lon_deg() const { return std::atan2(coords_.y(), coords_.x()) / kDegToRad; }

TangentVector::TangentVector(const SpherePoint& base, const Vec3& vec) : base_(base), vec_(vec) {
  const double radial = base.coords().dot(vec);
  if (!vec.allFinite() || std::abs(radial) > 1e-10 * std::max(1.0, vec.norm())) {
    throw InvalidTangent(fmt::format("vector is not tangent at base (radial component {})", radial));
  }
}

// ---------------------------------------------------------------------------

TimeGrid::TimeGrid(std::vector<double> nodes) {
  if (nodes.size() < 2) {
    throw InvalidGrid(fmt::format("time grid needs at least 2 nodes, got {}", nodes.size()));
  }
  if (std::abs(nodes.front()) > 1e-12 || std::abs(nodes.back() - 1.0) > 1e-12) {
    throw InvalidGrid(
        fmt::format("time grid must span [0, 1], got [{}, {}]", nodes.front(), nodes.back()));
  }
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    if (!(nodes[j] > nodes[j - 1])) {
      throw InvalidGrid(fmt::format("time grid not strictly increasing at node {}", j));
    }
  }
  nodes.front() = 0.0;
  nodes.back() = 1.0;

  const std::size_t n = nodes.size();
  Eigen::VectorXd w(n);
  w[0] = 0.5 * (nodes[1] - nodes[0]);
  w[n - 1] = 0.5 * (nodes[n - 1] - nodes[n - 2]);
  for (std::size_t j = 1; j + 1 < n; ++j) w[j] = 0.5 * (nodes[j + 1] - nodes[j - 1]);

  nodes_ = std::make_shared<const std::vector<double>>(std::move(nodes));
  weights_ = std::make_shared<const Eigen::VectorXd>(std::move(w));
}

TimeGrid TimeGrid::uniform(std::size_t count) {
  if (count < 2) throw InvalidGrid("uniform grid needs at least 2 nodes");
  std::vector<double> nodes(count);
  const double h = 1.0 / static_cast<double>(count - 1);
  for (std::size_t j = 0; j < count; ++j) nodes[j] = static_cast<double>(j) * h;
  nodes.back() = 1.0;
  return TimeGrid(std::move(nodes));
}

TimeGrid TimeGrid::rescaled(std::span<const double> times) {
  if (times.size() < 2) throw InvalidGrid("time grid needs at least 2 nodes");
  const double t0 = times.front();
  const double span = times.back() - t0;
  if (!(span > 0.0)) throw InvalidGrid("times do not increase");
  std::vector<double> nodes(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) nodes[j] = (times[j] - t0) / span;
  nodes.front() = 0.0;
  nodes.back() = 1.0;
  return TimeGrid(std::move(nodes));
}

bool TimeGrid::operator==(const TimeGrid& other) const {
  return nodes_ == other.nodes_ || *nodes_ == *other.nodes_;
}

ManifoldCurve::ManifoldCurve(TimeGrid grid, std::vector<SpherePoint> points)
    : grid_(std::move(grid)), points_(std::move(points)) {
  if (points_.size() != grid_.size()) {
    throw GridMismatch(fmt::format("curve has {} points but grid has {} nodes", points_.size(),
                                   grid_.size()));
  }
}

ManifoldCurve ManifoldCurve::constant(const TimeGrid& grid, const SpherePoint& p) {
  return ManifoldCurve(grid, std::vector<SpherePoint>(grid.size(), p));
}

// ---------------------------------------------------------------------------

double geodesic_distance(const SpherePoint& p, const SpherePoint& q) {
  const Vec3& a = p.coords();
  const Vec3& b = q.coords();
  return std::atan2(a.cross(b).norm(), std::clamp(a.dot(b), -1.0, 1.0));
}

TangentVector log_map(const SpherePoint& base, const SpherePoint& q) {
  const double d = geodesic_distance(base, q);
  if (d >= std::numbers::pi - kAntipodalMargin) {
    throw AntipodalPoints(fmt::format("log map undefined: distance {} is at the cut locus", d));
  }
  if (d == 0.0) return TangentVector::zero(base);
  const Vec3& p = base.coords();
  Vec3 u = q.coords() - p.dot(q.coords()) * p;
  u -= p.dot(u) * p;
  const double un = u.norm();
  if (un == 0.0) return TangentVector::zero(base);
  return TangentVector(base, u * (d / un));
}

SpherePoint exp_map(const TangentVector& v) {
  const double theta = v.norm();
  if (theta == 0.0) return v.base();
  const Vec3 out = std::cos(theta) * v.base().coords() + (std::sin(theta) / theta) * v.vec();
  return SpherePoint::from_direction(out);
}

TangentVector project_to_tangent(const SpherePoint& base, const Vec3& w) {
  const Vec3& p = base.coords();
  Vec3 t = w - p.dot(w) * p;
  t -= p.dot(t) * p;
  return TangentVector(base, t);
}

double curve_distance(const ManifoldCurve& x, const ManifoldCurve& y) {
  if (!(x.grid() == y.grid())) throw GridMismatch("curve_distance: curves have different grids");
  double sup = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) sup = std::max(sup, geodesic_distance(x[j], y[j]));
  return sup;
}

SpherePoint geodesic_interpolate(const SpherePoint& p, const SpherePoint& q, double tau) {
  const TangentVector v = log_map(p, q);
  return exp_map(TangentVector(p, tau * v.vec()));
}

}  // namespace sfr
