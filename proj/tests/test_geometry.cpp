#include "sfr/errors.hpp"
#include "sfr/geometry.hpp"
#include "sfr/icosphere.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace sfr;
using std::numbers::pi;

namespace {

SpherePoint P(double x, double y, double z) { return SpherePoint::from_coords(x, y, z); }

}  // namespace

TEST(SpherePoint, RenormalizesNearUnitInput) {
  const SpherePoint p = P(1.0 + 5e-7, 0.0, 0.0);
  EXPECT_NEAR(p.coords().norm(), 1.0, 1e-15);
}

TEST(SpherePoint, RejectsNonUnitInput) {
  EXPECT_THROW(P(1.1, 0, 0), InvalidPoint);
  EXPECT_THROW(P(0, 0, 0), InvalidPoint);
  EXPECT_THROW(P(std::nan(""), 0, 1), InvalidPoint);
}

TEST(SpherePoint, LatLonConventions) {
  EXPECT_NEAR((SpherePoint::from_lat_lon_deg(90, 123).coords() - Vec3::UnitZ()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((SpherePoint::from_lat_lon_deg(0, 0).coords() - Vec3::UnitX()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((SpherePoint::from_lat_lon_deg(0, 90).coords() - Vec3::UnitY()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((SpherePoint::from_colatitude_azimuth_deg(0, 40).coords() - Vec3::UnitZ()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((SpherePoint::from_colatitude_azimuth_deg(90, 0).coords() - Vec3::UnitX()).norm(), 0.0, 1e-15);
  const SpherePoint q = SpherePoint::from_lat_lon_deg(-30, 45);
  EXPECT_NEAR(q.lat_deg(), -30, 1e-12);
  EXPECT_NEAR(q.lon_deg(), 45, 1e-12);
}

TEST(TangentVector, RejectsRadialComponent) {
  EXPECT_NO_THROW(TangentVector(SpherePoint::north_pole(), Vec3(1, 2, 0)));
  EXPECT_THROW(TangentVector(SpherePoint::north_pole(), Vec3(1, 0, 1e-3)), InvalidTangent);
}

TEST(TimeGrid, Validation) {
  EXPECT_THROW(TimeGrid({0.0, 0.5, 0.5, 1.0}), InvalidGrid);
  EXPECT_THROW(TimeGrid({0.1, 1.0}), InvalidGrid);
  EXPECT_THROW(TimeGrid({0.0}), InvalidGrid);
  const TimeGrid g = TimeGrid::rescaled(std::vector<double>{10, 12, 20});
  EXPECT_DOUBLE_EQ(g[1], 0.2);
  EXPECT_DOUBLE_EQ(g[2], 1.0);
  EXPECT_NEAR(g.quadrature_weights().sum(), 1.0, 1e-15);
}

TEST(GeodesicDistance, Examples) {
  const SpherePoint p = P(0.6, 0.0, 0.8);
  EXPECT_EQ(geodesic_distance(p, p), 0.0);
  EXPECT_NEAR(geodesic_distance(P(1, 0, 0), P(0, 1, 0)), pi / 2, 1e-15);
  EXPECT_NEAR(geodesic_distance(p, P(-0.6, 0.0, -0.8)), pi, 1e-15);
}

TEST(GeodesicDistance, SymmetricAndTriangle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    const SpherePoint p = oracle::random_point(rng), q = oracle::random_point(rng), r = oracle::random_point(rng);
    EXPECT_EQ(geodesic_distance(p, q), geodesic_distance(q, p));
    EXPECT_LE(geodesic_distance(p, r), geodesic_distance(p, q) + geodesic_distance(q, r) + 1e-12);
    EXPECT_NEAR(geodesic_distance(p, q), oracle::acos_distance(p.coords(), q.coords()), 1e-7);
  }
}

TEST(LogMap, Examples) {
  const SpherePoint n = SpherePoint::north_pole();
  EXPECT_EQ(log_map(n, n).norm(), 0.0);
  const TangentVector v = log_map(n, P(1, 0, 0));
  EXPECT_NEAR((v.vec() - Vec3(pi / 2, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_THROW(log_map(n, P(0, 0, -1)), AntipodalPoints);
}

TEST(LogMap, AntipodalThreshold) {
  const SpherePoint n = SpherePoint::north_pole();
  EXPECT_NO_THROW(log_map(n, exp_map(TangentVector(n, Vec3(pi - 1e-7, 0, 0)))));
  EXPECT_THROW(log_map(n, exp_map(TangentVector(n, Vec3(pi - 1e-10, 0, 0)))), AntipodalPoints);
}

TEST(ExpMap, Examples) {
  const SpherePoint n = SpherePoint::north_pole();
  EXPECT_EQ(exp_map(TangentVector::zero(n)), n);
  const SpherePoint q = exp_map(TangentVector(n, Vec3(pi / 2, 0, 0)));
  EXPECT_NEAR(geodesic_distance(q, P(1, 0, 0)), 0.0, 1e-15);
}

TEST(ExpMap, MatchesClosedFormAndStaysUnit) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> r(0.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const SpherePoint p = oracle::random_point(rng);
    const auto [e1, e2] = oracle::tangent_frame(p.coords());
    const Vec3 v = r(rng) * e1 - r(rng) * e2;
    const SpherePoint q = exp_map(TangentVector(p, v));
    EXPECT_NEAR(q.coords().norm(), 1.0, 1e-12);
    EXPECT_NEAR((q.coords() - oracle::exp_at(p.coords(), v)).norm(), 0.0, 1e-12);
  }
}

TEST(ExpLog, RoundTripAndNormIdentity) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, pi - 1e-3);
  for (int i = 0; i < 1000; ++i) {
    const SpherePoint p = oracle::random_point(rng);
    const SpherePoint q = oracle::point_at_distance(rng, p, d(rng));
    const TangentVector v = log_map(p, q);
    EXPECT_LE(geodesic_distance(exp_map(v), q), 1e-9);
    EXPECT_NEAR(v.norm(), geodesic_distance(p, q), 1e-12);
    EXPECT_LE(std::abs(v.vec().dot(p.coords())), 1e-10);
  }
}

TEST(ProjectToTangent, Examples) {
  const SpherePoint p = P(0, 0.6, 0.8);
  EXPECT_NEAR(project_to_tangent(p, p.coords()).norm(), 0.0, 1e-15);
  EXPECT_NEAR((project_to_tangent(SpherePoint::north_pole(), Vec3(1, 0, 5)).vec() - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 3.0);
  for (int i = 0; i < 500; ++i) {
    const SpherePoint b = oracle::random_point(rng);
    const TangentVector t = project_to_tangent(b, Vec3(g(rng), g(rng), g(rng)));
    EXPECT_LE(std::abs(b.coords().dot(t.vec())), 1e-12 * std::max(1.0, t.norm()));
  }
}

TEST(CurveDistance, Examples) {
  const TimeGrid g = TimeGrid::uniform(7);
  const ManifoldCurve x = ManifoldCurve::constant(g, SpherePoint::north_pole());
  const ManifoldCurve y = ManifoldCurve::constant(g, P(1, 0, 0));
  EXPECT_EQ(curve_distance(x, x), 0.0);
  EXPECT_NEAR(curve_distance(x, y), pi / 2, 1e-15);
  EXPECT_THROW(curve_distance(x, ManifoldCurve::constant(TimeGrid::uniform(8), SpherePoint::north_pole())),
               GridMismatch);
}

TEST(CurveDistance, MatchesNodeScan) {
  std::mt19937_64 rng(9);
  const TimeGrid g = TimeGrid::uniform(50);
  std::vector<SpherePoint> a, b;
  for (int j = 0; j < 50; ++j) {
    a.push_back(oracle::random_point(rng));
    b.push_back(oracle::random_point(rng));
  }
  double sup = 0.0;
  for (int j = 0; j < 50; ++j) sup = std::max(sup, geodesic_distance(a[j], b[j]));
  EXPECT_EQ(curve_distance(ManifoldCurve(g, a), ManifoldCurve(g, b)), sup);
}

TEST(GeodesicInterpolate, Endpoints) {
  const SpherePoint p = P(1, 0, 0), q = P(0, 1, 0);
  EXPECT_NEAR(geodesic_distance(geodesic_interpolate(p, q, 0.0), p), 0.0, 1e-15);
  EXPECT_NEAR(geodesic_distance(geodesic_interpolate(p, q, 1.0), q), 0.0, 1e-12);
  const SpherePoint m = geodesic_interpolate(p, q, 0.5);
  EXPECT_NEAR((m.coords() - Vec3(1, 1, 0).normalized()).norm(), 0.0, 1e-12);
}

TEST(Icosphere, VertexCountAndCoverage) {
  for (int level = 0; level <= 4; ++level) {
    const Icosphere& ico = icosphere(level);
    EXPECT_EQ(ico.vertices.size(), 10u * (1u << (2 * level)) + 2u);
    for (const Vec3& v : ico.vertices) EXPECT_NEAR(v.norm(), 1.0, 1e-14);
  }
  std::mt19937_64 rng(2);
  const Icosphere& ico = icosphere(3);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x = oracle::uniform_on_sphere(rng);
    double best = 10.0;
    for (const Vec3& v : ico.vertices) best = std::min(best, oracle::acos_distance(x, v));
    EXPECT_LE(best, ico.max_edge);
  }
  EXPECT_THROW(icosphere(9), InvalidArgument);
}
