#include "sfr/errors.hpp"
#include "sfr/intrinsic.hpp"
#include "sfr/simulation.hpp"

#include "models.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>

using namespace sfr;
using std::numbers::pi;

namespace {

SpherePoint along_x(double d) { return SpherePoint::from_coords(std::sin(d), 0.0, std::cos(d)); }

struct NodeData {
  std::vector<SpherePoint> x, y;
  SpherePoint target = SpherePoint::north_pole();
};

NodeData random_node(std::mt19937_64& rng, std::size_t n, double spread) {
  NodeData nd;
  nd.target = oracle::random_point(rng);
  const SpherePoint yc = oracle::random_point(rng);
  for (std::size_t i = 0; i < n; ++i) {
    nd.x.push_back(oracle::random_point_in_cap(rng, nd.target, spread));
    nd.y.push_back(oracle::random_point_in_cap(rng, yc, 0.6));
  }
  return nd;
}

}  // namespace

TEST(GeodesicKernel, Values) {
  const GeodesicKernel k{0.8};
  EXPECT_DOUBLE_EQ(geodesic_kernel(0.0, k), 0.75 / 0.8);
  EXPECT_EQ(geodesic_kernel(0.8, k), 0.0);
  EXPECT_EQ(geodesic_kernel(2.0, k), 0.0);
  EXPECT_THROW(geodesic_kernel(-1e-3, k), InvalidArgument);
  EXPECT_THROW(GeodesicKernel{0.0}.validate(), InvalidArgument);
  EXPECT_THROW(GeodesicKernel{std::nan("")}.validate(), InvalidArgument);
}

TEST(GeodesicKernel, SphericalMomentsAreFinite) {
  // Integral over S^2 of K(d) d^j around a pole, by midpoint rule in d with
  // the area element 2 pi sin d, compared against a refined rule.
  const GeodesicKernel k{0.5};
  for (int j = 0; j <= 2; ++j) {
    const auto integral = [&](int M) {
      double acc = 0.0;
      const double h = pi / M;
      for (int i = 0; i < M; ++i) {
        const double d = (i + 0.5) * h;
        acc += geodesic_kernel(d, k) * std::pow(d, j) * 2 * pi * std::sin(d) * h;
      }
      return acc;
    };
    const double coarse = integral(20000), fine = integral(200000);
    EXPECT_TRUE(std::isfinite(fine));
    EXPECT_GT(fine, 0.0);
    EXPECT_NEAR(coarse, fine, 1e-6);
  }
}

TEST(NwPredictNode, ConstantResponseAndSingleSample) {
  std::mt19937_64 rng(1);
  NodeData nd = random_node(rng, 10, 0.5);
  const SpherePoint ystar = oracle::random_point(rng);
  std::vector<SpherePoint> ys(10, ystar);
  EXPECT_LE(geodesic_distance(nw_predict_node(nd.x, ys, nd.target, GeodesicKernel{1.0}), ystar), 1e-12);

  // Only x[0] inside the window.
  std::vector<SpherePoint> xs{along_x(0.05), along_x(0.9), along_x(1.3)};
  std::vector<SpherePoint> yr{oracle::random_point(rng), oracle::random_point(rng), oracle::random_point(rng)};
  EXPECT_LE(geodesic_distance(nw_predict_node(xs, yr, SpherePoint::north_pole(), GeodesicKernel{0.2}), yr[0]), 1e-12);
  EXPECT_THROW(nw_predict_node(xs, yr, SpherePoint::north_pole(), GeodesicKernel{0.01}), EmptyWindow);
}

TEST(NwPredictNode, MatchesGridOracle) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const NodeData nd = random_node(rng, 5, 0.7);
    const GeodesicKernel k{0.9};
    std::vector<double> w;
    std::vector<SpherePoint> pts;
    for (std::size_t i = 0; i < 5; ++i) {
      const double d = oracle::acos_distance(nd.x[i].coords(), nd.target.coords());
      const double kw = d < 0.9 ? 0.75 / 0.9 * (1 - (d / 0.9) * (d / 0.9)) : 0.0;
      if (kw > 0.0) {
        w.push_back(kw);
        pts.push_back(nd.y[i]);
      }
    }
    if (w.empty()) continue;
    const SpherePoint ref = oracle::brute_force_frechet(pts, w);
    EXPECT_LE(geodesic_distance(nw_predict_node(nd.x, nd.y, nd.target, k), ref), 2e-3);
  }
}

TEST(LlWeightsNode, HandInstanceWithNegativeWeight) {
  const std::vector<SpherePoint> xs{along_x(0.2), along_x(0.6)};
  const LocalLinearWeights w = ll_weights_node(xs, SpherePoint::north_pole(), GeodesicKernel{1.0});
  EXPECT_NEAR(w.mu0, 0.6, 1e-12);
  EXPECT_NEAR(w.mu1, 0.216, 1e-12);
  EXPECT_NEAR(w.mu2, 0.1008, 1e-12);
  EXPECT_NEAR(w.sigma0sq, 0.013824, 1e-12);
  EXPECT_NEAR(w.s[0], 3.0, 1e-10);
  EXPECT_NEAR(w.s[1], -1.0, 1e-10);
  EXPECT_LT(w.s[1], 0.0);
  EXPECT_NEAR((w.s[0] + w.s[1]) / 2, 1.0, 1e-12);
  EXPECT_NEAR(w.s_over_n[0], 1.5, 1e-10);
  EXPECT_NEAR(w.s_over_n[1], -0.5, 1e-10);
}

TEST(LlWeightsNode, ZeroSpreadIsDegenerate) {
  const std::vector<SpherePoint> xs(4, SpherePoint::north_pole());
  EXPECT_THROW(ll_weights_node(xs, SpherePoint::north_pole(), GeodesicKernel{1.0}), DegenerateWindow);
  const std::vector<SpherePoint> far{along_x(1.0), along_x(1.1)};
  EXPECT_THROW(ll_weights_node(far, SpherePoint::north_pole(), GeodesicKernel{0.5}), EmptyWindow);
}

TEST(LlWeightsNode, IdentitiesOnRandomInstances) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> count(2, 40);
  for (int rep = 0; rep < 300; ++rep) {
    const NodeData nd = random_node(rng, static_cast<std::size_t>(count(rng)), 0.8);
    try {
      const LocalLinearWeights w = ll_weights_node(nd.x, nd.target, GeodesicKernel{0.7});
      double sum = 0.0;
      for (double s : w.s) sum += s;
      EXPECT_NEAR(sum / static_cast<double>(w.s.size()), 1.0, 1e-10);
      EXPECT_NEAR(w.sigma0sq, w.mu0 * w.mu2 - w.mu1 * w.mu1, 1e-12);
      for (std::size_t i = 0; i < w.s.size(); ++i) {
        EXPECT_NEAR(w.s_over_n[i] * static_cast<double>(w.s.size()), w.s[i], 1e-9 * (1 + std::abs(w.s[i])));
      }
    } catch (const EmptyWindow&) {
    } catch (const DegenerateWindow&) {
    }
  }
}

TEST(LlPredictNode, ConstantResponse) {
  std::mt19937_64 rng(4);
  const NodeData nd = random_node(rng, 12, 0.6);
  const SpherePoint ystar = oracle::random_point(rng);
  const std::vector<SpherePoint> ys(12, ystar);
  EXPECT_LE(geodesic_distance(ll_predict_node(nd.x, ys, nd.target, GeodesicKernel{1.0}), ystar), 1e-8);
}

TEST(LlPredictNode, HandInstanceMatchesGridOracle) {
  std::mt19937_64 rng(5);
  const std::vector<SpherePoint> xs{along_x(0.2), along_x(0.6)};
  for (int rep = 0; rep < 5; ++rep) {
    const SpherePoint y1 = oracle::random_point(rng);
    const SpherePoint y2 = oracle::point_at_distance(rng, y1, 0.5);
    const std::vector<SpherePoint> ys{y1, y2};
    const std::vector<double> w{3.0, -1.0};
    const SpherePoint ref = oracle::brute_force_frechet(ys, w);
    EXPECT_LE(geodesic_distance(ll_predict_node(xs, ys, SpherePoint::north_pole(), GeodesicKernel{1.0}), ref), 2e-3);
  }
}

TEST(IntrinsicPredictors, LocalityIsExact) {
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const NodeData nd = random_node(rng, 30, 1.2);
    const GeodesicKernel k{0.7};
    NodeData kept;
    kept.target = nd.target;
    for (std::size_t i = 0; i < 30; ++i) {
      if (geodesic_distance(nd.x[i], nd.target) < k.bandwidth) {
        kept.x.push_back(nd.x[i]);
        kept.y.push_back(nd.y[i]);
      }
    }
    ASSERT_LT(kept.x.size(), 30u);
    if (kept.x.size() < 3) continue;
    EXPECT_EQ(nw_predict_node(nd.x, nd.y, nd.target, k), nw_predict_node(kept.x, kept.y, kept.target, k));
    EXPECT_EQ(ll_predict_node(nd.x, nd.y, nd.target, k), ll_predict_node(kept.x, kept.y, kept.target, k));
  }
}

TEST(IntrinsicPredictors, MomentRatioStabilizes) {
  // Regressors spread uniformly (in area) around the target: the ratio
  // mu2 mu0 / mu1^2 settles as the bandwidth shrinks.
  std::mt19937_64 rng(7);
  std::vector<SpherePoint> xs;
  for (int i = 0; i < 20000; ++i) xs.push_back(oracle::random_point_in_cap(rng, SpherePoint::north_pole(), 1.0));
  std::vector<double> ratios;
  for (double bw : {0.4, 0.2, 0.1}) {
    const LocalLinearWeights w = ll_weights_node(xs, SpherePoint::north_pole(), GeodesicKernel{bw});
    ratios.push_back(w.mu2 * w.mu0 / (w.mu1 * w.mu1));
  }
  EXPECT_NEAR(ratios[2] / ratios[1], 1.0, 0.1);
}

TEST(PredictCurve, ConstantSample) {
  const TimeGrid g = TimeGrid::uniform(10);
  std::mt19937_64 rng(8);
  const ManifoldCurve y = ManifoldCurve::constant(g, oracle::random_point(rng));
  BivariateCurveSample s{g, {}, {}, {}};
  for (int i = 0; i < 6; ++i) {
    std::vector<SpherePoint> pts;
    for (int j = 0; j < 10; ++j) pts.push_back(along_x(0.05 * (i + 1) + 0.01 * j));
    s.regressors.emplace_back(g, pts);
    s.responses.push_back(y);
    s.sample_times.push_back(i);
  }
  for (IntrinsicKind kind : {IntrinsicKind::NW, IntrinsicKind::LL}) {
    const CurvePrediction p = predict_curve(kind, s, s.regressors[2], GeodesicKernel{1.0});
    EXPECT_EQ(p.interpolated, 0u);
    EXPECT_LE(curve_distance(p.curve, y), 1e-8);
  }
}

TEST(PredictCurve, FullWindowEqualsGlobalWeightedMean) {
  SimulationConfig cfg;
  cfg.n = 15;
  cfg.N = 20;
  cfg.seed = 9;
  const BivariateCurveSample s = generate_dataset(cfg).sample;
  const ManifoldCurve& x0 = s.regressors[3];
  const GeodesicKernel k{4.0};
  const CurvePrediction p = predict_curve(IntrinsicKind::NW, s, x0, k);
  EXPECT_EQ(p.interpolated, 0u);
  for (std::size_t j = 0; j < s.grid.size(); ++j) {
    WeightedPointSet set;
    for (std::size_t i = 0; i < s.size(); ++i) {
      set.points.push_back(s.responses[i][j]);
      set.weights.push_back(geodesic_kernel(geodesic_distance(s.regressors[i][j], x0[j]), k));
    }
    EXPECT_EQ(p.curve[j], weighted_frechet_mean(set));
  }
}

TEST(PredictCurve, MatchesNodeLoop) {
  SimulationConfig cfg;
  cfg.n = 100;
  cfg.N = 1000;
  cfg.seed = 10;
  const BivariateCurveSample s = generate_dataset(cfg).sample;
  const ManifoldCurve& x0 = s.regressors[0];
  const BivariateCurveSample train = s.subset(std::vector<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20});
  const GeodesicKernel k{0.6};
  const CurvePrediction p = predict_curve(IntrinsicKind::NW, train, x0, k);
  for (std::size_t j = 0; j < s.grid.size(); j += 7) {
    std::vector<SpherePoint> xs, ys;
    for (std::size_t i = 0; i < train.size(); ++i) {
      xs.push_back(train.regressors[i][j]);
      ys.push_back(train.responses[i][j]);
    }
    if (p.status[j] == NodeStatus::Ok) EXPECT_EQ(p.curve[j], nw_predict_node(xs, ys, x0[j], k)) << "node " << j;
  }
}

TEST(PredictCurve, FailedNodesAreInterpolated) {
  const TimeGrid g = TimeGrid::uniform(5);
  BivariateCurveSample s{g, {}, {}, {}};
  // Regressors close to the pole except at node 2, where they are far away.
  for (int i = 0; i < 4; ++i) {
    std::vector<SpherePoint> xs, ys;
    for (int j = 0; j < 5; ++j) {
      xs.push_back(along_x(j == 2 ? 2.0 : 0.05 * (i + 1)));
      ys.push_back(SpherePoint::from_coords(std::cos(0.1 * j), std::sin(0.1 * j), 0.0));
    }
    s.regressors.emplace_back(g, xs);
    s.responses.emplace_back(g, ys);
    s.sample_times.push_back(i);
  }
  const ManifoldCurve x0 = ManifoldCurve::constant(g, SpherePoint::north_pole());
  const CurvePrediction p = predict_curve(IntrinsicKind::NW, s, x0, GeodesicKernel{0.5});
  EXPECT_EQ(p.interpolated, 1u);
  EXPECT_EQ(p.status[2], NodeStatus::Interpolated);
  EXPECT_EQ(to_string(p.status[2]), "interpolated");
  EXPECT_LE(geodesic_distance(p.curve[2], geodesic_interpolate(p.curve[1], p.curve[3], 0.5)), 1e-12);

  const ManifoldCurve far = ManifoldCurve::constant(g, SpherePoint::from_coords(0, 0, -1));
  EXPECT_THROW(predict_curve(IntrinsicKind::NW, s, far, GeodesicKernel{0.5}), AllNodesFailed);
}

TEST(PredictCurve, LocalLinearNotWorseThanNadarayaWatson) {
  model::KnownMeanConfig c;
  c.n = 220;
  c.N = 30;
  const BivariateCurveSample s = model::known_mean_sample(c);
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 20; i < c.n; ++i) train_idx.push_back(i);
  const BivariateCurveSample train = s.subset(train_idx);
  const GeodesicKernel k{0.4};
  std::vector<double> enw, ell;
  for (std::size_t t = 0; t < 20; ++t) {
    const CurvePrediction nw = predict_curve(IntrinsicKind::NW, train, s.regressors[t], k);
    const CurvePrediction ll = predict_curve(IntrinsicKind::LL, train, s.regressors[t], k);
    for (std::size_t j = 0; j < c.N; ++j) {
      const SpherePoint truth = model::conditional_mean(s.regressors[t][j], c.curvature);
      enw.push_back(geodesic_distance(nw.curve[j], truth));
      ell.push_back(geodesic_distance(ll.curve[j], truth));
    }
  }
  const std::size_t mid = enw.size() / 2;
  std::nth_element(enw.begin(), enw.begin() + static_cast<std::ptrdiff_t>(mid), enw.end());
  std::nth_element(ell.begin(), ell.begin() + static_cast<std::ptrdiff_t>(mid), ell.end());
  EXPECT_LE(ell[mid], enw[mid]);
}
