#include "sfr/simulation.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <numbers>

namespace sfr {

namespace {

constexpr double kCapRadius = std::numbers::pi - 0.1;
constexpr double kResponseClip = std::numbers::pi - 0.1;

}  // namespace

void SimulationConfig::validate() const {
  if (n < 2) throw InvalidArgument(fmt::format("simulation needs n >= 2, got {}", n));
  if (N < 2) throw InvalidArgument(fmt::format("simulation needs N >= 2, got {}", N));
  if (!(theta_ou >= 0.0) || !std::isfinite(theta_ou)) throw InvalidArgument("theta_ou must be >= 0");
  if (!(sigma_ou >= 0.0) || !std::isfinite(sigma_ou)) throw InvalidArgument("sigma_ou must be >= 0");
  if (!(rho_s >= 0.0 && rho_s < 1.0)) throw InvalidArgument(fmt::format("rho_s must be in [0, 1), got {}", rho_s));
  if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidArgument("kappa must be > 0");
  if (!(sigma_eps >= 0.0) || !std::isfinite(sigma_eps)) throw InvalidArgument("sigma_eps must be >= 0");
  if (K_gen == 0) throw InvalidArgument("K_gen must be >= 1");
  if (!gamma.empty() && gamma.size() != K_gen) {
    throw InvalidArgument(fmt::format("gamma has {} entries but K_gen is {}", gamma.size(), K_gen));
  }
  for (double g : gamma) {
    if (!(std::abs(g) < 1.0)) throw InvalidArgument(fmt::format("slope {} violates max |gamma_k| < 1", g));
  }
}

std::vector<double> SimulationConfig::slopes() const {
  if (!gamma.empty()) return gamma;
  std::vector<double> g(K_gen);
  for (std::size_t k = 0; k < K_gen; ++k) g[k] = std::pow(0.5, static_cast<double>(k + 1));
  return g;
}

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<Path> simulate_diffusions(const SimulationConfig& cfg) {
  cfg.validate();
  const auto N = static_cast<Eigen::Index>(cfg.N);
  const double dt = 1.0 / static_cast<double>(cfg.N - 1);
  const double stat_sd = cfg.theta_ou > 0.0 ? cfg.sigma_ou / std::sqrt(2.0 * cfg.theta_ou) : 0.0;
  const double fresh = std::sqrt(1.0 - cfg.rho_s * cfg.rho_s);

  // Row 0 drives the start, rows 1.. the increments.
  Eigen::Matrix<double, Eigen::Dynamic, 3> z(N, 3);
  Eigen::Matrix<double, Eigen::Dynamic, 3> prev(N, 3);
  std::vector<Path> paths;
  paths.reserve(cfg.n);
  for (std::size_t s = 0; s < cfg.n; ++s) {
    auto eng = stream_engine(cfg.seed, s);
    std::normal_distribution<double> normal;
    for (Eigen::Index j = 0; j < N; ++j) {
      for (int c = 0; c < 3; ++c) z(j, c) = normal(eng);
    }
    if (s > 0) z = cfg.rho_s * prev + fresh * z;
    prev = z;

    Path p(N, 3);
    p.row(0) = stat_sd * z.row(0);
    for (Eigen::Index j = 1; j < N; ++j) {
      p.row(j) = p.row(j - 1) * (1.0 - cfg.theta_ou * dt) + cfg.sigma_ou * std::sqrt(dt) * z.row(j);
    }
    paths.push_back(std::move(p));
  }
  return paths;
}

std::vector<Path> embed_unit_ball(std::vector<Path> paths) {
  for (Path& p : paths) {
    const double sup = p.rowwise().norm().maxCoeff();
    if (sup > 0.0) p /= sup * (1.0 + 1e-9);
  }
  return paths;
}

std::vector<ManifoldCurve> to_sphere(const std::vector<Path>& scaled, double kappa, const TimeGrid& grid) {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be > 0");
  const SpherePoint pole = SpherePoint::north_pole();
  const double r = kCapRadius / (1.0 + kappa);
  std::vector<ManifoldCurve> out;
  out.reserve(scaled.size());
  for (const Path& p : scaled) {
    if (static_cast<std::size_t>(p.rows()) != grid.size()) {
      throw GridMismatch(fmt::format("path has {} nodes, grid has {}", p.rows(), grid.size()));
    }
    std::vector<SpherePoint> pts;
    pts.reserve(grid.size());
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
      const Vec3 v = p.row(j).transpose();
      pts.push_back(exp_map(TangentVector(pole, Vec3(r * v.x(), r * v.y(), 0.0))));
    }
    out.emplace_back(grid, std::move(pts));
  }
  return out;
}

GeneratedResponses generate_responses(std::span<const ManifoldCurve> regressors, const SimulationConfig& cfg,
                                      const std::optional<EigenSystem>& basis) {
  cfg.validate();
  if (regressors.size() < 2) throw EmptySample("generate_responses needs at least 2 regressors");
  GeneratedResponses g;
  g.mu = std::make_shared<const ManifoldCurve>(frechet_curve_mean(regressors));
  const std::vector<TangentCurve> logs = log_map_sample(regressors, g.mu);
  if (basis) {
    if (!same_base(*basis->base, *g.mu)) throw GridMismatch("injected basis is not built over the regressor mean");
    g.basis = *basis;
  } else {
    g.basis = rfpca(empirical_covariance(logs), cfg.K_gen);
  }

  const std::vector<double> gam = cfg.slopes();
  const std::size_t K = std::min(g.basis.size(), gam.size());
  const auto n = static_cast<Eigen::Index>(regressors.size());
  g.regressor_scores.resize(n, static_cast<Eigen::Index>(g.basis.size()));
  g.noise = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(K));
  std::vector<std::size_t> comps(K);
  for (std::size_t k = 0; k < K; ++k) comps[k] = k;

  g.responses.reserve(regressors.size());
  g.clipped.reserve(regressors.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const ScoreVector xi = scores(logs[static_cast<std::size_t>(i)], g.basis);
    g.regressor_scores.row(i) = xi.values.transpose();
    auto eng = stream_engine(cfg.seed, static_cast<std::uint64_t>(i), 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    ScoreVector c{Eigen::VectorXd(static_cast<Eigen::Index>(K))};
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      g.noise(i, kk) = cfg.sigma_eps * normal(eng);
      c.values[kk] = gam[k] * xi.values[kk] + g.noise(i, kk);
    }
    NodeVectors v = reconstruct(c, g.basis, comps).vecs();
    std::vector<bool> clip(static_cast<std::size_t>(v.rows()), false);
    for (Eigen::Index j = 0; j < v.rows(); ++j) {
      const double nrm = v.row(j).norm();
      if (nrm > kResponseClip) {
        v.row(j) *= kResponseClip / nrm;
        clip[static_cast<std::size_t>(j)] = true;
        ++g.clipped_count;
      }
    }
    g.responses.push_back(exp_map_curve(TangentCurve(g.mu, std::move(v))));
    g.clipped.push_back(std::move(clip));
  }
  return g;
}

SimulatedDataset generate_dataset(const SimulationConfig& cfg) {
  cfg.validate();
  const TimeGrid grid = TimeGrid::uniform(cfg.N);
  std::vector<ManifoldCurve> regressors = to_sphere(embed_unit_ball(simulate_diffusions(cfg)), cfg.kappa, grid);
  GeneratedResponses truth = generate_responses(regressors, cfg);
  BivariateCurveSample sample{grid, std::move(regressors), truth.responses, {}};
  sample.sample_times.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) sample.sample_times[i] = static_cast<std::int64_t>(i);
  return {std::move(sample), std::move(truth)};
}

}  // namespace sfr
