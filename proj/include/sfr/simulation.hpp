#pragma once

#include "sfr/frechet.hpp"
#include "sfr/sample.hpp"
#include "sfr/tangent_space.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

namespace sfr {

/// Identifies the sphere embedding used by to_sphere; written to dataset metadata.
inline constexpr std::string_view kVmfInterpretation = "radial-cap-embedding";

struct SimulationConfig {
  std::size_t n = 100;
  std::size_t N = 1000;
  double theta_ou = 2.0;
  double sigma_ou = 1.0;
  double rho_s = 0.3;
  double kappa = 2.0;
  /// Diagonal slope spectrum. Empty means 0.5^k for k = 1..K_gen.
  std::vector<double> gamma;
  double sigma_eps = 0.14;
  std::size_t K_gen = 5;
  std::uint64_t seed = 42;

  void validate() const;
  /// gamma, or the geometric default.
  std::vector<double> slopes() const;
};

/// N x 3 path of a vector diffusion on the grid.
using Path = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// Engine for stream `stream` of sample `index`. Independent of how many
/// other streams are drawn.
std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t index, std::uint64_t stream = 0);

/// dV = -theta V dt + sigma dW by Euler-Maruyama on a uniform grid of N nodes
/// over [0, 1], started from N(0, sigma^2 / (2 theta)) (from 0 when theta = 0).
/// The Gaussian increments of sample s are rho_s * (those of s - 1) +
/// sqrt(1 - rho_s^2) * fresh draws.
std::vector<Path> simulate_diffusions(const SimulationConfig& cfg);

/// Each path divided by its sup norm times (1 + 1e-9). Zero paths stay zero.
std::vector<Path> embed_unit_ball(std::vector<Path> paths);

/// exp at the north pole of (pi - 0.1) / (1 + kappa) times the projection of
/// v(t) on the pole's tangent plane.
std::vector<ManifoldCurve> to_sphere(const std::vector<Path>& scaled, double kappa, const TimeGrid& grid);

struct GeneratedResponses {
  std::vector<ManifoldCurve> responses;
  std::shared_ptr<const ManifoldCurve> mu;
  EigenSystem basis;
  /// Regressor scores on `basis` (n x K) and the noise added to them.
  Eigen::MatrixXd regressor_scores;
  Eigen::MatrixXd noise;
  /// Per sample, per node: tangent norm clipped to pi - 0.1.
  std::vector<std::vector<bool>> clipped;
  std::size_t clipped_count = 0;
};

/// Y_i = exp_mu(sum_k (gamma_k xi_ik + eps_ik) phi_k) with mu the Fréchet mean
/// curve of the regressors and phi the regressors' RFPCA basis (or `basis`
/// when given, which must be built over mu).
GeneratedResponses generate_responses(std::span<const ManifoldCurve> regressors, const SimulationConfig& cfg,
                                      const std::optional<EigenSystem>& basis = std::nullopt);

struct SimulatedDataset {
  BivariateCurveSample sample;
  GeneratedResponses truth;
};

SimulatedDataset generate_dataset(const SimulationConfig& cfg);

}  // namespace sfr
