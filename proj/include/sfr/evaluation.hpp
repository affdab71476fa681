#pragma once

#include "sfr/extrinsic.hpp"
#include "sfr/intrinsic.hpp"
#include "sfr/io.hpp"
#include "sfr/simulation.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sfr {

// ---------------------------------------------------------------------------
// MAGSAT-style ingestion

struct MagsatRecord {
  double time = 0.0;
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  /// Field direction: polar angle measured from north (colatitude) and azimuth.
  double b_theta_deg = 0.0;
  double b_phi_deg = 0.0;
};

inline constexpr std::string_view kPolarConvention = "colatitude-from-north";

/// Header time,lat_deg,lon_deg,b_theta_deg,b_phi_deg. Throws EmptyFile,
/// MalformedRow, NonMonotoneTime (with the offending line number).
std::vector<MagsatRecord> read_magsat_csv(const fs::path& path);

struct IngestResult {
  BivariateCurveSample sample;
  std::size_t dropped_rows = 0;
  std::vector<std::string> warnings;
};

/// Consecutive blocks of nodes_per_curve rows form one curve pair. Every block
/// must rescale to the grid of the first block (within 1e-9).
IngestResult ingest_magsat_csv(const fs::path& path, std::size_t nodes_per_curve);

/// Writes a sample in the ingest format (time in seconds). Curve i occupies
/// [i, i + 1) * curve_minutes minutes, its nodes placed like the sample grid.
void write_magsat_fixture(const fs::path& path, const BivariateCurveSample& sample, double curve_minutes = 50.0);

// ---------------------------------------------------------------------------
// Cross-validation building blocks

/// Seeded shuffle of 0..n-1 cut into k contiguous folds; the first n % k folds
/// hold one extra index. Throws InvalidFoldCount unless 2 <= k <= n.
std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

/// Node-wise geodesic distance, or its square. Throws GridMismatch.
std::vector<double> angular_error_curve(const ManifoldCurve& pred, const ManifoldCurve& truth, bool squared = false);

/// ||log_mu(pred) - log_mu(truth)||_H^2.
double tangent_cv_error(const ManifoldCurve& pred, const ManifoldCurve& truth,
                        std::shared_ptr<const ManifoldCurve> mu, const EigenSystem& basis);
/// Squared score differences <log_mu(pred) - log_mu(truth), phi_k>^2 for the given components.
Eigen::VectorXd tangent_component_errors(const ManifoldCurve& pred, const ManifoldCurve& truth,
                                         std::shared_ptr<const ManifoldCurve> mu, const EigenSystem& basis,
                                         std::span<const std::size_t> components);

// ---------------------------------------------------------------------------
// Experiment configuration

enum class PredictorKind { NW, LL, Extrinsic };
std::string_view to_string(PredictorKind k);
PredictorKind predictor_from_string(std::string_view s);

struct BandwidthPlan {
  enum class Kind { List, LogModel, PowerModel };
  Kind kind = Kind::List;
  /// Bandwidths for List, beta values for the models.
  std::vector<double> values;

  /// Log model: n = number of curves. Power model: n = curves * curve_minutes.
  std::vector<double> resolve(std::size_t curves, double curve_minutes) const;
};

struct ExperimentConfig {
  enum class Mode { Simulate, Ingest };
  Mode mode = Mode::Simulate;
  std::vector<PredictorKind> predictors{PredictorKind::NW};
  BandwidthPlan bandwidths;
  std::size_t folds = 5;
  /// 1-based basis components (extrinsic only).
  std::vector<std::size_t> component_set{1, 2, 3};
  std::optional<SimulationConfig> simulation;
  std::optional<fs::path> data_path;
  std::size_t nodes_per_curve = 0;
  double curve_minutes = 50.0;
  fs::path output_dir = "out";
  std::uint64_t seed = 0;
  SolverOptions solver;

  /// Throws ConfigError.
  void validate() const;
  /// Rejects unknown keys and wrong types before building the config.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

SimulationConfig simulation_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimulationConfig& cfg);

// ---------------------------------------------------------------------------
// Reports

struct CVEntry {
  std::size_t fold = 0;
  std::size_t bandwidth_index = 0;
  std::size_t target = 0;
  std::int64_t sample_time = 0;
  bool failed = false;
  std::string failure;  // "<ErrorType>: message"
  /// Absolute angular error per node; empty when failed.
  std::vector<double> errors;
  /// "ok", "interpolated" or "clipped" per node.
  std::vector<std::string> status;
  /// Extrinsic only.
  double tangent_error = 0.0;
  Eigen::VectorXd component_errors;
};

struct PredictorRun {
  PredictorKind kind = PredictorKind::NW;
  /// Sorted by (fold, bandwidth_index, target).
  std::vector<CVEntry> entries;
  /// Extrinsic only: rows per bandwidth, one column per component then the row mean.
  Eigen::MatrixXd table;
};

struct CVReport {
  nlohmann::json config;
  TimeGrid grid = TimeGrid::uniform(2);
  std::size_t n = 0;
  std::vector<double> bandwidths;
  std::vector<std::size_t> component_set;  // 1-based
  std::vector<PredictorRun> runs;
  nlohmann::json data_info;
};

/// Loads or simulates the configured data set.
BivariateCurveSample load_experiment_data(const ExperimentConfig& cfg, nlohmann::json* info = nullptr);

/// Runs k-fold CV for every configured predictor on `data`. Prediction
/// failures are recorded per entry and do not abort the run.
CVReport run_cv(const ExperimentConfig& cfg, const BivariateCurveSample& data);
CVReport run_cv(const ExperimentConfig& cfg);

/// Writes metadata.json, errors_<P>_bw<i>.csv, failures_<P>.csv and, for the
/// extrinsic predictor, tangent_errors_EXTRINSIC.csv and table1.csv.
void write_report(const fs::path& dir, const CVReport& report);
CVReport read_report(const fs::path& dir);

struct Histogram {
  double bin_width = 0.05;
  /// counts[b] covers [b * bin_width, (b + 1) * bin_width).
  std::vector<std::size_t> counts;
  /// Lowest-index bin with the largest count.
  std::size_t mode_bin() const;
};

Histogram histogram(std::span<const double> values, double bin_width = 0.05);

struct BandwidthSummary {
  PredictorKind kind = PredictorKind::NW;
  std::size_t bandwidth_index = 0;
  double bandwidth = 0.0;
  /// Per node: mean squared geodesic error over all evaluated targets.
  std::vector<double> node_means;
  Histogram hist;
  /// Per evaluated target (ascending): mean squared error over nodes.
  std::vector<std::size_t> targets;
  std::vector<double> temporal_means;
  /// max over nodes of node_means.
  double sup_norm = 0.0;
  std::size_t evaluated = 0;
  std::size_t failed = 0;
};

struct Summary {
  std::vector<BandwidthSummary> items;
};

/// Throws EmptyReport when no entry holds an error curve.
Summary summarize(const CVReport& report);
/// histogram_<P>_bw<i>.csv, temporal_means_<P>_bw<i>.csv, node_means_<P>_bw<i>.csv, sup_norms.csv.
void write_summary(const fs::path& dir, const Summary& summary);

}  // namespace sfr
