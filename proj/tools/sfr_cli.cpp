// Command-line front end: simulate, make-fixture, ingest, predict, cv, summarize.

#include "sfr/errors.hpp"
#include "sfr/evaluation.hpp"
#include "sfr/extrinsic.hpp"
#include "sfr/intrinsic.hpp"
#include "sfr/io.hpp"
#include "sfr/simulation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using nlohmann::json;
using namespace sfr;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Numerical: return 4;
  }
  return 1;
}

// Flags shared by every command that simulates data. Only flags the user
// actually passed override the config file.
struct SimFlags {
  std::string config;
  std::optional<std::size_t> n, N, K_gen;
  std::optional<double> theta_ou, sigma_ou, rho_s, kappa, sigma_eps;
  std::optional<std::uint64_t> seed;
  std::vector<double> gamma;

  void add(CLI::App* app) {
    app->add_option("--config", config, "JSON file; its 'simulation' block (or the whole file) is the base config");
    app->add_option("--n", n, "Sample size");
    app->add_option("--N", N, "Nodes per curve");
    app->add_option("--theta-ou", theta_ou, "OU mean-reversion rate");
    app->add_option("--sigma-ou", sigma_ou, "OU diffusion scale");
    app->add_option("--rho-s", rho_s, "Cross-sample AR coefficient");
    app->add_option("--kappa", kappa, "Sphere-embedding concentration");
    app->add_option("--gamma", gamma, "Slope spectrum")->delimiter(',');
    app->add_option("--sigma-eps", sigma_eps, "Score noise scale");
    app->add_option("--K-gen", K_gen, "Generating basis size");
    app->add_option("--seed", seed, "Random seed");
  }

  SimulationConfig build() const {
    json j = json::object();
    if (!config.empty()) {
      const json file = read_json(config);
      j = file.contains("simulation") ? file.at("simulation") : file;
    }
    if (n) j["n"] = *n;
    if (N) j["N"] = *N;
    if (theta_ou) j["theta_ou"] = *theta_ou;
    if (sigma_ou) j["sigma_ou"] = *sigma_ou;
    if (rho_s) j["rho_s"] = *rho_s;
    if (kappa) j["kappa"] = *kappa;
    if (!gamma.empty()) j["gamma"] = gamma;
    if (sigma_eps) j["sigma_eps"] = *sigma_eps;
    if (K_gen) j["K_gen"] = *K_gen;
    if (seed) j["seed"] = *seed;
    return simulation_config_from_json(j);
  }
};

void write_dataset(const fs::path& dir, const BivariateCurveSample& sample, const json& meta) {
  fs::create_directories(dir);
  write_dataset_csv(dir / "dataset.csv", sample);
  write_json(dir / "dataset.json", meta);
}

int cmd_simulate(const SimFlags& flags, const fs::path& out) {
  const SimulationConfig cfg = flags.build();
  const SimulatedDataset ds = generate_dataset(cfg);
  write_dataset(out, ds.sample,
                {{"source", "simulation"},
                 {"config", to_json(cfg)},
                 {"vmf_interpretation", std::string(kVmfInterpretation)},
                 {"clipped_response_nodes", ds.truth.clipped_count}});
  write_eigensystem(out / "basis", ds.truth.basis);
  fmt::print("wrote {} curve pairs on {} nodes to {}\n", ds.sample.size(), ds.sample.grid.size(), out.string());
  return 0;
}

int cmd_fixture(const SimFlags& flags, const fs::path& out, double minutes) {
  const SimulationConfig cfg = flags.build();
  const SimulatedDataset ds = generate_dataset(cfg);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_magsat_fixture(out, ds.sample, minutes);
  fmt::print("wrote {} rows ({} curves x {} nodes) to {}\n", ds.sample.size() * ds.sample.grid.size(), ds.sample.size(),
             ds.sample.grid.size(), out.string());
  return 0;
}

int cmd_ingest(const fs::path& data, std::size_t nodes, const fs::path& out) {
  const IngestResult r = ingest_magsat_csv(data, nodes);
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
  write_dataset(out, r.sample,
                {{"source", data.string()},
                 {"polar_convention", std::string(kPolarConvention)},
                 {"nodes_per_curve", nodes},
                 {"dropped_rows", r.dropped_rows},
                 {"warnings", r.warnings}});
  fmt::print("ingested {} curve pairs on {} nodes\n", r.sample.size(), r.sample.grid.size());
  return 0;
}

struct PredictFlags {
  std::string dataset;
  std::string predictor = "NW";
  double bandwidth = 0.5;
  std::size_t target = 0;
  std::vector<std::size_t> components{1, 2, 3};
  std::string out = "prediction.csv";
  std::string basis_out;
};

int cmd_predict(const PredictFlags& f) {
  const BivariateCurveSample data = read_dataset_csv(f.dataset);
  if (f.target >= data.size()) {
    throw ConfigError(fmt::format("target {} outside the {}-curve dataset", f.target, data.size()));
  }
  std::vector<std::size_t> train_idx;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (i != f.target) train_idx.push_back(i);
  }
  const BivariateCurveSample train = data.subset(train_idx);
  const ManifoldCurve& x0 = data.regressors[f.target];
  const fs::path out(f.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());

  const PredictorKind kind = predictor_from_string(f.predictor);
  if (kind == PredictorKind::Extrinsic) {
    std::vector<std::size_t> comps;
    for (std::size_t c : f.components) {
      if (c == 0) throw ConfigError("components are 1-based");
      comps.push_back(c - 1);
    }
    const std::size_t K = *std::max_element(f.components.begin(), f.components.end());
    ExtrinsicModel model(train, pooled_basis(train, K), comps);
    const ExtrinsicPrediction p = model.predict(x0, BandwidthSpec{f.bandwidth});
    write_curve_csv(out, p.curve, p.clipped);
    if (!f.basis_out.empty()) write_eigensystem(f.basis_out, model.basis());
  } else {
    const IntrinsicKind ik = kind == PredictorKind::NW ? IntrinsicKind::NW : IntrinsicKind::LL;
    const CurvePrediction p = predict_curve(ik, train, x0, GeodesicKernel{f.bandwidth});
    write_curve_csv(out, p);
    if (p.interpolated > 0) fmt::print(stderr, "warning: {} node(s) interpolated\n", p.interpolated);
  }
  fmt::print("wrote {}\n", out.string());
  return 0;
}

struct CvFlags {
  std::string config;
  std::optional<std::string> mode, data_path, output_dir;
  std::vector<std::string> predictors;
  std::vector<double> bandwidths;
  std::optional<double> log_beta, power_beta;
  std::optional<std::size_t> folds, nodes_per_curve;
  std::vector<std::size_t> components;
  std::optional<std::uint64_t> seed;
};

int cmd_cv(const CvFlags& f) {
  json j = f.config.empty() ? json::object() : read_json(f.config);
  if (f.mode) j["mode"] = *f.mode;
  if (f.data_path) j["data_path"] = *f.data_path;
  if (f.output_dir) j["output_dir"] = *f.output_dir;
  if (!f.predictors.empty()) j["predictor"] = f.predictors;
  if (!f.bandwidths.empty()) j["bandwidths"] = f.bandwidths;
  if (f.log_beta) j["bandwidths"] = {{"model", "log"}, {"beta", *f.log_beta}};
  if (f.power_beta) j["bandwidths"] = {{"model", "power"}, {"beta", *f.power_beta}};
  if (f.folds) j["folds"] = *f.folds;
  if (f.nodes_per_curve) j["nodes_per_curve"] = *f.nodes_per_curve;
  if (!f.components.empty()) j["component_set"] = f.components;
  if (f.seed) j["seed"] = *f.seed;
  if (j.value("mode", "") == "simulate" && !j.contains("simulation")) j["simulation"] = json::object();

  const ExperimentConfig cfg = ExperimentConfig::from_json(j);
  const CVReport report = run_cv(cfg);
  write_report(cfg.output_dir, report);
  const Summary s = summarize(report);
  write_summary(cfg.output_dir / "summary", s);
  for (const BandwidthSummary& b : s.items) {
    if (b.evaluated == 0) {
      fmt::print("{} bw={:.6g}: all {} targets failed\n", to_string(b.kind), b.bandwidth, b.failed);
      continue;
    }
    const double lo = static_cast<double>(b.hist.mode_bin()) * b.hist.bin_width;
    fmt::print("{} bw={:.6g}: mode bin [{:.2f}, {:.2f}), sup {:.4g}, {} evaluated, {} failed\n", to_string(b.kind),
               b.bandwidth, lo, lo + b.hist.bin_width, b.sup_norm, b.evaluated, b.failed);
  }
  fmt::print("report written to {}\n", cfg.output_dir.string());
  return 0;
}

int cmd_summarize(const fs::path& report_dir, const std::string& out) {
  const CVReport r = read_report(report_dir);
  const fs::path dest = out.empty() ? report_dir / "summary" : fs::path(out);
  write_summary(dest, summarize(r));
  fmt::print("summary written to {}\n", dest.string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local Fréchet curve regression on the sphere"};
  app.require_subcommand(1);

  SimFlags sim_flags;
  std::string sim_out = "sim";
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic bivariate curve sample");
  sim_flags.add(simulate);
  simulate->add_option("--out", sim_out, "Output directory");

  SimFlags fix_flags;
  std::string fix_out = "fixture.csv";
  double fix_minutes = 50.0;
  auto* fixture = app.add_subcommand("make-fixture", "Write a MAGSAT-shaped CSV from simulated curves");
  fix_flags.add(fixture);
  fixture->add_option("--out", fix_out, "Output CSV");
  fixture->add_option("--curve-minutes", fix_minutes, "Duration of one curve in minutes");

  std::string ingest_data;
  std::size_t ingest_nodes = 0;
  std::string ingest_out = "ingested";
  auto* ingest = app.add_subcommand("ingest", "Convert a MAGSAT-style CSV into curve pairs");
  ingest->add_option("--data", ingest_data, "Input CSV")->required();
  ingest->add_option("--nodes-per-curve", ingest_nodes, "Rows per curve")->required();
  ingest->add_option("--out", ingest_out, "Output directory");

  PredictFlags pf;
  auto* predict = app.add_subcommand("predict", "Predict one response curve, leaving its pair out of training");
  predict->add_option("--dataset", pf.dataset, "dataset.csv")->required();
  predict->add_option("--predictor", pf.predictor, "NW, LL or EXTRINSIC");
  predict->add_option("--bandwidth", pf.bandwidth, "Kernel bandwidth");
  predict->add_option("--target", pf.target, "Index of the curve pair whose regressor is x0");
  predict->add_option("--components", pf.components, "1-based components (EXTRINSIC)")->delimiter(',');
  predict->add_option("--out", pf.out, "Output CSV");
  predict->add_option("--basis-out", pf.basis_out, "Directory for the fitted basis (EXTRINSIC)");

  CvFlags cf;
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation");
  cv->add_option("--config", cf.config, "Experiment config (JSON)");
  cv->add_option("--mode", cf.mode, "simulate or ingest");
  cv->add_option("--data-path", cf.data_path, "Input CSV for ingest mode");
  cv->add_option("--output-dir", cf.output_dir, "Report directory");
  cv->add_option("--predictor", cf.predictors, "NW, LL, EXTRINSIC")->delimiter(',');
  auto* bw_list = cv->add_option("--bandwidths", cf.bandwidths, "Bandwidth list")->delimiter(',');
  auto* bw_log = cv->add_option("--log-beta", cf.log_beta, "Bandwidth (ln n)^(-1/beta)");
  auto* bw_pow = cv->add_option("--power-beta", cf.power_beta, "Bandwidth n^(-beta)");
  bw_list->excludes(bw_log)->excludes(bw_pow);
  bw_log->excludes(bw_pow);
  cv->add_option("--folds", cf.folds, "Number of folds");
  cv->add_option("--nodes-per-curve", cf.nodes_per_curve, "Rows per curve (ingest mode)");
  cv->add_option("--components", cf.components, "1-based components (EXTRINSIC)")->delimiter(',');
  cv->add_option("--seed", cf.seed, "Fold seed");

  std::string report_dir;
  std::string summary_out;
  auto* summarize_cmd = app.add_subcommand("summarize", "Histogram, temporal means and sup norms of a CV report");
  summarize_cmd->add_option("--report", report_dir, "Report directory")->required();
  summarize_cmd->add_option("--out", summary_out, "Summary directory (default <report>/summary)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return cmd_simulate(sim_flags, sim_out);
    if (*fixture) return cmd_fixture(fix_flags, fix_out, fix_minutes);
    if (*ingest) return cmd_ingest(ingest_data, ingest_nodes, ingest_out);
    if (*predict) return cmd_predict(pf);
    if (*cv) return cmd_cv(cf);
    if (*summarize_cmd) return cmd_summarize(report_dir, summary_out);
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 2;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
  return 0;
}
