#include "sfr/evaluation.hpp"

#include "sfr/errors.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <fmt/os.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>

namespace sfr {

namespace {

using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::string error_label(const std::exception& e) {
  const char* name = "Error";
  if (dynamic_cast<const EmptyWindow*>(&e)) name = "EmptyWindow";
  else if (dynamic_cast<const DegenerateWindow*>(&e)) name = "DegenerateWindow";
  else if (dynamic_cast<const AllNodesFailed*>(&e)) name = "AllNodesFailed";
  else if (dynamic_cast<const AntipodalPoints*>(&e)) name = "AntipodalPoints";
  else if (dynamic_cast<const NonConvergence*>(&e)) name = "NonConvergence";
  else if (dynamic_cast<const DegenerateWeights*>(&e)) name = "DegenerateWeights";
  else if (dynamic_cast<const DegenerateSpectrum*>(&e)) name = "DegenerateSpectrum";
  else if (dynamic_cast<const EmptySample*>(&e)) name = "EmptySample";
  else if (dynamic_cast<const InvalidArgument*>(&e)) name = "InvalidArgument";
  return fmt::format("{}: {}", name, e.what());
}

// --- json schema helpers ---------------------------------------------------

void check_keys(const json& j, const std::set<std::string>& allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(fmt::format("{} must be an object", where));
  for (const auto& [key, _] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError(fmt::format("{}: unknown key '{}'", where, key));
  }
}

double get_number(const json& j, const std::string& key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("{}.{} must be a number", where, key));
  return v.get<double>();
}

std::uint64_t get_count(const json& j, const std::string& key, std::string_view where) {
  const json& v = j.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ConfigError(fmt::format("{}.{} must be a nonnegative integer", where, key));
  }
  return v.get<std::uint64_t>();
}

std::vector<double> get_numbers(const json& v, std::string_view where) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw ConfigError(fmt::format("{} must be a number or a nonempty list", where));
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw ConfigError(fmt::format("{} must hold numbers only", where));
    out.push_back(e.get<double>());
  }
  return out;
}

std::string file_tag(PredictorKind k, std::size_t bw_index) { return fmt::format("{}_bw{}", to_string(k), bw_index); }

}  // namespace

// ---------------------------------------------------------------------------
// Ingestion

std::vector<MagsatRecord> read_magsat_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw EmptyFile(fmt::format("cannot read {}", path.string()));
  std::string line;
  if (!std::getline(in, line)) throw EmptyFile(fmt::format("{} is empty", path.string()));
  const auto header = split_csv(line);
  const std::vector<std::string_view> expected{"time", "lat_deg", "lon_deg", "b_theta_deg", "b_phi_deg"};
  if (header != expected) throw MalformedRow(fmt::format("line 1: unexpected header '{}'", line));

  std::vector<MagsatRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw MalformedRow(fmt::format("line {}: expected 5 fields, found {}", line_no, f.size()));
    MagsatRecord r{parse_double(f[0], line_no), parse_double(f[1], line_no), parse_double(f[2], line_no),
                   parse_double(f[3], line_no), parse_double(f[4], line_no)};
    if (!(r.lat_deg >= -90.0 && r.lat_deg <= 90.0)) {
      throw MalformedRow(fmt::format("line {}: latitude {} outside [-90, 90]", line_no, r.lat_deg));
    }
    if (!(r.lon_deg >= -180.0 && r.lon_deg <= 180.0)) {
      throw MalformedRow(fmt::format("line {}: longitude {} outside [-180, 180]", line_no, r.lon_deg));
    }
    if (!(r.b_theta_deg >= 0.0 && r.b_theta_deg <= 180.0)) {
      throw MalformedRow(fmt::format("line {}: polar angle {} outside [0, 180]", line_no, r.b_theta_deg));
    }
    if (!std::isfinite(r.time) || !std::isfinite(r.b_phi_deg)) {
      throw MalformedRow(fmt::format("line {}: non-finite value", line_no));
    }
    if (!out.empty() && !(r.time > out.back().time)) {
      throw NonMonotoneTime(fmt::format("line {}: time {} does not increase", line_no, r.time));
    }
    out.push_back(r);
  }
  if (out.empty()) throw EmptyFile(fmt::format("{} has no data rows", path.string()));
  return out;
}

IngestResult ingest_magsat_csv(const fs::path& path, std::size_t nodes_per_curve) {
  if (nodes_per_curve < 2) throw InvalidArgument("nodes_per_curve must be >= 2");
  const std::vector<MagsatRecord> rec = read_magsat_csv(path);
  const std::size_t curves = rec.size() / nodes_per_curve;
  IngestResult out{{TimeGrid::uniform(2), {}, {}, {}}, rec.size() % nodes_per_curve, {}};
  if (curves == 0) {
    throw EmptyFile(fmt::format("{} holds {} rows, fewer than one curve of {} nodes", path.string(), rec.size(),
                                nodes_per_curve));
  }
  if (out.dropped_rows > 0) {
    out.warnings.push_back(fmt::format("dropped trailing partial block of {} rows", out.dropped_rows));
  }

  std::vector<double> times(nodes_per_curve);
  for (std::size_t c = 0; c < curves; ++c) {
    const std::size_t first = c * nodes_per_curve;
    for (std::size_t j = 0; j < nodes_per_curve; ++j) times[j] = rec[first + j].time;
    const TimeGrid g = TimeGrid::rescaled(times);
    if (c == 0) {
      out.sample.grid = g;
    } else {
      for (std::size_t j = 0; j < nodes_per_curve; ++j) {
        if (std::abs(g[j] - out.sample.grid[j]) > 1e-9) {
          throw GridMismatch(fmt::format("curve {} (line {}) is not sampled like the first curve", c, first + j + 2));
        }
      }
    }
    std::vector<SpherePoint> x;
    std::vector<SpherePoint> y;
    x.reserve(nodes_per_curve);
    y.reserve(nodes_per_curve);
    for (std::size_t j = 0; j < nodes_per_curve; ++j) {
      const MagsatRecord& r = rec[first + j];
      x.push_back(SpherePoint::from_lat_lon_deg(r.lat_deg, r.lon_deg));
      y.push_back(SpherePoint::from_colatitude_azimuth_deg(r.b_theta_deg, r.b_phi_deg));
    }
    out.sample.regressors.emplace_back(out.sample.grid, std::move(x));
    out.sample.responses.emplace_back(out.sample.grid, std::move(y));
    out.sample.sample_times.push_back(static_cast<std::int64_t>(c));
  }
  return out;
}

void write_magsat_fixture(const fs::path& path, const BivariateCurveSample& sample, double curve_minutes) {
  sample.validate();
  auto out = fmt::output_file(path.string());
  out.print("time,lat_deg,lon_deg,b_theta_deg,b_phi_deg\n");
  const double span = curve_minutes * 60.0;
  const double step = span / static_cast<double>(sample.grid.size());
  constexpr double deg = 180.0 / std::numbers::pi;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = 0; j < sample.grid.size(); ++j) {
      const Vec3& x = sample.regressors[i][j].coords();
      const Vec3& y = sample.responses[i][j].coords();
      const double t = static_cast<double>(i) * span + sample.grid[j] * (span - step);
      out.print("{},{},{},{},{}\n", t, std::atan2(x.z(), std::hypot(x.x(), x.y())) * deg,
                std::atan2(x.y(), x.x()) * deg, std::atan2(std::hypot(y.x(), y.y()), y.z()) * deg,
                std::atan2(y.y(), y.x()) * deg);
    }
  }
}

// ---------------------------------------------------------------------------
// CV building blocks

std::vector<std::vector<std::size_t>> kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || k > n) throw InvalidFoldCount(fmt::format("cannot split {} samples into {} folds", n, k));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 eng(seed);
  std::shuffle(idx.begin(), idx.end(), eng);
  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = n / k + (f < n % k ? 1 : 0);
    folds[f].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos), idx.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

std::vector<double> angular_error_curve(const ManifoldCurve& pred, const ManifoldCurve& truth, bool squared) {
  if (!(pred.grid() == truth.grid())) throw GridMismatch("angular_error_curve: curves are on different grids");
  std::vector<double> e(pred.size());
  for (std::size_t j = 0; j < pred.size(); ++j) {
    const double d = geodesic_distance(pred[j], truth[j]);
    e[j] = squared ? d * d : d;
  }
  return e;
}

double tangent_cv_error(const ManifoldCurve& pred, const ManifoldCurve& truth, std::shared_ptr<const ManifoldCurve> mu,
                        const EigenSystem& basis) {
  if (!(basis.grid() == mu->grid())) throw GridMismatch("tangent_cv_error: basis and mu grids differ");
  const TangentCurve a = log_map_curve(pred, mu);
  const TangentCurve b = log_map_curve(truth, mu);
  const TangentCurve diff(mu, a.vecs() - b.vecs());
  const double h = norm_H(diff);
  return h * h;
}

Eigen::VectorXd tangent_component_errors(const ManifoldCurve& pred, const ManifoldCurve& truth,
                                         std::shared_ptr<const ManifoldCurve> mu, const EigenSystem& basis,
                                         std::span<const std::size_t> components) {
  const TangentCurve a = log_map_curve(pred, mu);
  const TangentCurve b = log_map_curve(truth, mu);
  const Eigen::VectorXd d = scores(TangentCurve(mu, a.vecs() - b.vecs()), basis).values;
  Eigen::VectorXd out(static_cast<Eigen::Index>(components.size()));
  for (std::size_t c = 0; c < components.size(); ++c) {
    if (components[c] >= basis.size()) throw InvalidArgument(fmt::format("component {} outside the basis", components[c]));
    const double s = d[static_cast<Eigen::Index>(components[c])];
    out[static_cast<Eigen::Index>(c)] = s * s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Configuration

std::string_view to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::NW: return "NW";
    case PredictorKind::LL: return "LL";
    case PredictorKind::Extrinsic: return "EXTRINSIC";
  }
  return "?";
}

PredictorKind predictor_from_string(std::string_view s) {
  if (s == "NW") return PredictorKind::NW;
  if (s == "LL") return PredictorKind::LL;
  if (s == "EXTRINSIC") return PredictorKind::Extrinsic;
  throw ConfigError(fmt::format("unknown predictor '{}' (expected NW, LL or EXTRINSIC)", s));
}

std::vector<double> BandwidthPlan::resolve(std::size_t curves, double curve_minutes) const {
  std::vector<double> out;
  for (double v : values) {
    switch (kind) {
      case Kind::List: out.push_back(v); break;
      case Kind::LogModel: out.push_back(bandwidth_from_log_model(static_cast<double>(curves), v)); break;
      case Kind::PowerModel:
        out.push_back(bandwidth_from_power_model(static_cast<double>(curves) * curve_minutes, v));
        break;
    }
  }
  return out;
}

SimulationConfig simulation_config_from_json(const json& j) {
  check_keys(j, {"n", "N", "theta_ou", "sigma_ou", "rho_s", "kappa", "gamma", "sigma_eps", "K_gen", "seed"},
             "simulation");
  SimulationConfig c;
  if (j.contains("n")) c.n = get_count(j, "n", "simulation");
  if (j.contains("N")) c.N = get_count(j, "N", "simulation");
  if (j.contains("theta_ou")) c.theta_ou = get_number(j, "theta_ou", "simulation");
  if (j.contains("sigma_ou")) c.sigma_ou = get_number(j, "sigma_ou", "simulation");
  if (j.contains("rho_s")) c.rho_s = get_number(j, "rho_s", "simulation");
  if (j.contains("kappa")) c.kappa = get_number(j, "kappa", "simulation");
  if (j.contains("sigma_eps")) c.sigma_eps = get_number(j, "sigma_eps", "simulation");
  if (j.contains("K_gen")) c.K_gen = get_count(j, "K_gen", "simulation");
  if (j.contains("seed")) c.seed = get_count(j, "seed", "simulation");
  if (j.contains("gamma")) c.gamma = get_numbers(j.at("gamma"), "simulation.gamma");
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("simulation: {}", e.what()));
  }
  return c;
}

json to_json(const SimulationConfig& c) {
  return {{"n", c.n}, {"N", c.N}, {"theta_ou", c.theta_ou}, {"sigma_ou", c.sigma_ou}, {"rho_s", c.rho_s},
          {"kappa", c.kappa}, {"gamma", c.slopes()}, {"sigma_eps", c.sigma_eps}, {"K_gen", c.K_gen},
          {"seed", c.seed}};
}

void ExperimentConfig::validate() const {
  if (mode == Mode::Simulate && (!simulation || data_path)) {
    throw ConfigError("mode 'simulate' needs a simulation block and no data_path");
  }
  if (mode == Mode::Ingest && (simulation || !data_path)) {
    throw ConfigError("mode 'ingest' needs a data_path and no simulation block");
  }
  if (mode == Mode::Ingest && nodes_per_curve < 2) throw ConfigError("nodes_per_curve must be >= 2 for ingest");
  if (predictors.empty()) throw ConfigError("no predictor given");
  if (folds < 2) throw ConfigError(fmt::format("folds must be >= 2, got {}", folds));
  if (bandwidths.values.empty()) throw ConfigError("no bandwidths given");
  for (double v : bandwidths.values) {
    const bool ok = bandwidths.kind == BandwidthPlan::Kind::PowerModel ? (v > 0.0 && v < 1.0) : (v > 0.0 && std::isfinite(v));
    if (!ok) throw ConfigError(fmt::format("invalid bandwidth entry {}", v));
  }
  if (component_set.empty()) throw ConfigError("component_set is empty");
  for (std::size_t c : component_set) {
    if (c == 0) throw ConfigError("component_set indices are 1-based");
  }
  if (!(curve_minutes > 0.0)) throw ConfigError("curve_minutes must be > 0");
  try {
    solver.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("solver: {}", e.what()));
  }
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j, {"mode", "predictor", "bandwidths", "folds", "component_set", "simulation", "data_path",
                 "nodes_per_curve", "curve_minutes", "output_dir", "seed", "solver"},
             "config");
  for (const char* key : {"mode", "predictor", "bandwidths"}) {
    if (!j.contains(key)) throw ConfigError(fmt::format("config: missing required key '{}'", key));
  }
  ExperimentConfig c;
  const json& mode = j.at("mode");
  if (mode == "simulate") c.mode = Mode::Simulate;
  else if (mode == "ingest") c.mode = Mode::Ingest;
  else throw ConfigError("config.mode must be 'simulate' or 'ingest'");

  const json& pred = j.at("predictor");
  c.predictors.clear();
  if (pred.is_string()) {
    c.predictors.push_back(predictor_from_string(pred.get<std::string>()));
  } else if (pred.is_array() && !pred.empty()) {
    for (const json& p : pred) {
      if (!p.is_string()) throw ConfigError("config.predictor entries must be strings");
      c.predictors.push_back(predictor_from_string(p.get<std::string>()));
    }
  } else {
    throw ConfigError("config.predictor must be a string or a nonempty list of strings");
  }

  const json& bw = j.at("bandwidths");
  if (bw.is_object()) {
    check_keys(bw, {"model", "beta"}, "bandwidths");
    if (!bw.contains("model") || !bw.contains("beta")) throw ConfigError("bandwidths needs 'model' and 'beta'");
    if (bw.at("model") == "log") c.bandwidths.kind = BandwidthPlan::Kind::LogModel;
    else if (bw.at("model") == "power") c.bandwidths.kind = BandwidthPlan::Kind::PowerModel;
    else throw ConfigError("bandwidths.model must be 'log' or 'power'");
    c.bandwidths.values = get_numbers(bw.at("beta"), "bandwidths.beta");
  } else {
    c.bandwidths.kind = BandwidthPlan::Kind::List;
    c.bandwidths.values = get_numbers(bw, "bandwidths");
  }

  if (j.contains("folds")) c.folds = get_count(j, "folds", "config");
  if (j.contains("component_set")) {
    const json& cs = j.at("component_set");
    if (!cs.is_array()) throw ConfigError("config.component_set must be a list");
    c.component_set.clear();
    for (const json& e : cs) {
      if (!e.is_number_integer() || e.get<long long>() < 1) throw ConfigError("component_set entries must be integers >= 1");
      c.component_set.push_back(e.get<std::size_t>());
    }
  }
  if (j.contains("simulation")) c.simulation = simulation_config_from_json(j.at("simulation"));
  if (j.contains("data_path")) {
    if (!j.at("data_path").is_string()) throw ConfigError("config.data_path must be a string");
    c.data_path = j.at("data_path").get<std::string>();
  }
  if (j.contains("nodes_per_curve")) c.nodes_per_curve = get_count(j, "nodes_per_curve", "config");
  if (j.contains("curve_minutes")) c.curve_minutes = get_number(j, "curve_minutes", "config");
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("config.output_dir must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  if (j.contains("seed")) c.seed = get_count(j, "seed", "config");
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, {"max_iters", "step_tol", "grid_level", "retries"}, "solver");
    if (s.contains("max_iters")) c.solver.max_iters = static_cast<int>(get_count(s, "max_iters", "solver"));
    if (s.contains("step_tol")) c.solver.step_tol = get_number(s, "step_tol", "solver");
    if (s.contains("grid_level")) c.solver.grid_level = static_cast<int>(get_count(s, "grid_level", "solver"));
    if (s.contains("retries")) c.solver.retries = static_cast<int>(get_count(s, "retries", "solver"));
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["mode"] = mode == Mode::Simulate ? "simulate" : "ingest";
  json preds = json::array();
  for (PredictorKind p : predictors) preds.push_back(std::string(sfr::to_string(p)));
  j["predictor"] = preds;
  if (bandwidths.kind == BandwidthPlan::Kind::List) {
    j["bandwidths"] = bandwidths.values;
  } else {
    j["bandwidths"] = {{"model", bandwidths.kind == BandwidthPlan::Kind::LogModel ? "log" : "power"},
                       {"beta", bandwidths.values}};
  }
  j["folds"] = folds;
  j["component_set"] = component_set;
  if (simulation) j["simulation"] = sfr::to_json(*simulation);
  if (data_path) j["data_path"] = data_path->string();
  j["nodes_per_curve"] = nodes_per_curve;
  j["curve_minutes"] = curve_minutes;
  j["output_dir"] = output_dir.string();
  j["seed"] = seed;
  j["solver"] = {{"max_iters", solver.max_iters}, {"step_tol", solver.step_tol},
                 {"grid_level", solver.grid_level}, {"retries", solver.retries}};
  return j;
}

// ---------------------------------------------------------------------------
// Cross-validation

BivariateCurveSample load_experiment_data(const ExperimentConfig& cfg, json* info) {
  cfg.validate();
  if (cfg.mode == ExperimentConfig::Mode::Simulate) {
    SimulatedDataset ds = generate_dataset(*cfg.simulation);
    if (info) {
      *info = {{"source", "simulation"},
               {"vmf_interpretation", std::string(kVmfInterpretation)},
               {"clipped_response_nodes", ds.truth.clipped_count}};
    }
    return std::move(ds.sample);
  }
  IngestResult r = ingest_magsat_csv(*cfg.data_path, cfg.nodes_per_curve);
  if (info) {
    *info = {{"source", cfg.data_path->string()},
             {"polar_convention", std::string(kPolarConvention)},
             {"dropped_rows", r.dropped_rows},
             {"warnings", r.warnings}};
  }
  return std::move(r.sample);
}

namespace {

void run_intrinsic(PredictorKind kind, const ExperimentConfig& cfg, const BivariateCurveSample& data,
                   const BivariateCurveSample& train, std::size_t fold, std::span<const std::size_t> targets,
                   const std::vector<double>& bws, std::vector<CVEntry>& out) {
  const IntrinsicKind ik = kind == PredictorKind::NW ? IntrinsicKind::NW : IntrinsicKind::LL;
  for (std::size_t b = 0; b < bws.size(); ++b) {
    for (std::size_t t : targets) {
      CVEntry e{fold, b, t, data.sample_times[t], false, {}, {}, {}, 0.0, {}};
      try {
        const CurvePrediction p = predict_curve(ik, train, data.regressors[t], GeodesicKernel{bws[b]}, cfg.solver);
        e.errors = angular_error_curve(p.curve, data.responses[t]);
        e.status.reserve(p.status.size());
        for (NodeStatus s : p.status) e.status.emplace_back(to_string(s));
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::Config) throw;
        e.failed = true;
        e.failure = error_label(err);
      }
      out.push_back(std::move(e));
    }
  }
}

void run_extrinsic(const ExperimentConfig& cfg, const BivariateCurveSample& data, const BivariateCurveSample& train,
                   std::size_t fold, std::span<const std::size_t> targets, const std::vector<double>& bws,
                   std::vector<CVEntry>& out) {
  std::vector<std::size_t> comps;
  for (std::size_t c : cfg.component_set) comps.push_back(c - 1);
  const std::size_t K = *std::max_element(cfg.component_set.begin(), cfg.component_set.end());

  std::optional<ExtrinsicModel> model;
  std::shared_ptr<const ManifoldCurve> mu;
  std::string fold_failure;
  try {
    EigenSystem basis = pooled_basis(train, K, cfg.solver);
    mu = basis.base;
    model.emplace(train, std::move(basis), comps);
  } catch (const Error& err) {
    if (err.kind() == ErrorKind::Config) throw;
    fold_failure = error_label(err);
  }

  for (std::size_t b = 0; b < bws.size(); ++b) {
    for (std::size_t t : targets) {
      CVEntry e{fold, b, t, data.sample_times[t], false, {}, {}, {}, 0.0, {}};
      if (!model) {
        e.failed = true;
        e.failure = fold_failure;
        out.push_back(std::move(e));
        continue;
      }
      try {
        const ExtrinsicPrediction p = model->predict(data.regressors[t], BandwidthSpec{bws[b]});
        e.tangent_error = tangent_cv_error(p.curve, data.responses[t], mu, model->basis());
        e.component_errors = tangent_component_errors(p.curve, data.responses[t], mu, model->basis(), comps);
        e.errors = angular_error_curve(p.curve, data.responses[t]);
        e.status.reserve(p.clipped.size());
        for (bool c : p.clipped) e.status.emplace_back(c ? "clipped" : "ok");
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::Config) throw;
        e.failed = true;
        e.failure = error_label(err);
        e.errors.clear();
        e.status.clear();
      }
      out.push_back(std::move(e));
    }
  }
}

Eigen::MatrixXd table_from_entries(const std::vector<CVEntry>& entries, std::size_t bws, std::size_t folds,
                                   std::size_t comps) {
  const auto C = static_cast<Eigen::Index>(comps);
  Eigen::MatrixXd table = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(bws), C + 1,
                                                    std::numeric_limits<double>::quiet_NaN());
  for (std::size_t b = 0; b < bws; ++b) {
    const auto row = static_cast<Eigen::Index>(b);
    for (Eigen::Index c = 0; c < C; ++c) {
      double sum = 0.0;
      std::size_t used = 0;
      for (std::size_t f = 0; f < folds; ++f) {
        double mx = -1.0;
        for (const CVEntry& e : entries) {
          if (e.fold == f && e.bandwidth_index == b && !e.failed) mx = std::max(mx, e.component_errors[c]);
        }
        if (mx >= 0.0) {
          sum += mx;
          ++used;
        }
      }
      if (used > 0) table(row, c) = sum / static_cast<double>(used);
    }
    table(row, C) = table.row(row).head(C).mean();
  }
  return table;
}

}  // namespace

CVReport run_cv(const ExperimentConfig& cfg, const BivariateCurveSample& data) {
  cfg.validate();
  data.validate();
  CVReport report;
  report.config = cfg.to_json();
  report.grid = data.grid;
  report.n = data.size();
  report.component_set = cfg.component_set;
  try {
    report.bandwidths = cfg.bandwidths.resolve(data.size(), cfg.curve_minutes);
  } catch (const InvalidArgument& e) {
    throw ConfigError(fmt::format("bandwidths: {}", e.what()));
  }
  const std::size_t max_comp = *std::max_element(cfg.component_set.begin(), cfg.component_set.end());
  if (std::find(cfg.predictors.begin(), cfg.predictors.end(), PredictorKind::Extrinsic) != cfg.predictors.end() &&
      max_comp > 3 * data.grid.size()) {
    throw ConfigError(fmt::format("component {} exceeds the {} available dimensions", max_comp, 3 * data.grid.size()));
  }

  std::vector<std::vector<std::size_t>> folds;
  try {
    folds = kfold_split(data.size(), cfg.folds, cfg.seed);
  } catch (const InvalidFoldCount& e) {
    throw ConfigError(e.what());
  }

  for (PredictorKind kind : cfg.predictors) {
    PredictorRun run;
    run.kind = kind;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      std::vector<std::size_t> targets = folds[f];
      std::sort(targets.begin(), targets.end());
      std::vector<std::size_t> train_idx;
      for (std::size_t g = 0; g < folds.size(); ++g) {
        if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train_idx.begin(), train_idx.end());
      const BivariateCurveSample train = data.subset(train_idx);
      if (kind == PredictorKind::Extrinsic) {
        run_extrinsic(cfg, data, train, f, targets, report.bandwidths, run.entries);
      } else {
        run_intrinsic(kind, cfg, data, train, f, targets, report.bandwidths, run.entries);
      }
    }
    std::sort(run.entries.begin(), run.entries.end(), [](const CVEntry& a, const CVEntry& b) {
      return std::tie(a.fold, a.bandwidth_index, a.target) < std::tie(b.fold, b.bandwidth_index, b.target);
    });
    if (kind == PredictorKind::Extrinsic) {
      run.table = table_from_entries(run.entries, report.bandwidths.size(), folds.size(), cfg.component_set.size());
    }
    report.runs.push_back(std::move(run));
  }
  return report;
}

CVReport run_cv(const ExperimentConfig& cfg) {
  json info;
  const BivariateCurveSample data = load_experiment_data(cfg, &info);
  CVReport r = run_cv(cfg, data);
  r.data_info = std::move(info);
  return r;
}

// ---------------------------------------------------------------------------
// Report files

void write_report(const fs::path& dir, const CVReport& report) {
  fs::create_directories(dir);
  json preds = json::array();
  for (const PredictorRun& r : report.runs) preds.push_back(std::string(to_string(r.kind)));
  const json meta = {{"config", report.config},
                     {"data", report.data_info},
                     {"n", report.n},
                     {"grid", report.grid.nodes()},
                     {"bandwidths", report.bandwidths},
                     {"predictors", preds},
                     {"component_set", report.component_set},
                     {"software", {{"name", "sfr"}, {"version", kVersion}}},
                     {"created_at", fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::time(nullptr)))}};
  write_json(dir / "metadata.json", meta);

  for (const PredictorRun& run : report.runs) {
    const auto tag = to_string(run.kind);
    for (std::size_t b = 0; b < report.bandwidths.size(); ++b) {
      auto out = fmt::output_file((dir / fmt::format("errors_{}.csv", file_tag(run.kind, b))).string());
      out.print("fold,target,sample_time,node,t,abs_error,status\n");
      for (const CVEntry& e : run.entries) {
        if (e.bandwidth_index != b || e.failed) continue;
        for (std::size_t j = 0; j < e.errors.size(); ++j) {
          out.print("{},{},{},{},{},{},{}\n", e.fold, e.target, e.sample_time, j, report.grid[j], e.errors[j],
                    e.status[j]);
        }
      }
    }
    {
      auto out = fmt::output_file((dir / fmt::format("failures_{}.csv", tag)).string());
      out.print("fold,bandwidth_index,bandwidth,target,sample_time,error\n");
      for (const CVEntry& e : run.entries) {
        if (!e.failed) continue;
        std::string msg = e.failure;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out.print("{},{},{},{},{},{}\n", e.fold, e.bandwidth_index, report.bandwidths[e.bandwidth_index], e.target,
                  e.sample_time, msg);
      }
    }
    if (run.kind != PredictorKind::Extrinsic) continue;
    {
      auto out = fmt::output_file((dir / "tangent_errors_EXTRINSIC.csv").string());
      out.print("fold,bandwidth_index,bandwidth,target,sample_time,tangent_error");
      for (std::size_t c : report.component_set) out.print(",c{}", c);
      out.print("\n");
      for (const CVEntry& e : run.entries) {
        if (e.failed) continue;
        out.print("{},{},{},{},{},{}", e.fold, e.bandwidth_index, report.bandwidths[e.bandwidth_index], e.target,
                  e.sample_time, e.tangent_error);
        for (Eigen::Index c = 0; c < e.component_errors.size(); ++c) out.print(",{}", e.component_errors[c]);
        out.print("\n");
      }
    }
    {
      auto out = fmt::output_file((dir / "table1.csv").string());
      out.print("bandwidth");
      for (std::size_t c : report.component_set) out.print(",c{}", c);
      out.print(",mean\n");
      for (Eigen::Index b = 0; b < run.table.rows(); ++b) {
        out.print("{}", report.bandwidths[static_cast<std::size_t>(b)]);
        for (Eigen::Index c = 0; c < run.table.cols(); ++c) out.print(",{}", run.table(b, c));
        out.print("\n");
      }
    }
  }
}

CVReport read_report(const fs::path& dir) {
  const json meta = read_json(dir / "metadata.json");
  CVReport r;
  try {
    r.config = meta.at("config");
    r.data_info = meta.at("data");
    r.n = meta.at("n").get<std::size_t>();
    r.grid = TimeGrid(meta.at("grid").get<std::vector<double>>());
    r.bandwidths = meta.at("bandwidths").get<std::vector<double>>();
    r.component_set = meta.at("component_set").get<std::vector<std::size_t>>();
    for (const json& p : meta.at("predictors")) r.runs.push_back({predictor_from_string(p.get<std::string>()), {}, {}});
  } catch (const json::exception& e) {
    throw EmptyReport(fmt::format("{}: malformed metadata: {}", (dir / "metadata.json").string(), e.what()));
  }

  std::string line;
  for (PredictorRun& run : r.runs) {
    for (std::size_t b = 0; b < r.bandwidths.size(); ++b) {
      const fs::path path = dir / fmt::format("errors_{}.csv", file_tag(run.kind, b));
      std::ifstream in(path);
      if (!in) throw EmptyReport(fmt::format("missing {}", path.string()));
      std::getline(in, line);
      std::size_t line_no = 1;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 7) throw MalformedRow(fmt::format("{} line {}: expected 7 fields", path.string(), line_no));
        const auto fold = static_cast<std::size_t>(parse_int(f[0], line_no));
        const auto target = static_cast<std::size_t>(parse_int(f[1], line_no));
        if (run.entries.empty() || run.entries.back().bandwidth_index != b || run.entries.back().target != target ||
            run.entries.back().fold != fold) {
          run.entries.push_back({fold, b, target, parse_int(f[2], line_no), false, {}, {}, {}, 0.0, {}});
        }
        run.entries.back().errors.push_back(parse_double(f[5], line_no));
        run.entries.back().status.emplace_back(f[6]);
      }
    }
    const fs::path fpath = dir / fmt::format("failures_{}.csv", to_string(run.kind));
    std::ifstream in(fpath);
    if (in) {
      std::getline(in, line);
      std::size_t line_no = 1;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv(line);
        if (f.size() != 6) throw MalformedRow(fmt::format("{} line {}: expected 6 fields", fpath.string(), line_no));
        run.entries.push_back({static_cast<std::size_t>(parse_int(f[0], line_no)),
                               static_cast<std::size_t>(parse_int(f[1], line_no)),
                               static_cast<std::size_t>(parse_int(f[3], line_no)), parse_int(f[4], line_no), true,
                               std::string(f[5]), {}, {}, 0.0, {}});
      }
    }
    std::sort(run.entries.begin(), run.entries.end(), [](const CVEntry& a, const CVEntry& b) {
      return std::tie(a.fold, a.bandwidth_index, a.target) < std::tie(b.fold, b.bandwidth_index, b.target);
    });
  }
  return r;
}

// ---------------------------------------------------------------------------
// Summaries

std::size_t Histogram::mode_bin() const {
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Histogram histogram(std::span<const double> values, double bin_width) {
  if (!(bin_width > 0.0)) throw InvalidArgument("histogram bin width must be > 0");
  Histogram h{bin_width, {}};
  if (values.empty()) return h;
  for (double v : values) {
    if (!(v >= 0.0)) throw InvalidArgument(fmt::format("histogram value {} is negative", v));
  }
  const double mx = *std::max_element(values.begin(), values.end());
  h.counts.assign(static_cast<std::size_t>(std::floor(mx / bin_width)) + 1, 0);
  for (double v : values) ++h.counts[static_cast<std::size_t>(std::floor(v / bin_width))];
  return h;
}

Summary summarize(const CVReport& report) {
  Summary s;
  std::size_t curves = 0;
  const std::size_t N = report.grid.size();
  for (const PredictorRun& run : report.runs) {
    for (std::size_t b = 0; b < report.bandwidths.size(); ++b) {
      BandwidthSummary item;
      item.kind = run.kind;
      item.bandwidth_index = b;
      item.bandwidth = report.bandwidths[b];
      item.node_means.assign(N, 0.0);
      std::vector<std::pair<std::size_t, double>> temporal;
      for (const CVEntry& e : run.entries) {
        if (e.bandwidth_index != b) continue;
        if (e.failed) {
          ++item.failed;
          continue;
        }
        if (e.errors.size() != N) throw EmptyReport(fmt::format("target {} has {} errors for {} nodes", e.target, e.errors.size(), N));
        double sum = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
          const double sq = e.errors[j] * e.errors[j];
          item.node_means[j] += sq;
          sum += sq;
        }
        temporal.emplace_back(e.target, sum / static_cast<double>(N));
        ++item.evaluated;
      }
      if (item.evaluated > 0) {
        for (double& v : item.node_means) v /= static_cast<double>(item.evaluated);
        item.hist = histogram(item.node_means);
        item.sup_norm = *std::max_element(item.node_means.begin(), item.node_means.end());
      } else {
        item.node_means.clear();
      }
      std::sort(temporal.begin(), temporal.end());
      for (const auto& [t, m] : temporal) {
        item.targets.push_back(t);
        item.temporal_means.push_back(m);
      }
      curves += item.evaluated;
      s.items.push_back(std::move(item));
    }
  }
  if (curves == 0) throw EmptyReport("report holds no error curves");
  return s;
}

void write_summary(const fs::path& dir, const Summary& summary) {
  fs::create_directories(dir);
  auto sup = fmt::output_file((dir / "sup_norms.csv").string());
  sup.print("predictor,bandwidth_index,bandwidth,sup_norm,mode_bin_lo,mode_bin_hi,evaluated,failed\n");
  for (const BandwidthSummary& s : summary.items) {
    const std::string tag = file_tag(s.kind, s.bandwidth_index);
    if (s.evaluated == 0) {
      sup.print("{},{},{},nan,nan,nan,0,{}\n", to_string(s.kind), s.bandwidth_index, s.bandwidth, s.failed);
      continue;
    }
    const std::size_t mode = s.hist.mode_bin();
    sup.print("{},{},{},{},{},{},{},{}\n", to_string(s.kind), s.bandwidth_index, s.bandwidth, s.sup_norm,
              static_cast<double>(mode) * s.hist.bin_width, static_cast<double>(mode + 1) * s.hist.bin_width,
              s.evaluated, s.failed);
    {
      auto out = fmt::output_file((dir / fmt::format("histogram_{}.csv", tag)).string());
      out.print("bin_lo,bin_hi,count\n");
      for (std::size_t k = 0; k < s.hist.counts.size(); ++k) {
        out.print("{},{},{}\n", static_cast<double>(k) * s.hist.bin_width,
                  static_cast<double>(k + 1) * s.hist.bin_width, s.hist.counts[k]);
      }
    }
    {
      auto out = fmt::output_file((dir / fmt::format("temporal_means_{}.csv", tag)).string());
      out.print("target,mean_squared_error\n");
      for (std::size_t i = 0; i < s.targets.size(); ++i) out.print("{},{}\n", s.targets[i], s.temporal_means[i]);
    }
    {
      auto out = fmt::output_file((dir / fmt::format("node_means_{}.csv", tag)).string());
      out.print("node,mean_squared_error\n");
      for (std::size_t j = 0; j < s.node_means.size(); ++j) out.print("{},{}\n", j, s.node_means[j]);
    }
  }
}

}  // namespace sfr
