#include "sfr/io.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>
#include <fmt/os.h>

#include <charconv>
#include <fstream>
#include <map>

namespace sfr {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError(fmt::format("cannot write {}", path.string()));
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read {}", path.string()));
  return in;
}

void expect_fields(const std::vector<std::string_view>& f, std::size_t count, std::size_t line_no) {
  if (f.size() != count) {
    throw MalformedRow(fmt::format("line {}: expected {} fields, found {}", line_no, count, f.size()));
  }
}

}  // namespace

std::string format_double(double v) { return fmt::format("{}", v); }

std::vector<std::string_view> split_csv(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view field, std::size_t line_no) {
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw MalformedRow(fmt::format("line {}: '{}' is not a number", line_no, field));
  }
  return v;
}

long long parse_int(std::string_view field, std::size_t line_no) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw MalformedRow(fmt::format("line {}: '{}' is not an integer", line_no, field));
  }
  return v;
}

void write_dataset_csv(const fs::path& path, const BivariateCurveSample& sample) {
  sample.validate();
  auto out = fmt::output_file(path.string());
  out.print("sample_index,node_index,t,xr,yr,zr,xy,yy,zy\n");
  for (std::size_t i = 0; i < sample.size(); ++i) {
    for (std::size_t j = 0; j < sample.grid.size(); ++j) {
      const Vec3& x = sample.regressors[i][j].coords();
      const Vec3& y = sample.responses[i][j].coords();
      out.print("{},{},{},{},{},{},{},{},{}\n", sample.sample_times[i], j, sample.grid[j], x.x(), x.y(), x.z(),
                y.x(), y.y(), y.z());
    }
  }
}

BivariateCurveSample read_dataset_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw EmptyFile(fmt::format("cannot read {}", path.string()));
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw EmptyFile(fmt::format("{} is empty", path.string()));

  struct Rows {
    std::vector<double> t;
    std::vector<SpherePoint> x, y;
  };
  std::vector<long long> order;
  std::map<long long, Rows> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv(line);
    expect_fields(f, 9, line_no);
    const long long s = parse_int(f[0], line_no);
    const long long j = parse_int(f[1], line_no);
    auto [it, fresh] = rows.try_emplace(s);
    if (fresh) order.push_back(s);
    Rows& r = it->second;
    if (j != static_cast<long long>(r.t.size())) {
      throw MalformedRow(fmt::format("line {}: node index {} out of order for sample {}", line_no, j, s));
    }
    double v[7];
    for (int c = 0; c < 7; ++c) v[c] = parse_double(f[static_cast<std::size_t>(c) + 2], line_no);
    try {
      r.t.push_back(v[0]);
      r.x.push_back(SpherePoint::from_coords(v[1], v[2], v[3]));
      r.y.push_back(SpherePoint::from_coords(v[4], v[5], v[6]));
    } catch (const InvalidPoint& e) {
      throw MalformedRow(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  if (order.empty()) throw EmptyFile(fmt::format("{} has no data rows", path.string()));

  const TimeGrid grid(rows.at(order.front()).t);
  BivariateCurveSample sample{grid, {}, {}, {}};
  for (long long s : order) {
    Rows& r = rows.at(s);
    if (r.t != grid.nodes()) throw GridMismatch(fmt::format("sample {} is not on the grid of the first sample", s));
    sample.regressors.emplace_back(grid, std::move(r.x));
    sample.responses.emplace_back(grid, std::move(r.y));
    sample.sample_times.push_back(s);
  }
  return sample;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_eigensystem(const fs::path& dir, const EigenSystem& es) {
  fs::create_directories(dir);
  const TimeGrid& grid = es.grid();
  {
    auto out = fmt::output_file((dir / "eigenvalues.csv").string());
    out.print("component,eigenvalue\n");
    for (std::size_t k = 0; k < es.size(); ++k) out.print("{},{}\n", k + 1, es.eigvals[static_cast<Eigen::Index>(k)]);
  }
  {
    auto out = fmt::output_file((dir / "eigenfunctions.csv").string());
    out.print("component,axis");
    for (std::size_t j = 0; j < grid.size(); ++j) out.print(",{}", grid[j]);
    out.print("\n");
    for (std::size_t k = 0; k < es.size(); ++k) {
      for (int c = 0; c < 3; ++c) {
        out.print("{},{}", k + 1, "xyz"[c]);
        for (std::size_t j = 0; j < grid.size(); ++j) {
          out.print(",{}", es.eigfuns(static_cast<Eigen::Index>(3 * j) + c, static_cast<Eigen::Index>(k)));
        }
        out.print("\n");
      }
    }
  }
  write_curve_csv(dir / "base.csv", *es.base, std::vector<bool>(grid.size(), false));
}

EigenSystem read_eigensystem(const fs::path& dir) {
  std::string line;
  std::vector<double> t;
  std::vector<SpherePoint> pts;
  {
    auto in = open_in(dir / "base.csv");
    std::size_t line_no = 1;
    std::getline(in, line);
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv(line);
      expect_fields(f, 5, line_no);
      t.push_back(parse_double(f[0], line_no));
      pts.push_back(SpherePoint::from_coords(parse_double(f[1], line_no), parse_double(f[2], line_no),
                                             parse_double(f[3], line_no)));
    }
  }
  if (pts.empty()) throw EmptyFile("base.csv has no rows");
  EigenSystem es;
  es.base = std::make_shared<const ManifoldCurve>(TimeGrid(std::move(t)), std::move(pts));
  const std::size_t N = es.base->size();

  std::vector<double> vals;
  {
    auto in = open_in(dir / "eigenvalues.csv");
    std::size_t line_no = 1;
    std::getline(in, line);
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv(line);
      expect_fields(f, 2, line_no);
      vals.push_back(parse_double(f[1], line_no));
    }
  }
  es.eigvals = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  es.eigfuns = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * N), es.eigvals.size());
  {
    auto in = open_in(dir / "eigenfunctions.csv");
    std::size_t line_no = 1;
    std::getline(in, line);
    std::size_t row = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = split_csv(line);
      expect_fields(f, N + 2, line_no);
      const auto k = static_cast<Eigen::Index>(row / 3);
      const auto c = static_cast<Eigen::Index>(row % 3);
      if (k >= es.eigfuns.cols()) throw MalformedRow(fmt::format("line {}: more components than eigenvalues", line_no));
      for (std::size_t j = 0; j < N; ++j) es.eigfuns(static_cast<Eigen::Index>(3 * j) + c, k) = parse_double(f[j + 2], line_no);
      ++row;
    }
    if (row != 3 * es.size()) throw MalformedRow("eigenfunctions.csv: row count does not match eigenvalues.csv");
  }
  return es;
}

void write_curve_csv(const fs::path& path, const ManifoldCurve& curve, const std::vector<bool>& clipped) {
  auto out = fmt::output_file(path.string());
  out.print("t,x,y,z,clipped_flag\n");
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const Vec3& p = curve[j].coords();
    out.print("{},{},{},{},{}\n", curve.grid()[j], p.x(), p.y(), p.z(), j < clipped.size() && clipped[j] ? 1 : 0);
  }
}

void write_curve_csv(const fs::path& path, const CurvePrediction& pred) {
  auto out = fmt::output_file(path.string());
  out.print("t,x,y,z,clipped_flag,status\n");
  for (std::size_t j = 0; j < pred.curve.size(); ++j) {
    const Vec3& p = pred.curve[j].coords();
    out.print("{},{},{},{},0,{}\n", pred.curve.grid()[j], p.x(), p.y(), p.z(), to_string(pred.status[j]));
  }
}

}  // namespace sfr
