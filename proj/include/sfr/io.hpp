#pragma once

#include "sfr/intrinsic.hpp"
#include "sfr/sample.hpp"
#include "sfr/tangent_space.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sfr {

namespace fs = std::filesystem;

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// Splits one CSV line on commas (no quoting). Strips a trailing '\r'.
std::vector<std::string_view> split_csv(std::string_view line);
/// Throws MalformedRow naming `line_no` when the field is not a number.
double parse_double(std::string_view field, std::size_t line_no);
long long parse_int(std::string_view field, std::size_t line_no);

/// Columns sample_index,node_index,t,xr,yr,zr,xy,yy,zy; one row per (sample, node).
void write_dataset_csv(const fs::path& path, const BivariateCurveSample& sample);
/// Samples are taken in order of first appearance; sample_index becomes the sample time.
BivariateCurveSample read_dataset_csv(const fs::path& path);

void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

/// eigenvalues.csv, eigenfunctions.csv (one row per component and axis, one
/// column per grid node) and base.csv in `dir`.
void write_eigensystem(const fs::path& dir, const EigenSystem& es);
EigenSystem read_eigensystem(const fs::path& dir);

/// t,x,y,z,clipped_flag
void write_curve_csv(const fs::path& path, const ManifoldCurve& curve, const std::vector<bool>& clipped);
/// t,x,y,z,clipped_flag,status
void write_curve_csv(const fs::path& path, const CurvePrediction& pred);

}  // namespace sfr
