#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace sfr {

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorKind { Config, Data, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define SFR_DECLARE_ERROR(Name, Kind)                                          \
  class Name : public Error {                                                  \
   public:                                                                     \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {}   \
  };

// geometry
SFR_DECLARE_ERROR(InvalidPoint, Data)
SFR_DECLARE_ERROR(InvalidTangent, Data)
SFR_DECLARE_ERROR(InvalidGrid, Data)
SFR_DECLARE_ERROR(GridMismatch, Data)

// solvers and spectra
SFR_DECLARE_ERROR(DegenerateWeights, Numerical)
SFR_DECLARE_ERROR(NonConvergence, Numerical)
SFR_DECLARE_ERROR(EmptySample, Data)
SFR_DECLARE_ERROR(DegenerateSpectrum, Numerical)
SFR_DECLARE_ERROR(InvalidArgument, Config)
SFR_DECLARE_ERROR(AllNodesFailed, Numerical)

// ingestion and reporting
SFR_DECLARE_ERROR(MalformedRow, Data)
SFR_DECLARE_ERROR(NonMonotoneTime, Data)
SFR_DECLARE_ERROR(EmptyFile, Data)
SFR_DECLARE_ERROR(InvalidFoldCount, Config)
SFR_DECLARE_ERROR(EmptyReport, Data)
SFR_DECLARE_ERROR(ConfigError, Config)

#undef SFR_DECLARE_ERROR

/// log_map target at or beyond the injectivity radius of the base point.
/// Sample-level callers attach the (curve, node) position.
class AntipodalPoints : public Error {
 public:
  explicit AntipodalPoints(const std::string& what, std::optional<std::size_t> curve = {},
                           std::optional<std::size_t> node = {})
      : Error(ErrorKind::Numerical, what), curve_(curve), node_(node) {}
  std::optional<std::size_t> curve() const noexcept { return curve_; }
  std::optional<std::size_t> node() const noexcept { return node_; }

 private:
  std::optional<std::size_t> curve_;
  std::optional<std::size_t> node_;
};

/// Fewer than two samples inside the kernel support.
class EmptyWindow : public Error {
 public:
  explicit EmptyWindow(const std::string& what, std::optional<std::size_t> component = {})
      : Error(ErrorKind::Numerical, what), component_(component) {}
  std::optional<std::size_t> component() const noexcept { return component_; }

 private:
  std::optional<std::size_t> component_;
};

/// Local design with no spread: the slope is not identifiable.
class DegenerateWindow : public Error {
 public:
  explicit DegenerateWindow(const std::string& what, std::optional<std::size_t> component = {})
      : Error(ErrorKind::Numerical, what), component_(component) {}
  std::optional<std::size_t> component() const noexcept { return component_; }

 private:
  std::optional<std::size_t> component_;
};

}  // namespace sfr
