#include "sfr/kernel.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

namespace sfr {

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Epanechnikov:
      return "epanechnikov";
  }
  return "unknown";
}

KernelFamily kernel_family_from_string(std::string_view s) {
  if (s == "epanechnikov") return KernelFamily::Epanechnikov;
  throw ConfigError(fmt::format("unknown kernel family '{}'", s));
}

}  // namespace sfr
