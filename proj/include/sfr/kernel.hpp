#pragma once

#include <string_view>

namespace sfr {

/// Compactly supported kernel families. Only Epanechnikov is implemented.
enum class KernelFamily { Epanechnikov };

std::string_view to_string(KernelFamily f);
KernelFamily kernel_family_from_string(std::string_view s);

/// (3 / (4 bw)) (1 - (d / bw)^2) on [0, bw), zero outside. Integrates to 1
/// over (-bw, bw).
inline double epanechnikov(double d, double bw) {
  if (d >= bw) return 0.0;
  const double u = d / bw;
  return 0.75 / bw * (1.0 - u * u);
}

inline double kernel_value(KernelFamily /*family*/, double d, double bw) { return epanechnikov(d, bw); }

}  // namespace sfr
