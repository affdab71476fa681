#pragma once

#include "sfr/geometry.hpp"

#include <array>
#include <vector>

namespace sfr {

/// Geodesic icosphere: the icosahedron with each face split 4^level times,
/// vertices pushed onto S^2. Level L has 10 * 4^L + 2 vertices.
struct Icosphere {
  int level = 0;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  /// Longest edge in radians; bounds the distance from any point to its nearest vertex.
  double max_edge = 0.0;
};

/// Cached, thread-safe. Levels above 8 are rejected.
const Icosphere& icosphere(int level);

}  // namespace sfr
