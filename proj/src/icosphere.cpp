#include "sfr/icosphere.hpp"

#include "sfr/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <utility>

namespace sfr {

namespace {

constexpr int kMaxLevel = 8;

Icosphere build(int level) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  Icosphere ico;
  ico.level = level;
  ico.vertices = {
      {-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
      {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1},
  };
  for (auto& v : ico.vertices) v.normalize();
  ico.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      ico.vertices.push_back((ico.vertices[a] + ico.vertices[b]).normalized());
      const int idx = static_cast<int>(ico.vertices.size()) - 1;
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(ico.faces.size() * 4);
    for (const auto& f : ico.faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    ico.faces = std::move(next);
  }

  for (const auto& f : ico.faces) {
    for (int e = 0; e < 3; ++e) {
      const Vec3& a = ico.vertices[f[e]];
      const Vec3& b = ico.vertices[f[(e + 1) % 3]];
      ico.max_edge = std::max(ico.max_edge, std::atan2(a.cross(b).norm(), a.dot(b)));
    }
  }
  return ico;
}

}  // namespace

const Icosphere& icosphere(int level) {
  if (level < 0 || level > kMaxLevel) {
    throw InvalidArgument(fmt::format("icosphere level {} outside [0, {}]", level, kMaxLevel));
  }
  static std::mutex mu;
  static std::map<int, std::unique_ptr<const Icosphere>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[level];
  if (!slot) slot = std::make_unique<const Icosphere>(build(level));
  return *slot;
}

}  // namespace sfr
