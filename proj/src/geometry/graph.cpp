#include "a2p/geometry/graph.hpp"

#include <algorithm>

namespace a2p::geo {

std::vector<Point> WallGraph::corners(double merge_tol) const {
  std::vector<Point> out;
  auto add = [&](Point p) {
    for (const auto& q : out)
      if (distance(p, q) <= merge_tol) return;
    out.push_back(p);
  };
  for (const auto& w : walls) {
    add(w.a());
    add(w.b());
  }
  return out;
}

namespace {

// Interior split parameters of `w` induced by the endpoints of other walls.
std::vector<double> junction_params(const WallSegment& w, std::size_t self,
                                    const std::vector<WallSegment>& walls, double tol) {
  const Point a = w.a(), d = w.b() - w.a();
  const double len2 = dot(d, d), len = std::sqrt(len2);
  std::vector<double> params;
  for (std::size_t j = 0; j < walls.size(); ++j) {
    if (j == self) continue;
    for (const Point p : {walls[j].a(), walls[j].b()}) {
      const double s = dot(p - a, d) / len2;
      if (s <= 0 || s >= 1) continue;
      const Point q = a + d * s;
      if (distance(p, q) > tol) continue;
      if (s * len <= tol || (1 - s) * len <= tol) continue;
      params.push_back(s);
    }
  }
  std::sort(params.begin(), params.end());
  std::vector<double> merged;
  for (double s : params)
    if (merged.empty() || (s - merged.back()) * len > tol) merged.push_back(s);
  return merged;
}

}  // namespace

WallGraph split_t_junctions(const WallGraph& g, double tol) {
  std::vector<WallSegment> walls = g.walls;
  // Each pass can only create endpoints on existing lines, so a few passes
  // settle even overlapping collinear input.
  for (int pass = 0; pass < 8; ++pass) {
    std::vector<WallSegment> next;
    bool changed = false;
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const auto params = junction_params(walls[i], i, walls, tol);
      if (params.empty()) {
        next.push_back(walls[i]);
        continue;
      }
      changed = true;
      const Point a = walls[i].a(), d = walls[i].b() - walls[i].a();
      Point prev = a;
      for (double s : params) {
        const Point q = a + d * s;
        next.emplace_back(prev, q, walls[i].thickness, walls[i].timestep);
        prev = q;
      }
      next.emplace_back(prev, walls[i].b(), walls[i].thickness, walls[i].timestep);
    }
    walls = std::move(next);
    if (!changed) break;
  }
  return WallGraph{std::move(walls)};
}

bool is_duplicate(const WallSegment& a, const WallSegment& b, double threshold) {
  const auto [d0, d1] = endpoint_distances(a, b);
  return d0 < threshold && d1 < threshold;
}

std::vector<WallSegment> remove_duplicates(std::span<const WallSegment> candidates,
                                           std::span<const WallSegment> existing, double threshold) {
  std::vector<WallSegment> kept;
  for (const auto& c : candidates) {
    const bool dup_existing = std::any_of(existing.begin(), existing.end(),
                                          [&](const WallSegment& e) { return is_duplicate(c, e, threshold); });
    if (dup_existing) continue;
    const bool dup_kept =
        std::any_of(kept.begin(), kept.end(), [&](const WallSegment& k) { return is_duplicate(c, k, threshold); });
    if (!dup_kept) kept.push_back(c);
  }
  return kept;
}

}  // namespace a2p::geo
