#include "a2p/geometry/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

namespace a2p::geo {

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

std::vector<std::pair<long, long>> rasterize_wall(const WallSegment& w) {
  const double half = 0.5 * (w.thickness ? *w.thickness : 1);
  const Point a = w.a(), d = w.b() - w.a();
  const double len = norm(d);
  const Point u = d * (1.0 / len);
  const Point n{-u.y, u.x};
  const Point corners[4] = {a + n * half, a - n * half, w.b() + n * half, w.b() - n * half};
  double minx = corners[0].x, maxx = minx, miny = corners[0].y, maxy = miny;
  for (const auto& c : corners) {
    minx = std::min(minx, c.x);
    maxx = std::max(maxx, c.x);
    miny = std::min(miny, c.y);
    maxy = std::max(maxy, c.y);
  }
  std::vector<std::pair<long, long>> out;
  for (long y = static_cast<long>(std::ceil(miny)); y <= static_cast<long>(std::floor(maxy)); ++y)
    for (long x = static_cast<long>(std::ceil(minx)); x <= static_cast<long>(std::floor(maxx)); ++x) {
      const Point p{static_cast<double>(x), static_cast<double>(y)};
      const double along = dot(p - a, u);
      const double across = std::abs(dot(p - a, n));
      if (along >= 0 && along <= len && across <= half) out.emplace_back(x, y);
    }
  return out;
}

double wall_iou(std::span<const WallSegment> a, std::span<const WallSegment> b) {
  auto key = [](long x, long y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
  };
  std::unordered_set<std::uint64_t> ma, mb;
  for (const auto& w : a)
    for (auto [x, y] : rasterize_wall(w)) ma.insert(key(x, y));
  for (const auto& w : b)
    for (auto [x, y] : rasterize_wall(w)) mb.insert(key(x, y));
  if (ma.empty() && mb.empty()) return 1.0;
  std::size_t inter = 0;
  for (auto k : ma) inter += mb.count(k);
  const std::size_t uni = ma.size() + mb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MatchReport match_walls(std::span<const WallSegment> pred, std::span<const WallSegment> gt, double threshold) {
  if (!(threshold > 0)) throw std::invalid_argument("match_walls: threshold must be positive");
  MatchReport r;
  r.threshold = threshold;
  r.iou = wall_iou(pred, gt);
  if (pred.empty() && gt.empty()) {
    r.precision = r.recall = r.f1 = 1.0;
    return r;
  }
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < gt.size(); ++j) {
      const double d = endpoint_pair_distance(pred[i], gt[j]);
      if (d <= threshold) pairs.emplace_back(d, i, j);
    }
  std::sort(pairs.begin(), pairs.end());
  std::vector<char> used_p(pred.size(), 0), used_g(gt.size(), 0);
  for (const auto& [d, i, j] : pairs) {
    if (used_p[i] || used_g[j]) continue;
    used_p[i] = used_g[j] = 1;
    r.matches.emplace_back(i, j);
  }
  const double m = static_cast<double>(r.matches.size());
  r.precision = pred.empty() ? 0.0 : m / static_cast<double>(pred.size());
  r.recall = gt.empty() ? 0.0 : m / static_cast<double>(gt.size());
  r.f1 = f1_score(r.precision, r.recall);
  std::size_t correct = 0;
  for (auto [i, j] : r.matches) {
    if (!gt[j].thickness) continue;
    ++r.width_pairs;
    if (pred[i].thickness && std::abs(*pred[i].thickness - *gt[j].thickness) <= kWidthTolerance) ++correct;
  }
  r.width_accuracy = r.width_pairs ? static_cast<double>(correct) / static_cast<double>(r.width_pairs) : 0.0;
  return r;
}

}  // namespace a2p::geo
