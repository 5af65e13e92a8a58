#include "a2p/dataio/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace a2p::data {

using geo::Point;

geo::Point Similarity::apply(Point p) const {
  const double c = std::cos(theta), s = std::sin(theta);
  return {scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
}

geo::Point Similarity::inverse(Point p) const {
  const double c = std::cos(theta), s = std::sin(theta);
  const double x = (p.x - tx) / scale, y = (p.y - ty) / scale;
  return {c * x + s * y, -s * x + c * y};
}

geo::WallSegment Similarity::apply(const geo::WallSegment& w) const {
  geo::WallSegment out = w;
  const Point a = apply(w.a()), b = apply(w.b());
  out.x0 = a.x, out.y0 = a.y, out.x1 = b.x, out.y1 = b.y;
  return out;
}

geo::WallSegment Similarity::inverse(const geo::WallSegment& w) const {
  geo::WallSegment out = w;
  const Point a = inverse(w.a()), b = inverse(w.b());
  out.x0 = a.x, out.y0 = a.y, out.x1 = b.x, out.y1 = b.y;
  return out;
}

raster::DensityImage warp_density(const raster::DensityImage& img, Similarity& t) {
  if (img.width == 0 || img.height == 0) return img;
  const double w = static_cast<double>(img.width - 1), h = static_cast<double>(img.height - 1);
  double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
  for (Point p : {Point{0, 0}, Point{w, 0}, Point{0, h}, Point{w, h}}) {
    const Point q = t.apply(p);
    minx = std::min(minx, q.x), maxx = std::max(maxx, q.x);
    miny = std::min(miny, q.y), maxy = std::max(maxy, q.y);
  }
  // Snap the shift so an identity or right-angle transform stays on the pixel grid.
  const double sx = std::round(minx * 1e9) / 1e9, sy = std::round(miny * 1e9) / 1e9;
  t.tx -= sx;
  t.ty -= sy;
  const auto ow = static_cast<std::size_t>(std::floor(maxx - sx + 1e-9)) + 1;
  const auto oh = static_cast<std::size_t>(std::floor(maxy - sy + 1e-9)) + 1;
  raster::DensityImage out(ow, oh);
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      Point p = t.inverse({static_cast<double>(c), static_cast<double>(r)});
      // Remove round-off so exact grid positions hit exact source pixels.
      p.x = std::round(p.x * 1e9) / 1e9;
      p.y = std::round(p.y * 1e9) / 1e9;
      if (p.x < 0 || p.y < 0 || p.x > w || p.y > h) continue;
      const auto x0 = static_cast<std::size_t>(std::floor(p.x)), y0 = static_cast<std::size_t>(std::floor(p.y));
      const auto x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
      const double fx = p.x - static_cast<double>(x0), fy = p.y - static_cast<double>(y0);
      for (std::size_t ch = 0; ch < raster::kChannels; ++ch) {
        const double v = (1 - fx) * (1 - fy) * img.at(ch, y0, x0) + fx * (1 - fy) * img.at(ch, y0, x1) +
                         (1 - fx) * fy * img.at(ch, y1, x0) + fx * fy * img.at(ch, y1, x1);
        out.at(ch, r, c) = static_cast<float>(v);
      }
    }
  return out;
}

namespace {

double draw_rotation(RotationKind kind, std::mt19937_64& rng) {
  switch (kind) {
    case RotationKind::None: return 0.0;
    case RotationKind::RightAngles:
      return std::uniform_int_distribution<int>(0, 3)(rng) * std::numbers::pi / 2;
    case RotationKind::Continuous:
      return std::uniform_real_distribution<double>(0.0, 2 * std::numbers::pi)(rng);
  }
  return 0.0;
}

double draw_scale(const AugmentConfig& cfg, std::mt19937_64& rng) {
  if (cfg.max_scale <= cfg.min_scale) return cfg.min_scale;
  return std::uniform_real_distribution<double>(cfg.min_scale, cfg.max_scale)(rng);
}

}  // namespace

AugmentedFloor normalize_and_augment(const SyntheticFloor& floor, AugmentMode mode, std::uint64_t seed,
                                     const AugmentConfig& cfg) {
  std::mt19937_64 rng(seed);
  AugmentedFloor out;
  out.floor = floor;
  Similarity t;
  switch (mode) {
    case AugmentMode::CornerTrain: {
      t.theta = draw_rotation(cfg.rotation, rng);
      out.floor.density = warp_density(floor.density, t);
      break;
    }
    case AugmentMode::EdgeTrain: {
      const double longest = static_cast<double>(std::max(floor.density.width, floor.density.height));
      out.normalization = longest > cfg.max_length ? cfg.max_length / longest : 1.0;
      t.theta = draw_rotation(cfg.rotation, rng);
      t.scale = out.normalization * draw_scale(cfg, rng);
      out.floor.density = warp_density(floor.density, t);
      break;
    }
    case AugmentMode::NextWallTrain: {
      double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
      for (const auto& w : floor.sequence)
        for (Point p : {w.a(), w.b()}) {
          minx = std::min(minx, p.x), maxx = std::max(maxx, p.x);
          miny = std::min(miny, p.y), maxy = std::max(maxy, p.y);
        }
      if (floor.sequence.empty()) minx = miny = maxx = maxy = 0;
      const double extent = std::max(maxx - minx, maxy - miny);
      out.normalization = extent > cfg.max_length ? cfg.max_length / extent : 1.0;
      const Point centre{(minx + maxx) / 2, (miny + maxy) / 2};
      const double theta = draw_rotation(cfg.rotation, rng);
      const double s = draw_scale(cfg, rng);
      double dx = 0, dy = 0;
      if (cfg.max_translation > 0) {
        std::uniform_real_distribution<double> shift(-cfg.max_translation, cfg.max_translation);
        dx = shift(rng);
        dy = shift(rng);
      }
      // x' = s R (n (x - c)) + d
      t.scale = s * out.normalization;
      t.theta = theta;
      const Point rc = Similarity{t.scale, theta, 0, 0}.apply(centre);
      t.tx = dx - rc.x;
      t.ty = dy - rc.y;
      break;
    }
  }
  for (auto& w : out.floor.sequence) w = t.apply(w);
  out.transform = t;
  return out;
}

}  // namespace a2p::data
