#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "a2p/geometry/wall.hpp"
#include "a2p/raster/density.hpp"

namespace a2p::raster {

struct Heatmap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> values;  // row-major, clamped to [0,1]

  Heatmap() = default;
  Heatmap(std::size_t w, std::size_t h) : width(w), height(h), values(w * h, 0.0f) {}
  float& at(std::size_t row, std::size_t col) { return values[row * width + col]; }
  float at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
  void clamp();
};

inline constexpr std::size_t kTileWindow = 256;
inline constexpr std::size_t kTileOverlap = 64;

struct Offset {
  std::size_t x = 0;
  std::size_t y = 0;
  friend bool operator==(Offset, Offset) = default;
};

struct Tile {
  Offset offset;
  DensityImage image;  // window x window, zero-padded past the source extent
};

// Window origins along one axis: stride window - overlap, last one clamped to
// size - window. A single 0 when size <= window.
std::vector<std::size_t> tile_positions(std::size_t size, std::size_t window, std::size_t overlap);
std::vector<Offset> tile_offsets(std::size_t width, std::size_t height, std::size_t window = kTileWindow,
                                 std::size_t overlap = kTileOverlap);
std::vector<Tile> tile_windows(const DensityImage& img, std::size_t window = kTileWindow,
                               std::size_t overlap = kTileOverlap);

struct PlacedHeatmap {
  Heatmap map;
  Offset offset;
};

// Pixel-wise max over every tile covering the pixel; uncovered pixels are 0.
// Tile pixels past the extent are dropped.
Heatmap merge_heatmaps(const std::vector<PlacedHeatmap>& tiles, std::size_t width, std::size_t height);

inline constexpr int kNmsRadius = 5;
inline constexpr double kNmsMinScore = 0.1;

struct Peak {
  geo::Point point;  // (col, row)
  double score = 0;
};

// Pixels that dominate every other pixel within Chebyshev `radius` under the
// order (score desc, row asc, col asc) and score >= min_score. Sorted by
// descending score, then (row, col).
std::vector<Peak> nms(const Heatmap& h, int radius = kNmsRadius, double min_score = kNmsMinScore);

}  // namespace a2p::raster
