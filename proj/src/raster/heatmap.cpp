#include "a2p/raster/heatmap.hpp"

#include <algorithm>
#include <stdexcept>

namespace a2p::raster {

void Heatmap::clamp() {
  for (auto& v : values) v = std::clamp(v, 0.0f, 1.0f);
}

std::vector<std::size_t> tile_positions(std::size_t size, std::size_t window, std::size_t overlap) {
  if (window <= overlap) throw std::invalid_argument("tile window must exceed overlap");
  if (size <= window) return {0};
  const std::size_t stride = window - overlap;
  std::vector<std::size_t> out;
  for (std::size_t p = 0;; p += stride) {
    if (p + window >= size) {
      out.push_back(size - window);
      break;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<Offset> tile_offsets(std::size_t width, std::size_t height, std::size_t window, std::size_t overlap) {
  std::vector<Offset> out;
  for (auto y : tile_positions(height, window, overlap))
    for (auto x : tile_positions(width, window, overlap)) out.push_back({x, y});
  return out;
}

std::vector<Tile> tile_windows(const DensityImage& img, std::size_t window, std::size_t overlap) {
  std::vector<Tile> out;
  for (auto off : tile_offsets(img.width, img.height, window, overlap)) {
    Tile t{off, DensityImage(window, window)};
    for (std::size_t c = 0; c < kChannels; ++c)
      for (std::size_t r = 0; r < window && off.y + r < img.height; ++r)
        for (std::size_t col = 0; col < window && off.x + col < img.width; ++col)
          t.image.at(c, r, col) = img.at(c, off.y + r, off.x + col);
    out.push_back(std::move(t));
  }
  return out;
}

Heatmap merge_heatmaps(const std::vector<PlacedHeatmap>& tiles, std::size_t width, std::size_t height) {
  Heatmap out(width, height);
  for (const auto& t : tiles) {
    if (t.offset.x >= width || t.offset.y >= height) throw std::invalid_argument("heatmap tile outside extent");
    for (std::size_t r = 0; r < t.map.height && t.offset.y + r < height; ++r)
      for (std::size_t c = 0; c < t.map.width && t.offset.x + c < width; ++c) {
        float& dst = out.at(t.offset.y + r, t.offset.x + c);
        dst = std::max(dst, t.map.at(r, c));
      }
  }
  return out;
}

std::vector<Peak> nms(const Heatmap& h, int radius, double min_score) {
  if (radius < 1) throw std::invalid_argument("nms radius must be >= 1");
  const long W = static_cast<long>(h.width), H = static_cast<long>(h.height);
  // (score desc, row asc, col asc): true when (r1,c1) outranks (r2,c2).
  auto outranks = [&](long r1, long c1, long r2, long c2) {
    const float a = h.values[r1 * W + c1], b = h.values[r2 * W + c2];
    if (a != b) return a > b;
    return r1 != r2 ? r1 < r2 : c1 < c2;
  };
  std::vector<Peak> out;
  for (long r = 0; r < H; ++r)
    for (long c = 0; c < W; ++c) {
      if (h.values[r * W + c] < min_score) continue;
      bool keep = true;
      for (long rr = std::max(0L, r - radius); keep && rr <= std::min(H - 1, r + radius); ++rr)
        for (long cc = std::max(0L, c - radius); cc <= std::min(W - 1, c + radius); ++cc)
          if ((rr != r || cc != c) && outranks(rr, cc, r, c)) {
            keep = false;
            break;
          }
      if (keep) out.push_back({{static_cast<double>(c), static_cast<double>(r)}, h.values[r * W + c]});
    }
  std::stable_sort(out.begin(), out.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  return out;
}

}  // namespace a2p::raster
