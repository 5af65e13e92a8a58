#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "a2p/autodiff/tensor.hpp"

namespace a2p::raster {

inline constexpr std::size_t kChannels = 3;
// Upper edges of the height bands in feet; band c is (edge[c-1], edge[c]].
inline constexpr std::array<double, kChannels> kSliceHeightsFt = {6.56, 8.2, 12.0};
inline constexpr double kInchesPerFoot = 12.0;

struct Point3 {
  double x = 0, y = 0, z = 0;  // feet; z above the ground plane
};

// Three-plane top-down density raster, 1 px = `resolution` inches.
struct DensityImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> data;  // [channel][row][col]

  DensityImage() = default;
  DensityImage(std::size_t w, std::size_t h) : width(w), height(h), data(kChannels * w * h, 0.0f) {}

  float& at(std::size_t c, std::size_t row, std::size_t col) { return data[(c * height + row) * width + col]; }
  float at(std::size_t c, std::size_t row, std::size_t col) const { return data[(c * height + row) * width + col]; }
  std::span<float> plane(std::size_t c) { return {data.data() + c * width * height, width * height}; }
  std::span<const float> plane(std::size_t c) const { return {data.data() + c * width * height, width * height}; }

  // [3, H, W] constant tensor for the networks.
  ad::Tensor to_tensor() const;
};

// Height band for z in feet, or -1 outside (0, 12].
int height_band(double z_ft);

struct RasterSpec {
  double origin_x_ft = 0;
  double origin_y_ft = 0;
  std::size_t width = 0;
  std::size_t height = 0;
  double resolution_in = 1.0;
};

// Raw per-cell counts. Points outside the extent or every band are ignored.
DensityImage accumulate_density(std::span<const Point3> points, const RasterSpec& spec);
// Counts divided by each channel's maximum (channels with no points stay 0).
DensityImage rasterize_density(std::span<const Point3> points, const RasterSpec& spec);
void normalize_channels(DensityImage& img);

// Binary grid: "A2PD" | u32 width | u32 height | u32 channels | f32 planes, row-major.
void save_density(const DensityImage& img, const std::filesystem::path& path);
DensityImage load_density(const std::filesystem::path& path);

// One 8-bit grayscale PNG per channel: <stem>_c0.png, <stem>_c1.png, <stem>_c2.png.
// Values are clamped to [0,1] and quantized.
void export_png_planes(const DensityImage& img, const std::filesystem::path& stem);
DensityImage import_png_planes(const std::filesystem::path& stem);

}  // namespace a2p::raster
