#include "a2p/raster/density.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace a2p::raster {

ad::Tensor DensityImage::to_tensor() const {
  return ad::Tensor({kChannels, height, width}, std::vector<double>(data.begin(), data.end()));
}

int height_band(double z) {
  double lower = 0.0;
  for (std::size_t c = 0; c < kChannels; ++c) {
    if (z > lower && z <= kSliceHeightsFt[c]) return static_cast<int>(c);
    lower = kSliceHeightsFt[c];
  }
  return -1;
}

DensityImage accumulate_density(std::span<const Point3> points, const RasterSpec& spec) {
  if (!(spec.resolution_in > 0)) throw std::invalid_argument("raster resolution must be positive");
  DensityImage img(spec.width, spec.height);
  const double px_per_ft = kInchesPerFoot / spec.resolution_in;
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw std::invalid_argument("non-finite point in cloud");
    }
    const int band = height_band(p.z);
    if (band < 0) continue;
    const double col = std::floor((p.x - spec.origin_x_ft) * px_per_ft);
    const double row = std::floor((p.y - spec.origin_y_ft) * px_per_ft);
    if (col < 0 || row < 0 || col >= static_cast<double>(spec.width) || row >= static_cast<double>(spec.height)) continue;
    img.at(static_cast<std::size_t>(band), static_cast<std::size_t>(row), static_cast<std::size_t>(col)) += 1.0f;
  }
  return img;
}

void normalize_channels(DensityImage& img) {
  for (std::size_t c = 0; c < kChannels; ++c) {
    auto plane = img.plane(c);
    if (plane.empty()) continue;
    const float mx = *std::max_element(plane.begin(), plane.end());
    if (mx <= 0) continue;
    for (auto& v : plane) v /= mx;
  }
}

DensityImage rasterize_density(std::span<const Point3> points, const RasterSpec& spec) {
  auto img = accumulate_density(points, spec);
  normalize_channels(img);
  return img;
}

namespace {

constexpr char kDensityMagic[4] = {'A', '2', 'P', 'D'};

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("truncated density file");
  return v;
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::filesystem::path plane_path(const std::filesystem::path& stem, std::size_t c) {
  return stem.parent_path() / (stem.filename().string() + "_c" + std::to_string(c) + ".png");
}

void write_gray_png(const std::filesystem::path& path, std::size_t w, std::size_t h, std::span<const float> v) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("png write failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(w);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c)
      row[c] = static_cast<png_byte>(std::lround(std::clamp(v[r * w + c], 0.0f, 1.0f) * 255.0f));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<float> read_gray_png(const std::filesystem::path& path, std::size_t& w, std::size_t& h) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("png read failed: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  if (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  std::vector<png_byte> row(png_get_rowbytes(png, info));
  std::vector<float> out(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    png_read_row(png, row.data(), nullptr);
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = static_cast<float>(row[c]) / 255.0f;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void save_density(const DensityImage& img, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write density image: " + path.string());
  os.write(kDensityMagic, sizeof(kDensityMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(img.width));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(img.height));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(kChannels));
  os.write(reinterpret_cast<const char*>(img.data.data()), static_cast<std::streamsize>(img.data.size() * sizeof(float)));
}

DensityImage load_density(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open density image: " + path.string());
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kDensityMagic, 4) != 0) {
    throw std::runtime_error("not a density image: " + path.string());
  }
  const auto w = get<std::uint32_t>(is), h = get<std::uint32_t>(is), c = get<std::uint32_t>(is);
  if (c != kChannels) throw std::runtime_error("density image has " + std::to_string(c) + " channels, expected 3");
  DensityImage img(w, h);
  if (!is.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size() * sizeof(float)))) {
    throw std::runtime_error("truncated density image: " + path.string());
  }
  return img;
}

void export_png_planes(const DensityImage& img, const std::filesystem::path& stem) {
  for (std::size_t c = 0; c < kChannels; ++c) write_gray_png(plane_path(stem, c), img.width, img.height, img.plane(c));
}

DensityImage import_png_planes(const std::filesystem::path& stem) {
  DensityImage img;
  for (std::size_t c = 0; c < kChannels; ++c) {
    std::size_t w = 0, h = 0;
    auto plane = read_gray_png(plane_path(stem, c), w, h);
    if (c == 0) img = DensityImage(w, h);
    if (w != img.width || h != img.height) throw std::runtime_error("PNG planes differ in size");
    std::copy(plane.begin(), plane.end(), img.plane(c).begin());
  }
  return img;
}

}  // namespace a2p::raster
