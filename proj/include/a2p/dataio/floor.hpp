#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "a2p/geometry/graph.hpp"
#include "a2p/raster/density.hpp"

namespace a2p::data {

struct Rect {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

struct FloorParams {
  int rooms = 4;
  double width = 432;   // outer footprint, inches
  double height = 360;
  double margin = 24;   // empty border around the footprint in the image
  double noise = 1.0;   // clutter level multiplier; 0 disables clutter
  double grid = 24;     // split lines snap to this spacing
  double min_room = 72; // minimum room side
};

// A generated floor: GT walls (junction-split, thickness known), their
// modelling order, and a density image whose ridges follow the walls.
struct SyntheticFloor {
  std::string id;
  std::uint64_t seed = 0;
  FloorParams params;
  std::vector<Rect> rooms;
  // GT walls in modelling order, each oriented along the traversal.
  std::vector<geo::WallSegment> sequence;
  raster::DensityImage density;

  geo::WallGraph graph() const { return geo::WallGraph{sequence}; }
  std::size_t perimeter_count = 0;  // the first perimeter_count walls form the outer loop
};

// Deterministic per seed. Throws std::invalid_argument when the footprint
// cannot hold the requested number of rooms.
SyntheticFloor generate_synthetic_floor(std::uint64_t seed, const FloorParams& params, bool render_density = true);

// Splits the footprint into rooms and returns junction-split walls in an
// arbitrary (generation) order; exposed for tests.
std::vector<geo::WallSegment> layout_walls(std::uint64_t seed, const FloorParams& params, std::vector<Rect>* rooms,
                                           std::size_t* perimeter_count);

// Architect-like order: the outer loop first (interior on the left, or on the
// right when !interior_left), then a walk that prefers turns towards that
// side, then straight, then the other side, jumping to the nearest unmodelled
// wall when stuck.
std::vector<geo::WallSegment> architect_order(const std::vector<geo::WallSegment>& walls, std::size_t perimeter_count,
                                              const Rect& footprint, int start_corner, bool interior_left = true);

// Points (feet) sampled along the walls across their thickness, plus clutter.
std::vector<raster::Point3> synthesize_points(const std::vector<geo::WallSegment>& walls, const FloorParams& params,
                                              std::uint64_t seed);
raster::DensityImage render_density(const std::vector<geo::WallSegment>& walls, const FloorParams& params,
                                    std::uint64_t seed);

// Fraction of consecutive pairs in `seq` sharing an endpoint within tol.
double shared_endpoint_ratio(const std::vector<geo::WallSegment>& seq, double tol = 1.0);

// On-disk floor directory: density.bin, walls.json, session_NNN.json.
void save_floor(const SyntheticFloor& floor, const std::filesystem::path& dir);
SyntheticFloor load_floor(const std::filesystem::path& dir);

std::string floor_id_for(std::uint64_t seed, std::size_t index);

}  // namespace a2p::data
