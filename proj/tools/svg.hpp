#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "a2p/geometry/wall.hpp"

namespace a2p::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

// Line chart with markers and a legend.
std::string line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                      const std::vector<Series>& series);

struct Layer {
  std::vector<geo::WallSegment> walls;
  std::string color;
  bool dashed = false;
  bool numbered = false;  // order badges 1..N at wall midpoints
};

// Walls in inches, y down, fitted to the canvas.
std::string floor_plan(const std::string& title, const std::vector<Layer>& layers);

void write(const std::filesystem::path& path, const std::string& svg);

}  // namespace a2p::svg
