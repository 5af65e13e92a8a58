#pragma once

#include <span>
#include <utility>
#include <vector>

#include "a2p/geometry/wall.hpp"

namespace a2p::geo {

inline constexpr double kWidthTolerance = 3.0;

struct MatchReport {
  double threshold = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double iou = 0;
  // Fraction of matched pairs (with a known GT thickness) whose predicted
  // thickness is within 3 inches. 0 when there is no such pair.
  double width_accuracy = 0;
  std::size_t width_pairs = 0;
  // (pred index, gt index)
  std::vector<std::pair<std::size_t, std::size_t>> matches;
};

double f1_score(double precision, double recall);

// One-to-one greedy matching in ascending endpoint_pair_distance order
// (ties by pred index then gt index); a pair qualifies when that distance is
// <= threshold. Two empty sets score P = R = F1 = 1.
MatchReport match_walls(std::span<const WallSegment> pred, std::span<const WallSegment> gt,
                        double threshold);

// Binary-mask IoU at 1-inch resolution; walls are thickness-wide rectangles
// (1 inch when thickness is unknown). Two empty sets give 1.
double wall_iou(std::span<const WallSegment> a, std::span<const WallSegment> b);

// Pixel centres (integer coordinates) covered by the wall rectangle.
std::vector<std::pair<long, long>> rasterize_wall(const WallSegment& w);

}  // namespace a2p::geo
