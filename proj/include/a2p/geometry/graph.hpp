#pragma once

#include <span>
#include <vector>

#include "a2p/geometry/wall.hpp"

namespace a2p::geo {

inline constexpr double kDefaultJunctionTolerance = 1.0;
inline constexpr double kDefaultCornerMergeTolerance = 1.0;
inline constexpr double kDuplicateThreshold = 10.0;

struct WallGraph {
  std::vector<WallSegment> walls;

  // Distinct endpoints, first occurrence wins within the merge tolerance.
  std::vector<Point> corners(double merge_tol = kDefaultCornerMergeTolerance) const;
};

// Splits every wall whose interior passes within `tol` of another wall's
// endpoint at the projection of that endpoint. Pieces keep the parent's
// thickness and timestep and its direction. Repeats until nothing changes.
WallGraph split_t_junctions(const WallGraph& g, double tol = kDefaultJunctionTolerance);

// Drops candidates whose endpoints are both closer than `threshold` to some
// existing wall's endpoints, then deduplicates the survivors among themselves
// with the same rule, keeping the earliest.
std::vector<WallSegment> remove_duplicates(std::span<const WallSegment> candidates,
                                           std::span<const WallSegment> existing,
                                           double threshold = kDuplicateThreshold);

bool is_duplicate(const WallSegment& a, const WallSegment& b, double threshold = kDuplicateThreshold);

}  // namespace a2p::geo
