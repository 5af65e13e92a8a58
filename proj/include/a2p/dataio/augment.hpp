#pragma once

#include <cstdint>
#include <vector>

#include "a2p/dataio/floor.hpp"

namespace a2p::data {

// x' = s R(theta) x + t
struct Similarity {
  double scale = 1;
  double theta = 0;
  double tx = 0, ty = 0;

  geo::Point apply(geo::Point p) const;
  geo::Point inverse(geo::Point p) const;
  geo::WallSegment apply(const geo::WallSegment& w) const;
  geo::WallSegment inverse(const geo::WallSegment& w) const;
};

enum class AugmentMode { CornerTrain, EdgeTrain, NextWallTrain };

enum class RotationKind { None, RightAngles, Continuous };

struct AugmentConfig {
  RotationKind rotation = RotationKind::Continuous;
  double min_scale = 0.8, max_scale = 1.2;  // EdgeTrain / NextWallTrain
  double max_translation = 100;             // NextWallTrain only
  double max_length = 1000;                 // normalization bound, pixels

  static AugmentConfig identity() { return {RotationKind::None, 1, 1, 0, 1000}; }
};

struct AugmentedFloor {
  SyntheticFloor floor;     // walls in the same order, geometry transformed
  double normalization = 1; // scale applied before augmentation
  Similarity transform;     // full map from original to augmented coordinates
};

// CornerTrain: random rotation. EdgeTrain: scale so the longer image side is
// <= max_length, then rotation and scaling. NextWallTrain: centre the walls,
// scale so their longer extent is <= max_length, then translation, rotation,
// and scaling (walls only, image untouched).
AugmentedFloor normalize_and_augment(const SyntheticFloor& floor, AugmentMode mode, std::uint64_t seed,
                                     const AugmentConfig& cfg = {});

// Applies `t` (origin at the image's top-left) to the image, growing the
// canvas to the transformed bounds; the offset that keeps content in view is
// folded back into `t`.
raster::DensityImage warp_density(const raster::DensityImage& img, Similarity& t);

}  // namespace a2p::data
