#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "a2p/autodiff/params.hpp"
#include "a2p/dataio/floor.hpp"
#include "a2p/geometry/graph.hpp"
#include "a2p/raster/heatmap.hpp"

namespace a2p::cand {

// Small dilated conv stack producing a per-pixel corner logit.
struct CornerNetConfig {
  std::size_t channels = 12;
  std::vector<std::size_t> dilations = {1, 2, 4, 8};
};

class CornerScorer {
 public:
  CornerScorer(std::uint64_t seed, CornerNetConfig cfg = {});

  // img [3, H, W] -> logits [1, H, W]
  ad::Tensor logits(const ad::Tensor& img) const;
  // Sigmoid heatmap from one pass over the whole image.
  raster::Heatmap score(const raster::DensityImage& img) const;
  // Per tile: crop the tile plus a halo of receptive_radius() pixels, score,
  // keep the tile interior; then max-merge. Equal to score() exactly.
  raster::Heatmap score_tiled(const raster::DensityImage& img, std::size_t window = raster::kTileWindow,
                              std::size_t overlap = raster::kTileOverlap) const;
  std::size_t receptive_radius() const;

  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }
  const CornerNetConfig& config() const { return cfg_; }

 private:
  CornerNetConfig cfg_;
  ad::ParameterSet params_;
  std::vector<ad::Tensor> weights_, biases_;
};

struct CornerTrainConfig {
  std::size_t steps = 1000;
  std::size_t crop = 96;
  double lr = 2e-3;
  double target_sigma = 2.0;
  std::uint64_t seed = 0;
};

struct TrainLog {
  std::vector<double> losses;
};

// Checkpoint plus "<path>.json" holding the config.
void save_corner_scorer(const CornerScorer& m, const std::filesystem::path& path);
CornerScorer load_corner_scorer(const std::filesystem::path& path);

CornerScorer train_corner_scorer(const std::vector<data::SyntheticFloor>& floors, const CornerTrainConfig& cfg,
                                 TrainLog* log = nullptr);

enum class CornerMode { Oracle, Learned };

struct CornerDetector {
  CornerMode mode = CornerMode::Oracle;
  // Oracle: GT corners, each dropped with probability `drop` and jittered by N(0, sigma).
  geo::WallGraph gt;
  double sigma = 0;
  double drop = 0;
  std::uint64_t seed = 0;
  // Learned
  const CornerScorer* scorer = nullptr;
  int nms_radius = raster::kNmsRadius;
  double min_score = raster::kNmsMinScore;

  static CornerDetector oracle(geo::WallGraph gt, double sigma = 0, double drop = 0, std::uint64_t seed = 0);
  // Score floor 0.3: the trained scorer leaves weak responses along walls.
  static CornerDetector learned(const CornerScorer& scorer, double min_score = 0.3);
};

std::vector<geo::Point> detect_corners(const raster::DensityImage& img, const CornerDetector& det);

}  // namespace a2p::cand
