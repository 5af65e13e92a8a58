#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "a2p/autodiff/layers.hpp"
#include "a2p/candidates/corners.hpp"
#include "a2p/dataio/augment.hpp"

namespace a2p::cand {

inline constexpr std::size_t kThicknessClasses = geo::kMaxThickness;  // class k <-> k+1 inches

// Reference points at i/(n+1), i = 1..n, of fmap-space coordinates
// (x * scale + offset); bilinear samples max-pooled per channel. [1 x C]
ad::Tensor pool_edge_features(const ad::Tensor& fmap, const geo::WallSegment& edge, std::size_t n,
                              double scale = 1.0, double offset = 0.0);

// Two-layer perceptron.
struct Mlp {
  nn::Linear l1, l2;
  Mlp() = default;
  Mlp(ad::ParameterSet& params, const std::string& name, std::size_t in, std::size_t hidden, std::size_t out,
      std::uint64_t seed)
      : l1(params, name + ".l1", in, hidden, seed), l2(params, name + ".l2", hidden, out, seed) {}
  ad::Tensor operator()(const ad::Tensor& x) const { return l2(ad::relu(l1(x))); }
};

struct EdgeClassifierConfig {
  std::size_t n_ref_points = 16;
  std::size_t channels = 12;
  std::vector<std::size_t> dilations = {1, 3, 9};
  std::size_t downsample = 2;  // average pooling before the conv stack
  std::size_t hidden = 64;
};

nlohmann::json to_json(const EdgeClassifierConfig& c);
EdgeClassifierConfig edge_config_from_json(const nlohmann::json& j);

class EdgeClassifier {
 public:
  EdgeClassifier(EdgeClassifierConfig cfg, std::uint64_t seed);

  // Conv features concatenated with the downsampled input: [channels + 3, h, w].
  ad::Tensor feature_map(const raster::DensityImage& img) const;
  // Pooled features for each edge (image pixel coordinates): [m x C].
  ad::Tensor pool(const ad::Tensor& fmap, std::span<const geo::WallSegment> edges) const;

  struct Scores {
    ad::Tensor edge_logits;       // [m x 1]
    ad::Tensor thickness_logits;  // [m x 84]
  };
  Scores heads(const ad::Tensor& pooled) const;
  Scores forward(const raster::DensityImage& img, std::span<const geo::WallSegment> edges) const;

  std::size_t feature_channels() const { return cfg_.channels + raster::kChannels; }
  const EdgeClassifierConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

 private:
  EdgeClassifierConfig cfg_;
  ad::ParameterSet params_;
  std::vector<ad::Tensor> weights_, biases_;
  Mlp edge_head_, thickness_head_;
};

// Checkpoint plus "<path>.json" holding the config.
void save_edge_classifier(const EdgeClassifier& clf, const std::filesystem::path& path);
EdgeClassifier load_edge_classifier(const std::filesystem::path& path);

struct Candidate {
  geo::WallSegment wall;  // thickness = argmax class
  double prob = 0;
};

struct EnumerateOptions {
  double prob_threshold = 0.5;  // negative keeps every pair
  // Drop pairs whose segment passes within this distance of a third corner;
  // such pairs span several collinear walls. <= 0 disables.
  double through_corner_tol = 4.0;
  // Image pixels per inch, to report thickness in inches.
  double pixels_per_inch = 1.0;
};

struct Enumeration {
  std::vector<Candidate> candidates;
  std::size_t pairs_evaluated = 0;
};

bool passes_through_corner(geo::Point a, geo::Point b, std::span<const geo::Point> corners, double tol);

// Scores every corner pair i < j; fewer than 2 corners gives nothing.
Enumeration enumerate_and_classify(std::span<const geo::Point> corners, const raster::DensityImage& img,
                                   const EdgeClassifier& clf, const EnumerateOptions& opts = {});

nlohmann::json candidates_to_json(const std::vector<Candidate>& c);

struct EdgeTrainConfig {
  std::size_t steps = 400;
  double lr = 1e-3;
  double negative_ratio = 3.0;
  bool augment = true;
  data::AugmentConfig augmentation{data::RotationKind::RightAngles, 0.9, 1.1, 0, 1000};
  double through_corner_tol = 4.0;
  std::uint64_t seed = 0;
};

// Joint edge BCE + thickness CE (ignoring negatives and unlabeled walls).
// Throws when the floors contain no walls.
EdgeClassifier train_edge_classifier(const std::vector<data::SyntheticFloor>& floors, const EdgeClassifierConfig& cfg,
                                     const EdgeTrainConfig& train, TrainLog* log = nullptr);

// Positive GT walls and sampled negative corner pairs for one floor.
struct EdgeExamples {
  std::vector<geo::WallSegment> edges;
  std::vector<double> labels;      // 1 wall, 0 not
  std::vector<int> thickness;      // class index or kIgnoreIndex
};
EdgeExamples edge_examples(const std::vector<geo::WallSegment>& walls, double negative_ratio, double through_tol,
                           double thickness_scale, std::mt19937_64& rng);

// Pooling ablation on constructed feature maps: a positive edge carries a
// short ridge of activation away from its midpoint, a negative edge has the
// same ridge placed beside it. Returns held-out accuracy of an MLP head
// trained on pooled features with n reference points.
struct PoolingExperimentConfig {
  std::size_t n_ref_points = 1;
  std::size_t map_size = 64;
  std::size_t channels = 4;
  std::size_t train_examples = 1024;
  std::size_t test_examples = 512;
  std::size_t steps = 400;
  std::size_t batch = 32;
  double lr = 3e-3;
  std::uint64_t seed = 0;
};
double run_pooling_experiment(const PoolingExperimentConfig& cfg);

}  // namespace a2p::cand
