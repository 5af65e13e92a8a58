#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "json.hpp"

#include "a2p/autodiff/layers.hpp"
#include "a2p/geometry/wall.hpp"

namespace a2p::nw {

using geo::WallSegment;

// History oldest-first with reverse-chronological timesteps (last = 1, clamp
// at 10); candidates carry t = 0.
struct SequenceState {
  std::vector<WallSegment> history;
  std::vector<WallSegment> candidates;
};

// Imported models without history give every existing wall t = 10.
SequenceState assign_timesteps(std::vector<WallSegment> history, std::vector<WallSegment> candidates,
                               bool imported = false);
// Appends `w` as the newest wall and renumbers the history.
void push_history(SequenceState& s, WallSegment w);

struct NextWallConfig {
  std::size_t coord_dim = 256;  // 64 per coordinate
  std::size_t type_dim = 128;
  std::size_t time_dim = 128;
  nn::TransformerConfig encoder{256, 8, 512, 6, 0.1, 0.1};
  double max_extent = 1000;  // normalization bound
};

nlohmann::json to_json(const NextWallConfig& c);
NextWallConfig next_wall_config_from_json(const nlohmann::json& j);

// x' = s (x - c): centres the walls' bounding box and scales so its longer
// side is at most max_extent.
struct Frame {
  double cx = 0, cy = 0, scale = 1;
  WallSegment apply(const WallSegment& w) const;
};
Frame normalization_frame(const SequenceState& s, double max_extent);

// [n x (coord + type + time)] input rows for history then candidates:
// sinusoid of the canonicalized endpoints, type embedding row, sinusoid of t.
ad::Tensor wall_features(const SequenceState& s, const ad::Tensor& type_table, const NextWallConfig& cfg);
// The state mapped into its normalization frame.
SequenceState normalized(const SequenceState& s, double max_extent);

class NextWallModel {
 public:
  NextWallModel(NextWallConfig cfg, std::uint64_t seed);

  // [n x 512] for history then candidates, coordinates used as given.
  ad::Tensor input_features(const SequenceState& s) const;
  // Per-wall embeddings [n x 256], history rows first. Coordinates used as
  // given; dropout active when rng is set.
  ad::Tensor embed_raw(const SequenceState& s, std::mt19937_64* rng = nullptr) const;
  // Normalizes into the canonical frame first.
  ad::Tensor embed(const SequenceState& s) const;

  const NextWallConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

 private:
  NextWallConfig cfg_;
  ad::ParameterSet params_;
  nn::Linear in_proj_, out_proj_;
  ad::Tensor type_table_;  // [3 x type_dim]
  nn::TransformerEncoder encoder_;
};

void save_next_wall(const NextWallModel& m, const std::filesystem::path& path);
NextWallModel load_next_wall(const std::filesystem::path& path);

struct ScoreResult {
  std::vector<double> scores;  // cosine to the last wall, per candidate
  std::vector<double> probs;   // softmax(scores / temperature)
  double entropy_bits = 0;
};

// Throws std::invalid_argument when the history is empty (pick a seed wall first).
ScoreResult score_candidates(const SequenceState& s, const NextWallModel& m, double temperature = 1.0);

// Mean over negatives of max(0, d(a,p) - d(a,n) + margin), d = 1 - cosine.
// anchor, positive [1 x d]; negatives [k x d].
ad::Tensor triplet_loss(const ad::Tensor& anchor, const ad::Tensor& positive, const ad::Tensor& negatives,
                        double margin = 1.0);

// Greedy auto-regressive rollout of up to k walls.
std::vector<WallSegment> rollout(SequenceState s, const NextWallModel& m, std::size_t k);

struct Alternative {
  std::size_t index = 0;  // into s.candidates
  double score = 0;
};
// Highest scores first; ties keep candidate order.
std::vector<Alternative> top_k_alternatives(const SequenceState& s, const NextWallModel& m, std::size_t k = 3);

struct NextWallTrainConfig {
  std::size_t steps = 2000;
  std::size_t batch = 8;
  double lr = 2e-4;
  double decay_at = 0.8;  // fraction of steps after which lr is multiplied by 0.1
  double margin = 1.0;
  bool augment = true;
  double max_translation = 100;
  double min_scale = 0.8, max_scale = 1.2;
  bool right_angle_rotations = false;  // else continuous
  // Probability of cutting the recency window: walls older than a random
  // h in [1, 9] get t = 10, as for imported walls.
  double history_cutoff = 0;
  std::uint64_t seed = 0;
};

struct NextWallTrainLog {
  std::vector<double> losses;  // per step, mean over the batch
};

// Each example is a GT prefix: history = first k walls, positive = wall k,
// negatives = the rest. Sequences shorter than 2 walls are skipped.
NextWallModel train_next_wall(const std::vector<std::vector<WallSegment>>& sequences, const NextWallConfig& cfg,
                              const NextWallTrainConfig& train, NextWallTrainLog* log = nullptr);

}  // namespace a2p::nw
