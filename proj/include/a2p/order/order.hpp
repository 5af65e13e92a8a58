#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "a2p/baselines/baselines.hpp"
#include "a2p/nextwall/model.hpp"

namespace a2p::order {

using geo::WallSegment;

// Coordinates seen by the TCN, after the floor frame and walk orientation.
enum class CoordFrame {
  Floor,         // floor frame as is
  Start,         // translated so the first wall starts at the origin
  StartAligned,  // additionally rotated so the first wall points along +x
};

struct TcnConfig {
  std::size_t levels = 8;
  std::size_t kernel = 7;
  std::size_t channels = 10;
  std::size_t latent_level = 6;  // 1-based block whose output is the encoding
  std::size_t max_walls = 10;
  CoordFrame frame = CoordFrame::Start;
};

nlohmann::json to_json(const TcnConfig& c);
TcnConfig tcn_config_from_json(const nlohmann::json& j);

// Causal dilated residual blocks (dilation 2^i), each conv -> relu -> conv ->
// relu plus a 1x1 residual where widths differ, then a 1x1 output conv.
class TcnModel {
 public:
  TcnModel(TcnConfig cfg, std::uint64_t seed);

  // x [B, 1, L] -> reconstruction [B, 1, L]; the latent level output
  // [B, channels, L] is written to *latent when given.
  ad::Tensor forward(const ad::Tensor& x, ad::Tensor* latent = nullptr) const;

  std::size_t input_length() const { return 4 * cfg_.max_walls; }
  std::size_t encoding_dim() const { return cfg_.channels * input_length(); }
  const TcnConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

 private:
  struct Block {
    ad::Tensor w1, b1, w2, b2, wr, br;  // wr undefined when widths match
    std::size_t dilation = 1;
  };
  TcnConfig cfg_;
  ad::ParameterSet params_;
  std::vector<Block> blocks_;
  ad::Tensor out_w_, out_b_;
};

void save_tcn(const TcnModel& m, const std::filesystem::path& path);
TcnModel load_tcn(const std::filesystem::path& path);

// Maps a floor's walls into [-1, 1]: centre of their bounding box, scale
// 2 / longer side.
nw::Frame tcn_frame(const std::vector<WallSegment>& floor_walls);

// Orients each wall along the walk: the first wall ends at the endpoint nearer
// the second wall, later walls start at the endpoint nearer the previous
// wall's end. Input orientation does not affect the result.
std::vector<WallSegment> orient_along_walk(std::vector<WallSegment> seq);

// orient_along_walk, then the config's coordinate frame.
std::vector<WallSegment> prepare_sequence(const std::vector<WallSegment>& seq, CoordFrame frame);

// x0, y0, x1, y1 per wall, zero padded (or cut to the last max_walls walls).
std::vector<double> flatten_walls(const std::vector<WallSegment>& seq, std::size_t max_walls);

struct TcnTrainConfig {
  std::size_t iterations = 20000;
  std::size_t batch = 32;
  double lr = 5e-4;
  std::size_t min_walls = 2;
  std::size_t max_walls = 10;
  std::uint64_t seed = 0;
};

// Each example: 2..10 walls sampled without replacement from a random floor,
// in sampled order, in that floor's tcn_frame, then prepare_sequence. L2
// reconstruction loss.
TcnModel train_tcn(const std::vector<std::vector<WallSegment>>& floors, const TcnConfig& cfg,
                   const TcnTrainConfig& train, std::vector<double>* losses = nullptr);

// Latent-level activations of prepare_sequence(seq), flattened. seq must
// already be in the floor's tcn_frame; throws when it has fewer than 2 walls.
std::vector<double> encode_sequence(const TcnModel& m, const std::vector<WallSegment>& seq);

struct GaussianSummary {
  std::vector<double> mean;
  std::vector<double> var;  // population variance
};

GaussianSummary fit_gaussian(const std::vector<std::vector<double>>& encodings);
// Squared Frechet distance between diagonal Gaussians:
// sum (mu_a - mu_b)^2 + (sigma_a - sigma_b)^2.
double frechet_distance(const GaussianSummary& a, const GaussianSummary& b);

// Produces up to n walls from s.candidates, in modelling order, continuing
// s.history (whose last wall is the starting edge).
using SequenceGenerator =
    std::function<std::vector<WallSegment>(const nw::SequenceState& s, std::size_t n, std::uint64_t rng_seed)>;

SequenceGenerator predictor_generator(const nw::NextWallModel& m);
SequenceGenerator heuristic_generator();
SequenceGenerator classifier_generator(const base::ClassifierModel& m);
SequenceGenerator random_generator();

struct OrderFloor {
  std::vector<WallSegment> gt;    // GT walls in GT order
  std::vector<WallSegment> pool;  // walls to order: GT walls or predicted ones
};

enum class StartPolicy {
  FirstWall,   // one sequence per floor, seeded at its first GT wall
  RandomWall,  // floors cycled, seeded at a random GT wall, every other wall a candidate
  GtPrefix,    // floors cycled, random GT step s; walls 0..s are history, the rest candidates
};

struct OrderEvalConfig {
  std::vector<std::size_t> lengths = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::size_t sequences = 100;  // FirstWall: capped at the number of floors
  StartPolicy start = StartPolicy::GtPrefix;
  std::uint64_t seed = 0;
};

struct OrderRow {
  std::size_t length = 0;
  std::string method;
  double score = 0;
};

// For each length N: `sequences` (floor, start) pairs; the real set holds the
// GT windows start..start+N, each method rolls out N walls starting from the
// pool wall nearest the GT start wall (history walls are likewise the pool
// walls nearest their GT walls). Sequences are start + N walls, cut to the
// last max_walls and oriented along the walk. "gt-replay" is the real set
// itself. Score = frechet_distance(generated, real).
std::vector<OrderRow> evaluate_order(const TcnModel& tcn, const std::vector<OrderFloor>& floors,
                                     const std::vector<std::pair<std::string, SequenceGenerator>>& methods,
                                     const OrderEvalConfig& cfg);

std::string order_csv(const std::vector<OrderRow>& rows);

}  // namespace a2p::order
