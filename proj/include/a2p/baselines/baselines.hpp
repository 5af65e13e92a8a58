#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "a2p/nextwall/model.hpp"

namespace a2p::base {

using geo::WallSegment;
using nw::SequenceState;

// Index of the candidate closest (segment_distance) to the last history wall;
// exact ties are broken uniformly at random with `seed`.
std::size_t heuristic_next(const SequenceState& s, std::uint64_t seed);

struct ClassifierExample {
  std::size_t sequence = 0;       // index into the input sequences
  std::vector<std::size_t> walls; // wall indices within that sequence, in order
  double label = 0;
};

struct ClassifierDataset {
  std::vector<ClassifierExample> examples;
  std::size_t unique_positives = 0;
  std::size_t negatives = 0;
};

// Positives: every prefix of length >= 2. Negatives: a prefix of length L with
// its last wall replaced by each wall at positions L+1..T. Positives are then
// replicated (round robin) until they are as many as the negatives.
ClassifierDataset build_classifier_dataset(const std::vector<std::vector<WallSegment>>& sequences);

// Encoder of the next-wall architecture with a learnable classification token
// prepended; a linear layer on its output gives the logit.
class ClassifierModel {
 public:
  ClassifierModel(nw::NextWallConfig cfg, std::uint64_t seed);

  // Walls in modelling order (timesteps assigned here, newest t = 1); the
  // caller normalizes coordinates. Returns the [1 x 1] logit.
  ad::Tensor logit(const std::vector<WallSegment>& walls, std::mt19937_64* rng = nullptr) const;

  const nw::NextWallConfig& config() const { return cfg_; }
  ad::ParameterSet& params() { return params_; }
  const ad::ParameterSet& params() const { return params_; }

 private:
  nw::NextWallConfig cfg_;
  ad::ParameterSet params_;
  nn::Linear in_proj_, head_;
  ad::Tensor type_table_, cls_;
  nn::TransformerEncoder encoder_;
};

void save_classifier(const ClassifierModel& m, const std::filesystem::path& path);
ClassifierModel load_classifier(const std::filesystem::path& path);

// Probability that history + candidate is a GT prefix, for every candidate.
std::vector<double> classifier_probabilities(const SequenceState& s, const ClassifierModel& m);
// Argmax of classifier_probabilities; ties keep list order.
std::size_t classifier_next(const SequenceState& s, const ClassifierModel& m);

struct ClassifierTrainConfig {
  std::size_t steps = 1000;
  std::size_t batch = 8;
  double lr = 2e-4;
  double decay_at = 0.8;
  bool augment = true;
  std::uint64_t seed = 0;
};

ClassifierModel train_classifier(const std::vector<std::vector<WallSegment>>& sequences, const nw::NextWallConfig& cfg,
                                 const ClassifierTrainConfig& train, std::vector<double>* losses = nullptr);

}  // namespace a2p::base
