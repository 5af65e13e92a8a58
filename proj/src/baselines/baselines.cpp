#include "a2p/baselines/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

namespace a2p::base {

using ad::Tensor;

std::size_t heuristic_next(const SequenceState& s, std::uint64_t seed) {
  if (s.history.empty() || s.candidates.empty()) throw std::invalid_argument("heuristic_next: empty history or candidates");
  const auto& last = s.history.back();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ties;
  for (std::size_t i = 0; i < s.candidates.size(); ++i) {
    const double d = geo::segment_distance(last, s.candidates[i]);
    if (d < best) {
      best = d;
      ties = {i};
    } else if (d == best) {
      ties.push_back(i);
    }
  }
  if (ties.size() == 1) return ties[0];
  std::mt19937_64 rng(seed);
  return ties[std::uniform_int_distribution<std::size_t>(0, ties.size() - 1)(rng)];
}

ClassifierDataset build_classifier_dataset(const std::vector<std::vector<WallSegment>>& sequences) {
  ClassifierDataset d;
  std::vector<ClassifierExample> pos, neg;
  for (std::size_t s = 0; s < sequences.size(); ++s) {
    const std::size_t T = sequences[s].size();
    for (std::size_t L = 2; L <= T; ++L) {
      ClassifierExample e{s, {}, 1.0};
      for (std::size_t i = 0; i < L; ++i) e.walls.push_back(i);
      pos.push_back(e);
      for (std::size_t f = L; f < T; ++f) {
        ClassifierExample n = e;
        n.walls.back() = f;
        n.label = 0.0;
        neg.push_back(n);
      }
    }
  }
  d.unique_positives = pos.size();
  d.negatives = neg.size();
  d.examples = pos;
  for (std::size_t i = 0; d.examples.size() < neg.size(); ++i) d.examples.push_back(pos[i % pos.size()]);
  d.examples.insert(d.examples.end(), neg.begin(), neg.end());
  return d;
}

ClassifierModel::ClassifierModel(nw::NextWallConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      in_proj_(params_, "cls.in_proj", cfg.coord_dim + cfg.type_dim + cfg.time_dim, cfg.encoder.dim, seed),
      head_(params_, "cls.head", cfg.encoder.dim, 1, seed) {
  std::mt19937_64 rng(ad::split_seed(seed, "cls.type"));
  type_table_ = params_.add("cls.type", ad::normal_init({3, cfg.type_dim}, 1.0, rng));
  cls_ = params_.add("cls.token", ad::normal_init({1, cfg.encoder.dim}, 1.0, rng));
  encoder_ = nn::TransformerEncoder(params_, "cls.encoder", cfg.encoder, seed);
}

Tensor ClassifierModel::logit(const std::vector<WallSegment>& walls, std::mt19937_64* rng) const {
  const auto st = nw::assign_timesteps(walls, {});
  std::mt19937_64 unused(0);
  const bool train = rng != nullptr;
  Tensor x = ad::concat({cls_, in_proj_(nw::wall_features(st, type_table_, cfg_))}, 0);
  x = encoder_.forward(x, train ? *rng : unused, train);
  return head_(ad::slice(x, 0, 0, 1));
}

void save_classifier(const ClassifierModel& m, const std::filesystem::path& path) {
  ad::save_checkpoint(m.params(), path);
  std::ofstream(path.string() + ".json") << nw::to_json(m.config()).dump(2) << "\n";
}

ClassifierModel load_classifier(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw std::runtime_error("missing classifier config " + path.string() + ".json");
  ClassifierModel m(nw::next_wall_config_from_json(nlohmann::json::parse(in)), 0);
  ad::load_checkpoint(m.params(), path);
  return m;
}

std::vector<double> classifier_probabilities(const SequenceState& s, const ClassifierModel& m) {
  ad::NoGradGuard ng;
  const SequenceState n = nw::normalized(s, m.config().max_extent);
  std::vector<double> out;
  for (const auto& c : n.candidates) {
    auto walls = n.history;
    walls.push_back(c);
    out.push_back(1.0 / (1.0 + std::exp(-m.logit(walls).item())));
  }
  return out;
}

std::size_t classifier_next(const SequenceState& s, const ClassifierModel& m) {
  if (s.candidates.empty()) throw std::invalid_argument("classifier_next: no candidates");
  const auto p = classifier_probabilities(s, m);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

ClassifierModel train_classifier(const std::vector<std::vector<WallSegment>>& sequences, const nw::NextWallConfig& cfg,
                                 const ClassifierTrainConfig& train, std::vector<double>* losses) {
  const auto data = build_classifier_dataset(sequences);
  if (data.examples.empty()) throw std::invalid_argument("train_classifier: no examples");
  std::vector<nw::Frame> frames;
  for (const auto& seq : sequences) frames.push_back(nw::normalization_frame({{}, seq}, cfg.max_extent));
  ClassifierModel model(cfg, train.seed);
  ad::Adam opt({.lr = train.lr});
  std::mt19937_64 rng(ad::split_seed(train.seed, "cls.train"));
  std::uniform_real_distribution<double> u01(0, 1);
  const auto decay_step = static_cast<std::size_t>(train.decay_at * static_cast<double>(train.steps));
  for (std::size_t step = 0; step < train.steps; ++step) {
    if (step == decay_step) opt.set_lr(train.lr * 0.1);
    model.params().zero_grad();
    double total = 0;
    for (std::size_t b = 0; b < train.batch; ++b) {
      const auto& ex = data.examples[rng() % data.examples.size()];
      double theta = 0, scale = 1, tx = 0, ty = 0;
      if (train.augment) {
        theta = u01(rng) * 2 * std::numbers::pi;
        scale = 0.8 + 0.4 * u01(rng);
        tx = (2 * u01(rng) - 1) * 100;
        ty = (2 * u01(rng) - 1) * 100;
      }
      const double c = std::cos(theta), sn = std::sin(theta);
      std::vector<WallSegment> walls;
      for (auto i : ex.walls) {
        WallSegment w = frames[ex.sequence].apply(sequences[ex.sequence][i]);
        const WallSegment o = w;
        w.x0 = scale * (c * o.x0 - sn * o.y0) + tx;
        w.y0 = scale * (sn * o.x0 + c * o.y0) + ty;
        w.x1 = scale * (c * o.x1 - sn * o.y1) + tx;
        w.y1 = scale * (sn * o.x1 + c * o.y1) + ty;
        walls.push_back(w);
      }
      const double target[] = {ex.label};
      Tensor loss = ad::scale(ad::bce_with_logits(model.logit(walls, &rng), target), 1.0 / static_cast<double>(train.batch));
      loss.backward();
      total += loss.item();
    }
    opt.step(model.params());
    if (losses) losses->push_back(total);
  }
  return model;
}

}  // namespace a2p::base
