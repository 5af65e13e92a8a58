#include "a2p/nextwall/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace a2p::nw {

using ad::Tensor;

SequenceState assign_timesteps(std::vector<WallSegment> history, std::vector<WallSegment> candidates, bool imported) {
  const std::size_t n = history.size();
  for (std::size_t i = 0; i < n; ++i)
    history[i].timestep = imported ? geo::kOldTimestep : std::min<int>(static_cast<int>(n - i), geo::kOldTimestep);
  for (auto& c : candidates) c.timestep = 0;
  return {std::move(history), std::move(candidates)};
}

void push_history(SequenceState& s, WallSegment w) {
  for (auto& h : s.history) h.timestep = std::min(h.timestep + 1, geo::kOldTimestep);
  w.timestep = 1;
  s.history.push_back(w);
}

nlohmann::json to_json(const NextWallConfig& c) {
  return {{"coord_dim", c.coord_dim},
          {"type_dim", c.type_dim},
          {"time_dim", c.time_dim},
          {"dim", c.encoder.dim},
          {"heads", c.encoder.heads},
          {"ff_dim", c.encoder.ff_dim},
          {"blocks", c.encoder.blocks},
          {"dropout", c.encoder.dropout},
          {"residual_init_scale", c.encoder.residual_init_scale},
          {"max_extent", c.max_extent}};
}

NextWallConfig next_wall_config_from_json(const nlohmann::json& j) {
  NextWallConfig c;
  c.coord_dim = j.at("coord_dim");
  c.type_dim = j.at("type_dim");
  c.time_dim = j.at("time_dim");
  c.encoder.dim = j.at("dim");
  c.encoder.heads = j.at("heads");
  c.encoder.ff_dim = j.at("ff_dim");
  c.encoder.blocks = j.at("blocks");
  c.encoder.dropout = j.at("dropout");
  c.encoder.residual_init_scale = j.value("residual_init_scale", 1.0);
  c.max_extent = j.at("max_extent");
  return c;
}

WallSegment Frame::apply(const WallSegment& w) const {
  WallSegment o = w;
  o.x0 = scale * (w.x0 - cx);
  o.y0 = scale * (w.y0 - cy);
  o.x1 = scale * (w.x1 - cx);
  o.y1 = scale * (w.y1 - cy);
  return o;
}

Frame normalization_frame(const SequenceState& s, double max_extent) {
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  auto grow = [&](const WallSegment& w) {
    x0 = std::min({x0, w.x0, w.x1});
    x1 = std::max({x1, w.x0, w.x1});
    y0 = std::min({y0, w.y0, w.y1});
    y1 = std::max({y1, w.y0, w.y1});
  };
  for (const auto& w : s.history) grow(w);
  for (const auto& w : s.candidates) grow(w);
  if (!std::isfinite(x0)) return {};
  const double extent = std::max(x1 - x0, y1 - y0);
  return {(x0 + x1) / 2, (y0 + y1) / 2, extent > max_extent ? max_extent / extent : 1.0};
}

NextWallModel::NextWallModel(NextWallConfig cfg, std::uint64_t seed)
    : cfg_(cfg),
      in_proj_(params_, "nw.in_proj", cfg.coord_dim + cfg.type_dim + cfg.time_dim, cfg.encoder.dim, seed),
      out_proj_(params_, "nw.out_proj", cfg.encoder.dim, cfg.encoder.dim, seed) {
  if (cfg.coord_dim % 4 != 0) throw std::invalid_argument("coord_dim must be a multiple of 4");
  std::mt19937_64 rng(ad::split_seed(seed, "nw.type"));
  type_table_ = params_.add("nw.type", ad::normal_init({3, cfg.type_dim}, 1.0, rng));
  encoder_ = nn::TransformerEncoder(params_, "nw.encoder", cfg.encoder, seed);
}

Tensor wall_features(const SequenceState& s, const Tensor& type_table, const NextWallConfig& cfg) {
  std::vector<double> coords, times;
  std::vector<std::size_t> kinds;
  auto add = [&](const WallSegment& w) {
    // Endpoint order carries no meaning; canonicalize it.
    const bool swap = std::pair(w.x1, w.y1) < std::pair(w.x0, w.y0);
    const WallSegment c = swap ? w.reversed() : w;
    coords.insert(coords.end(), {c.x0, c.y0, c.x1, c.y1});
    times.push_back(static_cast<double>(w.timestep));
    kinds.push_back(static_cast<std::size_t>(w.kind()));
  };
  for (const auto& w : s.history) add(w);
  for (const auto& w : s.candidates) add(w);
  if (kinds.empty()) throw std::invalid_argument("wall_features: no walls");
  return ad::concat({ad::sinusoidal_encoding_multi(coords, 4, cfg.coord_dim / 4), ad::embedding(type_table, kinds),
                     ad::sinusoidal_encoding(times, cfg.time_dim)},
                    1);
}

SequenceState normalized(const SequenceState& s, double max_extent) {
  const Frame f = normalization_frame(s, max_extent);
  SequenceState n;
  for (const auto& w : s.history) n.history.push_back(f.apply(w));
  for (const auto& w : s.candidates) n.candidates.push_back(f.apply(w));
  return n;
}

Tensor NextWallModel::input_features(const SequenceState& s) const { return wall_features(s, type_table_, cfg_); }

Tensor NextWallModel::embed_raw(const SequenceState& s, std::mt19937_64* rng) const {
  std::mt19937_64 unused(0);
  const bool train = rng != nullptr;
  Tensor x = in_proj_(input_features(s));
  x = encoder_.forward(x, train ? *rng : unused, train);
  return out_proj_(x);
}

Tensor NextWallModel::embed(const SequenceState& s) const { return embed_raw(normalized(s, cfg_.max_extent)); }

void save_next_wall(const NextWallModel& m, const std::filesystem::path& path) {
  ad::save_checkpoint(m.params(), path);
  std::ofstream(path.string() + ".json") << to_json(m.config()).dump(2) << "\n";
}

NextWallModel load_next_wall(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw std::runtime_error("missing model config " + path.string() + ".json");
  NextWallModel m(next_wall_config_from_json(nlohmann::json::parse(in)), 0);
  ad::load_checkpoint(m.params(), path);
  return m;
}

ScoreResult score_candidates(const SequenceState& s, const NextWallModel& m, double temperature) {
  if (s.history.empty())
    throw std::invalid_argument("score_candidates: empty history; choose a seed wall first");
  ScoreResult r;
  if (s.candidates.empty()) return r;
  ad::NoGradGuard ng;
  const Tensor e = m.embed(s);
  const std::size_t h = s.history.size();
  const Tensor sims = ad::cosine_similarity(ad::slice(e, 0, h - 1, h), ad::slice(e, 0, h, h + s.candidates.size()));
  r.scores = sims.values();
  const Tensor p = ad::softmax(ad::reshape(sims, {1, sims.size()}), temperature);
  r.probs = p.values();
  for (double q : r.probs)
    if (q > 0) r.entropy_bits -= q * std::log2(q);
  return r;
}

Tensor triplet_loss(const Tensor& anchor, const Tensor& positive, const Tensor& negatives, double margin) {
  if (negatives.rank() != 2 || negatives.dim(0) == 0) throw std::invalid_argument("triplet_loss: need >= 1 negative");
  const std::vector<std::size_t> rep(negatives.dim(0), 0);
  const Tensor pos = ad::cosine_similarity(anchor, ad::embedding(positive, rep));
  const Tensor neg = ad::cosine_similarity(anchor, negatives);
  // d(a,p) - d(a,n) = cos(a,n) - cos(a,p)
  return ad::mean(ad::hinge(ad::sub(neg, pos), margin));
}

std::vector<Alternative> top_k_alternatives(const SequenceState& s, const NextWallModel& m, std::size_t k) {
  const auto r = score_candidates(s, m);
  std::vector<Alternative> all;
  for (std::size_t i = 0; i < r.scores.size(); ++i) all.push_back({i, r.scores[i]});
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  if (all.size() > k) all.resize(k);
  return all;
}

std::vector<WallSegment> rollout(SequenceState s, const NextWallModel& m, std::size_t k) {
  if (s.history.empty()) throw std::invalid_argument("rollout: empty history; provide a seed wall");
  std::vector<WallSegment> out;
  while (out.size() < k && !s.candidates.empty()) {
    const auto best = top_k_alternatives(s, m, 1).front().index;
    WallSegment w = s.candidates[best];
    s.candidates.erase(s.candidates.begin() + static_cast<long>(best));
    push_history(s, w);
    out.push_back(s.history.back());
  }
  return out;
}

NextWallModel train_next_wall(const std::vector<std::vector<WallSegment>>& sequences, const NextWallConfig& cfg,
                              const NextWallTrainConfig& train, NextWallTrainLog* log) {
  std::vector<const std::vector<WallSegment>*> usable;
  std::vector<Frame> frames;
  for (const auto& seq : sequences)
    if (seq.size() >= 3) {
      usable.push_back(&seq);
      frames.push_back(normalization_frame({{}, seq}, cfg.max_extent));
    }
  if (usable.empty()) throw std::invalid_argument("train_next_wall: no sequence with at least 3 walls");
  NextWallModel model(cfg, train.seed);
  ad::Adam opt({.lr = train.lr});
  std::mt19937_64 rng(ad::split_seed(train.seed, "nw.train"));
  std::uniform_real_distribution<double> u01(0, 1);
  const auto decay_step = static_cast<std::size_t>(train.decay_at * static_cast<double>(train.steps));
  for (std::size_t step = 0; step < train.steps; ++step) {
    if (step == decay_step) opt.set_lr(train.lr * 0.1);
    model.params().zero_grad();
    double total = 0;
    for (std::size_t b = 0; b < train.batch; ++b) {
      const std::size_t si = rng() % usable.size();
      const auto& seq = *usable[si];
      // Prefix length k in [1, n-2] so at least one negative remains.
      const std::size_t k = 1 + rng() % (seq.size() - 2);
      double theta = 0, scale = 1, tx = 0, ty = 0;
      if (train.augment) {
        theta = train.right_angle_rotations ? (rng() % 4) * std::numbers::pi / 2 : u01(rng) * 2 * std::numbers::pi;
        scale = train.min_scale + (train.max_scale - train.min_scale) * u01(rng);
        tx = (2 * u01(rng) - 1) * train.max_translation;
        ty = (2 * u01(rng) - 1) * train.max_translation;
      }
      const double c = std::cos(theta), sn = std::sin(theta);
      auto xf = [&](const WallSegment& w) {
        WallSegment o = frames[si].apply(w);
        auto map = [&](double x, double y) -> std::pair<double, double> {
          return {scale * (c * x - sn * y) + tx, scale * (sn * x + c * y) + ty};
        };
        std::tie(o.x0, o.y0) = map(o.x0, o.y0);
        std::tie(o.x1, o.y1) = map(o.x1, o.y1);
        return o;
      };
      std::vector<WallSegment> hist, cands;
      for (std::size_t i = 0; i < seq.size(); ++i) (i < k ? hist : cands).push_back(xf(seq[i]));
      SequenceState st = assign_timesteps(std::move(hist), std::move(cands));
      if (train.history_cutoff > 0 && u01(rng) < train.history_cutoff) {
        const std::size_t h = 1 + rng() % (geo::kOldTimestep - 1);
        for (std::size_t i = 0; i + h < st.history.size(); ++i) st.history[i].timestep = geo::kOldTimestep;
      }
      const Tensor e = model.embed_raw(st, &rng);
      const std::size_t n = seq.size();
      Tensor loss = triplet_loss(ad::slice(e, 0, k - 1, k), ad::slice(e, 0, k, k + 1), ad::slice(e, 0, k + 1, n),
                                 train.margin);
      loss = ad::scale(loss, 1.0 / static_cast<double>(train.batch));
      loss.backward();
      total += loss.item();
    }
    opt.step(model.params());
    if (log) log->losses.push_back(total);
  }
  return model;
}

}  // namespace a2p::nw
