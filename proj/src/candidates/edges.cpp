#include "a2p/candidates/edges.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace a2p::cand {

using ad::Tensor;
using geo::Point;
using geo::WallSegment;

Tensor pool_edge_features(const Tensor& fmap, const WallSegment& edge, std::size_t n, double scale, double offset) {
  if (n == 0) throw std::invalid_argument("pool_edge_features: n must be >= 1");
  std::vector<ad::SamplePoint> pts(n);
  for (std::size_t i = 1; i <= n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n + 1);
    const Point p = edge.a() + (edge.b() - edge.a()) * t;
    pts[i - 1] = {p.x * scale + offset, p.y * scale + offset};
  }
  return ad::max_rows(ad::bilinear_sample(fmap, pts));
}

nlohmann::json to_json(const EdgeClassifierConfig& c) {
  return {{"n_ref_points", c.n_ref_points}, {"channels", c.channels}, {"dilations", c.dilations},
          {"downsample", c.downsample},     {"hidden", c.hidden}};
}

EdgeClassifierConfig edge_config_from_json(const nlohmann::json& j) {
  EdgeClassifierConfig c;
  c.n_ref_points = j.at("n_ref_points").get<std::size_t>();
  c.channels = j.at("channels").get<std::size_t>();
  c.dilations = j.at("dilations").get<std::vector<std::size_t>>();
  c.downsample = j.at("downsample").get<std::size_t>();
  c.hidden = j.at("hidden").get<std::size_t>();
  return c;
}

EdgeClassifier::EdgeClassifier(EdgeClassifierConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.n_ref_points == 0 || cfg_.downsample == 0 || cfg_.dilations.empty())
    throw std::invalid_argument("EdgeClassifier: invalid config");
  std::size_t cin = raster::kChannels;
  for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) {
    const std::string name = "edge.conv" + std::to_string(i);
    std::mt19937_64 rng(ad::split_seed(seed, name));
    weights_.push_back(
        params_.add(name + ".weight", ad::xavier_uniform({cfg_.channels, cin, 3, 3}, cin * 9, cfg_.channels * 9, rng)));
    biases_.push_back(params_.add(name + ".bias", Tensor({cfg_.channels}, 0.0)));
    cin = cfg_.channels;
  }
  edge_head_ = Mlp(params_, "edge.head", feature_channels(), cfg_.hidden, 1, seed);
  thickness_head_ = Mlp(params_, "edge.thickness", feature_channels(), cfg_.hidden, kThicknessClasses, seed);
}

namespace {

Tensor downsample(const raster::DensityImage& img, std::size_t ds) {
  const std::size_t w = (img.width + ds - 1) / ds, h = (img.height + ds - 1) / ds;
  Tensor t({raster::kChannels, h, w});
  for (std::size_t c = 0; c < raster::kChannels; ++c)
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t q = 0; q < w; ++q) {
        double acc = 0;
        for (std::size_t dr = 0; dr < ds; ++dr)
          for (std::size_t dq = 0; dq < ds; ++dq) {
            const std::size_t sr = r * ds + dr, sq = q * ds + dq;
            if (sr < img.height && sq < img.width) acc += img.at(c, sr, sq);
          }
        t.values()[(c * h + r) * w + q] = acc / static_cast<double>(ds * ds);
      }
  return t;
}

}  // namespace

Tensor EdgeClassifier::feature_map(const raster::DensityImage& img) const {
  const Tensor x = downsample(img, cfg_.downsample);
  const std::size_t h = x.dim(1), w = x.dim(2);
  Tensor f = x;
  for (std::size_t i = 0; i < weights_.size(); ++i) f = ad::relu(ad::conv2d(f, weights_[i], biases_[i], cfg_.dilations[i]));
  const Tensor joined = ad::concat({ad::reshape(f, {cfg_.channels, h * w}), ad::reshape(x, {raster::kChannels, h * w})}, 0);
  return ad::reshape(joined, {feature_channels(), h, w});
}

Tensor EdgeClassifier::pool(const Tensor& fmap, std::span<const WallSegment> edges) const {
  // Image pixel centre x maps to (x - (ds - 1) / 2) / ds in the pooled grid.
  const double ds = static_cast<double>(cfg_.downsample);
  std::vector<Tensor> rows;
  rows.reserve(edges.size());
  for (const auto& e : edges) rows.push_back(pool_edge_features(fmap, e, cfg_.n_ref_points, 1.0 / ds, -(ds - 1) / (2 * ds)));
  return ad::concat(rows, 0);
}

EdgeClassifier::Scores EdgeClassifier::heads(const Tensor& pooled) const {
  return {edge_head_(pooled), thickness_head_(pooled)};
}

EdgeClassifier::Scores EdgeClassifier::forward(const raster::DensityImage& img,
                                               std::span<const WallSegment> edges) const {
  return heads(pool(feature_map(img), edges));
}

void save_edge_classifier(const EdgeClassifier& clf, const std::filesystem::path& path) {
  ad::save_checkpoint(clf.params(), path);
  std::ofstream(path.string() + ".json") << to_json(clf.config()).dump(2) << "\n";
}

EdgeClassifier load_edge_classifier(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw std::runtime_error("missing classifier config " + path.string() + ".json");
  EdgeClassifier clf(edge_config_from_json(nlohmann::json::parse(in)), 0);
  ad::load_checkpoint(clf.params(), path);
  return clf;
}

bool passes_through_corner(Point a, Point b, std::span<const Point> corners, double tol) {
  if (tol <= 0) return false;
  for (const auto& c : corners) {
    if (geo::distance(c, a) <= tol || geo::distance(c, b) <= tol) continue;
    if (geo::point_segment_distance(c, a, b) < tol) return true;
  }
  return false;
}

Enumeration enumerate_and_classify(std::span<const Point> corners, const raster::DensityImage& img,
                                   const EdgeClassifier& clf, const EnumerateOptions& opts) {
  Enumeration out;
  if (corners.size() < 2) return out;
  std::vector<WallSegment> pairs;
  for (std::size_t i = 0; i < corners.size(); ++i)
    for (std::size_t j = i + 1; j < corners.size(); ++j)
      if (geo::distance(corners[i], corners[j]) > 0) pairs.emplace_back(corners[i], corners[j]);
  out.pairs_evaluated = pairs.size();
  if (pairs.empty()) return out;
  ad::NoGradGuard ng;
  const auto s = clf.forward(img, pairs);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double p = 1.0 / (1.0 + std::exp(-s.edge_logits[k]));
    if (p < opts.prob_threshold) continue;
    if (passes_through_corner(pairs[k].a(), pairs[k].b(), corners, opts.through_corner_tol)) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < kThicknessClasses; ++c)
      if (s.thickness_logits.at(k, c) > s.thickness_logits.at(k, best)) best = c;
    const int inches = std::clamp(static_cast<int>(std::lround((best + 1) / opts.pixels_per_inch)), geo::kMinThickness,
                                  geo::kMaxThickness);
    WallSegment w = pairs[k];
    w.thickness = inches;
    out.candidates.push_back({w, p});
  }
  return out;
}

nlohmann::json candidates_to_json(const std::vector<Candidate>& c) {
  auto arr = nlohmann::json::array();
  for (const auto& k : c)
    arr.push_back({{"x0", k.wall.x0},
                   {"y0", k.wall.y0},
                   {"x1", k.wall.x1},
                   {"y1", k.wall.y1},
                   {"thickness", k.wall.thickness ? nlohmann::json(*k.wall.thickness) : nlohmann::json(nullptr)},
                   {"prob", k.prob}});
  return arr;
}

EdgeExamples edge_examples(const std::vector<WallSegment>& walls, double negative_ratio, double through_tol,
                           double thickness_scale, std::mt19937_64& rng) {
  EdgeExamples ex;
  for (const auto& w : walls) {
    ex.edges.push_back(w);
    ex.labels.push_back(1.0);
    ex.thickness.push_back(w.thickness ? std::clamp(static_cast<int>(std::lround(*w.thickness * thickness_scale)),
                                                    geo::kMinThickness, geo::kMaxThickness) -
                                             1
                                       : ad::kIgnoreIndex);
  }
  const auto corners = geo::WallGraph{walls}.corners();
  std::vector<WallSegment> negatives;
  for (std::size_t i = 0; i < corners.size(); ++i)
    for (std::size_t j = i + 1; j < corners.size(); ++j) {
      const WallSegment e(corners[i], corners[j]);
      if (std::any_of(walls.begin(), walls.end(), [&](const WallSegment& w) { return geo::endpoint_pair_distance(e, w) < 1.0; }))
        continue;
      if (passes_through_corner(e.a(), e.b(), corners, through_tol)) continue;
      negatives.push_back(e);
    }
  std::shuffle(negatives.begin(), negatives.end(), rng);
  const auto keep = std::min(negatives.size(), static_cast<std::size_t>(std::lround(negative_ratio * walls.size())));
  for (std::size_t k = 0; k < keep; ++k) {
    ex.edges.push_back(negatives[k]);
    ex.labels.push_back(0.0);
    ex.thickness.push_back(ad::kIgnoreIndex);
  }
  return ex;
}

EdgeClassifier train_edge_classifier(const std::vector<data::SyntheticFloor>& floors, const EdgeClassifierConfig& cfg,
                                     const EdgeTrainConfig& train, TrainLog* log) {
  if (std::all_of(floors.begin(), floors.end(), [](const auto& f) { return f.sequence.empty(); }))
    throw std::invalid_argument("train_edge_classifier: dataset has no positive edges");
  EdgeClassifier clf(cfg, train.seed);
  ad::Adam opt({.lr = train.lr});
  std::mt19937_64 rng(ad::split_seed(train.seed, "edge.train"));
  for (std::size_t step = 0; step < train.steps; ++step) {
    const auto* f = &floors[rng() % floors.size()];
    while (f->sequence.empty()) f = &floors[rng() % floors.size()];
    const auto aug = data::normalize_and_augment(*f, data::AugmentMode::EdgeTrain, rng(),
                                                 train.augment ? train.augmentation : data::AugmentConfig::identity());
    const auto ex = edge_examples(aug.floor.sequence, train.negative_ratio, train.through_corner_tol,
                                  aug.transform.scale, rng);
    clf.params().zero_grad();
    const auto s = clf.forward(aug.floor.density, ex.edges);
    Tensor loss = ad::add(ad::bce_with_logits(s.edge_logits, ex.labels), ad::cross_entropy(s.thickness_logits, ex.thickness));
    loss.backward();
    opt.step(clf.params());
    if (log) log->losses.push_back(loss.item());
  }
  return clf;
}

namespace {

struct ConstructedEdge {
  Tensor map;  // [C, S, S]
  WallSegment edge;
  bool positive = false;
};

// Noise everywhere; one short ridge of activation in channel 0 centred at
// edge parameter t0 (positives) or the same ridge shifted sideways (negatives).
ConstructedEdge construct_edge(const PoolingExperimentConfig& cfg, bool positive, std::mt19937_64& rng) {
  const double S = static_cast<double>(cfg.map_size);
  std::uniform_real_distribution<double> u01(0, 1), coord(6, S - 7);
  WallSegment e;
  for (;;) {
    e = WallSegment(coord(rng), coord(rng), coord(rng), coord(rng));
    if (e.length() >= 32 && e.length() <= 56) break;
  }
  const double t0 = (u01(rng) < 0.5 ? 0.1 : 0.7) + 0.2 * u01(rng);
  const Point dir = (e.b() - e.a()) * (1.0 / e.length());
  const Point nrm{-dir.y, dir.x};
  Point centre = e.a() + (e.b() - e.a()) * t0;
  if (!positive) centre = centre + nrm * ((u01(rng) < 0.5 ? -1 : 1) * (6 + 4 * u01(rng)));
  const Point r0 = centre - dir * 3.0, r1 = centre + dir * 3.0;
  Tensor map({cfg.channels, cfg.map_size, cfg.map_size});
  for (auto& v : map.values()) v = 0.3 * u01(rng);
  for (std::size_t y = 0; y < cfg.map_size; ++y)
    for (std::size_t x = 0; x < cfg.map_size; ++x) {
      const double d = geo::point_segment_distance({double(x), double(y)}, r0, r1);
      auto& v = map.values()[y * cfg.map_size + x];
      v = std::max(v, std::exp(-d * d / (2 * 0.8 * 0.8)));
    }
  return {map, e, positive};
}

}  // namespace

double run_pooling_experiment(const PoolingExperimentConfig& cfg) {
  std::mt19937_64 rng(ad::split_seed(cfg.seed, "pooling.data"));
  auto pooled_set = [&](std::size_t count, std::vector<double>& labels) {
    std::vector<Tensor> rows;
    for (std::size_t i = 0; i < count; ++i) {
      const bool pos = (i % 2) == 0;
      auto c = construct_edge(cfg, pos, rng);
      rows.push_back(pool_edge_features(c.map, c.edge, cfg.n_ref_points));
      labels.push_back(pos ? 1.0 : 0.0);
    }
    return ad::concat(rows, 0);
  };
  std::vector<double> train_labels, test_labels;
  const Tensor train_x = pooled_set(cfg.train_examples, train_labels);
  const Tensor test_x = pooled_set(cfg.test_examples, test_labels);

  ad::ParameterSet params;
  Mlp head(params, "pool.head", cfg.channels, 32, 1, cfg.seed);
  ad::Adam opt({.lr = cfg.lr});
  std::mt19937_64 brng(ad::split_seed(cfg.seed, "pooling.batches"));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    std::vector<std::size_t> ids(cfg.batch);
    std::vector<double> y(cfg.batch);
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      ids[b] = brng() % cfg.train_examples;
      y[b] = train_labels[ids[b]];
    }
    params.zero_grad();
    Tensor loss = ad::bce_with_logits(head(ad::embedding(train_x, ids)), y);
    loss.backward();
    opt.step(params);
  }
  ad::NoGradGuard ng;
  const Tensor logits = head(test_x);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < cfg.test_examples; ++i) correct += ((logits[i] > 0) == (test_labels[i] > 0.5));
  return static_cast<double>(correct) / static_cast<double>(cfg.test_examples);
}

}  // namespace a2p::cand
