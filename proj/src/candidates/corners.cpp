#include "a2p/candidates/corners.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

#include "a2p/autodiff/ops.hpp"
#include "a2p/dataio/augment.hpp"

namespace a2p::cand {

using ad::Tensor;

void save_corner_scorer(const CornerScorer& m, const std::filesystem::path& path) {
  ad::save_checkpoint(m.params(), path);
  const nlohmann::json j = {{"channels", m.config().channels}, {"dilations", m.config().dilations}};
  std::ofstream(path.string() + ".json") << j.dump(2) << "\n";
}

CornerScorer load_corner_scorer(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw std::runtime_error("missing corner scorer config " + path.string() + ".json");
  const auto j = nlohmann::json::parse(in);
  CornerScorer m(0, {j.at("channels").get<std::size_t>(), j.at("dilations").get<std::vector<std::size_t>>()});
  ad::load_checkpoint(m.params(), path);
  return m;
}

CornerScorer::CornerScorer(std::uint64_t seed, CornerNetConfig cfg) : cfg_(std::move(cfg)) {
  std::size_t cin = raster::kChannels;
  for (std::size_t i = 0; i <= cfg_.dilations.size(); ++i) {
    const std::size_t cout = i == cfg_.dilations.size() ? 1 : cfg_.channels;
    const std::string name = "corner.conv" + std::to_string(i);
    std::mt19937_64 rng(ad::split_seed(seed, name));
    weights_.push_back(params_.add(name + ".weight", ad::xavier_uniform({cout, cin, 3, 3}, cin * 9, cout * 9, rng)));
    biases_.push_back(params_.add(name + ".bias", Tensor({cout}, 0.0)));
    cin = cout;
  }
}

std::size_t CornerScorer::receptive_radius() const {
  std::size_t r = 1;  // final 3x3 layer
  for (auto d : cfg_.dilations) r += d;
  return r;
}

Tensor CornerScorer::logits(const Tensor& img) const {
  Tensor x = img;
  for (std::size_t i = 0; i < cfg_.dilations.size(); ++i) x = ad::relu(ad::conv2d(x, weights_[i], biases_[i], cfg_.dilations[i]));
  return ad::conv2d(x, weights_.back(), biases_.back(), 1);
}

namespace {

raster::Heatmap to_heatmap(const Tensor& logit, std::size_t w, std::size_t h, std::size_t ox, std::size_t oy,
                           std::size_t stride) {
  raster::Heatmap out(w, h);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      const double v = logit[(r + oy) * stride + c + ox];
      out.at(r, c) = static_cast<float>(1.0 / (1.0 + std::exp(-v)));
    }
  return out;
}

// Crop [x0, x0+w) x [y0, y0+h) from img, zero outside it.
Tensor crop_tensor(const raster::DensityImage& img, long x0, long y0, std::size_t w, std::size_t h) {
  Tensor t({raster::kChannels, h, w});
  for (std::size_t c = 0; c < raster::kChannels; ++c)
    for (std::size_t r = 0; r < h; ++r) {
      const long sr = y0 + static_cast<long>(r);
      if (sr < 0 || sr >= static_cast<long>(img.height)) continue;
      for (std::size_t q = 0; q < w; ++q) {
        const long sc = x0 + static_cast<long>(q);
        if (sc < 0 || sc >= static_cast<long>(img.width)) continue;
        t.values()[(c * h + r) * w + q] = img.at(c, sr, sc);
      }
    }
  return t;
}

}  // namespace

raster::Heatmap CornerScorer::score(const raster::DensityImage& img) const {
  ad::NoGradGuard ng;
  const Tensor l = logits(img.to_tensor());
  return to_heatmap(l, img.width, img.height, 0, 0, img.width);
}

raster::Heatmap CornerScorer::score_tiled(const raster::DensityImage& img, std::size_t window,
                                          std::size_t overlap) const {
  ad::NoGradGuard ng;
  const std::size_t halo = receptive_radius();
  std::vector<raster::PlacedHeatmap> placed;
  for (auto off : raster::tile_offsets(img.width, img.height, window, overlap)) {
    // The halo is clipped at the image border, where single-pass inference
    // sees the same zero padding.
    const long x0 = std::max(0L, static_cast<long>(off.x) - static_cast<long>(halo));
    const long y0 = std::max(0L, static_cast<long>(off.y) - static_cast<long>(halo));
    const std::size_t x1 = std::min(img.width, off.x + window + halo);
    const std::size_t y1 = std::min(img.height, off.y + window + halo);
    const std::size_t cw = x1 - x0, ch = y1 - y0;
    const Tensor l = logits(crop_tensor(img, x0, y0, cw, ch));
    const std::size_t tw = std::min(window, img.width - off.x), th = std::min(window, img.height - off.y);
    placed.push_back({to_heatmap(l, tw, th, off.x - x0, off.y - y0, cw), off});
  }
  return raster::merge_heatmaps(placed, img.width, img.height);
}

CornerScorer train_corner_scorer(const std::vector<data::SyntheticFloor>& floors, const CornerTrainConfig& cfg,
                                 TrainLog* log) {
  if (floors.empty()) throw std::invalid_argument("train_corner_scorer: no floors");
  CornerScorer net(cfg.seed);
  ad::Adam opt({.lr = cfg.lr});
  std::mt19937_64 rng(ad::split_seed(cfg.seed, "corner.train"));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const auto& f = floors[rng() % floors.size()];
    const auto aug = data::normalize_and_augment(f, data::AugmentMode::CornerTrain, rng(),
                                                 {.rotation = data::RotationKind::RightAngles});
    const auto& img = aug.floor.density;
    const auto corners = aug.floor.graph().corners();
    const std::size_t cs = std::min<std::size_t>({cfg.crop, img.width, img.height});
    // Crops centred on a corner most of the time so positives are not swamped.
    long x0, y0;
    if (!corners.empty() && rng() % 4 != 0) {
      const auto& c = corners[rng() % corners.size()];
      std::uniform_int_distribution<long> j(-static_cast<long>(cs) / 3, static_cast<long>(cs) / 3);
      x0 = std::lround(c.x) - static_cast<long>(cs) / 2 + j(rng);
      y0 = std::lround(c.y) - static_cast<long>(cs) / 2 + j(rng);
    } else {
      x0 = static_cast<long>(rng() % (img.width - cs + 1));
      y0 = static_cast<long>(rng() % (img.height - cs + 1));
    }
    x0 = std::clamp(x0, 0L, static_cast<long>(img.width - cs));
    y0 = std::clamp(y0, 0L, static_cast<long>(img.height - cs));
    std::vector<double> target(cs * cs, 0.0);
    const double s2 = 2 * cfg.target_sigma * cfg.target_sigma;
    for (const auto& c : corners)
      for (std::size_t r = 0; r < cs; ++r)
        for (std::size_t q = 0; q < cs; ++q) {
          const double dx = double(x0 + long(q)) - c.x;
          const double dy = double(y0 + long(r)) - c.y;
          const double d2 = dx * dx + dy * dy;
          if (d2 < 9 * s2) target[r * cs + q] = std::max(target[r * cs + q], std::exp(-d2 / s2));
        }
    net.params().zero_grad();
    const Tensor flat = ad::reshape(net.logits(crop_tensor(img, x0, y0, cs, cs)), {cs * cs, 1});
    Tensor loss = ad::bce_with_logits(flat, target);
    // Corner neighbourhoods are a tiny fraction of the crop; score them separately.
    std::vector<std::size_t> pos;
    std::vector<double> pos_target;
    for (std::size_t i = 0; i < target.size(); ++i)
      if (target[i] > 0.05) {
        pos.push_back(i);
        pos_target.push_back(target[i]);
      }
    if (!pos.empty()) loss = ad::add(loss, ad::bce_with_logits(ad::embedding(flat, pos), pos_target));
    loss.backward();
    opt.step(net.params());
    if (log) log->losses.push_back(loss.item());
  }
  return net;
}

CornerDetector CornerDetector::oracle(geo::WallGraph gt, double sigma, double drop, std::uint64_t seed) {
  CornerDetector d;
  d.mode = CornerMode::Oracle;
  d.gt = std::move(gt);
  d.sigma = sigma;
  d.drop = drop;
  d.seed = seed;
  return d;
}

CornerDetector CornerDetector::learned(const CornerScorer& scorer, double min_score) {
  CornerDetector d;
  d.mode = CornerMode::Learned;
  d.scorer = &scorer;
  d.min_score = min_score;
  return d;
}

std::vector<geo::Point> detect_corners(const raster::DensityImage& img, const CornerDetector& det) {
  std::vector<geo::Point> out;
  if (det.mode == CornerMode::Oracle) {
    std::mt19937_64 rng(det.seed);
    std::normal_distribution<double> jitter(0.0, det.sigma);
    std::bernoulli_distribution dropped(det.drop);
    for (const auto& c : det.gt.corners()) {
      if (det.drop > 0 && dropped(rng)) continue;
      out.push_back(det.sigma > 0 ? geo::Point{c.x + jitter(rng), c.y + jitter(rng)} : c);
    }
    return out;
  }
  if (!det.scorer) throw std::invalid_argument("detect_corners: learned mode without a scorer");
  for (const auto& p : raster::nms(det.scorer->score_tiled(img), det.nms_radius, det.min_score)) out.push_back(p.point);
  return out;
}

}  // namespace a2p::cand
