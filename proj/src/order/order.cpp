#include "a2p/order/order.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace a2p::order {

using ad::Tensor;

nlohmann::json to_json(const TcnConfig& c) {
  return {{"levels", c.levels},
          {"kernel", c.kernel},
          {"channels", c.channels},
          {"latent_level", c.latent_level},
          {"max_walls", c.max_walls},
          {"frame", static_cast<int>(c.frame)}};
}

TcnConfig tcn_config_from_json(const nlohmann::json& j) {
  TcnConfig c;
  c.levels = j.value("levels", c.levels);
  c.kernel = j.value("kernel", c.kernel);
  c.channels = j.value("channels", c.channels);
  c.latent_level = j.value("latent_level", c.latent_level);
  c.max_walls = j.value("max_walls", c.max_walls);
  c.frame = static_cast<CoordFrame>(j.value("frame", static_cast<int>(c.frame)));
  return c;
}

TcnModel::TcnModel(TcnConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.levels == 0 || cfg.latent_level == 0 || cfg.latent_level > cfg.levels)
    throw std::invalid_argument("TcnConfig: latent_level must be in [1, levels]");
  std::size_t cin = 1;
  const std::size_t k = cfg.kernel, c = cfg.channels;
  for (std::size_t i = 0; i < cfg.levels; ++i) {
    const std::string name = "tcn.block" + std::to_string(i);
    std::mt19937_64 rng(ad::split_seed(seed, name));
    Block b;
    b.dilation = std::size_t{1} << i;
    b.w1 = params_.add(name + ".w1", ad::xavier_uniform({c, cin, k}, cin * k, c * k, rng));
    b.b1 = params_.add(name + ".b1", Tensor({c}, 0.0));
    b.w2 = params_.add(name + ".w2", ad::xavier_uniform({c, c, k}, c * k, c * k, rng));
    b.b2 = params_.add(name + ".b2", Tensor({c}, 0.0));
    if (cin != c) {
      b.wr = params_.add(name + ".wr", ad::xavier_uniform({c, cin, 1}, cin, c, rng));
      b.br = params_.add(name + ".br", Tensor({c}, 0.0));
    }
    blocks_.push_back(b);
    cin = c;
  }
  std::mt19937_64 rng(ad::split_seed(seed, "tcn.out"));
  out_w_ = params_.add("tcn.out.w", ad::xavier_uniform({1, c, 1}, c, 1, rng));
  out_b_ = params_.add("tcn.out.b", Tensor({1}, 0.0));
}

Tensor TcnModel::forward(const Tensor& x, Tensor* latent) const {
  Tensor h = x;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const Block& b = blocks_[i];
    Tensor y = ad::relu(ad::conv1d_causal(h, b.w1, b.b1, b.dilation));
    y = ad::relu(ad::conv1d_causal(y, b.w2, b.b2, b.dilation));
    const Tensor res = b.wr.defined() ? ad::conv1d_causal(h, b.wr, b.br, 1) : h;
    h = ad::relu(ad::add(y, res));
    if (latent && i + 1 == cfg_.latent_level) *latent = h;
  }
  return ad::conv1d_causal(h, out_w_, out_b_, 1);
}

void save_tcn(const TcnModel& m, const std::filesystem::path& path) {
  ad::save_checkpoint(m.params(), path);
  std::ofstream(path.string() + ".json") << to_json(m.config()).dump(2) << "\n";
}

TcnModel load_tcn(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".json");
  if (!in) throw std::runtime_error("missing TCN config " + path.string() + ".json");
  TcnModel m(tcn_config_from_json(nlohmann::json::parse(in)), 0);
  ad::load_checkpoint(m.params(), path);
  return m;
}

nw::Frame tcn_frame(const std::vector<WallSegment>& floor_walls) {
  if (floor_walls.empty()) return {};
  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const auto& w : floor_walls) {
    x0 = std::min({x0, w.x0, w.x1});
    y0 = std::min({y0, w.y0, w.y1});
    x1 = std::max({x1, w.x0, w.x1});
    y1 = std::max({y1, w.y0, w.y1});
  }
  const double extent = std::max(x1 - x0, y1 - y0);
  return {(x0 + x1) / 2, (y0 + y1) / 2, extent > 0 ? 2.0 / extent : 1.0};
}

std::vector<WallSegment> orient_along_walk(std::vector<WallSegment> seq) {
  if (seq.size() < 2) return seq;
  auto canonical = [](const WallSegment& w) {
    return std::tie(w.x0, w.y0) <= std::tie(w.x1, w.y1) ? w : w.reversed();
  };
  for (auto& w : seq) w = canonical(w);
  const auto& next = seq[1];
  if (geo::point_segment_distance(seq[0].a(), next.a(), next.b()) <
      geo::point_segment_distance(seq[0].b(), next.a(), next.b()))
    seq[0] = seq[0].reversed();
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const geo::Point end = seq[i - 1].b();
    if (geo::distance(seq[i].b(), end) < geo::distance(seq[i].a(), end)) seq[i] = seq[i].reversed();
  }
  return seq;
}

std::vector<WallSegment> prepare_sequence(const std::vector<WallSegment>& seq, CoordFrame frame) {
  auto out = orient_along_walk(seq);
  if (frame == CoordFrame::Floor || out.empty()) return out;
  const geo::Point o = out.front().a();
  double c = 1, s = 0;
  if (frame == CoordFrame::StartAligned) {
    const geo::Point d = out.front().b() - o;
    const double len = std::hypot(d.x, d.y);
    if (len > 0) c = d.x / len, s = -d.y / len;
  }
  for (auto& w : out) {
    const double ax = w.x0 - o.x, ay = w.y0 - o.y, bx = w.x1 - o.x, by = w.y1 - o.y;
    w.x0 = c * ax - s * ay;
    w.y0 = s * ax + c * ay;
    w.x1 = c * bx - s * by;
    w.y1 = s * bx + c * by;
  }
  return out;
}

std::vector<double> flatten_walls(const std::vector<WallSegment>& seq, std::size_t max_walls) {
  std::vector<double> out(4 * max_walls, 0.0);
  const std::size_t first = seq.size() > max_walls ? seq.size() - max_walls : 0;
  for (std::size_t i = first; i < seq.size(); ++i) {
    const auto& w = seq[i];
    const std::size_t o = 4 * (i - first);
    out[o] = w.x0;
    out[o + 1] = w.y0;
    out[o + 2] = w.x1;
    out[o + 3] = w.y1;
  }
  return out;
}

TcnModel train_tcn(const std::vector<std::vector<WallSegment>>& floors, const TcnConfig& cfg,
                   const TcnTrainConfig& train, std::vector<double>* losses) {
  std::vector<std::vector<WallSegment>> usable;
  for (const auto& f : floors) {
    if (f.size() < train.min_walls) continue;
    const auto frame = tcn_frame(f);
    std::vector<WallSegment> n;
    for (const auto& w : f) n.push_back(frame.apply(w));
    usable.push_back(std::move(n));
  }
  if (usable.empty()) throw std::invalid_argument("train_tcn: no floor has enough walls");
  const std::size_t max_w = std::min(train.max_walls, cfg.max_walls);
  TcnModel model(cfg, train.seed);
  ad::Adam opt({.lr = train.lr});
  std::mt19937_64 rng(ad::split_seed(train.seed, "tcn.train"));
  const std::size_t len = model.input_length();
  for (std::size_t it = 0; it < train.iterations; ++it) {
    std::vector<double> batch;
    batch.reserve(train.batch * len);
    for (std::size_t b = 0; b < train.batch; ++b) {
      const auto& f = usable[rng() % usable.size()];
      const std::size_t hi = std::min(max_w, f.size());
      const std::size_t n = std::uniform_int_distribution<std::size_t>(train.min_walls, hi)(rng);
      std::vector<std::size_t> idx(f.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::shuffle(idx.begin(), idx.end(), rng);
      std::vector<WallSegment> seq;
      for (std::size_t i = 0; i < n; ++i) seq.push_back(f[idx[i]]);
      const auto flat = flatten_walls(prepare_sequence(seq, cfg.frame), cfg.max_walls);
      batch.insert(batch.end(), flat.begin(), flat.end());
    }
    const Tensor x({train.batch, 1, len}, batch);
    model.params().zero_grad();
    Tensor loss = ad::l2_loss(model.forward(x), x);
    loss.backward();
    opt.step(model.params());
    if (losses) losses->push_back(loss.item());
  }
  return model;
}

std::vector<double> encode_sequence(const TcnModel& m, const std::vector<WallSegment>& seq) {
  if (seq.size() < 2) throw std::invalid_argument("encode_sequence: need at least 2 walls");
  ad::NoGradGuard ng;
  auto walls = seq;
  if (walls.size() > m.config().max_walls) walls.erase(walls.begin(), walls.end() - static_cast<long>(m.config().max_walls));
  const auto flat = flatten_walls(prepare_sequence(walls, m.config().frame), m.config().max_walls);
  Tensor latent;
  m.forward(Tensor({1, 1, flat.size()}, flat), &latent);
  return latent.values();
}

GaussianSummary fit_gaussian(const std::vector<std::vector<double>>& encodings) {
  if (encodings.size() < 2) throw std::invalid_argument("fit_gaussian: need at least 2 encodings");
  const std::size_t d = encodings.front().size();
  GaussianSummary g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const double n = static_cast<double>(encodings.size());
  for (const auto& e : encodings) {
    if (e.size() != d) throw std::invalid_argument("fit_gaussian: encodings differ in size");
    for (std::size_t i = 0; i < d; ++i) g.mean[i] += e[i] / n;
  }
  for (const auto& e : encodings)
    for (std::size_t i = 0; i < d; ++i) g.var[i] += (e[i] - g.mean[i]) * (e[i] - g.mean[i]) / n;
  return g;
}

double frechet_distance(const GaussianSummary& a, const GaussianSummary& b) {
  if (a.mean.size() != b.mean.size()) throw std::invalid_argument("frechet_distance: dimension mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    const double dm = a.mean[i] - b.mean[i];
    const double ds = std::sqrt(a.var[i]) - std::sqrt(b.var[i]);
    s += dm * dm + ds * ds;
  }
  return s;
}

namespace {

template <class Pick>
std::vector<WallSegment> greedy(nw::SequenceState s, std::size_t n, Pick pick) {
  std::vector<WallSegment> out;
  while (out.size() < n && !s.candidates.empty()) {
    const std::size_t i = pick(s, out.size());
    const WallSegment w = s.candidates[i];
    s.candidates.erase(s.candidates.begin() + static_cast<long>(i));
    s.history.push_back(w);
    out.push_back(w);
  }
  return out;
}

std::size_t nearest(const std::vector<WallSegment>& pool, const WallSegment& w) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double d = geo::endpoint_pair_distance(pool[i], w);
    if (d < best_d) best_d = d, best = i;
  }
  return best;
}

}  // namespace

SequenceGenerator predictor_generator(const nw::NextWallModel& m) {
  return [&m](const nw::SequenceState& s, std::size_t n, std::uint64_t) {
    return nw::rollout(nw::assign_timesteps(s.history, s.candidates), m, n);
  };
}

SequenceGenerator heuristic_generator() {
  return [](const nw::SequenceState& s, std::size_t n, std::uint64_t rng_seed) {
    return greedy(s, n, [rng_seed](const nw::SequenceState& st, std::size_t step) {
      return base::heuristic_next(st, ad::split_seed(rng_seed, std::to_string(step)));
    });
  };
}

SequenceGenerator classifier_generator(const base::ClassifierModel& m) {
  return [&m](const nw::SequenceState& s, std::size_t n, std::uint64_t) {
    return greedy(s, n, [&m](const nw::SequenceState& st, std::size_t) { return base::classifier_next(st, m); });
  };
}

SequenceGenerator random_generator() {
  return [](const nw::SequenceState& s, std::size_t n, std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    auto c = s.candidates;
    std::shuffle(c.begin(), c.end(), rng);
    c.resize(std::min(n, c.size()));
    return c;
  };
}

std::vector<OrderRow> evaluate_order(const TcnModel& tcn, const std::vector<OrderFloor>& floors,
                                     const std::vector<std::pair<std::string, SequenceGenerator>>& methods,
                                     const OrderEvalConfig& cfg) {
  std::vector<std::size_t> usable;
  for (std::size_t f = 0; f < floors.size(); ++f)
    if (floors[f].gt.size() >= 2 && !floors[f].pool.empty()) usable.push_back(f);
  if (usable.empty()) throw std::invalid_argument("evaluate_order: no usable floors");
  const std::size_t max_w = tcn.config().max_walls;
  std::vector<OrderRow> rows;
  const std::size_t count =
      cfg.start == StartPolicy::FirstWall ? std::min(cfg.sequences, usable.size()) : cfg.sequences;
  if (count < 2) throw std::invalid_argument("evaluate_order: need at least 2 sequences");
  for (const std::size_t N : cfg.lengths) {
    std::mt19937_64 rng(ad::split_seed(cfg.seed, "order.len" + std::to_string(N)));
    std::vector<std::vector<double>> real;
    std::vector<std::vector<std::vector<double>>> gen(methods.size());
    for (std::size_t j = 0; j < count; ++j) {
      const OrderFloor& f = floors[usable[j % usable.size()]];
      const auto frame = tcn_frame(f.gt);
      auto to_frame = [&](std::vector<WallSegment> seq) {
        for (auto& w : seq) w = frame.apply(w);
        if (seq.size() > max_w) seq.erase(seq.begin(), seq.end() - static_cast<long>(max_w));
        return seq;
      };
      const std::size_t T = f.gt.size();
      const std::size_t start = cfg.start != StartPolicy::FirstWall && T > N + 1
                                    ? std::uniform_int_distribution<std::size_t>(0, T - N - 1)(rng)
                                    : 0;
      const std::uint64_t seq_seed = rng();
      std::vector<WallSegment> window(f.gt.begin() + static_cast<long>(start),
                                      f.gt.begin() + static_cast<long>(std::min(T, start + N + 1)));
      real.push_back(encode_sequence(tcn, to_frame(window)));
      std::vector<char> in_history(f.pool.size(), 0);
      nw::SequenceState state;
      const std::size_t seed = nearest(f.pool, f.gt[start]);
      if (cfg.start == StartPolicy::GtPrefix)
        for (std::size_t i = 0; i < start; ++i) {
          const std::size_t k = nearest(f.pool, f.gt[i]);
          if (k == seed || in_history[k]) continue;
          in_history[k] = 1;
          state.history.push_back(f.pool[k]);
        }
      in_history[seed] = 1;
      state.history.push_back(f.pool[seed]);
      for (std::size_t i = 0; i < f.pool.size(); ++i)
        if (!in_history[i]) state.candidates.push_back(f.pool[i]);
      for (std::size_t m = 0; m < methods.size(); ++m) {
        if (methods[m].first == "gt-replay") {
          gen[m].push_back(real.back());
          continue;
        }
        std::vector<WallSegment> seq = {state.history.back()};
        const auto more = methods[m].second(state, N, seq_seed);
        seq.insert(seq.end(), more.begin(), more.end());
        if (seq.size() < 2) seq.push_back(seq.front());
        gen[m].push_back(encode_sequence(tcn, to_frame(seq)));
      }
    }
    const auto real_g = fit_gaussian(real);
    for (std::size_t m = 0; m < methods.size(); ++m)
      rows.push_back({N, methods[m].first, frechet_distance(fit_gaussian(gen[m]), real_g)});
  }
  return rows;
}

std::string order_csv(const std::vector<OrderRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "length,method,frechet\n";
  for (const auto& r : rows) out << r.length << "," << r.method << "," << r.score << "\n";
  return out.str();
}

}  // namespace a2p::order
