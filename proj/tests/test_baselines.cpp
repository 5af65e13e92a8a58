#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <set>

#include "a2p/baselines/baselines.hpp"
#include "a2p/dataio/floor.hpp"

using namespace a2p;
using geo::WallSegment;

namespace {

nw::NextWallConfig small_config() {
  nw::NextWallConfig c;
  c.coord_dim = 32;
  c.type_dim = 16;
  c.time_dim = 16;
  c.encoder = {32, 4, 64, 2, 0.1, 0.1};
  return c;
}

WallSegment random_wall(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(0, 20);
  for (;;) {
    const double x0 = u(rng) * 5, y0 = u(rng) * 5, x1 = u(rng) * 5, y1 = u(rng) * 5;
    if (x0 != x1 || y0 != y1) return {x0, y0, x1, y1};
  }
}

}  // namespace

TEST_CASE("heuristic picks the touching candidate") {
  nw::SequenceState s;
  s.history = {WallSegment(0, 0, 100, 0)};
  s.candidates = {WallSegment(0, 50, 100, 50), WallSegment(100, 0, 100, 80), WallSegment(200, 0, 300, 0)};
  CHECK(base::heuristic_next(s, 0) == 1);
}

TEST_CASE("heuristic ties are seeded") {
  nw::SequenceState s;
  s.history = {WallSegment(0, 0, 100, 0)};
  s.candidates = {WallSegment(0, 0, 0, 50), WallSegment(100, 0, 100, 50), WallSegment(50, 0, 50, 50),
                  WallSegment(0, 90, 100, 90)};
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    const auto a = base::heuristic_next(s, seed);
    CHECK(a == base::heuristic_next(s, seed));
    CHECK(a < 3);
    seen.insert(a);
  }
  CHECK(seen.size() == 3);
}

TEST_CASE("heuristic matches a brute-force minimum and is rigid invariant") {
  std::mt19937_64 rng(11);
  const double th = 0.7, c = std::cos(th), sn = std::sin(th);
  auto move = [&](const WallSegment& w) {
    return WallSegment(c * w.x0 - sn * w.y0 + 13, sn * w.x0 + c * w.y0 - 7, c * w.x1 - sn * w.y1 + 13,
                       sn * w.x1 + c * w.y1 - 7);
  };
  for (int trial = 0; trial < 200; ++trial) {
    nw::SequenceState s;
    s.history = {random_wall(rng)};
    const int n = 1 + int(rng() % 8);
    for (int i = 0; i < n; ++i) s.candidates.push_back(random_wall(rng));
    const auto pick = base::heuristic_next(s, trial);
    double best = 1e300;
    for (const auto& w : s.candidates) best = std::min(best, geo::segment_distance(s.history[0], w));
    CHECK(geo::segment_distance(s.history[0], s.candidates[pick]) == best);

    nw::SequenceState t;
    t.history = {move(s.history[0])};
    for (const auto& w : s.candidates) t.candidates.push_back(move(w));
    const auto moved = base::heuristic_next(t, trial);
    CHECK(geo::segment_distance(t.history[0], t.candidates[moved]) ==
          doctest::Approx(geo::segment_distance(s.history[0], s.candidates[moved])).epsilon(1e-9));
  }
}

TEST_CASE("classifier dataset construction") {
  const std::vector<WallSegment> three = {WallSegment(0, 0, 10, 0), WallSegment(10, 0, 10, 10),
                                          WallSegment(10, 10, 0, 10)};
  auto d = base::build_classifier_dataset({three});
  CHECK(d.unique_positives == 2);
  CHECK(d.negatives == 1);
  auto pos = std::count_if(d.examples.begin(), d.examples.end(), [](const auto& e) { return e.label == 1.0; });
  auto neg = std::count_if(d.examples.begin(), d.examples.end(), [](const auto& e) { return e.label == 0.0; });
  CHECK(pos == 2);
  CHECK(neg == 1);
  for (const auto& e : d.examples)
    if (e.label == 0.0) CHECK(e.walls == std::vector<std::size_t>{0, 2});

  d = base::build_classifier_dataset({{three[0], three[1]}});
  CHECK(d.unique_positives == 1);
  CHECK(d.negatives == 0);
  CHECK(d.examples.size() == 1);

  // T = 6: 5 positives, 4+3+2+1 negatives; replicated to 10 each
  std::vector<WallSegment> six;
  for (int i = 0; i < 6; ++i) six.emplace_back(10.0 * i, 0, 10.0 * i + 10, 0);
  d = base::build_classifier_dataset({six});
  CHECK(d.unique_positives == 5);
  CHECK(d.negatives == 10);
  pos = std::count_if(d.examples.begin(), d.examples.end(), [](const auto& e) { return e.label == 1.0; });
  neg = std::count_if(d.examples.begin(), d.examples.end(), [](const auto& e) { return e.label == 0.0; });
  CHECK(pos == 10);
  CHECK(neg == 10);
  for (const auto& e : d.examples) {
    if (e.label != 0.0) continue;
    CHECK(e.walls.back() >= e.walls.size());
    for (std::size_t i = 0; i + 1 < e.walls.size(); ++i) CHECK(e.walls[i] == i);
  }
}

TEST_CASE("classifier probabilities, argmax and round trip") {
  base::ClassifierModel m(small_config(), 3);
  const auto walls = data::generate_synthetic_floor(5, {}, false).sequence;
  nw::SequenceState s{{walls[0], walls[1]}, {walls.begin() + 2, walls.end()}};
  const auto p = base::classifier_probabilities(s, m);
  REQUIRE(p.size() == s.candidates.size());
  for (double v : p) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(base::classifier_next(s, m) == std::size_t(std::max_element(p.begin(), p.end()) - p.begin()));
  CHECK(base::classifier_next({s.history, {walls[5]}}, m) == 0);

  const auto path = std::filesystem::temp_directory_path() / "a2p_test_classifier.ckpt";
  base::save_classifier(m, path);
  const auto m2 = base::load_classifier(path);
  const auto p2 = base::classifier_probabilities(s, m2);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(p2[i] == doctest::Approx(p[i]).epsilon(1e-4));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}

TEST_CASE("classifier training beats random on held-out floors") {
  std::vector<std::vector<WallSegment>> train;
  for (std::uint64_t i = 0; i < 40; ++i) train.push_back(data::generate_synthetic_floor(i, {}, false).sequence);
  const auto m = base::train_classifier(train, small_config(), {.steps = 300, .batch = 8, .lr = 1e-3, .seed = 1});
  double acc = 0, rnd = 0;
  int n = 0;
  for (std::uint64_t f = 0; f < 5; ++f) {
    const auto seq = data::generate_synthetic_floor(900 + f, {}, false).sequence;
    for (std::size_t k = 1; k + 1 < seq.size(); ++k) {
      nw::SequenceState s{{seq.begin(), seq.begin() + long(k)}, {seq.begin() + long(k), seq.end()}};
      acc += base::classifier_next(s, m) == 0;
      rnd += 1.0 / double(s.candidates.size());
      ++n;
    }
  }
  MESSAGE("classifier accuracy " << acc / n << " random " << rnd / n);
  CHECK(acc / n > rnd / n);
}
