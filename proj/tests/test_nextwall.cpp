#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "a2p/dataio/floor.hpp"
#include "a2p/nextwall/history.hpp"
#include "a2p/nextwall/model.hpp"

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

std::vector<WallSegment> chain(std::size_t n) {
  std::vector<WallSegment> w;
  for (std::size_t i = 0; i < n; ++i) w.emplace_back(10.0 * double(i), 0, 10.0 * double(i + 1), 5.0 * double(i % 3));
  return w;
}

ad::Tensor row(std::vector<double> v) { return ad::Tensor({1, v.size()}, v); }

}  // namespace

TEST_CASE("timesteps are reverse chronological and clamp at 10") {
  auto s = nw::assign_timesteps(chain(3), chain(2));
  CHECK(s.history[0].timestep == 3);
  CHECK(s.history[1].timestep == 2);
  CHECK(s.history[2].timestep == 1);
  for (const auto& c : s.candidates) CHECK(c.timestep == 0);

  s = nw::assign_timesteps(chain(15), {});
  for (std::size_t i = 0; i < 6; ++i) CHECK(s.history[i].timestep == 10);
  CHECK(s.history[6].timestep == 9);
  CHECK(s.history.back().timestep == 1);
  CHECK(std::count_if(s.history.begin(), s.history.end(), [](const WallSegment& w) { return w.timestep == 1; }) == 1);

  s = nw::assign_timesteps({}, chain(5));
  for (const auto& c : s.candidates) CHECK(c.kind() == geo::WallKind::Candidate);

  s = nw::assign_timesteps(chain(4), {}, true);
  for (const auto& h : s.history) CHECK(h.timestep == 10);

  s = nw::assign_timesteps(chain(2), {});
  nw::push_history(s, WallSegment(0, 50, 30, 50));
  CHECK(s.history.size() == 3);
  CHECK(s.history[0].timestep == 3);
  CHECK(s.history.back().timestep == 1);
}

TEST_CASE("embedding shape, symmetry and mixing") {
  nw::NextWallModel m(small_config(), 1);
  auto s = nw::assign_timesteps(chain(3), {WallSegment(0, 40, 40, 40), WallSegment(0, 40, 40, 40)});
  const auto e = m.embed(s);
  CHECK(e.dim(0) == 5);
  CHECK(e.dim(1) == 32);
  for (std::size_t j = 0; j < 32; ++j) CHECK(e.at(3, j) == doctest::Approx(e.at(4, j)).epsilon(1e-12));

  auto s2 = s;
  s2.candidates[1] = WallSegment(0, 80, 40, 80);
  const auto e2 = m.embed(s2);
  double diff = 0;
  for (std::size_t j = 0; j < 32; ++j) diff += std::abs(e2.at(4, j) - e.at(4, j));
  CHECK(diff > 1e-6);

  nw::NextWallModel full(nw::NextWallConfig{}, 1);
  CHECK(full.input_features(s).dim(1) == 512);
  CHECK(full.embed(s).dim(1) == 256);
}

TEST_CASE("scores, probabilities and entropy") {
  nw::NextWallModel m(small_config(), 2);
  auto one = nw::assign_timesteps(chain(2), {WallSegment(0, 30, 20, 30)});
  auto r = nw::score_candidates(one, m);
  REQUIRE(r.probs.size() == 1);
  CHECK(r.probs[0] == doctest::Approx(1.0));
  CHECK(r.entropy_bits == doctest::Approx(0.0).epsilon(1e-12));

  const std::size_t k = 5;
  auto dup = nw::assign_timesteps(chain(3), std::vector<WallSegment>(k, WallSegment(5, 30, 25, 30)));
  r = nw::score_candidates(dup, m);
  for (double p : r.probs) CHECK(p == doctest::Approx(1.0 / k));
  CHECK(r.entropy_bits == doctest::Approx(std::log2(double(k))));

  auto many = nw::assign_timesteps(chain(4), chain(7));
  r = nw::score_candidates(many, m);
  for (double sc : r.scores) {
    CHECK(sc >= -1.0 - 1e-12);
    CHECK(sc <= 1.0 + 1e-12);
  }

  CHECK_THROWS_AS(nw::score_candidates(nw::assign_timesteps({}, chain(2)), m), std::invalid_argument);
  CHECK(nw::score_candidates(nw::assign_timesteps(chain(2), {}), m).scores.empty());
}

TEST_CASE("triplet loss arithmetic") {
  const auto a = row({1, 0});
  CHECK(nw::triplet_loss(a, row({1, 0}), row({-1, 0})).item() == doctest::Approx(0.0));
  CHECK(nw::triplet_loss(a, row({0.6, 0.8}), row({0.6, 0.8})).item() == doctest::Approx(1.0));
  const auto p = row({0.7, std::sqrt(1 - 0.49)});
  const auto n = row({0.1, std::sqrt(1 - 0.01)});
  CHECK(nw::triplet_loss(a, p, n).item() == doctest::Approx(0.4));
  // mean over negatives: terms 0.4 and 0
  const ad::Tensor negs({2, 2}, {0.1, std::sqrt(0.99), -1, 0});
  CHECK(nw::triplet_loss(a, p, negs).item() == doctest::Approx(0.2));
}

TEST_CASE("rollout and alternatives are consistent") {
  nw::NextWallModel m(small_config(), 3);
  const auto walls = data::generate_synthetic_floor(7, {}, false).sequence;
  auto s = nw::assign_timesteps({walls[0]}, {walls.begin() + 1, walls.end()});

  const auto alts = nw::top_k_alternatives(s, m, 3);
  REQUIRE(alts.size() == 3);
  CHECK(alts[0].score >= alts[1].score);
  CHECK(alts[1].score >= alts[2].score);
  const auto r = nw::score_candidates(s, m);
  CHECK(alts[0].score == doctest::Approx(*std::max_element(r.scores.begin(), r.scores.end())));

  const auto r1 = nw::rollout(s, m, 1);
  const auto r2 = nw::rollout(s, m, 2);
  REQUIRE(r1.size() == 1);
  REQUIRE(r2.size() == 2);
  CHECK(r1[0].same_geometry(s.candidates[alts[0].index]));
  CHECK(r2[0].same_geometry(r1[0]));

  const auto all = nw::rollout(s, m, 100);
  CHECK(all.size() == s.candidates.size());
  for (const auto& c : s.candidates)
    CHECK(std::count_if(all.begin(), all.end(), [&](const WallSegment& w) { return w.same_geometry(c); }) == 1);
  CHECK(nw::rollout(s, m, 5) == nw::rollout(s, m, 5));

  auto two = nw::assign_timesteps(chain(2), chain(2));
  CHECK(nw::top_k_alternatives(two, m, 3).size() == 2);
  CHECK_THROWS_AS(nw::rollout(nw::assign_timesteps({}, chain(3)), m, 1), std::invalid_argument);
}

TEST_CASE("training is deterministic, lowers the loss and round-trips") {
  std::vector<std::vector<WallSegment>> seqs;
  for (std::uint64_t i = 0; i < 20; ++i) seqs.push_back(data::generate_synthetic_floor(i, {}, false).sequence);
  seqs.push_back(chain(1));
  const nw::NextWallTrainConfig tc{.steps = 80, .batch = 4, .lr = 1e-3, .seed = 4};
  nw::NextWallTrainLog log;
  const auto m1 = nw::train_next_wall(seqs, small_config(), tc, &log);
  const auto m2 = nw::train_next_wall(seqs, small_config(), tc);
  for (std::size_t i = 0; i < m1.params().items().size(); ++i)
    CHECK(m1.params().items()[i].second.values() == m2.params().items()[i].second.values());

  double first = 0, last = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    first += log.losses[i];
    last += log.losses[log.losses.size() - 1 - i];
  }
  CHECK(last < first);

  const auto path = std::filesystem::temp_directory_path() / "a2p_test_nextwall.ckpt";
  nw::save_next_wall(m1, path);
  const auto m3 = nw::load_next_wall(path);
  auto s = nw::assign_timesteps({seqs[0][0], seqs[0][1]}, {seqs[0].begin() + 2, seqs[0].end()});
  const auto a = nw::score_candidates(s, m1).scores, b = nw::score_candidates(s, m3).scores;
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == doctest::Approx(a[i]).epsilon(1e-4));
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".json");
}

TEST_CASE("spearman correlation and exact p-value") {
  const std::vector<double> x = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<double> up = x, down(x.rbegin(), x.rend());
  CHECK(nw::spearman(x, up) == doctest::Approx(1.0));
  CHECK(nw::spearman(x, down) == doctest::Approx(-1.0));
  // Ties get average ranks: y ranks (1.5, 1.5, 3), rho = 0.866.
  CHECK(nw::spearman({1, 2, 3}, {5, 5, 7}) == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(nw::spearman_p_value(x, up, nw::Tail::Greater) == doctest::Approx(1.0 / 362880));
  CHECK(nw::spearman_p_value(x, down, nw::Tail::Less) == doctest::Approx(1.0 / 362880));
  CHECK(nw::spearman_p_value(x, up, nw::Tail::Less) == doctest::Approx(1.0));
  // n = 3, rho = 0.5 is reached by 2 of 6 orderings, rho = 1 by 1.
  CHECK(nw::spearman_p_value({1, 2, 3}, {1, 3, 2}, nw::Tail::Greater) == doctest::Approx(0.5));
  CHECK_THROWS(nw::spearman_p_value(std::vector<double>(11, 0), std::vector<double>(11, 0), nw::Tail::Greater));
}

TEST_CASE("history length table shape and fixed targets") {
  std::vector<std::vector<WallSegment>> seqs;
  for (std::uint64_t i = 0; i < 3; ++i) seqs.push_back(data::generate_synthetic_floor(i, {}, false).sequence);
  seqs.push_back(chain(5));  // too short, skipped
  const nw::NextWallModel m(small_config(), 3);
  const auto rows = nw::history_length_table(m, seqs, 9, 10);
  REQUIRE(rows.size() == 9);
  std::size_t expected = 0;
  for (const auto& s : seqs)
    if (s.size() > 10) expected += s.size() - 9;
  for (std::size_t h = 0; h < rows.size(); ++h) {
    CHECK(rows[h].length == h + 1);
    CHECK(rows[h].states == rows[0].states);
    CHECK(rows[h].accuracy >= 0);
    CHECK(rows[h].accuracy <= 1);
    CHECK(rows[h].entropy_bits >= 0);
  }
  CHECK(rows[0].states == expected);
  CHECK(nw::history_csv(rows).rfind("history_length,accuracy,entropy_bits,states\n", 0) == 0);
}

TEST_CASE("history cutoff augmentation trains deterministically") {
  std::vector<std::vector<WallSegment>> seqs;
  for (std::uint64_t i = 0; i < 6; ++i) seqs.push_back(data::generate_synthetic_floor(i, {}, false).sequence);
  const nw::NextWallTrainConfig tc{.steps = 10, .batch = 2, .lr = 1e-3, .history_cutoff = 1.0, .seed = 2};
  const auto a = nw::train_next_wall(seqs, small_config(), tc), b = nw::train_next_wall(seqs, small_config(), tc);
  auto plain = tc;
  plain.history_cutoff = 0;
  const auto c = nw::train_next_wall(seqs, small_config(), plain);
  const auto& pa = a.params().items().front().second.values();
  CHECK(pa == b.params().items().front().second.values());
  CHECK(pa != c.params().items().front().second.values());
}
