#include <doctest.h>

#include <cmath>
#include <random>

#include "a2p/geometry/graph.hpp"
#include "a2p/geometry/metrics.hpp"
#include "geometry_oracles.hpp"

using namespace a2p;
using geo::WallSegment;

TEST_CASE("segment_distance examples") {
  CHECK(geo::segment_distance({0, 0, 1, 0}, {0, 0, 1, 0}) == 0.0);
  CHECK(geo::segment_distance({0, 0, 10, 0}, {0, 1, 10, 1}) == 1.0);
  CHECK(geo::segment_distance({0, 0, 2, 2}, {0, 2, 2, 0}) == 0.0);
  const WallSegment a{0, 0, 1, 0}, b{3, 4, 3, 10};
  CHECK(geo::segment_distance(a, b) == doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));
  CHECK(std::abs(test::sampled_segment_distance(a, b, 2000) - std::sqrt(20.0)) < 1e-3);
}

TEST_CASE("segment_distance agrees with sampling, symmetric, triangle sanity") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 30; ++i) {
    WallSegment a{u(rng), u(rng), u(rng), u(rng)}, b{u(rng), u(rng), u(rng), u(rng)};
    const double d = geo::segment_distance(a, b);
    CHECK(d == geo::segment_distance(b, a));
    CHECK(std::abs(test::sampled_segment_distance(a, b, 400) - d) < 0.2);
    CHECK(d <= geo::distance(a.a(), b.a()) + 1e-12);
    WallSegment c{u(rng), u(rng), u(rng), u(rng)};
    // Points realising d(a,c) and d(c,b) bound d(a,b) up to c's length.
    CHECK(d <= geo::segment_distance(a, c) + c.length() + geo::segment_distance(c, b) + 1e-9);
  }
}

TEST_CASE("split_t_junctions examples") {
  geo::WallGraph one{{{0, 0, 10, 0}}};
  CHECK(geo::split_t_junctions(one).walls.size() == 1);

  geo::WallGraph t{{{0, 0, 10, 0}, {5, 0, 5, 5}}};
  auto s = geo::split_t_junctions(t, 0.5).walls;
  REQUIRE(s.size() == 3);
  CHECK(s[0].same_geometry({0, 0, 5, 0}));
  CHECK(s[1].same_geometry({5, 0, 10, 0}));

  geo::WallGraph two{{{0, 0, 12, 0}, {4, 0, 4, 3}, {8, 0, 8, 3}}};
  CHECK(geo::split_t_junctions(two).walls.size() == 5);
}

TEST_CASE("split_t_junctions matches incidence oracle, idempotent, length preserving") {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> c(0, 8);
  for (int trial = 0; trial < 100; ++trial) {
    // Axis-aligned walls on a coarse grid create many T-junctions.
    std::vector<WallSegment> walls;
    while (walls.size() < 6) {
      const int x0 = c(rng) * 10, y0 = c(rng) * 10;
      const int len = (1 + c(rng)) * 10;
      WallSegment w = (rng() & 1) ? WallSegment(x0, y0, x0 + len, y0) : WallSegment(x0, y0, x0, y0 + len);
      bool overlap = false;
      for (const auto& o : walls) {
        const bool par = (w.y0 == w.y1) == (o.y0 == o.y1);
        if (par && geo::segment_distance(w, o) < 1e-9) overlap = true;
      }
      if (!overlap) walls.push_back(w);
    }
    geo::WallGraph g{walls};
    auto once = geo::split_t_junctions(g);
    // Splitting may expose new junctions only through new endpoints, which
    // lie on existing walls; the oracle counts the first pass.
    CHECK(once.walls.size() >= test::expected_piece_count(walls, 1.0));
    auto twice = geo::split_t_junctions(once);
    CHECK(twice.walls.size() == once.walls.size());
    double la = 0, lb = 0;
    for (const auto& w : walls) la += w.length();
    for (const auto& w : once.walls) lb += w.length();
    CHECK(lb == doctest::Approx(la).epsilon(1e-9));
    // Post-condition: no endpoint inside another wall's interior.
    for (const auto& w : once.walls)
      for (const auto& o : once.walls)
        for (geo::Point p : {o.a(), o.b()}) {
          if (&w == &o) continue;
          const bool near_end = geo::distance(p, w.a()) <= 1 || geo::distance(p, w.b()) <= 1;
          if (!near_end) CHECK(geo::point_segment_distance(p, w.a(), w.b()) > 1.0);
        }
  }
}

TEST_CASE("remove_duplicates boundary cases") {
  const std::vector<WallSegment> existing{{0, 0, 100, 0}};
  // Identical.
  CHECK(geo::remove_duplicates(std::vector<WallSegment>{{0, 0, 100, 0}}, existing).empty());
  // 9 and 9 px away: removed.
  CHECK(geo::remove_duplicates(std::vector<WallSegment>{{0, 9, 100, 9}}, existing).empty());
  // Reversed orientation, 9 and 9: removed.
  CHECK(geo::remove_duplicates(std::vector<WallSegment>{{100, 9, 0, 9}}, existing).empty());
  // 9 and 11 px away: kept.
  CHECK(geo::remove_duplicates(std::vector<WallSegment>{{0, 9, 100, 11}}, existing).size() == 1);
  // Exactly 10 is not "less than 10".
  CHECK(geo::remove_duplicates(std::vector<WallSegment>{{0, 10, 100, 0}}, existing).size() == 1);
}

TEST_CASE("remove_duplicates dedups survivors keeping the earliest and is idempotent") {
  std::vector<WallSegment> cands{{0, 50, 100, 50}, {2, 52, 98, 50}, {0, 200, 0, 300}};
  auto out = geo::remove_duplicates(cands, {});
  REQUIRE(out.size() == 2);
  CHECK(out[0] == cands[0]);
  CHECK(out[1] == cands[2]);

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 60);
  for (int t = 0; t < 50; ++t) {
    std::vector<WallSegment> c, e;
    for (int i = 0; i < 8; ++i) c.emplace_back(u(rng), u(rng), u(rng) + 61, u(rng));
    for (int i = 0; i < 3; ++i) e.emplace_back(u(rng), u(rng), u(rng) + 61, u(rng));
    auto a = geo::remove_duplicates(c, e);
    CHECK(geo::remove_duplicates(a, e) == a);
  }
}

TEST_CASE("match_walls examples") {
  std::vector<WallSegment> gt{{0, 0, 100, 0, 6}, {0, 200, 100, 200, 6}, {0, 400, 100, 400, 6}};
  auto same = geo::match_walls(gt, gt, 15);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.f1 == 1.0);
  CHECK(same.iou == 1.0);
  CHECK(same.width_accuracy == 1.0);

  auto none = geo::match_walls({}, gt, 15);
  CHECK(none.precision == 0.0);
  CHECK(none.recall == 0.0);

  auto empty = geo::match_walls({}, {}, 15);
  CHECK(empty.precision == 1.0);
  CHECK(empty.recall == 1.0);
  CHECK(empty.f1 == 1.0);

  std::vector<WallSegment> pred{{2, 1, 101, 3, 5}, {0, 203, 100, 198, 12}, {500, 500, 600, 500}, {700, 0, 700, 90}};
  auto r = geo::match_walls(pred, gt, 15);
  CHECK(r.precision == 0.5);
  CHECK(r.recall == doctest::Approx(2.0 / 3.0));
  CHECK(r.matches.size() == test::exhaustive_match_count(pred, gt, 15));
  CHECK(r.width_pairs == 2);
  CHECK(r.width_accuracy == 0.5);
}

TEST_CASE("greedy matching equals exhaustive oracle on separated instances") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> count(0, 5);
  std::uniform_real_distribution<double> jitter(-12, 12), pos(0, 100);
  for (double threshold : {5.0, 15.0, 30.0}) {
    for (int trial = 0; trial < 200; ++trial) {
      // Each GT wall sits in its own 1000-px cell; predictions near a GT wall
      // are within 2*threshold of it only.
      std::vector<WallSegment> gt, pred;
      const int ng = count(rng), np = count(rng);
      for (int i = 0; i < ng; ++i) {
        const double ox = 1000.0 * i;
        gt.emplace_back(ox + pos(rng), pos(rng), ox + 200 + pos(rng), pos(rng));
      }
      for (int i = 0; i < np; ++i) {
        if (ng > 0 && (rng() % 4) != 0) {
          const auto& g = gt[rng() % ng];
          const double s = threshold / 12.0;
          pred.emplace_back(g.x0 + jitter(rng) * s, g.y0 + jitter(rng) * s, g.x1 + jitter(rng) * s,
                            g.y1 + jitter(rng) * s);
        } else {
          pred.emplace_back(20000 + pos(rng), pos(rng), 20300 + pos(rng), pos(rng));
        }
      }
      auto r = geo::match_walls(pred, gt, threshold);
      REQUIRE(r.matches.size() == test::exhaustive_match_count(pred, gt, threshold));
    }
  }
}

TEST_CASE("match_walls on itself is perfect") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 300);
  for (int t = 0; t < 20; ++t) {
    std::vector<WallSegment> x;
    for (int i = 0; i < 6; ++i) x.emplace_back(u(rng), u(rng), u(rng) + 301, u(rng), 4 + int(rng() % 8));
    auto r = geo::match_walls(x, x, 5);
    CHECK(r.f1 == 1.0);
    CHECK(r.iou == 1.0);
  }
}

TEST_CASE("wall validation") {
  CHECK_THROWS(WallSegment(0, 0, 0, 0));
  CHECK_THROWS(WallSegment(0, 0, 1, 0, 85));
  CHECK_THROWS(WallSegment(0, 0, 1, 0, 0));
  CHECK_THROWS(WallSegment(0, 0, 1, 0, 6, -1));
  CHECK_THROWS(WallSegment(0, 0, NAN, 0));
  CHECK(geo::kind_for_timestep(0) == geo::WallKind::Candidate);
  CHECK(geo::kind_for_timestep(9) == geo::WallKind::Recent);
  CHECK(geo::kind_for_timestep(10) == geo::WallKind::Old);
}
