#include "a2p/dataio/floor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "a2p/dataio/session.hpp"

namespace a2p::data {

using geo::Point;
using geo::WallSegment;

namespace {

constexpr double kTol = 1.0;

bool on_footprint_boundary(const WallSegment& w, const Rect& r) {
  auto on = [&](Point p) {
    return std::abs(p.x - r.x0) < kTol || std::abs(p.x - r.x1) < kTol || std::abs(p.y - r.y0) < kTol ||
           std::abs(p.y - r.y1) < kTol;
  };
  const Point mid = (w.a() + w.b()) * 0.5;
  return on(w.a()) && on(w.b()) && on(mid);
}

Point unit(Point d) { return d * (1.0 / geo::norm(d)); }

}  // namespace

std::vector<WallSegment> layout_walls(std::uint64_t seed, const FloorParams& params, std::vector<Rect>* rooms_out,
                                      std::size_t* perimeter_count) {
  if (params.rooms < 1) throw std::invalid_argument("floor needs at least one room");
  std::mt19937_64 rng(seed);
  const Rect footprint{params.margin, params.margin, params.margin + params.width, params.margin + params.height};
  std::vector<Rect> rooms{footprint};
  struct Line {
    Point a, b;
    int thickness;
  };
  std::vector<Line> splits;
  std::uniform_int_distribution<int> interior_thickness(4, 6);
  std::uniform_int_distribution<int> exterior_thickness(11, 13);
  const int ext = exterior_thickness(rng);

  // Grid positions strictly inside [lo + min_room, hi - min_room].
  auto grid_positions = [&](double lo, double hi) {
    std::vector<double> out;
    const double start = std::ceil((lo + params.min_room - footprint.x0) / params.grid) * params.grid + footprint.x0;
    for (double p = start; p <= hi - params.min_room + 1e-9; p += params.grid) out.push_back(p);
    return out;
  };
  auto grid_positions_y = [&](double lo, double hi) {
    std::vector<double> out;
    const double start = std::ceil((lo + params.min_room - footprint.y0) / params.grid) * params.grid + footprint.y0;
    for (double p = start; p <= hi - params.min_room + 1e-9; p += params.grid) out.push_back(p);
    return out;
  };

  while (static_cast<int>(rooms.size()) < params.rooms) {
    std::vector<std::size_t> splittable;
    std::vector<double> weights;
    for (std::size_t i = 0; i < rooms.size(); ++i) {
      const auto& r = rooms[i];
      if (!grid_positions(r.x0, r.x1).empty() || !grid_positions_y(r.y0, r.y1).empty()) {
        splittable.push_back(i);
        weights.push_back(r.area());
      }
    }
    if (splittable.empty()) {
      throw std::invalid_argument("footprint " + std::to_string(params.width) + "x" + std::to_string(params.height) +
                                  " cannot hold " + std::to_string(params.rooms) + " rooms");
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    const std::size_t idx = splittable[pick(rng)];
    const Rect r = rooms[idx];
    auto xs = grid_positions(r.x0, r.x1);
    auto ys = grid_positions_y(r.y0, r.y1);
    const bool vertical = !xs.empty() && (ys.empty() || r.width() >= r.height());
    const auto& pos = vertical ? xs : ys;
    std::uniform_int_distribution<std::size_t> choose(0, pos.size() - 1);
    const double c = pos[choose(rng)];
    const int th = interior_thickness(rng);
    if (vertical) {
      splits.push_back({{c, r.y0}, {c, r.y1}, th});
      rooms[idx] = {r.x0, r.y0, c, r.y1};
      rooms.push_back({c, r.y0, r.x1, r.y1});
    } else {
      splits.push_back({{r.x0, c}, {r.x1, c}, th});
      rooms[idx] = {r.x0, r.y0, r.x1, c};
      rooms.push_back({r.x0, c, r.x1, r.y1});
    }
  }

  geo::WallGraph g;
  const Point c00{footprint.x0, footprint.y0}, c01{footprint.x0, footprint.y1}, c11{footprint.x1, footprint.y1},
      c10{footprint.x1, footprint.y0};
  for (auto [a, b] : {std::pair{c00, c01}, {c01, c11}, {c11, c10}, {c10, c00}}) g.walls.emplace_back(a, b, ext);
  for (const auto& s : splits) g.walls.emplace_back(s.a, s.b, s.thickness);
  auto split = geo::split_t_junctions(g, kTol).walls;
  std::stable_partition(split.begin(), split.end(),
                        [&](const WallSegment& w) { return on_footprint_boundary(w, footprint); });
  if (perimeter_count) {
    *perimeter_count = static_cast<std::size_t>(std::count_if(
        split.begin(), split.end(), [&](const WallSegment& w) { return on_footprint_boundary(w, footprint); }));
  }
  if (rooms_out) *rooms_out = rooms;
  return split;
}

std::vector<WallSegment> architect_order(const std::vector<WallSegment>& walls, std::size_t perimeter_count,
                                         const Rect& footprint, int start_corner, bool interior_left) {
  const std::size_t n = walls.size();
  std::vector<char> used(n, 0);
  std::vector<WallSegment> out;
  const Point corners[4] = {{footprint.x0, footprint.y0},
                            {footprint.x0, footprint.y1},
                            {footprint.x1, footprint.y1},
                            {footprint.x1, footprint.y0}};
  const Point centre{(footprint.x0 + footprint.x1) / 2, (footprint.y0 + footprint.y1) / 2};
  Point head = corners[((start_corner % 4) + 4) % 4];
  Point dir{0, 0};

  // Orients wall i so it leaves `from`.
  auto take = [&](std::size_t i, Point from) {
    WallSegment w = walls[i];
    if (geo::distance(w.b(), from) < geo::distance(w.a(), from)) w = w.reversed();
    used[i] = 1;
    dir = unit(w.b() - w.a());
    head = w.b();
    out.push_back(w);
  };
  auto incident = [&](std::size_t i) {
    return geo::distance(walls[i].a(), head) < kTol || geo::distance(walls[i].b(), head) < kTol;
  };

  // Outer loop with the interior on the (visual, y-down) left: left of d is (d.y, -d.x).
  const double side = interior_left ? 1.0 : -1.0;
  for (std::size_t i = 0; i < perimeter_count; ++i) {
    if (!incident(i)) continue;
    const Point from = head;
    const Point other = geo::distance(walls[i].a(), head) < kTol ? walls[i].b() : walls[i].a();
    const Point d = unit(other - from);
    if (side * geo::dot(centre - from, Point{d.y, -d.x}) > 0) {
      take(i, from);
      break;
    }
  }
  for (bool progressed = !out.empty(); progressed;) {
    progressed = false;
    for (std::size_t i = 0; i < perimeter_count; ++i)
      if (!used[i] && incident(i)) {
        take(i, head);
        progressed = true;
        break;
      }
  }

  while (out.size() < n) {
    std::size_t best = n;
    int best_rank = 99;
    for (std::size_t i = 0; i < n; ++i) {
      if (used[i] || !incident(i)) continue;
      const Point other = geo::distance(walls[i].a(), head) < kTol ? walls[i].b() : walls[i].a();
      const Point e = unit(other - head);
      const double c = side * geo::cross(dir, e), d = geo::dot(dir, e);
      int rank = 3;
      if (c < -1e-6) rank = 0;
      else if (std::abs(c) <= 1e-6 && d > 0) rank = 1;
      else if (c > 1e-6) rank = 2;
      if (rank < best_rank) {
        best_rank = rank;
        best = i;
      }
    }
    if (best == n) {
      double best_d = 1e300;
      for (std::size_t i = 0; i < n; ++i) {
        if (used[i]) continue;
        const double d = geo::point_segment_distance(head, walls[i].a(), walls[i].b());
        if (d < best_d - 1e-9) {
          best_d = d;
          best = i;
        }
      }
    }
    take(best, head);
  }
  return out;
}

std::vector<raster::Point3> synthesize_points(const std::vector<WallSegment>& walls, const FloorParams& params,
                                              std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 0.5);
  std::vector<raster::Point3> pts;
  constexpr double kWallDensity = 8.0;  // points per square inch of wall footprint
  constexpr double kFt = 1.0 / raster::kInchesPerFoot;
  for (const auto& w : walls) {
    const double len = w.length(), th = w.thickness ? *w.thickness : 6;
    const Point u = unit(w.b() - w.a()), nrm{-u.y, u.x};
    const auto count = static_cast<std::size_t>(len * th * kWallDensity);
    for (std::size_t k = 0; k < count; ++k) {
      const double s = u01(rng) * len, o = (u01(rng) - 0.5) * th;
      const Point p = w.a() + u * s + nrm * o;
      pts.push_back({(p.x + jitter(rng)) * kFt, (p.y + jitter(rng)) * kFt, 0.05 + u01(rng) * 11.9});
    }
  }
  if (params.noise > 0) {
    const Rect fp{params.margin, params.margin, params.margin + params.width, params.margin + params.height};
    const auto scatter = static_cast<std::size_t>(params.noise * 0.05 * fp.area());
    for (std::size_t k = 0; k < scatter; ++k) {
      const double z = u01(rng) < 0.8 ? 0.05 + u01(rng) * 6.4 : 0.05 + u01(rng) * 11.9;
      pts.push_back({(fp.x0 + u01(rng) * fp.width()) * kFt, (fp.y0 + u01(rng) * fp.height()) * kFt, z});
    }
    // Furniture-like blobs in the lowest band.
    const auto blobs = static_cast<int>(std::round(params.noise * params.rooms * 1.5));
    for (int b = 0; b < blobs; ++b) {
      const double bw = 18 + u01(rng) * 30, bh = 18 + u01(rng) * 30;
      const double bx = fp.x0 + 12 + u01(rng) * std::max(1.0, fp.width() - bw - 24);
      const double by = fp.y0 + 12 + u01(rng) * std::max(1.0, fp.height() - bh - 24);
      const auto count = static_cast<std::size_t>(bw * bh * 0.6);
      for (std::size_t k = 0; k < count; ++k)
        pts.push_back({(bx + u01(rng) * bw) * kFt, (by + u01(rng) * bh) * kFt, 0.05 + u01(rng) * 3.0});
    }
  }
  return pts;
}

raster::DensityImage render_density(const std::vector<WallSegment>& walls, const FloorParams& params,
                                    std::uint64_t seed) {
  const auto pts = synthesize_points(walls, params, seed);
  raster::RasterSpec spec;
  spec.width = static_cast<std::size_t>(std::ceil(params.width + 2 * params.margin));
  spec.height = static_cast<std::size_t>(std::ceil(params.height + 2 * params.margin));
  return raster::rasterize_density(pts, spec);
}

SyntheticFloor generate_synthetic_floor(std::uint64_t seed, const FloorParams& params, bool with_density) {
  SyntheticFloor f;
  f.seed = seed;
  f.params = params;
  f.id = floor_id_for(seed, 0);
  std::size_t perimeter = 0;
  auto walls = layout_walls(seed, params, &f.rooms, &perimeter);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const int start_corner = std::uniform_int_distribution<int>(0, 3)(rng);
  const bool interior_left = std::bernoulli_distribution(0.5)(rng);
  const Rect footprint{params.margin, params.margin, params.margin + params.width, params.margin + params.height};
  f.sequence = architect_order(walls, perimeter, footprint, start_corner, interior_left);
  f.perimeter_count = perimeter;
  if (with_density) f.density = render_density(f.sequence, params, seed);
  return f;
}

double shared_endpoint_ratio(const std::vector<WallSegment>& seq, double tol) {
  if (seq.size() < 2) return 1.0;
  std::size_t shared = 0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const auto& p = seq[i - 1];
    const auto& q = seq[i];
    if (geo::distance(p.a(), q.a()) <= tol || geo::distance(p.a(), q.b()) <= tol ||
        geo::distance(p.b(), q.a()) <= tol || geo::distance(p.b(), q.b()) <= tol)
      ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(seq.size() - 1);
}

std::string floor_id_for(std::uint64_t seed, std::size_t index) {
  std::ostringstream os;
  os << "floor_" << std::setw(4) << std::setfill('0') << index << "_s" << seed;
  return os.str();
}

void save_floor(const SyntheticFloor& floor, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  raster::save_density(floor.density, dir / "density.bin");
  nlohmann::json j;
  j["id"] = floor.id;
  j["seed"] = floor.seed;
  j["params"] = {{"rooms", floor.params.rooms},   {"width", floor.params.width}, {"height", floor.params.height},
                 {"margin", floor.params.margin}, {"noise", floor.params.noise}, {"grid", floor.params.grid},
                 {"min_room", floor.params.min_room}};
  j["perimeter_count"] = floor.perimeter_count;
  auto& rooms = j["rooms"] = nlohmann::json::array();
  for (const auto& r : floor.rooms) rooms.push_back({r.x0, r.y0, r.x1, r.y1});
  auto& walls = j["walls"] = nlohmann::json::array();
  for (const auto& w : floor.sequence)
    walls.push_back({{"x0", w.x0}, {"y0", w.y0}, {"x1", w.x1}, {"y1", w.y1},
                     {"thickness", w.thickness ? nlohmann::json(*w.thickness) : nlohmann::json(nullptr)}});
  std::ofstream(dir / "walls.json") << j.dump(1) << '\n';
  const auto sessions = record_sequence(floor.id, floor.sequence);
  for (const auto& s : sessions) {
    std::ostringstream name;
    name << "session_" << std::setw(3) << std::setfill('0') << s.session_index << ".json";
    save_session(s, dir / name.str());
  }
}

SyntheticFloor load_floor(const std::filesystem::path& dir) {
  std::ifstream is(dir / "walls.json");
  if (!is) throw std::runtime_error("missing walls.json in " + dir.string());
  const auto j = nlohmann::json::parse(is);
  SyntheticFloor f;
  f.id = j.at("id").get<std::string>();
  f.seed = j.at("seed").get<std::uint64_t>();
  const auto& p = j.at("params");
  f.params.rooms = p.at("rooms");
  f.params.width = p.at("width");
  f.params.height = p.at("height");
  f.params.margin = p.at("margin");
  f.params.noise = p.at("noise");
  f.params.grid = p.at("grid");
  f.params.min_room = p.at("min_room");
  f.perimeter_count = j.at("perimeter_count");
  for (const auto& r : j.at("rooms")) f.rooms.push_back({r[0], r[1], r[2], r[3]});
  for (const auto& w : j.at("walls")) {
    std::optional<int> th;
    if (!w.at("thickness").is_null()) th = w.at("thickness").get<int>();
    f.sequence.emplace_back(w.at("x0").get<double>(), w.at("y0").get<double>(), w.at("x1").get<double>(),
                            w.at("y1").get<double>(), th);
  }
  f.density = raster::load_density(dir / "density.bin");
  return f;
}

}  // namespace a2p::data
