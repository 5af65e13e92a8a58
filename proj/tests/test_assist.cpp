#include <doctest.h>

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "a2p/assist/http.hpp"
#include "a2p/assist/service.hpp"
#include "a2p/dataio/floor.hpp"

using namespace a2p;
using assist::AssistService;
using assist::ServiceError;
using geo::WallSegment;
using nlohmann::json;

namespace {

nw::NextWallConfig small_config() {
  nw::NextWallConfig c;
  c.coord_dim = 32;
  c.type_dim = 16;
  c.time_dim = 16;
  c.encoder = {32, 4, 64, 2, 0.1, 0.1};
  return c;
}

assist::Models models() {
  static const auto m = std::make_shared<const nw::NextWallModel>(small_config(), 5);
  return {m, nullptr, nullptr};
}

json candidates_for(std::uint64_t seed) {
  auto walls = data::generate_synthetic_floor(seed, {}, false).sequence;
  std::mt19937_64 rng(seed);
  std::shuffle(walls.begin(), walls.end(), rng);
  json c = json::array();
  for (std::size_t i = 0; i < walls.size(); ++i) {
    auto j = assist::wall_to_json(walls[i]);
    j["prob"] = 0.5 + 0.4 * double(i % 5) / 5.0;
    c.push_back(j);
  }
  return c;
}

int status_of(auto&& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e.status();
  }
  return 200;
}

std::uint64_t rev(const json& state) { return state["revision"].get<std::uint64_t>(); }

std::vector<WallSegment> walls_of(const json& state) {
  std::vector<WallSegment> w;
  for (const auto& j : state["walls"]) w.push_back(assist::wall_from_json(j));
  return w;
}

}  // namespace

TEST_CASE("create_session") {
  AssistService svc(models());
  const auto a = svc.create_session({{"candidates", candidates_for(1)}});
  const auto b = svc.create_session({{"candidates", json::array()}});
  CHECK(a["session_id"] != b["session_id"]);
  CHECK(a["walls"].empty());
  CHECK(rev(a) == 0);

  CHECK(status_of([&] { svc.create_session(json::object()); }) == 400);
  CHECK(status_of([&] { svc.create_session(json::array()); }) == 400);
  CHECK(status_of([&] { svc.create_session({{"candidates", json::array()}, {"density_path", "/nonexistent"}}); }) == 400);
  CHECK(status_of([&] { svc.state("nope"); }) == 404);
  CHECK(status_of([&] { svc.proposals("nope", 1); }) == 404);

  // imported model without history: every wall t = 10
  const auto floor = data::generate_synthetic_floor(2, {}, false).sequence;
  json walls = json::array();
  for (std::size_t i = 0; i < 5; ++i) walls.push_back(assist::wall_to_json(floor[i]));
  const auto c = svc.create_session({{"candidates", candidates_for(2)}, {"walls", walls}});
  REQUIRE(c["walls"].size() == 5);
  for (const auto& w : c["walls"]) CHECK(w["t"] == 10);
  CHECK(c["corners"].size() >= 5);
  CHECK(status_of([&] { svc.create_session({{"candidates", json::array()}, {"walls", {{{"x0", 1}}}}}); }) == 400);
}

TEST_CASE("proposals") {
  AssistService svc(models());
  const auto id = svc.create_session({{"candidates", candidates_for(3)}})["session_id"].get<std::string>();
  const auto one = svc.proposals(id, 1);
  CHECK(one["walls"].size() == 1);
  CHECK(one["type"] == "proposals");
  // empty history starts from the most probable candidate
  double best = 0;
  for (const auto& c : candidates_for(3)) best = std::max(best, c["prob"].get<double>());
  CHECK(one["walls"][0]["score"].get<double>() == best);

  const auto p = svc.proposals(id, 8);
  CHECK(p["walls"].size() == 8);
  CHECK(p["walls"][0] == one["walls"][0]);
  CHECK(svc.proposals(id, 8) == p);
  CHECK(svc.proposals(id, 3)["walls"] == json(std::vector<json>(p["walls"].begin(), p["walls"].begin() + 3)));

  // never duplicates existing walls
  auto st = svc.accept(id, 4, 0);
  for (int k = 0; k < 3; ++k) {
    const auto existing = walls_of(st);
    for (const auto& w : walls_of(svc.proposals(id, 20)))
      for (const auto& e : existing) CHECK_FALSE(geo::is_duplicate(w, e));
    st = svc.accept(id, 2, rev(st));
  }
}

TEST_CASE("accept and reject") {
  AssistService svc(models());
  const auto s0 = svc.create_session({{"candidates", candidates_for(4)}});
  const auto id = s0["session_id"].get<std::string>();
  const auto p = svc.proposals(id, 5);

  const auto s1 = svc.accept(id, 3, rev(s0));
  CHECK(s1["walls"].size() == 3);
  CHECK(s1["events"] == 3);
  CHECK(rev(s1) == 1);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s1["walls"][i]["x0"] == p["walls"][i]["x0"]);
    CHECK(s1["walls"][i]["t"] == 3 - int(i));
  }

  CHECK(status_of([&] { svc.accept(id, 1, 0); }) == 409);
  auto s1_state = s1;
  s1_state.erase("accepted");
  CHECK(svc.state(id) == s1_state);
  CHECK(status_of([&] { svc.accept(id, 0, 1); }) == 400);

  const auto before = svc.proposals(id, 1);
  const auto s2 = svc.reject(id, rev(s1));
  CHECK(s2["walls"] == s1["walls"]);
  CHECK(rev(s2) == 2);
  const auto after = svc.proposals(id, 1);
  CHECK(after["revision"] == 2);
  CHECK(after["walls"][0] != before["walls"][0]);
  CHECK(status_of([&] { svc.reject(id, 1); }) == 409);

  const auto done = svc.run_automatic(id, rev(s2));
  CHECK(done["walls"].size() + done["rejected"].get<std::size_t>() == candidates_for(4).size());
  CHECK(svc.proposals(id, 5)["walls"].empty());
  CHECK(svc.alternatives(id)["alternatives"].empty());
}

TEST_CASE("alternatives") {
  AssistService svc(models());
  const auto s0 = svc.create_session({{"candidates", candidates_for(5)}});
  const auto id = s0["session_id"].get<std::string>();
  const auto s1 = svc.accept(id, 2, 0);
  const auto alts = svc.alternatives(id)["alternatives"];
  REQUIRE(alts.size() == 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) CHECK_FALSE(assist::wall_from_json(alts[i]).same_geometry(assist::wall_from_json(alts[j])));
  CHECK(alts[0]["x0"] == svc.proposals(id, 1)["walls"][0]["x0"]);

  const auto s2 = svc.pick_alternative(id, 2, rev(s1));
  CHECK(rev(s2) == rev(s1) + 1);
  const auto p = svc.proposals(id, 4)["walls"];
  CHECK(assist::wall_from_json(p[0]).same_geometry(assist::wall_from_json(alts[1])));
  const auto s3 = svc.accept(id, 1, rev(s2));
  CHECK(assist::wall_from_json(s3["walls"].back()).same_geometry(assist::wall_from_json(alts[1])));
  CHECK(status_of([&] { svc.pick_alternative(id, 4, rev(s3)); }) == 400);
  CHECK(status_of([&] { svc.pick_alternative(id, 0, rev(s3)); }) == 400);
  CHECK(rev(svc.state(id)) == rev(s3));

  const auto empty = svc.create_session({{"candidates", json::array()}});
  CHECK(svc.alternatives(empty["session_id"])["alternatives"].empty());
}

TEST_CASE("user walls, corners and deletion") {
  AssistService svc(models());
  const auto s0 = svc.create_session({{"candidates", candidates_for(6)}});
  const auto id = s0["session_id"].get<std::string>();

  CHECK(status_of([&] { svc.add_wall(id, {{"x0", 5}, {"y0", 5}, {"x1", 5}, {"y1", 5}}, 0); }) == 400);
  CHECK(status_of([&] { svc.add_wall(id, {{"x0", 5}, {"y0", 5}}, 0); }) == 400);
  CHECK(status_of([&] { svc.add_wall(id, {{"x0", 0}, {"y0", 0}, {"x1", 9}, {"y1", 0}, {"thickness", 0}}, 0); }) == 400);
  CHECK(rev(svc.state(id)) == 0);

  auto st = svc.add_wall(id, {{"x0", 1000}, {"y0", 1000}, {"x1", 1100}, {"y1", 1000}, {"thickness", 6}}, 0);
  const auto user_id = st["id"].get<std::string>();
  CHECK(st["walls"].size() == 1);
  CHECK(st["corners"].size() == 2);
  st = svc.accept(id, 3, rev(st));
  CHECK(st["walls"][0]["id"] == user_id);
  CHECK(st["walls"][0]["t"] == 4);

  st = svc.modify_wall(id, user_id, {{"x0", 1000}, {"y0", 1000}, {"x1", 1100}, {"y1", 1050}}, rev(st));
  CHECK(st["walls"].back()["id"] == user_id);
  CHECK(st["walls"].back()["t"] == 1);
  CHECK(st["walls"].back()["y1"] == 1050);
  CHECK(std::count(st["corners"].begin(), st["corners"].end(), json({{"x", 1100.0}, {"y", 1050.0}})) == 1);
  CHECK(status_of([&] { svc.modify_wall(id, "zz", {{"x0", 0}, {"y0", 0}, {"x1", 1}, {"y1", 0}}, rev(st)); }) == 404);

  // a deleted wall is not proposed again
  const auto victim = st["walls"][0];
  st = svc.delete_wall(id, victim["id"], rev(st));
  CHECK(st["walls"].size() == 3);
  for (const auto& w : walls_of(svc.proposals(id, 100)))
    CHECK_FALSE(geo::is_duplicate(w, assist::wall_from_json(victim)));

  const auto n = st["corners"].size();
  st = svc.add_corner(id, {{"x", -50}, {"y", -50}}, rev(st));
  CHECK(st["corners"].size() == n + 1);
  CHECK(status_of([&] { svc.add_corner(id, {{"x", 1}}, rev(st)); }) == 400);
  CHECK(status_of([&] { svc.add_corner(id, {{"x", 1}, {"y", 1}}, rev(st) - 1); }) == 409);
}

TEST_CASE("add_corner feeds the wall enumeration") {
  auto floor = data::generate_synthetic_floor(7, {});
  auto m = models();
  m.edges = std::make_shared<const cand::EdgeClassifier>(cand::EdgeClassifierConfig{}, 1);
  assist::ServiceConfig cfg;
  cfg.enumerate.prob_threshold = -1;  // keep every pair
  AssistService svc(m, cfg);

  const auto dir = std::filesystem::temp_directory_path() / "a2p_test_assist_floor";
  data::save_floor(floor, dir);
  const auto& w0 = floor.sequence[0];
  const auto s0 = svc.create_session(
      {{"floor_dir", dir.string()}, {"corners", {{{"x", w0.x0}, {"y", w0.y0}}, {{"x", w0.x1}, {"y", w0.y1}}}}});
  const auto id = s0["session_id"].get<std::string>();
  CHECK(svc.proposals(id, 10)["walls"].size() == 1);

  const geo::Point c{w0.x1 + 3, w0.y1 + 40};
  svc.add_corner(id, {{"x", c.x}, {"y", c.y}}, rev(s0));
  const auto p = walls_of(svc.proposals(id, 10));
  CHECK(p.size() == 3);
  CHECK(std::any_of(p.begin(), p.end(), [&](const WallSegment& w) { return w.a() == c || w.b() == c; }));
  std::filesystem::remove_all(dir);
}

namespace {

// Random scripted client; returns the final state.
json run_script(AssistService& svc, const std::string& id, std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  auto st = svc.state(id);
  for (std::size_t i = 0; i < steps; ++i) {
    const auto r = rev(st);
    const auto nw = st["walls"].size();
    switch (rng() % 8) {
      case 0:
      case 1:
      case 2: st = svc.accept(id, 1 + rng() % 3, r); break;
      case 3: st = svc.reject(id, r); break;
      case 4: {
        const double x = double(rng() % 400), y = double(rng() % 400);
        st = svc.add_wall(id, {{"x0", x}, {"y0", y}, {"x1", x + 10 + double(rng() % 50)}, {"y1", y}}, r);
        break;
      }
      case 5:
        if (nw == 0) break;
        st = svc.modify_wall(id, st["walls"][rng() % nw]["id"],
                             {{"x0", double(rng() % 400)}, {"y0", 0.5}, {"x1", 410.25}, {"y1", double(rng() % 400)},
                              {"thickness", 1 + int(rng() % 20)}},
                             r);
        break;
      case 6:
        if (nw == 0) break;
        st = svc.delete_wall(id, st["walls"][rng() % nw]["id"], r);
        break;
      case 7:
        if (svc.alternatives(id)["alternatives"].size() >= 2) st = svc.pick_alternative(id, 2, r);
        break;
    }
  }
  return st;
}

}  // namespace

TEST_CASE("export, replay, re-export is a fixed point on random scripts") {
  assist::ServiceConfig cfg;
  cfg.seconds_per_event = 130;  // several 15-minute sessions per script
  AssistService svc(models(), cfg);
  const auto base = data::generate_synthetic_floor(8, {}, false).sequence;
  for (std::uint64_t k = 0; k < 50; ++k) {
    json req = {{"candidates", candidates_for(10 + k % 5)}, {"floor_id", "f" + std::to_string(k)}};
    if (k % 3 == 0) {
      json walls = json::array();
      for (std::size_t i = 0; i < 3; ++i) walls.push_back(assist::wall_to_json(base[i]));
      req["walls"] = walls;
    }
    const auto id = svc.create_session(req)["session_id"].get<std::string>();
    const auto fin = run_script(svc, id, k, 25);
    const auto e1 = svc.export_sessions(id);
    CHECK(e1.size() >= 2);

    // replay reproduces the live walls, in recency order
    std::vector<data::EditSession> sessions;
    std::set<std::string> live;
    for (const auto& j : e1) sessions.push_back(data::session_from_json(j, &live));
    const auto rep = data::replay(sessions).sequence;
    REQUIRE(rep.size() == fin["walls"].size());
    for (std::size_t i = 0; i < rep.size(); ++i) {
      CHECK(rep[i].id == fin["walls"][i]["id"]);
      CHECK(rep[i].wall == assist::wall_from_json(fin["walls"][i]));
    }

    json again = {{"candidates", candidates_for(10 + k % 5)}, {"sessions", e1}};
    const auto id2 = svc.create_session(again)["session_id"].get<std::string>();
    CHECK(svc.export_sessions(id2) == e1);
    CHECK(json::parse(svc.export_sessions(id2).dump()) == e1);
    const auto st2 = svc.state(id2);
    REQUIRE(st2["walls"].size() == fin["walls"].size());
    for (std::size_t i = 0; i < rep.size(); ++i) {
      CHECK(st2["walls"][i]["id"] == fin["walls"][i]["id"]);
      CHECK(walls_of(st2)[i] == walls_of(fin)[i]);
    }
  }
}

TEST_CASE("scripted clients are deterministic and sessions independent") {
  AssistService a(models()), b(models());
  const json req = {{"candidates", candidates_for(21)}};
  const auto ia = a.create_session(req)["session_id"].get<std::string>();
  a.create_session(req);  // another session on the same service
  const auto ib = b.create_session(req)["session_id"].get<std::string>();
  const auto fa = run_script(a, ia, 99, 30);
  const auto fb = run_script(b, ib, 99, 30);
  CHECK(fa["walls"] == fb["walls"]);
  CHECK(a.export_sessions(ia) == b.export_sessions(ib));
  CHECK(a.proposals(ia, 5) == b.proposals(ib, 5));
}

TEST_CASE("invalid session history is rejected") {
  AssistService svc(models());
  const json bad = {{{"floor_id", "f"}, {"session_index", 0},
                     {"events", {{{"type", "delete"}, {"id", "w9"}, {"t", 1.0}}}}}};
  CHECK(status_of([&] { svc.create_session({{"candidates", json::array()}, {"sessions", bad}}); }) == 400);
  CHECK(status_of([&] {
          svc.create_session({{"candidates", json::array()}, {"sessions", json::array()}, {"walls", json::array()}});
        }) == 400);
}

TEST_CASE("push channel") {
  AssistService svc(models());
  const auto s0 = svc.create_session({{"candidates", candidates_for(12)}, {"proposals", 4}});
  const auto id = s0["session_id"].get<std::string>();
  auto ch = svc.subscribe(id);
  auto first = ch->pop(1000);
  REQUIRE(first);
  auto m = json::parse(*first);
  CHECK(m["type"] == "proposals");
  CHECK(m["revision"] == 0);
  CHECK(m["walls"].size() == 4);
  svc.accept(id, 2, 0);
  m = json::parse(*ch->pop(1000));
  CHECK(m["revision"] == 1);
  CHECK(m == svc.proposals(id, 4));
  CHECK_FALSE(ch->pop(10));
}

TEST_CASE("http api") {
  AssistService svc(models());
  assist::HttpServer server(svc);
  const int port = server.bind("127.0.0.1");
  REQUIRE(port > 0);
  std::thread th([&] { server.serve(); });

  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(10, 0);
  auto res = cli.Post("/sessions", json({{"candidates", candidates_for(13)}, {"proposals", 3}}).dump(),
                      "application/json");
  REQUIRE(res);
  CHECK(res->status == 201);
  const auto id = json::parse(res->body)["session_id"].get<std::string>();
  const auto base = "/sessions/" + id;

  CHECK(cli.Post("/sessions", "{not json", "application/json")->status == 400);
  CHECK(cli.Get("/sessions/zz/state")->status == 404);
  CHECK(cli.Get(base + "/proposals?n=abc")->status == 400);

  res = cli.Get(base + "/proposals?n=2");
  REQUIRE(res->status == 200);
  const auto props = json::parse(res->body);
  CHECK(props["walls"].size() == 2);
  CHECK(props == svc.proposals(id, 2));

  // server-sent events
  std::vector<json> events;
  std::mutex mu;
  std::thread listener([&] {
    httplib::Client c2("127.0.0.1", port);
    std::string buf;
    c2.Get(base + "/events", [&](const char* data, std::size_t len) {
      buf.append(data, len);
      std::size_t pos;
      std::lock_guard lk(mu);
      while ((pos = buf.find("\n\n")) != std::string::npos) {
        const auto line = buf.substr(0, pos);
        buf.erase(0, pos + 2);
        if (line.rfind("data: ", 0) == 0) events.push_back(json::parse(line.substr(6)));
      }
      return events.size() < 2;
    });
  });
  auto wait_for = [&](std::size_t n) {
    for (int i = 0; i < 500; ++i) {
      {
        std::lock_guard lk(mu);
        if (events.size() >= n) return true;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    return false;
  };
  REQUIRE(wait_for(1));

  res = cli.Post(base + "/accept", json({{"count", 2}, {"revision", 5}}).dump(), "application/json");
  CHECK(res->status == 409);
  res = cli.Post(base + "/accept", json({{"count", 2}, {"revision", 0}}).dump(), "application/json");
  CHECK(res->status == 200);
  CHECK(json::parse(res->body)["walls"].size() == 2);
  REQUIRE(wait_for(2));
  listener.join();
  CHECK(events[0]["revision"] == 0);
  CHECK(events[1]["revision"] == 1);
  CHECK(events[1]["walls"].size() == 3);

  auto alts = json::parse(cli.Get(base + "/alternatives")->body);
  CHECK(alts["alternatives"].size() == 3);
  res = cli.Post(base + "/alternatives/pick", json({{"rank", 3}, {"revision", 1}}).dump(), "application/json");
  CHECK(res->status == 200);
  res = cli.Post(base + "/reject", json({{"revision", 2}}).dump(), "application/json");
  CHECK(res->status == 200);
  res = cli.Post(base + "/walls", json({{"wall", {{"x0", 0}, {"y0", 0}, {"x1", 0}, {"y1", 0}}}, {"revision", 3}}).dump(),
                 "application/json");
  CHECK(res->status == 400);
  res = cli.Post(base + "/walls", json({{"x0", 0}, {"y0", 0}, {"x1", 40}, {"y1", 0}, {"revision", 3}}).dump(),
                 "application/json");
  REQUIRE(res->status == 200);
  const auto wid = json::parse(res->body)["id"].get<std::string>();
  res = cli.Put(base + "/walls/" + wid, json({{"x0", 0}, {"y0", 0}, {"x1", 40}, {"y1", 8}, {"revision", 4}}).dump(),
                "application/json");
  CHECK(res->status == 200);
  CHECK(cli.Delete(base + "/walls/" + wid + "?revision=5")->status == 200);
  CHECK(cli.Delete(base + "/walls/" + wid + "?revision=6")->status == 404);
  res = cli.Post(base + "/corners", json({{"x", 3}, {"y", 4}, {"revision", 6}}).dump(), "application/json");
  CHECK(res->status == 200);
  res = cli.Post(base + "/auto", json({{"revision", 7}}).dump(), "application/json");
  CHECK(res->status == 200);
  CHECK(json::parse(cli.Get(base + "/proposals")->body)["walls"].empty());

  const auto state = json::parse(cli.Get(base + "/state")->body);
  const auto exported = json::parse(cli.Get(base + "/export")->body);
  CHECK(exported == svc.export_sessions(id));
  res = cli.Post("/sessions", json({{"candidates", json::array()}, {"sessions", exported}}).dump(), "application/json");
  REQUIRE(res->status == 201);
  CHECK(json::parse(res->body)["walls"] == state["walls"]);

  server.stop();
  th.join();
}
