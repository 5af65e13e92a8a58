#include "a2p/assist/service.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>

#include "a2p/raster/density.hpp"

namespace a2p::assist {

using nlohmann::json;

// ---- channel ----

void Channel::push(std::string msg) {
  {
    std::lock_guard lk(mu_);
    if (closed_) return;
    queue_.push_back(std::move(msg));
  }
  cv_.notify_all();
}

std::optional<std::string> Channel::pop(int timeout_ms) {
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, std::chrono::milliseconds(timeout_ms), [&] { return closed_ || !queue_.empty(); });
  if (queue_.empty()) return std::nullopt;
  auto m = std::move(queue_.front());
  queue_.pop_front();
  return m;
}

void Channel::close() {
  {
    std::lock_guard lk(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

bool Channel::closed() const {
  std::lock_guard lk(mu_);
  return closed_;
}

// ---- json helpers ----

json wall_to_json(const WallSegment& w) {
  json j = {{"x0", w.x0}, {"y0", w.y0}, {"x1", w.x1}, {"y1", w.y1}};
  if (w.thickness) j["thickness"] = *w.thickness;
  return j;
}

namespace {

double number(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key) || !j[key].is_number())
    throw ServiceError(400, std::string("missing numeric field '") + key + "'");
  return j[key].get<double>();
}

geo::Point point_from_json(const json& j) {
  const geo::Point p{number(j, "x"), number(j, "y")};
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ServiceError(400, "corner coordinates must be finite");
  return p;
}

}  // namespace

WallSegment wall_from_json(const json& j) {
  const double x0 = number(j, "x0"), y0 = number(j, "y0"), x1 = number(j, "x1"), y1 = number(j, "y1");
  std::optional<int> th;
  if (j.contains("thickness") && !j["thickness"].is_null()) {
    if (!j["thickness"].is_number_integer()) throw ServiceError(400, "thickness must be an integer");
    th = j["thickness"].get<int>();
  }
  try {
    return WallSegment(x0, y0, x1, y1, th);
  } catch (const std::exception& e) {
    throw ServiceError(400, e.what());
  }
}

// ---- service ----

AssistService::AssistService(Models models, ServiceConfig cfg) : models_(std::move(models)), cfg_(std::move(cfg)) {
  if (!models_.next_wall) throw std::invalid_argument("AssistService needs a next-wall model");
}

AssistService::~AssistService() { close_channels(); }

std::shared_ptr<AssistService::Session> AssistService::find(const std::string& id) {
  std::lock_guard lk(mu_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + id + "'");
  return it->second;
}

void AssistService::check_revision(const Session& s, std::uint64_t revision) const {
  if (revision != s.revision)
    throw ServiceError(409, "stale revision " + std::to_string(revision) + ", current " + std::to_string(s.revision));
}

std::string AssistService::fresh_id(Session& s) {
  for (;;) {
    auto id = "w" + std::to_string(s.next_id++);
    if (s.used_ids.insert(id).second) return id;
  }
}

void AssistService::add_corner_point(Session& s, geo::Point p) {
  for (const auto& c : s.corners)
    if (geo::distance(c, p) < cfg_.corner_merge) return;
  s.corners.push_back(p);
  ++s.corners_version;
}

void AssistService::log_event(Session& s, data::EditEvent e) {
  s.clock += cfg_.seconds_per_event;
  const int idx = int(std::floor(s.clock / data::kSessionSeconds));
  e.t = s.clock - idx * data::kSessionSeconds;
  if (s.log.empty() || s.log.back().session_index != idx) s.log.push_back({s.floor_id, idx, {}, json::object()});
  s.log.back().events.push_back(std::move(e));
}

json AssistService::create_session(const json& req) {
  if (!req.is_object()) throw ServiceError(400, "request must be a JSON object");
  auto s = std::make_shared<Session>();
  s->floor_id = req.value("floor_id", std::string("floor"));
  s->default_n = cfg_.default_proposals;
  if (req.contains("proposals")) {
    if (!req["proposals"].is_number_integer() || req["proposals"].get<long long>() <= 0)
      throw ServiceError(400, "'proposals' must be a positive integer");
    s->default_n = req["proposals"].get<std::size_t>();
  }

  std::optional<std::filesystem::path> density_path;
  if (req.contains("density_path")) density_path = req["density_path"].get<std::string>();
  else if (req.contains("floor_dir"))
    density_path = std::filesystem::path(req["floor_dir"].get<std::string>()) / "density.bin";
  if (density_path) {
    try {
      s->density = raster::load_density(*density_path);
    } catch (const std::exception& e) {
      throw ServiceError(400, std::string("cannot load density image: ") + e.what());
    }
  }

  if (req.contains("candidates")) {
    if (!req["candidates"].is_array()) throw ServiceError(400, "'candidates' must be an array");
    std::vector<cand::Candidate> c;
    for (const auto& j : req["candidates"]) c.push_back({wall_from_json(j), j.value("prob", 1.0)});
    s->fixed_candidates = std::move(c);
  } else if (!(s->density && models_.edges)) {
    throw ServiceError(400, "no candidate source: give 'candidates', or a density image with an edge classifier loaded");
  }

  if (req.contains("corners")) {
    if (!req["corners"].is_array()) throw ServiceError(400, "'corners' must be an array");
    for (const auto& j : req["corners"]) add_corner_point(*s, point_from_json(j));
  } else if (s->density && models_.corners) {
    for (auto p : cand::detect_corners(*s->density, cand::CornerDetector::learned(*models_.corners,
                                                                                 cfg_.corner_min_score)))
      add_corner_point(*s, p);
  }

  if (req.contains("sessions") && req.contains("walls"))
    throw ServiceError(400, "give either 'sessions' or 'walls', not both");
  if (req.contains("sessions")) {
    if (!req["sessions"].is_array()) throw ServiceError(400, "'sessions' must be an array");
    try {
      std::set<std::string> live;
      for (const auto& j : req["sessions"]) s->log.push_back(data::session_from_json(j, &live));
      for (std::size_t i = 1; i < s->log.size(); ++i)
        if (s->log[i].session_index <= s->log[i - 1].session_index)
          throw std::invalid_argument("session indices must increase");
      for (const auto& r : data::replay(s->log).sequence) s->walls.push_back({r.id, r.wall, false});
    } catch (const ServiceError&) {
      throw;
    } catch (const std::exception& e) {
      throw ServiceError(400, std::string("invalid session history: ") + e.what());
    }
    if (!req.contains("floor_id") && !s->log.empty()) s->floor_id = s->log.front().floor_id;
    for (const auto& sess : s->log)
      for (const auto& e : sess.events) s->used_ids.insert(e.id);
    if (!s->log.empty()) {
      const auto& last = s->log.back();
      s->clock = last.session_index * data::kSessionSeconds + (last.events.empty() ? 0.0 : last.events.back().t);
    }
  } else if (req.contains("walls")) {
    if (!req["walls"].is_array()) throw ServiceError(400, "'walls' must be an array");
    std::vector<WallSegment> walls;
    for (const auto& j : req["walls"]) walls.push_back(wall_from_json(j));
    data::EditSession first{s->floor_id, 0, {}, json::object()};
    for (const auto& w : walls) {
      const auto id = fresh_id(*s);
      s->walls.push_back({id, w, true});
      first.events.push_back({data::EditKind::Add, id, 0.0, data::WallState::from_wall(w), std::nullopt, json::object()});
    }
    if (!first.events.empty()) s->log.push_back(std::move(first));
  }
  for (const auto& w : s->walls) {
    add_corner_point(*s, w.wall.a());
    add_corner_point(*s, w.wall.b());
  }

  std::lock_guard lk(mu_);
  s->id = "s" + std::to_string(next_session_++);
  sessions_[s->id] = s;
  return state_json(*s);
}

std::vector<cand::Candidate> AssistService::candidate_pool(Session& s) {
  std::vector<cand::Candidate> raw;
  if (s.fixed_candidates) {
    raw = *s.fixed_candidates;
  } else {
    if (!s.enumerated || s.enumerated->first != s.corners_version) {
      auto e = cand::enumerate_and_classify(s.corners, *s.density, *models_.edges, cfg_.enumerate);
      s.enumerated = {s.corners_version, std::move(e.candidates)};
    }
    raw = s.enumerated->second;
  }
  std::stable_sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.prob > b.prob; });

  std::vector<WallSegment> blocked;
  for (const auto& w : s.walls) blocked.push_back(w.wall);
  blocked.insert(blocked.end(), s.rejected.begin(), s.rejected.end());
  std::vector<cand::Candidate> out;
  auto dup = [&](const WallSegment& w) {
    for (const auto& b : blocked)
      if (geo::is_duplicate(w, b, cfg_.duplicate_threshold)) return true;
    for (const auto& o : out)
      if (geo::is_duplicate(w, o.wall, cfg_.duplicate_threshold)) return true;
    return false;
  };
  for (auto& c : raw) {
    c.wall.timestep = 0;
    if (!dup(c.wall)) out.push_back(std::move(c));
  }
  return out;
}

nw::SequenceState AssistService::sequence_state(Session& s) {
  nw::SequenceState st;
  const std::size_t n = s.walls.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto w = s.walls[i].wall;
    w.timestep = s.walls[i].imported ? geo::kOldTimestep : int(std::min<std::size_t>(n - i, geo::kOldTimestep));
    st.history.push_back(w);
  }
  return st;
}

const std::vector<AssistService::Proposed>& AssistService::current_proposals(Session& s, std::size_t n) {
  if (s.buffer && std::get<0>(*s.buffer) == s.revision && std::get<1>(*s.buffer) >= n) return std::get<2>(*s.buffer);

  const auto pool = candidate_pool(s);
  auto st = sequence_state(s);
  for (const auto& c : pool) st.candidates.push_back(c.wall);
  std::vector<double> probs;
  for (const auto& c : pool) probs.push_back(c.prob);

  std::vector<Proposed> out;
  auto take = [&](std::size_t i, double score) {
    out.push_back({st.candidates[i], score});
    nw::push_history(st, st.candidates[i]);
    st.candidates.erase(st.candidates.begin() + long(i));
    probs.erase(probs.begin() + long(i));
  };
  if (s.pinned && n > 0) {
    for (std::size_t i = 0; i < st.candidates.size(); ++i)
      if (st.candidates[i].same_geometry(*s.pinned)) {
        take(i, st.history.empty() ? probs[i] : nw::score_candidates(st, *models_.next_wall).scores[i]);
        break;
      }
  }
  while (out.size() < n && !st.candidates.empty()) {
    if (st.history.empty()) {
      take(0, probs[0]);
    } else {
      const auto best = nw::top_k_alternatives(st, *models_.next_wall, 1).front();
      take(best.index, best.score);
    }
  }
  s.buffer = {s.revision, n, std::move(out)};
  return std::get<2>(*s.buffer);
}

json AssistService::proposals_json(Session& s, std::size_t n) {
  const auto& p = current_proposals(s, n);
  json walls = json::array();
  for (std::size_t i = 0; i < std::min(n, p.size()); ++i) {
    auto j = wall_to_json(p[i].wall);
    j["score"] = p[i].score;
    walls.push_back(std::move(j));
  }
  return {{"type", "proposals"}, {"revision", s.revision}, {"walls", std::move(walls)}};
}

json AssistService::state_json(const Session& s) const {
  json walls = json::array();
  const std::size_t n = s.walls.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto j = wall_to_json(s.walls[i].wall);
    j["id"] = s.walls[i].id;
    j["t"] = s.walls[i].imported ? geo::kOldTimestep : int(std::min<std::size_t>(n - i, geo::kOldTimestep));
    walls.push_back(std::move(j));
  }
  json corners = json::array();
  for (auto c : s.corners) corners.push_back({{"x", c.x}, {"y", c.y}});
  std::size_t events = 0;
  for (const auto& sess : s.log) events += sess.events.size();
  return {{"session_id", s.id}, {"floor_id", s.floor_id}, {"revision", s.revision},
          {"walls", std::move(walls)}, {"corners", std::move(corners)}, {"rejected", s.rejected.size()},
          {"events", events}};
}

void AssistService::mutated(Session& s) {
  ++s.revision;
  s.buffer.reset();
  std::erase_if(s.channels, [](const auto& w) {
    auto c = w.lock();
    return !c || c->closed();
  });
  if (s.channels.empty()) return;
  const auto msg = proposals_json(s, s.default_n).dump();
  for (const auto& w : s.channels)
    if (auto c = w.lock()) c->push(msg);
}

json AssistService::state(const std::string& id) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  return state_json(*s);
}

json AssistService::proposals(const std::string& id, std::size_t n) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  return proposals_json(*s, n == 0 ? s->default_n : n);
}

json AssistService::alternatives(const std::string& id) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  const auto pool = candidate_pool(*s);
  json alts = json::array();
  auto add = [&](const WallSegment& w, double score) {
    auto j = wall_to_json(w);
    j["rank"] = alts.size() + 1;
    j["score"] = score;
    alts.push_back(std::move(j));
  };
  if (s->walls.empty()) {
    for (std::size_t i = 0; i < std::min<std::size_t>(3, pool.size()); ++i) add(pool[i].wall, pool[i].prob);
  } else {
    auto st = sequence_state(*s);
    for (const auto& c : pool) st.candidates.push_back(c.wall);
    for (const auto& a : nw::top_k_alternatives(st, *models_.next_wall, 3)) add(st.candidates[a.index], a.score);
  }
  return {{"revision", s->revision}, {"alternatives", std::move(alts)}};
}

json AssistService::accept(const std::string& id, std::size_t count, std::uint64_t revision) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  if (count == 0) throw ServiceError(400, "'count' must be positive");
  const auto props = current_proposals(*s, count);
  const std::size_t k = std::min(count, props.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto wid = fresh_id(*s);
    auto w = props[i].wall;
    w.timestep = 0;
    s->walls.push_back({wid, w, false});
    add_corner_point(*s, w.a());
    add_corner_point(*s, w.b());
    log_event(*s, {data::EditKind::Add, wid, 0, data::WallState::from_wall(w), std::nullopt, json::object()});
  }
  s->pinned.reset();
  mutated(*s);
  auto out = state_json(*s);
  out["accepted"] = k;
  return out;
}

json AssistService::reject(const std::string& id, std::uint64_t revision) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  const auto& props = current_proposals(*s, 1);
  if (!props.empty()) s->rejected.push_back(props.front().wall);
  s->pinned.reset();
  mutated(*s);
  return state_json(*s);
}

json AssistService::pick_alternative(const std::string& id, std::size_t rank, std::uint64_t revision) {
  auto s = find(id);
  {
    std::lock_guard lk(s->mu);
    check_revision(*s, revision);
  }
  const auto alts = alternatives(id)["alternatives"];
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  if (rank < 1 || rank > alts.size())
    throw ServiceError(400, "alternative rank " + std::to_string(rank) + " out of range");
  s->pinned = wall_from_json(alts[rank - 1]);
  mutated(*s);
  return state_json(*s);
}

json AssistService::add_wall(const std::string& id, const json& wall, std::uint64_t revision) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  const auto w = wall_from_json(wall);
  const auto wid = fresh_id(*s);
  s->walls.push_back({wid, w, false});
  add_corner_point(*s, w.a());
  add_corner_point(*s, w.b());
  log_event(*s, {data::EditKind::Add, wid, 0, data::WallState::from_wall(w), std::nullopt, json::object()});
  s->pinned.reset();
  mutated(*s);
  auto out = state_json(*s);
  out["id"] = wid;
  return out;
}

json AssistService::modify_wall(const std::string& id, const std::string& wall_id, const json& wall,
                                std::uint64_t revision) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  const auto it = std::find_if(s->walls.begin(), s->walls.end(), [&](const auto& w) { return w.id == wall_id; });
  if (it == s->walls.end()) throw ServiceError(404, "unknown wall '" + wall_id + "'");
  const auto w = wall_from_json(wall);
  const auto before = it->wall;
  s->walls.erase(it);
  s->walls.push_back({wall_id, w, false});
  add_corner_point(*s, w.a());
  add_corner_point(*s, w.b());
  log_event(*s, {data::EditKind::Modify, wall_id, 0, data::WallState::from_wall(w), data::WallState::from_wall(before),
                 json::object()});
  s->pinned.reset();
  mutated(*s);
  return state_json(*s);
}

json AssistService::delete_wall(const std::string& id, const std::string& wall_id, std::uint64_t revision) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  const auto it = std::find_if(s->walls.begin(), s->walls.end(), [&](const auto& w) { return w.id == wall_id; });
  if (it == s->walls.end()) throw ServiceError(404, "unknown wall '" + wall_id + "'");
  const auto before = it->wall;
  s->walls.erase(it);
  s->rejected.push_back(before);
  log_event(*s, {data::EditKind::Delete, wall_id, 0, std::nullopt, data::WallState::from_wall(before), json::object()});
  s->pinned.reset();
  mutated(*s);
  return state_json(*s);
}

json AssistService::add_corner(const std::string& id, const json& corner, std::uint64_t revision) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  check_revision(*s, revision);
  add_corner_point(*s, point_from_json(corner));
  mutated(*s);
  return state_json(*s);
}

json AssistService::run_automatic(const std::string& id, std::uint64_t revision) {
  std::size_t n = 0;
  {
    auto s = find(id);
    std::lock_guard lk(s->mu);
    check_revision(*s, revision);
    n = candidate_pool(*s).size();
  }
  if (n == 0) {
    auto s = find(id);
    std::lock_guard lk(s->mu);
    check_revision(*s, revision);
    auto out = state_json(*s);
    out["accepted"] = 0;
    return out;
  }
  return accept(id, n, revision);
}

json AssistService::export_sessions(const std::string& id) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  json out = json::array();
  for (const auto& sess : s->log) out.push_back(data::to_json(sess));
  return out;
}

std::shared_ptr<Channel> AssistService::subscribe(const std::string& id) {
  auto s = find(id);
  std::lock_guard lk(s->mu);
  auto c = std::make_shared<Channel>();
  c->push(proposals_json(*s, s->default_n).dump());
  s->channels.push_back(c);
  return c;
}

void AssistService::close_channels() {
  std::lock_guard lk(mu_);
  for (auto& [id, s] : sessions_) {
    std::lock_guard slk(s->mu);
    for (const auto& w : s->channels)
      if (auto c = w.lock()) c->close();
    s->channels.clear();
  }
}

}  // namespace a2p::assist
