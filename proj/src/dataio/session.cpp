#include "a2p/dataio/session.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <stdexcept>

namespace a2p::data {

using nlohmann::json;

const char* to_string(EditKind k) {
  switch (k) {
    case EditKind::Add: return "add";
    case EditKind::Modify: return "modify";
    case EditKind::Delete: return "delete";
  }
  return "?";
}

EditKind parse_edit_kind(const std::string& s) {
  if (s == "add") return EditKind::Add;
  if (s == "modify") return EditKind::Modify;
  if (s == "delete") return EditKind::Delete;
  throw std::invalid_argument("unknown event kind '" + s + "'");
}

namespace {

json state_json(const WallState& s) {
  return {{"x0", s.x0}, {"y0", s.y0}, {"x1", s.x1}, {"y1", s.y1},
          {"thickness", s.thickness ? json(*s.thickness) : json(nullptr)}};
}

WallState parse_state(const json& j, const std::string& id) {
  if (!j.is_object()) throw std::invalid_argument("event " + id + ": state must be an object");
  WallState s;
  try {
    s.x0 = j.at("x0").get<double>();
    s.y0 = j.at("y0").get<double>();
    s.x1 = j.at("x1").get<double>();
    s.y1 = j.at("y1").get<double>();
    if (j.contains("thickness") && !j.at("thickness").is_null()) s.thickness = j.at("thickness").get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument("event " + id + ": bad wall state: " + e.what());
  }
  try {
    (void)s.to_wall();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("event " + id + ": " + e.what());
  }
  return s;
}

}  // namespace

json to_json(const EditSession& s) {
  json j = s.extra;
  j["floor_id"] = s.floor_id;
  j["session_index"] = s.session_index;
  auto& evs = j["events"] = json::array();
  for (const auto& e : s.events) {
    json je = e.extra;
    je["kind"] = to_string(e.kind);
    je["id"] = e.id;
    je["t"] = e.t;
    if (e.state) je["state"] = state_json(*e.state);
    if (e.before) je["before"] = state_json(*e.before);
    evs.push_back(std::move(je));
  }
  return j;
}

EditSession session_from_json(const json& j, std::set<std::string>* live_ids) {
  if (!j.is_object()) throw std::invalid_argument("session must be a JSON object");
  EditSession s;
  try {
    s.floor_id = j.at("floor_id").get<std::string>();
    s.session_index = j.at("session_index").get<int>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("session header: ") + e.what());
  }
  if (!j.contains("events") || !j.at("events").is_array()) throw std::invalid_argument("session lacks an events array");
  for (const auto& [k, v] : j.items())
    if (k != "floor_id" && k != "session_index" && k != "events") s.extra[k] = v;

  std::set<std::string> local;
  std::set<std::string>& live = live_ids ? *live_ids : local;
  double last_t = -1;
  for (const auto& je : j.at("events")) {
    EditEvent e;
    try {
      e.kind = parse_edit_kind(je.at("kind").get<std::string>());
      e.id = je.at("id").get<std::string>();
      e.t = je.at("t").get<double>();
    } catch (const json::exception& ex) {
      throw std::invalid_argument(std::string("malformed event: ") + ex.what());
    }
    if (!std::isfinite(e.t) || e.t < 0) throw std::invalid_argument("event " + e.id + ": bad timestamp");
    if (e.t < last_t) throw std::invalid_argument("event " + e.id + ": timestamps out of order");
    if (e.t > kSessionSeconds) throw std::invalid_argument("event " + e.id + ": beyond the 15-minute session");
    last_t = e.t;
    if (je.contains("state")) e.state = parse_state(je.at("state"), e.id);
    if (je.contains("before")) e.before = parse_state(je.at("before"), e.id);
    for (const auto& [k, v] : je.items())
      if (k != "kind" && k != "id" && k != "t" && k != "state" && k != "before") e.extra[k] = v;
    switch (e.kind) {
      case EditKind::Add:
        if (!e.state) throw std::invalid_argument("add event " + e.id + " lacks state");
        if (live.count(e.id)) throw std::invalid_argument("add event reuses live id " + e.id);
        live.insert(e.id);
        break;
      case EditKind::Modify:
        if (!e.state || !e.before) throw std::invalid_argument("modify event " + e.id + " needs state and before");
        if (!live.count(e.id)) throw std::invalid_argument("modify event references unknown id " + e.id);
        break;
      case EditKind::Delete:
        if (e.state) throw std::invalid_argument("delete event " + e.id + " must not carry state");
        if (!e.before) throw std::invalid_argument("delete event " + e.id + " lacks before");
        if (!live.count(e.id)) throw std::invalid_argument("delete event references unknown id " + e.id);
        live.erase(e.id);
        break;
    }
    s.events.push_back(std::move(e));
  }
  return s;
}

void save_session(const EditSession& s, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write session: " + path.string());
  os << to_json(s).dump(1) << '\n';
}

EditSession load_session(const std::filesystem::path& path, std::set<std::string>* live_ids) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open session: " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": malformed JSON: " + e.what());
  }
  return session_from_json(j, live_ids);
}

std::vector<EditSession> load_sessions(const std::filesystem::path& dir) {
  static const std::regex name_re(R"(session_\d+\.json)");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (std::regex_match(entry.path().filename().string(), name_re)) files.push_back(entry.path());
  std::vector<std::pair<int, json>> parsed;
  for (const auto& f : files) {
    std::ifstream is(f);
    auto j = json::parse(is);
    parsed.emplace_back(j.at("session_index").get<int>(), std::move(j));
  }
  std::sort(parsed.begin(), parsed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::set<std::string> live;
  std::vector<EditSession> out;
  for (const auto& [idx, j] : parsed) out.push_back(session_from_json(j, &live));
  return out;
}

ReplayResult replay(const std::vector<EditSession>& sessions) {
  struct Entry {
    geo::WallSegment wall;
    std::size_t last_touch;
  };
  std::map<std::string, Entry> live;
  std::size_t clock = 0;
  for (const auto& s : sessions)
    for (const auto& e : s.events) {
      ++clock;
      switch (e.kind) {
        case EditKind::Add:
          if (live.count(e.id)) throw std::invalid_argument("replay: id " + e.id + " added twice");
          live[e.id] = {e.state->to_wall(), clock};
          break;
        case EditKind::Modify: {
          auto it = live.find(e.id);
          if (it == live.end()) throw std::invalid_argument("replay: modify before add for id " + e.id);
          it->second = {e.state->to_wall(), clock};
          break;
        }
        case EditKind::Delete:
          if (!live.erase(e.id)) throw std::invalid_argument("replay: delete before add for id " + e.id);
          break;
      }
    }
  ReplayResult r;
  for (auto& [id, entry] : live) r.sequence.push_back({id, entry.wall});
  std::sort(r.sequence.begin(), r.sequence.end(), [&](const ReplayedWall& a, const ReplayedWall& b) {
    return live.at(a.id).last_touch < live.at(b.id).last_touch;
  });
  for (const auto& w : r.sequence) r.graph.walls.push_back(w.wall);
  return r;
}

std::vector<EditSession> split_sessions(const std::string& floor_id, const std::vector<EditEvent>& events) {
  std::vector<EditSession> out;
  double prev = 0;
  for (const auto& e : events) {
    if (e.t < prev) throw std::invalid_argument("split_sessions: events out of time order");
    prev = e.t;
    const int idx = static_cast<int>(std::floor(e.t / kSessionSeconds));
    if (out.empty() || out.back().session_index != idx) out.push_back({floor_id, idx, {}, json::object()});
    EditEvent rel = e;
    rel.t = e.t - idx * kSessionSeconds;
    out.back().events.push_back(std::move(rel));
  }
  return out;
}

std::vector<EditSession> record_sequence(const std::string& floor_id, const std::vector<geo::WallSegment>& seq,
                                         double step_seconds) {
  std::vector<EditEvent> events;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    EditEvent e;
    e.kind = EditKind::Add;
    e.id = "w" + std::to_string(i);
    e.t = static_cast<double>(i) * step_seconds;
    e.state = WallState::from_wall(seq[i]);
    events.push_back(std::move(e));
  }
  return split_sessions(floor_id, events);
}

}  // namespace a2p::data
