#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "a2p/geometry/graph.hpp"

namespace a2p::data {

enum class EditKind { Add, Modify, Delete };
const char* to_string(EditKind k);
EditKind parse_edit_kind(const std::string& s);

// Wall fields as recorded; kept separate from WallSegment so a malformed
// state can still be reported with its id.
struct WallState {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  std::optional<int> thickness;

  geo::WallSegment to_wall() const { return geo::WallSegment(x0, y0, x1, y1, thickness); }
  static WallState from_wall(const geo::WallSegment& w) { return {w.x0, w.y0, w.x1, w.y1, w.thickness}; }
  friend bool operator==(const WallState&, const WallState&) = default;
};

struct EditEvent {
  EditKind kind = EditKind::Add;
  std::string id;
  double t = 0;  // seconds since session start
  std::optional<WallState> state;   // absent for Delete
  std::optional<WallState> before;  // present for Modify and Delete
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved
};

inline constexpr double kSessionSeconds = 15 * 60;

struct EditSession {
  std::string floor_id;
  int session_index = 0;
  std::vector<EditEvent> events;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const EditSession& s);
// `live_ids` are element ids alive when the session starts (from earlier
// sessions); it is updated with this session's adds and deletes.
EditSession session_from_json(const nlohmann::json& j, std::set<std::string>* live_ids = nullptr);

void save_session(const EditSession& s, const std::filesystem::path& path);
EditSession load_session(const std::filesystem::path& path, std::set<std::string>* live_ids = nullptr);
// All session_NNN.json files in `dir`, ordered by session_index, validated as one history.
std::vector<EditSession> load_sessions(const std::filesystem::path& dir);

struct ReplayedWall {
  std::string id;
  geo::WallSegment wall;
};

struct ReplayResult {
  // Surviving walls ordered by their last add/modify event (oldest first).
  std::vector<ReplayedWall> sequence;
  geo::WallGraph graph;  // same walls, same order
};

ReplayResult replay(const std::vector<EditSession>& sessions);

// Cuts absolute-time events into 15-minute sessions with session-relative times.
std::vector<EditSession> split_sessions(const std::string& floor_id, const std::vector<EditEvent>& absolute_events);

// Add events for a wall sequence, one every `step_seconds`, ids "w<index>".
std::vector<EditSession> record_sequence(const std::string& floor_id, const std::vector<geo::WallSegment>& seq,
                                         double step_seconds = 20.0);

}  // namespace a2p::data
