#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "a2p/candidates/corners.hpp"
#include "a2p/candidates/edges.hpp"
#include "a2p/dataio/session.hpp"
#include "a2p/nextwall/model.hpp"

namespace a2p::assist {

using geo::WallSegment;

// Carries the HTTP status the request maps to: 400 invalid input, 404 unknown
// session or wall, 409 stale revision.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& msg) : std::runtime_error(msg), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct Models {
  std::shared_ptr<const nw::NextWallModel> next_wall;  // required
  std::shared_ptr<const cand::EdgeClassifier> edges;   // scores enumerated corner pairs
  std::shared_ptr<const cand::CornerScorer> corners;   // detects corners on create
};

struct ServiceConfig {
  std::size_t default_proposals = 10;
  double seconds_per_event = 20;  // logical clock step per logged event
  double corner_merge = 0.5;      // new corners closer than this to a cached one are dropped
  double corner_min_score = 0.3;
  cand::EnumerateOptions enumerate{};
  double duplicate_threshold = geo::kDuplicateThreshold;
};

// Push channel for one subscriber; messages are JSON text.
class Channel {
 public:
  void push(std::string msg);
  // Waits up to timeout_ms; nullopt on timeout or when closed and drained.
  std::optional<std::string> pop(int timeout_ms);
  void close();
  bool closed() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> queue_;
  bool closed_ = false;
};

// Session requests and responses are JSON. Walls are
// {"x0","y0","x1","y1","thickness"?} in inches (1 px = 1 in).
//
// create_session request fields, all optional except a candidate source:
//   floor_id          id written to exported sessions (default "floor")
//   density_path      density.bin, or floor_dir holding one
//   corners           [{"x","y"}] cached corners; otherwise detected when a
//                     corner scorer is loaded and a density image is given
//   candidates        [wall + "prob"?] fixed candidate walls; otherwise corner
//                     pairs are scored by the edge classifier
//   sessions          edit-session history (array of session JSON), replayed
//   walls             existing walls without history (t = 10)
//   proposals         default proposal length
class AssistService {
 public:
  AssistService(Models models, ServiceConfig cfg = {});
  ~AssistService();

  nlohmann::json create_session(const nlohmann::json& req);
  nlohmann::json state(const std::string& id);
  // n = 0 uses the session default; proposals are tagged with the revision.
  nlohmann::json proposals(const std::string& id, std::size_t n = 0);
  nlohmann::json alternatives(const std::string& id);

  nlohmann::json accept(const std::string& id, std::size_t count, std::uint64_t revision);
  nlohmann::json reject(const std::string& id, std::uint64_t revision);
  // rank 1..3 among alternatives(); the proposal buffer becomes a rollout
  // starting at that wall.
  nlohmann::json pick_alternative(const std::string& id, std::size_t rank, std::uint64_t revision);
  nlohmann::json add_wall(const std::string& id, const nlohmann::json& wall, std::uint64_t revision);
  nlohmann::json modify_wall(const std::string& id, const std::string& wall_id, const nlohmann::json& wall,
                             std::uint64_t revision);
  nlohmann::json delete_wall(const std::string& id, const std::string& wall_id, std::uint64_t revision);
  nlohmann::json add_corner(const std::string& id, const nlohmann::json& corner, std::uint64_t revision);
  // Automatic mode: roll out every remaining candidate and accept them all.
  nlohmann::json run_automatic(const std::string& id, std::uint64_t revision);

  // Array of edit-session JSON objects.
  nlohmann::json export_sessions(const std::string& id);

  // Receives {"type":"proposals","revision","walls"} after every mutation,
  // starting with the current proposals.
  std::shared_ptr<Channel> subscribe(const std::string& id);
  void close_channels();

 private:
  struct LiveWall {
    std::string id;
    WallSegment wall;
    bool imported = false;
  };
  struct Proposed {
    WallSegment wall;
    double score = 0;
  };
  struct Session {
    std::mutex mu;
    std::string id, floor_id;
    std::optional<raster::DensityImage> density;
    std::vector<geo::Point> corners;
    std::optional<std::vector<cand::Candidate>> fixed_candidates;
    std::vector<LiveWall> walls;  // recency order, oldest first
    std::vector<WallSegment> rejected;
    std::vector<data::EditSession> log;  // imported sessions kept verbatim
    std::set<std::string> used_ids;
    double clock = 0;
    std::size_t next_id = 0;
    std::uint64_t revision = 0;
    std::size_t default_n = 10;
    std::optional<WallSegment> pinned;
    std::uint64_t corners_version = 0;
    std::optional<std::pair<std::uint64_t, std::vector<cand::Candidate>>> enumerated;  // by corners_version
    std::optional<std::tuple<std::uint64_t, std::size_t, std::vector<Proposed>>> buffer;
    std::vector<std::weak_ptr<Channel>> channels;
  };

  std::shared_ptr<Session> find(const std::string& id);
  void check_revision(const Session& s, std::uint64_t revision) const;
  // Sorted by probability, deduplicated against existing and rejected walls.
  std::vector<cand::Candidate> candidate_pool(Session& s);
  nw::SequenceState sequence_state(Session& s);
  const std::vector<Proposed>& current_proposals(Session& s, std::size_t n);
  nlohmann::json proposals_json(Session& s, std::size_t n);
  nlohmann::json state_json(const Session& s) const;
  void log_event(Session& s, data::EditEvent e);
  std::string fresh_id(Session& s);
  void add_corner_point(Session& s, geo::Point p);
  void mutated(Session& s);

  Models models_;
  ServiceConfig cfg_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_session_ = 1;
};

nlohmann::json wall_to_json(const WallSegment& w);
// Throws ServiceError(400) on missing fields or an invalid wall.
WallSegment wall_from_json(const nlohmann::json& j);

}  // namespace a2p::assist
