#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace a2p::geo {

struct Point {
  double x = 0;
  double y = 0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
  friend bool operator==(Point a, Point b) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

inline constexpr int kMinThickness = 1;
inline constexpr int kMaxThickness = 84;
// Walls untouched for this many steps are "old" and share one timestep.
inline constexpr int kOldTimestep = 10;

enum class WallKind { Candidate, Recent, Old };

// t = 0 -> Candidate, 1 <= t < 10 -> Recent, t >= 10 -> Old.
WallKind kind_for_timestep(int t);
const char* to_string(WallKind k);

// A straight wall centreline in pixel coordinates (1 px = 1 inch).
// Construction rejects non-finite or coincident endpoints, a thickness outside
// [1, 84] and a negative timestep.
struct WallSegment {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 1;
  std::optional<int> thickness;
  int timestep = 0;

  WallSegment() = default;
  WallSegment(double x0, double y0, double x1, double y1, std::optional<int> thickness = std::nullopt,
              int timestep = 0);
  WallSegment(Point a, Point b, std::optional<int> thickness = std::nullopt, int timestep = 0)
      : WallSegment(a.x, a.y, b.x, b.y, thickness, timestep) {}

  Point a() const { return {x0, y0}; }
  Point b() const { return {x1, y1}; }
  double length() const { return std::hypot(x1 - x0, y1 - y0); }
  WallKind kind() const { return kind_for_timestep(timestep); }
  WallSegment reversed() const;

  // Same geometry regardless of endpoint order (exact comparison).
  bool same_geometry(const WallSegment& o) const;
  friend bool operator==(const WallSegment&, const WallSegment&) = default;
};

std::string describe(const WallSegment& w);

// Minimum Euclidean distance between any two points of the segments.
double segment_distance(const WallSegment& a, const WallSegment& b);
double point_segment_distance(Point p, Point a, Point b);
bool segments_intersect(Point p1, Point p2, Point q1, Point q2);

// max of the two endpoint distances under the better of the two pairings
// (a0-b0, a1-b1) or (a0-b1, a1-b0). Walls are undirected.
double endpoint_pair_distance(const WallSegment& a, const WallSegment& b);
// Both endpoint distances under the better pairing, as (first, second).
std::pair<double, double> endpoint_distances(const WallSegment& a, const WallSegment& b);

}  // namespace a2p::geo
