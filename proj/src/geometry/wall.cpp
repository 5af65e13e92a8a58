#include "a2p/geometry/wall.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace a2p::geo {

WallKind kind_for_timestep(int t) {
  if (t < 0) throw std::invalid_argument("negative timestep " + std::to_string(t));
  if (t == 0) return WallKind::Candidate;
  if (t < kOldTimestep) return WallKind::Recent;
  return WallKind::Old;
}

const char* to_string(WallKind k) {
  switch (k) {
    case WallKind::Candidate: return "candidate";
    case WallKind::Recent: return "recent";
    case WallKind::Old: return "old";
  }
  return "?";
}

WallSegment::WallSegment(double x0_, double y0_, double x1_, double y1_, std::optional<int> thickness_,
                         int timestep_)
    : x0(x0_), y0(y0_), x1(x1_), y1(y1_), thickness(thickness_), timestep(timestep_) {
  if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1)) {
    throw std::invalid_argument("wall endpoints must be finite");
  }
  if (x0 == x1 && y0 == y1) throw std::invalid_argument("zero-length wall at (" + std::to_string(x0) + "," + std::to_string(y0) + ")");
  if (thickness && (*thickness < kMinThickness || *thickness > kMaxThickness)) {
    throw std::invalid_argument("wall thickness " + std::to_string(*thickness) + " outside [1,84]");
  }
  if (timestep < 0) throw std::invalid_argument("negative timestep " + std::to_string(timestep));
}

WallSegment WallSegment::reversed() const {
  WallSegment w = *this;
  std::swap(w.x0, w.x1);
  std::swap(w.y0, w.y1);
  return w;
}

bool WallSegment::same_geometry(const WallSegment& o) const {
  return (a() == o.a() && b() == o.b()) || (a() == o.b() && b() == o.a());
}

std::string describe(const WallSegment& w) {
  std::ostringstream os;
  os << "(" << w.x0 << "," << w.y0 << ")-(" << w.x1 << "," << w.y1 << ")";
  if (w.thickness) os << " w=" << *w.thickness;
  os << " t=" << w.timestep;
  return os.str();
}

double point_segment_distance(Point p, Point a, Point b) {
  const Point d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0) return distance(p, a);
  const double s = std::clamp(dot(p - a, d) / len2, 0.0, 1.0);
  return distance(p, a + d * s);
}

namespace {
int orientation(Point a, Point b, Point c) {
  const double v = cross(b - a, c - a);
  return (v > 0) - (v < 0);
}
bool on_segment(Point a, Point b, Point p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}
}  // namespace

bool segments_intersect(Point p1, Point p2, Point q1, Point q2) {
  const int o1 = orientation(p1, p2, q1), o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1), o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

double segment_distance(const WallSegment& a, const WallSegment& b) {
  if (segments_intersect(a.a(), a.b(), b.a(), b.b())) return 0.0;
  return std::min({point_segment_distance(a.a(), b.a(), b.b()), point_segment_distance(a.b(), b.a(), b.b()),
                   point_segment_distance(b.a(), a.a(), a.b()), point_segment_distance(b.b(), a.a(), a.b())});
}

std::pair<double, double> endpoint_distances(const WallSegment& a, const WallSegment& b) {
  const double s0 = distance(a.a(), b.a()), s1 = distance(a.b(), b.b());
  const double c0 = distance(a.a(), b.b()), c1 = distance(a.b(), b.a());
  if (std::max(s0, s1) <= std::max(c0, c1)) return {s0, s1};
  return {c0, c1};
}

double endpoint_pair_distance(const WallSegment& a, const WallSegment& b) {
  const auto [d0, d1] = endpoint_distances(a, b);
  return std::max(d0, d1);
}

}  // namespace a2p::geo
