#pragma once

#include <algorithm>
#include <cmath>

namespace rhtamp {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Strict clearance comparisons get this much slack so that exact tangency
// counts as a collision.
inline constexpr double kGeomSlack = 1e-6;

struct Vec2 {
  double x = 0, y = 0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
  double norm() const { return std::sqrt(norm2()); }
  bool operator==(const Vec2&) const = default;
};

inline double dist(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline Vec2 dir(double angle) { return {std::cos(angle), std::sin(angle)}; }

// Wraps into (-pi, pi].
inline double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  if (a > kPi) a -= 2.0 * kPi;
  return a;
}

struct Pose2 {
  Vec2 p{};
  double theta = 0;
  bool operator==(const Pose2&) const = default;
};

struct Rect {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

  bool contains(Vec2 v, double margin = 0) const {
    return v.x >= xmin + margin && v.x <= xmax - margin &&
           v.y >= ymin + margin && v.y <= ymax - margin;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  Vec2 center() const { return {(xmin + xmax) * 0.5, (ymin + ymax) * 0.5}; }
  Rect shrunk(double d) const { return {xmin + d, ymin + d, xmax - d, ymax - d}; }
  bool valid() const { return xmax > xmin && ymax > ymin; }
  bool overlaps(const Rect& o) const {
    return xmin < o.xmax && o.xmin < xmax && ymin < o.ymax && o.ymin < ymax;
  }
  bool operator==(const Rect&) const = default;
};

inline double point_rect_dist(Vec2 p, const Rect& r) {
  double dx = std::max({r.xmin - p.x, 0.0, p.x - r.xmax});
  double dy = std::max({r.ymin - p.y, 0.0, p.y - r.ymax});
  return std::sqrt(dx * dx + dy * dy);
}

inline double point_segment_dist(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 ab = b - a;
  double len2 = ab.norm2();
  if (len2 <= 0.0) return dist(p, a);
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return dist(p, a + ab * t);
}

inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline bool segments_intersect(Vec2 a1, Vec2 a2, Vec2 b1, Vec2 b2) {
  double d1 = cross(a2 - a1, b1 - a1);
  double d2 = cross(a2 - a1, b2 - a1);
  double d3 = cross(b2 - b1, a1 - b1);
  double d4 = cross(b2 - b1, a2 - b1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  auto on_seg = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, r.x) <= q.x && q.x <= std::max(p.x, r.x) &&
           std::min(p.y, r.y) <= q.y && q.y <= std::max(p.y, r.y);
  };
  if (d1 == 0 && on_seg(a1, b1, a2)) return true;
  if (d2 == 0 && on_seg(a1, b2, a2)) return true;
  if (d3 == 0 && on_seg(b1, a1, b2)) return true;
  if (d4 == 0 && on_seg(b1, a2, b2)) return true;
  return false;
}

inline double segment_segment_dist(Vec2 a1, Vec2 a2, Vec2 b1, Vec2 b2) {
  if (segments_intersect(a1, a2, b1, b2)) return 0.0;
  return std::min({point_segment_dist(a1, b1, b2), point_segment_dist(a2, b1, b2),
                   point_segment_dist(b1, a1, a2), point_segment_dist(b2, a1, a2)});
}

}  // namespace rhtamp
