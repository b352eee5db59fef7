#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace vinerow::geom {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const noexcept { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const noexcept { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const noexcept { return {x * s, y * s}; }
  double dot(Vec2 o) const noexcept { return x * o.x + y * o.y; }
  double cross(Vec2 o) const noexcept { return x * o.y - y * o.x; }
  double norm() const noexcept { return std::hypot(x, y); }

  friend bool operator==(const Vec2&, const Vec2&) = default;
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Vec2 position() const noexcept { return {x, y}; }
  friend bool operator==(const Pose2D&, const Pose2D&) = default;
};

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + ab * t)).norm();
}

inline Vec2 closest_point_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.dot(ab);
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return a + ab * t;
}

inline Vec2 closest_point_on_polyline(Vec2 p, std::span<const Vec2> pts) {
  if (pts.size() == 1) return pts.front();
  Vec2 best = pts.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const Vec2 c = closest_point_on_segment(p, pts[k], pts[k + 1]);
    const double d = (p - c).norm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline double polyline_distance(Vec2 p, std::span<const Vec2> pts) {
  return (p - closest_point_on_polyline(p, pts)).norm();
}

/// Constant-curvature reference path starting at the origin heading +x.
/// Points are addressed by arc length `s` along the reference and signed
/// lateral offset (positive to the left). curvature == 0 is a straight line.
struct ArcPath {
  double curvature = 0.0;

  Vec2 point(double s, double offset = 0.0) const noexcept {
    if (curvature == 0.0) return {s, offset};
    const double a = curvature * s;
    const double r = 1.0 / curvature - offset;
    return {r * std::sin(a), 1.0 / curvature - r * std::cos(a)};
  }

  double heading(double s) const noexcept { return normalize_angle(curvature * s); }

  /// Inverse of point(): (arc length, lateral offset) of the nearest reference point.
  std::pair<double, double> project(Vec2 p) const noexcept {
    if (curvature == 0.0) return {p.x, p.y};
    const Vec2 v{curvature * p.x, curvature * (p.y - 1.0 / curvature)};
    const double a = std::atan2(v.x, -v.y);
    return {a / curvature, (1.0 - v.norm()) / curvature};
  }
};

}  // namespace vinerow::geom
