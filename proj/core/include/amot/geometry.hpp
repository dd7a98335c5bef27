#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace amot {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::sqrt(dot(a, a)); }
inline Vec2 midpoint(Vec2 a, Vec2 b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

/// Geometric triangle with CCW-ordered corners.
struct Triangle2 {
  std::array<Vec2, 3> p;

  double signed_area() const { return 0.5 * cross(p[1] - p[0], p[2] - p[0]); }

  Vec2 point(const std::array<double, 3>& bary) const {
    return {bary[0] * p[0].x + bary[1] * p[1].x + bary[2] * p[2].x,
            bary[0] * p[0].y + bary[1] * p[1].y + bary[2] * p[2].y};
  }

  /// Barycentric coordinates of q (affine solve; exact for any q in the plane).
  std::array<double, 3> barycentric(Vec2 q) const {
    const double a2 = cross(p[1] - p[0], p[2] - p[0]);
    const double l1 = cross(q - p[0], p[2] - p[0]) / a2;
    const double l2 = cross(p[1] - p[0], q - p[0]) / a2;
    return {1.0 - l1 - l2, l1, l2};
  }

  /// Gradients of the three barycentric (P1 nodal) basis functions; constant per triangle.
  std::array<Vec2, 3> basis_gradients() const {
    const double a2 = 2.0 * signed_area();
    return {Vec2{(p[1].y - p[2].y) / a2, (p[2].x - p[1].x) / a2},
            Vec2{(p[2].y - p[0].y) / a2, (p[0].x - p[2].x) / a2},
            Vec2{(p[0].y - p[1].y) / a2, (p[1].x - p[0].x) / a2}};
  }

  /// Longest edge length.
  double diameter() const {
    return std::max({norm(p[1] - p[0]), norm(p[2] - p[1]), norm(p[0] - p[2])});
  }

  double min_angle() const {
    double worst = 4.0;
    for (int i = 0; i < 3; ++i) {
      const Vec2 u = p[(i + 1) % 3] - p[i];
      const Vec2 v = p[(i + 2) % 3] - p[i];
      worst = std::min(worst, std::acos(dot(u, v) / (norm(u) * norm(v))));
    }
    return worst;
  }
};

}  // namespace amot
