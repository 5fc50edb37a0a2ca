#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace ddpgfd::env {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Axis-aligned box, used for the socket walls.
struct Box {
  Vec2 lo;
  Vec2 hi;
};

using Polygon = std::vector<Vec2>;  // convex, counter-clockwise

// Depth of the overlap between a convex polygon and a box along the
// separating-axis minimum; 0 when they are disjoint or merely touching.
double overlap_depth(const Polygon& poly, const Box& box);

// Length fraction of segment a->b lying strictly inside the box.
double segment_inside_fraction(Vec2 a, Vec2 b, const Box& box, double tol = 1e-12);

bool point_strictly_inside(Vec2 p, const Box& box, double tol = 0.0);

}  // namespace ddpgfd::env
