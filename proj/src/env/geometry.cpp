#include "ddpgfd/env/geometry.hpp"

#include <algorithm>
#include <limits>

namespace ddpgfd::env {

namespace {

void project(const Polygon& poly, Vec2 axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const auto& p : poly) {
    const double d = dot(p, axis);
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
}

}  // namespace

double overlap_depth(const Polygon& poly, const Box& box) {
  const Polygon box_poly{box.lo, {box.hi.x, box.lo.y}, box.hi, {box.lo.x, box.hi.y}};
  std::vector<Vec2> axes{{1.0, 0.0}, {0.0, 1.0}};
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 e = poly[(i + 1) % poly.size()] - poly[i];
    const double len = norm(e);
    if (len > 0.0) axes.push_back({-e.y / len, e.x / len});
  }
  double depth = std::numeric_limits<double>::infinity();
  for (const auto& axis : axes) {
    double a_lo, a_hi, b_lo, b_hi;
    project(poly, axis, a_lo, a_hi);
    project(box_poly, axis, b_lo, b_hi);
    const double o = std::min(a_hi, b_hi) - std::max(a_lo, b_lo);
    if (o <= 0.0) return 0.0;
    depth = std::min(depth, o);
  }
  return depth;
}

double segment_inside_fraction(Vec2 a, Vec2 b, const Box& box, double tol) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Vec2 d = b - a;
  auto clip = [&](double p0, double dp, double lo, double hi) {
    lo += tol;
    hi -= tol;
    if (dp == 0.0) return p0 > lo && p0 < hi;
    double ta = (lo - p0) / dp;
    double tb = (hi - p0) / dp;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    return t0 < t1;
  };
  if (!clip(a.x, d.x, box.lo.x, box.hi.x)) return 0.0;
  if (!clip(a.y, d.y, box.lo.y, box.hi.y)) return 0.0;
  return std::max(0.0, t1 - t0);
}

bool point_strictly_inside(Vec2 p, const Box& box, double tol) {
  return p.x > box.lo.x + tol && p.x < box.hi.x - tol && p.y > box.lo.y + tol && p.y < box.hi.y - tol;
}

}  // namespace ddpgfd::env
