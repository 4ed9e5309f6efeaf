#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "dish/core.hpp"

namespace dish {

// Radio disk of a peer that belongs to at least one unsafe pair.
struct CoverageDisk {
  int owner = -1;  // peer index in the topology
  Vec2 center;
  double radius = 0.0;
};

// Absolute tolerance below which two circles count as identical or tangent.
inline constexpr double kDegeneracyTol = 1e-9;

// Witness points sit this fraction of R away from an intersection point so
// they land strictly inside an adjacent face.
inline constexpr double kWitnessNudgeScale = 1e-6;

// Tangent or coincident circles leave faces that a point sample cannot
// separate reliably, so such inputs are rejected rather than perturbed.
inline void require_nondegenerate(const std::vector<CoverageDisk>& disks) {
  for (std::size_t i = 0; i < disks.size(); ++i) {
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      const double d = distance(disks[i].center, disks[j].center);
      if (d <= kDegeneracyTol)
        throw DegenerateArrangement("coincident radio disks");
      if (std::abs(d - (disks[i].radius + disks[j].radius)) <= kDegeneracyTol)
        throw DegenerateArrangement("tangent radio disks");
      if (std::abs(d - std::abs(disks[i].radius - disks[j].radius)) <=
          kDegeneracyTol)
        throw DegenerateArrangement("internally tangent radio disks");
    }
  }
}

// Points where the two circle boundaries cross; empty when they do not.
// Callers must have screened out tangent/coincident pairs first.
inline std::vector<Vec2> circle_intersections(const CoverageDisk& a,
                                              const CoverageDisk& b) {
  const double d = distance(a.center, b.center);
  // Distance from a.center to the chord, along the center line.
  const double along = (d * d + a.radius * a.radius - b.radius * b.radius) /
                       (2.0 * d);
  const double h2 = a.radius * a.radius - along * along;
  if (h2 <= 0.0) return {};
  const double h = std::sqrt(h2);
  const Vec2 ex = (b.center - a.center).unit();
  const Vec2 ey{-ex.y, ex.x};
  const Vec2 mid = a.center + ex * along;
  return {mid + ey * h, mid - ey * h};
}

// All pairwise boundary crossings, in disk-pair order.
inline std::vector<Vec2> all_intersection_points(
    const std::vector<CoverageDisk>& disks) {
  std::vector<Vec2> points;
  for (std::size_t i = 0; i < disks.size(); ++i)
    for (std::size_t j = i + 1; j < disks.size(); ++j)
      for (const Vec2& p : circle_intersections(disks[i], disks[j]))
        points.push_back(p);
  return points;
}

// The four points a nudge away from one crossing, one per local face: the
// gradients of the two distance functions split the neighbourhood into
// lens / each crescent / outside, and their angle bisectors point into them.
inline std::array<Vec2, 4> nudged_witnesses(const Vec2& p,
                                            const CoverageDisk& a,
                                            const CoverageDisk& b,
                                            double eps) {
  const Vec2 ua = (p - a.center).unit();
  const Vec2 ub = (p - b.center).unit();
  const Vec2 w1 = (ua + ub).unit();  // +: outside both, -: inside both
  const Vec2 w2 = (ua - ub).unit();  // +: inside b only, -: inside a only
  return {p + w1 * eps, p - w1 * eps, p + w2 * eps, p - w2 * eps};
}

// Geometric candidate set: every crossing replicated into its four adjacent
// faces, plus each disk center (which catches faces with no crossing on
// their boundary, e.g. an isolated disk). Coverage is evaluated by callers.
inline std::vector<Vec2> candidate_points(
    const std::vector<CoverageDisk>& disks) {
  require_nondegenerate(disks);
  std::vector<Vec2> points;
  for (std::size_t i = 0; i < disks.size(); ++i) {
    for (std::size_t j = i + 1; j < disks.size(); ++j) {
      const double eps = disks[i].radius * kWitnessNudgeScale;
      for (const Vec2& p : circle_intersections(disks[i], disks[j]))
        for (const Vec2& w : nudged_witnesses(p, disks[i], disks[j], eps))
          points.push_back(w);
    }
  }
  for (const auto& d : disks) points.push_back(d.center);
  return points;
}

}  // namespace dish
