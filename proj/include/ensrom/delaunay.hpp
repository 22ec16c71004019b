#pragma once

#include <array>
#include <vector>

#include "ensrom/mesh.hpp"

namespace ensrom {

/// Output of the constrained triangulator. `vertex_map[i]` is the index in the
/// input point list of output vertex i (unused input points are dropped).
struct Triangulation {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counterclockwise
  std::vector<int> vertex_map;
};

/// Constrained Delaunay triangulation by Bowyer-Watson insertion, recovery of
/// missing segments by edge flips, and removal of the exterior and of every
/// region containing a hole seed (flood fill bounded by the segments).
/// Points are inserted in the given order.
Triangulation constrained_delaunay(const std::vector<Point2>& points,
                                   const std::vector<std::array<int, 2>>& segments,
                                   const std::vector<Point2>& hole_seeds);

/// Orientation predicate: > 0 when (a, b, c) is counterclockwise.
double orient2d(const Point2& a, const Point2& b, const Point2& c);

/// In-circle predicate for a counterclockwise triangle (a, b, c): > 0 when d
/// lies strictly inside the circumcircle.
double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d);

}  // namespace ensrom
