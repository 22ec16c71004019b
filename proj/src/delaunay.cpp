#include "ensrom/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <unordered_map>

#include "ensrom/errors.hpp"

namespace ensrom {

double orient2d(const Point2& a, const Point2& b, const Point2& c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double incircle(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

namespace {

using Tri = std::array<int, 3>;

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

struct Circumcircle {
  double cx, cy, r2;
};

Circumcircle circumcircle(const Point2& a, const Point2& b, const Point2& c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  return {a.x + ux, a.y + uy, ux * ux + uy * uy};
}

class Builder {
 public:
  explicit Builder(const std::vector<Point2>& input) : pts_(input), n_input_(static_cast<int>(input.size())) {
    double xmin = std::numeric_limits<double>::max(), ymin = xmin;
    double xmax = std::numeric_limits<double>::lowest(), ymax = xmax;
    for (const auto& p : input) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
    const double cx = 0.5 * (xmin + xmax), cy = 0.5 * (ymin + ymax);
    const double span = std::max({xmax - xmin, ymax - ymin, 1e-12});
    pts_.push_back({cx - 20.0 * span, cy - 10.0 * span});
    pts_.push_back({cx + 20.0 * span, cy - 10.0 * span});
    pts_.push_back({cx, cy + 20.0 * span});
    add_triangle({n_input_, n_input_ + 1, n_input_ + 2});
  }

  void insert(int i) {
    const Point2& p = pts_[i];
    std::vector<int> bad;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
      const auto& cc = circ_[t];
      const double dx = p.x - cc.cx, dy = p.y - cc.cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 > cc.r2 * (1.0 + 1e-8)) continue;
      const Tri& tri = tris_[t];
      if (incircle(pts_[tri[0]], pts_[tri[1]], pts_[tri[2]], p) > 0.0) bad.push_back(t);
    }

    // Shrink the cavity until it is star-shaped with respect to p.
    std::vector<std::array<int, 3>> rim;  // (a, b, owning triangle)
    for (;;) {
      if (bad.empty()) throw InvalidGeometry("triangulation: duplicate or degenerate point " + std::to_string(i));
      rim.clear();
      std::unordered_map<std::uint64_t, int> count;
      for (int t : bad)
        for (int k = 0; k < 3; ++k) ++count[edge_key(tris_[t][k], tris_[t][(k + 1) % 3])];
      for (int t : bad)
        for (int k = 0; k < 3; ++k) {
          const int a = tris_[t][k], b = tris_[t][(k + 1) % 3];
          if (count[edge_key(a, b)] == 1) rim.push_back({a, b, t});
        }
      int offender = -1;
      for (const auto& e : rim)
        if (orient2d(pts_[e[0]], pts_[e[1]], p) <= 0.0) {
          offender = e[2];
          break;
        }
      if (offender < 0) break;
      bad.erase(std::find(bad.begin(), bad.end(), offender));
    }

    std::sort(bad.begin(), bad.end(), std::greater<>());
    for (int t : bad) remove_triangle(t);
    for (const auto& e : rim) add_triangle({e[0], e[1], i});
  }

  bool has_edge(int a, int b) const {
    for (const auto& t : tris_)
      for (int k = 0; k < 3; ++k) {
        const int u = t[k], v = t[(k + 1) % 3];
        if ((u == a && v == b) || (u == b && v == a)) return true;
      }
    return false;
  }

  bool crosses(int a, int b, int c, int d) const {
    if (c == a || c == b || d == a || d == b) return false;
    const double o1 = orient2d(pts_[a], pts_[b], pts_[c]);
    const double o2 = orient2d(pts_[a], pts_[b], pts_[d]);
    const double o3 = orient2d(pts_[c], pts_[d], pts_[a]);
    const double o4 = orient2d(pts_[c], pts_[d], pts_[b]);
    return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
  }

  void recover_segment(int a, int b) {
    if (has_edge(a, b)) return;
    std::deque<std::array<int, 2>> queue;
    for (const auto& [key, owners] : edge_owners()) {
      const int c = static_cast<int>(key >> 32), d = static_cast<int>(key & 0xffffffffu);
      if (crosses(a, b, c, d)) queue.push_back({c, d});
    }
    // Deterministic processing order regardless of hash layout.
    std::sort(queue.begin(), queue.end());
    for (int iter = 0; !queue.empty(); ++iter) {
      if (iter > 1000000) throw InvalidGeometry("triangulation: segment recovery did not converge");
      const auto [c, d] = queue.front();
      queue.pop_front();
      int t1 = -1, t2 = -1, k1 = 0, k2 = 0;
      for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
        for (int k = 0; k < 3; ++k) {
          const int u = tris_[t][k], v = tris_[t][(k + 1) % 3];
          if (u == c && v == d) t1 = t, k1 = k;
          if (u == d && v == c) t2 = t, k2 = k;
        }
      if (t1 < 0 || t2 < 0) continue;
      const int x = tris_[t1][(k1 + 2) % 3];
      const int y = tris_[t2][(k2 + 2) % 3];
      const double oc = orient2d(pts_[x], pts_[y], pts_[c]);
      const double od = orient2d(pts_[x], pts_[y], pts_[d]);
      const bool convex = ((oc > 0 && od < 0) || (oc < 0 && od > 0));
      if (!convex) {
        queue.push_back({c, d});
        continue;
      }
      tris_[t1] = ccw({x, c, y});
      tris_[t2] = ccw({y, d, x});
      circ_[t1] = circle_of(tris_[t1]);
      circ_[t2] = circle_of(tris_[t2]);
      if (crosses(a, b, x, y)) queue.push_back({x, y});
    }
    if (!has_edge(a, b)) throw InvalidGeometry("triangulation: could not recover segment");
  }

  Triangulation finish(const std::vector<std::array<int, 2>>& segments, const std::vector<Point2>& hole_seeds) const {
    std::unordered_map<std::uint64_t, bool> constrained;
    for (const auto& s : segments) constrained[edge_key(s[0], s[1])] = true;
    const auto owners = edge_owners();

    std::vector<char> removed(tris_.size(), 0);
    std::deque<int> frontier;
    auto seed = [&](int t) {
      if (!removed[t]) {
        removed[t] = 1;
        frontier.push_back(t);
      }
    };
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      for (int v : tris_[t])
        if (v >= n_input_) seed(t);
    for (const auto& h : hole_seeds)
      for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
        const Tri& tri = tris_[t];
        if (orient2d(pts_[tri[0]], pts_[tri[1]], h) >= 0 && orient2d(pts_[tri[1]], pts_[tri[2]], h) >= 0 &&
            orient2d(pts_[tri[2]], pts_[tri[0]], h) >= 0) {
          seed(t);
          break;
        }
      }
    while (!frontier.empty()) {
      const int t = frontier.front();
      frontier.pop_front();
      for (int k = 0; k < 3; ++k) {
        const auto key = edge_key(tris_[t][k], tris_[t][(k + 1) % 3]);
        if (constrained.count(key)) continue;
        for (int other : owners.at(key))
          if (other != t) seed(other);
      }
    }

    Triangulation out;
    std::vector<int> new_index(n_input_, -1);
    std::vector<Tri> kept;
    for (std::size_t t = 0; t < tris_.size(); ++t)
      if (!removed[t]) {
        kept.push_back(tris_[t]);
        for (int v : tris_[t]) new_index[v] = 0;
      }
    for (int v = 0; v < n_input_; ++v)
      if (new_index[v] == 0) {
        new_index[v] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(pts_[v]);
        out.vertex_map.push_back(v);
      }
    for (auto t : kept) {
      for (int& v : t) v = new_index[v];
      out.triangles.push_back(t);
    }
    return out;
  }

 private:
  Tri ccw(Tri t) const {
    if (orient2d(pts_[t[0]], pts_[t[1]], pts_[t[2]]) < 0) std::swap(t[1], t[2]);
    return t;
  }
  Circumcircle circle_of(const Tri& t) const { return circumcircle(pts_[t[0]], pts_[t[1]], pts_[t[2]]); }

  void add_triangle(const Tri& t) {
    tris_.push_back(t);
    circ_.push_back(circle_of(t));
  }
  void remove_triangle(int t) {
    tris_[t] = tris_.back();
    circ_[t] = circ_.back();
    tris_.pop_back();
    circ_.pop_back();
  }

  std::unordered_map<std::uint64_t, std::vector<int>> edge_owners() const {
    std::unordered_map<std::uint64_t, std::vector<int>> owners;
    for (int t = 0; t < static_cast<int>(tris_.size()); ++t)
      for (int k = 0; k < 3; ++k) owners[edge_key(tris_[t][k], tris_[t][(k + 1) % 3])].push_back(t);
    return owners;
  }

  std::vector<Point2> pts_;
  int n_input_;
  std::vector<Tri> tris_;
  std::vector<Circumcircle> circ_;
};

}  // namespace

Triangulation constrained_delaunay(const std::vector<Point2>& points,
                                   const std::vector<std::array<int, 2>>& segments,
                                   const std::vector<Point2>& hole_seeds) {
  if (points.size() < 3) throw InvalidGeometry("triangulation needs at least 3 points");
  for (const auto& s : segments)
    if (s[0] < 0 || s[1] < 0 || s[0] >= static_cast<int>(points.size()) || s[1] >= static_cast<int>(points.size()) ||
        s[0] == s[1])
      throw InvalidGeometry("triangulation: bad segment index");

  Builder builder(points);
  for (int i = 0; i < static_cast<int>(points.size()); ++i) builder.insert(i);
  for (const auto& s : segments) builder.recover_segment(s[0], s[1]);
  return builder.finish(segments, hole_seeds);
}

}  // namespace ensrom
