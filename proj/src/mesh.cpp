#include "ensrom/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>
#include <sstream>

#include "ensrom/delaunay.hpp"
#include "ensrom/errors.hpp"

namespace ensrom {

Mesh::Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryEdge> boundary_edges)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_edges_(std::move(boundary_edges)) {
  vertex_edges_.assign(vertices_.size(), {});
  triangle_edges_.reserve(triangles_.size());
  for (const auto& t : triangles_) {
    std::array<int, 3> te{};
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      int id = find_edge(a, b);
      if (id < 0) {
        id = static_cast<int>(edges_.size());
        edges_.push_back({std::min(a, b), std::max(a, b)});
        edge_multiplicity_.push_back(0);
        vertex_edges_[a].emplace_back(b, id);
        vertex_edges_[b].emplace_back(a, id);
      }
      ++edge_multiplicity_[id];
      te[k] = id;
    }
    triangle_edges_.push_back(te);
  }
}

int Mesh::find_edge(int a, int b) const {
  if (a < 0 || a >= static_cast<int>(vertex_edges_.size())) return -1;
  for (const auto& [other, id] : vertex_edges_[a])
    if (other == b) return id;
  return -1;
}

double Mesh::signed_area(std::size_t t) const {
  const auto& tri = triangles_[t];
  return 0.5 * orient2d(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (const auto& e : edges_) {
    const auto& a = vertices_[e[0]];
    const auto& b = vertices_[e[1]];
    h = std::max(h, std::hypot(a.x - b.x, a.y - b.y));
  }
  return h;
}

double Mesh::area() const {
  double total = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) total += signed_area(t);
  return total;
}

bool Mesh::operator==(const Mesh& other) const {
  if (vertices_.size() != other.vertices_.size()) return false;
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (vertices_[i].x != other.vertices_[i].x || vertices_[i].y != other.vertices_[i].y) return false;
  if (triangles_ != other.triangles_) return false;
  if (boundary_edges_.size() != other.boundary_edges_.size()) return false;
  for (std::size_t i = 0; i < boundary_edges_.size(); ++i)
    if (boundary_edges_[i].vertices != other.boundary_edges_[i].vertices ||
        boundary_edges_[i].tag != other.boundary_edges_[i].tag)
      return false;
  return true;
}

namespace {

int count_boundary_loops(const Mesh& mesh) {
  // Connected components of the graph formed by topological boundary edges.
  std::vector<int> parent(mesh.num_vertices());
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::set<int> on_boundary;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (mesh.edge_multiplicity()[e] != 1) continue;
    const auto& ed = mesh.edges()[e];
    on_boundary.insert(ed[0]);
    on_boundary.insert(ed[1]);
    parent[find(ed[0])] = find(ed[1]);
  }
  std::set<int> roots;
  for (int v : on_boundary) roots.insert(find(v));
  return static_cast<int>(roots.size());
}

}  // namespace

MeshReport validate(const Mesh& mesh) {
  MeshReport report;
  const int nv = static_cast<int>(mesh.num_vertices());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    for (int v : mesh.triangles()[t])
      if (v < 0 || v >= nv) {
        report.problems.push_back("triangle " + std::to_string(t) + " has out-of-range vertex");
        return report;
      }
    if (!(mesh.signed_area(t) > 0.0))
      report.problems.push_back("triangle " + std::to_string(t) + " has non-positive area");
  }
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const int m = mesh.edge_multiplicity()[e];
    if (m < 1 || m > 2) report.problems.push_back("edge " + std::to_string(e) + " shared by " + std::to_string(m));
  }
  for (const auto& b : mesh.boundary_edges()) {
    const int id = mesh.find_edge(b.vertices[0], b.vertices[1]);
    if (id < 0)
      report.problems.push_back("tagged boundary edge is not a mesh edge");
    else if (mesh.edge_multiplicity()[id] != 1)
      report.problems.push_back("tagged boundary edge is interior");
  }
  const long V = nv, E = static_cast<long>(mesh.num_edges()), F = static_cast<long>(mesh.num_triangles());
  const long expected = 2 - count_boundary_loops(mesh);
  if (V - E + F != expected)
    report.problems.push_back("Euler characteristic " + std::to_string(V - E + F) + " != " + std::to_string(expected));
  return report;
}

MeshReport validate(const Mesh& mesh, const AnnulusGeometry& g) {
  MeshReport report = validate(mesh);
  const double tol = g.geom_tol();
  std::size_t tagged = 0;
  for (const auto& b : mesh.boundary_edges()) {
    ++tagged;
    for (int v : b.vertices) {
      const auto& p = mesh.vertices()[v];
      const double r = b.tag == BoundaryTag::Outer ? std::hypot(p.x, p.y)
                                                   : std::hypot(p.x - g.inner_center.x, p.y - g.inner_center.y);
      const double target = b.tag == BoundaryTag::Outer ? g.outer_radius : g.inner_radius;
      if (std::abs(r - target) > tol)
        report.problems.push_back("boundary vertex " + std::to_string(v) + " off its circle");
    }
  }
  std::size_t topo = 0;
  for (int m : mesh.edge_multiplicity()) topo += m == 1;
  if (topo != tagged) report.problems.push_back("untagged topological boundary edges");
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertices()[i];
    if (p.x * p.x + p.y * p.y > g.outer_radius * g.outer_radius + tol ||
        std::pow(p.x - g.inner_center.x, 2) + std::pow(p.y - g.inner_center.y, 2) <
            g.inner_radius * g.inner_radius - tol)
      report.problems.push_back("vertex " + std::to_string(i) + " outside the domain");
  }
  const long chi = static_cast<long>(mesh.num_vertices()) - static_cast<long>(mesh.num_edges()) +
                   static_cast<long>(mesh.num_triangles());
  if (chi != 0) report.problems.push_back("one-hole Euler formula violated: V-E+F=" + std::to_string(chi));
  return report;
}

int circle_node_count(double radius, double h_target) {
  // 3 * 2^m nodes: halving h_target exactly doubles the count.
  int n = 3;
  while (2.0 * std::numbers::pi * radius / n > h_target) n *= 2;
  return n;
}

Mesh generate_offset_annulus(const AnnulusGeometry& g, double h) {
  const double r1 = g.outer_radius, r2 = g.inner_radius;
  const double cx = g.inner_center.x, cy = g.inner_center.y;
  if (!(h > 0.0)) throw InvalidGeometry("h_target must be positive");
  if (!(r1 > 0.0) || !(r2 > 0.0) || !(r2 < r1)) throw InvalidGeometry("need 0 < r2 < r1");
  if (!(std::hypot(cx, cy) + r2 < r1)) throw InvalidGeometry("inner circle is not strictly inside the outer circle");

  const int n_outer = circle_node_count(r1, h);
  const int n_inner = circle_node_count(r2, h);
  const double margin = 0.55 * h;

  // Interior nodes on a hexagonal lattice, kept clear of both circles.
  std::vector<Point2> free_pts;
  const double dy = h * std::sqrt(3.0) / 2.0;
  const int ny = static_cast<int>(std::ceil(r1 / dy));
  const int nx = static_cast<int>(std::ceil(r1 / h)) + 1;
  for (int j = -ny; j <= ny; ++j)
    for (int i = -nx; i <= nx; ++i) {
      const Point2 p{(i + ((j % 2 != 0) ? 0.5 : 0.0)) * h, j * dy};
      if (std::hypot(p.x, p.y) > r1 - margin) continue;
      if (std::hypot(p.x - cx, p.y - cy) < r2 + margin) continue;
      free_pts.push_back(p);
    }

  std::vector<Point2> circle_pts;
  for (int k = 0; k < n_inner; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n_inner;
    circle_pts.push_back({cx + r2 * std::cos(a), cy + r2 * std::sin(a)});
  }
  for (int k = 0; k < n_outer; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n_outer;
    circle_pts.push_back({r1 * std::cos(a), r1 * std::sin(a)});
  }

  // Input order: free nodes, hole centre (fans the hole, avoiding cocircular
  // ties among the inner nodes), inner circle, outer circle.
  const int n_free = static_cast<int>(free_pts.size());
  const int hole_center = n_free;
  const int inner0 = n_free + 1;
  const int outer0 = inner0 + n_inner;
  std::vector<std::array<int, 2>> segments;
  std::vector<BoundaryTag> segment_tags;
  for (int k = 0; k < n_inner; ++k) {
    segments.push_back({inner0 + (k + 1) % n_inner, inner0 + k});  // clockwise: domain on the left
    segment_tags.push_back(BoundaryTag::Inner);
  }
  for (int k = 0; k < n_outer; ++k) {
    segments.push_back({outer0 + k, outer0 + (k + 1) % n_outer});
    segment_tags.push_back(BoundaryTag::Outer);
  }
  const Point2 seed{cx, cy};

  auto assemble_points = [&]() {
    std::vector<Point2> pts = free_pts;
    pts.push_back(seed);
    pts.insert(pts.end(), circle_pts.begin(), circle_pts.end());
    return pts;
  };

  Triangulation tri = constrained_delaunay(assemble_points(), segments, {seed});

  // Laplacian smoothing of the free nodes, re-triangulating after each sweep.
  for (int sweep = 0; sweep < 2; ++sweep) {
    std::vector<double> sx(tri.vertices.size(), 0.0), sy(tri.vertices.size(), 0.0);
    std::vector<int> deg(tri.vertices.size(), 0);
    std::set<std::pair<int, int>> seen;
    for (const auto& t : tri.triangles)
      for (int k = 0; k < 3; ++k) {
        const int a = t[k], b = t[(k + 1) % 3];
        if (!seen.insert({std::min(a, b), std::max(a, b)}).second) continue;
        sx[a] += tri.vertices[b].x, sy[a] += tri.vertices[b].y, ++deg[a];
        sx[b] += tri.vertices[a].x, sy[b] += tri.vertices[a].y, ++deg[b];
      }
    for (std::size_t v = 0; v < tri.vertices.size(); ++v) {
      const int src = tri.vertex_map[v];
      if (src >= n_free || deg[v] == 0) continue;
      const Point2 p{sx[v] / deg[v], sy[v] / deg[v]};
      if (std::hypot(p.x, p.y) > r1 - 0.2 * h || std::hypot(p.x - cx, p.y - cy) < r2 + 0.2 * h) continue;
      free_pts[src] = p;
    }
    tri = constrained_delaunay(assemble_points(), segments, {seed});
  }

  std::vector<int> new_index(outer0 + n_outer, -1);
  for (std::size_t v = 0; v < tri.vertex_map.size(); ++v) new_index[tri.vertex_map[v]] = static_cast<int>(v);
  if (new_index[hole_center] >= 0) throw InvalidGeometry("hole was not carved");

  std::vector<BoundaryEdge> boundary;
  for (std::size_t s = 0; s < segments.size(); ++s) {
    const int a = new_index[segments[s][0]], b = new_index[segments[s][1]];
    if (a < 0 || b < 0) throw InvalidGeometry("boundary node lost during triangulation");
    boundary.push_back({{a, b}, segment_tags[s]});
  }
  return Mesh(std::move(tri.vertices), std::move(tri.triangles), std::move(boundary));
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& token, std::size_t line) {
  T value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ParseError(line, "bad number '" + token + "'");
  return value;
}

}  // namespace

std::string save_mesh(const Mesh& mesh) {
  std::ostringstream out;
  out << "mesh2d " << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.boundary_edges().size()
      << '\n';
  for (const auto& v : mesh.vertices()) out << "v " << format_double(v.x) << ' ' << format_double(v.y) << '\n';
  for (const auto& t : mesh.triangles()) out << "t " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& b : mesh.boundary_edges())
    out << "b " << b.vertices[0] << ' ' << b.vertices[1] << ' ' << (b.tag == BoundaryTag::Outer ? "outer" : "inner")
        << '\n';
  return out.str();
}

Mesh load_mesh(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto next_line = [&](std::vector<std::string>& tokens) {
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(line);
      tokens.clear();
      for (std::string tok; ls >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  };

  std::vector<std::string> tok;
  if (!next_line(tok) || tok.size() != 4 || tok[0] != "mesh2d") throw ParseError(lineno, "expected 'mesh2d <nv> <nt> <nb>'");
  const auto nv = parse_number<std::size_t>(tok[1], lineno);
  const auto nt = parse_number<std::size_t>(tok[2], lineno);
  const auto nb = parse_number<std::size_t>(tok[3], lineno);

  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary;
  auto index = [&](const std::string& s, std::size_t limit) {
    const auto i = parse_number<long>(s, lineno);
    if (i < 0 || static_cast<std::size_t>(i) >= limit) throw ParseError(lineno, "index out of range: " + s);
    return static_cast<int>(i);
  };

  while (next_line(tok)) {
    if (tok[0] == "v") {
      if (tok.size() != 3) throw ParseError(lineno, "vertex line needs 2 coordinates");
      if (!triangles.empty() || !boundary.empty()) throw ParseError(lineno, "vertex after triangles");
      vertices.push_back({parse_number<double>(tok[1], lineno), parse_number<double>(tok[2], lineno)});
    } else if (tok[0] == "t") {
      if (tok.size() != 4) throw ParseError(lineno, "triangle line needs 3 indices");
      std::array<int, 3> t{index(tok[1], nv), index(tok[2], nv), index(tok[3], nv)};
      if (vertices.size() != nv) throw ParseError(lineno, "vertex count mismatch");
      if (!(orient2d(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > 0.0))
        throw ParseError(lineno, "triangle is not counterclockwise (non-positive area)");
      triangles.push_back(t);
    } else if (tok[0] == "b") {
      if (tok.size() != 4) throw ParseError(lineno, "boundary line needs 2 indices and a tag");
      BoundaryTag tag;
      if (tok[3] == "outer")
        tag = BoundaryTag::Outer;
      else if (tok[3] == "inner")
        tag = BoundaryTag::Inner;
      else
        throw ParseError(lineno, "unknown boundary tag '" + tok[3] + "'");
      boundary.push_back({{index(tok[1], nv), index(tok[2], nv)}, tag});
    } else {
      throw ParseError(lineno, "unknown record '" + tok[0] + "'");
    }
  }
  if (vertices.size() != nv) throw ParseError(lineno, "expected " + std::to_string(nv) + " vertices");
  if (triangles.size() != nt) throw ParseError(lineno, "expected " + std::to_string(nt) + " triangles");
  if (boundary.size() != nb) throw ParseError(lineno, "expected " + std::to_string(nb) + " boundary edges");

  Mesh mesh(std::move(vertices), std::move(triangles), std::move(boundary));
  const auto report = validate(mesh);
  if (!report.ok()) throw ParseError(lineno, "invalid mesh: " + report.problems.front());
  return mesh;
}

std::vector<int> boundary_dofs(const Mesh& mesh) {
  std::set<int> nodes;
  const int nv = static_cast<int>(mesh.num_vertices());
  for (const auto& b : mesh.boundary_edges()) {
    nodes.insert(b.vertices[0]);
    nodes.insert(b.vertices[1]);
    nodes.insert(nv + mesh.find_edge(b.vertices[0], b.vertices[1]));
  }
  return {nodes.begin(), nodes.end()};
}

}  // namespace ensrom
