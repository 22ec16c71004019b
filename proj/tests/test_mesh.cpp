#include <doctest.h>

#include <cmath>
#include <set>

#include "ensrom/delaunay.hpp"
#include "ensrom/errors.hpp"
#include "ensrom/mesh.hpp"
#include "support.hpp"

using namespace ensrom;

namespace {

int count_tag(const Mesh& m, BoundaryTag tag) {
  int n = 0;
  for (const auto& e : m.boundary_edges()) n += e.tag == tag;
  return n;
}

double dist(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

TEST_CASE("offset annulus: vertices lie in the closed domain") {
  const AnnulusGeometry g;
  const Mesh m = generate_offset_annulus(g, 0.2);
  const double tol = g.geom_tol();
  for (const auto& p : m.vertices()) {
    CHECK(p.x * p.x + p.y * p.y <= 1.0 + tol);
    CHECK((p.x - 0.5) * (p.x - 0.5) + p.y * p.y >= 0.01 - tol);
  }
  CHECK(count_tag(m, BoundaryTag::Outer) > 0);
  CHECK(count_tag(m, BoundaryTag::Inner) > 0);
  const MeshReport r = validate(m, g);
  for (const auto& p : r.problems) MESSAGE(p);
  CHECK(r.ok());
}

TEST_CASE("offset annulus: Euler characteristic of a one-hole domain") {
  const Mesh m = generate_offset_annulus(AnnulusGeometry{}, 0.15);
  const long v = static_cast<long>(m.num_vertices());
  const long e = static_cast<long>(m.num_edges());
  const long f = static_cast<long>(m.num_triangles());
  CHECK(v - e + f == 0);
}

TEST_CASE("offset annulus: spacing and element size") {
  for (double h : {0.3, 0.15, 0.1}) {
    const Mesh m = generate_offset_annulus(AnnulusGeometry{}, h);
    for (const auto& e : m.boundary_edges())
      CHECK(dist(m.vertices()[e.vertices[0]], m.vertices()[e.vertices[1]]) <= h + 1e-12);
    CHECK(m.max_diameter() <= 2.0 * h);
    for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(m.signed_area(t) > 0.0);
  }
}

TEST_CASE("concentric thin annulus is valid") {
  AnnulusGeometry g;
  g.inner_radius = 0.9;
  g.inner_center = {0.0, 0.0};
  const Mesh m = generate_offset_annulus(g, 0.05);
  const MeshReport r = validate(m, g);
  for (const auto& p : r.problems) MESSAGE(p);
  CHECK(r.ok());
  CHECK(static_cast<long>(m.num_vertices()) - static_cast<long>(m.num_edges()) +
            static_cast<long>(m.num_triangles()) ==
        0);
}

TEST_CASE("infeasible geometry is rejected") {
  AnnulusGeometry g;
  g.inner_radius = 0.5;
  g.inner_center = {0.8, 0.0};
  CHECK_THROWS_AS(generate_offset_annulus(g, 0.1), InvalidGeometry);
  CHECK_THROWS_AS(generate_offset_annulus(AnnulusGeometry{}, 0.0), InvalidGeometry);
  CHECK_THROWS_AS(generate_offset_annulus(AnnulusGeometry{}, -1.0), InvalidGeometry);
  AnnulusGeometry big;
  big.inner_radius = 1.5;
  big.inner_center = {0.0, 0.0};
  CHECK_THROWS_AS(generate_offset_annulus(big, 0.1), InvalidGeometry);
}

TEST_CASE("halving h at least doubles the nodes on each circle") {
  const Mesh a = generate_offset_annulus(AnnulusGeometry{}, 0.2);
  const Mesh b = generate_offset_annulus(AnnulusGeometry{}, 0.1);
  CHECK(count_tag(b, BoundaryTag::Outer) >= 2 * count_tag(a, BoundaryTag::Outer));
  CHECK(count_tag(b, BoundaryTag::Inner) >= 2 * count_tag(a, BoundaryTag::Inner));
  CHECK(circle_node_count(1.0, 0.05) >= 2 * circle_node_count(1.0, 0.1));
}

TEST_CASE("generation is deterministic") {
  CHECK(generate_offset_annulus(AnnulusGeometry{}, 0.12) == generate_offset_annulus(AnnulusGeometry{}, 0.12));
}

TEST_CASE("load: single triangle") {
  const Mesh m = load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 0\nv 0 1\nt 0 1 2\n");
  CHECK(m.num_vertices() == 3);
  CHECK(m.num_triangles() == 1);
  CHECK(m.num_edges() == 3);
  CHECK(m.area() == doctest::Approx(0.5));
}

TEST_CASE("load: clockwise triangle is a parse error with its line") {
  try {
    load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 0\nv 0 1\nt 0 2 1\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
  }
}

TEST_CASE("load: malformed input") {
  CHECK_THROWS_AS(load_mesh(""), ParseError);
  CHECK_THROWS_AS(load_mesh("mesh3d 3 1 0\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 0\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 x\nv 0 1\nt 0 1 2\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 0\nv 0 1\nt 0 1 7\n"), ParseError);
  CHECK_THROWS_AS(load_mesh("mesh2d 3 1 1\nv 0 0\nv 1 0\nv 0 1\nt 0 1 2\nb 0 1 side\n"), ParseError);
  try {
    load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 0\nq 0 1\nt 0 1 2\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}

TEST_CASE("save/load round trip is exact") {
  const Mesh& m = testing::coarse_mesh();
  const Mesh back = load_mesh(save_mesh(m));
  CHECK(back == m);
  CHECK(save_mesh(back) == save_mesh(m));
}

TEST_CASE("boundary dofs") {
  SUBCASE("no tagged edges") {
    const Mesh m = load_mesh("mesh2d 3 1 0\nv 0 0\nv 1 0\nv 0 1\nt 0 1 2\n");
    CHECK(boundary_dofs(m).empty());
  }
  SUBCASE("one tagged edge: endpoints and midpoint") {
    const Mesh m = load_mesh("mesh2d 3 1 1\nv 0 0\nv 1 0\nv 0 1\nt 0 1 2\nb 0 1 outer\n");
    const auto d = boundary_dofs(m);
    REQUIRE(d.size() == 3);
    CHECK(d[0] == 0);
    CHECK(d[1] == 1);
    CHECK(d[2] == 3 + m.find_edge(0, 1));
  }
  SUBCASE("closed boundary loops: one vertex and one midpoint per edge") {
    const Mesh& m = testing::coarse_mesh();
    const auto d = boundary_dofs(m);
    CHECK(d.size() == 2 * m.boundary_edges().size());
    CHECK(std::set<int>(d.begin(), d.end()).size() == d.size());
  }
}

TEST_CASE("validate flags broken meshes") {
  // Two triangles on the same three vertices: every edge is shared twice but
  // the orientation is inconsistent (second triangle is clockwise).
  const Mesh m({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}, {0, 2, 1}}, {});
  CHECK_FALSE(validate(m).ok());
  AnnulusGeometry g;
  const Mesh off({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}}, {{{0, 1}, BoundaryTag::Outer}});
  CHECK_FALSE(validate(off, g).ok());
}

TEST_CASE("delaunay predicates") {
  CHECK(orient2d({0, 0}, {1, 0}, {0, 1}) > 0);
  CHECK(orient2d({0, 0}, {0, 1}, {1, 0}) < 0);
  CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {0.4, 0.4}) > 0);
  CHECK(incircle({0, 0}, {1, 0}, {0, 1}, {2, 2}) < 0);
}

TEST_CASE("constrained triangulation of a square keeps the constraint and carves the hole") {
  // Square with a diagonal constraint that plain Delaunay would not choose.
  std::vector<Point2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.05}};
  std::vector<std::array<int, 2>> seg{{0, 1}, {1, 2}, {2, 3}, {3, 0}, {0, 2}};
  const Triangulation tri = constrained_delaunay(pts, seg, {});
  double area = 0.0;
  bool has_diagonal = false;
  for (const auto& t : tri.triangles) {
    area += 0.5 * orient2d(tri.vertices[t[0]], tri.vertices[t[1]], tri.vertices[t[2]]);
    for (int k = 0; k < 3; ++k) {
      const int a = tri.vertex_map[t[k]], b = tri.vertex_map[t[(k + 1) % 3]];
      if ((a == 0 && b == 2) || (a == 2 && b == 0)) has_diagonal = true;
    }
  }
  CHECK(area == doctest::Approx(1.0));
  CHECK(has_diagonal);
}
