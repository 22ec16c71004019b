#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace ensrom {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

enum class BoundaryTag { Outer, Inner };

struct BoundaryEdge {
  std::array<int, 2> vertices;
  BoundaryTag tag;
};

/// Disk of radius `outer_radius` centred at the origin with a circular hole of
/// radius `inner_radius` centred at `inner_center`.
struct AnnulusGeometry {
  double outer_radius = 1.0;
  double inner_radius = 0.1;
  Point2 inner_center{0.5, 0.0};

  /// Tolerance for boundary-circle membership.
  double geom_tol() const { return 1e-10 * outer_radius; }
};

/// Conforming triangulation with tagged boundary edges. Immutable once built;
/// the edge table (used to number P2 midpoint nodes) is derived on construction.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<BoundaryEdge> boundary_edges);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_edges_; }

  /// Unique undirected edges, each stored with ascending vertex indices.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  /// For triangle t, local edge k joins local vertices (k, (k+1)%3).
  const std::vector<std::array<int, 3>>& triangle_edges() const { return triangle_edges_; }
  /// Number of triangles sharing each edge (1 on the topological boundary).
  const std::vector<int>& edge_multiplicity() const { return edge_multiplicity_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  /// Index of the undirected edge (a, b); -1 if absent.
  int find_edge(int a, int b) const;

  double signed_area(std::size_t t) const;
  double max_diameter() const;
  double area() const;

  bool operator==(const Mesh& other) const;

 private:
  std::vector<Point2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<std::array<int, 3>> triangle_edges_;
  std::vector<int> edge_multiplicity_;
  std::vector<std::vector<std::pair<int, int>>> vertex_edges_;  // (other vertex, edge id)
};

/// Result of a structural check; `ok()` when no problems were found.
struct MeshReport {
  std::vector<std::string> problems;
  bool ok() const { return problems.empty(); }
};

/// Topological checks: positive areas, edge multiplicities, tagged edges on
/// the topological boundary, and V - E + F = 2 - (number of boundary loops).
MeshReport validate(const Mesh& mesh);

/// Topological checks plus circle membership of tagged boundary vertices and
/// the one-hole Euler characteristic.
MeshReport validate(const Mesh& mesh, const AnnulusGeometry& geometry);

/// Constrained Delaunay mesh of the offset annulus with boundary spacing at
/// most `h_target`. Throws InvalidGeometry for infeasible circles.
Mesh generate_offset_annulus(const AnnulusGeometry& geometry, double h_target);

/// Number of nodes placed on a circle of radius `radius` for spacing `h_target`.
int circle_node_count(double radius, double h_target);

Mesh load_mesh(const std::string& text);
std::string save_mesh(const Mesh& mesh);

/// P2 node identifiers on tagged boundary edges: vertices use their vertex
/// index, midpoints use num_vertices() + edge index. Sorted ascending.
std::vector<int> boundary_dofs(const Mesh& mesh);

}  // namespace ensrom
