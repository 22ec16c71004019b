#include "ensrom/fem.hpp"

#include <algorithm>

#include "ensrom/delaunay.hpp"

namespace ensrom {

ForceField zero_force() {
  return {[](double, double, double) { return std::array<double, 2>{0.0, 0.0}; }, false};
}

ForceField constant_force(double fx, double fy) {
  return {[fx, fy](double, double, double) { return std::array<double, 2>{fx, fy}; }, false};
}

ForceField rotational_force() {
  return {[](double x, double y, double) {
            const double s = 1.0 - x * x - y * y;
            return std::array<double, 2>{-4.0 * y * s, 4.0 * x * s};
          },
          false};
}

TaylorHoodSpace::TaylorHoodSpace(Mesh mesh)
    : mesh_(std::move(mesh)), num_nodes_(static_cast<int>(mesh_.num_vertices() + mesh_.num_edges())) {
  constrained_mask_.assign(n_vel(), 0);
  for (int node : boundary_dofs(mesh_))
    for (int c = 0; c < 2; ++c) constrained_mask_[velocity_dof(c, node)] = 1;
  for (int d = 0; d < n_vel(); ++d)
    if (constrained_mask_[d]) constrained_.push_back(d);
}

std::array<int, 6> TaylorHoodSpace::element_nodes(std::size_t t) const {
  const auto& tri = mesh_.triangles()[t];
  const auto& te = mesh_.triangle_edges()[t];
  const int nv = static_cast<int>(mesh_.num_vertices());
  return {tri[0], tri[1], tri[2], nv + te[0], nv + te[1], nv + te[2]};
}

Point2 TaylorHoodSpace::node_position(int node) const {
  const int nv = static_cast<int>(mesh_.num_vertices());
  if (node < nv) return mesh_.vertices()[node];
  const auto& e = mesh_.edges()[node - nv];
  const auto& a = mesh_.vertices()[e[0]];
  const auto& b = mesh_.vertices()[e[1]];
  return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
}

Point2 ElementGeometry::map(const std::array<double, 3>& bary) const {
  return {bary[0] * corners[0].x + bary[1] * corners[1].x + bary[2] * corners[2].x,
          bary[0] * corners[0].y + bary[1] * corners[1].y + bary[2] * corners[2].y};
}

ElementGeometry element_geometry(const Mesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles()[t];
  ElementGeometry g;
  for (int k = 0; k < 3; ++k) g.corners[k] = mesh.vertices()[tri[k]];
  const auto& p0 = g.corners[0];
  const auto& p1 = g.corners[1];
  const auto& p2 = g.corners[2];
  const double twice = orient2d(p0, p1, p2);
  g.area = 0.5 * twice;
  g.grad_bary[0] = {(p1.y - p2.y) / twice, (p2.x - p1.x) / twice};
  g.grad_bary[1] = {(p2.y - p0.y) / twice, (p0.x - p2.x) / twice};
  g.grad_bary[2] = {(p0.y - p1.y) / twice, (p1.x - p0.x) / twice};
  return g;
}

P2Shape p2_shape(const ElementGeometry& geom, const std::array<double, 3>& l) {
  P2Shape s;
  const auto& g = geom.grad_bary;
  for (int i = 0; i < 3; ++i) {
    s.value[i] = l[i] * (2.0 * l[i] - 1.0);
    const double f = 4.0 * l[i] - 1.0;
    s.grad[i] = {f * g[i][0], f * g[i][1]};
  }
  for (int k = 0; k < 3; ++k) {
    const int i = k, j = (k + 1) % 3;
    s.value[3 + k] = 4.0 * l[i] * l[j];
    s.grad[3 + k] = {4.0 * (l[j] * g[i][0] + l[i] * g[j][0]), 4.0 * (l[j] * g[i][1] + l[i] * g[j][1])};
  }
  return s;
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;
using Local = std::array<std::array<double, 6>, 6>;

// Adds a scalar 6x6 element block to both velocity components.
void scatter_vector_block(const TaylorHoodSpace& space, const std::array<int, 6>& nodes, const Local& local,
                          Triplets& out) {
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        out.emplace_back(space.velocity_dof(c, nodes[a]), space.velocity_dof(c, nodes[b]), local[a][b]);
}

template <typename Kernel>
SparseMatrix assemble_velocity_operator(const TaylorHoodSpace& space, bool both_components, Kernel&& kernel) {
  const auto& mesh = space.mesh();
  const auto& rule = space.rule();
  Triplets trip;
  trip.reserve(mesh.num_triangles() * 36 * (both_components ? 2 : 1));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto nodes = space.element_nodes(t);
    Local local{};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto shape = p2_shape(geom, rule.points[q]);
      kernel(t, nodes, geom, shape, geom.area * rule.weights[q], local);
    }
    if (both_components) {
      scatter_vector_block(space, nodes, local, trip);
    } else {
      for (int a = 0; a < 6; ++a)
        for (int b = 0; b < 6; ++b) trip.emplace_back(nodes[a], nodes[b], local[a][b]);
    }
  }
  const int n = both_components ? space.n_vel() : space.num_nodes();
  SparseMatrix m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

void add_mass(std::size_t, const std::array<int, 6>&, const ElementGeometry&, const P2Shape& s, double w,
              Local& local) {
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) local[a][b] += w * (s.value[a] * s.value[b]);
}

}  // namespace

SparseMatrix assemble_mass(const TaylorHoodSpace& space) { return assemble_velocity_operator(space, true, add_mass); }

SparseMatrix assemble_scalar_mass(const TaylorHoodSpace& space) {
  return assemble_velocity_operator(space, false, add_mass);
}

SparseMatrix assemble_stiffness(const TaylorHoodSpace& space) {
  return assemble_velocity_operator(
      space, true,
      [](std::size_t, const std::array<int, 6>&, const ElementGeometry&, const P2Shape& s, double w, Local& local) {
        for (int a = 0; a < 6; ++a)
          for (int b = 0; b < 6; ++b)
            local[a][b] += w * (s.grad[a][0] * s.grad[b][0] + s.grad[a][1] * s.grad[b][1]);
      });
}

SparseMatrix assemble_convection(const TaylorHoodSpace& space, const Vector& w) {
  const int nn = space.num_nodes();
  const auto& mesh = space.mesh();
  const auto& rule = space.rule();
  Triplets trip;
  trip.reserve(mesh.num_triangles() * 72);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto nodes = space.element_nodes(t);
    // adv[a][b] = (w . grad phi_b, phi_a) on this element.
    Local adv{};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto s = p2_shape(geom, rule.points[q]);
      double wx = 0.0, wy = 0.0;
      for (int a = 0; a < 6; ++a) {
        wx += w[nodes[a]] * s.value[a];
        wy += w[nn + nodes[a]] * s.value[a];
      }
      const double weight = geom.area * rule.weights[q];
      for (int b = 0; b < 6; ++b) {
        const double conv = wx * s.grad[b][0] + wy * s.grad[b][1];
        for (int a = 0; a < 6; ++a) adv[a][b] += weight * conv * s.value[a];
      }
    }
    Local skew{};
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b) skew[a][b] = 0.5 * (adv[a][b] - adv[b][a]);
    scatter_vector_block(space, nodes, skew, trip);
  }
  SparseMatrix m(space.n_vel(), space.n_vel());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix assemble_divergence(const TaylorHoodSpace& space) {
  const auto& mesh = space.mesh();
  const auto& rule = space.rule();
  Triplets trip;
  trip.reserve(mesh.num_triangles() * 36);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto nodes = space.element_nodes(t);
    const auto& tri = mesh.triangles()[t];
    std::array<std::array<std::array<double, 6>, 2>, 3> local{};
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto s = p2_shape(geom, rule.points[q]);
      const double weight = geom.area * rule.weights[q];
      for (int k = 0; k < 3; ++k) {
        const double psi = rule.points[q][k];
        for (int c = 0; c < 2; ++c)
          for (int a = 0; a < 6; ++a) local[k][c][a] += weight * psi * s.grad[a][c];
      }
    }
    for (int k = 0; k < 3; ++k)
      for (int c = 0; c < 2; ++c)
        for (int a = 0; a < 6; ++a) trip.emplace_back(tri[k], space.velocity_dof(c, nodes[a]), local[k][c][a]);
  }
  SparseMatrix m(space.n_pr(), space.n_vel());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

SparseMatrix assemble_pressure_mass(const TaylorHoodSpace& space) {
  const auto& mesh = space.mesh();
  Triplets trip;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.signed_area(t);
    const auto& tri = mesh.triangles()[t];
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) trip.emplace_back(tri[a], tri[b], area * (a == b ? 2.0 : 1.0) / 12.0);
  }
  SparseMatrix m(space.n_pr(), space.n_pr());
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

Vector pressure_mean_vector(const TaylorHoodSpace& space) {
  const auto& mesh = space.mesh();
  Vector m = Vector::Zero(space.n_pr());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.signed_area(t);
    for (int v : mesh.triangles()[t]) m[v] += area / 3.0;
  }
  return m;
}

Vector assemble_load(const TaylorHoodSpace& space, const ForceField& f, double time) {
  const auto& mesh = space.mesh();
  const auto& rule = space.rule();
  Vector load = Vector::Zero(space.n_vel());
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto geom = element_geometry(mesh, t);
    const auto nodes = space.element_nodes(t);
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const auto s = p2_shape(geom, rule.points[q]);
      const auto x = geom.map(rule.points[q]);
      const auto fv = f(x.x, x.y, time);
      const double weight = geom.area * rule.weights[q];
      for (int a = 0; a < 6; ++a)
        for (int c = 0; c < 2; ++c) load[space.velocity_dof(c, nodes[a])] += weight * fv[c] * s.value[a];
    }
  }
  return load;
}

Vector interpolate_velocity(const TaylorHoodSpace& space,
                            const std::function<std::array<double, 2>(double, double)>& u) {
  Vector out(space.n_vel());
  for (int n = 0; n < space.num_nodes(); ++n) {
    const auto p = space.node_position(n);
    const auto v = u(p.x, p.y);
    out[space.velocity_dof(0, n)] = v[0];
    out[space.velocity_dof(1, n)] = v[1];
  }
  return out;
}

Vector interpolate_pressure(const TaylorHoodSpace& space, const std::function<double(double, double)>& p) {
  Vector out(space.n_pr());
  for (int v = 0; v < space.n_pr(); ++v) {
    const auto& x = space.mesh().vertices()[v];
    out[v] = p(x.x, x.y);
  }
  return out;
}

SparseMatrix apply_dirichlet(const SparseMatrix& matrix, Vector* rhs, const std::vector<int>& dofs) {
  std::vector<char> mask(matrix.rows(), 0);
  for (int d : dofs) mask[d] = 1;
  Triplets trip;
  trip.reserve(matrix.nonZeros() + dofs.size());
  for (int col = 0; col < matrix.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(matrix, col); it; ++it)
      if (!mask[it.row()] && !mask[it.col()]) trip.emplace_back(it.row(), it.col(), it.value());
  for (int d : dofs) trip.emplace_back(d, d, 1.0);
  SparseMatrix out(matrix.rows(), matrix.cols());
  out.setFromTriplets(trip.begin(), trip.end());
  if (rhs) constrain_rhs(*rhs, dofs);
  return out;
}

void constrain_rhs(Vector& rhs, const std::vector<int>& dofs) {
  for (int d : dofs) rhs[d] = 0.0;
}

}  // namespace ensrom
