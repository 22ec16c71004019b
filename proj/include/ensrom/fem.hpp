#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <functional>
#include <vector>

#include "ensrom/mesh.hpp"
#include "ensrom/quadrature.hpp"

namespace ensrom {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Vector-valued body force f(x, y, t).
struct ForceField {
  std::function<std::array<double, 2>(double, double, double)> eval;
  bool time_dependent = false;

  std::array<double, 2> operator()(double x, double y, double t) const { return eval(x, y, t); }
};

ForceField zero_force();
ForceField constant_force(double fx, double fy);
/// Counterclockwise rotational forcing (-4y(1-x^2-y^2), 4x(1-x^2-y^2)).
ForceField rotational_force();

/// P2 velocity / P1 pressure pair on a triangle mesh.
///
/// Scalar P2 nodes are numbered vertices first (0..V-1) then edge midpoints
/// (V..V+E-1). Velocity DOFs are blocked by component: component c of node n
/// is `c * num_nodes() + n`. Pressure DOFs are the mesh vertices.
class TaylorHoodSpace {
 public:
  explicit TaylorHoodSpace(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  int num_nodes() const { return num_nodes_; }
  int n_vel() const { return 2 * num_nodes_; }
  int n_pr() const { return static_cast<int>(mesh_.num_vertices()); }

  int velocity_dof(int component, int node) const { return component * num_nodes_ + node; }

  /// Local P2 node order: v0, v1, v2, m01, m12, m20.
  std::array<int, 6> element_nodes(std::size_t t) const;
  Point2 node_position(int node) const;

  /// Sorted velocity DOFs carrying the homogeneous Dirichlet condition.
  const std::vector<int>& constrained_dofs() const { return constrained_; }
  bool is_constrained(int dof) const { return constrained_mask_[dof] != 0; }

  const TriangleRule& rule() const { return degree5_rule(); }

 private:
  Mesh mesh_;
  int num_nodes_;
  std::vector<int> constrained_;
  std::vector<char> constrained_mask_;
};

/// Values and physical gradients of the six P2 shape functions at a point
/// given in barycentric coordinates.
struct P2Shape {
  std::array<double, 6> value;
  std::array<std::array<double, 2>, 6> grad;
};

/// Affine data of one triangle: area and the constant gradients of the
/// barycentric coordinates.
struct ElementGeometry {
  double area;
  std::array<std::array<double, 2>, 3> grad_bary;
  std::array<Point2, 3> corners;

  Point2 map(const std::array<double, 3>& bary) const;
};

ElementGeometry element_geometry(const Mesh& mesh, std::size_t t);
P2Shape p2_shape(const ElementGeometry& geom, const std::array<double, 3>& bary);

/// Velocity mass matrix (u, v).
SparseMatrix assemble_mass(const TaylorHoodSpace& space);
/// Scalar P2 mass matrix of one velocity component.
SparseMatrix assemble_scalar_mass(const TaylorHoodSpace& space);
/// Vector Laplacian (grad u, grad v), not scaled by viscosity.
SparseMatrix assemble_stiffness(const TaylorHoodSpace& space);
/// B[k][i] = (div phi_i, psi_k): n_pr rows, n_vel columns.
SparseMatrix assemble_divergence(const TaylorHoodSpace& space);
/// P1 pressure mass matrix.
SparseMatrix assemble_pressure_mass(const TaylorHoodSpace& space);
/// Integrals of the pressure basis functions (the zero-mean constraint row).
Vector pressure_mean_vector(const TaylorHoodSpace& space);
/// N(w)[i][j] = b*(w, phi_j, phi_i) with the skew-symmetric trilinear form;
/// N(w) + N(w)^T == 0 exactly.
SparseMatrix assemble_convection(const TaylorHoodSpace& space, const Vector& w);
/// Load vector (f(., t), phi_i).
Vector assemble_load(const TaylorHoodSpace& space, const ForceField& f, double t);

/// Nodal interpolant of a vector field (exact for quadratic fields).
Vector interpolate_velocity(const TaylorHoodSpace& space,
                            const std::function<std::array<double, 2>(double, double)>& u);
/// Vertex interpolant of a scalar field (exact for linear fields).
Vector interpolate_pressure(const TaylorHoodSpace& space, const std::function<double(double, double)>& p);

/// Symmetric elimination of constrained DOFs: their rows and columns are
/// zeroed, the diagonal set to 1 and the right-hand side entries set to 0.
SparseMatrix apply_dirichlet(const SparseMatrix& matrix, Vector* rhs, const std::vector<int>& dofs);
void constrain_rhs(Vector& rhs, const std::vector<int>& dofs);

}  // namespace ensrom
