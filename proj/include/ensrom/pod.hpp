#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ensrom/fem.hpp"
#include "ensrom/fom.hpp"

namespace ensrom {

/// Relative eigenvalue floor below which snapshot directions count as noise.
inline constexpr double kRankTol = 1e-12;

/// M-orthonormal POD modes with the full correlation spectrum.
struct PODBasis {
  Matrix modes;        ///< K x R, column i is phi_i
  Matrix mass_modes;   ///< M * modes
  Vector eigenvalues;  ///< all d correlation eigenvalues, descending, clamped at 0
  Matrix correlation_vectors;  ///< d x d eigenvectors of C (empty for a loaded basis)
  int rank = 0;        ///< eigenvalues above kRankTol * lambda_1

  int size() const { return static_cast<int>(modes.cols()); }
};

/// C = A^T M A, exactly symmetric.
Matrix correlation_matrix(const SnapshotSet& snapshots, const SparseMatrix& mass);

/// phi_i = A a_i / sqrt(lambda_i), re-orthonormalized in the M inner product,
/// signed so that the largest-magnitude coefficient is positive. Throws
/// RankDeficient when R exceeds the numerical rank.
PODBasis compute_pod_basis(const SnapshotSet& snapshots, const SparseMatrix& mass, int R);

/// Reduced coordinates Phi^T M u of the L2 projection onto the basis.
Vector project_l2(const PODBasis& basis, const Vector& u);
Vector reconstruct(const PODBasis& basis, const Vector& coords);

/// Both sides of the snapshot projection-error identities (no 1/d prefactor):
///   sum ||u - P_R u||^2        vs  sum_{i>R} lambda_i
///   sum ||grad(u - P_R u)||^2  vs  sum_{i>R} lambda_i ||grad phi_i||^2
struct ProjectionIdentity {
  double lhs_l2 = 0.0;
  double rhs_l2 = 0.0;
  double lhs_h1 = 0.0;
  double rhs_h1 = 0.0;
};

ProjectionIdentity projection_error_identity(const SnapshotSet& snapshots, const PODBasis& basis,
                                             const FomOperators& ops);

/// Galerkin operators on the POD space.
class ReducedOperators {
 public:
  ReducedOperators(const PODBasis& basis, const FomOperators& ops, std::vector<ForceField> forces);

  int size() const { return static_cast<int>(stiffness_.rows()); }
  /// S_R[i][j] = (grad phi_i, grad phi_j).
  const Matrix& stiffness() const { return stiffness_; }
  /// Matrix 2-norm of S_R.
  double stiffness_norm() const { return stiffness_norm_; }
  /// T[k][i][j] = b*(phi_k, phi_j, phi_i); every slice is skew-symmetric.
  const std::vector<Matrix>& convection_tensor() const { return tensor_; }
  /// Phi^T M.
  const Matrix& projection() const { return projection_; }

  /// B_R(g) = sum_k g_k T[k], the reduced matrix of b*(sum_k g_k phi_k, ., .).
  Matrix convection_matrix(const Vector& g) const;
  /// (f^j(., t), phi_i).
  Vector reduced_force(int j, double t) const;
  int num_forces() const { return static_cast<int>(forces_.size()); }

 private:
  Matrix stiffness_;
  double stiffness_norm_ = 0.0;
  std::vector<Matrix> tensor_;
  Matrix projection_;
  Matrix modes_;
  std::shared_ptr<const TaylorHoodSpace> space_;
  std::vector<ForceField> forces_;
  std::vector<Vector> cached_force_;  // for time-independent forces
};

std::string save_basis(const PODBasis& basis);
/// Restores modes and eigenvalues; `mass` recomputes the cached M * modes.
PODBasis load_basis(const std::string& text, const SparseMatrix& mass);

}  // namespace ensrom
