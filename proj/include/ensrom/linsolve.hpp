#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <memory>
#include <span>
#include <vector>

#include "ensrom/fem.hpp"

namespace ensrom {

/// Relative residual bound every direct solve is expected to meet.
inline constexpr double kSolverTol = 1e-10;

/// Sparse LU factors with a fill-reducing column ordering. Factor once, then
/// solve any number of right-hand sides; solving is const and thread-safe.
class SparseFactorization {
 public:
  /// Throws SingularMatrix (with the failing pivot) or DimensionMismatch.
  explicit SparseFactorization(const SparseMatrix& matrix);

  long size() const { return size_; }
  Vector solve(const Vector& rhs) const;
  /// Solves every right-hand side with the shared factors. Output order
  /// matches input order; the result does not depend on `threads`.
  std::vector<Vector> solve_many(std::span<const Vector> rhs, int threads = 1) const;

 private:
  using LU = Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>>;
  std::shared_ptr<const LU> lu_;
  long size_;
};

/// Dense LU with partial pivoting, used for the small reduced systems.
class DenseFactorization {
 public:
  explicit DenseFactorization(const Matrix& matrix);
  Vector solve(const Vector& rhs) const;

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

struct SymEig {
  Vector values;   ///< descending
  Matrix vectors;  ///< column i pairs with values[i]; orthonormal
};

/// Cyclic Jacobi eigensolver for dense symmetric matrices. Throws Asymmetric
/// when |C - C^T| exceeds 1e-12 relative to max |C|.
SymEig sym_eig(const Matrix& c);

/// Largest eigenvalue of a symmetric positive semidefinite matrix.
double operator_2norm(const Matrix& c);

/// ||A x - b|| / (||A|| ||x|| + ||b||) with the Frobenius norm of A.
double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b);

}  // namespace ensrom
