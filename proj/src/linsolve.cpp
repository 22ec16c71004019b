#include "ensrom/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ensrom/errors.hpp"
#include "ensrom/parallel.hpp"

namespace ensrom {

SparseFactorization::SparseFactorization(const SparseMatrix& matrix) : size_(matrix.rows()) {
  if (matrix.rows() != matrix.cols()) throw DimensionMismatch("factorize: matrix is not square");
  auto lu = std::make_shared<LU>();
  SparseMatrix compressed = matrix;
  compressed.makeCompressed();
  lu->analyzePattern(compressed);
  lu->factorize(compressed);
  if (lu->info() != Eigen::Success) {
    // Eigen reports the 1-based elimination step at which no pivot was found.
    const std::string msg = lu->lastErrorMessage();
    long pivot = -1;
    const auto pos = msg.find_last_of(' ');
    if (pos != std::string::npos) {
      try {
        pivot = std::stol(msg.substr(pos + 1)) - 1;
      } catch (...) {
        pivot = -1;
      }
    }
    throw SingularMatrix(pivot, msg);
  }
  lu_ = std::move(lu);
}

Vector SparseFactorization::solve(const Vector& rhs) const {
  if (rhs.size() != size_) throw DimensionMismatch("solve: rhs length " + std::to_string(rhs.size()));
  Vector x = lu_->solve(rhs);
  return x;
}

std::vector<Vector> SparseFactorization::solve_many(std::span<const Vector> rhs, int threads) const {
  for (const auto& b : rhs)
    if (b.size() != size_) throw DimensionMismatch("solve_many: rhs length " + std::to_string(b.size()));
  std::vector<Vector> out(rhs.size());
  parallel_for(static_cast<int>(rhs.size()), threads, [&](int i) { out[i] = solve(rhs[i]); });
  return out;
}

DenseFactorization::DenseFactorization(const Matrix& matrix) : lu_(matrix) {
  if (matrix.rows() != matrix.cols()) throw DimensionMismatch("dense factorize: matrix is not square");
  const auto& u = lu_.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i)
    if (u(i, i) == 0.0) throw SingularMatrix(static_cast<long>(i), "zero pivot in dense LU");
}

Vector DenseFactorization::solve(const Vector& rhs) const {
  if (rhs.size() != lu_.rows()) throw DimensionMismatch("dense solve: rhs length " + std::to_string(rhs.size()));
  return lu_.solve(rhs);
}

SymEig sym_eig(const Matrix& input) {
  const Eigen::Index n = input.rows();
  if (input.cols() != n) throw Asymmetric("sym_eig: matrix is not square");
  const double scale = n > 0 ? input.cwiseAbs().maxCoeff() : 0.0;
  if (n > 0 && (input - input.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Asymmetric("sym_eig: matrix is not symmetric");

  Matrix a = 0.5 * (input + input.transpose());
  Matrix v = Matrix::Identity(n, n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    int rotations = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        const double app = a(p, p), aqq = a(q, q);
        // Entries below the rounding level of the diagonal (or of the whole
        // matrix) no longer move the eigenvalues.
        if (std::abs(apq) <= std::max(1e-16 * std::sqrt(std::abs(app * aqq)), 1e-18 * scale)) {
          a(p, q) = a(q, p) = 0.0;
          continue;
        }
        ++rotations;
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    if (rotations == 0) break;
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  SymEig out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values[i] = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

double operator_2norm(const Matrix& c) {
  if (c.rows() == 0) return 0.0;
  return sym_eig(c).values[0];
}

double relative_residual(const SparseMatrix& a, const Vector& x, const Vector& b) {
  const double denom = a.norm() * x.norm() + b.norm();
  if (denom == 0.0) return 0.0;
  return (a * x - b).norm() / denom;
}

}  // namespace ensrom
