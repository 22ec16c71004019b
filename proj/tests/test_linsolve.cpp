#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ensrom/errors.hpp"
#include "ensrom/fom.hpp"
#include "ensrom/linsolve.hpp"
#include "support.hpp"

using namespace ensrom;

namespace {

SparseMatrix sparse(const Matrix& m) { return m.sparseView(); }

Matrix random_spd(std::mt19937_64& rng, int n) {
  Matrix a(n, n);
  for (int j = 0; j < n; ++j) a.col(j) = testing::random_vector(rng, n);
  return a * a.transpose() + n * Matrix::Identity(n, n);
}

}  // namespace

TEST_CASE("sparse LU: identity") {
  const SparseFactorization lu(sparse(Matrix::Identity(6, 6)));
  Vector b(6);
  b << 1, -2, 3, 0.5, 1e-3, 7;
  CHECK(lu.solve(b) == b);
}

TEST_CASE("sparse LU: singular matrix reports a pivot") {
  Matrix m(2, 2);
  m << 0, 0, 0, 1;
  try {
    SparseFactorization lu(sparse(m));
    FAIL("expected SingularMatrix");
  } catch (const SingularMatrix& e) {
    CHECK(e.pivot() >= 0);
  }
  CHECK_THROWS_AS(SparseFactorization(SparseMatrix(2, 3)), DimensionMismatch);
}

TEST_CASE("sparse LU: random SPD residual") {
  std::mt19937_64 rng(1);
  const Matrix a = random_spd(rng, 50);
  const SparseFactorization lu(sparse(a));
  const Vector b = testing::random_vector(rng, 50);
  const Vector x = lu.solve(b);
  CHECK((a * x - b).norm() / b.norm() <= 1e-10);
  CHECK(relative_residual(sparse(a), x, b) <= kSolverTol);
  CHECK_THROWS_AS(lu.solve(Vector::Zero(49)), DimensionMismatch);
}

TEST_CASE("solve_many: determinism and residuals on a saddle system") {
  const auto& ops = testing::coarse_ops();
  SparseMatrix k = ops.mass * 100.0;
  k += ops.stiffness * 0.002;
  const SparseMatrix sys = saddle_matrix(ops, k);
  const SparseFactorization lu(sys);
  std::mt19937_64 rng(2);
  std::vector<Vector> rhs;
  for (int j = 0; j < 5; ++j) rhs.push_back(saddle_rhs(ops, testing::random_vector(rng, ops.space->n_vel())));
  const auto xs = lu.solve_many(rhs, 1);
  const auto xs3 = lu.solve_many(rhs, 3);
  REQUIRE(xs.size() == 5);
  for (int j = 0; j < 5; ++j) {
    CHECK(relative_residual(sys, xs[j], rhs[j]) <= kSolverTol);
    CHECK(xs[j] == lu.solve(rhs[j]));
    CHECK(xs3[j] == xs[j]);
    // A fresh factorization of the same matrix gives the same bits.
    CHECK(SparseFactorization(sys).solve(rhs[j]) == xs[j]);
  }
  const std::vector<Vector> twice{rhs[0], rhs[0]};
  const auto same = lu.solve_many(twice, 2);
  CHECK(same[0] == same[1]);
  std::vector<Vector> bad{Vector::Zero(3)};
  CHECK_THROWS_AS(lu.solve_many(bad), DimensionMismatch);
}

TEST_CASE("dense LU") {
  std::mt19937_64 rng(4);
  const Matrix a = random_spd(rng, 12);
  const DenseFactorization lu(a);
  const Vector b = testing::random_vector(rng, 12);
  CHECK((a * lu.solve(b) - b).norm() <= 1e-12 * b.norm());
  CHECK_THROWS_AS(DenseFactorization(Matrix::Zero(3, 3)), SingularMatrix);
}

TEST_CASE("sym_eig: diagonal") {
  Matrix c = Matrix::Zero(3, 3);
  c.diagonal() << 3, 1, 2;
  const SymEig e = sym_eig(c);
  CHECK(e.values[0] == 3.0);
  CHECK(e.values[1] == 2.0);
  CHECK(e.values[2] == 1.0);
  CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) <= 1e-15);
  CHECK(std::abs(std::abs(e.vectors(2, 1)) - 1.0) <= 1e-15);
  CHECK(std::abs(std::abs(e.vectors(1, 2)) - 1.0) <= 1e-15);
}

TEST_CASE("sym_eig: rank one") {
  Vector v(4);
  v << 1, -2, 0.5, 3;
  const SymEig e = sym_eig(v * v.transpose());
  CHECK(e.values[0] == doctest::Approx(v.squaredNorm()).epsilon(1e-14));
  for (int i = 1; i < 4; ++i) CHECK(std::abs(e.values[i]) <= 1e-13);
}

TEST_CASE("sym_eig: random symmetric reconstruction and residuals") {
  std::mt19937_64 rng(9);
  Matrix a(20, 20);
  for (int j = 0; j < 20; ++j) a.col(j) = testing::random_vector(rng, 20);
  const Matrix c = 0.5 * (a + a.transpose());
  const SymEig e = sym_eig(c);
  const double cn = c.norm();
  CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - c).cwiseAbs().maxCoeff() <= 1e-12 * cn);
  CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(20, 20)).cwiseAbs().maxCoeff() <= 1e-12);
  for (int i = 0; i < 20; ++i) {
    CHECK((c * e.vectors.col(i) - e.values[i] * e.vectors.col(i)).norm() <= 1e-10 * cn);
    if (i) CHECK(e.values[i] <= e.values[i - 1]);
  }
  // Cross-check against a library eigensolver.
  Eigen::SelfAdjointEigenSolver<Matrix> ref(c);
  for (int i = 0; i < 20; ++i) CHECK(std::abs(e.values[i] - ref.eigenvalues()[19 - i]) <= 1e-12 * cn);
}

TEST_CASE("sym_eig: asymmetric input") {
  Matrix c = Matrix::Identity(3, 3);
  c(0, 1) = 1e-3;
  CHECK_THROWS_AS(sym_eig(c), Asymmetric);
}

TEST_CASE("operator 2-norm") {
  CHECK(operator_2norm(Matrix::Identity(5, 5)) == doctest::Approx(1.0).epsilon(1e-15));
  Matrix d = Matrix::Zero(2, 2);
  d.diagonal() << 5, 1;
  CHECK(operator_2norm(d) == doctest::Approx(5.0).epsilon(1e-15));
  std::mt19937_64 rng(12);
  const Matrix p = random_spd(rng, 15);
  CHECK(std::abs(operator_2norm(p) - sym_eig(p).values[0]) <= 1e-10 * sym_eig(p).values[0]);
}
