#include "ensrom/pod.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ensrom/errors.hpp"
#include "ensrom/linsolve.hpp"

namespace ensrom {

Matrix correlation_matrix(const SnapshotSet& snapshots, const SparseMatrix& mass) {
  const Matrix ma = mass * snapshots.columns;
  Matrix c = snapshots.columns.transpose() * ma;
  return 0.5 * (c + c.transpose());
}

PODBasis compute_pod_basis(const SnapshotSet& snapshots, const SparseMatrix& mass, int R) {
  if (R < 0) throw RankDeficient(0, "negative mode count requested");
  const Matrix c = correlation_matrix(snapshots, mass);
  const SymEig eig = sym_eig(c);
  const Eigen::Index d = c.rows();

  PODBasis basis;
  basis.eigenvalues = eig.values.cwiseMax(0.0);
  basis.correlation_vectors = eig.vectors;
  const double lambda1 = d > 0 ? basis.eigenvalues[0] : 0.0;
  basis.rank = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    if (lambda1 > 0.0 && basis.eigenvalues[i] > kRankTol * lambda1) ++basis.rank;
  if (R > basis.rank) throw RankDeficient(basis.rank, "requested " + std::to_string(R) + " POD modes");

  Matrix modes = snapshots.columns * eig.vectors.leftCols(R);
  for (int i = 0; i < R; ++i) modes.col(i) /= std::sqrt(basis.eigenvalues[i]);

  // Modified Gram-Schmidt in the M inner product, two passes.
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < R; ++i) {
      for (int k = 0; k < i; ++k) {
        const double proj = modes.col(k).dot(mass * modes.col(i));
        modes.col(i) -= proj * modes.col(k);
      }
      modes.col(i) /= std::sqrt(modes.col(i).dot(mass * modes.col(i)));
    }

  for (int i = 0; i < R; ++i) {
    Eigen::Index at = 0;
    modes.col(i).cwiseAbs().maxCoeff(&at);
    if (modes(at, i) < 0.0) modes.col(i) = -modes.col(i);
  }
  basis.modes = std::move(modes);
  basis.mass_modes = mass * basis.modes;
  return basis;
}

Vector project_l2(const PODBasis& basis, const Vector& u) { return basis.mass_modes.transpose() * u; }

Vector reconstruct(const PODBasis& basis, const Vector& coords) { return basis.modes * coords; }

ProjectionIdentity projection_error_identity(const SnapshotSet& snapshots, const PODBasis& basis,
                                             const FomOperators& ops) {
  if (basis.correlation_vectors.size() == 0)
    throw DimensionMismatch("projection identity needs the correlation eigenvectors");
  const int R = basis.size();
  ProjectionIdentity out;
  for (Eigen::Index c = 0; c < snapshots.columns.cols(); ++c) {
    const Vector u = snapshots.columns.col(c);
    const Vector r = u - reconstruct(basis, project_l2(basis, u));
    out.lhs_l2 += r.dot(ops.mass * r);
    out.lhs_h1 += r.dot(ops.stiffness * r);
  }
  const Eigen::Index d = basis.eigenvalues.size();
  for (Eigen::Index i = R; i < d; ++i) out.rhs_l2 += basis.eigenvalues[i];
  // lambda_i ||grad phi_i||^2 = ||grad (A a_i)||^2, evaluated without the
  // 1/sqrt(lambda_i) scaling so that tail modes stay well conditioned.
  const Matrix tail = snapshots.columns * basis.correlation_vectors.rightCols(d - R);
  for (Eigen::Index i = 0; i < tail.cols(); ++i) out.rhs_h1 += tail.col(i).dot(ops.stiffness * tail.col(i));
  return out;
}

ReducedOperators::ReducedOperators(const PODBasis& basis, const FomOperators& ops, std::vector<ForceField> forces)
    : modes_(basis.modes), space_(ops.space), forces_(std::move(forces)) {
  const int R = basis.size();
  const Matrix a_phi = ops.stiffness * basis.modes;
  stiffness_ = basis.modes.transpose() * a_phi;
  stiffness_ = 0.5 * (stiffness_ + stiffness_.transpose()).eval();
  stiffness_norm_ = operator_2norm(stiffness_);
  projection_ = basis.mass_modes.transpose();

  tensor_.reserve(R);
  for (int k = 0; k < R; ++k) {
    const SparseMatrix n = assemble_convection(*space_, basis.modes.col(k));
    Matrix t = basis.modes.transpose() * (n * basis.modes);
    tensor_.push_back(0.5 * (t - t.transpose()));
  }

  cached_force_.resize(forces_.size());
  for (std::size_t j = 0; j < forces_.size(); ++j)
    if (!forces_[j].time_dependent) cached_force_[j] = modes_.transpose() * assemble_load(*space_, forces_[j], 0.0);
}

Matrix ReducedOperators::convection_matrix(const Vector& g) const {
  const int R = size();
  Matrix b = Matrix::Zero(R, R);
  for (int k = 0; k < R; ++k) b += g[k] * tensor_[k];
  return b;
}

Vector ReducedOperators::reduced_force(int j, double t) const {
  if (j < 0 || j >= static_cast<int>(forces_.size())) throw DimensionMismatch("no force for member " + std::to_string(j));
  if (!forces_[j].time_dependent) return cached_force_[j];
  return modes_.transpose() * assemble_load(*space_, forces_[j], t);
}

std::string save_basis(const PODBasis& basis) {
  std::ostringstream out;
  char buf[64];
  out << "podbasis " << basis.modes.rows() << ' ' << basis.modes.cols() << '\n';
  out << "eigenvalues " << basis.eigenvalues.size();
  for (Eigen::Index i = 0; i < basis.eigenvalues.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", basis.eigenvalues[i]);
    out << buf;
  }
  out << '\n';
  for (Eigen::Index c = 0; c < basis.modes.cols(); ++c) {
    for (Eigen::Index i = 0; i < basis.modes.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", basis.modes(i, c));
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

PODBasis load_basis(const std::string& text, const SparseMatrix& mass) {
  std::istringstream in(text);
  std::string tag;
  long K = 0, R = 0, d = 0;
  if (!(in >> tag >> K >> R) || tag != "podbasis" || K < 0 || R < 0) throw ParseError(1, "expected 'podbasis <K> <R>'");
  if (!(in >> tag >> d) || tag != "eigenvalues" || d < 0) throw ParseError(2, "expected 'eigenvalues <d> ...'");
  if (K != mass.rows()) throw DimensionMismatch("basis size does not match the mass matrix");
  PODBasis basis;
  basis.eigenvalues.resize(d);
  for (long i = 0; i < d; ++i)
    if (!(in >> basis.eigenvalues[i])) throw ParseError(2, "truncated eigenvalue list");
  basis.modes.resize(K, R);
  for (long c = 0; c < R; ++c)
    for (long i = 0; i < K; ++i)
      if (!(in >> basis.modes(i, c))) throw ParseError(static_cast<std::size_t>(c) + 3, "truncated mode");
  const double lambda1 = d > 0 ? basis.eigenvalues[0] : 0.0;
  for (long i = 0; i < d; ++i)
    if (lambda1 > 0.0 && basis.eigenvalues[i] > kRankTol * lambda1) ++basis.rank;
  basis.mass_modes = mass * basis.modes;
  return basis;
}

}  // namespace ensrom
