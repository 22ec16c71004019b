#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ensrom/fem.hpp"
#include "ensrom/linsolve.hpp"

namespace ensrom {

/// Time-independent full-order operators shared by every solver on a space.
struct FomOperators {
  std::shared_ptr<const TaylorHoodSpace> space;
  SparseMatrix mass;
  SparseMatrix stiffness;
  SparseMatrix divergence;
  Vector pressure_mean;

  static FomOperators build(std::shared_ptr<const TaylorHoodSpace> space);
};

struct FlowSolution {
  Vector velocity;
  Vector pressure;
};

/// Work counters; the seconds are wall-clock and therefore not reproducible.
struct SolveCounters {
  long steps = 0;
  long factorizations = 0;
  long solves = 0;
  double assembly_seconds = 0.0;
  double factor_seconds = 0.0;
  double solve_seconds = 0.0;

  SolveCounters& operator+=(const SolveCounters& o);
};

/// Saddle-point matrix [K, -B^T, 0; -B, 0, m; 0, m^T, 0] with the velocity
/// Dirichlet DOFs eliminated. The last row enforces a zero-mean pressure.
SparseMatrix saddle_matrix(const FomOperators& ops, const SparseMatrix& velocity_block);
/// Pads a velocity right-hand side to saddle size and zeroes constrained rows.
Vector saddle_rhs(const FomOperators& ops, const Vector& velocity_rhs);

/// nu (grad u, grad v) - (p, div v) = (f, v), (div u, q) = 0, u = 0 on the
/// boundary, mean(p) = 0.
FlowSolution solve_steady_stokes(const FomOperators& ops, const ForceField& f, double nu, double t = 0.0);

/// One linearly implicit backward Euler step: convection lagged at u^n,
/// forcing evaluated at `t_next`.
FlowSolution step_backward_euler(const FomOperators& ops, const Vector& u, double nu, const ForceField& f,
                                 double t_next, double dt, SolveCounters* counters = nullptr);

struct EnsembleState {
  double t = 0.0;
  std::vector<Vector> velocity;
  std::vector<Vector> pressure;
  std::vector<double> viscosity;
  std::vector<ForceField> force;

  int size() const { return static_cast<int>(velocity.size()); }
};

/// Arithmetic mean over realizations.
Vector ensemble_mean(const std::vector<Vector>& members);
double max_viscosity(const std::vector<double>& viscosity);

/// Ensemble scheme with the viscosity split at nu_max: one shared matrix
/// (1/dt) M + N(<u>^n) + nu_max A per step, J right-hand sides carrying
/// -N(u^j - <u>) u^j - (nu_j - nu_max) A u^j + f^j.
class EnsembleStepper {
 public:
  EnsembleStepper(const FomOperators& ops, double dt, int threads = 1);

  EnsembleState step(const EnsembleState& state);
  const SolveCounters& counters() const { return counters_; }

 private:
  const FomOperators* ops_;
  double dt_;
  int threads_;
  SolveCounters counters_;
};

/// Steps at which snapshots are taken, derived from times that must be
/// integer multiples of dt.
struct SnapshotSchedule {
  long start_step = 0;
  long interval_steps = 1;
  long end_step = 0;

  /// Throws ConfigError when start or interval is not a multiple of dt.
  static SnapshotSchedule make(double dt, double start_time, double interval, double end_time);
  bool records(long step) const;
  /// Snapshots per realization: start, start+interval, ... up to end.
  int count() const;
};

/// Snapshot matrix: columns ordered realization-major, time-minor.
struct SnapshotSet {
  int num_realizations = 0;   ///< J_S
  int per_realization = 0;    ///< N_S + 1
  double t0 = 0.0;
  double dt_snap = 0.0;
  Matrix columns;             ///< K x J_S (N_S + 1)

  int size() const { return static_cast<int>(columns.cols()); }
  Eigen::Index column_index(int j, int m) const { return static_cast<Eigen::Index>(j) * per_realization + m; }
  double time(int m) const { return t0 + m * dt_snap; }
};

/// Picks snapshots from stored trajectories (trajectories[j][n] is the state
/// at t = n dt).
SnapshotSet record_snapshots(const std::vector<std::vector<Vector>>& trajectories, double dt, double start_time,
                             double interval);

std::string save_snapshots(const SnapshotSet& s);
SnapshotSet load_snapshots(const std::string& text);

/// Discrete H^{-1} norm: ||f||^2 = l^T A^{-1} l with l the constrained load
/// vector and A the Dirichlet-constrained stiffness matrix.
class DualNorm {
 public:
  explicit DualNorm(const FomOperators& ops);
  double squared(const Vector& load) const;

 private:
  const FomOperators* ops_;
  SparseFactorization factor_;
};

}  // namespace ensrom
