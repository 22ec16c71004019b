#include "ensrom/fom.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ensrom/errors.hpp"
#include "ensrom/parallel.hpp"

namespace ensrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

SparseMatrix velocity_block(const FomOperators& ops, double dt, const SparseMatrix& convection, double nu) {
  SparseMatrix k = ops.mass * (1.0 / dt);
  k += convection;
  k += ops.stiffness * nu;
  return k;
}

FlowSolution split(const FomOperators& ops, const Vector& x) {
  const int nv = ops.space->n_vel(), np = ops.space->n_pr();
  return {x.head(nv), x.segment(nv, np)};
}

}  // namespace

SolveCounters& SolveCounters::operator+=(const SolveCounters& o) {
  steps += o.steps;
  factorizations += o.factorizations;
  solves += o.solves;
  assembly_seconds += o.assembly_seconds;
  factor_seconds += o.factor_seconds;
  solve_seconds += o.solve_seconds;
  return *this;
}

FomOperators FomOperators::build(std::shared_ptr<const TaylorHoodSpace> space) {
  FomOperators ops;
  ops.mass = assemble_mass(*space);
  ops.stiffness = assemble_stiffness(*space);
  ops.divergence = assemble_divergence(*space);
  ops.pressure_mean = pressure_mean_vector(*space);
  ops.space = std::move(space);
  return ops;
}

SparseMatrix saddle_matrix(const FomOperators& ops, const SparseMatrix& k) {
  const int nv = ops.space->n_vel(), np = ops.space->n_pr();
  const int n = nv + np + 1;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(k.nonZeros() + 2 * ops.divergence.nonZeros() + 2 * np);
  for (int col = 0; col < k.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(k, col); it; ++it) trip.emplace_back(it.row(), it.col(), it.value());
  for (int col = 0; col < ops.divergence.outerSize(); ++col)
    for (SparseMatrix::InnerIterator it(ops.divergence, col); it; ++it) {
      trip.emplace_back(it.col(), nv + it.row(), -it.value());
      trip.emplace_back(nv + it.row(), it.col(), -it.value());
    }
  for (int i = 0; i < np; ++i) {
    trip.emplace_back(nv + i, nv + np, ops.pressure_mean[i]);
    trip.emplace_back(nv + np, nv + i, ops.pressure_mean[i]);
  }
  SparseMatrix full(n, n);
  full.setFromTriplets(trip.begin(), trip.end());
  return apply_dirichlet(full, nullptr, ops.space->constrained_dofs());
}

Vector saddle_rhs(const FomOperators& ops, const Vector& velocity_rhs) {
  const int nv = ops.space->n_vel(), np = ops.space->n_pr();
  Vector rhs = Vector::Zero(nv + np + 1);
  rhs.head(nv) = velocity_rhs;
  constrain_rhs(rhs, ops.space->constrained_dofs());
  return rhs;
}

FlowSolution solve_steady_stokes(const FomOperators& ops, const ForceField& f, double nu, double t) {
  const SparseMatrix k = ops.stiffness * nu;
  const SparseFactorization lu(saddle_matrix(ops, k));
  return split(ops, lu.solve(saddle_rhs(ops, assemble_load(*ops.space, f, t))));
}

FlowSolution step_backward_euler(const FomOperators& ops, const Vector& u, double nu, const ForceField& f,
                                 double t_next, double dt, SolveCounters* counters) {
  auto start = Clock::now();
  const SparseMatrix conv = assemble_convection(*ops.space, u);
  const SparseMatrix system = saddle_matrix(ops, velocity_block(ops, dt, conv, nu));
  Vector rhs = ops.mass * u * (1.0 / dt);
  rhs += assemble_load(*ops.space, f, t_next);
  const double assembly = seconds_since(start);

  start = Clock::now();
  const SparseFactorization lu(system);
  const double factor = seconds_since(start);

  start = Clock::now();
  FlowSolution out = split(ops, lu.solve(saddle_rhs(ops, rhs)));
  if (counters) {
    counters->steps += 1;
    counters->factorizations += 1;
    counters->solves += 1;
    counters->assembly_seconds += assembly;
    counters->factor_seconds += factor;
    counters->solve_seconds += seconds_since(start);
  }
  return out;
}

Vector ensemble_mean(const std::vector<Vector>& members) {
  if (members.empty()) throw DimensionMismatch("ensemble mean of an empty ensemble");
  Vector sum = members.front();
  for (std::size_t j = 1; j < members.size(); ++j) sum += members[j];
  return sum / static_cast<double>(members.size());
}

double max_viscosity(const std::vector<double>& viscosity) {
  if (viscosity.empty()) throw DimensionMismatch("no viscosities");
  double m = viscosity.front();
  for (double v : viscosity) m = std::max(m, v);
  return m;
}

EnsembleStepper::EnsembleStepper(const FomOperators& ops, double dt, int threads)
    : ops_(&ops), dt_(dt), threads_(threads) {}

EnsembleState EnsembleStepper::step(const EnsembleState& state) {
  const int J = state.size();
  if (J < 1) throw DimensionMismatch("ensemble needs at least one member");
  if (static_cast<int>(state.viscosity.size()) != J || static_cast<int>(state.force.size()) != J)
    throw DimensionMismatch("ensemble member data length mismatch");
  const auto& space = *ops_->space;
  const double t_next = state.t + dt_;
  const double nu_max = max_viscosity(state.viscosity);

  auto start = Clock::now();
  const Vector mean = ensemble_mean(state.velocity);
  const SparseMatrix system = saddle_matrix(*ops_, velocity_block(*ops_, dt_, assemble_convection(space, mean), nu_max));
  std::vector<Vector> rhs(J);
  parallel_for(J, threads_, [&](int j) {
    const Vector& u = state.velocity[j];
    const SparseMatrix fluct = assemble_convection(space, u - mean);
    Vector r = ops_->mass * u * (1.0 / dt_);
    r -= fluct * u;
    r -= ops_->stiffness * u * (state.viscosity[j] - nu_max);
    r += assemble_load(space, state.force[j], t_next);
    rhs[j] = saddle_rhs(*ops_, r);
  });
  counters_.assembly_seconds += seconds_since(start);

  start = Clock::now();
  const SparseFactorization lu(system);
  counters_.factor_seconds += seconds_since(start);
  counters_.factorizations += 1;

  start = Clock::now();
  const auto solutions = lu.solve_many(rhs, threads_);
  counters_.solve_seconds += seconds_since(start);
  counters_.solves += J;
  counters_.steps += 1;

  EnsembleState next;
  next.t = t_next;
  next.viscosity = state.viscosity;
  next.force = state.force;
  for (const auto& x : solutions) {
    auto s = split(*ops_, x);
    next.velocity.push_back(std::move(s.velocity));
    next.pressure.push_back(std::move(s.pressure));
  }
  return next;
}

namespace {

long steps_for(double time, double dt, const char* what) {
  const double ratio = time / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, std::abs(ratio)))
    throw ConfigError(std::string(what) + " is not a multiple of dt");
  return static_cast<long>(rounded);
}

}  // namespace

SnapshotSchedule SnapshotSchedule::make(double dt, double start_time, double interval, double end_time) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(interval > 0.0)) throw ConfigError("snapshot interval must be positive");
  SnapshotSchedule s;
  s.start_step = steps_for(start_time, dt, "snapshot start");
  s.interval_steps = steps_for(interval, dt, "snapshot interval");
  s.end_step = static_cast<long>(std::floor(end_time / dt + 1e-9));
  if (s.interval_steps < 1) throw ConfigError("snapshot interval shorter than dt");
  if (s.start_step < 0 || s.start_step > s.end_step) throw ConfigError("snapshot start outside the run");
  return s;
}

bool SnapshotSchedule::records(long step) const {
  return step >= start_step && step <= end_step && (step - start_step) % interval_steps == 0;
}

int SnapshotSchedule::count() const { return static_cast<int>((end_step - start_step) / interval_steps + 1); }

SnapshotSet record_snapshots(const std::vector<std::vector<Vector>>& trajectories, double dt, double start_time,
                             double interval) {
  if (trajectories.empty() || trajectories.front().empty()) throw ConfigError("empty trajectory");
  const long n_steps = static_cast<long>(trajectories.front().size()) - 1;
  const auto sched = SnapshotSchedule::make(dt, start_time, interval, n_steps * dt);
  SnapshotSet set;
  set.num_realizations = static_cast<int>(trajectories.size());
  set.per_realization = sched.count();
  set.t0 = sched.start_step * dt;
  set.dt_snap = sched.interval_steps * dt;
  const auto K = trajectories.front().front().size();
  set.columns.resize(K, static_cast<Eigen::Index>(set.num_realizations) * set.per_realization);
  for (int j = 0; j < set.num_realizations; ++j) {
    if (static_cast<long>(trajectories[j].size()) != n_steps + 1) throw DimensionMismatch("trajectory lengths differ");
    for (int m = 0; m < set.per_realization; ++m)
      set.columns.col(set.column_index(j, m)) = trajectories[j][sched.start_step + m * sched.interval_steps];
  }
  return set;
}

std::string save_snapshots(const SnapshotSet& s) {
  std::ostringstream out;
  char buf[64];
  out << "snapshots " << s.columns.rows() << ' ' << s.num_realizations << ' ' << s.per_realization << ' ';
  std::snprintf(buf, sizeof(buf), "%.17g %.17g", s.t0, s.dt_snap);
  out << buf << '\n';
  for (Eigen::Index c = 0; c < s.columns.cols(); ++c) {
    for (Eigen::Index i = 0; i < s.columns.rows(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.columns(i, c));
      if (i) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

SnapshotSet load_snapshots(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  long K = 0;
  SnapshotSet s;
  if (!(in >> tag >> K >> s.num_realizations >> s.per_realization >> s.t0 >> s.dt_snap) || tag != "snapshots" ||
      K < 0 || s.num_realizations < 0 || s.per_realization < 0)
    throw ParseError(1, "expected 'snapshots <K> <J_S> <N_S+1> <t0> <dt_snap>'");
  s.columns.resize(K, static_cast<Eigen::Index>(s.num_realizations) * s.per_realization);
  for (Eigen::Index c = 0; c < s.columns.cols(); ++c)
    for (Eigen::Index i = 0; i < K; ++i)
      if (!(in >> s.columns(i, c))) throw ParseError(static_cast<std::size_t>(c) + 2, "truncated snapshot column");
  return s;
}

DualNorm::DualNorm(const FomOperators& ops)
    : ops_(&ops), factor_(apply_dirichlet(ops.stiffness, nullptr, ops.space->constrained_dofs())) {}

double DualNorm::squared(const Vector& load) const {
  Vector l = load;
  constrain_rhs(l, ops_->space->constrained_dofs());
  return l.dot(factor_.solve(l));
}

}  // namespace ensrom
