#include "ensrom/rom.hpp"

#include <chrono>
#include <cmath>

#include "ensrom/errors.hpp"
#include "ensrom/linsolve.hpp"
#include "ensrom/parallel.hpp"

namespace ensrom {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double grad_norm_sq(const Matrix& s, const Vector& a) { return std::max(0.0, a.dot(s * a)); }

}  // namespace

DifferentialFilter::DifferentialFilter(const ReducedOperators& ops, double delta) : ops_(&ops), delta_(delta) {
  if (!(delta >= 0.0)) throw ConfigError("filter radius must be non-negative");
  const int R = ops.size();
  matrix_ = delta * delta * ops.stiffness() + Matrix::Identity(R, R);
  llt_.compute(matrix_);
  if (llt_.info() != Eigen::Success) throw SingularMatrix(-1, "filter matrix is not positive definite");
}

Vector DifferentialFilter::apply(const Vector& coords) const {
  if (coords.size() != matrix_.rows()) throw DimensionMismatch("filter: coordinate length");
  return llt_.solve(coords);
}

Vector DifferentialFilter::apply_full(const Vector& velocity) const { return apply(ops_->projection() * velocity); }

FilterStabilityReport filter_stability_check(const DifferentialFilter& filter, const FomOperators& fom,
                                             const std::vector<Vector>& reduced_samples,
                                             const std::vector<Vector>& full_samples) {
  constexpr double slack = 1.0 + 1e-12;
  const Matrix& s = filter.operators().stiffness();
  const double s_norm = filter.operators().stiffness_norm();
  FilterStabilityReport report;
  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : (num > 0.0 ? INFINITY : 0.0); };

  std::size_t id = 0;
  for (const Vector& a : reduced_samples) {
    const Vector abar = filter.apply(a);
    const double l2 = a.norm(), l2bar = abar.norm();
    const double g = std::sqrt(grad_norm_sq(s, a)), gbar = std::sqrt(grad_norm_sq(s, abar));
    report.max_l2_ratio = std::max(report.max_l2_ratio, ratio(l2bar, l2));
    report.max_grad_ratio = std::max(report.max_grad_ratio, ratio(gbar, g));
    if (l2bar > slack * l2) throw InvariantViolation(id, "filtered L2 norm exceeds the input norm");
    if (gbar > slack * g) throw InvariantViolation(id, "filtered gradient norm exceeds the input gradient norm");
    ++id;
    ++report.samples;
  }
  for (const Vector& v : full_samples) {
    if (v.size() != fom.mass.rows()) throw DimensionMismatch("full-order sample length");
    const Vector abar = filter.apply_full(v);
    const double l2 = std::sqrt(std::max(0.0, v.dot(fom.mass * v)));
    const double l2bar = abar.norm();
    const double gbar = std::sqrt(grad_norm_sq(s, abar));
    report.max_l2_ratio = std::max(report.max_l2_ratio, ratio(l2bar, l2));
    report.max_inverse_ratio = std::max(report.max_inverse_ratio, ratio(gbar, std::sqrt(s_norm) * l2));
    if (l2bar > slack * l2) throw InvariantViolation(id, "filtered L2 norm exceeds the input norm");
    if (gbar > slack * std::sqrt(s_norm) * l2)
      throw InvariantViolation(id, "filtered gradient norm exceeds the inverse-estimate bound");
    ++id;
    ++report.samples;
  }
  return report;
}

RomStepper::RomStepper(const ReducedOperators& ops, double dt, const DifferentialFilter* filter, int threads)
    : ops_(&ops), dt_(dt), filter_(filter), threads_(threads) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
}

Vector RomStepper::advecting_fluctuation(const RomEnsembleState& state, int j) const {
  return filtered(state.coords.at(j) - ensemble_mean(state.coords));
}

RomEnsembleState RomStepper::step(const RomEnsembleState& state) {
  const int J = state.size();
  const int R = ops_->size();
  if (J < 1) throw DimensionMismatch("ensemble needs at least one member");
  if (static_cast<int>(state.viscosity.size()) != J) throw DimensionMismatch("ensemble viscosity length");
  for (const auto& a : state.coords)
    if (a.size() != R) throw DimensionMismatch("reduced coordinate length");
  const double t_next = state.t + dt_;
  const double nu_max = max_viscosity(state.viscosity);
  const Matrix& s = ops_->stiffness();

  auto start = Clock::now();
  const Vector mean = ensemble_mean(state.coords);
  Matrix system = ops_->convection_matrix(filtered(mean));
  system += nu_max * s;
  system.diagonal().array() += 1.0 / dt_;

  std::vector<Vector> rhs(J);
  parallel_for(J, threads_, [&](int j) {
    const Vector& a = state.coords[j];
    Vector r = a * (1.0 / dt_);
    r -= ops_->convection_matrix(filtered(a - mean)) * a;
    r -= (state.viscosity[j] - nu_max) * (s * a);
    r += ops_->reduced_force(j % ops_->num_forces(), t_next);
    rhs[j] = std::move(r);
  });
  counters_.assembly_seconds += seconds_since(start);

  start = Clock::now();
  const DenseFactorization lu(system);
  counters_.factor_seconds += seconds_since(start);
  counters_.factorizations += 1;

  start = Clock::now();
  RomEnsembleState next;
  next.t = t_next;
  next.viscosity = state.viscosity;
  next.coords.resize(J);
  parallel_for(J, threads_, [&](int j) { next.coords[j] = lu.solve(rhs[j]); });
  counters_.solve_seconds += seconds_since(start);
  counters_.solves += J;
  counters_.steps += 1;
  for (int j = 0; j < J; ++j)
    if (!next.coords[j].allFinite())
      throw SingularMatrix(-1, "reduced step " + std::to_string(counters_.steps) + " produced non-finite values");
  return next;
}

double stability_epsilon(const std::vector<double>& viscosity) {
  if (viscosity.empty()) throw DegenerateEpsilon("no viscosities");
  double lo = viscosity.front(), hi = viscosity.front();
  for (double v : viscosity) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double eps = lo / hi;
  if (!(eps > 0.0) || !std::isfinite(eps) || eps > 1.0)
    throw DegenerateEpsilon("viscosities must be positive for a stability margin");
  return eps;
}

StabilityMonitor::StabilityMonitor(const ReducedOperators& ops, const RomStepper& stepper, double dt,
                                   const RomEnsembleState& initial, std::function<double(int, double)> dual_norm_sq)
    : ops_(&ops),
      stepper_(&stepper),
      dt_(dt),
      nu_max_(max_viscosity(initial.viscosity)),
      eps_(stability_epsilon(initial.viscosity)),
      dual_norm_sq_(std::move(dual_norm_sq)) {
  const int J = initial.size();
  running_l2_.assign(J, 0.0);
  running_force_.assign(J, 0.0);
  initial_part_.resize(J);
  for (int j = 0; j < J; ++j) {
    const Vector& a = initial.coords[j];
    initial_part_[j] = 0.5 * a.squaredNorm() + 0.5 * nu_max_ * dt_ * grad_norm_sq(ops.stiffness(), a);
  }
}

void StabilityMonitor::observe(const RomEnsembleState& before, const RomEnsembleState& after) {
  ++steps_;
  const Matrix& s = ops_->stiffness();
  const double root_norm = std::sqrt(ops_->stiffness_norm());
  for (int j = 0; j < after.size(); ++j) {
    const Vector fl = stepper_->advecting_fluctuation(before, j);
    const Vector& a = after.coords[j];
    running_l2_[j] += a.squaredNorm();
    running_force_[j] += dt_ / (nu_max_ * eps_) * dual_norm_sq_(j, after.t);

    StabilityRecord rec;
    rec.step = steps_;
    rec.t = after.t;
    rec.member = j;
    rec.eps = eps_;
    rec.condition_lhs = dt_ / nu_max_ * root_norm * grad_norm_sq(s, fl);
    rec.condition_rhs = eps_;
    rec.energy_lhs = 0.5 * a.squaredNorm() + 0.5 * nu_max_ * dt_ * grad_norm_sq(s, a) +
                     0.25 * eps_ * nu_max_ * dt_ * running_l2_[j];
    rec.c_stab = running_force_[j] + initial_part_[j];
    records_.push_back(rec);
  }
}

}  // namespace ensrom
