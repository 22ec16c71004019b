#pragma once

#include <Eigen/Cholesky>
#include <functional>
#include <vector>

#include "ensrom/fom.hpp"
#include "ensrom/pod.hpp"

namespace ensrom {

/// Reduced differential filter: for reduced coordinates a, the filtered
/// coordinates solve (delta^2 S_R + I) abar = a. With an M-orthonormal basis
/// this is delta^2 (grad vbar, grad phi) + (vbar, phi) = (v, phi) on X_R.
class DifferentialFilter {
 public:
  DifferentialFilter(const ReducedOperators& ops, double delta);

  double radius() const { return delta_; }
  /// Filter of a field already in X_R.
  Vector apply(const Vector& coords) const;
  /// Filter of a full-order velocity vector (projected with Phi^T M first).
  Vector apply_full(const Vector& velocity) const;
  const Matrix& matrix() const { return matrix_; }
  const ReducedOperators& operators() const { return *ops_; }

 private:
  const ReducedOperators* ops_;
  double delta_;
  Matrix matrix_;
  Eigen::LLT<Matrix> llt_;
};

struct FilterStabilityReport {
  std::size_t samples = 0;
  double max_l2_ratio = 0.0;        ///< ||ubar|| / ||u||
  double max_grad_ratio = 0.0;      ///< ||grad ubar|| / ||grad u|| on X_R
  double max_inverse_ratio = 0.0;   ///< ||grad ubar|| / (||S_R||^1/2 ||u||) on X
};

/// Checks ||ubar|| <= ||u|| and ||grad ubar|| <= ||grad u|| for reduced
/// samples, and ||ubar|| <= ||u||, ||grad ubar|| <= ||S_R||^1/2 ||u|| for
/// full-order samples. A relative slack of 1e-12 absorbs rounding. Throws
/// InvariantViolation naming the first failing sample (reduced samples are
/// numbered first).
FilterStabilityReport filter_stability_check(const DifferentialFilter& filter, const FomOperators& fom,
                                             const std::vector<Vector>& reduced_samples,
                                             const std::vector<Vector>& full_samples = {});

struct RomEnsembleState {
  double t = 0.0;
  std::vector<Vector> coords;
  std::vector<double> viscosity;

  int size() const { return static_cast<int>(coords.size()); }
};

/// Ensemble-POD stepper; with a filter it becomes the Leray ensemble-POD
/// stepper (both advecting fields filtered). One R x R factorization per
/// step regardless of ensemble size.
class RomStepper {
 public:
  RomStepper(const ReducedOperators& ops, double dt, const DifferentialFilter* filter = nullptr, int threads = 1);

  RomEnsembleState step(const RomEnsembleState& state);
  const SolveCounters& counters() const { return counters_; }

  /// Advecting field of member j's explicit term at the given state:
  /// (filtered) a^j - <a>.
  Vector advecting_fluctuation(const RomEnsembleState& state, int j) const;

 private:
  Vector filtered(const Vector& a) const { return filter_ ? filter_->apply(a) : a; }

  const ReducedOperators* ops_;
  double dt_;
  const DifferentialFilter* filter_;
  int threads_;
  SolveCounters counters_;
};

/// 1 - max_j |nu_j - nu_max| / nu_max, i.e. nu_min / nu_max. Throws
/// DegenerateEpsilon when it is not positive.
double stability_epsilon(const std::vector<double>& viscosity);

struct StabilityRecord {
  long step = 0;          ///< N, number of steps taken
  double t = 0.0;
  int member = 0;
  double eps = 0.0;
  double condition_lhs = 0.0;  ///< (dt / nu_max) ||S_R||^1/2 ||grad filtered fluctuation||^2 at step N-1
  double condition_rhs = 0.0;  ///< eps
  double energy_lhs = 0.0;
  double c_stab = 0.0;

  bool condition_holds() const { return condition_lhs <= condition_rhs; }
  bool bound_holds() const { return energy_lhs <= c_stab; }
};

/// Tracks the computable stability condition (with C_b* = 1) and both sides
/// of the discrete energy bound for every member.
class StabilityMonitor {
 public:
  /// `dual_norm_sq(j, t)` returns ||f^j(t)||^2 in the discrete H^-1 norm.
  StabilityMonitor(const ReducedOperators& ops, const RomStepper& stepper, double dt,
                   const RomEnsembleState& initial, std::function<double(int, double)> dual_norm_sq);

  double epsilon() const { return eps_; }
  /// Records step N-1 -> N for all members.
  void observe(const RomEnsembleState& before, const RomEnsembleState& after);
  const std::vector<StabilityRecord>& records() const { return records_; }

 private:
  const ReducedOperators* ops_;
  const RomStepper* stepper_;
  double dt_;
  double nu_max_;
  double eps_;
  std::function<double(int, double)> dual_norm_sq_;
  long steps_ = 0;
  std::vector<double> running_l2_;   // sum ||a^{n+1}||^2
  std::vector<double> running_force_;
  std::vector<double> initial_part_;  // 1/2 ||a^0||^2 + nu_max dt / 2 ||grad a^0||^2
  std::vector<StabilityRecord> records_;
};

}  // namespace ensrom
