#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ensrom/fem.hpp"
#include "ensrom/fom.hpp"
#include "ensrom/mesh.hpp"
#include "ensrom/pod.hpp"
#include "ensrom/rom.hpp"

namespace ensrom {

/// Experiment parameters, read from flat `key = value` text. Lines starting
/// with '#' are comments. `desk` selects the family of defaults and must come
/// before keys it would otherwise override.
struct ExperimentConfig {
  AnnulusGeometry geometry;
  double h = 0.1;
  std::string mesh_file;
  double dt = 0.01;
  double t_start = 3.0;           ///< first snapshot and start of the online window
  double t_end = 4.5;
  double snapshot_interval = 0.04;
  std::vector<double> viscosities{0.0016, 0.002};
  int R = 10;
  double delta = 0.025;
  std::string output_dir = "out";
  bool desk = true;
  double stokes_nu = 0.0;         ///< viscosity of the initial Stokes solve; <= 0 uses each nu_j
  std::string fom_scheme = "backward_euler";  ///< or "ensemble"
  double stability_scale = 1e-3;  ///< data scaling of the extra monitored Leray run
  int probe_steps = 5;            ///< steps of the full-order ensemble probe in the online phase
  std::vector<double> sweep_deltas{0.0, 0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05, 0.075, 0.1};
  std::uint64_t seed = 1;

  static ExperimentConfig defaults(bool desk);
  static ExperimentConfig parse(const std::string& text);
  static const std::vector<std::string>& keys();

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  std::string to_text() const;
  /// Throws ConfigError on inconsistent values.
  void validate() const;

  int num_members() const { return static_cast<int>(viscosities.size()); }
  long online_steps() const;
};

/// Products of the offline phase. Every object is rebuilt deterministically
/// from the configuration (or from saved mesh and snapshot files).
struct OfflineResult {
  Mesh mesh;
  std::shared_ptr<const TaylorHoodSpace> space;
  std::shared_ptr<const FomOperators> ops;
  SnapshotSet snapshots;
  PODBasis basis;
  SolveCounters counters;
  std::vector<double> fom_time;
  std::vector<std::vector<double>> fom_energy;  ///< [j][n]
};

/// Mesh, per-realization Stokes start and time stepping to t_end, snapshots
/// from t_start, POD with R modes. Errors are rethrown as PhaseError
/// ("mesh", "fom", "pod") nesting the original exception.
OfflineResult run_offline(const ExperimentConfig& config, int threads = 1);

/// Rebuilds the offline products from `mesh.txt` and `snapshots.txt` in the
/// output directory.
OfflineResult load_offline(const ExperimentConfig& config);

/// Writes mesh.txt, snapshots.txt, basis.txt, eigs.csv and fom_energy.csv.
void write_offline(const OfflineResult& offline, const ExperimentConfig& config);

struct RomRun {
  std::vector<std::vector<Vector>> coords;  ///< [n][j]
  SolveCounters counters;
  std::vector<StabilityRecord> stability;
};

/// Series over the online window; every vector has online_steps() + 1 entries.
struct RunReport {
  std::vector<double> time;
  std::vector<double> ke_benchmark, ke_pod, ke_leray;  ///< mean over members of the kinetic energy
  std::vector<std::vector<double>> ke_benchmark_member, ke_pod_member, ke_leray_member;  ///< [j][n]
  std::vector<double> err_pod, err_leray;  ///< ||<u_bench> - Phi <a>|| (ensemble-average variant)
  std::vector<std::vector<double>> err_pod_member, err_leray_member;  ///< ||u_bench^j - Phi a^j||
  std::vector<Vector> benchmark_mean;  ///< <u_bench> per time level
  RomRun pod, leray, scaled;
  SolveCounters benchmark_counters, probe_counters;
  double epsilon = 0.0;
};

RunReport run_online(const ExperimentConfig& config, const OfflineResult& offline, int threads = 1);

/// Writes energy.csv, error.csv, modes_pod.csv, modes_leray.csv,
/// stability.csv, stability_scaled.csv, timing.csv and timing_seconds.txt.
void write_online(const RunReport& report, const ExperimentConfig& config);

/// 1/2 u^T M u.
double kinetic_energy(const SparseMatrix& mass, const Vector& u);
/// 1/2 |a|^2 for coordinates in an M-orthonormal basis.
double kinetic_energy(const Vector& coords);
/// ||u_ref - Phi a||_{L2}.
double l2_error(const SparseMatrix& mass, const Vector& u_ref, const PODBasis& basis, const Vector& coords);

/// CSV of the ensemble-mean coefficients: t, a1, ..., aR.
std::string export_mode_evolution(const std::vector<double>& time, const std::vector<std::vector<Vector>>& coords);

struct DeltaSweepRow {
  double delta = 0.0;
  double ke_mismatch = 0.0;  ///< time average of |KE_leray - KE_benchmark|
  double l2_error = 0.0;     ///< time average of the ensemble-average error
};

/// Leray runs for each radius against the benchmark of `reference`.
std::vector<DeltaSweepRow> sweep_delta(const ExperimentConfig& config, const OfflineResult& offline,
                                       const RunReport& reference, const std::vector<double>& deltas,
                                       int threads = 1);
std::string sweep_csv(const std::vector<DeltaSweepRow>& rows);

double time_average(const std::vector<double>& series);
double time_average_abs_diff(const std::vector<double>& a, const std::vector<double>& b);

/// Message of an exception and every exception nested inside it.
std::string describe(const std::exception& e);

}  // namespace ensrom
