#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "ensrom/errors.hpp"
#include "ensrom/harness.hpp"
#include "ensrom/linsolve.hpp"

using namespace ensrom;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Options {
  std::string config_path;
  int threads = 1;
  std::map<std::string, std::string> overrides;
};

ExperimentConfig resolve(const Options& opt) {
  // Command-line keys are appended after the file so they take precedence.
  std::string text = opt.config_path.empty() ? "" : slurp(opt.config_path) + "\n";
  for (const auto& [k, v] : opt.overrides) text += k + " = " + v + "\n";
  ExperimentConfig c = ExperimentConfig::parse(text);
  c.validate();
  return c;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

int cmd_mesh(const ExperimentConfig& c) {
  const Mesh mesh = c.mesh_file.empty() ? generate_offset_annulus(c.geometry, c.h) : load_mesh(slurp(c.mesh_file));
  const MeshReport report = validate(mesh, c.geometry);
  const TaylorHoodSpace space(mesh);
  std::printf("vertices %zu  triangles %zu  edges %zu\n", mesh.num_vertices(), mesh.num_triangles(), mesh.num_edges());
  std::printf("velocity dofs %d  pressure dofs %d  max diameter %.4g\n", space.n_vel(), space.n_pr(),
              mesh.max_diameter());
  for (const auto& p : report.problems) std::printf("problem: %s\n", p.c_str());
  std::filesystem::create_directories(c.output_dir);
  std::ofstream(std::filesystem::path(c.output_dir) / "mesh.txt") << save_mesh(mesh);
  return report.ok() ? 0 : 1;
}

int cmd_offline(const ExperimentConfig& c, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const OfflineResult off = run_offline(c, threads);
  write_offline(off, c);
  std::printf("velocity dofs %d, snapshots %d (%d per realization), rank %d\n", off.space->n_vel(),
              off.snapshots.size(), off.snapshots.per_realization, off.basis.rank);
  std::printf("lambda_1 %.6g  lambda_R %.6g\n", off.basis.eigenvalues[0], off.basis.eigenvalues[c.R - 1]);
  std::printf("offline %.1f s, output in %s\n", seconds_since(t0), c.output_dir.c_str());
  return 0;
}

int cmd_online(const ExperimentConfig& c, int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  const OfflineResult off = load_offline(c);
  const RunReport r = run_online(c, off, threads);
  write_online(r, c);
  std::printf("time-averaged L2 error    ensemble-POD %.6g  Leray %.6g\n", time_average(r.err_pod),
              time_average(r.err_leray));
  std::printf("time-averaged |KE - KE_b|  ensemble-POD %.6g  Leray %.6g\n",
              time_average_abs_diff(r.ke_pod, r.ke_benchmark), time_average_abs_diff(r.ke_leray, r.ke_benchmark));
  auto holds = [](const std::vector<StabilityRecord>& recs, bool cond) {
    for (const auto& s : recs)
      if (cond ? !s.condition_holds() : !s.bound_holds()) return false;
    return true;
  };
  std::printf("eps %.17g\n", r.epsilon);
  std::printf("stability (data as configured): condition %s, bound %s\n", holds(r.leray.stability, true) ? "holds" : "violated",
              holds(r.leray.stability, false) ? "holds" : "violated");
  std::printf("stability (data scaled by %g): condition %s, bound %s\n", c.stability_scale,
              holds(r.scaled.stability, true) ? "holds" : "violated", holds(r.scaled.stability, false) ? "holds" : "violated");
  std::printf("online %.1f s, output in %s\n", seconds_since(t0), c.output_dir.c_str());
  return 0;
}

int cmd_sweep(const ExperimentConfig& c, int threads) {
  const OfflineResult off = load_offline(c);
  const RunReport r = run_online(c, off, threads);
  const auto rows = sweep_delta(c, off, r, c.sweep_deltas, threads);
  std::ofstream(std::filesystem::path(c.output_dir) / "sweep_delta.csv") << sweep_csv(rows);
  const DeltaSweepRow* best = nullptr;
  for (const auto& row : rows) {
    std::printf("delta %-8g  ke_mismatch %.6g  l2_error %.6g\n", row.delta, row.ke_mismatch, row.l2_error);
    if (!best || row.ke_mismatch < best->ke_mismatch) best = &row;
  }
  if (best) std::printf("closest kinetic energy match at delta = %g\n", best->delta);
  return 0;
}

int cmd_verify(const ExperimentConfig& c) {
  const OfflineResult off = load_offline(c);
  const FomOperators& ops = *off.ops;
  const PODBasis& b = off.basis;
  const int R = b.size();
  int failures = 0;
  auto line = [&](const char* name, double value, double tol) {
    const bool ok = value <= tol;
    failures += ok ? 0 : 1;
    std::printf("%-4s %-34s %.3e (tol %.1e)\n", ok ? "ok" : "FAIL", name, value, tol);
  };

  const Matrix gram = b.modes.transpose() * (ops.mass * b.modes);
  line("mode orthonormality", (gram - Matrix::Identity(R, R)).cwiseAbs().maxCoeff(), 1e-10);
  double div = 0.0;
  for (int i = 0; i < R; ++i) div = std::max(div, (ops.divergence * b.modes.col(i)).norm());
  line("mode divergence", div, 1e-8);

  const ProjectionIdentity id = projection_error_identity(off.snapshots, b, ops);
  line("L2 projection identity (rel)", std::abs(id.lhs_l2 - id.rhs_l2) / std::max(id.rhs_l2, 1e-300), 1e-8);
  line("H1 projection identity (rel)", std::abs(id.lhs_h1 - id.rhs_h1) / std::max(id.rhs_h1, 1e-300), 1e-6);

  std::vector<ForceField> forces(c.num_members(), rotational_force());
  const ReducedOperators rops(b, ops, forces);
  double skew = 0.0, scale = 0.0;
  for (const auto& t : rops.convection_tensor()) {
    skew = std::max(skew, (t + t.transpose()).cwiseAbs().maxCoeff());
    scale = std::max(scale, t.cwiseAbs().maxCoeff());
  }
  line("tensor skew-symmetry (rel)", skew / std::max(scale, 1e-300), 1e-12);

  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> normal;
  std::vector<Vector> reduced(100), full(20);
  for (auto& a : reduced) a = Vector::NullaryExpr(R, [&] { return normal(rng); });
  for (auto& v : full) v = Vector::NullaryExpr(ops.mass.rows(), [&] { return normal(rng); });
  const DifferentialFilter filter(rops, c.delta);
  try {
    const auto rep = filter_stability_check(filter, ops, reduced, full);
    line("filter stability (max L2 ratio)", rep.max_l2_ratio, 1.0);
  } catch (const InvariantViolation& e) {
    ++failures;
    std::printf("FAIL filter stability: %s\n", e.what());
  }
  const double eps = stability_epsilon(c.viscosities);
  std::printf("info eps = %.17g\n", eps);
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ensemble POD / Leray ensemble-POD reduced-order experiments on the offset annulus"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");
  app.fallthrough();
  Options opt;
  app.add_option("--config", opt.config_path, "key = value configuration file");
  app.add_option("--threads", opt.threads, "worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
  for (const auto& key : ExperimentConfig::keys())
    app.add_option_function<std::string>("--" + key, [&opt, key](const std::string& v) { opt.overrides[key] = v; },
                                         "config key " + key);

  auto* mesh = app.add_subcommand("mesh", "generate or load a mesh, validate it and write mesh.txt");
  auto* offline = app.add_subcommand("offline", "full-order runs, snapshots and POD basis");
  auto* online = app.add_subcommand("online", "benchmark, ensemble-POD and Leray ensemble-POD runs");
  auto* verify = app.add_subcommand("verify", "check basis and operator invariants on the saved offline data");
  auto* sweep = app.add_subcommand("sweep-delta", "Leray runs over a list of filter radii");

  CLI11_PARSE(app, argc, argv);
  try {
    const ExperimentConfig c = resolve(opt);
    if (mesh->parsed()) return cmd_mesh(c);
    if (offline->parsed()) return cmd_offline(c, opt.threads);
    if (online->parsed()) return cmd_online(c, opt.threads);
    if (verify->parsed()) return cmd_verify(c);
    if (sweep->parsed()) return cmd_sweep(c, opt.threads);
  } catch (const std::exception& e) {
    std::cerr << "error: " << describe(e) << "\n";
    return 2;
  }
  return 0;
}
