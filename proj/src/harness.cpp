#include "ensrom/harness.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ensrom/errors.hpp"
#include "ensrom/parallel.hpp"

namespace ensrom {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return v;
}

long parse_long(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!trim(item).empty()) out.push_back(parse_double(key, item));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

template <typename Fn>
auto in_phase(const char* phase, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const PhaseError&) {
    throw;
  } catch (const std::exception& e) {
    std::throw_with_nested(PhaseError(phase, e.what()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(const std::vector<double>& values) { rows_.push_back(values); }
  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
    s += '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt(r[i]);
      s += '\n';
    }
    return s;
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

ForceField scaled(const ForceField& f, double s) {
  ForceField out = f;
  out.eval = [g = f.eval, s](double x, double y, double t) {
    const auto v = g(x, y, t);
    return std::array<double, 2>{s * v[0], s * v[1]};
  };
  return out;
}

std::vector<ForceField> member_forces(const ExperimentConfig& config, double scale) {
  return std::vector<ForceField>(config.num_members(), scaled(rotational_force(), scale));
}

RomRun run_rom(const ReducedOperators& rops, const DifferentialFilter* filter, const RomEnsembleState& start,
               long steps, double dt, int threads, const std::function<double(int, double)>* dual_norm_sq) {
  RomRun run;
  RomStepper stepper(rops, dt, filter, threads);
  std::unique_ptr<StabilityMonitor> monitor;
  if (dual_norm_sq) monitor = std::make_unique<StabilityMonitor>(rops, stepper, dt, start, *dual_norm_sq);
  RomEnsembleState state = start;
  run.coords.push_back(state.coords);
  for (long n = 0; n < steps; ++n) {
    RomEnsembleState next = stepper.step(state);
    if (monitor) monitor->observe(state, next);
    state = std::move(next);
    run.coords.push_back(state.coords);
  }
  run.counters = stepper.counters();
  if (monitor) run.stability = monitor->records();
  return run;
}

std::string stability_csv(const std::vector<StabilityRecord>& records) {
  Csv csv({"step", "t", "j", "eps", "condition_lhs", "condition_rhs", "energy_lhs", "c_stab"});
  for (const auto& r : records)
    csv.row({static_cast<double>(r.step), r.t, static_cast<double>(r.member + 1), r.eps, r.condition_lhs,
             r.condition_rhs, r.energy_lhs, r.c_stab});
  return csv.str();
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(bool desk) {
  ExperimentConfig c;
  c.desk = desk;
  if (!desk) {
    c.h = 0.05;
    c.t_end = 6.0;
  }
  return c;
}

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k{
      "desk",    "r1",           "r2",       "cx",         "cy",        "h",           "mesh_file",
      "dt",      "t_start",      "t_end",    "snapshot_interval",       "viscosities", "R",
      "delta",   "output_dir",   "stokes_nu", "fom_scheme", "stability_scale",          "probe_steps",
      "sweep_deltas",            "seed"};
  return k;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  if (key == "desk") desk = parse_bool(key, value);
  else if (key == "r1") geometry.outer_radius = parse_double(key, value);
  else if (key == "r2") geometry.inner_radius = parse_double(key, value);
  else if (key == "cx") geometry.inner_center.x = parse_double(key, value);
  else if (key == "cy") geometry.inner_center.y = parse_double(key, value);
  else if (key == "h") h = parse_double(key, value);
  else if (key == "mesh_file") mesh_file = trim(value);
  else if (key == "dt") dt = parse_double(key, value);
  else if (key == "t_start") t_start = parse_double(key, value);
  else if (key == "t_end") t_end = parse_double(key, value);
  else if (key == "snapshot_interval") snapshot_interval = parse_double(key, value);
  else if (key == "viscosities") viscosities = parse_list(key, value);
  else if (key == "R") R = static_cast<int>(parse_long(key, value));
  else if (key == "delta") delta = parse_double(key, value);
  else if (key == "output_dir") output_dir = trim(value);
  else if (key == "stokes_nu") stokes_nu = parse_double(key, value);
  else if (key == "fom_scheme") fom_scheme = trim(value);
  else if (key == "stability_scale") stability_scale = parse_double(key, value);
  else if (key == "probe_steps") probe_steps = static_cast<int>(parse_long(key, value));
  else if (key == "sweep_deltas") sweep_deltas = parse_list(key, value);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_long(key, value));
  else throw ConfigError("unknown key '" + key + "'");
}

std::string ExperimentConfig::get(const std::string& key) const {
  if (key == "desk") return desk ? "true" : "false";
  if (key == "r1") return fmt(geometry.outer_radius);
  if (key == "r2") return fmt(geometry.inner_radius);
  if (key == "cx") return fmt(geometry.inner_center.x);
  if (key == "cy") return fmt(geometry.inner_center.y);
  if (key == "h") return fmt(h);
  if (key == "mesh_file") return mesh_file;
  if (key == "dt") return fmt(dt);
  if (key == "t_start") return fmt(t_start);
  if (key == "t_end") return fmt(t_end);
  if (key == "snapshot_interval") return fmt(snapshot_interval);
  if (key == "viscosities") return join(viscosities);
  if (key == "R") return std::to_string(R);
  if (key == "delta") return fmt(delta);
  if (key == "output_dir") return output_dir;
  if (key == "stokes_nu") return fmt(stokes_nu);
  if (key == "fom_scheme") return fom_scheme;
  if (key == "stability_scale") return fmt(stability_scale);
  if (key == "probe_steps") return std::to_string(probe_steps);
  if (key == "sweep_deltas") return join(sweep_deltas);
  if (key == "seed") return std::to_string(seed);
  throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  std::vector<std::tuple<std::size_t, std::string, std::string>> entries;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  bool desk = true;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(number, "expected key = value");
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError(number, "empty key");
    if (key == "desk") {
      try {
        desk = parse_bool(key, value);
      } catch (const ConfigError& e) {
        throw ParseError(number, e.what());
      }
    }
    entries.emplace_back(number, key, value);
  }
  ExperimentConfig c = defaults(desk);
  for (const auto& [n, key, value] : entries) {
    try {
      c.set(key, value);
    } catch (const ConfigError& e) {
      throw ParseError(n, e.what());
    }
  }
  return c;
}

std::string ExperimentConfig::to_text() const {
  std::string s;
  for (const auto& k : keys()) s += k + " = " + get(k) + "\n";
  return s;
}

long ExperimentConfig::online_steps() const { return std::lround((t_end - t_start) / dt); }

void ExperimentConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_start >= 0.0) || !(t_end > t_start)) throw ConfigError("need 0 <= t_start < t_end");
  if (!(h > 0.0) && mesh_file.empty()) throw ConfigError("h must be positive");
  if (R < 1) throw ConfigError("R must be at least 1");
  if (!(delta >= 0.0)) throw ConfigError("delta must be non-negative");
  if (viscosities.empty()) throw ConfigError("need at least one viscosity");
  for (double v : viscosities)
    if (!(v > 0.0)) throw ConfigError("viscosities must be positive");
  if (fom_scheme != "backward_euler" && fom_scheme != "ensemble")
    throw ConfigError("fom_scheme must be backward_euler or ensemble");
  if (probe_steps < 0) throw ConfigError("probe_steps must be non-negative");
  SnapshotSchedule::make(dt, t_start, snapshot_interval, t_end);
  const double steps = (t_end - t_start) / dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
    throw ConfigError("online window is not a multiple of dt");
}

OfflineResult run_offline(const ExperimentConfig& config, int threads) {
  config.validate();
  OfflineResult out;
  out.mesh = in_phase("mesh", [&] {
    if (!config.mesh_file.empty()) return load_mesh(read_file(config.mesh_file));
    return generate_offset_annulus(config.geometry, config.h);
  });

  in_phase("fom", [&] {
    out.space = std::make_shared<const TaylorHoodSpace>(out.mesh);
    out.ops = std::make_shared<const FomOperators>(FomOperators::build(out.space));
    const FomOperators& ops = *out.ops;
    const auto sched = SnapshotSchedule::make(config.dt, config.t_start, config.snapshot_interval, config.t_end);
    const int J = config.num_members();
    const long N = sched.end_step;
    const auto forces = member_forces(config, 1.0);

    // Only snapshot states are kept; the energy history is recorded every step.
    SnapshotSet& snaps = out.snapshots;
    snaps.num_realizations = J;
    snaps.per_realization = sched.count();
    snaps.t0 = sched.start_step * config.dt;
    snaps.dt_snap = sched.interval_steps * config.dt;
    snaps.columns.resize(ops.mass.rows(), static_cast<Eigen::Index>(J) * snaps.per_realization);
    out.fom_energy.assign(J, std::vector<double>(N + 1, 0.0));
    auto keep = [&](int j, long n, const Vector& u) {
      out.fom_energy[j][n] = kinetic_energy(ops.mass, u);
      if (sched.records(n)) snaps.columns.col(snaps.column_index(j, static_cast<int>((n - sched.start_step) / sched.interval_steps))) = u;
    };

    std::vector<SolveCounters> counters(J);
    std::vector<Vector> initial(J);
    parallel_for(J, threads, [&](int j) {
      const double nu0 = config.stokes_nu > 0.0 ? config.stokes_nu : config.viscosities[j];
      initial[j] = solve_steady_stokes(ops, forces[j], nu0).velocity;
    });

    if (config.fom_scheme == "ensemble") {
      EnsembleStepper stepper(ops, config.dt, threads);
      EnsembleState state;
      state.velocity = initial;
      state.viscosity = config.viscosities;
      state.force = forces;
      for (int j = 0; j < J; ++j) keep(j, 0, initial[j]);
      for (long n = 0; n < N; ++n) {
        state = stepper.step(state);
        state.t = (n + 1) * config.dt;
        for (int j = 0; j < J; ++j) keep(j, n + 1, state.velocity[j]);
      }
      counters[0] = stepper.counters();
    } else {
      parallel_for(J, threads, [&](int j) {
        Vector u = initial[j];
        keep(j, 0, u);
        for (long n = 0; n < N; ++n) {
          u = step_backward_euler(ops, u, config.viscosities[j], forces[j], (n + 1) * config.dt, config.dt,
                                  &counters[j])
                  .velocity;
          keep(j, n + 1, u);
        }
      });
    }
    for (int j = 0; j < J; ++j) out.counters += counters[j];
    out.fom_time.resize(N + 1);
    for (long n = 0; n <= N; ++n) out.fom_time[n] = n * config.dt;
  });

  out.basis = in_phase("pod", [&] { return compute_pod_basis(out.snapshots, out.ops->mass, config.R); });
  return out;
}

OfflineResult load_offline(const ExperimentConfig& config) {
  config.validate();
  const fs::path dir(config.output_dir);
  OfflineResult out;
  out.mesh = in_phase("mesh", [&] { return load_mesh(read_file(dir / "mesh.txt")); });
  in_phase("fom", [&] {
    out.space = std::make_shared<const TaylorHoodSpace>(out.mesh);
    out.ops = std::make_shared<const FomOperators>(FomOperators::build(out.space));
    out.snapshots = load_snapshots(read_file(dir / "snapshots.txt"));
    if (out.snapshots.columns.rows() != out.space->n_vel())
      throw DimensionMismatch("snapshot length does not match the mesh");
  });
  out.basis = in_phase("pod", [&] { return compute_pod_basis(out.snapshots, out.ops->mass, config.R); });
  return out;
}

void write_offline(const OfflineResult& offline, const ExperimentConfig& config) {
  const fs::path dir(config.output_dir);
  write_file(dir / "config.txt", config.to_text());
  write_file(dir / "mesh.txt", save_mesh(offline.mesh));
  write_file(dir / "snapshots.txt", save_snapshots(offline.snapshots));
  write_file(dir / "basis.txt", save_basis(offline.basis));

  Csv eigs({"i", "lambda"});
  for (Eigen::Index i = 0; i < offline.basis.eigenvalues.size(); ++i)
    eigs.row({static_cast<double>(i + 1), offline.basis.eigenvalues[i]});
  write_file(dir / "eigs.csv", eigs.str());

  if (!offline.fom_energy.empty()) {
    std::vector<std::string> header{"t"};
    for (std::size_t j = 0; j < offline.fom_energy.size(); ++j) header.push_back("ke_j" + std::to_string(j + 1));
    Csv energy(header);
    for (std::size_t n = 0; n < offline.fom_time.size(); ++n) {
      std::vector<double> row{offline.fom_time[n]};
      for (const auto& e : offline.fom_energy) row.push_back(e[n]);
      energy.row(row);
    }
    write_file(dir / "fom_energy.csv", energy.str());

    const auto& c = offline.counters;
    std::string text = "stage,steps,factorizations,solves,factorizations_per_step\n";
    text += "fom_offline," + std::to_string(c.steps) + "," + std::to_string(c.factorizations) + "," +
            std::to_string(c.solves) + "," + fmt(c.steps ? double(c.factorizations) / c.steps : 0.0) + "\n";
    write_file(dir / "timing_offline.csv", text);
  }
}

double kinetic_energy(const SparseMatrix& mass, const Vector& u) { return 0.5 * u.dot(mass * u); }

double kinetic_energy(const Vector& coords) { return 0.5 * coords.squaredNorm(); }

double l2_error(const SparseMatrix& mass, const Vector& u_ref, const PODBasis& basis, const Vector& coords) {
  const Vector e = u_ref - reconstruct(basis, coords);
  return std::sqrt(std::max(0.0, e.dot(mass * e)));
}

std::string export_mode_evolution(const std::vector<double>& time, const std::vector<std::vector<Vector>>& coords) {
  if (time.size() != coords.size()) throw DimensionMismatch("mode evolution: time axis length");
  const Eigen::Index R = coords.empty() || coords.front().empty() ? 0 : coords.front().front().size();
  std::vector<std::string> header{"t"};
  for (Eigen::Index i = 0; i < R; ++i) header.push_back("a" + std::to_string(i + 1));
  Csv csv(header);
  for (std::size_t n = 0; n < time.size(); ++n) {
    const Vector mean = ensemble_mean(coords[n]);
    std::vector<double> row{time[n]};
    for (Eigen::Index i = 0; i < R; ++i) row.push_back(mean[i]);
    csv.row(row);
  }
  return csv.str();
}

RunReport run_online(const ExperimentConfig& config, const OfflineResult& offline, int threads) {
  config.validate();
  const FomOperators& ops = *offline.ops;
  const PODBasis& basis = offline.basis;
  const int J = config.num_members();
  const long steps = config.online_steps();
  if (offline.snapshots.num_realizations != J)
    throw PhaseError("rom", "snapshot set has " + std::to_string(offline.snapshots.num_realizations) +
                                " realizations, config has " + std::to_string(J));
  if (std::abs(offline.snapshots.t0 - config.t_start) > 1e-9)
    throw PhaseError("rom", "snapshots do not start at t_start");

  RunReport report;
  report.time.resize(steps + 1);
  for (long n = 0; n <= steps; ++n) report.time[n] = config.t_start + n * config.dt;

  const auto forces = member_forces(config, 1.0);
  std::vector<Vector> start(J);
  for (int j = 0; j < J; ++j) start[j] = offline.snapshots.columns.col(offline.snapshots.column_index(j, 0));

  // Full-order benchmark, one realization per worker.
  std::vector<std::vector<Vector>> bench(J);
  std::vector<SolveCounters> bench_counters(J);
  in_phase("fom", [&] {
    parallel_for(J, threads, [&](int j) {
      Vector u = start[j];
      bench[j].push_back(u);
      for (long n = 0; n < steps; ++n) {
        u = step_backward_euler(ops, u, config.viscosities[j], forces[j], report.time[n + 1], config.dt,
                                &bench_counters[j])
                .velocity;
        bench[j].push_back(u);
      }
    });
    for (const auto& c : bench_counters) report.benchmark_counters += c;

    EnsembleStepper probe(ops, config.dt, threads);
    EnsembleState state;
    state.t = config.t_start;
    state.velocity = start;
    state.viscosity = config.viscosities;
    state.force = forces;
    for (int n = 0; n < config.probe_steps; ++n) state = probe.step(state);
    report.probe_counters = probe.counters();
  });

  in_phase("rom", [&] {
    const ReducedOperators rops(basis, ops, forces);
    const DifferentialFilter filter(rops, config.delta);
    const DualNorm dual(ops);
    RomEnsembleState init;
    init.t = config.t_start;
    init.viscosity = config.viscosities;
    for (int j = 0; j < J; ++j) init.coords.push_back(project_l2(basis, start[j]));
    report.epsilon = stability_epsilon(config.viscosities);

    auto make_dual = [&](const std::vector<ForceField>& f) {
      std::vector<double> cached(J, -1.0);
      return std::function<double(int, double)>([&dual, &ops, f, cached](int j, double t) mutable {
        if (!f[j].time_dependent && cached[j] >= 0.0) return cached[j];
        const double v = dual.squared(assemble_load(*ops.space, f[j], t));
        if (!f[j].time_dependent) cached[j] = v;
        return v;
      });
    };

    const auto dual_plain = make_dual(forces);
    report.pod = run_rom(rops, nullptr, init, steps, config.dt, threads, nullptr);
    report.leray = run_rom(rops, &filter, init, steps, config.dt, threads, &dual_plain);

    const auto small = member_forces(config, config.stability_scale);
    const ReducedOperators rops_small(basis, ops, small);
    const DifferentialFilter filter_small(rops_small, config.delta);
    RomEnsembleState init_small = init;
    for (auto& a : init_small.coords) a *= config.stability_scale;
    const auto dual_small = make_dual(small);
    report.scaled = run_rom(rops_small, &filter_small, init_small, steps, config.dt, threads, &dual_small);
  });

  auto member_series = [&](std::vector<std::vector<double>>& out) { out.assign(J, std::vector<double>(steps + 1)); };
  member_series(report.ke_benchmark_member);
  member_series(report.ke_pod_member);
  member_series(report.ke_leray_member);
  member_series(report.err_pod_member);
  member_series(report.err_leray_member);
  report.ke_benchmark.resize(steps + 1);
  report.ke_pod.resize(steps + 1);
  report.ke_leray.resize(steps + 1);
  report.err_pod.resize(steps + 1);
  report.err_leray.resize(steps + 1);
  report.benchmark_mean.resize(steps + 1);

  parallel_for(static_cast<int>(steps + 1), threads, [&](int n) {
    std::vector<Vector> members(J);
    double kb = 0.0, kp = 0.0, kl = 0.0;
    for (int j = 0; j < J; ++j) {
      members[j] = bench[j][n];
      const Vector& ap = report.pod.coords[n][j];
      const Vector& al = report.leray.coords[n][j];
      report.ke_benchmark_member[j][n] = kinetic_energy(ops.mass, members[j]);
      report.ke_pod_member[j][n] = kinetic_energy(ap);
      report.ke_leray_member[j][n] = kinetic_energy(al);
      report.err_pod_member[j][n] = l2_error(ops.mass, members[j], basis, ap);
      report.err_leray_member[j][n] = l2_error(ops.mass, members[j], basis, al);
      kb += report.ke_benchmark_member[j][n];
      kp += report.ke_pod_member[j][n];
      kl += report.ke_leray_member[j][n];
    }
    report.ke_benchmark[n] = kb / J;
    report.ke_pod[n] = kp / J;
    report.ke_leray[n] = kl / J;
    report.benchmark_mean[n] = ensemble_mean(members);
    report.err_pod[n] = l2_error(ops.mass, report.benchmark_mean[n], basis, ensemble_mean(report.pod.coords[n]));
    report.err_leray[n] = l2_error(ops.mass, report.benchmark_mean[n], basis, ensemble_mean(report.leray.coords[n]));
  });
  return report;
}

void write_online(const RunReport& report, const ExperimentConfig& config) {
  const fs::path dir(config.output_dir);
  const std::size_t J = report.ke_benchmark_member.size();
  const std::size_t T = report.time.size();

  std::vector<std::string> eh{"t", "ke_benchmark", "ke_pod", "ke_leray"};
  std::vector<std::string> rh{"t", "err_pod", "err_leray"};
  for (std::size_t j = 1; j <= J; ++j) {
    const std::string s = std::to_string(j);
    eh.insert(eh.end(), {"ke_benchmark_j" + s, "ke_pod_j" + s, "ke_leray_j" + s});
    rh.insert(rh.end(), {"err_pod_j" + s, "err_leray_j" + s});
  }
  Csv energy(eh), error(rh);
  for (std::size_t n = 0; n < T; ++n) {
    std::vector<double> e{report.time[n], report.ke_benchmark[n], report.ke_pod[n], report.ke_leray[n]};
    std::vector<double> r{report.time[n], report.err_pod[n], report.err_leray[n]};
    for (std::size_t j = 0; j < J; ++j) {
      e.insert(e.end(), {report.ke_benchmark_member[j][n], report.ke_pod_member[j][n], report.ke_leray_member[j][n]});
      r.insert(r.end(), {report.err_pod_member[j][n], report.err_leray_member[j][n]});
    }
    energy.row(e);
    error.row(r);
  }
  write_file(dir / "energy.csv", energy.str());
  write_file(dir / "error.csv", error.str());
  write_file(dir / "modes_pod.csv", export_mode_evolution(report.time, report.pod.coords));
  write_file(dir / "modes_leray.csv", export_mode_evolution(report.time, report.leray.coords));
  write_file(dir / "stability.csv", stability_csv(report.leray.stability));
  write_file(dir / "stability_scaled.csv", stability_csv(report.scaled.stability));

  const std::vector<std::pair<std::string, const SolveCounters*>> stages{
      {"fom_benchmark", &report.benchmark_counters},
      {"fom_ensemble_probe", &report.probe_counters},
      {"rom_pod", &report.pod.counters},
      {"rom_leray", &report.leray.counters},
      {"rom_leray_scaled", &report.scaled.counters}};
  std::string timing = "stage,steps,factorizations,solves,factorizations_per_step\n";
  std::string seconds = "stage assembly_seconds factor_seconds solve_seconds\n";
  for (const auto& [name, c] : stages) {
    timing += name + "," + std::to_string(c->steps) + "," + std::to_string(c->factorizations) + "," +
              std::to_string(c->solves) + "," + fmt(c->steps ? double(c->factorizations) / c->steps : 0.0) + "\n";
    seconds += name + " " + fmt(c->assembly_seconds) + " " + fmt(c->factor_seconds) + " " + fmt(c->solve_seconds) + "\n";
  }
  write_file(dir / "timing.csv", timing);
  write_file(dir / "timing_seconds.txt", seconds);
}

double time_average(const std::vector<double>& series) {
  if (series.empty()) return 0.0;
  double s = 0.0;
  for (double v : series) s += v;
  return s / static_cast<double>(series.size());
}

double time_average_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionMismatch("series lengths differ");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
  return time_average(d);
}

std::vector<DeltaSweepRow> sweep_delta(const ExperimentConfig& config, const OfflineResult& offline,
                                       const RunReport& reference, const std::vector<double>& deltas, int threads) {
  const FomOperators& ops = *offline.ops;
  const int J = config.num_members();
  const long steps = config.online_steps();
  const auto forces = member_forces(config, 1.0);
  const ReducedOperators rops(offline.basis, ops, forces);
  RomEnsembleState init;
  init.t = config.t_start;
  init.viscosity = config.viscosities;
  for (int j = 0; j < J; ++j)
    init.coords.push_back(
        project_l2(offline.basis, offline.snapshots.columns.col(offline.snapshots.column_index(j, 0))));

  std::vector<DeltaSweepRow> rows(deltas.size());
  parallel_for(static_cast<int>(deltas.size()), threads, [&](int i) {
    const DifferentialFilter filter(rops, deltas[i]);
    const RomRun run = run_rom(rops, &filter, init, steps, config.dt, 1, nullptr);
    std::vector<double> ke(steps + 1), err(steps + 1);
    for (long n = 0; n <= steps; ++n) {
      double k = 0.0;
      for (int j = 0; j < J; ++j) k += kinetic_energy(run.coords[n][j]);
      ke[n] = k / J;
      err[n] = l2_error(ops.mass, reference.benchmark_mean[n], offline.basis, ensemble_mean(run.coords[n]));
    }
    rows[i] = {deltas[i], time_average_abs_diff(ke, reference.ke_benchmark), time_average(err)};
  });
  return rows;
}

std::string sweep_csv(const std::vector<DeltaSweepRow>& rows) {
  Csv csv({"delta", "ke_mismatch", "l2_error"});
  for (const auto& r : rows) csv.row({r.delta, r.ke_mismatch, r.l2_error});
  return csv.str();
}

std::string describe(const std::exception& e) {
  std::string s = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    s += "\n  caused by: " + describe(inner);
  } catch (...) {
    s += "\n  caused by: unknown error";
  }
  return s;
}

}  // namespace ensrom
