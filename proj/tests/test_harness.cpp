#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ensrom/errors.hpp"
#include "ensrom/harness.hpp"
#include "support.hpp"

using namespace ensrom;

namespace {

const PODBasis& basis() {
  static const PODBasis b = compute_pod_basis(testing::coarse_snapshots(), testing::coarse_ops().mass, 5);
  return b;
}

ExperimentConfig tiny() {
  ExperimentConfig c = ExperimentConfig::defaults(true);
  c.h = 0.3;
  c.t_start = 0.1;
  c.t_end = 0.2;
  c.snapshot_interval = 0.02;
  c.R = 3;
  c.probe_steps = 1;
  return c;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("config: defaults") {
  const ExperimentConfig desk = ExperimentConfig::defaults(true);
  CHECK(desk.dt == 0.01);
  CHECK(desk.t_start == 3.0);
  CHECK(desk.t_end == 4.5);
  CHECK(desk.snapshot_interval == 0.04);
  CHECK(desk.R == 10);
  CHECK(desk.delta == 0.025);
  CHECK(desk.viscosities == std::vector<double>{0.0016, 0.002});
  CHECK(desk.online_steps() == 150);
  const ExperimentConfig full = ExperimentConfig::defaults(false);
  CHECK_FALSE(full.desk);
  CHECK(full.t_end == 6.0);
  CHECK(full.online_steps() == 300);
  CHECK(full.h < desk.h);
  CHECK_NOTHROW(desk.validate());
  CHECK_NOTHROW(full.validate());
}

TEST_CASE("config: parse, comments, overrides and round trip") {
  const ExperimentConfig c = ExperimentConfig::parse(
      "# a comment\n"
      "desk = false\n"
      "\n"
      "R = 6\n"
      "viscosities = 0.001, 0.003, 0.002\n"
      "delta = 0.01\n"
      "output_dir = somewhere\n");
  CHECK_FALSE(c.desk);
  CHECK(c.t_end == 6.0);
  CHECK(c.R == 6);
  CHECK(c.viscosities == std::vector<double>{0.001, 0.003, 0.002});
  CHECK(c.delta == 0.01);
  CHECK(c.output_dir == "somewhere");
  const ExperimentConfig back = ExperimentConfig::parse(c.to_text());
  CHECK(back.to_text() == c.to_text());
  for (const auto& k : ExperimentConfig::keys()) CHECK(back.get(k) == c.get(k));
}

TEST_CASE("config: errors carry the line number") {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      ExperimentConfig::parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("R = 4\nno equals sign\n") == 2);
  CHECK(line_of("# c\nbogus = 1\n") == 2);
  CHECK(line_of("R = 4\n\ndt = fast\n") == 3);
  CHECK(line_of("desk = maybe\n") == 1);
  CHECK(line_of("viscosities = 0.1, x\n") == 1);
}

TEST_CASE("config: validation") {
  auto bad = [](auto mutate) {
    ExperimentConfig c = ExperimentConfig::defaults(true);
    mutate(c);
    CHECK_THROWS_AS(c.validate(), ConfigError);
  };
  bad([](ExperimentConfig& c) { c.dt = 0.0; });
  bad([](ExperimentConfig& c) { c.R = 0; });
  bad([](ExperimentConfig& c) { c.delta = -0.1; });
  bad([](ExperimentConfig& c) { c.viscosities = {0.001, -0.002}; });
  bad([](ExperimentConfig& c) { c.viscosities.clear(); });
  bad([](ExperimentConfig& c) { c.snapshot_interval = 0.015; });
  bad([](ExperimentConfig& c) { c.t_end = c.t_start; });
  bad([](ExperimentConfig& c) { c.fom_scheme = "rk4"; });
}

TEST_CASE("kinetic energy") {
  const auto& ops = testing::coarse_ops();
  const PODBasis& b = basis();
  CHECK(kinetic_energy(ops.mass, Vector::Zero(ops.space->n_vel())) == 0.0);
  CHECK(kinetic_energy(Vector::Zero(5)) == 0.0);
  Vector e1 = Vector::Zero(5);
  e1[0] = 1.0;
  CHECK(kinetic_energy(e1) == 0.5);
  CHECK(kinetic_energy(ops.mass, b.modes.col(0)) == doctest::Approx(0.5).epsilon(1e-12));
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const Vector a = testing::random_vector(rng, 5);
    CHECK(std::abs(kinetic_energy(a) - kinetic_energy(ops.mass, reconstruct(b, a))) <= 1e-12 * kinetic_energy(a));
  }
}

TEST_CASE("l2 error") {
  const auto& ops = testing::coarse_ops();
  const PODBasis& b = basis();
  const Vector in_span = b.modes * Vector::LinSpaced(5, 1.0, -1.0);
  CHECK(l2_error(ops.mass, in_span, b, project_l2(b, in_span)) <= 1e-12);
  const Vector u = testing::coarse_snapshots().columns.col(7);
  CHECK(l2_error(ops.mass, u, b, Vector::Zero(5)) == doctest::Approx(std::sqrt(u.dot(ops.mass * u))).epsilon(1e-14));
  // The projection is the best approximation in the span.
  const double best = l2_error(ops.mass, u, b, project_l2(b, u));
  std::mt19937_64 rng(5);
  for (int k = 0; k < 10; ++k) {
    const Vector a = project_l2(b, u) + 0.1 * testing::random_vector(rng, 5);
    CHECK(best <= l2_error(ops.mass, u, b, a));
  }
}

TEST_CASE("mode evolution export") {
  const std::vector<double> time{0.0, 0.01, 0.02};
  std::vector<std::vector<Vector>> zero(3, std::vector<Vector>(2, Vector::Zero(4)));
  const auto rows = lines(export_mode_evolution(time, zero));
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == "t,a1,a2,a3,a4");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream in(rows[i]);
    std::string cell;
    int cols = 0;
    while (std::getline(in, cell, ',')) {
      if (cols > 0) CHECK(std::stod(cell) == 0.0);
      ++cols;
    }
    CHECK(cols == 5);
  }
  std::vector<std::vector<Vector>> two(1);
  Vector a(2), b(2);
  a << 1.0, 3.0;
  b << 3.0, -1.0;
  two[0] = {a, b};
  const auto r = lines(export_mode_evolution({0.5}, two));
  CHECK(r[1] == "0.5,2,1");
}

TEST_CASE("time averages") {
  CHECK(time_average({1.0, 2.0, 3.0}) == 2.0);
  CHECK(time_average_abs_diff({1.0, 2.0}, {2.0, 0.0}) == 1.5);
  CHECK_THROWS(time_average_abs_diff({1.0}, {1.0, 2.0}));
}

TEST_CASE("offline errors are tagged with their phase") {
  SUBCASE("pod") {
    ExperimentConfig c = tiny();
    c.R = 500;
    try {
      run_offline(c);
      FAIL("expected PhaseError");
    } catch (const PhaseError& e) {
      CHECK(e.phase() == "pod");
      bool nested_rank = false;
      try {
        std::rethrow_if_nested(e);
      } catch (const RankDeficient&) {
        nested_rank = true;
      }
      CHECK(nested_rank);
      CHECK(describe(e).find("effective rank") != std::string::npos);
    }
  }
  SUBCASE("mesh") {
    ExperimentConfig c = tiny();
    c.geometry.inner_radius = 1.5;
    c.geometry.inner_center = {0.0, 0.0};
    try {
      run_offline(c);
      FAIL("expected PhaseError");
    } catch (const PhaseError& e) {
      CHECK(e.phase() == "mesh");
      bool nested = false;
      try {
        std::rethrow_if_nested(e);
      } catch (const InvalidGeometry&) {
        nested = true;
      }
      CHECK(nested);
    }
  }
}

TEST_CASE("offline snapshot counts follow the schedule") {
  const ExperimentConfig c = tiny();
  const OfflineResult off = run_offline(c);
  CHECK(off.snapshots.per_realization == 6);
  CHECK(off.snapshots.num_realizations == 2);
  CHECK(off.basis.size() == 3);
  CHECK(off.fom_energy.size() == 2);
  CHECK(off.fom_energy[0].size() == 21);
  for (const auto& series : off.fom_energy)
    for (double e : series) CHECK(std::isfinite(e));
  // The stored snapshot at t = 0.1 carries the energy recorded at step 10.
  for (int j = 0; j < 2; ++j) {
    const Vector u = off.snapshots.columns.col(off.snapshots.column_index(j, 0));
    CHECK(kinetic_energy(off.ops->mass, u) == off.fom_energy[j][10]);
  }
}
