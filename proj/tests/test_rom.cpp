#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <cmath>

#include "ensrom/errors.hpp"
#include "ensrom/rom.hpp"
#include "support.hpp"

using namespace ensrom;

namespace {

const PODBasis& basis() {
  static const PODBasis b = compute_pod_basis(testing::coarse_snapshots(), testing::coarse_ops().mass, 8);
  return b;
}

const ReducedOperators& reduced() {
  static const ReducedOperators r(basis(), testing::coarse_ops(), {rotational_force(), rotational_force()});
  return r;
}

RomEnsembleState rom_state(const std::vector<Vector>& coords, const std::vector<double>& nus) {
  RomEnsembleState s;
  s.coords = coords;
  s.viscosity = nus;
  return s;
}

double sqrt_grad(const Matrix& s, const Vector& a) { return std::sqrt(a.dot(s * a)); }

}  // namespace

TEST_CASE("filter: zero radius is the identity") {
  const DifferentialFilter f(reduced(), 0.0);
  std::mt19937_64 rng(1);
  const Vector a = testing::random_vector(rng, reduced().size());
  CHECK(f.apply(a) == a);
  CHECK_THROWS_AS(DifferentialFilter(reduced(), -0.1), ConfigError);
}

TEST_CASE("filter: stiffness eigenvectors are damped by 1/(1 + delta^2 mu)") {
  const double delta = 0.05;
  const DifferentialFilter f(reduced(), delta);
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced().stiffness());
  for (int i = 0; i < reduced().size(); ++i) {
    const Vector v = es.eigenvectors().col(i);
    const double mu = es.eigenvalues()[i];
    CHECK((f.apply(v) - v / (1.0 + delta * delta * mu)).norm() <= 1e-12);
  }
}

TEST_CASE("filter: weak form residual") {
  const double delta = 0.025;
  const DifferentialFilter f(reduced(), delta);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const Vector a = testing::random_vector(rng, reduced().size());
    const Vector abar = f.apply(a);
    const Vector r = delta * delta * (reduced().stiffness() * abar) + abar - a;
    CHECK(r.norm() <= 1e-10 * a.norm());
  }
  // Full-order input goes through the L2 projection first.
  const auto& ops = testing::coarse_ops();
  const Vector u = testing::random_interior_velocity(rng, *ops.space);
  CHECK((f.apply_full(u) - f.apply(project_l2(basis(), u))).norm() <= 1e-12 * u.norm());
}

TEST_CASE("filter stability estimates") {
  const auto& ops = testing::coarse_ops();
  const int R = reduced().size();
  std::mt19937_64 rng(3);
  for (double delta : {0.0, 0.025, 0.2, 10.0}) {
    const DifferentialFilter f(reduced(), delta);
    std::vector<Vector> red{Vector::Zero(R)};
    std::vector<Vector> full{Vector::Zero(ops.space->n_vel())};
    for (int k = 0; k < 30; ++k) red.push_back(testing::random_vector(rng, R));
    for (int k = 0; k < 5; ++k) full.push_back(testing::random_interior_velocity(rng, *ops.space));
    const FilterStabilityReport rep = filter_stability_check(f, ops, red, full);
    CAPTURE(delta);
    CHECK(rep.samples == red.size() + full.size());
    CHECK(rep.max_l2_ratio <= 1.0 + 1e-12);
    CHECK(rep.max_grad_ratio <= 1.0 + 1e-12);
    CHECK(rep.max_inverse_ratio <= 1.0 + 1e-12);
  }
}

TEST_CASE("rom stepper: rest stays at rest without forcing") {
  const ReducedOperators quiet(basis(), testing::coarse_ops(), {zero_force()});
  RomStepper st(quiet, 0.01);
  const int R = quiet.size();
  RomEnsembleState s = rom_state({Vector::Zero(R), Vector::Zero(R)}, {0.0016, 0.002});
  s = st.step(s);
  CHECK(s.coords[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.coords[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.t == doctest::Approx(0.01));
}

TEST_CASE("rom stepper: identical members stay identical") {
  const DifferentialFilter f(reduced(), 0.025);
  RomStepper st(reduced(), 0.01, &f, 2);
  const Vector a = project_l2(basis(), testing::coarse_snapshots().columns.col(0));
  RomEnsembleState s = rom_state({a, a}, {0.002, 0.002});
  for (int n = 0; n < 5; ++n) s = st.step(s);
  CHECK(s.coords[0] == s.coords[1]);
}

TEST_CASE("rom stepper: zero radius Leray equals the plain scheme bit for bit") {
  const DifferentialFilter f(reduced(), 0.0);
  RomStepper plain(reduced(), 0.01), leray(reduced(), 0.01, &f);
  const SnapshotSet& snaps = testing::coarse_snapshots();
  RomEnsembleState p = rom_state({project_l2(basis(), snaps.columns.col(snaps.column_index(0, 0))),
                                  project_l2(basis(), snaps.columns.col(snaps.column_index(1, 0)))},
                                 {0.0016, 0.002});
  RomEnsembleState l = p;
  for (int n = 0; n < 10; ++n) {
    p = plain.step(p);
    l = leray.step(l);
    CHECK(p.coords[0] == l.coords[0]);
    CHECK(p.coords[1] == l.coords[1]);
  }
}

TEST_CASE("rom stepper: Galerkin consistency with the full-order step on the span") {
  // With one member the explicit terms vanish; the reduced step is the
  // Galerkin projection of the lagged backward Euler step onto the basis.
  const auto& ops = testing::coarse_ops();
  const SnapshotSet& snaps = testing::coarse_snapshots();
  const PODBasis full = compute_pod_basis(snaps, ops.mass, basis().rank);
  const ReducedOperators red(full, ops, {rotational_force()});
  const double dt = 0.01, nu = 0.002;
  const Vector u0 = snaps.columns.col(3);
  const Vector a0 = project_l2(full, u0);
  RomStepper st(red, dt);
  const RomEnsembleState next = st.step(rom_state({a0}, {nu}));

  const Matrix& phi = full.modes;
  const Vector w = phi * a0;
  SparseMatrix k = ops.mass * (1.0 / dt);
  k += assemble_convection(*ops.space, w);
  k += ops.stiffness * nu;
  const Matrix kr = phi.transpose() * (k * phi);
  const Vector rhs = phi.transpose() * (ops.mass * w / dt + assemble_load(*ops.space, rotational_force(), dt));
  const Vector expect = kr.partialPivLu().solve(rhs);
  CHECK((next.coords[0] - expect).norm() <= 1e-9 * expect.norm());
}

TEST_CASE("rom stepper: reduced convection is energy neutral") {
  std::mt19937_64 rng(6);
  const int R = reduced().size();
  for (int k = 0; k < 20; ++k) {
    const Vector g = testing::random_vector(rng, R), a = testing::random_vector(rng, R);
    const Matrix b = reduced().convection_matrix(g);
    CHECK(std::abs(a.dot(b * a)) <= 1e-12 * a.squaredNorm() * std::max(1.0, b.norm()));
  }
}

TEST_CASE("rom stepper: one factorization per step") {
  const DifferentialFilter f(reduced(), 0.025);
  RomStepper st(reduced(), 0.01, &f, 2);
  const int R = reduced().size();
  std::mt19937_64 rng(7);
  RomEnsembleState s = rom_state({testing::random_vector(rng, R), testing::random_vector(rng, R)}, {0.0016, 0.002});
  for (int n = 0; n < 4; ++n) s = st.step(s);
  CHECK(st.counters().steps == 4);
  CHECK(st.counters().factorizations == 4);
  CHECK(st.counters().solves == 8);
  CHECK_THROWS_AS(st.step(rom_state({Vector::Zero(R + 1)}, {0.002})), DimensionMismatch);
  CHECK_THROWS_AS(st.step(rom_state({Vector::Zero(R)}, {0.002, 0.001})), DimensionMismatch);
  CHECK_THROWS_AS(RomStepper(reduced(), 0.0), ConfigError);
}

TEST_CASE("rom stepper: thread count does not change the bits") {
  const DifferentialFilter f(reduced(), 0.025);
  RomStepper one(reduced(), 0.01, &f, 1), four(reduced(), 0.01, &f, 4);
  const int R = reduced().size();
  std::mt19937_64 rng(11);
  std::vector<Vector> a;
  for (int j = 0; j < 4; ++j) a.push_back(testing::random_vector(rng, R));
  RomEnsembleState s = rom_state(a, {0.0016, 0.002, 0.0018, 0.0017}), t = s;
  for (int n = 0; n < 5; ++n) {
    s = one.step(s);
    t = four.step(t);
  }
  for (int j = 0; j < 4; ++j) CHECK(s.coords[j] == t.coords[j]);
}

TEST_CASE("stability epsilon") {
  CHECK(stability_epsilon({0.002, 0.002}) == 1.0);
  CHECK(stability_epsilon({0.0016, 0.002}) == 0.8);
  CHECK(stability_epsilon({0.002}) == 1.0);
  CHECK_THROWS_AS(stability_epsilon({}), DegenerateEpsilon);
  CHECK_THROWS_AS(stability_epsilon({0.0, 0.002}), DegenerateEpsilon);
  CHECK_THROWS_AS(stability_epsilon({-0.001, 0.002}), DegenerateEpsilon);
}

TEST_CASE("stability monitor: zero data gives zero on both sides") {
  const ReducedOperators quiet(basis(), testing::coarse_ops(), {zero_force()});
  const DifferentialFilter f(quiet, 0.025);
  RomStepper st(quiet, 0.01, &f);
  const int R = quiet.size();
  RomEnsembleState s = rom_state({Vector::Zero(R), Vector::Zero(R)}, {0.0016, 0.002});
  StabilityMonitor mon(quiet, st, 0.01, s, [](int, double) { return 0.0; });
  CHECK(mon.epsilon() == 0.8);
  for (int n = 0; n < 3; ++n) {
    const RomEnsembleState next = st.step(s);
    mon.observe(s, next);
    s = next;
  }
  REQUIRE(mon.records().size() == 6);
  for (const auto& r : mon.records()) {
    CHECK(r.condition_lhs == 0.0);
    CHECK(r.energy_lhs == 0.0);
    CHECK(r.c_stab == 0.0);
    CHECK(r.condition_holds());
    CHECK(r.bound_holds());
  }
}

TEST_CASE("stability monitor: recorded quantities match a direct computation") {
  const auto& ops = testing::coarse_ops();
  const DifferentialFilter f(reduced(), 0.025);
  const double dt = 0.01;
  RomStepper st(reduced(), dt, &f);
  const SnapshotSet& snaps = testing::coarse_snapshots();
  RomEnsembleState s = rom_state({project_l2(basis(), snaps.columns.col(snaps.column_index(0, 0))) * 1e-3,
                                  project_l2(basis(), snaps.columns.col(snaps.column_index(1, 0))) * 1e-3},
                                 {0.0016, 0.002});
  const DualNorm dual(ops);
  const double fsq = dual.squared(assemble_load(*ops.space, rotational_force(), 0.0)) * 1e-6;
  StabilityMonitor mon(reduced(), st, dt, s, [&](int, double) { return fsq; });
  const RomEnsembleState first = s;
  std::vector<RomEnsembleState> hist{s};
  for (int n = 0; n < 4; ++n) {
    const RomEnsembleState next = st.step(s);
    mon.observe(s, next);
    s = next;
    hist.push_back(s);
  }
  const Matrix& S = reduced().stiffness();
  const double nu = 0.002, eps = 0.8;
  Eigen::SelfAdjointEigenSolver<Matrix> es(S);
  const double root = std::sqrt(es.eigenvalues().maxCoeff());
  for (const auto& r : mon.records()) {
    const int j = r.member;
    const long N = r.step;
    const Vector mean = 0.5 * (hist[N - 1].coords[0] + hist[N - 1].coords[1]);
    const Vector fl = f.apply(hist[N - 1].coords[j] - mean);
    CHECK(r.condition_lhs == doctest::Approx(dt / nu * root * fl.dot(S * fl)).epsilon(1e-10));
    double sum = 0.0;
    for (long n = 1; n <= N; ++n) sum += hist[n].coords[j].squaredNorm();
    const Vector& a = hist[N].coords[j];
    const double lhs = 0.5 * a.squaredNorm() + 0.5 * nu * dt * std::pow(sqrt_grad(S, a), 2) + 0.25 * eps * nu * dt * sum;
    const Vector& a0 = first.coords[j];
    const double rhs = N * dt / (nu * eps) * fsq + 0.5 * a0.squaredNorm() + 0.5 * nu * dt * a0.dot(S * a0);
    CHECK(r.energy_lhs == doctest::Approx(lhs).epsilon(1e-12));
    CHECK(r.c_stab == doctest::Approx(rhs).epsilon(1e-12));
    CHECK(r.eps == 0.8);
    CHECK(r.condition_rhs == 0.8);
  }
}
