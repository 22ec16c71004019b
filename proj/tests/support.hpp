#pragma once

#include <memory>
#include <random>

#include "ensrom/fem.hpp"
#include "ensrom/fom.hpp"
#include "ensrom/mesh.hpp"
#include "ensrom/pod.hpp"

namespace testing {

using namespace ensrom;

inline const Mesh& coarse_mesh() {
  static const Mesh mesh = generate_offset_annulus(AnnulusGeometry{}, 0.3);
  return mesh;
}

inline std::shared_ptr<const TaylorHoodSpace> coarse_space() {
  static const auto space = std::make_shared<const TaylorHoodSpace>(coarse_mesh());
  return space;
}

inline const FomOperators& coarse_ops() {
  static const FomOperators ops = FomOperators::build(coarse_space());
  return ops;
}

/// Two short backward Euler trajectories (nu = 0.0016, 0.002) on the coarse
/// mesh, sampled every other step from t = 0.1 to t = 0.4.
inline const SnapshotSet& coarse_snapshots() {
  static const SnapshotSet set = [] {
    const auto& ops = coarse_ops();
    const ForceField f = rotational_force();
    std::vector<std::vector<Vector>> traj(2);
    const double nus[2] = {0.0016, 0.002};
    for (int j = 0; j < 2; ++j) {
      Vector u = solve_steady_stokes(ops, f, nus[j]).velocity;
      traj[j].push_back(u);
      for (int n = 0; n < 40; ++n) {
        u = step_backward_euler(ops, u, nus[j], f, (n + 1) * 0.01, 0.01).velocity;
        traj[j].push_back(u);
      }
    }
    return record_snapshots(traj, 0.01, 0.1, 0.02);
  }();
  return set;
}

inline Vector random_vector(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  return Vector::NullaryExpr(n, [&] { return normal(rng); });
}

/// Random velocity vector vanishing on the Dirichlet DOFs.
inline Vector random_interior_velocity(std::mt19937_64& rng, const TaylorHoodSpace& space) {
  Vector v = random_vector(rng, space.n_vel());
  for (int d : space.constrained_dofs()) v[d] = 0.0;
  return v;
}

}  // namespace testing
