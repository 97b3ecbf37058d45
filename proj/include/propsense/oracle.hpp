#pragma once

#include "propsense/mesh.hpp"
#include "propsense/pose.hpp"

namespace propsense {

struct OracleConfig {
  double omega = 1e5;
  long max_steps = 1000000;
  /// Stop once the max-norm of the preconditioned step is below this (mm).
  double step_tol = 1e-10;
};

struct OracleResult {
  DeformState state;
  long steps = 0;
  double energy = 0.0;
  double gradient_norm = 0.0;
};

/// Reference minimizer of the penalty-augmented symmetric Dirichlet energy
/// by long-run, Jacobi-scaled gradient descent with Armijo backtracking.
/// Shares no code with the Newton solver's energy or assembly; meant for
/// meshes of up to a few hundred elements.
OracleResult descent_oracle(const TetMesh& mesh, const HandleConstraint& handles, const RigidPose& pose,
                            const DeformState& start, const OracleConfig& cfg = {});

}  // namespace propsense
