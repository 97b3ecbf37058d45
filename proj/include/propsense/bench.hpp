#pragma once

#include "propsense/oracle.hpp"
#include "propsense/solver.hpp"
#include "propsense/synth.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace propsense {

struct BenchConfig {
  SolverConfig solver;
  int frames_per_motion = 10;
  std::vector<double> omegas = {1e2, 1e3, 1e4, 1e5, 1e6, 1e7};
  /// Gradient tolerance of the converged reference solves.
  double reference_epsilon = 1e-8;
  OracleConfig oracle;
  int oracle_poses = 10;
  std::uint64_t seed = 1;
};

/// Timing and accuracy of one method on one mesh over the motion ramps.
/// Per-frame times cover the warm-started solve call only.
struct BenchRow {
  std::string method;
  int elements = 0;
  int frames = 0;
  int failed_frames = 0;
  double median_frame_time = 0.0;  // s
  double mean_frame_time = 0.0;    // s
  double mean_error = 0.0;         // mm, mean node distance to the converged reference
  double mean_sd_objective = 0.0;  // penalty-augmented symmetric Dirichlet energy of the results
};

struct OmegaRow {
  double omega = 0.0;
  double constraint_violation = 0.0;  // mm
  double mean_error = 0.0;            // mm, vs the largest-omega solution
  double energy = 0.0;
};

/// Mean node errors against the descent oracle on a small mesh.
struct OracleComparison {
  int elements = 0;
  int poses = 0;
  double newton_error = 0.0;       // mm
  double arap_error = 0.0;         // mm
  double newton_max_distance = 0.0;  // mm, worst node over all poses
  double bbox_diagonal = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<OmegaRow> omega_sweep;
  std::optional<OracleComparison> oracle;
};

/// Newton and ARAP rows for one mesh. Both solvers are persistent across
/// frames, so setup is excluded from the per-frame times.
std::vector<BenchRow> time_methods(const TetMesh& mesh, const BenchConfig& cfg);

/// Newton from rest at `pose` for every omega in cfg.omegas.
std::vector<OmegaRow> omega_sweep(const TetMesh& mesh, const RigidPose& pose, const BenchConfig& cfg);

/// Random poses about the handle centroid; Newton and ARAP vs the oracle.
OracleComparison oracle_comparison(const TetMesh& mesh, const BenchConfig& cfg);

/// Mean and max node distance between two states.
std::pair<double, double> node_distance(const DeformState& a, const DeformState& b);

nlohmann::json to_json(const BenchResult& result);

}  // namespace propsense
