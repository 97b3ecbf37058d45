#pragma once

#include "propsense/energy.hpp"
#include "propsense/pose.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace propsense {

/// The solver objective takes `omega` and `volume_weighted` from here and only
/// the energy kind from EnergyModel.
struct SolverConfig {
  double omega = 1e5;
  /// Stop when ||grad|| <= epsilon (energy per mm).
  double epsilon = 1e-4;
  int max_iters = 100;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  /// Fraction of the first element-inversion step the line search may take.
  double inversion_guard = 0.9;
  /// Added to the Hessian diagonal before factorization.
  double regularization = 1e-9;
  int arap_iters = 10;
  HessianProjection projection = HessianProjection::Analytic;
  bool volume_weighted = false;

  void validate() const;
};

enum class SolveStatus { Converged, MaxIterations, LineSearchStalled, FixedIterations };

const char* to_string(SolveStatus status);

struct SolveReport {
  DeformState final_state;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  double final_energy = 0.0;
  double constraint_violation = 0.0;  // mm
  double wall_time = 0.0;             // s
  SolveStatus status = SolveStatus::Converged;
  std::string method;
  /// Objective after the warm start and after every accepted iteration.
  std::vector<double> energy_history;
  /// Smallest det(A) over all tets at the same points.
  std::vector<double> min_det_history;
};

/// Projected-Newton minimization of the penalty-augmented energy. Each step
/// solves (H + reg I) dx = -grad on the PSD-projected Hessian, caps the step
/// at inversion_guard times the first root of det(A(alpha)) = 0 over all
/// elements, then backtracks until the Armijo condition holds. Throws
/// InputError for a non-finite or inverted warm start and NumericalError when
/// the factorization fails.
SolveReport solve_newton(const TetMesh& mesh, const EnergyModel& model,
                         const HandleConstraint& handles, const RigidPose& pose,
                         const DeformState& warm_start, const SolverConfig& cfg);

/// ARAP local/global baseline: exactly cfg.arap_iters alternations of
/// per-element closest rotations and a linear least-squares solve whose
/// matrix is factored once per call.
SolveReport solve_arap(const TetMesh& mesh, const HandleConstraint& handles,
                       const RigidPose& pose, const DeformState& warm_start,
                       const SolverConfig& cfg);

/// Newton solver bound to one mesh and handle set; reuses the Hessian
/// pattern and symbolic factorization across solves.
class NewtonSolver {
 public:
  NewtonSolver(const TetMesh& mesh, const EnergyModel& model, const HandleConstraint& handles,
               const SolverConfig& cfg);
  ~NewtonSolver();
  NewtonSolver(NewtonSolver&&) noexcept;

  SolveReport solve(const RigidPose& pose, const DeformState& warm_start);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// ARAP local/global solver bound to one mesh and handle set; the global
/// system matrix is assembled and factored in the constructor.
class ArapSolver {
 public:
  ArapSolver(const TetMesh& mesh, const HandleConstraint& handles, const SolverConfig& cfg);
  ~ArapSolver();
  ArapSolver(ArapSolver&&) noexcept;

  SolveReport solve(const RigidPose& pose, const DeformState& warm_start);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

enum class SolverMethod { Newton, Arap };

struct FrameResult {
  std::optional<SolveReport> report;
  std::string error;  // set when the frame failed
};

/// Solves a pose sequence, warm-starting each frame from the previous
/// successful frame's solution (rest for the first frame). Setup work
/// (sparsity pattern, symbolic factorization, ARAP system matrix) is done
/// once for the whole sequence.
std::vector<FrameResult> track_sequence(const TetMesh& mesh, const EnergyModel& model,
                                        const HandleConstraint& handles,
                                        const std::vector<RigidPose>& poses,
                                        const SolverConfig& cfg,
                                        SolverMethod method = SolverMethod::Newton);

/// Smallest alpha in (0, limit] with det(M0 + alpha M1) = 0, or `limit` if
/// none. Requires det(M0) > 0; returns 0 otherwise.
double first_inversion_step(const Mat3& M0, const Mat3& M1, double limit);

}  // namespace propsense
