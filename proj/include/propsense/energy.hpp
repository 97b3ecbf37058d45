#pragma once

#include "propsense/mesh.hpp"
#include "propsense/pose.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace propsense {

enum class EnergyKind { SymmetricDirichlet, Arap };

struct EnergyModel {
  EnergyKind kind = EnergyKind::SymmetricDirichlet;
  double omega = 1e5;
  /// Weight each element by its rest volume. Off by default: element
  /// energies are summed unweighted.
  bool volume_weighted = false;
};

/// How the Hessian is made positive semidefinite.
enum class HessianProjection {
  /// Exact Hessian, possibly indefinite.
  None,
  /// Clamp the closed-form eigenvalues of d2Psi/dA2 (9x9) before mapping to
  /// the 12x12 element block. Default for the solver.
  Analytic,
  /// Eigen-decompose each assembled 12x12 element block and clamp.
  Element,
};

/// Eigenvalues below this are clamped to it during projection.
inline constexpr double kProjectionFloor = 1e-8;

using Mat9 = Eigen::Matrix<double, 9, 9>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Vec12 = Eigen::Matrix<double, 12, 1>;

struct ObjectiveEval {
  double energy = 0.0;
  Eigen::VectorXd gradient;               // 3n, vertex-major (x0,y0,z0,x1,...)
  Eigen::SparseMatrix<double> hessian;    // 3n x 3n, full symmetric storage
  bool has_hessian = false;
};

/// A = D_s(x) D_m^-1.
Mat3 deformation_gradient(const TetMesh& mesh, const DeformState& state, int tet);

/// Element energy. SymmetricDirichlet: ||A||^2 + ||A^-1||^2, or +infinity when
/// det(A) <= 0. Arap: ||A - R(A)||^2.
double psi_element(const Mat3& A, EnergyKind kind);

/// Rotation nearest to A in the Frobenius norm: U diag(1,1,sign det(UV^T)) V^T,
/// singular values ordered largest first.
Mat3 closest_rotation(const Mat3& A);

/// dPsi/dA. Undefined for an inverted A under SymmetricDirichlet.
Mat3 psi_gradient(const Mat3& A, EnergyKind kind);

/// d2Psi/dA2 on column-major vec(A). `project` clamps eigenvalues to
/// kProjectionFloor. For Arap this is the Hessian of the rotation-variant
/// singular value form, which is exact wherever the SVD is non-degenerate.
Mat9 psi_hessian(const Mat3& A, EnergyKind kind, bool project);

/// 4x3 map with A = X B, X = [x0 x1 x2 x3].
Eigen::Matrix<double, 4, 3> shape_gradients(const Mat3& dm_inv);

/// Sum of element energies (volume-weighted if the model says so).
double total_energy(const TetMesh& mesh, const DeformState& state, const EnergyModel& model);

/// Penalty-augmented objective: total_energy + omega * sum ||x_h - g(X_h)||^2.
ObjectiveEval augmented_objective(const TetMesh& mesh, const DeformState& state,
                                  const EnergyModel& model, const HandleConstraint& handles,
                                  const RigidPose& pose,
                                  HessianProjection projection = HessianProjection::Analytic);

/// Reusable evaluator for one (mesh, model, penalized-vertex set). Holds the
/// Hessian sparsity pattern and per-entry scatter offsets so repeated
/// evaluations write straight into the compressed storage. Element work is
/// computed into per-element buffers and reduced serially in element order,
/// so results do not depend on the thread count.
class ObjectiveAssembler {
 public:
  ObjectiveAssembler(const TetMesh& mesh, EnergyModel model);

  const TetMesh& mesh() const { return *mesh_; }
  const EnergyModel& model() const { return model_; }

  /// Per-element energies (weighted); +inf marks an inverted element.
  void element_energies(const DeformState& state, std::vector<double>& out) const;

  double penalty(const DeformState& state, const PenaltyTargets& targets) const;

  ObjectiveEval evaluate(const DeformState& state, const PenaltyTargets& targets,
                         bool with_hessian,
                         HessianProjection projection = HessianProjection::Analytic) const;

  /// Offsets of the 3n diagonal entries in hessian.valuePtr().
  const std::vector<int>& diagonal_slots() const { return diag_slots_; }

 private:
  const TetMesh* mesh_;
  EnergyModel model_;
  Eigen::SparseMatrix<double> pattern_;
  std::vector<int> slots_;  // 144 per tet, row-major over local (a, b)
  std::vector<int> diag_slots_;
};

/// Smallest det(A_t) over all tets.
double min_jacobian(const TetMesh& mesh, const DeformState& state);

}  // namespace propsense
