#pragma once

#include "propsense/mesh.hpp"

#include <Eigen/Geometry>

#include <vector>

namespace propsense {

/// Rigid transform g(X) = R(q) X + t applied in the mesh frame.
struct RigidPose {
  Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidPose identity() { return {}; }

  /// Builds a pose from [w,x,y,z]; throws InputError unless |q| = 1 within 1e-9.
  static RigidPose from_wxyz(const Eigen::Vector4d& wxyz, const Vec3& translation);

  /// Rotation about `axis` (through `center`) by `angle` radians, followed by `shift`.
  static RigidPose about(const Vec3& axis, double angle, const Vec3& center,
                         const Vec3& shift = Vec3::Zero());

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Vec3 apply(const Vec3& x) const { return rotation * x + translation; }
};

/// Throws InputError if the quaternion is not unit within 1e-9.
void check_pose(const RigidPose& pose);

/// g(X) for every column.
Eigen::Matrix3Xd apply_pose(const RigidPose& pose, const Eigen::Matrix3Xd& points);

/// Vertices constrained by the quadratic penalty. `indices` follow the rigid
/// pose g; `anchor_indices` are held at their rest positions (the mounting
/// base). Anchors may be empty.
struct HandleConstraint {
  std::vector<int> indices;
  Eigen::Matrix3Xd rest_positions;
  std::vector<int> anchor_indices;
  Eigen::Matrix3Xd anchor_positions;

  int num_constrained() const {
    return static_cast<int>(indices.size() + anchor_indices.size());
  }
};

/// Constraint on `indices` (default: the mesh's handle set) plus the mesh's
/// anchor set when `with_anchors` is true.
HandleConstraint make_handle_constraint(const TetMesh& mesh, bool with_anchors = true);
HandleConstraint make_handle_constraint(const TetMesh& mesh, std::vector<int> indices,
                                        std::vector<int> anchors);

/// Target positions of all penalized vertices, handles first, then anchors.
struct PenaltyTargets {
  std::vector<int> indices;
  Eigen::Matrix3Xd positions;
};

PenaltyTargets penalty_targets(const HandleConstraint& handles, const RigidPose& pose);

/// max ||x_i - target_i|| over all penalized vertices (mm).
double constraint_violation(const DeformState& state, const PenaltyTargets& targets);

}  // namespace propsense
