#include "propsense/pose.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace propsense {

RigidPose RigidPose::from_wxyz(const Eigen::Vector4d& wxyz, const Vec3& translation) {
  RigidPose pose;
  pose.rotation = Eigen::Quaterniond(wxyz(0), wxyz(1), wxyz(2), wxyz(3));
  pose.translation = translation;
  check_pose(pose);
  return pose;
}

RigidPose RigidPose::about(const Vec3& axis, double angle, const Vec3& center,
                           const Vec3& shift) {
  RigidPose pose;
  pose.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(angle, axis.normalized()));
  pose.translation = center - pose.rotation * center + shift;
  return pose;
}

void check_pose(const RigidPose& pose) {
  const double norm = pose.rotation.coeffs().norm();
  if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-9) {
    throw InputError("pose: quaternion norm " + std::to_string(norm) + " is not 1");
  }
  if (!pose.translation.allFinite()) throw InputError("pose: non-finite translation");
}

Eigen::Matrix3Xd apply_pose(const RigidPose& pose, const Eigen::Matrix3Xd& points) {
  check_pose(pose);
  const Mat3 r = pose.rotation_matrix();
  Eigen::Matrix3Xd out = r * points;
  out.colwise() += pose.translation;
  return out;
}

HandleConstraint make_handle_constraint(const TetMesh& mesh, bool with_anchors) {
  return make_handle_constraint(mesh, mesh.handle_indices,
                                with_anchors ? mesh.anchor_indices : std::vector<int>{});
}

HandleConstraint make_handle_constraint(const TetMesh& mesh, std::vector<int> indices,
                                        std::vector<int> anchors) {
  const int n = mesh.num_vertices();
  auto gather = [&](const std::vector<int>& ids, const char* what) {
    Eigen::Matrix3Xd pts(3, static_cast<Eigen::Index>(ids.size()));
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InputError(std::string(what) + ": duplicate vertex index");
    }
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= n) {
        throw InputError(std::string(what) + ": vertex index " + std::to_string(ids[i]) +
                         " out of range");
      }
      pts.col(static_cast<Eigen::Index>(i)) = mesh.vertex(ids[i]);
    }
    return pts;
  };
  HandleConstraint hc;
  hc.rest_positions = gather(indices, "handles");
  hc.anchor_positions = gather(anchors, "anchors");
  hc.indices = std::move(indices);
  hc.anchor_indices = std::move(anchors);
  return hc;
}

PenaltyTargets penalty_targets(const HandleConstraint& handles, const RigidPose& pose) {
  PenaltyTargets out;
  out.indices = handles.indices;
  out.indices.insert(out.indices.end(), handles.anchor_indices.begin(),
                     handles.anchor_indices.end());
  out.positions.resize(3, static_cast<Eigen::Index>(out.indices.size()));
  const Eigen::Index p = static_cast<Eigen::Index>(handles.indices.size());
  if (p > 0) out.positions.leftCols(p) = apply_pose(pose, handles.rest_positions);
  if (!handles.anchor_indices.empty()) out.positions.rightCols(handles.anchor_positions.cols()) = handles.anchor_positions;
  return out;
}

double constraint_violation(const DeformState& state, const PenaltyTargets& targets) {
  double worst = 0.0;
  for (size_t i = 0; i < targets.indices.size(); ++i) {
    const double d =
        (state.positions.col(targets.indices[i]) - targets.positions.col(static_cast<Eigen::Index>(i))).norm();
    worst = std::max(worst, d);
  }
  return worst;
}

}  // namespace propsense
