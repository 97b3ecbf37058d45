#pragma once

#include "propsense/mesh.hpp"
#include "propsense/pose.hpp"

#include <string>
#include <vector>

namespace propsense {

/// An observable point rigidly attached to one tet; its barycentric
/// coordinates are fixed at calibration and reused in every deformed state.
struct MarkerAttachment {
  int tet = -1;
  BarycentricCoords bc;
};

/// Signed per-axis errors use the convention predicted - truth.
struct ErrorStats {
  std::vector<double> per_axis[3];
  std::vector<double> norms;
  double median_norm = 0.0;
  double mean_norm = 0.0;
};

struct ContactPoint {
  Vec3 position;
  Vec3 normal;  // unit, pointing out of the finger
};

/// Attaches `rest_point` to nearest_tet(mesh, rest_point). Points outside
/// the body (markers on rigid stalks) get extrapolated coordinates.
/// Throws InputError if the point is farther than one bounding-box diagonal
/// from the mesh.
MarkerAttachment calibrate_marker(const TetMesh& mesh, const Vec3& rest_point);

std::vector<Vec3> predict_markers(const DeformState& state, const TetMesh& mesh,
                                  const std::vector<MarkerAttachment>& attachments);

/// Deformed positions of `contact_indices` with unit normals averaged from
/// the adjacent deformed boundary faces (area weighted). Throws InputError if
/// an index is not a boundary vertex.
std::vector<ContactPoint> extract_contact_points(const DeformState& state, const TetMesh& mesh,
                                                 const std::vector<int>& contact_indices);

/// Throws InputError on length mismatch or empty input.
ErrorStats error_stats(const std::vector<Vec3>& predicted, const std::vector<Vec3>& truth);

/// Median of a copy of `values` (mean of the two middle elements for even sizes).
double median(std::vector<double> values);

}  // namespace propsense
