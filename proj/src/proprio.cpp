#include "propsense/proprio.hpp"

#include <algorithm>
#include <numeric>

namespace propsense {

MarkerAttachment calibrate_marker(const TetMesh& mesh, const Vec3& rest_point) {
  if (!rest_point.allFinite()) throw InputError("marker: non-finite rest position");
  const Vec3 lo = mesh.vertices.rowwise().minCoeff();
  const Vec3 hi = mesh.vertices.rowwise().maxCoeff();
  const Vec3 outside = (lo - rest_point).cwiseMax(rest_point - hi).cwiseMax(0.0);
  if (outside.norm() > mesh.bbox_diagonal()) {
    throw InputError("marker: rest position is more than one bounding-box diagonal from the mesh");
  }
  MarkerAttachment a;
  a.tet = nearest_tet(mesh, rest_point);
  a.bc = barycentric_coords(mesh, a.tet, rest_point);
  return a;
}

std::vector<Vec3> predict_markers(const DeformState& state, const TetMesh& mesh,
                                  const std::vector<MarkerAttachment>& attachments) {
  std::vector<Vec3> out;
  out.reserve(attachments.size());
  for (const MarkerAttachment& a : attachments) out.push_back(interpolate(state, mesh, a.tet, a.bc));
  return out;
}

std::vector<ContactPoint> extract_contact_points(const DeformState& state, const TetMesh& mesh,
                                                 const std::vector<int>& contact_indices) {
  check_state(mesh, state);
  const int n = mesh.num_vertices();
  std::vector<Vec3> accum(n, Vec3::Zero());
  std::vector<char> on_boundary(n, 0);
  for (const BoundaryFace& f : boundary_faces(mesh)) {
    const Vec3 a = state.positions.col(f.v[0]);
    const Vec3 b = state.positions.col(f.v[1]);
    const Vec3 c = state.positions.col(f.v[2]);
    // Cross product length is twice the area, so this is area weighting.
    const Vec3 weighted = (b - a).cross(c - a);
    for (int v : f.v) {
      accum[v] += weighted;
      on_boundary[v] = 1;
    }
  }
  std::vector<ContactPoint> out;
  out.reserve(contact_indices.size());
  for (int i : contact_indices) {
    if (i < 0 || i >= n) throw InputError("contact index " + std::to_string(i) + " out of range");
    if (!on_boundary[i]) {
      throw InputError("contact index " + std::to_string(i) + " is not a boundary vertex");
    }
    const double len = accum[i].norm();
    if (!(len > 0.0)) throw NumericalError("contact " + std::to_string(i) + ": degenerate normal");
    out.push_back({state.positions.col(i), accum[i] / len});
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

ErrorStats error_stats(const std::vector<Vec3>& predicted, const std::vector<Vec3>& truth) {
  if (predicted.size() != truth.size()) {
    throw InputError("error_stats: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(truth.size()) + " truth points");
  }
  if (predicted.empty()) throw InputError("error_stats: no samples");
  ErrorStats s;
  for (auto& axis : s.per_axis) axis.reserve(predicted.size());
  s.norms.reserve(predicted.size());
  for (size_t i = 0; i < predicted.size(); ++i) {
    const Vec3 e = predicted[i] - truth[i];
    for (int k = 0; k < 3; ++k) s.per_axis[k].push_back(e(k));
    s.norms.push_back(e.norm());
  }
  s.median_norm = median(s.norms);
  s.mean_norm = std::accumulate(s.norms.begin(), s.norms.end(), 0.0) / static_cast<double>(s.norms.size());
  return s;
}

}  // namespace propsense
