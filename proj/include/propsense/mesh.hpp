#pragma once

#include "propsense/common.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace propsense {

using Tet = std::array<int, 4>;

/// Rest-state tetrahedral discretization of the soft body, in millimetres.
///
/// Built only through `build_mesh`/`load_mesh`, which validate indices, fix the
/// orientation of every element so that its rest volume is positive, and
/// precompute the inverse edge matrix D_m^-1 of each element. Immutable after
/// construction.
struct TetMesh {
  Eigen::Matrix3Xd vertices;
  std::vector<Tet> tets;
  std::vector<Mat3> rest_dm_inv;
  std::vector<double> rest_volume;

  // Vertex sets carried by the mesh file.
  std::vector<int> handle_indices;   // aggregated multi-handle (AMH) nodes
  std::vector<int> contact_indices;  // contact interface nodes
  std::vector<int> anchor_indices;   // nodes held at rest (mounting base); may be empty

  int num_vertices() const { return static_cast<int>(vertices.cols()); }
  int num_tets() const { return static_cast<int>(tets.size()); }
  Vec3 vertex(int i) const { return vertices.col(i); }

  /// Length of the rest bounding-box diagonal.
  double bbox_diagonal() const;
};

/// Deformed vertex positions, one column per mesh vertex.
struct DeformState {
  Eigen::Matrix3Xd positions;

  static DeformState rest(const TetMesh& mesh) { return {mesh.vertices}; }
  int size() const { return static_cast<int>(positions.cols()); }
};

struct BarycentricCoords {
  Eigen::Vector4d lambda = Eigen::Vector4d::Constant(0.25);
};

struct BoundaryFace {
  std::array<int, 3> v;
  int owner_tet = -1;
  Vec3 rest_normal;  // unit, pointing out of the owning tet
};

/// Tolerance below which |rest volume| marks a tet as degenerate (mm^3).
inline constexpr double kDegenerateVolume = 1e-9;

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

/// Validates and precomputes a mesh. Tets with negative rest volume get their
/// last two indices swapped. Throws InputError on out-of-range indices,
/// degenerate tets or invalid vertex sets.
TetMesh build_mesh(Eigen::Matrix3Xd vertices, std::vector<Tet> tets,
                   std::vector<int> handle_indices = {},
                   std::vector<int> contact_indices = {},
                   std::vector<int> anchor_indices = {});

/// Reads a mesh JSON document (see io.hpp) and validates it.
TetMesh load_mesh(const std::filesystem::path& path);

void check_state(const TetMesh& mesh, const DeformState& state);

/// Solves sum(lambda_i X_i) = point with sum(lambda_i) = 1 on the rest
/// vertices of `tet`. Components may be negative for exterior points.
BarycentricCoords barycentric_coords(const TetMesh& mesh, int tet, const Vec3& point);

/// sum(lambda_i x_i) over the deformed positions of the tet's vertices.
Vec3 interpolate(const DeformState& state, const TetMesh& mesh, int tet,
                 const BarycentricCoords& bc);

/// Index of a tet containing `point` (all lambda >= -1e-9), else the tet with
/// the nearest centroid. Ties go to the lowest index.
int nearest_tet(const TetMesh& mesh, const Vec3& point);

/// Faces that belong to exactly one tet, wound so the rest normal points away
/// from the owning tet. Sorted by (owner tet, local face).
std::vector<BoundaryFace> boundary_faces(const TetMesh& mesh);

/// Sorted unique vertex indices touched by boundary faces.
std::vector<int> boundary_vertices(const TetMesh& mesh);

}  // namespace propsense
