#include "propsense/mesh.hpp"

#include "propsense/io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <string>

namespace propsense {

namespace {

// Faces of a positively oriented tet (a,b,c,d) with outward winding.
constexpr std::array<std::array<int, 3>, 4> kLocalFaces = {{
    {1, 2, 3},
    {0, 3, 2},
    {0, 1, 3},
    {0, 2, 1},
}};

void check_vertex_set(const std::vector<int>& set, int n, const char* name) {
  std::vector<int> sorted = set;
  std::sort(sorted.begin(), sorted.end());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 0 || sorted[i] >= n) {
      throw InputError(std::string(name) + ": vertex index " + std::to_string(sorted[i]) +
                       " out of range [0, " + std::to_string(n) + ")");
    }
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      throw InputError(std::string(name) + ": duplicate vertex index " +
                       std::to_string(sorted[i]));
    }
  }
}

Mat3 edge_matrix(const Eigen::Matrix3Xd& x, const Tet& t) {
  Mat3 d;
  d.col(0) = x.col(t[1]) - x.col(t[0]);
  d.col(1) = x.col(t[2]) - x.col(t[0]);
  d.col(2) = x.col(t[3]) - x.col(t[0]);
  return d;
}

}  // namespace

double TetMesh::bbox_diagonal() const {
  if (vertices.cols() == 0) return 0.0;
  const Vec3 lo = vertices.rowwise().minCoeff();
  const Vec3 hi = vertices.rowwise().maxCoeff();
  return (hi - lo).norm();
}

double signed_volume(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  return (b - a).dot((c - a).cross(d - a)) / 6.0;
}

TetMesh build_mesh(Eigen::Matrix3Xd vertices, std::vector<Tet> tets,
                   std::vector<int> handle_indices, std::vector<int> contact_indices,
                   std::vector<int> anchor_indices) {
  const int n = static_cast<int>(vertices.cols());
  if (!vertices.allFinite()) throw InputError("mesh: non-finite vertex coordinate");
  if (tets.empty()) throw InputError("mesh: no tetrahedra");

  TetMesh mesh;
  mesh.rest_dm_inv.reserve(tets.size());
  mesh.rest_volume.reserve(tets.size());
  for (size_t t = 0; t < tets.size(); ++t) {
    Tet& tet = tets[t];
    for (int v : tet) {
      if (v < 0 || v >= n) {
        throw InputError("mesh: tet " + std::to_string(t) + " references vertex " +
                         std::to_string(v) + " out of range [0, " + std::to_string(n) + ")");
      }
    }
    double vol = signed_volume(vertices.col(tet[0]), vertices.col(tet[1]),
                               vertices.col(tet[2]), vertices.col(tet[3]));
    if (std::abs(vol) < kDegenerateVolume) {
      throw InputError("mesh: degenerate tet " + std::to_string(t) + " (volume " +
                       std::to_string(vol) + " mm^3)");
    }
    if (vol < 0.0) {
      std::swap(tet[2], tet[3]);
      vol = -vol;
    }
    mesh.rest_volume.push_back(vol);
    mesh.rest_dm_inv.push_back(edge_matrix(vertices, tet).inverse());
  }

  check_vertex_set(handle_indices, n, "handle_indices");
  check_vertex_set(contact_indices, n, "contact_indices");
  check_vertex_set(anchor_indices, n, "anchor_indices");
  std::vector<int> h = handle_indices, a = anchor_indices, both;
  std::sort(h.begin(), h.end());
  std::sort(a.begin(), a.end());
  std::set_intersection(h.begin(), h.end(), a.begin(), a.end(), std::back_inserter(both));
  if (!both.empty()) {
    throw InputError("mesh: vertex " + std::to_string(both.front()) +
                     " is both a handle and an anchor");
  }

  mesh.vertices = std::move(vertices);
  mesh.tets = std::move(tets);
  mesh.handle_indices = std::move(handle_indices);
  mesh.contact_indices = std::move(contact_indices);
  mesh.anchor_indices = std::move(anchor_indices);
  return mesh;
}

TetMesh load_mesh(const std::filesystem::path& path) { return io::read_mesh(path); }

void check_state(const TetMesh& mesh, const DeformState& state) {
  if (state.size() != mesh.num_vertices()) {
    throw InputError("state has " + std::to_string(state.size()) + " vertices, mesh has " +
                     std::to_string(mesh.num_vertices()));
  }
  if (!state.positions.allFinite()) throw InputError("state contains non-finite coordinates");
}

BarycentricCoords barycentric_coords(const TetMesh& mesh, int tet, const Vec3& point) {
  if (tet < 0 || tet >= mesh.num_tets()) {
    throw InputError("barycentric_coords: tet index " + std::to_string(tet) + " out of range");
  }
  const Tet& t = mesh.tets[tet];
  const Vec3 mu = mesh.rest_dm_inv[tet] * (point - mesh.vertex(t[0]));
  BarycentricCoords bc;
  bc.lambda << 1.0 - mu.sum(), mu(0), mu(1), mu(2);
  if (!bc.lambda.allFinite()) {
    throw NumericalError("barycentric_coords: singular tet " + std::to_string(tet));
  }
  return bc;
}

Vec3 interpolate(const DeformState& state, const TetMesh& mesh, int tet,
                 const BarycentricCoords& bc) {
  if (tet < 0 || tet >= mesh.num_tets()) {
    throw InputError("interpolate: tet index " + std::to_string(tet) + " out of range");
  }
  const Tet& t = mesh.tets[tet];
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 4; ++i) p += bc.lambda(i) * state.positions.col(t[i]);
  return p;
}

int nearest_tet(const TetMesh& mesh, const Vec3& point) {
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int t = 0; t < mesh.num_tets(); ++t) {
    const BarycentricCoords bc = barycentric_coords(mesh, t, point);
    if (bc.lambda.minCoeff() >= -1e-9) return t;
    Vec3 centroid = Vec3::Zero();
    for (int v : mesh.tets[t]) centroid += mesh.vertex(v);
    centroid *= 0.25;
    const double d = (centroid - point).squaredNorm();
    if (d < best_dist) {
      best_dist = d;
      best = t;
    }
  }
  return best;
}

std::vector<BoundaryFace> boundary_faces(const TetMesh& mesh) {
  struct Entry {
    std::array<int, 3> key;
    int tet;
    int local;
  };
  std::vector<Entry> entries;
  entries.reserve(mesh.tets.size() * 4);
  for (int t = 0; t < mesh.num_tets(); ++t) {
    for (int f = 0; f < 4; ++f) {
      std::array<int, 3> key;
      for (int k = 0; k < 3; ++k) key[k] = mesh.tets[t][kLocalFaces[f][k]];
      std::sort(key.begin(), key.end());
      entries.push_back({key, t, f});
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key < b.key;
    return std::make_pair(a.tet, a.local) < std::make_pair(b.tet, b.local);
  });

  std::vector<BoundaryFace> faces;
  for (size_t i = 0; i < entries.size();) {
    size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    if (j - i == 1) {
      const Entry& e = entries[i];
      const Tet& t = mesh.tets[e.tet];
      BoundaryFace face;
      face.owner_tet = e.tet;
      for (int k = 0; k < 3; ++k) face.v[k] = t[kLocalFaces[e.local][k]];
      const Vec3 a = mesh.vertex(face.v[0]);
      const Vec3 b = mesh.vertex(face.v[1]);
      const Vec3 c = mesh.vertex(face.v[2]);
      Vec3 normal = (b - a).cross(c - a);
      Vec3 centroid = Vec3::Zero();
      for (int v : t) centroid += mesh.vertex(v);
      centroid *= 0.25;
      if (normal.dot((a + b + c) / 3.0 - centroid) < 0.0) {
        std::swap(face.v[1], face.v[2]);
        normal = -normal;
      }
      face.rest_normal = normal.normalized();
      faces.push_back(face);
    }
    i = j;
  }
  std::sort(faces.begin(), faces.end(), [](const BoundaryFace& a, const BoundaryFace& b) {
    if (a.owner_tet != b.owner_tet) return a.owner_tet < b.owner_tet;
    return a.v < b.v;
  });
  return faces;
}

std::vector<int> boundary_vertices(const TetMesh& mesh) {
  std::vector<int> verts;
  for (const BoundaryFace& f : boundary_faces(mesh)) verts.insert(verts.end(), f.v.begin(), f.v.end());
  std::sort(verts.begin(), verts.end());
  verts.erase(std::unique(verts.begin(), verts.end()), verts.end());
  return verts;
}

}  // namespace propsense
