#pragma once

#include "propsense/energy.hpp"
#include "propsense/mesh.hpp"
#include "propsense/pose.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testing {

using namespace propsense;

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(PROPSENSE_FIXTURES) / name;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("propsense_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline TetMesh single_tet() {
  Eigen::Matrix3Xd v(3, 4);
  v << 0, 1, 0, 0,
       0, 0, 1, 0,
       0, 0, 0, 1;
  return build_mesh(v, {{0, 1, 2, 3}});
}

// Unit cube split into 5 tets (one central tet plus 4 corners).
inline TetMesh five_tet_cube(double h = 1.0) {
  Eigen::Matrix3Xd v(3, 8);
  for (int i = 0; i < 8; ++i) v.col(i) = h * Vec3(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  return build_mesh(v, {{0, 1, 2, 4}, {3, 2, 1, 7}, {5, 4, 7, 1}, {6, 7, 4, 2}, {1, 2, 4, 7}});
}

// Box of nx*ny*nz cubes with 6 tets each, vertices jittered.
inline TetMesh jittered_grid(std::mt19937_64& rng, int nx, int ny, int nz, double h, double jitter) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto id = [&](int i, int j, int k) { return i + (nx + 1) * (j + (ny + 1) * k); };
  Eigen::Matrix3Xd v(3, (nx + 1) * (ny + 1) * (nz + 1));
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) v.col(id(i, j, k)) = h * Vec3(i, j, k) + jitter * h * Vec3(u(rng), u(rng), u(rng));
  static const int kuhn[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7}, {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};
  std::vector<Tet> tets;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        int c[8];
        for (int b = 0; b < 8; ++b) c[b] = id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
        for (const auto& t : kuhn) tets.push_back({c[t[0]], c[t[1]], c[t[2]], c[t[3]]});
      }
  return build_mesh(v, tets);
}

// Random mesh with 5 to 50 tets.
inline TetMesh random_small_mesh(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 4);
  switch (pick(rng)) {
    case 0: return five_tet_cube(2.0);
    case 1: return jittered_grid(rng, 1, 1, 1, 2.0, 0.1);
    case 2: return jittered_grid(rng, 2, 1, 1, 2.0, 0.1);
    case 3: return jittered_grid(rng, 2, 2, 1, 2.0, 0.1);
    default: return jittered_grid(rng, 2, 2, 2, 2.0, 0.1);
  }
}

// Rest positions plus uniform noise, resampled until no element inverts.
inline DeformState perturbed_state(std::mt19937_64& rng, const TetMesh& mesh, double amplitude) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  for (;;) {
    DeformState s = DeformState::rest(mesh);
    for (int i = 0; i < s.size(); ++i) s.positions.col(i) += Vec3(u(rng), u(rng), u(rng));
    if (min_jacobian(mesh, s) > 0.2) return s;
  }
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

}  // namespace testing
