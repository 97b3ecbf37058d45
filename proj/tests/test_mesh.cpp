#include "doctest.h"
#include "support.hpp"

#include "propsense/io.hpp"
#include "propsense/synth.hpp"

#include <map>

using namespace propsense;
using namespace testing;

TEST_CASE("regular tetrahedron volume") {
  const double e = 3.0;
  Eigen::Matrix3Xd v(3, 4);
  v.col(0) = Vec3(1, 1, 1);
  v.col(1) = Vec3(1, -1, -1);
  v.col(2) = Vec3(-1, 1, -1);
  v.col(3) = Vec3(-1, -1, 1);
  v *= e / (2.0 * std::sqrt(2.0));  // edge length e
  const TetMesh m = build_mesh(v, {{0, 1, 2, 3}});
  REQUIRE(m.num_tets() == 1);
  CHECK(m.rest_volume[0] == doctest::Approx(e * e * e / (6.0 * std::sqrt(2.0))).epsilon(1e-12));
}

TEST_CASE("inverted tets are reoriented, bad tets rejected") {
  Eigen::Matrix3Xd v = single_tet().vertices;
  const TetMesh m = build_mesh(v, {{0, 2, 1, 3}});
  CHECK(m.rest_volume[0] > 0.0);
  CHECK_THROWS_AS(build_mesh(v, {{0, 1, 2, 4}}), InputError);
  Eigen::Matrix3Xd flat = v;
  flat(2, 3) = 0.0;
  CHECK_THROWS_AS(build_mesh(flat, {{0, 1, 2, 3}}), InputError);
}

TEST_CASE("rest_dm_inv inverts D_m") {
  std::mt19937_64 rng(3);
  const TetMesh m = jittered_grid(rng, 2, 2, 2, 1.5, 0.1);
  for (int t = 0; t < m.num_tets(); ++t) {
    Mat3 dm;
    for (int k = 0; k < 3; ++k) dm.col(k) = m.vertex(m.tets[t][k + 1]) - m.vertex(m.tets[t][0]);
    CHECK((dm * m.rest_dm_inv[t] - Mat3::Identity()).norm() < 1e-10);
  }
}

TEST_CASE("finger fixture loads with positive volumes") {
  const TetMesh m = io::read_mesh(fixture("finger_1500.json"));
  CHECK(m.num_tets() >= 1400);
  CHECK(m.num_tets() <= 1600);
  for (double vol : m.rest_volume) CHECK(vol > 0.0);
  CHECK(!m.handle_indices.empty());
  CHECK(!m.contact_indices.empty());
}

TEST_CASE("barycentric coordinates") {
  const TetMesh m = single_tet();
  const BarycentricCoords b2 = barycentric_coords(m, 0, m.vertex(m.tets[0][1]));
  CHECK((b2.lambda - Eigen::Vector4d(0, 1, 0, 0)).norm() < 1e-14);
  Vec3 c = Vec3::Zero();
  for (int i = 0; i < 4; ++i) c += 0.25 * m.vertex(i);
  CHECK((barycentric_coords(m, 0, c).lambda - Eigen::Vector4d::Constant(0.25)).norm() < 1e-14);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector4d w(u(rng), u(rng), u(rng), u(rng));
    w /= w.sum();
    Vec3 p = Vec3::Zero();
    for (int i = 0; i < 4; ++i) p += w[i] * m.vertex(m.tets[0][i]);
    const BarycentricCoords bc = barycentric_coords(m, 0, p);
    CHECK(std::abs(bc.lambda.sum() - 1.0) < 1e-10);
    CHECK((interpolate(DeformState::rest(m), m, 0, bc) - p).norm() < 1e-10);
  }
}

TEST_CASE("interpolate follows affine motion and matches a scalar loop") {
  std::mt19937_64 rng(7);
  const TetMesh m = jittered_grid(rng, 2, 2, 2, 2.0, 0.1);
  const Vec3 p(1.3, 2.1, 0.7);
  const int t = nearest_tet(m, p);
  const BarycentricCoords bc = barycentric_coords(m, t, p);
  CHECK((interpolate(DeformState::rest(m), m, t, bc) - p).norm() < 1e-10);
  DeformState moved = DeformState::rest(m);
  moved.positions.colwise() += Vec3(1, 2, 3);
  CHECK((interpolate(moved, m, t, bc) - (p + Vec3(1, 2, 3))).norm() < 1e-10);

  const DeformState s = perturbed_state(rng, m, 0.2);
  for (int tet = 0; tet < m.num_tets(); ++tet) {
    const BarycentricCoords b{Eigen::Vector4d(0.1, 0.2, 0.3, 0.4)};
    double x[3] = {0, 0, 0};
    for (int i = 0; i < 4; ++i)
      for (int k = 0; k < 3; ++k) x[k] += b.lambda[i] * s.positions(k, m.tets[tet][i]);
    const Vec3 got = interpolate(s, m, tet, b);
    for (int k = 0; k < 3; ++k) CHECK(got[k] == doctest::Approx(x[k]).epsilon(1e-14));
  }
}

TEST_CASE("nearest_tet") {
  std::mt19937_64 rng(11);
  const TetMesh m = jittered_grid(rng, 2, 2, 2, 2.0, 0.1);
  Vec3 c7 = Vec3::Zero();
  for (int v : m.tets[7]) c7 += 0.25 * m.vertex(v);
  CHECK(nearest_tet(m, c7) == 7);

  // Two separated tets, query on the bisector plane of their centroids.
  Eigen::Matrix3Xd v(3, 8);
  v.leftCols(4) = single_tet().vertices;
  v.rightCols(4) = single_tet().vertices.colwise() + Vec3(10, 0, 0);
  const TetMesh two = build_mesh(v, {{4, 5, 6, 7}, {0, 1, 2, 3}});
  CHECK(nearest_tet(two, Vec3(5.25, 0.25, 5.0)) == 0);

  // Brute force: first containing tet, else first minimal centroid distance.
  std::uniform_real_distribution<double> u(-1.0, 5.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 p(u(rng), u(rng), u(rng));
    int want = -1;
    for (int t = 0; t < m.num_tets() && want < 0; ++t) {
      Mat3 d;
      for (int k = 0; k < 3; ++k) d.col(k) = m.vertex(m.tets[t][k + 1]) - m.vertex(m.tets[t][0]);
      const Vec3 l = d.inverse() * (p - m.vertex(m.tets[t][0]));
      if (std::min({1.0 - l.sum(), l[0], l[1], l[2]}) >= -1e-9) want = t;
    }
    if (want < 0) {
      double best = 1e300;
      for (int t = 0; t < m.num_tets(); ++t) {
        Vec3 c = Vec3::Zero();
        for (int vi : m.tets[t]) c += 0.25 * m.vertex(vi);
        if ((c - p).squaredNorm() < best) {
          best = (c - p).squaredNorm();
          want = t;
        }
      }
    }
    CHECK(nearest_tet(m, p) == want);
  }
}

TEST_CASE("boundary faces") {
  const TetMesh one = single_tet();
  const auto f1 = boundary_faces(one);
  REQUIRE(f1.size() == 4);
  const Vec3 c(0.25, 0.25, 0.25);
  for (const auto& f : f1) {
    const Vec3 a = one.vertex(f.v[0]), b = one.vertex(f.v[1]), d = one.vertex(f.v[2]);
    const Vec3 n = (b - a).cross(d - a);
    CHECK(n.dot(f.rest_normal) > 0.0);  // winding agrees with the stored normal
    CHECK(f.rest_normal.dot((a + b + d) / 3.0 - c) > 0.0);
  }

  Eigen::Matrix3Xd v(3, 5);
  v.leftCols(4) = single_tet().vertices;
  v.col(4) = Vec3(1, 1, 1);
  CHECK(boundary_faces(build_mesh(v, {{0, 1, 2, 3}, {1, 2, 3, 4}})).size() == 6);

  const TetMesh finger = io::read_mesh(fixture("finger_1500.json"));
  const auto faces = boundary_faces(finger);
  Vec3 sum = Vec3::Zero();
  double area = 0.0;
  std::map<std::pair<int, int>, int> edges;
  for (const auto& f : faces) {
    const Vec3 a = finger.vertex(f.v[0]), b = finger.vertex(f.v[1]), d = finger.vertex(f.v[2]);
    const Vec3 n = 0.5 * (b - a).cross(d - a);
    sum += n;
    area += n.norm();
    for (int k = 0; k < 3; ++k) {
      const int p = f.v[k], q = f.v[(k + 1) % 3];
      ++edges[{std::min(p, q), std::max(p, q)}];
    }
  }
  CHECK(sum.norm() < 1e-6 * area);
  for (const auto& [e, count] : edges) CHECK(count == 2);
}

TEST_CASE("check_state rejects bad states") {
  const TetMesh m = single_tet();
  DeformState s = DeformState::rest(m);
  CHECK_NOTHROW(check_state(m, s));
  s.positions(0, 0) = std::nan("");
  CHECK_THROWS_AS(check_state(m, s), InputError);
  CHECK_THROWS_AS(check_state(m, DeformState{Eigen::Matrix3Xd(3, 3)}), InputError);
}
