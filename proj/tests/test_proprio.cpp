#include "doctest.h"
#include "support.hpp"

#include "propsense/io.hpp"
#include "propsense/proprio.hpp"
#include "propsense/solver.hpp"
#include "propsense/synth.hpp"

#include <algorithm>
#include <numbers>

using namespace propsense;
using namespace testing;

TEST_CASE("rigid pose application") {
  Eigen::Matrix3Xd pts = Eigen::Matrix3Xd::Random(3, 10);
  CHECK((apply_pose(RigidPose::identity(), pts) - pts).norm() == 0.0);
  RigidPose shift;
  shift.translation = Vec3(1, 2, 3);
  CHECK((apply_pose(shift, pts) - (pts.colwise() + Vec3(1, 2, 3))).norm() < 1e-15);
  const RigidPose quarter = RigidPose::about(Vec3::UnitZ(), std::numbers::pi / 2, Vec3::Zero());
  CHECK((quarter.apply(Vec3(1, 0, 0)) - Vec3(0, 1, 0)).norm() < 1e-12);
  const RigidPose about_c = RigidPose::about(Vec3::UnitX(), 0.7, Vec3(2, 3, 4));
  CHECK((about_c.apply(Vec3(2, 3, 4)) - Vec3(2, 3, 4)).norm() < 1e-12);
  RigidPose bad;
  bad.rotation = Eigen::Quaterniond(0.9, 0, 0, 0);
  CHECK_THROWS_AS(check_pose(bad), InputError);
}

TEST_CASE("marker calibration") {
  std::mt19937_64 rng(1);
  const TetMesh m = jittered_grid(rng, 2, 2, 2, 2.0, 0.1);
  Vec3 c = Vec3::Zero();
  for (int v : m.tets[5]) c += 0.25 * m.vertex(v);
  const MarkerAttachment a = calibrate_marker(m, c);
  CHECK(a.tet == 5);
  CHECK((a.bc.lambda - Eigen::Vector4d::Constant(0.25)).norm() < 1e-12);

  const MarkerAttachment v = calibrate_marker(m, m.vertex(13));
  CHECK(v.bc.lambda.maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));

  // Outside the body: extrapolated coordinates, exact round trip.
  const Vec3 stalk(-0.7, 2.0, 2.0);
  const MarkerAttachment o = calibrate_marker(m, stalk);
  CHECK(o.bc.lambda.minCoeff() < 0.0);
  CHECK((predict_markers(DeformState::rest(m), m, {o})[0] - stalk).norm() < 1e-10);
}

TEST_CASE("marker prediction under rigid motion and solver states") {
  const TetMesh m = io::read_mesh(fixture("finger_1500.json"));
  const auto markers = io::read_markers(fixture("markers.json"));
  std::vector<MarkerAttachment> att;
  std::vector<Vec3> rest;
  for (const auto& mk : markers) {
    att.push_back(calibrate_marker(m, mk.rest_position));
    rest.push_back(mk.rest_position);
  }
  const auto at_rest = predict_markers(DeformState::rest(m), m, att);
  for (size_t i = 0; i < rest.size(); ++i) CHECK((at_rest[i] - rest[i]).norm() < 1e-10);

  const RigidPose g = RigidPose::about(Vec3(1, 2, 3).normalized(), 0.4, Vec3(0, 0, 40), Vec3(1, -2, 0.5));
  const auto moved = predict_markers(DeformState{apply_pose(g, m.vertices)}, m, att);
  for (size_t i = 0; i < rest.size(); ++i) CHECK((moved[i] - g.apply(rest[i])).norm() < 1e-10);

  // Closed loop: a solved state predicts exactly what the truth fixture stores.
  const auto frames = io::read_pose_stream(fixture("poses_twist_ramp.jsonl"));
  const auto truth = io::read_truth_stream(fixture("truth_twist_ramp.jsonl"));
  const auto r = solve_newton(m, EnergyModel{}, make_handle_constraint(m), frames.back().pose, DeformState::rest(m),
                              SolverConfig{});
  const auto pred = predict_markers(r.final_state, m, att);
  double scalar_max = 0.0;
  for (size_t i = 0; i < att.size(); ++i) {
    double x[3] = {0, 0, 0};
    for (int k = 0; k < 4; ++k)
      for (int d = 0; d < 3; ++d) x[d] += att[i].bc.lambda[k] * r.final_state.positions(d, m.tets[att[i].tet][k]);
    scalar_max = std::max(scalar_max, (pred[i] - Vec3(x[0], x[1], x[2])).norm());
  }
  CHECK(scalar_max < 1e-12);
  // The fixture came from a warm-started sequence; the cold solve lands on
  // the same minimizer up to solver tolerance.
  for (size_t i = 0; i < pred.size(); ++i) CHECK((pred[i] - truth.back().points[i]).norm() < 1e-2);
}

TEST_CASE("contact points and normals") {
  const TetMesh m = io::read_mesh(fixture("finger_1500.json"));
  const auto cps = extract_contact_points(DeformState::rest(m), m, m.contact_indices);
  REQUIRE(cps.size() == m.contact_indices.size());
  // Contacts sit on the slightly tapered +x face; vertices on its rim average
  // in the neighbouring faces.
  size_t flat = 0;
  for (const auto& cp : cps) {
    CHECK(std::abs(cp.normal.norm() - 1.0) < 1e-12);
    CHECK(cp.normal.x() > 0.0);
    if (cp.normal.x() > 0.99) ++flat;
  }
  CHECK(flat > 0);

  // Flat patch: interior vertices of the top face of a box see only that plane.
  std::mt19937_64 rng(3);
  const TetMesh box = jittered_grid(rng, 3, 3, 1, 1.0, 0.0);
  std::vector<int> top;
  for (int j = 1; j <= 2; ++j)
    for (int i = 1; i <= 2; ++i) top.push_back(i + 4 * (j + 4));
  for (const auto& cp : extract_contact_points(DeformState::rest(box), box, top)) {
    CHECK(cp.position.z() == 1.0);
    CHECK((cp.normal - Vec3::UnitZ()).norm() < 1e-12);
  }

  const RigidPose g = RigidPose::about(Vec3(0, 1, 1).normalized(), 0.6, Vec3::Zero());
  const auto rot = extract_contact_points(DeformState{apply_pose(g, m.vertices)}, m, m.contact_indices);
  for (size_t i = 0; i < cps.size(); ++i) {
    CHECK((rot[i].normal - g.rotation_matrix() * cps[i].normal).norm() < 1e-10);
    CHECK((rot[i].position - g.apply(cps[i].position)).norm() < 1e-10);
  }

  // Indentation: push the contact face inward, contacts follow the solver state.
  const auto r = solve_newton(m, EnergyModel{}, make_handle_constraint(m),
                              synth::motion_pose(m, synth::Motion::Push, 1.0), DeformState::rest(m), SolverConfig{});
  const auto pushed = extract_contact_points(r.final_state, m, m.contact_indices);
  for (size_t i = 0; i < pushed.size(); ++i) {
    CHECK((pushed[i].position - r.final_state.positions.col(m.contact_indices[i])).norm() == 0.0);
  }

  CHECK_THROWS_AS(extract_contact_points(DeformState::rest(m), m, {m.num_vertices()}), InputError);
}

TEST_CASE("error statistics") {
  std::mt19937_64 rng(2);
  std::vector<Vec3> a(20), b;
  for (auto& p : a) p = Vec3::Random();
  const ErrorStats zero = error_stats(a, a);
  for (double n : zero.norms) CHECK(n == 0.0);
  for (const auto& p : a) b.push_back(p + Vec3(1, 0, 0));
  const ErrorStats shifted = error_stats(a, b);
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(shifted.per_axis[0][i] == doctest::Approx(-1.0));  // predicted - truth
    CHECK(shifted.norms[i] == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(error_stats(a, {}), InputError);

  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int n : {1, 2, 7, 100, 101}) {
    std::vector<Vec3> p(n), t(n, Vec3::Zero());
    for (auto& x : p) x = Vec3(u(rng), u(rng), u(rng));
    std::vector<double> norms;
    for (const auto& x : p) norms.push_back(x.norm());
    std::sort(norms.begin(), norms.end());
    const double want = n % 2 ? norms[n / 2] : 0.5 * (norms[n / 2 - 1] + norms[n / 2]);
    CHECK(error_stats(p, t).median_norm == doctest::Approx(want).epsilon(1e-15));
  }
}
