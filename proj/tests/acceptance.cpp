// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "random_values.hpp"
#include "support.hpp"

#include "propsense/bench.hpp"
#include "propsense/commands.hpp"
#include "propsense/gpis.hpp"
#include "propsense/io.hpp"
#include "propsense/oracle.hpp"
#include "propsense/proprio.hpp"
#include "propsense/solver.hpp"
#include "propsense/synth.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>

using namespace propsense;
using namespace testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const TetMesh& finger_1500() {
  static const TetMesh m = io::read_mesh(fixture("finger_1500.json"));
  return m;
}

Vec3 handle_centre(const TetMesh& m) {
  Vec3 c = Vec3::Zero();
  for (int i : m.handle_indices) c += m.vertex(i);
  return c / static_cast<double>(m.handle_indices.size());
}

DeformState displaced(const DeformState& s, const Eigen::VectorXd& v, double h) {
  DeformState out = s;
  out.positions += h * Eigen::Map<const Eigen::Matrix3Xd>(v.data(), 3, s.size());
  return out;
}

// 1. Analytic gradient and Hessian-vector products against central differences.
Outcome gradient_hessian() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst_g = 0.0, worst_h = 0.0;
  int tets_lo = 1 << 30, tets_hi = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const TetMesh m = random_small_mesh(rng);
    tets_lo = std::min(tets_lo, m.num_tets());
    tets_hi = std::max(tets_hi, m.num_tets());
    const DeformState s = perturbed_state(rng, m, 0.3);
    std::vector<int> idx;
    for (int i = 0; i < m.num_vertices(); ++i)
      if (rng() % 3 == 0) idx.push_back(i);
    if (idx.empty()) idx.push_back(0);
    const HandleConstraint h = make_handle_constraint(m, idx, {});
    const RigidPose pose = RigidPose::about(random_unit(rng), 0.3, Vec3(1, 1, 1), Vec3(0.2, 0.1, -0.3));
    const EnergyModel model{EnergyKind::SymmetricDirichlet, 1e5, false};
    auto eval = [&](const DeformState& x) { return augmented_objective(m, x, model, h, pose, HessianProjection::None); };
    const ObjectiveEval e = eval(s);
    const double step = 1e-5;
    const int n = static_cast<int>(e.gradient.size());
    Eigen::VectorXd fd(n);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd ei = Eigen::VectorXd::Unit(n, i);
      fd[i] = (eval(displaced(s, ei, step)).energy - eval(displaced(s, ei, -step)).energy) / (2 * step);
    }
    worst_g = std::max(worst_g, (fd - e.gradient).norm() / e.gradient.norm());
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd v(n);
      std::normal_distribution<double> g;
      for (int i = 0; i < n; ++i) v[i] = g(rng);
      v.normalize();
      const Eigen::VectorXd hv = e.hessian * v;
      const Eigen::VectorXd hv_fd =
          (eval(displaced(s, v, step)).gradient - eval(displaced(s, v, -step)).gradient) / (2 * step);
      worst_h = std::max(worst_h, (hv - hv_fd).norm() / hv.norm());
    }
  }
  o.require(worst_g < 1e-5, "gradient relative error " + fmt(worst_g) + " >= 1e-5");
  o.require(worst_h < 1e-4, "Hessian-vector relative error " + fmt(worst_h) + " >= 1e-4");
  o.note("10 meshes of " + std::to_string(tets_lo) + "-" + std::to_string(tets_hi) + " tets, gradient err " +
         fmt(worst_g) + ", Hv err " + fmt(worst_h));
  return o;
}

// 2. Rigid handle motion on the 1.5k finger without anchors reaches 6m.
Outcome rigid_optimality() {
  Outcome o;
  const TetMesh& m = finger_1500();
  const HandleConstraint h = make_handle_constraint(m, false);
  const SolverConfig cfg;
  const double six_m = 6.0 * m.num_tets();
  const double slack = 10.0 * std::sqrt(six_m / cfg.omega);
  std::mt19937_64 rng(202);
  double worst_excess = 0.0, worst_violation = 0.0, min_det = 1e300;
  int max_iters = 0;
  for (int p = 0; p < 20; ++p) {
    const RigidPose pose = synth::random_pose(rng, handle_centre(m), 30.0 * std::numbers::pi / 180.0, 10.0);
    const SolveReport r = solve_newton(m, EnergyModel{}, h, pose, DeformState::rest(m), cfg);
    worst_excess = std::max(worst_excess, (r.final_energy - six_m) / six_m);
    worst_violation = std::max(worst_violation, r.constraint_violation);
    for (double d : r.min_det_history) min_det = std::min(min_det, d);
    max_iters = std::max(max_iters, r.iterations);
  }
  o.require(worst_excess <= 1e-6, "energy exceeds 6m by " + fmt(worst_excess) + " relative");
  o.require(worst_violation < slack, "violation " + fmt(worst_violation) + " mm >= " + fmt(slack));
  o.require(min_det > 0.0, "an element inverted (min det " + fmt(min_det) + ")");
  o.note(std::to_string(m.num_tets()) + " tets, 20 poses up to 30 deg/10 mm, worst (E-6m)/6m " + fmt(worst_excess) +
         ", worst violation " + fmt(worst_violation) + " mm (bound " + fmt(slack) + "), min det " + fmt(min_det) +
         ", max iterations " + std::to_string(max_iters));
  return o;
}

// 3. Newton against the long-run descent oracle on the ~100-element finger.
Outcome oracle_equivalence() {
  Outcome o;
  const TetMesh m = io::read_mesh(fixture("finger_100.json"));
  BenchConfig cfg;
  cfg.oracle_poses = 10;
  const OracleComparison c = oracle_comparison(m, cfg);
  const double bound = 1e-3 * c.bbox_diagonal;
  o.require(m.num_tets() <= 100, "mesh has more than 100 elements");
  o.require(c.poses == 10, "expected 10 poses");
  o.require(c.newton_max_distance < bound, "max node distance " + fmt(c.newton_max_distance) + " mm >= " + fmt(bound));
  o.require(c.newton_error < c.arap_error, "Newton mean error not below ARAP's");
  o.note(std::to_string(c.elements) + " tets, 10 poses, max node distance " + fmt(c.newton_max_distance) +
         " mm (bound " + fmt(bound) + "), mean error Newton " + fmt(c.newton_error) + " vs ARAP " +
         fmt(c.arap_error) + " mm");
  return o;
}

// 4. Constraint violation is non-increasing in omega.
Outcome omega_monotone() {
  Outcome o;
  const TetMesh& m = finger_1500();
  BenchConfig cfg;
  std::string trace;
  for (synth::Motion motion : {synth::Motion::Oblique, synth::Motion::Twist}) {
    const auto rows = omega_sweep(m, synth::motion_pose(m, motion, 1.0), cfg);
    for (size_t i = 1; i < rows.size(); ++i) {
      o.require(rows[i].constraint_violation <= rows[i - 1].constraint_violation,
                std::string(synth::to_string(motion)) + " violation grows at omega " + fmt(rows[i].omega));
    }
    trace += std::string(trace.empty() ? "" : " | ") + synth::to_string(motion) + ":";
    for (const auto& r : rows) trace += " " + fmt(r.constraint_violation);
  }
  o.note("violation (mm) over omega 1e2..1e7, " + trace);
  return o;
}

// 5. Newton is faster than 10-iteration ARAP and reaches a lower SD objective.
Outcome comparative_ordering() {
  Outcome o;
  const TetMesh& m = finger_1500();
  BenchConfig cfg;
  const auto rows = time_methods(m, cfg);
  const BenchRow& newton = rows[0];
  const BenchRow& arap = rows[1];
  o.require(newton.failed_frames == 0 && arap.failed_frames == 0, "failed frames");
  o.require(newton.median_frame_time < arap.median_frame_time,
            "Newton median " + fmt(1e3 * newton.median_frame_time) + " ms not below ARAP " +
                fmt(1e3 * arap.median_frame_time) + " ms");

  // Per frame SD objective on the same pose scripts.
  const HandleConstraint h = make_handle_constraint(m);
  const ObjectiveAssembler assembler(m, EnergyModel{});
  int worse = 0, frames = 0;
  for (synth::Motion motion : synth::all_motions()) {
    const auto poses = synth::motion_ramp(m, motion, cfg.frames_per_motion);
    const auto n = track_sequence(m, EnergyModel{}, h, poses, cfg.solver, SolverMethod::Newton);
    const auto a = track_sequence(m, EnergyModel{}, h, poses, cfg.solver, SolverMethod::Arap);
    for (size_t f = 0; f < poses.size(); ++f) {
      const PenaltyTargets targets = penalty_targets(h, poses[f]);
      const double en = assembler.evaluate(n[f].report->final_state, targets, false).energy;
      const double ea = assembler.evaluate(a[f].report->final_state, targets, false).energy;
      if (en > ea) ++worse;
      ++frames;
    }
  }
  o.require(worse == 0, std::to_string(worse) + " frames where Newton's SD objective exceeds ARAP's");
  o.require(newton.mean_sd_objective <= arap.mean_sd_objective, "mean SD objective ordering");
  const double median_ms = 1e3 * newton.median_frame_time;
  o.note(std::to_string(m.num_tets()) + " tets, " + std::to_string(frames) + " warm-started frames, median frame time Newton " +
         fmt(median_ms) + " ms vs ARAP " + fmt(1e3 * arap.median_frame_time) + " ms, mean SD objective " +
         fmt(newton.mean_sd_objective) + " vs " + fmt(arap.mean_sd_objective) +
         (median_ms <= 250.0 ? ", soft 250 ms target met" : ", soft 250 ms target missed"));
  return o;
}

// Median of the chi distribution with 3 degrees of freedom, from its CDF.
double chi3_median() {
  auto cdf = [](double r) {
    return std::erf(r / std::sqrt(2.0)) - std::sqrt(2.0 / std::numbers::pi) * r * std::exp(-0.5 * r * r);
  };
  double lo = 0.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < 0.5 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// 6. Closed-loop marker tracking, exact and with unit Gaussian noise.
Outcome marker_closed_loop() {
  Outcome o;
  const fs::path dir = scratch_dir("acceptance_markers");
  const std::string mesh = fixture("finger_1500.json").string();
  const std::string poses = fixture("poses_twist_ramp.jsonl").string();
  std::ostringstream log, err;
  auto run = [&](const std::string& cmd, const CommandOptions& opt) {
    const int rc = run_command(cmd, opt, log, err);
    if (rc != kExitOk) throw std::runtime_error(cmd + " exited with " + std::to_string(rc) + ": " + err.str());
  };
  CommandOptions s;
  s.mesh = mesh;
  s.kind = "markers";
  s.count = 40;
  s.seed = 7;
  s.out = (dir / "m").string();
  run("synth", s);
  s.kind = "truth-stream";
  s.poses = poses;
  s.markers = (dir / "m" / "markers.json").string();
  s.out = (dir / "exact").string();
  run("synth", s);
  s.noise = 1.0;
  s.out = (dir / "noisy").string();
  run("synth", s);

  CommandOptions t;
  t.mesh = mesh;
  t.poses = poses;
  t.markers = s.markers;
  t.truth = (dir / "exact" / "truth.jsonl").string();
  t.out = (dir / "track_exact").string();
  run("track", t);
  t.truth = (dir / "noisy" / "truth.jsonl").string();
  t.out = (dir / "track_noisy").string();
  run("track", t);

  const auto exact = io::read_report(dir / "track_exact" / "report.json").errors;
  const auto noisy = io::read_report(dir / "track_noisy" / "report.json").errors;
  double worst = 0.0;
  for (double n : exact->norms) worst = std::max(worst, n);
  const double want = chi3_median();
  const double rel = noisy->median_norm / want - 1.0;
  o.require(worst < 1e-6, "closed-loop error " + fmt(worst) + " mm");
  o.require(noisy->norms.size() >= 3000, "fewer than 3000 noisy samples");
  o.require(std::abs(rel) <= 0.10, "noisy median " + fmt(noisy->median_norm) + " vs " + fmt(want));
  o.note("closed-loop max error " + fmt(worst) + " mm over " + std::to_string(exact->norms.size()) +
         " samples; noisy median " + fmt(noisy->median_norm) + " mm vs chi3 median " + fmt(want) + " (" +
         fmt(100 * rel) + "%) over " + std::to_string(noisy->norms.size()) + " samples");
  return o;
}

std::vector<ContactPoint> contacts_of(const io::PointCloud& c) {
  std::vector<ContactPoint> out;
  for (size_t i = 0; i < c.points.size(); ++i) out.push_back({c.points[i], c.normals[i]});
  return out;
}

// 7. GPIS interpolation, prior reversion, sphere reconstruction, chamfer.
Outcome gpis_properties() {
  Outcome o;
  const double r = 40.0, res = 0.2, half = 10.0;

  // Noise-free interpolation and far field on a sphere cap training set. The
  // length scale is kept near the 2 mm point spacing so the Gram matrix is
  // well conditioned enough to factor without jitter.
  TrainingSet train = generate_control_points(contacts_of(synth::sphere_patch(r, Vec3::UnitZ(), half, 2.0)), 2.0, 0.0);
  const Hyperparameters hyper{100.0, 2.0};
  const GpisModel exact = make_model(train, hyper);
  double interp = 0.0, var = 0.0;
  for (size_t i = 0; i < train.size(); ++i) {
    const Prediction p = predict(exact, train.points[i]);
    interp = std::max(interp, std::abs(p.mean - train.values[i]));
    var = std::max(var, p.variance);
  }
  const Prediction far = predict(exact, Vec3(0, 0, r + 20 * hyper.length_scale));
  const double far_mean = std::abs(far.mean) / std::sqrt(hyper.sigma_f2);
  const double far_var = std::abs(far.variance - hyper.sigma_f2) / hyper.sigma_f2;
  o.require(exact.jitter == 0.0, "noise-free Gram matrix needed jitter");
  o.require(interp <= 1e-6, "interpolation error " + fmt(interp));
  o.require(var <= 1e-8, "training variance " + fmt(var));
  o.require(far_mean <= 1e-6 && far_var <= 1e-6, "far-field reversion");

  // Sphere caps at 0.2 mm voxels.
  double worst_radius = 0.0, worst_chamfer = 0.0;
  size_t points = 0;
  for (const Vec3& axis : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(1, -1, 1).normalized()}) {
    const io::PointCloud cap = synth::sphere_patch(r, axis, half, 2.0);
    const GpisModel model = fit(generate_control_points(contacts_of(cap), 2.0));
    Box box{cap.points[0], cap.points[0]};
    for (const Vec3& p : cap.points) {
      box.lo = box.lo.cwiseMin(p);
      box.hi = box.hi.cwiseMax(p);
    }
    box.lo.array() -= 1.0;
    box.hi.array() += 1.0;
    const SurfacePatch patch = extract_isosurface(model, box, res);
    // Compare on the cap footprint: points whose gnomonic coordinates lie in the contact square.
    const Vec3 u = axis.unitOrthogonal(), w = axis.cross(u);
    std::vector<Vec3> inside;
    for (const Vec3& p : patch.points) {
      worst_radius = std::max(worst_radius, std::abs(p.norm() - r) / r);
      const double s = r / axis.dot(p);
      if (std::abs(s * u.dot(p)) <= half && std::abs(s * w.dot(p)) <= half) inside.push_back(p);
    }
    const io::PointCloud truth = synth::sphere_patch(r, axis, half, res / 2);
    o.require(!inside.empty(), "empty reconstruction");
    if (inside.empty()) continue;
    worst_chamfer = std::max(worst_chamfer, chamfer_distance(inside, truth.points));
    points += inside.size();
  }
  const double chamfer_bound = (2 * res) * (2 * res);
  o.require(worst_radius < 0.02, "radius error " + fmt(100 * worst_radius) + "%");
  o.require(worst_chamfer < chamfer_bound, "chamfer " + fmt(worst_chamfer) + " mm^2 >= " + fmt(chamfer_bound));

  // Chamfer against brute force on 100-point clouds.
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  bool chamfer_exact = true;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Vec3> a(100), b(100);
    for (auto& p : a) p = Vec3(u(rng), u(rng), u(rng));
    for (auto& p : b) p = Vec3(u(rng), u(rng), u(rng));
    auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
      double s = 0.0;
      for (const Vec3& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : to) best = std::min(best, (p - q).squaredNorm());
        s += best;
      }
      return s / static_cast<double>(from.size());
    };
    chamfer_exact = chamfer_exact && chamfer_distance(a, b) == one_way(a, b) + one_way(b, a);
  }
  o.require(chamfer_exact, "chamfer differs from brute force");
  o.note("interpolation err " + fmt(interp) + ", far-field mean/var rel " + fmt(far_mean) + "/" + fmt(far_var) +
         "; 3 caps r=40 mm at 0.2 mm voxels: " + std::to_string(points) + " points, max radius err " +
         fmt(100 * worst_radius) + "%, worst chamfer " + fmt(worst_chamfer) + " mm^2 (bound " + fmt(chamfer_bound) +
         "); chamfer equals brute force on 20 pairs of 100-point clouds");
  return o;
}

// 8. Bit-identical repeated runs and lossless format round trips.
Outcome determinism_roundtrip() {
  Outcome o;
  const fs::path dir = scratch_dir("acceptance_determinism");
  std::ostringstream log, err;
  auto both = [&](const std::string& label, const std::string& cmd, CommandOptions opt) {
    for (const char* tag : {"a", "b"}) {
      opt.out = (dir / label / tag).string();
      if (run_command(cmd, opt, log, err) != kExitOk) throw std::runtime_error(cmd + ": " + err.str());
    }
  };
  CommandOptions d;
  d.mesh = fixture("finger_1500.json").string();
  d.poses = fixture("poses_bend_x.jsonl").string();
  d.dump_states = true;
  both("deform", "deform", d);
  d.model = "arap";
  d.poses = fixture("poses_twist.jsonl").string();
  both("deform_arap", "deform", d);
  CommandOptions t = d;
  t.model = "sd";
  t.poses = fixture("poses_twist_ramp.jsonl").string();
  t.markers = fixture("markers.json").string();
  t.truth = fixture("truth_twist_ramp.jsonl").string();
  both("track", "track", t);
  CommandOptions g;
  g.cloud = fixture("sphere.json").string();
  g.resolution = 1.0;
  both("gpis", "gpis", g);
  CommandOptions s;
  s.kind = "markers";
  s.mesh = fixture("finger_1000.json").string();
  s.seed = 3;
  both("synth", "synth", s);

  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), dir);
    auto it = rel.begin();
    const std::string cmd = (it++)->string(), tag = (it++)->string();
    if (tag != "a") continue;
    fs::path rest;
    for (; it != rel.end(); ++it) rest /= *it;
    const fs::path other = dir / cmd / "b" / rest;
    std::string x = io::read_text(e.path()), y = io::read_text(other);
    if (rest.filename() == "report.json") {  // wall time is the only nondeterministic field
      x = io::serialize_report(io::without_timing(io::parse_report(x)));
      y = io::serialize_report(io::without_timing(io::parse_report(y)));
    }
    o.require(x == y, "run outputs differ: " + (cmd / rest).string());
    ++compared;
  }
  o.require(compared > 10, "too few outputs compared");

  // Round trips, 1000 random instances per format.
  std::mt19937_64 rng(808);
  const int n = 1000;
  int bad = 0;
  for (int i = 0; i < n; ++i) {
    const TetMesh m = jittered_grid(rng, 1 + rng() % 3, 1 + rng() % 3, 1 + rng() % 2, 0.5 + (rng() % 50) / 5.0, 0.15);
    const TetMesh mb = io::parse_mesh(io::serialize_mesh(m));
    if (!(mb.vertices == m.vertices && mb.tets == m.tets && mb.handle_indices == m.handle_indices &&
          mb.contact_indices == m.contact_indices && mb.anchor_indices == m.anchor_indices))
      ++bad;

    io::PointCloud c;
    for (int k = 0, len = static_cast<int>(rng() % 16); k < len; ++k) {
      c.points.push_back(any_vec(rng));
      c.normals.push_back(random_unit(rng));
    }
    const io::PointCloud cb = io::parse_cloud(io::serialize_cloud(c));
    if (!same(cb.points, c.points) || !same(cb.normals, c.normals)) ++bad;

    std::vector<io::PoseFrame> ps;
    double tt = any_double(rng);
    for (int k = 0, len = static_cast<int>(rng() % 8); k < len; ++k) {
      ps.push_back({tt, any_pose(rng)});
      tt = std::nextafter(tt, 1e308) + std::abs(any_double(rng));
    }
    const auto pb = io::parse_pose_stream(io::serialize_pose_stream(ps));
    bool pose_ok = pb.size() == ps.size();
    for (size_t k = 0; pose_ok && k < ps.size(); ++k) {
      pose_ok = same(pb[k].t, ps[k].t) && same(pb[k].pose.translation, ps[k].pose.translation);
      for (int q = 0; q < 4; ++q) pose_ok = pose_ok && same(pb[k].pose.rotation.coeffs()[q], ps[k].pose.rotation.coeffs()[q]);
    }
    if (!pose_ok) ++bad;

    std::vector<io::Marker> ms;
    for (int k = 0, len = static_cast<int>(rng() % 8); k < len; ++k) ms.push_back({"m" + std::to_string(k) + random_text(rng), any_vec(rng)});
    const auto mk = io::parse_markers(io::serialize_markers(ms));
    bool markers_ok = mk.size() == ms.size();
    for (size_t k = 0; markers_ok && k < ms.size(); ++k)
      markers_ok = mk[k].id == ms[k].id && same(mk[k].rest_position, ms[k].rest_position);
    if (!markers_ok) ++bad;

    std::vector<io::TruthFrame> tf;
    for (int k = 0, len = static_cast<int>(rng() % 6); k < len; ++k) {
      io::TruthFrame f{k / 30.0, {}};
      for (size_t j = 0; j < ms.size(); ++j) f.points.push_back(any_vec(rng));
      tf.push_back(f);
    }
    const auto tb = io::parse_truth_stream(io::serialize_truth_stream(tf));
    bool truth_ok = tb.size() == tf.size();
    for (size_t k = 0; truth_ok && k < tf.size(); ++k) truth_ok = same(tb[k].t, tf[k].t) && same(tb[k].points, tf[k].points);
    if (!truth_ok) ++bad;

    const io::RunReport rep = random_report(rng, static_cast<int>(rng() % 8));
    if (!same(rep, io::parse_report(io::serialize_report(rep)))) ++bad;
  }
  o.require(bad == 0, std::to_string(bad) + " lossy round trips");
  o.note(std::to_string(compared) + " output files bit-identical across repeated single-thread runs; " +
         std::to_string(n) + " random instances each of mesh, cloud, pose stream, markers, truth stream and report "
         "round-trip exactly");
  return o;
}

}  // namespace

int main() {
  set_num_threads(1);
  struct Criterion {
    int id;
    const char* name;
    double limit_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
  };
  const Criterion criteria[] = {
      {1, "gradient/Hessian correctness", 10.0, gradient_hessian},
      {2, "rigid-motion optimality", 60.0, rigid_optimality},
      {3, "oracle equivalence", 300.0, oracle_equivalence},
      {4, "omega monotonicity", 0.0, omega_monotone},
      {5, "Newton vs ARAP ordering", 0.0, comparative_ordering},
      {6, "marker closed loop", 0.0, marker_closed_loop},
      {7, "GPIS properties", 0.0, gpis_properties},
      {8, "determinism and round trips", 0.0, determinism_roundtrip},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) o.require(false, "runtime " + fmt(secs) + " s over " + fmt(c.limit_s) + " s");
    if (!o.pass) ++failed;
    std::printf("[%s] criterion %d, %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
