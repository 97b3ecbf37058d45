#include "propsense/bench.hpp"

#include "propsense/proprio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace propsense {

std::pair<double, double> node_distance(const DeformState& a, const DeformState& b) {
  if (a.size() != b.size() || a.size() == 0) throw InputError("node distance: state size mismatch");
  const Eigen::VectorXd d = (a.positions - b.positions).colwise().norm();
  return {d.mean(), d.maxCoeff()};
}

namespace {

double sd_objective(const ObjectiveAssembler& assembler, const HandleConstraint& handles, const RigidPose& pose,
                    const DeformState& state) {
  return assembler.evaluate(state, penalty_targets(handles, pose), false).energy;
}

}  // namespace

std::vector<BenchRow> time_methods(const TetMesh& mesh, const BenchConfig& cfg) {
  const HandleConstraint handles = make_handle_constraint(mesh);
  const EnergyModel model{EnergyKind::SymmetricDirichlet, cfg.solver.omega, cfg.solver.volume_weighted};
  SolverConfig ref_cfg = cfg.solver;
  ref_cfg.epsilon = cfg.reference_epsilon;
  ref_cfg.max_iters = std::max(cfg.solver.max_iters, 200);
  NewtonSolver reference(mesh, model, handles, ref_cfg);
  const ObjectiveAssembler assembler(mesh, model);

  BenchRow rows[2];
  rows[0].method = "newton";
  rows[1].method = "arap";
  std::vector<double> times[2];
  double error_sum[2] = {0.0, 0.0}, energy_sum[2] = {0.0, 0.0};
  int solved[2] = {0, 0};
  for (synth::Motion motion : synth::all_motions()) {
    const std::vector<RigidPose> poses = synth::motion_ramp(mesh, motion, cfg.frames_per_motion);
    const auto newton = track_sequence(mesh, model, handles, poses, cfg.solver, SolverMethod::Newton);
    const auto arap = track_sequence(mesh, model, handles, poses, cfg.solver, SolverMethod::Arap);
    for (size_t f = 0; f < poses.size(); ++f) {
      // Converged reference, warm-started from the Newton result when it exists.
      std::optional<DeformState> ref;
      if (newton[f].report) {
        try {
          ref = reference.solve(poses[f], newton[f].report->final_state).final_state;
        } catch (const std::exception&) {
        }
      }
      const FrameResult* results[2] = {&newton[f], &arap[f]};
      for (int m = 0; m < 2; ++m) {
        ++rows[m].frames;
        if (!results[m]->report) {
          ++rows[m].failed_frames;
          continue;
        }
        const SolveReport& r = *results[m]->report;
        times[m].push_back(r.wall_time);
        energy_sum[m] += sd_objective(assembler, handles, poses[f], r.final_state);
        if (ref) error_sum[m] += node_distance(r.final_state, *ref).first;
        ++solved[m];
      }
    }
  }
  std::vector<BenchRow> out;
  for (int m = 0; m < 2; ++m) {
    rows[m].elements = mesh.num_tets();
    if (!times[m].empty()) {
      rows[m].median_frame_time = median(times[m]);
      double s = 0.0;
      for (double t : times[m]) s += t;
      rows[m].mean_frame_time = s / static_cast<double>(times[m].size());
    }
    if (solved[m] > 0) {
      rows[m].mean_error = error_sum[m] / solved[m];
      rows[m].mean_sd_objective = energy_sum[m] / solved[m];
    }
    out.push_back(rows[m]);
  }
  return out;
}

std::vector<OmegaRow> omega_sweep(const TetMesh& mesh, const RigidPose& pose, const BenchConfig& cfg) {
  if (cfg.omegas.empty()) throw InputError("omega sweep: empty omega list");
  const HandleConstraint handles = make_handle_constraint(mesh);
  std::vector<OmegaRow> rows;
  std::vector<DeformState> states;
  for (double omega : cfg.omegas) {
    SolverConfig c = cfg.solver;
    c.omega = omega;
    c.epsilon = cfg.reference_epsilon;
    c.max_iters = std::max(c.max_iters, 200);
    const SolveReport r = solve_newton(mesh, EnergyModel{EnergyKind::SymmetricDirichlet, omega, c.volume_weighted},
                                       handles, pose, DeformState::rest(mesh), c);
    rows.push_back({omega, r.constraint_violation, 0.0, r.final_energy});
    states.push_back(r.final_state);
  }
  const size_t ref = static_cast<size_t>(
      std::max_element(cfg.omegas.begin(), cfg.omegas.end()) - cfg.omegas.begin());
  for (size_t i = 0; i < rows.size(); ++i) rows[i].mean_error = node_distance(states[i], states[ref]).first;
  return rows;
}

OracleComparison oracle_comparison(const TetMesh& mesh, const BenchConfig& cfg) {
  const HandleConstraint handles = make_handle_constraint(mesh);
  const EnergyModel model{EnergyKind::SymmetricDirichlet, cfg.solver.omega, cfg.solver.volume_weighted};
  Vec3 centre = Vec3::Zero();
  for (int i : handles.indices) centre += mesh.vertex(i);
  centre /= static_cast<double>(std::max<size_t>(1, handles.indices.size()));
  std::mt19937_64 rng(cfg.seed);
  OracleConfig ocfg = cfg.oracle;
  ocfg.omega = cfg.solver.omega;

  OracleComparison out;
  out.elements = mesh.num_tets();
  out.bbox_diagonal = mesh.bbox_diagonal();
  for (int p = 0; p < cfg.oracle_poses; ++p) {
    const RigidPose pose = synth::random_pose(rng, centre, 10.0 * std::numbers::pi / 180.0, 3.0);
    const DeformState rest = DeformState::rest(mesh);
    const SolveReport newton = solve_newton(mesh, model, handles, pose, rest, cfg.solver);
    const SolveReport arap = solve_arap(mesh, handles, pose, rest, cfg.solver);
    const OracleResult oracle = descent_oracle(mesh, handles, pose, rest, ocfg);
    const auto [n_mean, n_max] = node_distance(newton.final_state, oracle.state);
    out.newton_error += n_mean;
    out.arap_error += node_distance(arap.final_state, oracle.state).first;
    out.newton_max_distance = std::max(out.newton_max_distance, n_max);
    ++out.poses;
  }
  if (out.poses > 0) {
    out.newton_error /= out.poses;
    out.arap_error /= out.poses;
  }
  return out;
}

nlohmann::json to_json(const BenchResult& result) {
  nlohmann::json doc;
  nlohmann::json rows = nlohmann::json::array();
  for (const BenchRow& r : result.rows) {
    rows.push_back({{"method", r.method},
                    {"elements", r.elements},
                    {"frames", r.frames},
                    {"failed_frames", r.failed_frames},
                    {"median_frame_time_s", r.median_frame_time},
                    {"mean_frame_time_s", r.mean_frame_time},
                    {"mean_error_mm", r.mean_error},
                    {"mean_sd_objective", r.mean_sd_objective}});
  }
  doc["rows"] = std::move(rows);
  nlohmann::json sweep = nlohmann::json::array();
  for (const OmegaRow& r : result.omega_sweep) {
    sweep.push_back({{"omega", r.omega},
                     {"constraint_violation_mm", r.constraint_violation},
                     {"mean_error_mm", r.mean_error},
                     {"energy", r.energy}});
  }
  doc["omega_sweep"] = std::move(sweep);
  if (result.oracle) {
    const OracleComparison& o = *result.oracle;
    doc["oracle"] = {{"elements", o.elements},
                     {"poses", o.poses},
                     {"newton_mean_error_mm", o.newton_error},
                     {"arap_mean_error_mm", o.arap_error},
                     {"newton_max_distance_mm", o.newton_max_distance},
                     {"bbox_diagonal_mm", o.bbox_diagonal}};
  } else {
    doc["oracle"] = nullptr;
  }
  return doc;
}

}  // namespace propsense
