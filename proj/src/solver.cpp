#include "propsense/solver.hpp"

#include "propsense/skyline.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace propsense {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Rows of the adjugate of [c0 c1 c2] are c1 x c2, c2 x c0, c0 x c1.
Mat3 adjugate(const Mat3& m) {
  Mat3 adj;
  adj.row(0) = m.col(1).cross(m.col(2)).transpose();
  adj.row(1) = m.col(2).cross(m.col(0)).transpose();
  adj.row(2) = m.col(0).cross(m.col(1)).transpose();
  return adj;
}

Mat3 edge_matrix(const Eigen::Matrix3Xd& x, const Tet& t) {
  Mat3 d;
  d.col(0) = x.col(t[1]) - x.col(t[0]);
  d.col(1) = x.col(t[2]) - x.col(t[0]);
  d.col(2) = x.col(t[3]) - x.col(t[0]);
  return d;
}

double max_step_without_inversion(const TetMesh& mesh, const DeformState& x,
                                  const Eigen::Matrix3Xd& dx, double guard) {
  const double limit = 1.0 / guard;
  double step = limit;
  for (const Tet& t : mesh.tets) {
    step = std::min(step, first_inversion_step(edge_matrix(x.positions, t), edge_matrix(dx, t), step));
  }
  return std::min(1.0, guard * step);
}

double penalty_delta(const DeformState& before, const DeformState& after,
                     const PenaltyTargets& targets, double omega) {
  double d = 0.0;
  for (size_t i = 0; i < targets.indices.size(); ++i) {
    const int v = targets.indices[i];
    const auto target = targets.positions.col(static_cast<Eigen::Index>(i));
    d += (after.positions.col(v) - target).squaredNorm() - (before.positions.col(v) - target).squaredNorm();
  }
  return omega * d;
}

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double e) { return std::isfinite(e); });
}

void check_warm_start(const TetMesh& mesh, const DeformState& warm_start) {
  if (warm_start.size() != mesh.num_vertices() || !warm_start.positions.allFinite()) {
    throw InputError("warm start: wrong size or non-finite coordinates");
  }
  if (!(min_jacobian(mesh, warm_start) > 0.0)) {
    throw InputError("warm start: contains an inverted or degenerate element");
  }
}

}  // namespace

void SolverConfig::validate() const {
  if (!(omega > 0.0)) throw InputError("solver: omega must be positive");
  if (!(epsilon > 0.0)) throw InputError("solver: epsilon must be positive");
  if (max_iters < 1) throw InputError("solver: max_iters must be at least 1");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw InputError("solver: backtrack factor must lie in (0, 1)");
  }
  if (!(inversion_guard > 0.0 && inversion_guard < 1.0)) {
    throw InputError("solver: inversion guard must lie in (0, 1)");
  }
  if (arap_iters < 1) throw InputError("solver: arap_iters must be at least 1");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::LineSearchStalled: return "line_search_stalled";
    case SolveStatus::FixedIterations: return "fixed_iterations";
  }
  return "unknown";
}

double first_inversion_step(const Mat3& M0, const Mat3& M1, double limit) {
  // det(M0 + a M1) = c0 + c1 a + c2 a^2 + c3 a^3
  const double c0 = M0.determinant();
  if (!(c0 > 0.0)) return 0.0;
  const double c1 = (adjugate(M0) * M1).trace();
  const double c2 = (adjugate(M1) * M0).trace();
  const double c3 = M1.determinant();
  auto p = [&](double a) { return ((c3 * a + c2) * a + c1) * a + c0; };

  // Split [0, limit] at the critical points so that p is monotone on each
  // piece, then bisect the first piece where p reaches zero.
  std::vector<double> cuts{0.0};
  const double qa = 3.0 * c3, qb = 2.0 * c2, qc = c1;
  if (qa != 0.0) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
      if (q != 0.0) {
        cuts.push_back(q / qa);
        cuts.push_back(qc / q);
      } else {
        cuts.push_back(0.0);
      }
    }
  } else if (qb != 0.0) {
    cuts.push_back(-qc / qb);
  }
  std::vector<double> pts;
  for (double c : cuts)
    if (c > 0.0 && c < limit) pts.push_back(c);
  pts.push_back(limit);
  std::sort(pts.begin(), pts.end());

  double lo = 0.0;
  for (double hi : pts) {
    if (p(hi) <= 0.0) {
      double a = lo, b = hi;
      for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, b); ++it) {
        const double mid = 0.5 * (a + b);
        (p(mid) > 0.0 ? a : b) = mid;
      }
      return a;
    }
    lo = hi;
  }
  return limit;
}

// ---------------------------------------------------------------------------
// Newton

struct NewtonSolver::Impl {
  const TetMesh& mesh;
  SolverConfig cfg;
  HandleConstraint handles;
  ObjectiveAssembler assembler;
  SkylineCholesky factor;

  Impl(const TetMesh& m, const EnergyModel& model, const HandleConstraint& h, const SolverConfig& c)
      : mesh(m),
        cfg(c),
        handles(h),
        assembler(m, EnergyModel{model.kind, c.omega, c.volume_weighted}) {}

  SolveReport solve(const RigidPose& pose, const DeformState& warm_start);
};

NewtonSolver::NewtonSolver(const TetMesh& mesh, const EnergyModel& model,
                           const HandleConstraint& handles, const SolverConfig& cfg) {
  cfg.validate();
  impl_ = std::make_unique<Impl>(mesh, model, handles, cfg);
}

NewtonSolver::~NewtonSolver() = default;
NewtonSolver::NewtonSolver(NewtonSolver&&) noexcept = default;

SolveReport NewtonSolver::solve(const RigidPose& pose, const DeformState& warm_start) {
  return impl_->solve(pose, warm_start);
}

SolveReport NewtonSolver::Impl::solve(const RigidPose& pose, const DeformState& warm_start) {
  const auto start = Clock::now();
  check_pose(pose);
  check_warm_start(mesh, warm_start);
  const PenaltyTargets targets = penalty_targets(handles, pose);

  SolveReport report;
  report.method = "newton";
  DeformState x = warm_start;
  std::vector<double> psi, psi_trial;
  assembler.element_energies(x, psi);
  if (!all_finite(psi)) throw InputError("warm start: non-finite energy");

  ObjectiveEval eval = assembler.evaluate(x, targets, false);
  report.energy_history.push_back(eval.energy);
  report.min_det_history.push_back(min_jacobian(mesh, x));
  report.status = SolveStatus::MaxIterations;

  const int ndof = 3 * mesh.num_vertices();
  int k = 0;
  while (true) {
    if (eval.gradient.norm() <= cfg.epsilon) {
      report.status = SolveStatus::Converged;
      break;
    }
    if (k >= cfg.max_iters) break;

    eval = assembler.evaluate(x, targets, true, cfg.projection);
    double* values = eval.hessian.valuePtr();
    for (int slot : assembler.diagonal_slots()) values[slot] += cfg.regularization;
    if (!factor.analyzed()) factor.analyze(eval.hessian);
    if (!factor.factorize(eval.hessian)) {
      throw NumericalError("newton: factorization of the projected Hessian failed at iteration " +
                           std::to_string(k));
    }
    Eigen::VectorXd step = factor.solve(-eval.gradient);
    if (!step.allFinite()) {
      throw NumericalError("newton: linear solve failed at iteration " + std::to_string(k));
    }
    double slope = eval.gradient.dot(step);
    if (!(slope < 0.0)) {
      step = -eval.gradient;
      slope = -eval.gradient.squaredNorm();
    }
    const Eigen::Map<const Eigen::Matrix3Xd> dx(step.data(), 3, ndof / 3);

    // Energy differences are accumulated per element so that the sufficient
    // decrease test stays meaningful when the total is large.
    double alpha = max_step_without_inversion(mesh, x, dx, cfg.inversion_guard);
    bool accepted = false;
    DeformState trial;
    while (alpha > 1e-14) {
      trial.positions = x.positions + alpha * dx;
      assembler.element_energies(trial, psi_trial);
      if (all_finite(psi_trial)) {
        double delta = 0.0;
        for (size_t t = 0; t < psi.size(); ++t) delta += psi_trial[t] - psi[t];
        delta += penalty_delta(x, trial, targets, cfg.omega);
        if (delta <= cfg.armijo_c * alpha * slope) {
          accepted = true;
          break;
        }
      }
      alpha *= cfg.backtrack_factor;
    }
    if (!accepted) {
      report.status = SolveStatus::LineSearchStalled;
      eval = assembler.evaluate(x, targets, false);
      break;
    }
    x = std::move(trial);
    std::swap(psi, psi_trial);
    ++k;
    eval = assembler.evaluate(x, targets, false);
    report.energy_history.push_back(eval.energy);
    report.min_det_history.push_back(min_jacobian(mesh, x));
  }

  report.iterations = k;
  report.final_energy = eval.energy;
  report.final_gradient_norm = eval.gradient.norm();
  report.constraint_violation = constraint_violation(x, targets);
  report.final_state = std::move(x);
  report.wall_time = seconds_since(start);
  return report;
}

SolveReport solve_newton(const TetMesh& mesh, const EnergyModel& model,
                         const HandleConstraint& handles, const RigidPose& pose,
                         const DeformState& warm_start, const SolverConfig& cfg) {
  const auto start = Clock::now();
  NewtonSolver solver(mesh, model, handles, cfg);
  SolveReport report = solver.solve(pose, warm_start);
  report.wall_time = seconds_since(start);
  return report;
}

// ---------------------------------------------------------------------------
// ARAP local/global

struct ArapSolver::Impl {
  const TetMesh& mesh;
  SolverConfig cfg;
  HandleConstraint handles;
  ObjectiveAssembler assembler;
  std::vector<Eigen::Matrix<double, 4, 3>> shape;
  std::vector<double> weight;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  Impl(const TetMesh& m, const HandleConstraint& h, const SolverConfig& c)
      : mesh(m), cfg(c), handles(h), assembler(m, EnergyModel{EnergyKind::Arap, c.omega, c.volume_weighted}) {
    const int n = mesh.num_vertices();
    const int mt = mesh.num_tets();
    shape.resize(mt);
    weight.resize(mt);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(mt) * 16 + h.num_constrained());
    for (int t = 0; t < mt; ++t) {
      shape[t] = shape_gradients(mesh.rest_dm_inv[t]);
      weight[t] = cfg.volume_weighted ? mesh.rest_volume[t] : 1.0;
      const Eigen::Matrix4d k = weight[t] * shape[t] * shape[t].transpose();
      const Tet& tet = mesh.tets[t];
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) trip.emplace_back(tet[a], tet[b], k(a, b));
    }
    for (int v : h.indices) trip.emplace_back(v, v, cfg.omega);
    for (int v : h.anchor_indices) trip.emplace_back(v, v, cfg.omega);
    Eigen::SparseMatrix<double> K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    ldlt.compute(K);
    if (ldlt.info() != Eigen::Success) {
      throw NumericalError("arap: global system matrix is singular (no constrained vertices?)");
    }
  }

  SolveReport solve(const RigidPose& pose, const DeformState& warm_start);
};

ArapSolver::ArapSolver(const TetMesh& mesh, const HandleConstraint& handles, const SolverConfig& cfg) {
  cfg.validate();
  impl_ = std::make_unique<Impl>(mesh, handles, cfg);
}

ArapSolver::~ArapSolver() = default;
ArapSolver::ArapSolver(ArapSolver&&) noexcept = default;

SolveReport ArapSolver::solve(const RigidPose& pose, const DeformState& warm_start) {
  return impl_->solve(pose, warm_start);
}

SolveReport ArapSolver::Impl::solve(const RigidPose& pose, const DeformState& warm_start) {
  const auto start = Clock::now();
  check_pose(pose);
  check_state(mesh, warm_start);
  const PenaltyTargets targets = penalty_targets(handles, pose);
  const int n = mesh.num_vertices();
  const int mt = mesh.num_tets();

  SolveReport report;
  report.method = "arap";
  report.status = SolveStatus::FixedIterations;
  DeformState x = warm_start;
  std::vector<Mat3> rotations(mt);
  Eigen::MatrixXd rhs(n, 3);
  for (int it = 0; it < cfg.arap_iters; ++it) {
    // The local step sees the current iterate, so its energy and smallest
    // Jacobian are recorded here at no extra cost.
    double energy = 0.0;
    double min_det = std::numeric_limits<double>::infinity();
    for (int t = 0; t < mt; ++t) {
      const Mat3 A = deformation_gradient(mesh, x, t);
      rotations[t] = closest_rotation(A);
      energy += weight[t] * (A - rotations[t]).squaredNorm();
      min_det = std::min(min_det, A.determinant());
    }
    report.energy_history.push_back(energy + assembler.penalty(x, targets));
    report.min_det_history.push_back(min_det);
    rhs.setZero();
    for (int t = 0; t < mt; ++t) {
      const Eigen::Matrix<double, 4, 3> r = weight[t] * shape[t] * rotations[t].transpose();
      const Tet& tet = mesh.tets[t];
      for (int a = 0; a < 4; ++a) rhs.row(tet[a]) += r.row(a);
    }
    for (size_t i = 0; i < targets.indices.size(); ++i) {
      rhs.row(targets.indices[i]) += cfg.omega * targets.positions.col(static_cast<Eigen::Index>(i)).transpose();
    }
    const Eigen::MatrixXd sol = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !sol.allFinite()) {
      throw NumericalError("arap: global solve failed at iteration " + std::to_string(it));
    }
    x.positions = sol.transpose();
  }

  const ObjectiveEval eval = assembler.evaluate(x, targets, false);
  report.energy_history.push_back(eval.energy);
  report.min_det_history.push_back(min_jacobian(mesh, x));
  report.iterations = cfg.arap_iters;
  report.final_energy = eval.energy;
  report.final_gradient_norm = eval.gradient.norm();
  report.constraint_violation = constraint_violation(x, targets);
  report.final_state = std::move(x);
  report.wall_time = seconds_since(start);
  return report;
}

SolveReport solve_arap(const TetMesh& mesh, const HandleConstraint& handles, const RigidPose& pose,
                       const DeformState& warm_start, const SolverConfig& cfg) {
  const auto start = Clock::now();
  ArapSolver solver(mesh, handles, cfg);
  SolveReport report = solver.solve(pose, warm_start);
  report.wall_time = seconds_since(start);
  return report;
}

std::vector<FrameResult> track_sequence(const TetMesh& mesh, const EnergyModel& model,
                                        const HandleConstraint& handles,
                                        const std::vector<RigidPose>& poses,
                                        const SolverConfig& cfg, SolverMethod method) {
  std::vector<FrameResult> frames;
  frames.reserve(poses.size());
  std::optional<NewtonSolver> newton;
  std::optional<ArapSolver> arap;
  if (method == SolverMethod::Newton) {
    newton.emplace(mesh, model, handles, cfg);
  } else {
    arap.emplace(mesh, handles, cfg);
  }
  DeformState warm = DeformState::rest(mesh);
  for (const RigidPose& pose : poses) {
    FrameResult frame;
    try {
      SolveReport r = newton ? newton->solve(pose, warm) : arap->solve(pose, warm);
      if (std::isfinite(r.final_energy)) warm = r.final_state;
      frame.report = std::move(r);
    } catch (const std::exception& e) {
      frame.error = e.what();
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

}  // namespace propsense
