#include "propsense/energy.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace propsense {

namespace {

int g_threads = 1;

constexpr double kInf = std::numeric_limits<double>::infinity();

// SVD with U, V proper rotations; the sign of det(A) is carried by s(2).
struct SignedSvd {
  Mat3 U, V;
  Vec3 s;
};

SignedSvd signed_svd(const Mat3& A) {
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  SignedSvd out{svd.matrixU(), svd.matrixV(), svd.singularValues()};
  if (out.U.determinant() < 0.0) {
    out.U.col(2) *= -1.0;
    out.s(2) *= -1.0;
  }
  if (out.V.determinant() < 0.0) {
    out.V.col(2) *= -1.0;
    out.s(2) *= -1.0;
  }
  return out;
}

using Vec9 = Eigen::Matrix<double, 9, 1>;

Vec9 flat(const Mat3& m) { return Eigen::Map<const Vec9>(m.data()); }

struct HessianModes {
  double lambda[9];
  Mat3 Q[9];  // unit Frobenius norm, mutually orthogonal
};

// Separable isotropic energy Psi = sum phi(s_i): the Hessian has scaling
// modes u_i v_i^T with phi''(s_i), and per pair (i, j) a flip mode with
// (phi'_i - phi'_j)/(s_i - s_j) and a twist mode with
// (phi'_i + phi'_j)/(s_i + s_j).
HessianModes hessian_modes(const Mat3& A, EnergyKind kind, bool project) {
  const SignedSvd svd = signed_svd(A);
  const Vec3& s = svd.s;
  HessianModes out;
  int n = 0;
  auto add = [&](double lambda, const Mat3& Q) {
    out.lambda[n] = project ? std::max(lambda, kProjectionFloor) : lambda;
    out.Q[n++] = Q;
  };
  const bool sd = kind == EnergyKind::SymmetricDirichlet;
  for (int i = 0; i < 3; ++i) {
    const double curv = sd ? 2.0 + 6.0 / std::pow(s(i), 4) : 2.0;
    add(curv, svd.U.col(i) * svd.V.col(i).transpose());
  }
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  constexpr int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& p : pairs) {
    const int i = p[0], j = p[1];
    const double si = s(i), sj = s(j);
    double flip, twist;
    if (sd) {
      const double cube = si * si * si * sj * sj * sj;
      flip = 2.0 + 2.0 * (si * si + si * sj + sj * sj) / cube;
      twist = 2.0 - 2.0 * (si * si - si * sj + sj * sj) / cube;
    } else {
      flip = 2.0;
      const double sum = si + sj;
      twist = std::abs(sum) > 1e-12 ? 2.0 - 4.0 / sum : 0.0;
    }
    const Mat3 a = svd.U.col(i) * svd.V.col(j).transpose();
    const Mat3 b = svd.U.col(j) * svd.V.col(i).transpose();
    add(flip, inv_sqrt2 * (a + b));
    add(twist, inv_sqrt2 * (a - b));
  }
  return out;
}

struct ElementTerms {
  double psi = 0.0;
  Vec12 grad = Vec12::Zero();
  Mat12 hess = Mat12::Zero();
};

ElementTerms element_terms(const Mat3& A, const Mat3& dm_inv, EnergyKind kind, double weight,
                           bool with_grad, bool with_hessian, HessianProjection projection) {
  ElementTerms out;
  out.psi = weight * psi_element(A, kind);
  if (!std::isfinite(out.psi) || !with_grad) return out;
  const Eigen::Matrix<double, 4, 3> B = shape_gradients(dm_inv);
  const Mat3 P = weight * psi_gradient(A, kind);
  const Eigen::Matrix<double, 3, 4> G = P * B.transpose();
  out.grad = Eigen::Map<const Vec12>(G.data());
  if (!with_hessian) return out;
  // d vec(A)/dx maps a mode Q to the nodal vector vec(Q B^T), so the element
  // Hessian is sum lambda w w^T over the 9 modes.
  const HessianModes modes = hessian_modes(A, kind, projection == HessianProjection::Analytic);
  Eigen::Matrix<double, 12, 9> W;
  for (int m = 0; m < 9; ++m) {
    const Eigen::Matrix<double, 3, 4> w = modes.Q[m] * B.transpose();
    W.col(m) = Eigen::Map<const Vec12>(w.data());
  }
  const Eigen::Matrix<double, 9, 1> lambda = weight * Eigen::Map<const Eigen::Matrix<double, 9, 1>>(modes.lambda);
  const Eigen::Matrix<double, 12, 9> WL = W * lambda.asDiagonal();
  out.hess.noalias() = WL.lazyProduct(W.transpose());
  if (projection == HessianProjection::Element) {
    Eigen::SelfAdjointEigenSolver<Mat12> es(out.hess);
    Vec12 ev = es.eigenvalues().cwiseMax(kProjectionFloor);
    out.hess = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  }
  return out;
}

double element_weight(const TetMesh& mesh, const EnergyModel& model, int t) {
  return model.volume_weighted ? mesh.rest_volume[t] : 1.0;
}

}  // namespace

void set_num_threads(int n) { g_threads = std::max(1, n); }
int num_threads() { return g_threads; }

Mat3 deformation_gradient(const TetMesh& mesh, const DeformState& state, int tet) {
  const Tet& t = mesh.tets[tet];
  Mat3 ds;
  const auto& x = state.positions;
  ds.col(0) = x.col(t[1]) - x.col(t[0]);
  ds.col(1) = x.col(t[2]) - x.col(t[0]);
  ds.col(2) = x.col(t[3]) - x.col(t[0]);
  return ds * mesh.rest_dm_inv[tet];
}

double psi_element(const Mat3& A, EnergyKind kind) {
  if (kind == EnergyKind::SymmetricDirichlet) {
    const double det = A.determinant();
    if (!(det > 0.0)) return kInf;
    return A.squaredNorm() + A.inverse().squaredNorm();
  }
  return (A - closest_rotation(A)).squaredNorm();
}

Mat3 closest_rotation(const Mat3& A) {
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  const double sign = (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return U * Vec3(1.0, 1.0, sign).asDiagonal() * V.transpose();
}

Mat3 psi_gradient(const Mat3& A, EnergyKind kind) {
  if (kind == EnergyKind::SymmetricDirichlet) {
    const Mat3 Ainv_t = A.inverse().transpose();
    return 2.0 * A - 2.0 * Ainv_t * Ainv_t.transpose() * Ainv_t;
  }
  return 2.0 * (A - closest_rotation(A));
}

Mat9 psi_hessian(const Mat3& A, EnergyKind kind, bool project) {
  const HessianModes modes = hessian_modes(A, kind, project);
  Mat9 H = Mat9::Zero();
  for (int m = 0; m < 9; ++m) {
    const Vec9 q = flat(modes.Q[m]);
    H.noalias() += modes.lambda[m] * q * q.transpose();
  }
  return H;
}

Eigen::Matrix<double, 4, 3> shape_gradients(const Mat3& dm_inv) {
  Eigen::Matrix<double, 4, 3> B;
  B.row(0) = -dm_inv.colwise().sum();
  B.bottomRows<3>() = dm_inv;
  return B;
}

double total_energy(const TetMesh& mesh, const DeformState& state, const EnergyModel& model) {
  double e = 0.0;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    e += element_weight(mesh, model, t) * psi_element(deformation_gradient(mesh, state, t), model.kind);
  }
  return e;
}

double min_jacobian(const TetMesh& mesh, const DeformState& state) {
  double worst = kInf;
  for (int t = 0; t < mesh.num_tets(); ++t) {
    worst = std::min(worst, deformation_gradient(mesh, state, t).determinant());
  }
  return worst;
}

ObjectiveEval augmented_objective(const TetMesh& mesh, const DeformState& state,
                                  const EnergyModel& model, const HandleConstraint& handles,
                                  const RigidPose& pose, HessianProjection projection) {
  check_state(mesh, state);
  const ObjectiveAssembler assembler(mesh, model);
  return assembler.evaluate(state, penalty_targets(handles, pose), true, projection);
}

ObjectiveAssembler::ObjectiveAssembler(const TetMesh& mesh, EnergyModel model)
    : mesh_(&mesh), model_(model) {
  if (!(model_.omega > 0.0)) throw InputError("energy model: omega must be positive");
  const int ndof = 3 * mesh.num_vertices();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.tets.size() * 144 + ndof);
  for (const Tet& t : mesh.tets) {
    for (int a = 0; a < 12; ++a)
      for (int b = 0; b < 12; ++b) trip.emplace_back(3 * t[a / 3] + a % 3, 3 * t[b / 3] + b % 3, 0.0);
  }
  for (int i = 0; i < ndof; ++i) trip.emplace_back(i, i, 0.0);
  pattern_.resize(ndof, ndof);
  pattern_.setFromTriplets(trip.begin(), trip.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  auto slot = [&](int row, int col) {
    const int* first = inner + outer[col];
    const int* last = inner + outer[col + 1];
    return static_cast<int>(std::lower_bound(first, last, row) - inner);
  };
  slots_.resize(mesh.tets.size() * 144);
  for (size_t ti = 0; ti < mesh.tets.size(); ++ti) {
    const Tet& t = mesh.tets[ti];
    for (int a = 0; a < 12; ++a)
      for (int b = 0; b < 12; ++b)
        slots_[ti * 144 + a * 12 + b] = slot(3 * t[a / 3] + a % 3, 3 * t[b / 3] + b % 3);
  }
  diag_slots_.resize(ndof);
  for (int i = 0; i < ndof; ++i) diag_slots_[i] = slot(i, i);
}

void ObjectiveAssembler::element_energies(const DeformState& state, std::vector<double>& out) const {
  const TetMesh& mesh = *mesh_;
  const int m = mesh.num_tets();
  out.resize(m);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int t = 0; t < m; ++t) {
    out[t] = element_weight(mesh, model_, t) *
             psi_element(deformation_gradient(mesh, state, t), model_.kind);
  }
}

double ObjectiveAssembler::penalty(const DeformState& state, const PenaltyTargets& targets) const {
  double p = 0.0;
  for (size_t i = 0; i < targets.indices.size(); ++i) {
    p += (state.positions.col(targets.indices[i]) - targets.positions.col(static_cast<Eigen::Index>(i)))
             .squaredNorm();
  }
  return model_.omega * p;
}

ObjectiveEval ObjectiveAssembler::evaluate(const DeformState& state, const PenaltyTargets& targets,
                                           bool with_hessian, HessianProjection projection) const {
  const TetMesh& mesh = *mesh_;
  const int m = mesh.num_tets();
  std::vector<ElementTerms> terms(m);
#pragma omp parallel for schedule(static) num_threads(num_threads())
  for (int t = 0; t < m; ++t) {
    terms[t] = element_terms(deformation_gradient(mesh, state, t), mesh.rest_dm_inv[t], model_.kind,
                             element_weight(mesh, model_, t), true, with_hessian, projection);
  }

  ObjectiveEval eval;
  double energy = 0.0;
  for (int t = 0; t < m; ++t) energy += terms[t].psi;
  if (!std::isfinite(energy)) {
    eval.energy = kInf;
    return eval;
  }
  eval.energy = energy + penalty(state, targets);

  const int ndof = 3 * mesh.num_vertices();
  eval.gradient = Eigen::VectorXd::Zero(ndof);
  for (int t = 0; t < m; ++t) {
    const Tet& tet = mesh.tets[t];
    for (int v = 0; v < 4; ++v) eval.gradient.segment<3>(3 * tet[v]) += terms[t].grad.segment<3>(3 * v);
  }
  const double two_omega = 2.0 * model_.omega;
  for (size_t i = 0; i < targets.indices.size(); ++i) {
    const int v = targets.indices[i];
    eval.gradient.segment<3>(3 * v) +=
        two_omega * (state.positions.col(v) - targets.positions.col(static_cast<Eigen::Index>(i)));
  }

  if (with_hessian) {
    eval.hessian = pattern_;
    double* values = eval.hessian.valuePtr();
    std::fill(values, values + eval.hessian.nonZeros(), 0.0);
    for (int t = 0; t < m; ++t) {
      const int* s = slots_.data() + static_cast<size_t>(t) * 144;
      const Mat12& h = terms[t].hess;
      for (int a = 0; a < 12; ++a)
        for (int b = 0; b < 12; ++b) values[s[a * 12 + b]] += h(a, b);
    }
    for (int v : targets.indices)
      for (int k = 0; k < 3; ++k) values[diag_slots_[3 * v + k]] += two_omega;
    eval.has_hessian = true;
  }
  return eval;
}

}  // namespace propsense
