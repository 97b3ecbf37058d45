#include "propsense/oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace propsense {

namespace {

struct M3 {
  double a[3][3];
};

M3 mul(const M3& x, const M3& y) {
  M3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r.a[i][j] += x.a[i][k] * y.a[k][j];
  return r;
}

M3 transpose(const M3& x) {
  M3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.a[i][j] = x.a[j][i];
  return r;
}

double det(const M3& m) {
  const auto& a = m.a;
  return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
         a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
}

M3 inverse(const M3& m, double d) {
  const auto& a = m.a;
  M3 r;
  r.a[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / d;
  r.a[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / d;
  r.a[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / d;
  r.a[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / d;
  r.a[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / d;
  r.a[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / d;
  r.a[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / d;
  r.a[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / d;
  r.a[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / d;
  return r;
}

double frob2(const M3& m) {
  double s = 0.0;
  for (const auto& row : m.a)
    for (double v : row) s += v * v;
  return s;
}

M3 edges(const std::vector<double>& x, const Tet& t) {
  M3 d;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) d.a[r][c] = x[3 * t[c + 1] + r] - x[3 * t[0] + r];
  return d;
}

class Problem {
 public:
  Problem(const TetMesh& mesh, const HandleConstraint& handles, const RigidPose& pose, double omega)
      : mesh_(mesh), omega_(omega) {
    std::vector<double> rest(3 * mesh.num_vertices());
    for (int v = 0; v < mesh.num_vertices(); ++v)
      for (int r = 0; r < 3; ++r) rest[3 * v + r] = mesh.vertices(r, v);
    for (const Tet& t : mesh.tets) {
      const M3 dm = edges(rest, t);
      dm_inv_.push_back(inverse(dm, det(dm)));
    }
    const Mat3 R = pose.rotation.toRotationMatrix();
    for (size_t i = 0; i < handles.indices.size(); ++i) {
      pinned_.push_back(handles.indices[i]);
      target_.push_back(R * handles.rest_positions.col(static_cast<Eigen::Index>(i)) + pose.translation);
    }
    for (size_t i = 0; i < handles.anchor_indices.size(); ++i) {
      pinned_.push_back(handles.anchor_indices[i]);
      target_.push_back(handles.anchor_positions.col(static_cast<Eigen::Index>(i)));
    }
  }

  int num_tets() const { return mesh_.num_tets(); }

  double element(const std::vector<double>& x, int t, double* grad12) const {
    const M3 F = mul(edges(x, mesh_.tets[t]), dm_inv_[t]);
    const double J = det(F);
    if (!(J > 0.0)) return std::numeric_limits<double>::infinity();
    const M3 Fi = inverse(F, J);
    const double psi = frob2(F) + frob2(Fi);
    if (grad12) {
      const M3 FiT = transpose(Fi);
      const M3 cubic = mul(mul(FiT, Fi), FiT);
      M3 P;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) P.a[i][j] = 2.0 * F.a[i][j] - 2.0 * cubic.a[i][j];
      const M3 H = mul(P, transpose(dm_inv_[t]));
      for (int r = 0; r < 3; ++r) {
        grad12[r] = -(H.a[r][0] + H.a[r][1] + H.a[r][2]);
        for (int c = 0; c < 3; ++c) grad12[3 * (c + 1) + r] = H.a[r][c];
      }
    }
    return psi;
  }

  double penalty(const std::vector<double>& x, size_t i) const {
    double s = 0.0;
    for (int r = 0; r < 3; ++r) {
      const double d = x[3 * pinned_[i] + r] - target_[i](r);
      s += d * d;
    }
    return omega_ * s;
  }

  /// Returns the energy; fills per-term values and the gradient.
  double evaluate(const std::vector<double>& x, std::vector<double>& terms, std::vector<double>* grad) const {
    terms.assign(mesh_.tets.size() + pinned_.size(), 0.0);
    if (grad) grad->assign(x.size(), 0.0);
    double total = 0.0;
    double g[12];
    for (int t = 0; t < num_tets(); ++t) {
      terms[t] = element(x, t, grad ? g : nullptr);
      total += terms[t];
      if (grad && std::isfinite(terms[t])) {
        for (int a = 0; a < 4; ++a)
          for (int r = 0; r < 3; ++r) (*grad)[3 * mesh_.tets[t][a] + r] += g[3 * a + r];
      }
    }
    for (size_t i = 0; i < pinned_.size(); ++i) {
      terms[mesh_.tets.size() + i] = penalty(x, i);
      total += terms[mesh_.tets.size() + i];
      if (grad)
        for (int r = 0; r < 3; ++r) (*grad)[3 * pinned_[i] + r] += 2.0 * omega_ * (x[3 * pinned_[i] + r] - target_[i](r));
    }
    return total;
  }

  /// Approximate diagonal of the Hessian at rest.
  std::vector<double> jacobi() const {
    std::vector<double> d(3 * mesh_.num_vertices(), 0.0);
    for (int t = 0; t < num_tets(); ++t) {
      const M3& B = dm_inv_[t];
      double b0[3] = {0, 0, 0};
      for (int c = 0; c < 3; ++c) {
        double row = 0.0;
        for (int k = 0; k < 3; ++k) {
          row += B.a[c][k] * B.a[c][k];
          b0[k] -= B.a[c][k];
        }
        for (int r = 0; r < 3; ++r) d[3 * mesh_.tets[t][c + 1] + r] += 8.0 * row;
      }
      const double row0 = b0[0] * b0[0] + b0[1] * b0[1] + b0[2] * b0[2];
      for (int r = 0; r < 3; ++r) d[3 * mesh_.tets[t][0] + r] += 8.0 * row0;
    }
    for (int v : pinned_)
      for (int r = 0; r < 3; ++r) d[3 * v + r] += 2.0 * omega_;
    return d;
  }

 private:
  const TetMesh& mesh_;
  double omega_;
  std::vector<M3> dm_inv_;
  std::vector<int> pinned_;
  std::vector<Vec3> target_;
};

}  // namespace

OracleResult descent_oracle(const TetMesh& mesh, const HandleConstraint& handles, const RigidPose& pose,
                            const DeformState& start, const OracleConfig& cfg) {
  check_state(mesh, start);
  if (!(cfg.omega > 0.0)) throw InputError("oracle: omega must be positive");
  const Problem prob(mesh, handles, pose, cfg.omega);
  const size_t n = 3 * static_cast<size_t>(mesh.num_vertices());
  std::vector<double> x(n), trial(n), grad, dir(n), terms, trial_terms;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    for (int r = 0; r < 3; ++r) x[3 * v + r] = start.positions(r, v);
  const std::vector<double> diag = prob.jacobi();

  double energy = prob.evaluate(x, terms, &grad);
  if (!std::isfinite(energy)) throw InputError("oracle: start state has an inverted element");

  OracleResult res;
  double alpha = 1.0;
  for (; res.steps < cfg.max_steps; ++res.steps) {
    double slope = 0.0, dmax = 0.0;
    for (size_t i = 0; i < n; ++i) {
      dir[i] = -grad[i] / diag[i];
      slope += grad[i] * dir[i];
      dmax = std::max(dmax, std::abs(dir[i]));
    }
    if (dmax <= cfg.step_tol) break;
    alpha = std::min(1.0, 2.0 * alpha);
    bool accepted = false;
    while (alpha * dmax > 1e-3 * cfg.step_tol) {
      for (size_t i = 0; i < n; ++i) trial[i] = x[i] + alpha * dir[i];
      prob.evaluate(trial, trial_terms, nullptr);
      double delta = 0.0;
      for (size_t k = 0; k < terms.size(); ++k) delta += trial_terms[k] - terms[k];
      if (std::isfinite(delta) && delta <= 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    x.swap(trial);
    energy = prob.evaluate(x, terms, &grad);
    if (alpha * dmax <= cfg.step_tol) break;
  }

  res.state.positions.resize(3, mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v)
    for (int r = 0; r < 3; ++r) res.state.positions(r, v) = x[3 * v + r];
  res.energy = energy;
  double g2 = 0.0;
  for (double g : grad) g2 += g * g;
  res.gradient_norm = std::sqrt(g2);
  return res;
}

}  // namespace propsense
