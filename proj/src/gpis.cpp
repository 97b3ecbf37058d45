#include "propsense/gpis.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace propsense {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_training(const TrainingSet& train) {
  if (train.points.size() != train.values.size()) {
    throw InputError("training set: " + std::to_string(train.points.size()) + " points vs " +
                     std::to_string(train.values.size()) + " values");
  }
  if (!(train.noise_variance >= 0.0)) throw InputError("training set: negative noise variance");
  for (size_t i = 0; i < train.size(); ++i) {
    if (!train.points[i].allFinite() || !std::isfinite(train.values[i])) {
      throw InputError("training set: non-finite entry at row " + std::to_string(i));
    }
  }
}

Eigen::MatrixXd gram(const TrainingSet& train, const Hyperparameters& hyper) {
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = hyper.sigma_f2;
    for (Eigen::Index j = 0; j < i; ++j) {
      K(i, j) = K(j, i) = kernel(train.points[i], train.points[j], hyper.sigma_f2, hyper.length_scale);
    }
  }
  return K;
}

Eigen::VectorXd values_of(const TrainingSet& train) {
  return Eigen::Map<const Eigen::VectorXd>(train.values.data(), static_cast<Eigen::Index>(train.size()));
}

// Log marginal likelihood as a function of sigma_f2 for one length scale.
// The unit-variance correlation matrix is reduced once to tridiagonal form
// R = Q T Q^T; then K = Q (s T + noise I) Q^T and every evaluation is a
// tridiagonal LDL^T in O(N).
class LengthScaleSlice {
 public:
  LengthScaleSlice(const TrainingSet& train, double length_scale) : noise_(train.noise_variance) {
    const Eigen::MatrixXd R = gram(train, {1.0, length_scale});
    Eigen::Tridiagonalization<Eigen::MatrixXd> tri(R);
    diag_ = tri.diagonal();
    sub_ = tri.subDiagonal();
    z_ = tri.matrixQ().transpose() * values_of(train);
    scale_ = R.diagonal().maxCoeff();
  }

  double operator()(double sigma_f2) const {
    const Eigen::Index n = diag_.size();
    // Pivots below this are treated as numerically singular.
    const double floor = 1e-13 * (sigma_f2 * scale_ + noise_);
    Eigen::VectorXd d(n), w(n);
    double logdet = 0.0;
    double prev_l = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double di = sigma_f2 * diag_(i) + noise_;
      if (i > 0) di -= prev_l * prev_l * d(i - 1);
      if (!(di > floor)) return kNegInf;
      d(i) = di;
      logdet += std::log(di);
      // forward substitution for L w = z
      w(i) = z_(i) - (i > 0 ? prev_l * w(i - 1) : 0.0);
      if (i + 1 < n) prev_l = sigma_f2 * sub_(i) / di;
    }
    double quad = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) quad += w(i) * w(i) / d(i);
    return -0.5 * quad - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  }

 private:
  double noise_;
  double scale_ = 1.0;
  Eigen::VectorXd diag_, sub_, z_;
};

double lerp_log(double lo, double hi, int i, int count) {
  if (count <= 1) return std::sqrt(lo * hi);
  const double t = static_cast<double>(i) / static_cast<double>(count - 1);
  return std::exp(std::log(lo) + t * (std::log(hi) - std::log(lo)));
}

}  // namespace

TrainingSet generate_control_points(const std::vector<ContactPoint>& contacts, double offset,
                                    double noise_variance) {
  if (!(offset > 0.0)) throw InputError("control points: offset must be positive");
  TrainingSet train;
  train.noise_variance = noise_variance;
  train.points.reserve(3 * contacts.size());
  train.values.reserve(3 * contacts.size());
  for (size_t i = 0; i < contacts.size(); ++i) {
    const double len = contacts[i].normal.norm();
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw InputError("control points: contact " + std::to_string(i) + " has a zero normal");
    }
    const Vec3 n = contacts[i].normal / len;
    const Vec3& p = contacts[i].position;
    train.points.push_back(p);
    train.values.push_back(0.0);
    train.points.push_back(p + offset * n);
    train.values.push_back(offset);
    train.points.push_back(p - offset * n);
    train.values.push_back(-offset);
  }
  return train;
}

double kernel(const Vec3& a, const Vec3& b, double sigma_f2, double length_scale) {
  return sigma_f2 * std::exp(-(a - b).squaredNorm() / (2.0 * length_scale * length_scale));
}

double log_marginal_likelihood(const TrainingSet& train, const Hyperparameters& hyper) {
  check_training(train);
  Eigen::MatrixXd K = gram(train, hyper);
  K.diagonal().array() += train.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) return kNegInf;
  const Eigen::VectorXd y = values_of(train);
  const Eigen::VectorXd alpha = llt.solve(y);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * y.dot(alpha) - 0.5 * logdet -
         0.5 * static_cast<double>(train.size()) * std::log(2.0 * std::numbers::pi);
}

GpisModel make_model(const TrainingSet& train, const Hyperparameters& hyper) {
  check_training(train);
  if (!(hyper.sigma_f2 > 0.0) || !(hyper.length_scale > 0.0)) {
    throw InputError("gpis: hyperparameters must be positive");
  }
  GpisModel model;
  model.train = train;
  model.hyper = hyper;
  const Eigen::Index n = static_cast<Eigen::Index>(train.size());
  Eigen::MatrixXd K = gram(train, hyper);
  K.diagonal().array() += train.noise_variance;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    model.jitter = 1e-8;
    K.diagonal().array() += model.jitter;
    llt.compute(K);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("gpis: Gram matrix is singular even with jitter (duplicate points?)");
    }
  }
  model.gram_inverse = llt.solve(Eigen::MatrixXd::Identity(n, n));
  model.gram_inverse = 0.5 * (model.gram_inverse + model.gram_inverse.transpose()).eval();
  const Eigen::VectorXd centred = values_of(train).array() - model.prior_mean;
  model.weights = llt.solve(centred);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  model.log_marginal_likelihood = -0.5 * centred.dot(model.weights) - 0.5 * logdet -
                                  0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  return model;
}

GpisModel fit(const TrainingSet& train, const HyperparameterBounds& bounds) {
  check_training(train);
  if (train.size() < 3) throw InputError("gpis: need at least 3 training points");
  if (train.size() > 2000) throw InputError("gpis: more than 2000 training points; split into local models");
  if (!(bounds.sigma_f2_min > 0.0 && bounds.sigma_f2_max >= bounds.sigma_f2_min &&
        bounds.length_min > 0.0 && bounds.length_max >= bounds.length_min && bounds.grid >= 1)) {
    throw InputError("gpis: invalid hyperparameter bounds");
  }

  double best = kNegInf;
  Hyperparameters best_h{bounds.sigma_f2_min, bounds.length_min};
  for (int j = 0; j < bounds.grid; ++j) {
    const double l = lerp_log(bounds.length_min, bounds.length_max, j, bounds.grid);
    const LengthScaleSlice slice(train, l);
    for (int i = 0; i < bounds.grid; ++i) {
      const double s = lerp_log(bounds.sigma_f2_min, bounds.sigma_f2_max, i, bounds.grid);
      const double v = slice(s);
      if (v > best) {
        best = v;
        best_h = {s, l};
      }
    }
  }

  // Pattern search in log space, clamped to the bounds.
  if (std::isfinite(best)) {
    auto span = [&](double lo, double hi) {
      return bounds.grid > 1 ? (std::log(hi) - std::log(lo)) / (bounds.grid - 1) : 0.0;
    };
    double step_s = span(bounds.sigma_f2_min, bounds.sigma_f2_max);
    double step_l = span(bounds.length_min, bounds.length_max);
    for (int round = 0; round < 40 && (step_s > 1e-4 || step_l > 1e-4); ++round) {
      bool improved = false;
      for (int dl : {-1, 0, 1}) {
        const double l = std::clamp(best_h.length_scale * std::exp(dl * step_l), bounds.length_min,
                                    bounds.length_max);
        const LengthScaleSlice slice(train, l);
        for (int ds : {-1, 0, 1}) {
          if (dl == 0 && ds == 0) continue;
          const double s = std::clamp(best_h.sigma_f2 * std::exp(ds * step_s), bounds.sigma_f2_min,
                                      bounds.sigma_f2_max);
          const double v = slice(s);
          if (v > best) {
            best = v;
            best_h = {s, l};
            improved = true;
          }
        }
      }
      if (!improved) {
        step_s *= 0.5;
        step_l *= 0.5;
      }
    }
  }
  return make_model(train, best_h);
}

Prediction predict(const GpisModel& model, const Vec3& query) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.train.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i) = kernel(model.train.points[i], query, model.hyper.sigma_f2, model.hyper.length_scale);
  }
  Prediction p;
  p.mean = model.prior_mean + k.dot(model.weights);
  p.variance = std::max(0.0, model.hyper.sigma_f2 - k.dot(model.gram_inverse * k));
  return p;
}

SurfacePatch extract_isosurface(const GpisModel& model, const Box& region, double resolution,
                                double max_variance_ratio) {
  if (!(resolution > 0.0)) throw InputError("isosurface: resolution must be positive");
  const Vec3 extent = region.hi - region.lo;
  if (!(extent.minCoeff() > 0.0)) throw InputError("isosurface: empty region");
  if (extent.prod() / std::pow(resolution, 3) > 1e8) {
    throw InputError("isosurface: region holds more than 1e8 voxels at this resolution");
  }
  int dims[3];
  for (int a = 0; a < 3; ++a) dims[a] = std::max(1, static_cast<int>(std::ceil(extent(a) / resolution - 1e-9)));
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  auto centre = [&](int ix, int iy, int iz) {
    return Vec3(region.lo.x() + (ix + 0.5) * resolution, region.lo.y() + (iy + 0.5) * resolution,
                region.lo.z() + (iz + 0.5) * resolution);
  };

  SurfacePatch patch;
  patch.interval_lo = region.lo.z();
  patch.interval_hi = region.hi.z();
  const Eigen::Index n = static_cast<Eigen::Index>(model.train.size());
  if (n == 0) return patch;

  // The squared-exponential kernel factorizes over axes, so the mean on the
  // grid is a sum over training points of products of 1D factors; the z
  // contraction is a dense matrix product.
  const double inv2l2 = 1.0 / (2.0 * model.hyper.length_scale * model.hyper.length_scale);
  auto factors = [&](int axis, int count) {
    Eigen::MatrixXd f(count, n);
    for (int c = 0; c < count; ++c) {
      const double x = region.lo(axis) + (c + 0.5) * resolution;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = x - model.train.points[i](axis);
        f(c, i) = std::exp(-d * d * inv2l2);
      }
    }
    return f;
  };
  const Eigen::MatrixXd fx = factors(0, nx), fy = factors(1, ny), fz = factors(2, nz);
  const Eigen::RowVectorXd w = model.hyper.sigma_f2 * model.weights.transpose();
  // Mean on one x-slab (ny by nz); three slabs are live at a time.
  Eigen::MatrixXd rows(ny, n);
  auto slab = [&](int ix, Eigen::MatrixXd& out) {
    for (int iy = 0; iy < ny; ++iy) rows.row(iy) = w.cwiseProduct(fx.row(ix)).cwiseProduct(fy.row(iy));
    out.noalias() = rows * fz.transpose();
    out.array() += model.prior_mean;
  };
  Eigen::MatrixXd prev, cur, next;
  slab(0, cur);
  if (nx > 1) slab(1, next);

  const double max_var = max_variance_ratio * model.hyper.sigma_f2;
  constexpr int offsets[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int ix = 0; ix < nx; ++ix) {
    auto at = [&](int jx, int jy, int jz) {
      const Eigen::MatrixXd& m = jx < ix ? prev : (jx > ix ? next : cur);
      return m(jy, jz);
    };
    for (int iy = 0; iy < ny; ++iy) {
      for (int iz = 0; iz < nz; ++iz) {
        const double f = cur(iy, iz);
        if (!(f < 0.0)) continue;  // emit from the inside voxel of each crossing
        int best = -1;
        double best_jump = 0.0;
        for (int k = 0; k < 6; ++k) {
          const int jx = ix + offsets[k][0], jy = iy + offsets[k][1], jz = iz + offsets[k][2];
          if (jx < 0 || jy < 0 || jz < 0 || jx >= nx || jy >= ny || jz >= nz) continue;
          const double g = at(jx, jy, jz);
          if (g >= 0.0 && g - f > best_jump) {
            best_jump = g - f;
            best = k;
          }
        }
        if (best < 0) continue;
        const Vec3 p = centre(ix, iy, iz);
        const Vec3 q = centre(ix + offsets[best][0], iy + offsets[best][1], iz + offsets[best][2]);
        const Vec3 mid = 0.5 * (p + q);
        const Prediction pm = predict(model, mid);
        const Vec3 point = pm.mean < 0.0 ? 0.5 * (mid + q) : 0.5 * (p + mid);
        if (predict(model, point).variance > max_var) continue;
        patch.points.push_back(point);
      }
    }
    std::swap(prev, cur);
    std::swap(cur, next);
    if (ix + 2 < nx) slab(ix + 2, next);
  }
  return patch;
}

std::vector<Vec3> concatenate_patches(const std::vector<SurfacePatch>& patches, const Vec3& axis) {
  const Vec3 dir = axis.normalized();
  std::vector<Vec3> out;
  for (size_t k = 0; k < patches.size(); ++k) {
    const SurfacePatch& patch = patches[k];
    for (const Vec3& p : patch.points) {
      const double s = dir.dot(p);
      if (!(s >= patch.interval_lo && s < patch.interval_hi)) continue;
      bool owned_earlier = false;
      for (size_t j = 0; j < k && !owned_earlier; ++j) {
        owned_earlier = s >= patches[j].interval_lo && s < patches[j].interval_hi;
      }
      if (!owned_earlier) out.push_back(p);
    }
  }
  return out;
}

KdTree::KdTree(const std::vector<Vec3>& points) : points_(&points) {
  std::vector<int> idx(points.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  nodes_.reserve(points.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int lo, int hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const int mid = lo + (hi - lo) / 2;
  const auto& pts = *points_;
  std::nth_element(idx.begin() + lo, idx.begin() + mid, idx.begin() + hi, [&](int a, int b) {
    if (pts[a](axis) != pts[b](axis)) return pts[a](axis) < pts[b](axis);
    return a < b;
  });
  const int node = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[mid], axis, -1, -1});
  const int left = build(idx, lo, mid, depth + 1);
  const int right = build(idx, mid + 1, hi, depth + 1);
  nodes_[node].left = left;
  nodes_[node].right = right;
  return node;
}

void KdTree::search(int node, const Vec3& q, double& best, int& best_idx) const {
  if (node < 0) return;
  const Node& nd = nodes_[node];
  const Vec3& p = (*points_)[nd.point];
  const double d = (q - p).squaredNorm();
  if (d < best || (d == best && nd.point < best_idx)) {
    best = d;
    best_idx = nd.point;
  }
  const double diff = q(nd.axis) - p(nd.axis);
  const int near = diff < 0.0 ? nd.left : nd.right;
  const int far = diff < 0.0 ? nd.right : nd.left;
  search(near, q, best, best_idx);
  if (diff * diff <= best) search(far, q, best, best_idx);
}

std::pair<double, int> KdTree::nearest(const Vec3& q) const {
  double best = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  search(root_, q, best, best_idx);
  return {best, best_idx};
}

double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty() || b.empty()) throw InputError("chamfer: empty point cloud");
  auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
    const KdTree tree(to);
    double sum = 0.0;
    for (const Vec3& p : from) sum += tree.nearest(p).first;
    return sum / static_cast<double>(from.size());
  };
  return one_way(a, b) + one_way(b, a);
}

}  // namespace propsense
