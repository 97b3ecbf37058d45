#pragma once

#include "propsense/common.hpp"
#include "propsense/proprio.hpp"

#include <Eigen/Dense>

#include <vector>

namespace propsense {

/// GP training data. Values are signed-distance-like: negative inside the
/// object, zero on its surface, positive outside.
struct TrainingSet {
  std::vector<Vec3> points;
  std::vector<double> values;
  double noise_variance = 0.0;  // sigma_eps^2 (mm^2)

  size_t size() const { return points.size(); }
};

struct Hyperparameters {
  double sigma_f2 = 1.0;     // signal variance (mm^2)
  double length_scale = 1.0;  // mm
};

struct HyperparameterBounds {
  double sigma_f2_min = 1e-2, sigma_f2_max = 1e4;
  double length_min = 0.5, length_max = 100.0;
  int grid = 20;  // log-spaced samples per axis
};

/// Fitted GP implicit surface. Immutable after fit; queries are thread safe.
struct GpisModel {
  TrainingSet train;
  Hyperparameters hyper;
  double prior_mean = 0.0;
  double jitter = 0.0;       // extra diagonal added to make the Gram matrix factorizable
  Eigen::MatrixXd gram_inverse;  // (K + (sigma_eps^2 + jitter) I)^-1
  Eigen::VectorXd weights;       // gram_inverse * (y - prior_mean)
  double log_marginal_likelihood = 0.0;
};

struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};

struct SurfacePatch {
  std::vector<Vec3> points;
  double interval_lo = 0.0;  // owned range along the exploration axis, [lo, hi)
  double interval_hi = 0.0;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Control points along object-outward normals: for each contact p with
/// normal n emits (p, 0), (p + d n, +d), (p - d n, -d). Throws InputError for
/// a zero normal or d <= 0. Normals are normalized.
TrainingSet generate_control_points(const std::vector<ContactPoint>& contacts, double offset,
                                    double noise_variance = 1e-6);

/// sigma_f2 * exp(-|a - b|^2 / (2 l^2)).
double kernel(const Vec3& a, const Vec3& b, double sigma_f2, double length_scale);

/// log p(y | X) = -1/2 y^T K^-1 y - 1/2 log|K| - N/2 log(2 pi), with
/// K = k(X, X) + sigma_eps^2 I and zero prior mean. Returns -infinity if K
/// is not positive definite.
double log_marginal_likelihood(const TrainingSet& train, const Hyperparameters& hyper);

/// Maximizes the log marginal likelihood over a log-spaced grid within
/// `bounds`, refines by a shrinking pattern search, then precomputes the
/// inverse Gram matrix. Requires 3 <= N <= 2000. A singular Gram matrix gets
/// one 1e-8 jitter retry before NumericalError.
GpisModel fit(const TrainingSet& train, const HyperparameterBounds& bounds = {});

/// Builds the model at fixed hyperparameters (no search).
GpisModel make_model(const TrainingSet& train, const Hyperparameters& hyper);

Prediction predict(const GpisModel& model, const Vec3& query);

/// Evaluates the predictive mean on voxel centres of `region` at spacing
/// `resolution`. Every voxel with a sign change to one of its 6 face
/// neighbours yields one point, placed by a single bisection step on the
/// steepest such edge; points with variance above `max_variance_ratio` *
/// sigma_f2 are dropped. The patch interval defaults to the full region
/// extent along z.
SurfacePatch extract_isosurface(const GpisModel& model, const Box& region, double resolution,
                                double max_variance_ratio = 0.5);

/// Orders patches by exploration: each patch keeps only points whose
/// coordinate along `axis` lies in its own interval and outside every earlier
/// patch's interval.
std::vector<Vec3> concatenate_patches(const std::vector<SurfacePatch>& patches,
                                      const Vec3& axis = Vec3::UnitZ());

/// Symmetric mean squared nearest-neighbour distance (mm^2). Throws
/// InputError for an empty cloud.
double chamfer_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

/// Exact nearest-neighbour queries on a static point set.
class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points);
  /// Squared distance to, and index of, the closest point.
  std::pair<double, int> nearest(const Vec3& q) const;

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1, right = -1;
  };
  int build(std::vector<int>& idx, int lo, int hi, int depth);
  void search(int node, const Vec3& q, double& best, int& best_idx) const;

  const std::vector<Vec3>* points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace propsense
