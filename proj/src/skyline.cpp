#include "propsense/skyline.hpp"

#include "propsense/common.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace propsense {

namespace {

// BFS levels from `root` within the unvisited part; returns the last level.
std::vector<int> last_level(const Eigen::SparseMatrix<double>& A, int root, const std::vector<char>& done,
                            int& depth) {
  const int n = static_cast<int>(A.cols());
  std::vector<int> level(n, -1);
  std::vector<int> frontier{root}, last{root};
  level[root] = 0;
  depth = 0;
  while (!frontier.empty()) {
    std::vector<int> next;
    for (int v : frontier)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, v); it; ++it) {
        const int w = static_cast<int>(it.row());
        if (done[w] || level[w] >= 0) continue;
        level[w] = level[v] + 1;
        next.push_back(w);
      }
    if (!next.empty()) {
      last = next;
      ++depth;
    }
    frontier = std::move(next);
  }
  return last;
}

}  // namespace

std::vector<int> reverse_cuthill_mckee(const Eigen::SparseMatrix<double>& A) {
  const int n = static_cast<int>(A.cols());
  std::vector<int> degree(n);
  for (int v = 0; v < n; ++v) degree[v] = static_cast<int>(A.outerIndexPtr()[v + 1] - A.outerIndexPtr()[v]);
  std::vector<char> done(n, 0);
  std::vector<int> order;
  order.reserve(n);
  for (int seed = 0; seed < n; ++seed) {
    if (done[seed]) continue;
    // Pseudo-peripheral start: repeat BFS from a minimum-degree vertex of
    // the deepest level while the depth grows.
    int root = seed, depth = 0;
    for (int round = 0; round < 8; ++round) {
      int d = 0;
      const std::vector<int> last = last_level(A, root, done, d);
      const int cand = *std::min_element(last.begin(), last.end(), [&](int a, int b) {
        return degree[a] != degree[b] ? degree[a] < degree[b] : a < b;
      });
      if (round > 0 && d <= depth) break;
      depth = d;
      root = cand;
    }
    std::queue<int> q;
    q.push(root);
    done[root] = 1;
    std::vector<int> nbrs;
    while (!q.empty()) {
      const int v = q.front();
      q.pop();
      order.push_back(v);
      nbrs.clear();
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, v); it; ++it) {
        const int w = static_cast<int>(it.row());
        if (!done[w]) {
          done[w] = 1;
          nbrs.push_back(w);
        }
      }
      std::sort(nbrs.begin(), nbrs.end(),
                [&](int a, int b) { return degree[a] != degree[b] ? degree[a] < degree[b] : a < b; });
      for (int w : nbrs) q.push(w);
    }
  }
  std::reverse(order.begin(), order.end());
  return order;
}

void SkylineCholesky::analyze(const Eigen::SparseMatrix<double>& A) {
  if (A.rows() != A.cols() || !A.isCompressed()) throw InputError("skyline: need a compressed square matrix");
  n_ = static_cast<int>(A.cols());
  perm_ = reverse_cuthill_mckee(A);
  std::vector<int> inv(n_);
  for (int i = 0; i < n_; ++i) inv[perm_[i]] = i;

  first_.resize(n_);
  for (int i = 0; i < n_; ++i) first_[i] = i;
  for (int c = 0; c < n_; ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it) {
      const int pi = inv[it.row()], pj = inv[c];
      if (pj < pi) first_[pi] = std::min(first_[pi], pj);
    }
  start_.resize(static_cast<size_t>(n_) + 1);
  start_[0] = 0;
  for (int i = 0; i < n_; ++i) start_[i + 1] = start_[i] + (i - first_[i] + 1);
  values_.assign(static_cast<size_t>(start_[n_]), 0.0);

  scatter_.clear();
  const int* outer = A.outerIndexPtr();
  const int* inner = A.innerIndexPtr();
  for (int c = 0; c < n_; ++c)
    for (int k = outer[c]; k < outer[c + 1]; ++k) {
      const int pi = inv[inner[k]], pj = inv[c];
      if (pj <= pi) scatter_.emplace_back(k, start_[pi] + (pj - first_[pi]));
    }
}

bool SkylineCholesky::factorize(const Eigen::SparseMatrix<double>& A) {
  if (!analyzed() || A.cols() != n_) throw InputError("skyline: factorize before analyze");
  std::fill(values_.begin(), values_.end(), 0.0);
  const double* a = A.valuePtr();
  for (const auto& [src, dst] : scatter_) values_[static_cast<size_t>(dst)] = a[src];

  double* L = values_.data();
  for (int i = 0; i < n_; ++i) {
    const int fi = first_[i];
    double* row_i = L + start_[i];  // row_i[k - fi] = L(i, k)
    for (int j = fi; j < i; ++j) {
      const int fj = first_[j];
      const int k0 = std::max(fi, fj);
      const double* row_j = L + start_[j];
      const int len = j - k0;
      double s = row_i[j - fi];
      if (len > 0) {
        s -= Eigen::Map<const Eigen::VectorXd>(row_i + (k0 - fi), len)
                 .dot(Eigen::Map<const Eigen::VectorXd>(row_j + (k0 - fj), len));
      }
      row_i[j - fi] = s / row_j[j - fj];
    }
    const int len = i - fi;
    double d = row_i[len];
    if (len > 0) d -= Eigen::Map<const Eigen::VectorXd>(row_i, len).squaredNorm();
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    row_i[len] = std::sqrt(d);
  }
  return true;
}

Eigen::VectorXd SkylineCholesky::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) throw InputError("skyline: right-hand side has the wrong size");
  Eigen::VectorXd z(n_);
  for (int i = 0; i < n_; ++i) z(i) = b(perm_[i]);
  const double* L = values_.data();
  for (int i = 0; i < n_; ++i) {
    const int fi = first_[i], len = i - fi;
    const double* row = L + start_[i];
    double s = z(i);
    if (len > 0) s -= Eigen::Map<const Eigen::VectorXd>(row, len).dot(z.segment(fi, len));
    z(i) = s / row[len];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    const int fi = first_[i], len = i - fi;
    const double* row = L + start_[i];
    z(i) /= row[len];
    if (len > 0) z.segment(fi, len).noalias() -= z(i) * Eigen::Map<const Eigen::VectorXd>(row, len);
  }
  Eigen::VectorXd x(n_);
  for (int i = 0; i < n_; ++i) x(perm_[i]) = z(i);
  return x;
}

}  // namespace propsense
