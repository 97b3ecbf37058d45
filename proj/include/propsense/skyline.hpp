#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <vector>

namespace propsense {

/// Envelope (variable band) Cholesky factorization A = P^T L L^T P of a
/// symmetric positive definite sparse matrix under a reverse Cuthill-McKee
/// ordering. Rows of L are stored contiguously from their first nonzero, so
/// the inner loops are dense dot products. Suited to the elongated meshes
/// used here, where the envelope stays close to one cross-section wide.
class SkylineCholesky {
 public:
  /// Computes the ordering and envelope from the pattern of `A` (full
  /// symmetric storage, compressed). Later factorizations must use the same
  /// pattern.
  void analyze(const Eigen::SparseMatrix<double>& A);
  /// Returns false if a pivot is not positive.
  bool factorize(const Eigen::SparseMatrix<double>& A);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

  bool analyzed() const { return n_ > 0; }
  /// Stored entries of L.
  long envelope_size() const { return static_cast<long>(values_.size()); }

 private:
  int n_ = 0;
  std::vector<int> perm_;   // perm_[new] = old
  std::vector<int> first_;  // first stored column of each row of L
  std::vector<long> start_;  // storage offset of each row
  std::vector<std::pair<long, long>> scatter_;  // value index in A -> storage index
  std::vector<double> values_;
};

/// Reverse Cuthill-McKee ordering of the symmetric pattern of `A`, starting
/// each connected component from a pseudo-peripheral vertex. Returns
/// perm[new] = old.
std::vector<int> reverse_cuthill_mckee(const Eigen::SparseMatrix<double>& A);

}  // namespace propsense
