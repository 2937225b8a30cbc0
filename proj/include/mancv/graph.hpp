#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mancv/errors.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Graph Laplacian L = D - W of a kNN affinity graph. Rows sum to zero and L
/// is positive semi-definite because W is symmetric with zero diagonal.
struct GraphLaplacian {
  Matrix laplacian;
  Matrix affinity;
  int k = 0;           // 0 when built directly from a user-supplied W
  double sigma_w = 0.0;
};

/// Symmetrized kNN affinity: W_ij = exp(-||xi-xj||^2 / (2 sigma_w)) whenever
/// i is among the k nearest neighbors of j or vice versa (union rule), else 0.
/// Ties at the k-th distance break toward the lower index.
inline Matrix knn_affinity(const Eigen::Ref<const Matrix>& points, int k,
                           double sigma_w) {
  const Index p = points.rows();
  if (k < 1) throw argument_error("knn_affinity: k must be >= 1");
  if (k >= p) throw argument_error("knn_affinity: k must be < point count");
  if (!(sigma_w > 0.0))
    throw argument_error("knn_affinity: sigma_w must be > 0");

  Matrix d2(p, p);
  const Vector sq = points.rowwise().squaredNorm();
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j) {
      double v = sq[i] + sq[j] - 2.0 * points.row(i).dot(points.row(j));
      d2(i, j) = v < 0.0 ? 0.0 : v;
    }

  // neighbor(i, j) = true when i is one of the k nearest neighbors of j
  std::vector<std::vector<bool>> neighbor(
      static_cast<std::size_t>(p), std::vector<bool>(static_cast<std::size_t>(p), false));
  std::vector<std::pair<double, Index>> cand;
  for (Index j = 0; j < p; ++j) {
    cand.clear();
    for (Index i = 0; i < p; ++i)
      if (i != j) cand.emplace_back(d2(i, j), i);
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int r = 0; r < k; ++r)
      neighbor[static_cast<std::size_t>(cand[static_cast<std::size_t>(r)].second)]
              [static_cast<std::size_t>(j)] = true;
  }

  Matrix W = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = i + 1; j < p; ++j) {
      if (neighbor[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] ||
          neighbor[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) {
        const double w = std::exp(-d2(i, j) / (2.0 * sigma_w));
        W(i, j) = w;
        W(j, i) = w;
      }
    }
  return W;
}

/// L = D - W. Validates that W is a symmetric nonnegative affinity with zero
/// diagonal before trusting it.
inline GraphLaplacian laplacian(const Matrix& W) {
  const Index p = W.rows();
  if (W.cols() != p) throw argument_error("laplacian: affinity must be square");
  for (Index i = 0; i < p; ++i) {
    if (W(i, i) != 0.0)
      throw argument_error("laplacian: affinity diagonal must be zero");
    for (Index j = i + 1; j < p; ++j) {
      if (W(i, j) != W(j, i))
        throw argument_error("laplacian: affinity must be symmetric");
      if (W(i, j) < 0.0)
        throw argument_error("laplacian: affinity must be nonnegative");
    }
  }
  GraphLaplacian g;
  g.affinity = W;
  g.laplacian = -W;
  for (Index i = 0; i < p; ++i) g.laplacian(i, i) = W.row(i).sum();
  return g;
}

inline GraphLaplacian build_knn_laplacian(const Eigen::Ref<const Matrix>& points,
                                          int k, double sigma_w) {
  GraphLaplacian g = laplacian(knn_affinity(points, k, sigma_w));
  g.k = k;
  g.sigma_w = sigma_w;
  return g;
}

/// Laplacian of the kNN graph built over the fold's points only; neighbors
/// are searched within the fold, mirroring what a retrain on that subset
/// would see.
inline GraphLaplacian sub_laplacian(const Eigen::Ref<const Matrix>& points,
                                    const IndexList& fold_indices, int k,
                                    double sigma_w) {
  if (static_cast<Index>(fold_indices.size()) <= k)
    throw argument_error("sub_laplacian: fold must contain more than k points");
  Matrix sub(static_cast<Index>(fold_indices.size()), points.cols());
  for (std::size_t r = 0; r < fold_indices.size(); ++r) {
    if (fold_indices[r] < 0 || fold_indices[r] >= points.rows())
      throw argument_error("sub_laplacian: fold index out of range");
    sub.row(static_cast<Index>(r)) = points.row(fold_indices[r]);
  }
  return build_knn_laplacian(sub, k, sigma_w);
}

}  // namespace mancv
