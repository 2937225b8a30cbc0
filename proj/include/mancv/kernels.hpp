#pragma once

#include <cmath>

#include "mancv/errors.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Full Gaussian kernel matrix over a point set. sigma scales the squared
/// distance: entries are exp(-||x - x'||^2 / (2 sigma)).
struct KernelMatrix {
  Matrix entries;  // (l+u) x (l+u), symmetric, unit diagonal
  double sigma = 1.0;
};

inline double gaussian_kernel(const Eigen::Ref<const Vector>& x,
                              const Eigen::Ref<const Vector>& x2,
                              double sigma) {
  if (x.size() != x2.size())
    throw argument_error("gaussian_kernel: dimension mismatch");
  if (!(sigma > 0.0)) throw argument_error("gaussian_kernel: sigma must be > 0");
  return std::exp(-(x - x2).squaredNorm() / (2.0 * sigma));
}

namespace detail {

// Squared distance in the expanded form ||x||^2 + ||x'||^2 - 2<x,x'>, with
// tiny negatives clamped to zero so exp never sees a positive argument.
inline double pair_kernel(const Eigen::Ref<const Matrix>& points,
                          const Vector& sq_norms, Index i, Index j,
                          double sigma) {
  if (i == j) return 1.0;
  double d2 = sq_norms[i] + sq_norms[j] - 2.0 * points.row(i).dot(points.row(j));
  if (d2 < 0.0) d2 = 0.0;
  return std::exp(-d2 / (2.0 * sigma));
}

inline Vector row_squared_norms(const Eigen::Ref<const Matrix>& points) {
  return points.rowwise().squaredNorm();
}

}  // namespace detail

/// K_SS assembled once per unordered pair, hence exactly symmetric.
inline KernelMatrix kernel_matrix(const Eigen::Ref<const Matrix>& points,
                                  double sigma) {
  if (points.rows() < 1)
    throw argument_error("kernel_matrix: need at least one point");
  if (!(sigma > 0.0)) throw argument_error("kernel_matrix: sigma must be > 0");
  const Index n = points.rows();
  const Vector sq = detail::row_squared_norms(points);
  KernelMatrix K;
  K.sigma = sigma;
  K.entries = Matrix::Ones(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) {
      const double v = detail::pair_kernel(points, sq, i, j, sigma);
      K.entries(i, j) = v;
      K.entries(j, i) = v;
    }
  return K;
}

/// K_SSi: kernel values between every point and the fold's points, in fold
/// order. Matches the corresponding column slice of kernel_matrix exactly.
inline Matrix cross_kernel(const Eigen::Ref<const Matrix>& points,
                           const IndexList& fold_indices, double sigma) {
  if (!(sigma > 0.0)) throw argument_error("cross_kernel: sigma must be > 0");
  const Index n = points.rows();
  for (Index idx : fold_indices)
    if (idx < 0 || idx >= n)
      throw argument_error("cross_kernel: fold index out of range");
  const Vector sq = detail::row_squared_norms(points);
  Matrix out(n, static_cast<Index>(fold_indices.size()));
  for (std::size_t k = 0; k < fold_indices.size(); ++k)
    for (Index i = 0; i < n; ++i)
      out(i, static_cast<Index>(k)) =
          detail::pair_kernel(points, sq, i, fold_indices[k], sigma);
  return out;
}

/// Column slice of a precomputed kernel matrix (used inside the fold loop to
/// avoid recomputing kernel values).
inline Matrix select_columns(const Matrix& K, const IndexList& indices) {
  Matrix out(K.rows(), static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 0 || indices[k] >= K.cols())
      throw argument_error("select_columns: index out of range");
    out.col(static_cast<Index>(k)) = K.col(indices[k]);
  }
  return out;
}

}  // namespace mancv
