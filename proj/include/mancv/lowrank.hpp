#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <utility>

#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/kernels.hpp"
#include "mancv/losses.hpp"
#include "mancv/trainers.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Nystrom column sample of a kernel matrix: K ~ C P^+ C'.
struct NystromFactors {
  Matrix C;              // (l+u) x c sampled columns
  Matrix P;              // c x c intersection block
  Matrix P_pinv;         // Moore-Penrose pseudo-inverse of P
  IndexList sampled;     // the c column indices, in sampled order
  std::uint64_t seed = 0;

  Matrix approximation() const { return C * P_pinv * C.transpose(); }
};

namespace detail {

// Pseudo-inverse of a symmetric PSD block via eigendecomposition, dropping
// eigenvalues below 1e-12 * lambda_max (relative cutoff for scale invariance).
inline Matrix symmetric_pinv(const Matrix& P) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(P);
  if (eig.info() != Eigen::Success)
    throw numerical_error("nystrom_sample: eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();
  const double cutoff = 1e-12 * std::max(0.0, ev.maxCoeff());
  Vector inv = Vector::Zero(ev.size());
  for (Index i = 0; i < ev.size(); ++i)
    if (ev[i] > cutoff) inv[i] = 1.0 / ev[i];
  return eig.eigenvectors() * inv.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace detail

/// Samples c columns uniformly without replacement (deterministic per seed).
inline NystromFactors nystrom_sample(const KernelMatrix& K, int c,
                                     std::uint64_t seed) {
  const Index n = K.entries.rows();
  if (c < 1 || static_cast<Index>(c) > n)
    throw argument_error("nystrom_sample: need 1 <= c <= l+u");
  IndexList ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  ids.resize(static_cast<std::size_t>(c));

  NystromFactors f;
  f.seed = seed;
  f.sampled = ids;
  f.C = select_columns(K.entries, ids);
  f.P = Matrix(c, c);
  for (int a = 0; a < c; ++a)
    for (int b = 0; b < c; ++b)
      f.P(a, b) = K.entries(ids[static_cast<std::size_t>(a)],
                            ids[static_cast<std::size_t>(b)]);
  f.P_pinv = detail::symmetric_pinv(f.P);
  return f;
}

/// Exact inverse of the curvature-plus-ridge operator
///   T = (1/l) K_SS F_S + 2 gamma_a I.
/// F_S is diagonal with support on the "active" labeled points (all of them
/// for the square loss, the support vectors for huber), so T is block
/// triangular under an active-first ordering: inverting the dense active
/// block and back-substituting the remaining rows costs O(l_sv^3 + n l_sv)
/// instead of O(n^3).
struct BlockTInverse {
  IndexList active;     // indices with nonzero curvature
  IndexList passive;    // everything else
  Matrix block_inv;     // (K_AA D_A + 2 gamma_a I)^-1
  Matrix coupling;      // K_{passive,A} D_A
  double tail = 0.0;    // 1 / (2 gamma_a)
  Index n = 0;

  Vector apply(const Eigen::Ref<const Vector>& v) const {
    Vector out(n);
    Vector vA(static_cast<Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) vA[static_cast<Index>(i)] = v[active[i]];
    const Vector xA = block_inv * vA;
    for (std::size_t i = 0; i < active.size(); ++i) out[active[i]] = xA[static_cast<Index>(i)];
    const Vector corr = coupling * xA;
    for (std::size_t i = 0; i < passive.size(); ++i)
      out[passive[i]] = tail * (v[passive[i]] - corr[static_cast<Index>(i)]);
    return out;
  }

  Matrix apply_columns(const Eigen::Ref<const Matrix>& V) const {
    Matrix out(n, V.cols());
    for (Index j = 0; j < V.cols(); ++j) out.col(j) = apply(V.col(j));
    return out;
  }
};

/// Builds the block inverse from the fitted model's curvature diagonal.
/// D_k = F_kk / l; loss only gates which entries can be active.
inline BlockTInverse build_T_inverse(const KernelMatrix& K,
                                     const Vector& curvature_diag,
                                     const SemiDataset& d,
                                     const Hyperparams& hp,
                                     const LossKind& loss) {
  if (!loss.differentiable())
    throw unsupported_loss_error("build_T_inverse: loss must be differentiable");
  if (!(hp.gamma_a > 0.0))
    throw argument_error("build_T_inverse: gamma_a must be > 0");
  const Index n = d.total();
  if (curvature_diag.size() != n)
    throw argument_error("build_T_inverse: curvature size mismatch");

  BlockTInverse t;
  t.n = n;
  t.tail = 1.0 / (2.0 * hp.gamma_a);
  for (Index j = 0; j < n; ++j)
    (curvature_diag[j] != 0.0 ? t.active : t.passive).push_back(j);

  const Index a = static_cast<Index>(t.active.size());
  if (a == 0) {
    t.block_inv = Matrix(0, 0);
    t.coupling = Matrix(static_cast<Index>(t.passive.size()), 0);
    return t;
  }
  Vector dA(a);
  for (Index i = 0; i < a; ++i)
    dA[i] = curvature_diag[t.active[static_cast<std::size_t>(i)]] /
            static_cast<double>(d.l);
  Matrix block(a, a);
  for (Index r = 0; r < a; ++r)
    for (Index cidx = 0; cidx < a; ++cidx)
      block(r, cidx) = K.entries(t.active[static_cast<std::size_t>(r)],
                                 t.active[static_cast<std::size_t>(cidx)]) *
                       dA[cidx];
  block.diagonal().array() += 2.0 * hp.gamma_a;
  t.block_inv = detail::solve_lu_jitter(block, Matrix(Matrix::Identity(a, a)),
                                        "build_T_inverse");
  t.coupling = Matrix(static_cast<Index>(t.passive.size()), a);
  for (std::size_t r = 0; r < t.passive.size(); ++r)
    for (Index cidx = 0; cidx < a; ++cidx)
      t.coupling(static_cast<Index>(r), cidx) =
          K.entries(t.passive[r], t.active[static_cast<std::size_t>(cidx)]) *
          dA[cidx];
  return t;
}

/// Applies the Woodbury identity to H~ = T + s C P^+ (C' L), s = 2 gamma_i *
/// scale:
///   H~^-1 = T^-1 - s T^-1 C [P + s C' L T^-1 C]^-1 C' L T^-1.
/// Setup costs O(c (l+u)^2 + (l+u) c^2 + c^3); each solve O((l+u) c).
class WoodburySolver {
 public:
  WoodburySolver(const BlockTInverse& T_inv, const NystromFactors& factors,
                 const Matrix& laplacian, double gamma_i, double scale)
      : T_inv_(T_inv), s_(2.0 * gamma_i * scale) {
    if (s_ == 0.0) return;  // pure T^-1; no correction term
    CtL_ = factors.C.transpose() * laplacian;
    TinvC_ = T_inv_.apply_columns(factors.C);
    Matrix inner = factors.P + s_ * (CtL_ * TinvC_);
    const Index c = inner.rows();
    inner_solver_.compute(inner);
    Matrix probe = inner_solver_.solve(Matrix::Identity(c, c));
    if (!probe.allFinite() ||
        (inner * probe - Matrix::Identity(c, c)).norm() > 1e-6 * inner.norm()) {
      inner.diagonal().array() +=
          1e-10 * std::abs(inner.trace()) / static_cast<double>(c);
      inner_solver_.compute(inner);
      probe = inner_solver_.solve(Matrix::Identity(c, c));
      if (!probe.allFinite() ||
          (inner * probe - Matrix::Identity(c, c)).norm() >
              1e-6 * inner.norm())
        throw numerical_error("woodbury_solve: inner system singular");
    }
  }

  Vector solve(const Eigen::Ref<const Vector>& rhs) const {
    Vector x = T_inv_.apply(rhs);
    if (s_ == 0.0) return x;
    x -= s_ * (TinvC_ * inner_solver_.solve(CtL_ * x));
    return x;
  }

 private:
  const BlockTInverse& T_inv_;
  double s_ = 0.0;
  Matrix CtL_;
  Matrix TinvC_;
  Eigen::PartialPivLU<Matrix> inner_solver_;
};

/// One-shot form of the Woodbury-based solve. scale is the manifold
/// normalization 1/(l+u)^2, kept separate from gamma_i.
inline Vector woodbury_solve(const BlockTInverse& T_inv,
                             const NystromFactors& factors,
                             const Matrix& laplacian, double gamma_i,
                             double scale, const Vector& rhs) {
  return WoodburySolver(T_inv, factors, laplacian, gamma_i, scale).solve(rhs);
}

}  // namespace mancv
