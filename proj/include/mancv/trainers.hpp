#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/graph.hpp"
#include "mancv/kernels.hpp"
#include "mancv/losses.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Hyperparameters of the manifold-regularized objective
///   (1/l) sum_j loss(y_j, f(x_j)) + gamma_a ||f||_k^2
///       + gamma_i f' L_S f / (l+u)^2.
struct Hyperparams {
  double sigma = 1.0;     // Gaussian kernel width (squared-distance scale)
  double gamma_a = 1e-2;  // ambient (RKHS norm) weight, must be > 0
  double gamma_i = 1e-2;  // intrinsic (manifold) weight, >= 0
  int k = 4;              // kNN graph neighbor count
  double sigma_w = 1.0;   // graph affinity width
  double h = 0.01;        // huber band half-width (LapSVM only)
  int c = 0;              // Nystrom rank; 0 means ceil(sqrt(l+u))

  void validate() const {
    if (!(sigma > 0.0)) throw argument_error("hyperparams: sigma must be > 0");
    if (!(gamma_a > 0.0))
      throw argument_error("hyperparams: gamma_a must be > 0");
    if (gamma_i < 0.0)
      throw argument_error("hyperparams: gamma_i must be >= 0");
    if (gamma_i > 0.0) {
      if (k < 1) throw argument_error("hyperparams: k must be >= 1");
      if (!(sigma_w > 0.0))
        throw argument_error("hyperparams: sigma_w must be > 0");
    }
  }

  int nystrom_rank(Index n_points) const {
    if (c > 0) return c;
    return static_cast<int>(
        std::ceil(std::sqrt(static_cast<double>(n_points))));
  }
};

/// Objective values of the accepted Newton iterates plus the final gradient
/// norm; empty for closed-form fits.
struct NewtonTrace {
  std::vector<double> objectives;
  double grad_norm = 0.0;
  int iterations = 0;
};

/// Representer-expansion solution over all l+u training points.
struct FittedModel {
  Vector alpha;   // coefficients, length l+u
  Vector fitted;  // K_SS * alpha, the values on all training points
  LossKind loss;
  Hyperparams hyper;
  NewtonTrace trace;
};

namespace detail {

// LU solve with a single jitter retry: if the solution blows up or leaves a
// large residual, add 1e-10 * |trace|/n to the diagonal and refactor once.
inline Matrix solve_lu_jitter(Matrix A, const Matrix& B, const char* what) {
  const Index n = A.rows();
  const double b_norm = B.norm();
  const double a_norm = A.norm();
  auto attempt = [&](const Matrix& M) -> std::pair<bool, Matrix> {
    Eigen::PartialPivLU<Matrix> lu(M);
    Matrix X = lu.solve(B);
    if (!X.allFinite()) return {false, X};
    const double resid = (M * X - B).norm();
    const bool ok = resid <= 1e-6 * (a_norm * X.norm() + b_norm) + 1e-300;
    return {ok, std::move(X)};
  };
  auto [ok, X] = attempt(A);
  if (ok) return X;
  const double jitter =
      1e-10 * std::abs(A.trace()) / static_cast<double>(n);
  A.diagonal().array() += jitter;
  auto [ok2, X2] = attempt(A);
  if (ok2) return X2;
  throw numerical_error(std::string(what) +
                        ": singular system (jitter retry failed)");
}

inline Vector solve_lu_jitter(const Matrix& A, const Vector& b,
                              const char* what) {
  return solve_lu_jitter(A, Matrix(b), what).col(0);
}

// Zero-pads a labeled-only vector to length n.
inline Vector pad_labeled(const Vector& v, Index n) {
  Vector out = Vector::Zero(n);
  out.head(v.size()) = v;
  return out;
}

}  // namespace detail

/// Weighted objective sum_j w_j loss(y_j, f_j) + gamma_a a'Ka + gamma_i f'Mf
/// with f = K a. M must already carry its own normalization; pass an empty
/// matrix to drop the manifold term.
inline double weighted_objective(const KernelMatrix& K, const Vector& labels,
                                 const LossKind& loss, const Vector& weights,
                                 const Matrix& manifold_quadratic,
                                 double gamma_a, double gamma_i,
                                 const Vector& alpha) {
  const Vector f = K.entries * alpha;
  double value = gamma_a * alpha.dot(f);
  for (Index j = 0; j < labels.size(); ++j)
    value += weights[j] * loss_eval(loss, labels[j], f[j]);
  if (gamma_i > 0.0 && manifold_quadratic.size() > 0)
    value += gamma_i * f.dot(manifold_quadratic * f);
  return value;
}

/// The plain manifold-regularization objective at a candidate alpha
/// (test/diagnostic helper; rebuilds the kernel and graph).
inline double mr_objective(const SemiDataset& d, const Hyperparams& hp,
                           const LossKind& loss, const Vector& alpha) {
  hp.validate();
  const Index n = d.total();
  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  Matrix M;
  if (hp.gamma_i > 0.0) {
    const GraphLaplacian G = build_knn_laplacian(d.points, hp.k, hp.sigma_w);
    M = G.laplacian / static_cast<double>(n * n);
  }
  const Vector w = Vector::Constant(d.l, 1.0 / static_cast<double>(d.l));
  return weighted_objective(K, d.labels, loss, w, M, hp.gamma_a, hp.gamma_i,
                            alpha);
}

namespace detail {

// Damped Newton for the weighted huber objective. Stationarity is expressed
// through G(a) = pad(w . l'(y, Ka)) + 2 gamma_a a + 2 gamma_i M K a, whose
// roots are exactly the points where the objective gradient K G vanishes.
// The semismooth Jacobian diag(w . l'') K + 2 gamma_a I + 2 gamma_i M K is
// piecewise constant, so undamped steps solve the active-band linearization;
// backtracking on the true objective keeps the iteration monotone.
inline std::pair<Vector, NewtonTrace> newton_huber(
    const KernelMatrix& K, const Vector& labels, const Vector& weights,
    const Matrix& manifold_quadratic, const Hyperparams& hp, double h,
    double tol, int max_iter) {
  const Index n = K.entries.rows();
  const Index l = labels.size();
  const LossKind loss = LossKind::huber(h);
  const bool with_manifold =
      hp.gamma_i > 0.0 && manifold_quadratic.size() > 0;

  auto objective = [&](const Vector& a) {
    return weighted_objective(K, labels, loss, weights, manifold_quadratic,
                              hp.gamma_a, hp.gamma_i, a);
  };

  Vector alpha = Vector::Zero(n);
  double obj = objective(alpha);
  NewtonTrace trace;
  trace.objectives.push_back(obj);

  for (int iter = 0; iter < max_iter; ++iter) {
    const Vector f = K.entries * alpha;
    Vector g1 = Vector::Zero(n);   // w . l'(y, f), zero past l
    Vector curv = Vector::Zero(n); // w . l''(y, f), zero past l
    for (Index j = 0; j < l; ++j) {
      g1[j] = weights[j] * loss_d1(loss, labels[j], f[j]);
      curv[j] = weights[j] * loss_d2(loss, labels[j], f[j]);
    }
    Vector G = g1 + 2.0 * hp.gamma_a * alpha;
    if (with_manifold) G += 2.0 * hp.gamma_i * (manifold_quadratic * f);
    const Vector grad = K.entries * G;
    trace.grad_norm = grad.norm();
    trace.iterations = iter;
    if (trace.grad_norm <= tol * (1.0 + alpha.norm()))
      return {std::move(alpha), std::move(trace)};

    Matrix J = curv.asDiagonal() * K.entries;
    J.diagonal().array() += 2.0 * hp.gamma_a;
    if (with_manifold)
      J += 2.0 * hp.gamma_i * (manifold_quadratic * K.entries);
    Vector dir = solve_lu_jitter(J, Vector(-G), "train_lapsvm newton step");
    double slope = dir.dot(grad);
    if (!(slope < 0.0)) {  // not a descent direction; fall back to steepest
      dir = -grad;
      slope = -grad.squaredNorm();
    }

    double step = 1.0;
    bool accepted = false;
    while (step >= 1e-14) {
      const Vector cand = alpha + step * dir;
      const double cand_obj = objective(cand);
      if (cand_obj <= obj + 1e-4 * step * slope) {
        alpha = cand;
        obj = cand_obj;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    trace.objectives.push_back(obj);
    if (!accepted) break;  // objective already at its numerical floor
  }

  // Final stationarity check after the iteration budget.
  const Vector f = K.entries * alpha;
  Vector g1 = Vector::Zero(n);
  for (Index j = 0; j < l; ++j)
    g1[j] = weights[j] * loss_d1(loss, labels[j], f[j]);
  Vector G = g1 + 2.0 * hp.gamma_a * alpha;
  if (with_manifold) G += 2.0 * hp.gamma_i * (manifold_quadratic * f);
  trace.grad_norm = (K.entries * G).norm();
  if (trace.grad_norm <= tol * (1.0 + alpha.norm()))
    return {std::move(alpha), std::move(trace)};
  throw convergence_error("train_lapsvm: no convergence within max_iter",
                          trace.grad_norm);
}

}  // namespace detail

/// LapRLS with a precomputed kernel (and Laplacian when gamma_i > 0).
/// Solves (J K + gamma_a l I + gamma_i l/(l+u)^2 L K) alpha = [y; 0].
inline FittedModel train_laprls_with(const KernelMatrix& K,
                                     const GraphLaplacian* L,
                                     const SemiDataset& d,
                                     const Hyperparams& hp) {
  hp.validate();
  const Index n = d.total();
  const Index l = d.l;
  const double dl = static_cast<double>(l);

  Matrix A = Matrix::Zero(n, n);
  A.topRows(l) = K.entries.topRows(l);  // J_S K_SS
  A.diagonal().array() += hp.gamma_a * dl;
  if (hp.gamma_i > 0.0) {
    if (L == nullptr)
      throw argument_error("train_laprls: gamma_i > 0 needs a Laplacian");
    A += (hp.gamma_i * dl / static_cast<double>(n * n)) *
         (L->laplacian * K.entries);
  }
  const Vector rhs = detail::pad_labeled(d.labels, n);
  FittedModel m;
  m.alpha = detail::solve_lu_jitter(A, rhs, "train_laprls");
  m.fitted = K.entries * m.alpha;
  m.loss = LossKind::square();
  m.hyper = hp;
  return m;
}

/// Laplacian regularized least squares: square loss, closed form.
inline FittedModel train_laprls(const SemiDataset& d, const Hyperparams& hp) {
  hp.validate();
  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  if (hp.gamma_i > 0.0) {
    const GraphLaplacian L = build_knn_laplacian(d.points, hp.k, hp.sigma_w);
    return train_laprls_with(K, &L, d, hp);
  }
  return train_laprls_with(K, nullptr, d, hp);
}

/// Laplacian SVM with the huber-smoothed hinge, precomputed kernel variant.
inline FittedModel train_lapsvm_with(const KernelMatrix& K,
                                     const GraphLaplacian* L,
                                     const SemiDataset& d,
                                     const Hyperparams& hp, double tol = 1e-8,
                                     int max_iter = 50) {
  hp.validate();
  if (!(hp.h > 0.0)) throw argument_error("train_lapsvm: h must be > 0");
  for (Index j = 0; j < d.l; ++j)
    detail::require_pm1(d.labels[j], "train_lapsvm");
  const Index n = d.total();
  Matrix M;
  if (hp.gamma_i > 0.0) {
    if (L == nullptr)
      throw argument_error("train_lapsvm: gamma_i > 0 needs a Laplacian");
    M = L->laplacian / static_cast<double>(n * n);
  }
  const Vector w = Vector::Constant(d.l, 1.0 / static_cast<double>(d.l));
  auto [alpha, trace] =
      detail::newton_huber(K, d.labels, w, M, hp, hp.h, tol, max_iter);
  FittedModel m;
  m.alpha = std::move(alpha);
  m.fitted = K.entries * m.alpha;
  m.loss = LossKind::huber(hp.h);
  m.hyper = hp;
  m.trace = std::move(trace);
  return m;
}

inline FittedModel train_lapsvm(const SemiDataset& d, const Hyperparams& hp,
                                double tol = 1e-8, int max_iter = 50) {
  hp.validate();
  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  if (hp.gamma_i > 0.0) {
    const GraphLaplacian L = build_knn_laplacian(d.points, hp.k, hp.sigma_w);
    return train_lapsvm_with(K, &L, d, hp, tol, max_iter);
  }
  return train_lapsvm_with(K, nullptr, d, hp, tol, max_iter);
}

/// Leave-fold-out label weights of the epsilon mixture
/// (1-eps) P_S + eps P_fold: every labeled point carries (1-eps)/l, fold
/// labeled points an extra eps/m. Tiny negative roundoff is clamped to zero.
inline Vector mixture_label_weights(Index l, const IndexList& fold_labeled,
                                    double eps) {
  if (fold_labeled.empty())
    throw argument_error("mixture_label_weights: empty labeled fold");
  Vector w = Vector::Constant(l, (1.0 - eps) / static_cast<double>(l));
  const double bump = eps / static_cast<double>(fold_labeled.size());
  for (Index j : fold_labeled) {
    if (j < 0 || j >= l)
      throw argument_error("mixture_label_weights: labeled index out of range");
    w[j] += bump;
  }
  for (Index j = 0; j < l; ++j) {
    if (w[j] < -1e-9)
      throw argument_error("mixture_label_weights: negative weight");
    if (w[j] < 0.0) w[j] = 0.0;
  }
  return w;
}

/// Composite manifold quadratic of the epsilon mixture:
/// (1-eps) L_full/(l+u)^2 + eps pad(L_fold)/(m+n)^2 on global coordinates.
inline Matrix mixture_quadratic(const Matrix& laplacian_full, Index n_total,
                                const Matrix& laplacian_fold,
                                const IndexList& fold_indices, double eps) {
  if (laplacian_full.rows() != n_total)
    throw argument_error("mixture_quadratic: full Laplacian size mismatch");
  if (laplacian_fold.rows() != static_cast<Index>(fold_indices.size()))
    throw argument_error("mixture_quadratic: fold Laplacian size mismatch");
  const double nn = static_cast<double>(n_total) * static_cast<double>(n_total);
  Matrix M = ((1.0 - eps) / nn) * laplacian_full;
  const double fold_size = static_cast<double>(fold_indices.size());
  const double scale = eps / (fold_size * fold_size);
  for (std::size_t a = 0; a < fold_indices.size(); ++a)
    for (std::size_t b = 0; b < fold_indices.size(); ++b)
      M(fold_indices[a], fold_indices[b]) +=
          scale * laplacian_fold(static_cast<Index>(a), static_cast<Index>(b));
  return M;
}

/// Trains under an arbitrary sample-weighted empirical distribution:
/// minimize sum_j w_j loss(y_j, f_j) + gamma_a ||f||^2 + gamma_i f'Mf.
/// The manifold term comes in as a prebuilt (l+u)x(l+u) quadratic (see
/// mixture_quadratic); pass an empty matrix to drop it.
inline FittedModel train_weighted_with(const KernelMatrix& K,
                                       const SemiDataset& d,
                                       const Hyperparams& hp,
                                       const LossKind& loss,
                                       const Vector& label_weights,
                                       const Matrix& manifold_quadratic,
                                       double tol = 1e-8, int max_iter = 50) {
  hp.validate();
  const Index n = d.total();
  if (label_weights.size() != d.l)
    throw argument_error("train_weighted: label_weights must have length l");
  if ((label_weights.array() < 0.0).any())
    throw argument_error("train_weighted: weights must be nonnegative");
  const bool with_manifold =
      hp.gamma_i > 0.0 && manifold_quadratic.size() > 0;
  if (with_manifold && (manifold_quadratic.rows() != n ||
                        manifold_quadratic.cols() != n))
    throw argument_error("train_weighted: manifold quadratic must be n x n");

  FittedModel m;
  m.hyper = hp;
  m.loss = loss;
  switch (loss.type) {
    case LossType::square: {
      // (W K + gamma_a I + gamma_i M K) alpha = W [y; 0]
      Matrix A = detail::pad_labeled(label_weights, n).asDiagonal() *
                 K.entries;
      A.diagonal().array() += hp.gamma_a;
      if (with_manifold)
        A += hp.gamma_i * (manifold_quadratic * K.entries);
      Vector rhs = Vector::Zero(n);
      rhs.head(d.l) = label_weights.cwiseProduct(d.labels);
      m.alpha = detail::solve_lu_jitter(A, rhs, "train_weighted");
      break;
    }
    case LossType::huber: {
      for (Index j = 0; j < d.l; ++j)
        detail::require_pm1(d.labels[j], "train_weighted");
      auto [alpha, trace] =
          detail::newton_huber(K, d.labels, label_weights, manifold_quadratic,
                               hp, loss.h, tol, max_iter);
      m.alpha = std::move(alpha);
      m.trace = std::move(trace);
      break;
    }
    case LossType::hinge:
      throw unsupported_loss_error(
          "train_weighted: hinge is not differentiable; use huber");
  }
  m.fitted = K.entries * m.alpha;
  return m;
}

inline FittedModel train_weighted(const SemiDataset& d, const Hyperparams& hp,
                                  const LossKind& loss,
                                  const Vector& label_weights,
                                  const Matrix& manifold_quadratic,
                                  double tol = 1e-8, int max_iter = 50) {
  hp.validate();
  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  return train_weighted_with(K, d, hp, loss, label_weights,
                             manifold_quadratic, tol, max_iter);
}

/// Evaluates the representer expansion at new points:
/// out_i = sum_j alpha_j kappa(train_j, point_i).
inline Vector predict(const FittedModel& m,
                      const Eigen::Ref<const Matrix>& points,
                      const Eigen::Ref<const Matrix>& train_points) {
  if (train_points.rows() != m.alpha.size())
    throw argument_error("predict: train point count != coefficient count");
  if (points.cols() != train_points.cols())
    throw argument_error("predict: feature dimension mismatch");
  Vector out = Vector::Zero(points.rows());
  for (Index i = 0; i < points.rows(); ++i) {
    double acc = 0.0;
    for (Index j = 0; j < train_points.rows(); ++j)
      acc += m.alpha[j] *
             gaussian_kernel(train_points.row(j).transpose(),
                             points.row(i).transpose(), m.hyper.sigma);
    out[i] = acc;
  }
  return out;
}

}  // namespace mancv
