#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/folds.hpp"
#include "mancv/graph.hpp"
#include "mancv/kernels.hpp"
#include "mancv/losses.hpp"
#include "mancv/lowrank.hpp"
#include "mancv/trainers.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Curvature pieces of the fitted model: the diagonal F_S holds
/// loss''(y_j, f_j) on the labeled points and zero elsewhere. For the huber
/// loss the nonzero entries are exactly 1/(2h) on the support vectors, the
/// labeled points with |1 - y f| <= h (band boundaries included).
struct CurvatureParts {
  Vector f_diag;        // length l+u
  IndexList active;     // indices with nonzero curvature (support vectors)
  Index l_sv = 0;       // active count
};

/// Which inverse path the BIF solve takes.
struct SolverSpec {
  enum class Path { dense, nystrom };
  Path path = Path::dense;
  int c = 0;                // nystrom rank; 0 means ceil(sqrt(l+u))
  std::uint64_t seed = 0;   // column sampling seed

  static SolverSpec dense() { return {}; }
  static SolverSpec nystrom(int c, std::uint64_t seed) {
    return {Path::nystrom, c, seed};
  }
};

/// The (l+u) x t influence matrix: column i is the derivative of the fitted
/// values in the direction of fold i's empirical distribution, evaluated on
/// every training point.
struct BifMatrix {
  Matrix columns;
  int t = 0;
  std::string path;              // "dense" or "nystrom(c)"
  bool nystrom_fallback = false; // true when the low-rank path fell back
};

inline CurvatureParts build_curvature(const FittedModel& m,
                                      const SemiDataset& d) {
  if (!m.loss.differentiable())
    throw unsupported_loss_error("build_curvature: loss must be differentiable");
  CurvatureParts parts;
  parts.f_diag = Vector::Zero(d.total());
  for (Index j = 0; j < d.l; ++j) {
    parts.f_diag[j] = loss_d2(m.loss, d.labels[j], m.fitted[j]);
    if (parts.f_diag[j] != 0.0) parts.active.push_back(j);
  }
  parts.l_sv = static_cast<Index>(parts.active.size());
  return parts;
}

/// mu_Si: loss'(y_j, f_j) at the fold's labeled points under the *full-data*
/// model, zero on the fold's unlabeled tail.
inline Vector build_mu_fold(const FittedModel& m, const SemiDataset& d,
                            const IndexList& fold_labeled, Index fold_size) {
  if (!m.loss.differentiable())
    throw unsupported_loss_error("build_mu_fold: loss must be differentiable");
  Vector mu = Vector::Zero(fold_size);
  for (std::size_t r = 0; r < fold_labeled.size(); ++r) {
    const Index j = fold_labeled[r];
    if (j < 0 || j >= d.l)
      throw argument_error("build_mu_fold: labeled index out of range");
    mu[static_cast<Index>(r)] = loss_d1(m.loss, d.labels[j], m.fitted[j]);
  }
  return mu;
}

/// Dense curvature operator
///   H = (1/l) K_SS F_S + 2 gamma_a I + (2 gamma_i/(l+u)^2) K_SS L_S.
/// F_S masks columns to the labeled points, so the square loss gives
/// (2/l) K_SS J_S and huber gives (1/(2lh)) K_SS I_sv in the first term.
inline Matrix assemble_H(const KernelMatrix& K, const GraphLaplacian* L,
                         const CurvatureParts& parts, const SemiDataset& d,
                         const Hyperparams& hp) {
  const Index n = d.total();
  Matrix H = K.entries * (parts.f_diag / static_cast<double>(d.l)).asDiagonal();
  H.diagonal().array() += 2.0 * hp.gamma_a;
  if (hp.gamma_i > 0.0) {
    if (L == nullptr)
      throw argument_error("assemble_H: gamma_i > 0 needs a Laplacian");
    H += (2.0 * hp.gamma_i / static_cast<double>(n * n)) *
         (K.entries * L->laplacian);
  }
  return H;
}

inline Matrix assemble_H(const KernelMatrix& K, const GraphLaplacian& L,
                         const CurvatureParts& parts, const SemiDataset& d,
                         const Hyperparams& hp) {
  return assemble_H(K, &L, parts, d, hp);
}

inline BlockTInverse build_T_inverse(const KernelMatrix& K,
                                     const CurvatureParts& parts,
                                     const SemiDataset& d,
                                     const Hyperparams& hp,
                                     const LossKind& loss) {
  return build_T_inverse(K, parts.f_diag, d, hp, loss);
}

namespace detail {

// Right-hand side for fold i:
//   -K_SSi mu_Si / m_i - 2 gamma_a f - (2 gamma_i/(m_i+n_i)^2) K_SSi L_Si f_Si.
// The fold Laplacian term is dropped when gamma_i = 0.
inline Vector bif_rhs(const FittedModel& m, const SemiDataset& d,
                      const KernelMatrix& K, const Hyperparams& hp,
                      const IndexList& fold_labeled,
                      const IndexList& fold_points) {
  const Index m_i = static_cast<Index>(fold_labeled.size());
  const Index fold_size = static_cast<Index>(fold_points.size());
  if (m_i < 1) throw argument_error("bif_matrix: fold has no labeled points");

  const Matrix K_fold = select_columns(K.entries, fold_points);
  const Vector mu = build_mu_fold(m, d, fold_labeled, fold_size);
  Vector rhs = -(K_fold * mu) / static_cast<double>(m_i) -
               2.0 * hp.gamma_a * m.fitted;
  if (hp.gamma_i > 0.0) {
    const GraphLaplacian L_fold =
        sub_laplacian(d.points, fold_points, hp.k, hp.sigma_w);
    Vector f_fold(fold_size);
    for (Index r = 0; r < fold_size; ++r)
      f_fold[r] = m.fitted[fold_points[static_cast<std::size_t>(r)]];
    const double denom = static_cast<double>(fold_size * fold_size);
    rhs -= (2.0 * hp.gamma_i / denom) * (K_fold * (L_fold.laplacian * f_fold));
  }
  return rhs;
}

}  // namespace detail

/// Builds the BIF matrix of the fitted model for every fold of the partition.
/// The dense path factors H once and reuses it across the t right-hand
/// sides; the nystrom path never forms H and solves through the Woodbury
/// identity instead. If the low-rank inner system is singular even after the
/// jitter retry, the dense path is used and the result is flagged.
inline BifMatrix bif_matrix(const FittedModel& m, const SemiDataset& d,
                            const FoldPartition& part, const KernelMatrix& K,
                            const GraphLaplacian* L,
                            const SolverSpec& solver) {
  if (!m.loss.differentiable())
    throw unsupported_loss_error("bif_matrix: loss must be differentiable");
  const Hyperparams& hp = m.hyper;
  hp.validate();
  if (hp.gamma_i > 0.0 && L == nullptr)
    throw argument_error("bif_matrix: gamma_i > 0 needs a Laplacian");
  const Index n = d.total();
  const int t = part.t;
  const CurvatureParts parts = build_curvature(m, d);

  Matrix rhs_all(n, t);
  for (int i = 0; i < t; ++i)
    rhs_all.col(i) = detail::bif_rhs(
        m, d, K, hp, part.labeled_folds[static_cast<std::size_t>(i)],
        part.fold_points(i));

  BifMatrix B;
  B.t = t;
  if (solver.path == SolverSpec::Path::nystrom) {
    const int c = solver.c > 0 ? solver.c : hp.nystrom_rank(n);
    B.path = "nystrom(" + std::to_string(c) + ")";
    try {
      const BlockTInverse T_inv = build_T_inverse(K, parts, d, hp, m.loss);
      const NystromFactors factors = nystrom_sample(K, c, solver.seed);
      const Matrix empty;
      const WoodburySolver wb(T_inv, factors,
                              hp.gamma_i > 0.0 ? L->laplacian : empty,
                              hp.gamma_i, 1.0 / static_cast<double>(n * n));
      B.columns = Matrix(n, t);
      for (int i = 0; i < t; ++i) B.columns.col(i) = wb.solve(rhs_all.col(i));
      return B;
    } catch (const numerical_error&) {
      B.nystrom_fallback = true;  // fall through to the dense solve
    }
  } else {
    B.path = "dense";
  }

  const Matrix H = assemble_H(K, L, parts, d, hp);
  B.columns = detail::solve_lu_jitter(H, rhs_all, "bif_matrix");
  return B;
}

inline BifMatrix bif_matrix(const FittedModel& m, const SemiDataset& d,
                            const FoldPartition& part, const KernelMatrix& K,
                            const GraphLaplacian& L,
                            const SolverSpec& solver) {
  return bif_matrix(m, d, part, K, &L, solver);
}

/// First-order fold predictors: column i approximates the model retrained
/// without fold i, evaluated on every training point:
///   f_approx = f + B_col_i / (1 - t).
inline Matrix fold_predictor_correction(const BifMatrix& B,
                                        const FittedModel& m, int t) {
  if (t < 2) throw argument_error("fold_predictor_correction: t must be >= 2");
  Matrix out(B.columns.rows(), B.columns.cols());
  const double step = 1.0 / (1.0 - static_cast<double>(t));
  for (Index i = 0; i < B.columns.cols(); ++i)
    out.col(i) = m.fitted + step * B.columns.col(i);
  return out;
}

}  // namespace mancv
