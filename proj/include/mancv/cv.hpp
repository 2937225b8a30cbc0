#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mancv/bif.hpp"
#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/folds.hpp"
#include "mancv/losses.hpp"
#include "mancv/trainers.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// One criterion evaluation. criterion_value is the raw (unnormalized) sum of
/// validation losses over all held-out labeled points, per fold in per_fold.
struct CvReport {
  double criterion = 0.0;
  std::vector<double> per_fold;
  double wall_time_sec = 0.0;
  std::string method;             // "exact", "bif-dense", "bif-nystrom(c)"
  int t = 0;
  bool nystrom_fallback = false;
};

namespace detail {

// Training set with fold i removed: complement labeled rows first (original
// order), then complement unlabeled rows.
inline SemiDataset complement_dataset(const SemiDataset& d,
                                      const FoldPartition& part, int fold,
                                      IndexList* labeled_kept = nullptr) {
  std::vector<bool> drop(static_cast<std::size_t>(d.total()), false);
  for (Index j : part.labeled_folds[static_cast<std::size_t>(fold)])
    drop[static_cast<std::size_t>(j)] = true;
  for (Index j : part.unlabeled_folds[static_cast<std::size_t>(fold)])
    drop[static_cast<std::size_t>(j)] = true;

  IndexList keep_labeled, keep_unlabeled;
  for (Index j = 0; j < d.l; ++j)
    if (!drop[static_cast<std::size_t>(j)]) keep_labeled.push_back(j);
  for (Index j = d.l; j < d.total(); ++j)
    if (!drop[static_cast<std::size_t>(j)]) keep_unlabeled.push_back(j);
  if (labeled_kept != nullptr) *labeled_kept = keep_labeled;

  SemiDataset out;
  out.l = static_cast<Index>(keep_labeled.size());
  out.u = static_cast<Index>(keep_unlabeled.size());
  out.points = Matrix(out.total(), d.points.cols());
  out.labels = Vector(out.l);
  Index r = 0;
  for (Index j : keep_labeled) {
    out.points.row(r) = d.points.row(j);
    out.labels[r] = d.labels[j];
    ++r;
  }
  for (Index j : keep_unlabeled) out.points.row(r++) = d.points.row(j);
  return out;
}

inline FittedModel fit(const SemiDataset& d, const Hyperparams& hp,
                       const LossKind& loss) {
  switch (loss.type) {
    case LossType::square:
      return train_laprls(d, hp);
    case LossType::huber: {
      Hyperparams local = hp;
      local.h = loss.h;
      return train_lapsvm(d, local);
    }
    case LossType::hinge:
      throw unsupported_loss_error("cv: hinge training is not supported");
  }
  throw argument_error("cv: unknown loss");
}

}  // namespace detail

/// Exact t-fold cross-validation: retrains on S minus each fold (graph
/// rebuilt on the remaining points) and validates on the fold's labeled
/// points. Fold trainings run in parallel up to `threads`.
inline CvReport exact_tcv(const SemiDataset& d, const Hyperparams& hp,
                          const LossKind& loss, ValidationKind V,
                          const FoldPartition& part, int threads = 1) {
  hp.validate();
  const Stopwatch timer;
  CvReport report;
  report.method = "exact";
  report.t = part.t;
  report.per_fold.assign(static_cast<std::size_t>(part.t), 0.0);

  parallel_for(part.t, threads, [&](Index i) {
    const int fold = static_cast<int>(i);
    try {
      const SemiDataset rest = detail::complement_dataset(d, part, fold);
      const FittedModel model = detail::fit(rest, hp, loss);
      const auto& held_out = part.labeled_folds[static_cast<std::size_t>(fold)];
      Matrix eval_points(static_cast<Index>(held_out.size()), d.points.cols());
      for (std::size_t r = 0; r < held_out.size(); ++r)
        eval_points.row(static_cast<Index>(r)) = d.points.row(held_out[r]);
      const Vector preds = predict(model, eval_points, rest.points);
      double sum = 0.0;
      for (std::size_t r = 0; r < held_out.size(); ++r)
        sum += validation_loss(V, d.labels[held_out[r]],
                               preds[static_cast<Index>(r)]);
      report.per_fold[static_cast<std::size_t>(fold)] = sum;
    } catch (const convergence_error& e) {
      throw convergence_error(
          "fold " + std::to_string(fold) + ": " + e.what(), e.grad_norm);
    } catch (const numerical_error& e) {
      throw numerical_error("fold " + std::to_string(fold) + ": " + e.what());
    } catch (const error& e) {
      throw error("fold " + std::to_string(fold) + ": " + e.what());
    }
  });

  for (double v : report.per_fold) report.criterion += v;
  report.wall_time_sec = timer.seconds();
  return report;
}

/// Approximate t-fold cross-validation: trains once on the full data, builds
/// the BIF matrix, and scores the first-order corrected predictors
/// f_j + B_ji/(1-t) at each fold's labeled points.
inline CvReport approx_tbif(const SemiDataset& d, const Hyperparams& hp,
                            const LossKind& loss, ValidationKind V,
                            const FoldPartition& part,
                            const SolverSpec& solver) {
  hp.validate();
  if (!loss.differentiable())
    throw unsupported_loss_error("approx_tbif: loss must be differentiable");
  const Stopwatch timer;

  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  GraphLaplacian L;
  const bool with_graph = hp.gamma_i > 0.0;
  if (with_graph) L = build_knn_laplacian(d.points, hp.k, hp.sigma_w);

  FittedModel model;
  if (loss.type == LossType::square) {
    model = train_laprls_with(K, with_graph ? &L : nullptr, d, hp);
  } else {
    Hyperparams local = hp;
    local.h = loss.h;
    model = train_lapsvm_with(K, with_graph ? &L : nullptr, d, local);
  }

  const BifMatrix B =
      bif_matrix(model, d, part, K, with_graph ? &L : nullptr, solver);
  const double step = 1.0 / (1.0 - static_cast<double>(part.t));

  CvReport report;
  report.t = part.t;
  report.method = solver.path == SolverSpec::Path::nystrom
                      ? "bif-" + B.path
                      : "bif-dense";
  report.nystrom_fallback = B.nystrom_fallback;
  report.per_fold.assign(static_cast<std::size_t>(part.t), 0.0);
  for (int i = 0; i < part.t; ++i) {
    double sum = 0.0;
    for (Index j : part.labeled_folds[static_cast<std::size_t>(i)]) {
      const double corrected = model.fitted[j] + step * B.columns(j, i);
      sum += validation_loss(V, d.labels[j], corrected);
    }
    report.per_fold[static_cast<std::size_t>(i)] = sum;
  }
  for (double v : report.per_fold) report.criterion += v;
  report.wall_time_sec = timer.seconds();
  return report;
}

}  // namespace mancv
