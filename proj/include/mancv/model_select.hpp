#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mancv/cv.hpp"
#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/trainers.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Hyperparameter axes searched by the grid. Values come from the usual
/// log-spaced candidate sets; both the full set and a small demo set are
/// provided, and every axis can be overridden.
struct Grid {
  std::vector<double> sigmas;
  std::vector<double> gamma_as;
  std::vector<double> gamma_is;
  std::vector<int> ks;
  std::vector<double> sigma_ws;

  /// Full candidate axes: sigma in 2^{-10,-8,...,10}, gamma_A and gamma_I in
  /// 10^{-6..2}, k in {2,4,8}, sigma_w in 2^{-4,-2,...,4} (13365 points).
  static Grid full() {
    Grid g;
    for (int i = -10; i <= 10; i += 2) g.sigmas.push_back(std::ldexp(1.0, i));
    for (int i = -6; i <= 2; ++i) {
      g.gamma_as.push_back(std::pow(10.0, i));
      g.gamma_is.push_back(std::pow(10.0, i));
    }
    g.ks = {2, 4, 8};
    for (int i = -4; i <= 4; i += 2) g.sigma_ws.push_back(std::ldexp(1.0, i));
    return g;
  }

  /// Desk-scale grid used by default in the CLI (12 points). Ambient
  /// regularization starts at 1e-2: with a few dozen labeled points anything
  /// weaker is indistinguishable from interpolation.
  static Grid demo() {
    Grid g;
    g.sigmas = {0.25, 1.0, 4.0};
    g.gamma_as = {1e-2, 1e-1};
    g.gamma_is = {1e-4, 1e-2};
    g.ks = {4};
    g.sigma_ws = {1.0};
    return g;
  }

  bool empty() const {
    return sigmas.empty() || gamma_as.empty() || gamma_is.empty() ||
           ks.empty() || sigma_ws.empty();
  }

  /// Cartesian product in a fixed deterministic order; h and c are carried
  /// over from the base config (they are not searched).
  std::vector<Hyperparams> points(const Hyperparams& base) const {
    std::vector<Hyperparams> out;
    for (double s : sigmas)
      for (double ga : gamma_as)
        for (double gi : gamma_is)
          for (int k : ks)
            for (double sw : sigma_ws) {
              Hyperparams hp = base;
              hp.sigma = s;
              hp.gamma_a = ga;
              hp.gamma_i = gi;
              hp.k = k;
              hp.sigma_w = sw;
              out.push_back(hp);
            }
    return out;
  }
};

struct SelectionRow {
  Hyperparams hp;
  double criterion = std::numeric_limits<double>::quiet_NaN();
  double wall_time_sec = 0.0;
  std::string status = "ok";  // "ok" or "failed: <reason>"
};

struct SelectionResult {
  Hyperparams best;
  double best_criterion = 0.0;
  std::vector<SelectionRow> table;
  std::string method;
};

enum class CriterionKind { exact, bif };

namespace detail {

// Tie rule: prefer stronger regularization, then smaller kernel/graph
// parameters, so selections are deterministic when criteria collide.
inline bool tie_prefers(const Hyperparams& a, const Hyperparams& b) {
  if (a.gamma_a != b.gamma_a) return a.gamma_a > b.gamma_a;
  if (a.gamma_i != b.gamma_i) return a.gamma_i > b.gamma_i;
  if (a.sigma != b.sigma) return a.sigma < b.sigma;
  if (a.k != b.k) return a.k < b.k;
  return a.sigma_w < b.sigma_w;
}

}  // namespace detail

/// Evaluates the chosen criterion at every grid point over one shared fold
/// partition (same seed for every point, so exact and approximate searches
/// with equal seeds see identical folds). Failed points stay in the table
/// but are excluded from the argmin.
inline SelectionResult grid_search(const SemiDataset& d, const Grid& g,
                                   CriterionKind criterion,
                                   const SolverSpec& solver,
                                   const LossKind& loss, ValidationKind V,
                                   int t, std::uint64_t seed,
                                   const Hyperparams& base = {}) {
  if (g.empty()) throw argument_error("grid_search: empty grid");
  const FoldPartition part = partition_folds(d, t, seed);

  SelectionResult result;
  result.method = criterion == CriterionKind::exact ? "exact" : "bif";
  bool have_best = false;
  for (const Hyperparams& hp : g.points(base)) {
    SelectionRow row;
    row.hp = hp;
    try {
      const CvReport rep = criterion == CriterionKind::exact
                               ? exact_tcv(d, hp, loss, V, part, thread_cap())
                               : approx_tbif(d, hp, loss, V, part, solver);
      row.criterion = rep.criterion;
      row.wall_time_sec = rep.wall_time_sec;
    } catch (const error& e) {
      row.status = std::string("failed: ") + e.what();
    }
    if (row.status == "ok") {
      const bool better =
          !have_best || row.criterion < result.best_criterion ||
          (row.criterion == result.best_criterion &&
           detail::tie_prefers(row.hp, result.best));
      if (better) {
        result.best = row.hp;
        result.best_criterion = row.criterion;
        have_best = true;
      }
    }
    result.table.push_back(std::move(row));
  }
  if (!have_best)
    throw selection_error("grid_search: every grid point failed");
  return result;
}

/// Paired t-test result. When the differences have zero spread the statistic
/// is degenerate: t is reported as 0 and significance is never claimed.
struct TTestResult {
  double t_statistic = 0.0;
  bool significant = false;
  bool degenerate = false;
};

/// One-sided paired t-test of H1 "b worse than a": t = mean(b-a) over
/// sd(b-a)/sqrt(N) with the sample (1/(N-1)) standard deviation, compared
/// against the critical value for the caller's N (1.699 fits N = 30).
/// relative_resolution, when positive, zeroes differences below the stated
/// measurement resolution: |b-a| <= res * (|a| + |b|) counts as a tie. Two
/// solve paths that produce the same model up to roundoff would otherwise
/// register as a systematic "difference" with near-zero variance.
inline TTestResult paired_ttest(const std::vector<double>& errors_a,
                                const std::vector<double>& errors_b,
                                double threshold = 1.699,
                                double relative_resolution = 0.0) {
  if (errors_a.size() != errors_b.size())
    throw argument_error("paired_ttest: length mismatch");
  const std::size_t n = errors_a.size();
  if (n < 2) throw argument_error("paired_ttest: need at least 2 pairs");

  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) {
    diff[i] = errors_b[i] - errors_a[i];
    if (relative_resolution > 0.0 &&
        std::abs(diff[i]) <=
            relative_resolution *
                (std::abs(errors_a[i]) + std::abs(errors_b[i])))
      diff[i] = 0.0;
  }
  double mean = 0.0;
  for (double v : diff) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : diff) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult r;
  if (sd == 0.0) {
    r.degenerate = true;
    return r;
  }
  r.t_statistic = mean / (sd / std::sqrt(static_cast<double>(n)));
  r.significant = r.t_statistic > threshold;
  return r;
}

/// Trains on the full training set with the chosen hyperparameters and
/// returns the mean validation loss on the test set.
inline double evaluate_test_error(const Hyperparams& best,
                                  const SemiDataset& train,
                                  const RawDataset& test, const LossKind& loss,
                                  ValidationKind V) {
  if (test.rows() < 1)
    throw argument_error("evaluate_test_error: empty test set");
  if (test.cols() != train.points.cols())
    throw argument_error("evaluate_test_error: feature dimension mismatch");
  const FittedModel model = detail::fit(train, best, loss);
  const Vector preds = predict(model, test.features, train.points);
  double sum = 0.0;
  for (Index i = 0; i < test.rows(); ++i)
    sum += validation_loss(V, test.targets[i], preds[i]);
  return sum / static_cast<double>(test.rows());
}

}  // namespace mancv
