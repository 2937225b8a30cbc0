// Acceptance suite: one line per criterion, nonzero exit when any fails.
// Each criterion pins its tolerance in code and checks its runtime budget.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mancv/manifold_cv.hpp"

using namespace mancv;

namespace {

int failures = 0;

void report(int id, const char* name, bool pass, double seconds,
            const std::string& detail) {
  std::printf("%s C%d %-28s (%6.1fs) %s\n", pass ? "PASS" : "FAIL", id, name,
              seconds, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Matrix gaussian_points(Index n, Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) m(i, j) = gauss(rng);
  return m;
}

SemiDataset regression_instance(Index l, Index u, std::uint64_t seed) {
  SemiDataset d;
  d.l = l;
  d.u = u;
  d.points = gaussian_points(l + u, 2, seed);
  std::mt19937_64 rng(seed + 7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  d.labels = Vector(l);
  for (Index i = 0; i < l; ++i) d.labels[i] = gauss(rng);
  return d;
}

// ---------------------------------------------------------------------------
// C1: first-order correctness of the influence matrix against the
// epsilon-mixture weighted trainer (LapRLS, l = 30, u = 120).
void criterion1() {
  const Stopwatch timer;
  Hyperparams hp;
  hp.sigma = 1.0;
  hp.gamma_a = 0.05;
  hp.gamma_i = 0.3;
  hp.k = 3;
  const int t = 5;
  int passing_seeds = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SemiDataset d = regression_instance(30, 120, 100 + seed);
    const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
    const GraphLaplacian L = build_knn_laplacian(d.points, hp.k, hp.sigma_w);
    const FittedModel m = train_laprls_with(K, &L, d, hp);
    const FoldPartition part = partition_folds(d, t, 200 + seed);
    const BifMatrix B = bif_matrix(m, d, part, K, L, SolverSpec::dense());

    bool seed_ok = true;
    for (int fold = 0; fold < t && seed_ok; ++fold) {
      const IndexList fold_pts = part.fold_points(fold);
      const GraphLaplacian L_fold =
          sub_laplacian(d.points, fold_pts, hp.k, hp.sigma_w);
      double prev_err = -1.0;
      for (double eps : {1e-2, 5e-3, 2.5e-3}) {
        const Matrix M = mixture_quadratic(L.laplacian, d.total(),
                                           L_fold.laplacian, fold_pts, eps);
        const Vector w = mixture_label_weights(
            d.l, part.labeled_folds[static_cast<std::size_t>(fold)], eps);
        const FittedModel moved =
            train_weighted_with(K, d, hp, LossKind::square(), w, M);
        const double err = ((moved.fitted - m.fitted) / eps -
                            B.columns.col(fold))
                               .cwiseAbs()
                               .maxCoeff();
        if (prev_err >= 0.0 && !(err <= 0.75 * prev_err)) seed_ok = false;
        prev_err = err;
      }
    }
    if (seed_ok) ++passing_seeds;
  }
  const double secs = timer.seconds();
  report(1, "bif-first-order", passing_seeds >= 9 && secs < 30.0, secs,
         std::to_string(passing_seeds) + "/10 seeds, budget 30s");
}

// ---------------------------------------------------------------------------
// C2: corrected fold predictors approach exact retrains as t grows
// (2-moons, l = 20, u = 80, t = 2 vs t = 20, 10 seeds).
void criterion2() {
  const Stopwatch timer;
  Hyperparams hp;
  hp.sigma = 1.0;
  hp.gamma_a = 1e-2;
  hp.gamma_i = 1e-3;
  hp.k = 3;
  std::vector<double> gaps_t2, gaps_t20;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SemiDataset d = make_semi(two_moons(100, 0.2, 300 + seed), 20);
    const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
    const GraphLaplacian L = build_knn_laplacian(d.points, hp.k, hp.sigma_w);
    const FittedModel m = train_laprls_with(K, &L, d, hp);
    for (int t : {2, 20}) {
      const FoldPartition part = partition_folds(d, t, 400 + seed);
      const BifMatrix B = bif_matrix(m, d, part, K, L, SolverSpec::dense());
      const Matrix approx = fold_predictor_correction(B, m, t);
      for (int fold = 0; fold < t; ++fold) {
        const SemiDataset rest = detail::complement_dataset(d, part, fold);
        const FittedModel retrained = train_laprls(rest, hp);
        const Vector on_all = predict(retrained, d.points, rest.points);
        const double gap = (approx.col(fold) - on_all).cwiseAbs().maxCoeff() /
                           on_all.cwiseAbs().maxCoeff();
        (t == 2 ? gaps_t2 : gaps_t20).push_back(gap);
      }
    }
  }
  const double med2 = median(gaps_t2);
  const double med20 = median(gaps_t20);
  const double secs = timer.seconds();
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "median gap t=20 %.3e < t=2 %.3e, budget 120s", med20, med2);
  report(2, "fold-predictor-taylor", med20 < med2 && secs < 120.0, secs,
         detail);
}

// ---------------------------------------------------------------------------
// C3: accuracy agreement between exact-CV-selected and BIF-selected models
// (3 synthetic datasets, R = 10, t in {5, 10}, demo grid, |t-stat| <= 1.833).
void criterion3() {
  const Stopwatch timer;
  const Grid grid = Grid::demo();
  const double threshold = 1.833;  // one-sided 95% at df = 9
  bool all_ok = true;
  std::string detail;

  struct Spec {
    const char* name;
    Task task;
    RawDataset data;
  };
  // test errors compared at a 1e-4 relative resolution: selections whose
  // errors agree to 0.01% are the same model for Table-1 purposes
  const double resolution = 1e-4;
  std::vector<Spec> datasets;
  datasets.push_back({"moons-a", Task::classification, two_moons(400, 0.15, 1)});
  datasets.push_back({"moons-b", Task::classification, two_moons(400, 0.25, 2)});
  datasets.push_back(
      {"rkhs-reg", Task::regression, rkhs_regression(800, 3, 1.0, 20, 0.2, 3)});

  for (const Spec& spec : datasets) {
    const RawDataset full = normalize(spec.data);
    const LossKind loss = spec.task == Task::classification
                              ? LossKind::huber(0.01)
                              : LossKind::square();
    const ValidationKind V = spec.task == Task::classification
                                 ? ValidationKind::zero_one
                                 : ValidationKind::square;
    for (int t : {5, 10}) {
      std::vector<double> err_exact, err_bif;
      for (int rep = 0; rep < 10; ++rep) {
        const std::uint64_t seed = 500 + static_cast<std::uint64_t>(rep);
        auto [train_raw, test_raw] = split_train_test(full, 0.7, seed);
        const SemiDataset semi = mask_labels(train_raw, 0.10, seed);
        Hyperparams base;
        base.h = 0.01;
        const SelectionResult by_exact =
            grid_search(semi, grid, CriterionKind::exact, SolverSpec::dense(),
                        loss, V, t, seed, base);
        const SelectionResult by_bif = grid_search(
            semi, grid, CriterionKind::bif, SolverSpec::nystrom(0, seed), loss,
            V, t, seed, base);
        err_exact.push_back(
            evaluate_test_error(by_exact.best, semi, test_raw, loss, V));
        err_bif.push_back(
            evaluate_test_error(by_bif.best, semi, test_raw, loss, V));
      }
      const TTestResult tt =
          paired_ttest(err_exact, err_bif, threshold, resolution);
      const bool ok =
          tt.degenerate || std::abs(tt.t_statistic) <= threshold;
      if (!ok) all_ok = false;
      char buf[96];
      std::snprintf(buf, sizeof buf, "%s[t=%d]:%s ", spec.name, t,
                    tt.degenerate
                        ? "degen"
                        : (std::abs(tt.t_statistic) <= threshold ? "ok"
                                                                 : "SIG"));
      detail += buf;
    }
  }
  const double secs = timer.seconds();
  report(3, "accuracy-agreement", all_ok && secs < 1200.0, secs,
         detail + "budget 1200s");
}

// ---------------------------------------------------------------------------
// C4: wall-time speedup of the single-training criterion at l+u = 1000,
// t = 10, c = ceil(sqrt(1000)) = 32: <= 0.5x exact in >= 4/5 repetitions.
void criterion4() {
  const Stopwatch timer;
  Hyperparams hp;
  hp.sigma = 1.0;
  hp.gamma_a = 1e-2;
  hp.gamma_i = 1e-3;
  hp.k = 4;
  int wins = 0;
  double last_ratio = 0.0;
  for (int rep = 0; rep < 5; ++rep) {
    const std::uint64_t seed = 900 + static_cast<std::uint64_t>(rep);
    const SemiDataset d = regression_instance(100, 900, seed);
    const FoldPartition part = partition_folds(d, 10, seed);
    const CvReport exact =
        exact_tcv(d, hp, LossKind::square(), ValidationKind::square, part);
    const CvReport approx = approx_tbif(
        d, hp, LossKind::square(), ValidationKind::square, part,
        SolverSpec::nystrom(32, seed));
    last_ratio = approx.wall_time_sec / exact.wall_time_sec;
    if (approx.wall_time_sec <= 0.5 * exact.wall_time_sec) ++wins;
  }
  const double secs = timer.seconds();
  char detail[96];
  std::snprintf(detail, sizeof detail, "%d/5 reps at <= 0.5x (last %.2fx)",
                wins, last_ratio);
  report(4, "nystrom-speedup", wins >= 4, secs, detail);
}

// ---------------------------------------------------------------------------
// C5: full-rank agreement of the approximate criterion and dense-residual
// exactness of the Woodbury solution.
void criterion5() {
  const Stopwatch timer;
  const SemiDataset d = regression_instance(12, 28, 5150);
  Hyperparams hp;
  hp.sigma = 1.0;
  hp.gamma_a = 0.05;
  hp.gamma_i = 0.2;
  hp.k = 3;
  const FoldPartition part = partition_folds(d, 4, 11);
  const CvReport dense = approx_tbif(d, hp, LossKind::square(),
                                     ValidationKind::square, part,
                                     SolverSpec::dense());
  const CvReport full_rank = approx_tbif(
      d, hp, LossKind::square(), ValidationKind::square, part,
      SolverSpec::nystrom(static_cast<int>(d.total()), 12));
  const bool criteria_ok =
      std::abs(dense.criterion - full_rank.criterion) <= 1e-6;

  // residual check: dense-assembled H~ times the Woodbury solution
  const Index n = d.total();
  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  const GraphLaplacian L = build_knn_laplacian(d.points, hp.k, hp.sigma_w);
  Vector curv = Vector::Zero(n);
  curv.head(d.l).setConstant(2.0);
  const BlockTInverse Tinv =
      build_T_inverse(K, curv, d, hp, LossKind::square());
  const double scale = 1.0 / static_cast<double>(n * n);
  bool residual_ok = true;
  double worst = 0.0;
  std::mt19937_64 rng(13);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int c : {8, 20, static_cast<int>(n)}) {
    const NystromFactors f = nystrom_sample(K, c, 17);
    Matrix T = K.entries * (curv / static_cast<double>(d.l)).asDiagonal();
    T.diagonal().array() += 2.0 * hp.gamma_a;
    const Matrix Htil = T + (2.0 * hp.gamma_i * scale) * f.C * f.P_pinv *
                                (f.C.transpose() * L.laplacian);
    for (int trial = 0; trial < 5; ++trial) {
      Vector rhs(n);
      for (Index i = 0; i < n; ++i) rhs[i] = gauss(rng);
      const Vector x =
          woodbury_solve(Tinv, f, L.laplacian, hp.gamma_i, scale, rhs);
      const double rel = (Htil * x - rhs).norm() / rhs.norm();
      worst = std::max(worst, rel);
      if (rel > 1e-8) residual_ok = false;
    }
  }
  const double secs = timer.seconds();
  char detail[128];
  std::snprintf(detail, sizeof detail,
                "criterion gap %.2e (<=1e-6), worst residual %.2e (<=1e-8)",
                std::abs(dense.criterion - full_rank.criterion), worst);
  report(5, "woodbury-exactness", criteria_ok && residual_ok, secs, detail);
}

// ---------------------------------------------------------------------------
// C6: reductions to kernel ridge regression and to the unweighted trainer.
void criterion6() {
  const Stopwatch timer;
  SemiDataset d = regression_instance(15, 0, 600);
  Hyperparams hp;
  hp.sigma = 1.2;
  hp.gamma_a = 0.07;
  hp.gamma_i = 0.0;
  const FittedModel m = train_laprls(d, hp);
  const KernelMatrix K = kernel_matrix(d.points, hp.sigma);
  Matrix A = K.entries;
  A.diagonal().array() += hp.gamma_a * static_cast<double>(d.l);
  const Vector alpha_krr = Eigen::LDLT<Matrix>(A).solve(d.labels);
  const double krr_gap = (m.alpha - alpha_krr).cwiseAbs().maxCoeff();

  SemiDataset ds = regression_instance(10, 14, 601);
  Hyperparams hps;
  hps.gamma_a = 0.03;
  hps.gamma_i = 0.05;
  hps.k = 3;
  const GraphLaplacian L = build_knn_laplacian(ds.points, hps.k, hps.sigma_w);
  const Matrix M =
      L.laplacian / static_cast<double>(ds.total() * ds.total());
  const Vector w = Vector::Constant(ds.l, 1.0 / static_cast<double>(ds.l));
  const FittedModel weighted =
      train_weighted(ds, hps, LossKind::square(), w, M);
  const FittedModel plain = train_laprls(ds, hps);
  const double uniform_gap =
      (weighted.alpha - plain.alpha).cwiseAbs().maxCoeff();

  const double secs = timer.seconds();
  char detail[96];
  std::snprintf(detail, sizeof detail, "krr gap %.2e (<=1e-8), uniform %.2e (<=1e-10)",
                krr_gap, uniform_gap);
  report(6, "trainer-reductions", krr_gap <= 1e-8 && uniform_gap <= 1e-10,
         secs, detail);
}

// ---------------------------------------------------------------------------
// C7: structural invariants of the Laplacian, kernel, and huber loss.
void criterion7() {
  const Stopwatch timer;
  bool ok = true;
  std::string why;

  const Matrix pts = gaussian_points(30, 3, 700);
  const GraphLaplacian L = build_knn_laplacian(pts, 4, 1.0);
  if (L.laplacian.rowwise().sum().cwiseAbs().maxCoeff() >= 1e-10) {
    ok = false;
    why += "row-sums ";
  }
  Eigen::SelfAdjointEigenSolver<Matrix> leig(L.laplacian);
  if (leig.eigenvalues().minCoeff() <= -1e-8) {
    ok = false;
    why += "laplacian-psd ";
  }

  const KernelMatrix K = kernel_matrix(pts, 0.9);
  if ((K.entries - K.entries.transpose()).cwiseAbs().maxCoeff() != 0.0) {
    ok = false;
    why += "kernel-symmetry ";
  }
  Eigen::SelfAdjointEigenSolver<Matrix> keig(K.entries);
  if (keig.eigenvalues().minCoeff() <= -1e-8 * 30) {
    ok = false;
    why += "kernel-psd ";
  }

  for (double h : {0.01, 0.1}) {
    const LossKind hub = LossKind::huber(h);
    // C1 continuity at both band boundaries
    if (std::abs(loss_eval(hub, 1.0, 1.0 - h) - h) > 1e-12 ||
        std::abs(loss_eval(hub, 1.0, 1.0 + h)) > 1e-12 ||
        std::abs(loss_d1(hub, 1.0, 1.0 - h) + 1.0) > 1e-12 ||
        std::abs(loss_d1(hub, 1.0, 1.0 + h)) > 1e-12) {
      ok = false;
      why += "huber-c1 ";
    }
    double sup = 0.0;
    for (int i = 0; i <= 20000; ++i) {
      const double yt = 1.0 - 2.0 * h + i * (4.0 * h / 20000.0);
      sup = std::max(sup, std::abs(loss_eval(hub, 1.0, yt) -
                                   loss_eval(LossKind::hinge(), 1.0, yt)));
    }
    if (std::abs(sup - h / 4.0) > 1e-12) {
      ok = false;
      why += "huber-hinge-sup ";
    }
  }
  report(7, "structural-invariants", ok, timer.seconds(),
         ok ? "all invariants hold" : why);
}

// ---------------------------------------------------------------------------
// C8: exact CV equals an independently written brute-force loop on 5 random
// small instances (this loop shares only the trainers with the harness).
void criterion8() {
  const Stopwatch timer;
  bool ok = true;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SemiDataset d = regression_instance(8, 12, 800 + seed);
    Hyperparams hp;
    hp.sigma = 0.9;
    hp.gamma_a = 0.04;
    hp.gamma_i = 0.06;
    hp.k = 3;
    const FoldPartition part = partition_folds(d, 4, 850 + seed);
    const CvReport rep =
        exact_tcv(d, hp, LossKind::square(), ValidationKind::square, part);

    double brute = 0.0;
    for (int fold = 0; fold < part.t; ++fold) {
      std::set<Index> held;
      for (Index j : part.labeled_folds[static_cast<std::size_t>(fold)])
        held.insert(j);
      for (Index j : part.unlabeled_folds[static_cast<std::size_t>(fold)])
        held.insert(j);
      std::vector<Index> keep;
      for (Index j = 0; j < d.l; ++j)
        if (!held.count(j)) keep.push_back(j);
      const Index kept_l = static_cast<Index>(keep.size());
      for (Index j = d.l; j < d.total(); ++j)
        if (!held.count(j)) keep.push_back(j);
      SemiDataset rest;
      rest.l = kept_l;
      rest.u = static_cast<Index>(keep.size()) - kept_l;
      rest.points = Matrix(static_cast<Index>(keep.size()), d.points.cols());
      rest.labels = Vector(rest.l);
      for (std::size_t r = 0; r < keep.size(); ++r) {
        rest.points.row(static_cast<Index>(r)) = d.points.row(keep[r]);
        if (static_cast<Index>(r) < rest.l)
          rest.labels[static_cast<Index>(r)] = d.labels[keep[r]];
      }
      const FittedModel model = train_laprls(rest, hp);
      for (Index j : part.labeled_folds[static_cast<std::size_t>(fold)]) {
        Matrix one(1, d.points.cols());
        one.row(0) = d.points.row(j);
        const double pred = predict(model, one, rest.points)[0];
        const double r = pred - d.labels[j];
        brute += r * r;
      }
    }
    worst = std::max(worst, std::abs(rep.criterion - brute));
    if (std::abs(rep.criterion - brute) > 1e-10) ok = false;
  }
  char detail[64];
  std::snprintf(detail, sizeof detail, "worst |gap| %.2e (<=1e-10)", worst);
  report(8, "exact-cv-oracle", ok, timer.seconds(), detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite (8 criteria)\n");
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
