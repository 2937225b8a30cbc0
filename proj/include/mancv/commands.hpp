#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mancv/cv.hpp"
#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/model_select.hpp"
#include "mancv/synth.hpp"
#include "mancv/util.hpp"

namespace mancv {

using json = nlohmann::json;

inline constexpr const char* kCvReportSchema = "manifold-cv/cv-report/v1";
inline constexpr const char* kSelectTableSchema = "manifold-cv/select-table/v1";
inline constexpr const char* kSelectSummarySchema =
    "manifold-cv/select-summary/v1";
inline constexpr const char* kBenchTableSchema = "manifold-cv/bench-table/v1";
inline constexpr const char* kBenchSummarySchema =
    "manifold-cv/bench-summary/v1";

/// Everything a CLI invocation needs. Defaults follow the protocol the
/// library targets: t = 10, 10% labeled, 70/30 split, h = 0.01 and
/// c = ceil(sqrt(l+u)) when left at zero.
struct RunConfig {
  std::string command;                  // cv | select | bench | gen
  std::vector<std::string> data_paths;
  std::string test_path;
  Task task = Task::classification;
  std::string method = "bif";           // exact | bif
  std::string solver = "nystrom";       // dense | nystrom
  std::vector<int> t_list = {10};
  std::uint64_t seed = 0;
  double labeled_fraction = 0.10;
  double train_fraction = 0.70;
  int c = 0;
  double h = 0.01;
  std::string grid = "demo";            // demo | paper | <file.json>
  std::string out_path;
  std::string format = "json";          // json | csv (single-run reports)
  int reps = 5;
  bool timings = false;                 // include wall times in cv JSON
  Hyperparams hyper;                    // single-run hyperparameters (cv)
  // gen:
  Index n = 200;
  int dim = 3;
  double noise = 0.15;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Atomic replace: write to a sibling temp file, then rename over the target.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw error("cannot open '" + tmp.string() + "' for writing");
    out << content;
    if (!out) throw error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// CSV cells must stay one-line and comma-free (failure messages may not be).
inline std::string csv_sanitize(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return s;
}

// One-sided 95% critical values of the t distribution, df = 1..30.
inline double t_critical(int df) {
  static constexpr double table[30] = {
      6.314, 2.920, 2.353, 2.132, 2.015, 1.943, 1.895, 1.860, 1.833, 1.812,
      1.796, 1.782, 1.771, 1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725,
      1.721, 1.717, 1.714, 1.711, 1.708, 1.706, 1.703, 1.701, 1.699, 1.697};
  if (df < 1) throw argument_error("t_critical: df must be >= 1");
  return df <= 30 ? table[df - 1] : 1.699;
}

inline LossKind loss_for(const RunConfig& cfg) {
  return cfg.task == Task::classification ? LossKind::huber(cfg.h)
                                          : LossKind::square();
}

inline ValidationKind validation_for(const RunConfig& cfg) {
  return cfg.task == Task::classification ? ValidationKind::zero_one
                                          : ValidationKind::square;
}

inline SolverSpec solver_for(const RunConfig& cfg) {
  if (cfg.solver == "dense") return SolverSpec::dense();
  if (cfg.solver == "nystrom") return SolverSpec::nystrom(cfg.c, cfg.seed);
  throw argument_error("unknown solver '" + cfg.solver + "'");
}

inline Grid grid_for(const RunConfig& cfg) {
  if (cfg.grid == "demo") return Grid::demo();
  if (cfg.grid == "paper") return Grid::full();
  const json spec = json::parse(read_file(cfg.grid));
  Grid g;
  g.sigmas = spec.at("sigmas").get<std::vector<double>>();
  g.gamma_as = spec.at("gamma_as").get<std::vector<double>>();
  g.gamma_is = spec.at("gamma_is").get<std::vector<double>>();
  g.ks = spec.at("ks").get<std::vector<int>>();
  g.sigma_ws = spec.at("sigma_ws").get<std::vector<double>>();
  if (g.empty()) throw argument_error("grid file has an empty axis");
  return g;
}

inline json hyper_json(const Hyperparams& hp) {
  return json{{"sigma", hp.sigma},   {"gamma_a", hp.gamma_a},
              {"gamma_i", hp.gamma_i}, {"k", hp.k},
              {"sigma_w", hp.sigma_w}};
}

inline json config_json(const RunConfig& cfg) {
  json j{{"task", cfg.task == Task::classification ? "clf" : "reg"},
         {"seed", cfg.seed},
         {"labeled_fraction", cfg.labeled_fraction},
         {"h", cfg.h},
         {"c", cfg.c},
         {"method", cfg.method},
         {"solver", cfg.solver}};
  if (!cfg.data_paths.empty()) j["data"] = cfg.data_paths;
  if (!cfg.test_path.empty()) j["test"] = cfg.test_path;
  return j;
}

inline SemiDataset load_semi(const RunConfig& cfg, const std::string& path) {
  RawDataset raw = normalize(parse_libsvm(read_file(path)));
  return mask_labels(raw, cfg.labeled_fraction, cfg.seed);
}

inline std::string out_stem(const std::string& out) {
  namespace fs = std::filesystem;
  fs::path p(out);
  const std::string ext = p.extension().string();
  if (ext == ".json" || ext == ".csv") p.replace_extension();
  return p.string();
}

}  // namespace detail

/// `gen`: writes a synthetic LIBSVM file (2-moons for clf, a sampled kernel
/// expansion for reg).
inline json cmd_gen(const RunConfig& cfg) {
  if (cfg.out_path.empty()) throw argument_error("gen requires --out");
  RawDataset d =
      cfg.task == Task::classification
          ? two_moons(cfg.n, cfg.noise, cfg.seed)
          : rkhs_regression(cfg.n, cfg.dim, 1.0,
                            std::min<Index>(20, cfg.n), cfg.noise, cfg.seed);
  detail::atomic_write(cfg.out_path, write_libsvm(d));
  return json{{"schema", "manifold-cv/gen/v1"},
              {"out", cfg.out_path},
              {"rows", d.rows()},
              {"cols", d.cols()},
              {"task", cfg.task == Task::classification ? "clf" : "reg"}};
}

/// `cv`: one criterion evaluation on one dataset. Returns the report JSON;
/// writes it to --out when given, so repeated runs with the same seed are
/// byte-identical (wall time is only serialized under --timings).
inline json cmd_cv(const RunConfig& cfg) {
  if (cfg.data_paths.size() != 1)
    throw argument_error("cv expects exactly one --data file");
  const SemiDataset semi = detail::load_semi(cfg, cfg.data_paths[0]);
  const int t = cfg.t_list.at(0);
  const FoldPartition part = partition_folds(semi, t, cfg.seed);
  Hyperparams hp = cfg.hyper;
  hp.h = cfg.h;
  hp.c = cfg.c;
  const LossKind loss = detail::loss_for(cfg);
  const ValidationKind V = detail::validation_for(cfg);

  CvReport rep;
  if (cfg.method == "exact") {
    rep = exact_tcv(semi, hp, loss, V, part, thread_cap());
  } else if (cfg.method == "bif") {
    rep = approx_tbif(semi, hp, loss, V, part, detail::solver_for(cfg));
  } else {
    throw argument_error("unknown method '" + cfg.method + "'");
  }

  json j{{"schema", kCvReportSchema},
         {"command", "cv"},
         {"method", rep.method},
         {"t", rep.t},
         {"criterion", rep.criterion},
         {"per_fold", rep.per_fold},
         {"nystrom_fallback", rep.nystrom_fallback},
         {"config", detail::config_json(cfg)},
         {"hyperparams", detail::hyper_json(hp)}};
  if (cfg.timings) j["wall_time_sec"] = rep.wall_time_sec;

  if (!cfg.out_path.empty()) {
    if (cfg.format == "csv") {
      std::string csv = std::string("# ") + kCvReportSchema + "\nfold,loss\n";
      for (std::size_t i = 0; i < rep.per_fold.size(); ++i)
        csv += std::to_string(i) + "," + detail::fmt_double(rep.per_fold[i]) +
               "\n";
      csv += "total," + detail::fmt_double(rep.criterion) + "\n";
      detail::atomic_write(cfg.out_path, csv);
    } else {
      detail::atomic_write(cfg.out_path, j.dump(2) + "\n");
    }
  }
  return j;
}

/// `select`: grid search with the chosen criterion; writes <out>.csv (one
/// row per grid point) and <out>.json (summary; includes the test error when
/// --test is given).
inline json cmd_select(const RunConfig& cfg) {
  if (cfg.data_paths.size() != 1)
    throw argument_error("select expects exactly one --data file");
  if (cfg.out_path.empty()) throw argument_error("select requires --out");
  const SemiDataset semi = detail::load_semi(cfg, cfg.data_paths[0]);
  const int t = cfg.t_list.at(0);
  const Grid grid = detail::grid_for(cfg);
  const LossKind loss = detail::loss_for(cfg);
  const ValidationKind V = detail::validation_for(cfg);
  Hyperparams base;
  base.h = cfg.h;
  base.c = cfg.c;

  const CriterionKind kind =
      cfg.method == "exact" ? CriterionKind::exact : CriterionKind::bif;
  const SelectionResult sel = grid_search(
      semi, grid, kind, detail::solver_for(cfg), loss, V, t, cfg.seed, base);

  std::string csv = std::string("# ") + kSelectTableSchema + "\n";
  csv += "row,sigma,gamma_a,gamma_i,k,sigma_w,criterion,wall_time_sec,status\n";
  std::size_t failed = 0;
  for (std::size_t i = 0; i < sel.table.size(); ++i) {
    const SelectionRow& row = sel.table[i];
    if (row.status != "ok") ++failed;
    csv += std::to_string(i) + "," + detail::fmt_double(row.hp.sigma) + "," +
           detail::fmt_double(row.hp.gamma_a) + "," +
           detail::fmt_double(row.hp.gamma_i) + "," +
           std::to_string(row.hp.k) + "," +
           detail::fmt_double(row.hp.sigma_w) + "," +
           (row.status == "ok" ? detail::fmt_double(row.criterion) : "") +
           "," + detail::fmt_double(row.wall_time_sec) + "," +
           detail::csv_sanitize(row.status) + "\n";
  }
  const std::string stem = detail::out_stem(cfg.out_path);
  detail::atomic_write(stem + ".csv", csv);

  json summary{{"schema", kSelectSummarySchema},
               {"command", "select"},
               {"method", sel.method},
               {"t", t},
               {"best", detail::hyper_json(sel.best)},
               {"best_criterion", sel.best_criterion},
               {"grid_points", sel.table.size()},
               {"failed_points", failed},
               {"config", detail::config_json(cfg)}};
  if (!cfg.test_path.empty()) {
    const RawDataset test =
        normalize(parse_libsvm(detail::read_file(cfg.test_path)));
    summary["test_error"] =
        evaluate_test_error(sel.best, semi, test, loss, V);
  }
  detail::atomic_write(stem + ".json", summary.dump(2) + "\n");
  return summary;
}

/// `bench`: the accuracy-agreement and timing comparison. For every dataset
/// and every t, runs R repetitions of split / mask / select-by-exact /
/// select-by-bif / test-both, then reports mean and std test errors, mean
/// selection times, the speedup ratio, and the paired t-test verdict.
/// Per-dataset failures are isolated and annotated.
inline json cmd_bench(const RunConfig& cfg) {
  if (cfg.data_paths.empty())
    throw argument_error("bench expects at least one --data file");
  if (cfg.out_path.empty()) throw argument_error("bench requires --out");
  if (cfg.reps < 1) throw argument_error("bench needs --reps >= 1");
  const Grid grid = detail::grid_for(cfg);
  const LossKind loss = detail::loss_for(cfg);
  const ValidationKind V = detail::validation_for(cfg);
  Hyperparams base;
  base.h = cfg.h;
  base.c = cfg.c;

  std::string csv = std::string("# ") + kBenchTableSchema + "\n";
  csv += "dataset,t,rep,method,test_error,select_time_sec,sigma,gamma_a,"
         "gamma_i,k,sigma_w\n";
  json combos = json::array();
  bool any_error = false;

  for (const std::string& path : cfg.data_paths) {
    const std::string name =
        std::filesystem::path(path).filename().string();
    RawDataset full;
    try {
      full = normalize(parse_libsvm(detail::read_file(path)));
    } catch (const error& e) {
      combos.push_back(json{{"dataset", name}, {"error", e.what()}});
      any_error = true;
      continue;
    }
    for (int t : cfg.t_list) {
      std::vector<double> err_exact, err_bif, time_exact, time_bif;
      json combo{{"dataset", name}, {"t", t}, {"reps", cfg.reps}};
      try {
        for (int rep = 0; rep < cfg.reps; ++rep) {
          const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
          auto [train_raw, test_raw] =
              split_train_test(full, cfg.train_fraction, rep_seed);
          const SemiDataset semi =
              mask_labels(train_raw, cfg.labeled_fraction, rep_seed);
          SolverSpec solver = detail::solver_for(cfg);
          solver.seed = rep_seed;

          auto run = [&](CriterionKind kind) {
            const Stopwatch timer;
            const SelectionResult sel = grid_search(semi, grid, kind, solver,
                                                    loss, V, t, rep_seed, base);
            const double secs = timer.seconds();
            const double err =
                evaluate_test_error(sel.best, semi, test_raw, loss, V);
            return std::tuple<double, double, Hyperparams>(err, secs,
                                                           sel.best);
          };
          auto [ee, te, he] = run(CriterionKind::exact);
          auto [eb, tb, hb] = run(CriterionKind::bif);
          err_exact.push_back(ee);
          time_exact.push_back(te);
          err_bif.push_back(eb);
          time_bif.push_back(tb);
          auto emit = [&](const char* method, double err, double secs,
                          const Hyperparams& hp) {
            csv += name + "," + std::to_string(t) + "," + std::to_string(rep) +
                   "," + method + "," + detail::fmt_double(err) + "," +
                   detail::fmt_double(secs) + "," +
                   detail::fmt_double(hp.sigma) + "," +
                   detail::fmt_double(hp.gamma_a) + "," +
                   detail::fmt_double(hp.gamma_i) + "," +
                   std::to_string(hp.k) + "," +
                   detail::fmt_double(hp.sigma_w) + "\n";
          };
          emit("exact", ee, te, he);
          emit("bif", eb, tb, hb);
        }
      } catch (const error& e) {
        combo["error"] = e.what();
        any_error = true;
        combos.push_back(combo);
        continue;
      }

      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      auto sample_std = [&](const std::vector<double>& v) {
        if (v.size() < 2) return 0.0;
        const double m = mean(v);
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
      };

      combo["exact"] = json{{"mean_test_error", mean(err_exact)},
                            {"std_test_error", sample_std(err_exact)},
                            {"mean_select_time_sec", mean(time_exact)}};
      combo["bif"] = json{{"mean_test_error", mean(err_bif)},
                          {"std_test_error", sample_std(err_bif)},
                          {"mean_select_time_sec", mean(time_bif)}};
      combo["speedup"] = mean(time_exact) / mean(time_bif);
      if (cfg.reps >= 2) {
        const double crit = detail::t_critical(cfg.reps - 1);
        // errors compared at 1e-4 relative resolution: roundoff-level
        // differences between solve paths are ties, not discrepancies
        const TTestResult tt = paired_ttest(err_exact, err_bif, crit, 1e-4);
        combo["ttest"] = json{{"t_statistic", tt.t_statistic},
                              {"significant", tt.significant},
                              {"degenerate", tt.degenerate},
                              {"threshold", crit}};
      }
      combos.push_back(combo);
    }
  }

  const std::string stem = detail::out_stem(cfg.out_path);
  detail::atomic_write(stem + ".csv", csv);
  json summary{{"schema", kBenchSummarySchema},
               {"command", "bench"},
               {"combos", combos},
               {"has_errors", any_error},
               {"config", detail::config_json(cfg)}};
  detail::atomic_write(stem + ".json", summary.dump(2) + "\n");
  return summary;
}

/// Dispatch by cfg.command; throws argument_error for unknown commands.
inline json run_command(const RunConfig& cfg) {
  if (cfg.command == "gen") return cmd_gen(cfg);
  if (cfg.command == "cv") return cmd_cv(cfg);
  if (cfg.command == "select") return cmd_select(cfg);
  if (cfg.command == "bench") return cmd_bench(cfg);
  throw argument_error("unknown command '" + cfg.command + "'");
}

}  // namespace mancv
