#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mancv/errors.hpp"
#include "mancv/util.hpp"

namespace mancv {

enum class Task { classification, regression };

/// Dense feature matrix plus targets, as read from a LIBSVM file.
struct RawDataset {
  Matrix features;  // rows = examples, cols = attributes
  Vector targets;   // +/-1 for classification, real for regression
  Task task = Task::regression;

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }
};

/// Semi-supervised training set: the first l rows of points are labeled.
struct SemiDataset {
  Matrix points;  // (l+u) x d, labeled rows first
  Vector labels;  // length l
  Index l = 0;
  Index u = 0;

  Index total() const { return l + u; }
};

namespace detail {

inline double parse_number(std::string_view token, std::size_t line_no,
                           const char* what) {
  std::string_view body = token;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);  // "+1"
  double value = 0.0;
  const char* begin = body.data();
  const char* end = begin + body.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (body.empty() || ec != std::errc{} || ptr != end)
    throw parse_error(std::string("bad ") + what + " '" + std::string(token) +
                          "'",
                      line_no);
  return value;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
      ++i;
    std::size_t j = i;
    while (j < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[j])))
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

/// Parses LIBSVM text: one `<target> <index>:<value> ...` record per nonempty
/// line, 1-based strictly increasing indices. Column count is the maximum
/// index seen anywhere; missing entries are zero.
inline RawDataset parse_libsvm(const std::string& text) {
  struct Entry {
    Index col;
    double value;
  };
  std::vector<double> targets;
  std::vector<std::vector<Entry>> rows;
  Index max_col = 0;

  std::istringstream stream(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(stream, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    targets.push_back(detail::parse_number(tokens[0], line_no, "target"));
    std::vector<Entry> row;
    Index prev = 0;
    for (std::size_t k = 1; k < tokens.size(); ++k) {
      const std::string_view tok = tokens[k];
      const std::size_t colon = tok.find(':');
      if (colon == std::string_view::npos || colon == 0 ||
          colon + 1 == tok.size())
        throw parse_error("bad index:value pair '" + std::string(tok) + "'",
                          line_no);
      const double idx_val =
          detail::parse_number(tok.substr(0, colon), line_no, "feature index");
      const Index idx = static_cast<Index>(idx_val);
      if (idx_val != static_cast<double>(idx) || idx < 1)
        throw parse_error("feature index must be a positive integer, got '" +
                              std::string(tok.substr(0, colon)) + "'",
                          line_no);
      if (idx <= prev)
        throw parse_error("feature indices must be strictly increasing",
                          line_no);
      prev = idx;
      max_col = std::max(max_col, idx);
      row.push_back(
          {idx - 1, detail::parse_number(tok.substr(colon + 1), line_no,
                                         "feature value")});
    }
    rows.push_back(std::move(row));
  }

  RawDataset d;
  d.features = Matrix::Zero(static_cast<Index>(rows.size()), max_col);
  d.targets = Vector::Zero(static_cast<Index>(rows.size()));
  for (Index r = 0; r < d.rows(); ++r) {
    d.targets[r] = targets[static_cast<std::size_t>(r)];
    for (const auto& e : rows[static_cast<std::size_t>(r)])
      d.features(r, e.col) = e.value;
  }
  const bool all_pm1 = d.rows() > 0 && (d.targets.array() == 1.0 ||
                                        d.targets.array() == -1.0).all();
  d.task = all_pm1 ? Task::classification : Task::regression;
  return d;
}

/// Writes LIBSVM text (nonzero entries only, 17 significant digits).
inline std::string write_libsvm(const RawDataset& d) {
  std::string out;
  char buf[64];
  for (Index r = 0; r < d.rows(); ++r) {
    int n = std::snprintf(buf, sizeof buf, "%.17g", d.targets[r]);
    out.append(buf, static_cast<std::size_t>(n));
    for (Index c = 0; c < d.cols(); ++c) {
      if (d.features(r, c) == 0.0) continue;
      n = std::snprintf(buf, sizeof buf, " %lld:%.17g",
                        static_cast<long long>(c + 1), d.features(r, c));
      out.append(buf, static_cast<std::size_t>(n));
    }
    out.push_back('\n');
  }
  return out;
}

/// Rescales every attribute to zero mean and unit (population) standard
/// deviation. Columns that are constant up to roundoff become all-zeros so
/// that degenerate attributes cannot poison kernel distances downstream.
inline RawDataset normalize(const RawDataset& d) {
  if (d.rows() < 1) throw argument_error("normalize: dataset has no rows");
  RawDataset out = d;
  const double n = static_cast<double>(d.rows());
  for (Index c = 0; c < d.cols(); ++c) {
    const double mean = d.features.col(c).mean();
    const double var =
        (d.features.col(c).array() - mean).square().sum() / n;
    const double sd = std::sqrt(var);
    if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) {
      out.features.col(c).setZero();
    } else {
      out.features.col(c) = (d.features.col(c).array() - mean) / sd;
    }
  }
  return out;
}

/// Deterministic random train/test split; both sides keep the original row
/// order. Rejects splits where either side would be empty.
inline std::pair<RawDataset, RawDataset> split_train_test(
    const RawDataset& d, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw argument_error("split_train_test: fraction must be in (0, 1)");
  const Index n = d.rows();
  const Index n_train =
      static_cast<Index>(std::floor(train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train == n)
    throw argument_error("split_train_test: split would leave a side empty");

  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  IndexList train_idx(order.begin(), order.begin() + n_train);
  IndexList test_idx(order.begin() + n_train, order.end());
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());

  auto take = [&](const IndexList& idx) {
    RawDataset part;
    part.task = d.task;
    part.features = Matrix(static_cast<Index>(idx.size()), d.cols());
    part.targets = Vector(static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      part.features.row(static_cast<Index>(i)) = d.features.row(idx[i]);
      part.targets[static_cast<Index>(i)] = d.targets[idx[i]];
    }
    return part;
  };
  return {take(train_idx), take(test_idx)};
}

/// Samples floor(fraction * N) rows (at least one) as the labeled set and
/// hides the remaining targets. Labeled rows come first in the result.
inline SemiDataset mask_labels(const RawDataset& train,
                               double labeled_fraction, std::uint64_t seed) {
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0))
    throw argument_error("mask_labels: fraction must be in (0, 1]");
  const Index n = train.rows();
  if (n < 1) throw argument_error("mask_labels: empty training set");
  Index l = static_cast<Index>(
      std::floor(labeled_fraction * static_cast<double>(n)));
  if (l < 1) l = 1;

  IndexList order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  IndexList labeled(order.begin(), order.begin() + l);
  IndexList unlabeled(order.begin() + l, order.end());
  std::sort(labeled.begin(), labeled.end());
  std::sort(unlabeled.begin(), unlabeled.end());

  SemiDataset out;
  out.l = l;
  out.u = n - l;
  out.points = Matrix(n, train.cols());
  out.labels = Vector(l);
  for (Index i = 0; i < l; ++i) {
    out.points.row(i) = train.features.row(labeled[static_cast<std::size_t>(i)]);
    out.labels[i] = train.targets[labeled[static_cast<std::size_t>(i)]];
  }
  for (Index i = 0; i < out.u; ++i)
    out.points.row(l + i) =
        train.features.row(unlabeled[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace mancv
