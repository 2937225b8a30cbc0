#pragma once

// Shared fixtures and independent oracles for the test suites. Everything in
// here deliberately avoids the library code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "mancv/dataset.hpp"
#include "mancv/synth.hpp"
#include "mancv/util.hpp"

namespace testutil {

using mancv::Index;
using mancv::Matrix;
using mancv::Vector;

inline Matrix random_points(Index n, Index dim, std::uint64_t seed,
                            double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Matrix m(n, dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < dim; ++j) m(i, j) = gauss(rng);
  return m;
}

inline Vector random_vector(Index n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, scale);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

inline Vector random_pm1(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = coin(rng) ? 1.0 : -1.0;
  return v;
}

/// Semi-supervised 2-moons instance with the first l points labeled.
inline mancv::SemiDataset moons_semi(Index l, Index u, double noise,
                                     std::uint64_t seed) {
  return mancv::make_semi(mancv::two_moons(l + u, noise, seed), l);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Brute-force union-rule kNN affinity, written independently of the graph
/// module (plain loops, lower-index tie rule).
inline Matrix brute_knn_affinity(const Matrix& pts, int k, double sigma_w) {
  const Index p = pts.rows();
  Matrix W = Matrix::Zero(p, p);
  for (Index j = 0; j < p; ++j) {
    std::vector<std::pair<double, Index>> cand;
    for (Index i = 0; i < p; ++i)
      if (i != j)
        cand.emplace_back((pts.row(i) - pts.row(j)).squaredNorm(), i);
    std::sort(cand.begin(), cand.end());
    for (int r = 0; r < k; ++r) {
      const Index i = cand[static_cast<std::size_t>(r)].second;
      const double w =
          std::exp(-cand[static_cast<std::size_t>(r)].first / (2.0 * sigma_w));
      W(i, j) = w;
      W(j, i) = w;
    }
  }
  return W;
}

/// Spearman rank correlation (average ranks on ties).
inline double spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j));
      for (std::size_t s = i; s <= j; ++s) r[order[s]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  return num / std::sqrt(da * db);
}

/// Derivative-free minimizer: cyclic coordinate descent with golden-section
/// line searches. Slow but independent of any gradient code; adequate for
/// small smooth convex problems.
inline Vector coordinate_descent(
    const std::function<double(const Vector&)>& f, Vector x,
    int sweeps = 3000, double initial_span = 2.0) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  auto golden = [&](Index i, double span) {
    double lo = x[i] - span, hi = x[i] + span;
    auto eval = [&](double v) {
      Vector y = x;
      y[i] = v;
      return f(y);
    };
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double fc = eval(c), fd = eval(d);
    for (int it = 0; it < 90; ++it) {
      if (fc < fd) {
        hi = d;
        d = c;
        fd = fc;
        c = hi - phi * (hi - lo);
        fc = eval(c);
      } else {
        lo = c;
        c = d;
        fc = fd;
        d = lo + phi * (hi - lo);
        fd = eval(d);
      }
    }
    const double moved = std::abs(0.5 * (lo + hi) - x[i]);
    x[i] = 0.5 * (lo + hi);
    return moved;
  };
  double span = initial_span;
  double prev = f(x);
  int stalled = 0;
  for (int s = 0; s < sweeps; ++s) {
    double max_move = 0.0;
    for (Index i = 0; i < x.size(); ++i)
      max_move = std::max(max_move, golden(i, span));
    span = std::max(4.0 * max_move, 1e-8);  // track the active step scale
    const double cur = f(x);
    stalled = prev - cur < 1e-15 ? stalled + 1 : 0;
    if (stalled >= 3) break;
    prev = cur;
  }
  return x;
}

}  // namespace testutil
