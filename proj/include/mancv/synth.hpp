#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "mancv/dataset.hpp"
#include "mancv/kernels.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Two interleaved half-circles with Gaussian noise; labels +1 / -1.
inline RawDataset two_moons(Index n, double noise, std::uint64_t seed) {
  if (n < 2) throw argument_error("two_moons: need at least 2 points");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, M_PI);
  std::normal_distribution<double> jitter(0.0, noise);

  RawDataset d;
  d.task = Task::classification;
  d.features = Matrix(n, 2);
  d.targets = Vector(n);
  for (Index i = 0; i < n; ++i) {
    const double a = angle(rng);
    if (i % 2 == 0) {
      d.features(i, 0) = std::cos(a) + jitter(rng);
      d.features(i, 1) = std::sin(a) + jitter(rng);
      d.targets[i] = 1.0;
    } else {
      d.features(i, 0) = 1.0 - std::cos(a) + jitter(rng);
      d.features(i, 1) = 0.5 - std::sin(a) + jitter(rng);
      d.targets[i] = -1.0;
    }
  }
  return d;
}

/// Regression targets sampled from a known kernel expansion: points are
/// uniform on [-1, 1]^dim, f = sum_j c_j kappa(z_j, .) over random centers,
/// targets f(x) + observation noise. Useful for recover-the-kernel-width
/// checks because the generating sigma is known.
inline RawDataset rkhs_regression(Index n, int dim, double sigma,
                                  Index centers, double noise,
                                  std::uint64_t seed) {
  if (n < 1) throw argument_error("rkhs_regression: need at least 1 point");
  if (centers < 1 || centers > n)
    throw argument_error("rkhs_regression: need 1 <= centers <= n");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  RawDataset d;
  d.task = Task::regression;
  d.features = Matrix(n, dim);
  for (Index i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) d.features(i, j) = unit(rng);

  Matrix center_points(centers, dim);
  Vector coeff(centers);
  for (Index j = 0; j < centers; ++j) {
    center_points.row(j) = d.features.row(j);  // first rows double as centers
    coeff[j] = gauss(rng);
  }
  d.targets = Vector(n);
  for (Index i = 0; i < n; ++i) {
    double f = 0.0;
    for (Index j = 0; j < centers; ++j)
      f += coeff[j] * gaussian_kernel(d.features.row(i).transpose(),
                                      center_points.row(j).transpose(), sigma);
    d.targets[i] = f + noise * gauss(rng);
  }
  return d;
}

/// Builds a SemiDataset directly (no masking shuffle): the first l rows stay
/// labeled. Intended for tests and synthetic pipelines.
inline SemiDataset make_semi(const RawDataset& d, Index l) {
  if (l < 1 || l > d.rows())
    throw argument_error("make_semi: need 1 <= l <= rows");
  SemiDataset out;
  out.l = l;
  out.u = d.rows() - l;
  out.points = d.features;
  out.labels = d.targets.head(l);
  return out;
}

}  // namespace mancv
