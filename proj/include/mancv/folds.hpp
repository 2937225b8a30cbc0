#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "mancv/dataset.hpp"
#include "mancv/errors.hpp"
#include "mancv/util.hpp"

namespace mancv {

/// Random t-way equipartition of the labeled and unlabeled index sets.
/// Fold sizes differ by at most one when t does not divide l or u. Labeled
/// folds hold indices in [0, l); unlabeled folds hold indices in [l, l+u).
struct FoldPartition {
  int t = 0;
  std::uint64_t seed = 0;
  std::vector<IndexList> labeled_folds;
  std::vector<IndexList> unlabeled_folds;

  /// Fold point indices, labeled first (the mu/K_SSi column ordering).
  IndexList fold_points(int i) const {
    IndexList out = labeled_folds[static_cast<std::size_t>(i)];
    const auto& un = unlabeled_folds[static_cast<std::size_t>(i)];
    out.insert(out.end(), un.begin(), un.end());
    return out;
  }
};

namespace detail {

inline std::vector<IndexList> deal_folds(IndexList ids, int t,
                                         std::mt19937_64& rng) {
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<IndexList> folds(static_cast<std::size_t>(t));
  const Index n = static_cast<Index>(ids.size());
  const Index base = n / t;
  const Index extra = n % t;
  Index pos = 0;
  for (int i = 0; i < t; ++i) {
    const Index size = base + (i < extra ? 1 : 0);
    auto& fold = folds[static_cast<std::size_t>(i)];
    fold.assign(ids.begin() + pos, ids.begin() + pos + size);
    std::sort(fold.begin(), fold.end());
    pos += size;
  }
  return folds;
}

}  // namespace detail

inline FoldPartition partition_folds(const SemiDataset& d, int t,
                                     std::uint64_t seed) {
  if (t < 2 || static_cast<Index>(t) > d.l)
    throw argument_error("partition_folds: need 2 <= t <= l");
  FoldPartition part;
  part.t = t;
  part.seed = seed;
  std::mt19937_64 rng(seed);

  IndexList labeled(static_cast<std::size_t>(d.l));
  std::iota(labeled.begin(), labeled.end(), Index{0});
  part.labeled_folds = detail::deal_folds(std::move(labeled), t, rng);

  IndexList unlabeled(static_cast<std::size_t>(d.u));
  std::iota(unlabeled.begin(), unlabeled.end(), d.l);
  part.unlabeled_folds = detail::deal_folds(std::move(unlabeled), t, rng);
  return part;
}

}  // namespace mancv
