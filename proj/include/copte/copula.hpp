#pragma once

// Copula entropy: rank-transform each column to its empirical CDF values, then take the
// kNN entropy of the resulting pseudo-observations. CE equals negative mutual
// information (total correlation) of the columns.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "copte/core.hpp"
#include "copte/knn_entropy.hpp"

namespace copte {

// Rank-transformed sample: entry (t, i) = rank of x(t, i) within column i, divided by T.
// Every column is a permutation of {1/T, ..., T/T}.
struct PseudoObservations {
  std::vector<double> values;  // row-major T x d
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::string> source_labels;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  PointCloud points() const { return {values, cols}; }

  friend bool operator==(const PseudoObservations&, const PseudoObservations&) = default;
};

// Ties are broken by row index (earlier row gets the smaller rank), so a constant
// column maps to 1/T, 2/T, ..., 1 in row order.
inline PseudoObservations rank_transform(const SeriesMatrix& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) throw Error(ErrorCode::TooFewSamples, "rank transform needs at least 2 rows");

  PseudoObservations u;
  u.rows = n;
  u.cols = d;
  u.source_labels = x.labels();
  u.values.resize(n * d);

  std::vector<std::size_t> order(n);
  const double denom = static_cast<double>(n);
  for (std::size_t c = 0; c < d; ++c) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x(a, c) < x(b, c); });
    bool constant = true;
    for (std::size_t rank = 0; rank < n; ++rank) {
      u.values[order[rank] * d + c] = static_cast<double>(rank + 1) / denom;
      if (x(order[rank], c) != x(order[0], c)) constant = false;
    }
    if (constant) {
      warn("column '" + x.labels()[c] +
           "' is constant; its pseudo-observations carry no dependence information");
    }
  }
  return u;
}

// A single variable has copula entropy exactly 0.
inline double copula_entropy(const SeriesMatrix& x, const EstimatorParams& params,
                             NeighborSearch search = NeighborSearch::Auto) {
  if (params.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (x.rows() <= static_cast<std::size_t>(params.k) + 1) {
    throw Error(ErrorCode::TooFewSamples, "copula entropy with k=" + std::to_string(params.k) +
                                              " needs more than " +
                                              std::to_string(params.k + 1) + " samples, got " +
                                              std::to_string(x.rows()));
  }
  if (x.cols() == 1) return 0.0;
  const PseudoObservations u = rank_transform(x);
  return kl_entropy(u.points(), params, search);
}

}  // namespace copte
