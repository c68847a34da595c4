#pragma once

// Kozachenko-Leonenko differential entropy of a point cloud from k-th nearest
// neighbor distances under the maximum (Chebyshev) norm.
//
//   H = psi(N) - psi(k) + (d / N) * sum_i ln eps_i
//
// eps_i is twice the distance from point i to its k-th nearest neighbor. Under the
// maximum norm the unit ball of diameter 1 has volume 1, so no volume term appears.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "copte/core.hpp"
#include "copte/detail/parallel.hpp"

namespace copte {

// Digamma for x > 0: shift x above 6 with psi(x) = psi(x + 1) - 1/x, then
// the asymptotic expansion in 1/x^2.
inline double digamma(double x) {
  if (!(x > 0.0)) throw Error(ErrorCode::InvalidArgument, "digamma needs x > 0");
  double shift = 0.0;
  while (x < 6.0) {
    shift -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Bernoulli terms B_2n / (2n): 1/12, -1/120, 1/252, -1/240, 1/132, -691/32760
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
  return shift + std::log(x) - 0.5 * inv - series;
}

// Non-owning view of N points in d dimensions, row-major.
struct PointCloud {
  std::span<const double> values;
  std::size_t dim = 1;

  std::size_t size() const noexcept { return dim == 0 ? 0 : values.size() / dim; }
  const double* point(std::size_t i) const noexcept { return values.data() + i * dim; }
};

inline PointCloud as_points(const SeriesMatrix& m) { return {m.data(), m.cols()}; }

inline double max_norm_distance(const double* a, const double* b, std::size_t dim) {
  double dist = 0.0;
  for (std::size_t j = 0; j < dim; ++j) dist = std::max(dist, std::abs(a[j] - b[j]));
  return dist;
}

enum class NeighborSearch { BruteForce, Tree, Auto };

// Above this dimension Auto falls back to brute force.
inline constexpr std::size_t kMaxTreeDim = 12;

struct NeighborDistances {
  std::vector<double> eps;  // eps[i] = 2 * (k-th neighbor distance of point i)
};

namespace detail {

// Bounded max-heap of the k smallest distances seen so far.
class KBest {
 public:
  explicit KBest(std::size_t k) : k_(k) { heap_.reserve(k); }

  double bound() const noexcept {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.front();
  }

  void offer(double d) {
    if (heap_.size() < k_) {
      heap_.push_back(d);
      std::push_heap(heap_.begin(), heap_.end());
    } else if (d < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = d;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  double kth() const noexcept { return heap_.front(); }

 private:
  std::size_t k_;
  std::vector<double> heap_;
};

}  // namespace detail

// Static k-d tree over a point cloud. Splits on the dimension of widest spread at the
// median; each node keeps its bounding box so queries prune on the exact max-norm
// distance from the query to the box.
class KdTree {
 public:
  explicit KdTree(PointCloud points, std::size_t leaf_size = 12)
      : points_(points), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    const std::size_t n = points_.size();
    index_.resize(n);
    std::iota(index_.begin(), index_.end(), std::uint32_t{0});
    nodes_.reserve(2 * n / leaf_size_ + 2);
    if (n > 0) build(0, n);
  }

  // k-th smallest distance from points[query] to any other point (by index).
  double kth_distance(std::size_t query, std::size_t k) const {
    detail::KBest best(k);
    const double* q = points_.point(query);
    search(0, q, query, best);
    return best.kth();
  }

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::size_t box = 0;  // offset into boxes_: dim lows then dim highs
  };

  std::int32_t build(std::size_t begin, std::size_t end) {
    const std::size_t dim = points_.dim;
    const std::int32_t id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{static_cast<std::uint32_t>(begin), static_cast<std::uint32_t>(end), -1,
                          -1, boxes_.size()});
    boxes_.resize(boxes_.size() + 2 * dim);
    double* lo = boxes_.data() + nodes_[id].box;
    double* hi = lo + dim;
    std::fill(lo, lo + dim, std::numeric_limits<double>::infinity());
    std::fill(hi, hi + dim, -std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
      const double* p = points_.point(index_[i]);
      for (std::size_t j = 0; j < dim; ++j) {
        lo[j] = std::min(lo[j], p[j]);
        hi[j] = std::max(hi[j], p[j]);
      }
    }
    if (end - begin <= leaf_size_) return id;

    std::size_t split_dim = 0;
    double widest = -1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (hi[j] - lo[j] > widest) {
        widest = hi[j] - lo[j];
        split_dim = j;
      }
    }
    if (widest <= 0.0) return id;  // all points identical

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                     index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_.point(a)[split_dim] < points_.point(b)[split_dim];
                     });
    const std::int32_t left = build(begin, mid);
    const std::int32_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  double box_distance(const Node& node, const double* q) const {
    const std::size_t dim = points_.dim;
    const double* lo = boxes_.data() + node.box;
    const double* hi = lo + dim;
    double dist = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (q[j] < lo[j]) {
        dist = std::max(dist, lo[j] - q[j]);
      } else if (q[j] > hi[j]) {
        dist = std::max(dist, q[j] - hi[j]);
      }
    }
    return dist;
  }

  void search(std::int32_t id, const double* q, std::size_t self, detail::KBest& best) const {
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t p = index_[i];
        if (p == self) continue;
        best.offer(max_norm_distance(q, points_.point(p), points_.dim));
      }
      return;
    }
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    double dl = box_distance(l, q);
    double dr = box_distance(r, q);
    std::int32_t first = node.left;
    std::int32_t second = node.right;
    if (dr < dl) {
      std::swap(dl, dr);
      std::swap(first, second);
    }
    // A box no closer than the current k-th distance cannot lower it.
    if (dl < best.bound()) search(first, q, self, best);
    if (dr < best.bound()) search(second, q, self, best);
  }

  PointCloud points_;
  std::size_t leaf_size_;
  std::vector<std::uint32_t> index_;
  std::vector<Node> nodes_;
  std::vector<double> boxes_;
};

inline NeighborDistances knn_distances(PointCloud points, int k,
                                       NeighborSearch search = NeighborSearch::Auto) {
  const std::size_t n = points.size();
  if (points.dim == 0 || n == 0) throw Error(ErrorCode::EmptyInput, "empty point cloud");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const auto kk = static_cast<std::size_t>(k);
  if (kk >= n) {
    throw Error(ErrorCode::KTooLarge,
                "k=" + std::to_string(k) + " needs more than " + std::to_string(n) + " points");
  }
  if (search == NeighborSearch::Auto) {
    search = points.dim <= kMaxTreeDim ? NeighborSearch::Tree : NeighborSearch::BruteForce;
  }

  NeighborDistances out;
  out.eps.resize(n);
  if (search == NeighborSearch::Tree) {
    const KdTree tree(points);
    detail::parallel_for(n, [&](std::size_t i) { out.eps[i] = 2.0 * tree.kth_distance(i, kk); });
  } else {
    detail::parallel_for(
        n,
        [&](std::size_t i) {
          thread_local std::vector<double> dist;
          dist.clear();
          dist.reserve(n - 1);
          const double* p = points.point(i);
          for (std::size_t j = 0; j < n; ++j) {
            if (j != i) dist.push_back(max_norm_distance(p, points.point(j), points.dim));
          }
          std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk - 1),
                           dist.end());
          out.eps[i] = 2.0 * dist[kk - 1];
        },
        16);
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (!(out.eps[i] > 0.0)) {
      throw Error(ErrorCode::DuplicatePoints,
                  "point " + std::to_string(i) + " has " + std::to_string(k) +
                      " or more exact duplicates (zero k-th neighbor distance)");
    }
  }
  return out;
}

inline double kl_entropy(PointCloud points, const EstimatorParams& params,
                         NeighborSearch search = NeighborSearch::Auto) {
  const NeighborDistances nd = knn_distances(points, params.k, search);
  const std::size_t n = nd.eps.size();
  double log_sum = 0.0;
  for (double e : nd.eps) log_sum += std::log(e);
  return digamma(static_cast<double>(n)) - digamma(static_cast<double>(params.k)) +
         static_cast<double>(points.dim) * log_sum / static_cast<double>(n);
}

inline double kl_entropy(const SeriesMatrix& m, const EstimatorParams& params,
                         NeighborSearch search = NeighborSearch::Auto) {
  return kl_entropy(as_points(m), params, search);
}

}  // namespace copte
