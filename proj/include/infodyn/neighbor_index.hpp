#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

#include "infodyn/error.hpp"

namespace infodyn {

/// Exact k-d tree under the maximum (Chebyshev) norm.
///
/// Built once over a fixed point set and immutable afterwards; all queries
/// are const and may run concurrently. Results are identical to a brute-force
/// scan because every distance is evaluated as max_d |a_d - b_d| with no
/// intermediate transformation.
class NeighborIndex {
 public:
  /// `columns[d][i]` is coordinate d of point i.
  explicit NeighborIndex(const std::vector<std::span<const double>>& columns, std::size_t leaf_size = 12)
      : dim_(columns.size()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    if (columns.empty() || columns.front().empty())
      fail(ErrorKind::InvalidArgument, "neighbor index over an empty point set");
    n_ = columns.front().size();
    for (const auto& c : columns)
      if (c.size() != n_) fail(ErrorKind::InvalidArgument, "coordinate columns differ in length");
    std::vector<std::size_t> perm(n_);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    nodes_.reserve(2 * n_ / leaf_size_ + 2);
    build(perm, 0, n_, columns);
    points_.resize(n_ * dim_);
    slot_of_.resize(n_);
    for (std::size_t s = 0; s < n_; ++s) {
      slot_of_[perm[s]] = s;
      for (std::size_t d = 0; d < dim_; ++d) points_[s * dim_ + d] = columns[d][perm[s]];
    }
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }

  /// Coordinates of point i.
  std::span<const double> point(std::size_t i) const { return {&points_[slot_of_[i] * dim_], dim_}; }

  /// Distance from point i to its k-th nearest other point (self excluded).
  double kth_distance(std::size_t i, std::size_t k) const {
    if (k == 0 || k >= n_) fail(ErrorKind::InvalidArgument, "k must lie in [1, n)");
    std::priority_queue<double> best;  // max-heap of the k smallest so far
    knn_search(0, point(i), slot_of_[i], k, best);
    return best.top();
  }

  /// Number of points at distance strictly less than `radius` from `query`.
  std::size_t range_count(std::span<const double> query, double radius) const {
    if (query.size() != dim_) fail(ErrorKind::InvalidArgument, "query dimension mismatch");
    return count_search(0, query, radius);
  }

  /// As above centred on point i, not counting i itself.
  std::size_t range_count(std::size_t i, double radius) const {
    const std::size_t c = count_search(0, point(i), radius);
    return radius > 0.0 ? c - 1 : c;
  }

 private:
  struct Node {
    std::size_t begin, end;
    std::size_t left = 0, right = 0;  // 0 = leaf (root is never a child)
    std::vector<double> lo, hi;
  };

  std::size_t build(std::vector<std::size_t>& perm, std::size_t begin, std::size_t end,
                    const std::vector<std::span<const double>>& cols) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end, 0, 0, std::vector<double>(dim_), std::vector<double>(dim_)});
    std::size_t split_dim = 0;
    double widest = -1.0;
    for (std::size_t d = 0; d < dim_; ++d) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t s = begin; s < end; ++s) {
        lo = std::min(lo, cols[d][perm[s]]);
        hi = std::max(hi, cols[d][perm[s]]);
      }
      nodes_[id].lo[d] = lo;
      nodes_[id].hi[d] = hi;
      if (hi - lo > widest) {
        widest = hi - lo;
        split_dim = d;
      }
    }
    if (end - begin <= leaf_size_ || widest <= 0.0) return id;
    const std::size_t mid = begin + (end - begin) / 2;
    const auto& c = cols[split_dim];
    std::nth_element(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                     perm.begin() + static_cast<std::ptrdiff_t>(mid),
                     perm.begin() + static_cast<std::ptrdiff_t>(end),
                     [&c](std::size_t a, std::size_t b) { return c[a] < c[b]; });
    const std::size_t l = build(perm, begin, mid, cols);
    const std::size_t r = build(perm, mid, end, cols);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  double distance(std::span<const double> q, std::size_t slot) const {
    const double* p = &points_[slot * dim_];
    double m = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) m = std::max(m, std::abs(q[d] - p[d]));
    return m;
  }

  double min_box_distance(const Node& node, std::span<const double> q) const {
    double m = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) m = std::max({m, node.lo[d] - q[d], q[d] - node.hi[d]});
    return m;
  }

  double max_box_distance(const Node& node, std::span<const double> q) const {
    double m = 0.0;
    for (std::size_t d = 0; d < dim_; ++d) m = std::max({m, q[d] - node.lo[d], node.hi[d] - q[d]});
    return m;
  }

  void knn_search(std::size_t id, std::span<const double> q, std::size_t self_slot, std::size_t k,
                  std::priority_queue<double>& best) const {
    const Node& node = nodes_[id];
    if (best.size() == k && min_box_distance(node, q) >= best.top()) return;
    if (node.left == 0) {
      for (std::size_t s = node.begin; s < node.end; ++s) {
        if (s == self_slot) continue;
        const double dist = distance(q, s);
        if (best.size() < k) {
          best.push(dist);
        } else if (dist < best.top()) {
          best.pop();
          best.push(dist);
        }
      }
      return;
    }
    // Nearer child first.
    const double dl = min_box_distance(nodes_[node.left], q);
    const double dr = min_box_distance(nodes_[node.right], q);
    if (dl <= dr) {
      knn_search(node.left, q, self_slot, k, best);
      knn_search(node.right, q, self_slot, k, best);
    } else {
      knn_search(node.right, q, self_slot, k, best);
      knn_search(node.left, q, self_slot, k, best);
    }
  }

  std::size_t count_search(std::size_t id, std::span<const double> q, double radius) const {
    const Node& node = nodes_[id];
    if (min_box_distance(node, q) >= radius) return 0;
    if (max_box_distance(node, q) < radius) return node.end - node.begin;
    if (node.left == 0) {
      std::size_t c = 0;
      for (std::size_t s = node.begin; s < node.end; ++s) c += distance(q, s) < radius ? 1 : 0;
      return c;
    }
    return count_search(node.left, q, radius) + count_search(node.right, q, radius);
  }

  std::size_t dim_ = 0;
  std::size_t n_ = 0;
  std::size_t leaf_size_ = 12;
  std::vector<Node> nodes_;
  std::vector<double> points_;  // tree order
  std::vector<std::size_t> slot_of_;
};

}  // namespace infodyn
