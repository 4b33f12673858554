#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <span>
#include <vector>

namespace symentropy {

// Static k-d tree over a row-major point block, for exact k-nearest-neighbor
// distances in low dimension.
class KdTree {
 public:
  KdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size = 16)
      : points_(points), dim_(dim), leaf_size_(leaf_size) {
    const std::size_t n = dim_ == 0 ? 0 : points_.size() / dim_;
    index_.resize(n);
    std::iota(index_.begin(), index_.end(), 0);
    if (n > 0) root_ = build(0, n, 0);
  }

  // Squared Euclidean distance from point `self` to its k-th nearest other
  // point.
  double kth_neighbor_sq(std::size_t self, std::size_t k) const {
    std::priority_queue<double> best;  // max-heap of the k smallest so far
    const double* q = points_.data() + self * dim_;
    search(root_, q, self, k, best);
    return best.top();
  }

 private:
  struct Node {
    std::size_t begin, end;  // range in index_
    int axis = -1;           // -1 for leaves
    double split = 0.0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end, std::size_t depth) {
    Node node{begin, end};
    if (end - begin > leaf_size_) {
      // split on the axis of largest spread
      std::size_t axis = 0;
      double best_spread = -1.0;
      for (std::size_t a = 0; a < dim_; ++a) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t i = begin; i < end; ++i) {
          const double v = coord(index_[i], a);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
          best_spread = hi - lo;
          axis = a;
        }
      }
      const std::size_t mid = begin + (end - begin) / 2;
      std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(begin),
                       index_.begin() + static_cast<std::ptrdiff_t>(mid),
                       index_.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::size_t a, std::size_t b) {
                         return coord(a, axis) < coord(b, axis);
                       });
      node.axis = static_cast<int>(axis);
      node.split = coord(index_[mid], axis);
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(node);
      const int l = build(begin, mid, depth + 1);
      const int r = build(mid, end, depth + 1);
      nodes_[static_cast<std::size_t>(id)].left = l;
      nodes_[static_cast<std::size_t>(id)].right = r;
      return id;
    }
    nodes_.push_back(node);
    return static_cast<int>(nodes_.size() - 1);
  }

  double coord(std::size_t point, std::size_t axis) const {
    return points_[point * dim_ + axis];
  }

  void search(int id, const double* q, std::size_t self, std::size_t k,
              std::priority_queue<double>& best) const {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t p = index_[i];
        if (p == self) continue;
        double d2 = 0.0;
        const double* x = points_.data() + p * dim_;
        for (std::size_t a = 0; a < dim_; ++a) {
          const double d = x[a] - q[a];
          d2 += d * d;
        }
        if (best.size() < k) {
          best.push(d2);
        } else if (d2 < best.top()) {
          best.pop();
          best.push(d2);
        }
      }
      return;
    }
    const double delta = q[node.axis] - node.split;
    const int near = delta < 0.0 ? node.left : node.right;
    const int far = delta < 0.0 ? node.right : node.left;
    search(near, q, self, k, best);
    if (best.size() < k || delta * delta < best.top()) search(far, q, self, k, best);
  }

  std::span<const double> points_;
  std::size_t dim_;
  std::size_t leaf_size_;
  std::vector<std::size_t> index_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace symentropy
