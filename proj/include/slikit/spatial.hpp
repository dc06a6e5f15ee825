#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "slikit/geometry.hpp"

namespace slikit {

// Exact nearest-neighbor KD-tree over 3D points.
class KdTree3 {
 public:
  explicit KdTree3(const std::vector<Vec3>& points) : points_(points) {
    if (points_.empty()) throw std::invalid_argument("KdTree3 needs at least one point");
    order_.resize(points_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    nodes_.reserve(points_.size() * 2);
    root_ = build(0, static_cast<int>(points_.size()));
  }

  struct Result {
    int index = -1;
    double sq_dist = std::numeric_limits<double>::infinity();
  };

  Result nearest(const Vec3& query) const {
    Result best;
    search(root_, query, best);
    return best;
  }

 private:
  struct Node {
    int point = -1;  // index into points_
    int axis = 0;
    int left = -1, right = -1;
  };

  int build(int first, int count) {
    if (count <= 0) return -1;
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (int i = first; i < first + count; ++i) {
      lo = lo.cwiseMin(points_[order_[i]]);
      hi = hi.cwiseMax(points_[order_[i]]);
    }
    int axis = 0;
    const Vec3 extent = hi - lo;
    if (extent.y() > extent.x()) axis = 1;
    if (extent.z() > extent[axis]) axis = 2;
    const int mid = count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + first + mid,
                     order_.begin() + first + count, [&](int a, int b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    const int index = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    nodes_[index].point = order_[first + mid];
    nodes_[index].axis = axis;
    const int left = build(first, mid);
    const int right = build(first + mid + 1, count - mid - 1);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
  }

  void search(int node, const Vec3& query, Result& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const Vec3& p = points_[n.point];
    const double d2 = (p - query).squaredNorm();
    if (d2 < best.sq_dist) {
      best.sq_dist = d2;
      best.index = n.point;
    }
    const double diff = query[n.axis] - p[n.axis];
    const int near = diff < 0.0 ? n.left : n.right;
    const int far = diff < 0.0 ? n.right : n.left;
    search(near, query, best);
    if (diff * diff < best.sq_dist) search(far, query, best);
  }

  const std::vector<Vec3>& points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace slikit
