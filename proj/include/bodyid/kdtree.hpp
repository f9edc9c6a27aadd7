#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"

namespace bodyid {

// Static 2D kd-tree for exact nearest-neighbor queries. Ties on squared
// distance resolve to the lowest point index, matching a linear scan, so the
// tree can stand in for brute force bit for bit. Squared distances are
// always computed as dx*dx + dy*dy in double, the same expression the scan
// uses.
class KdTree2D {
public:
  explicit KdTree2D(const Points2& pts) : pts_(pts) {
    const int n = static_cast<int>(pts.rows());
    if (n < 1) throw DataError("KdTree2D: empty point set");
    order_.resize(n);
    for (int i = 0; i < n; ++i) order_[i] = i;
    nodes_.reserve(n);
    root_ = build(0, n, 0);
  }

  struct Hit {
    int index = -1;
    double dist2 = std::numeric_limits<double>::infinity();
  };

  Hit nearest(const Vec2& q) const {
    Hit best;
    search(root_, q, best);
    return best;
  }

private:
  struct Node {
    int point = -1;      // index into pts_
    int left = -1;
    int right = -1;
    int axis = 0;
  };

  int build(int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 2;
    const int mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](int a, int b) {
                       if (pts_(a, axis) != pts_(b, axis)) return pts_(a, axis) < pts_(b, axis);
                       return a < b;
                     });
    Node node;
    node.point = order_[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(lo, mid, depth + 1);
    nodes_[self].right = build(mid + 1, hi, depth + 1);
    return self;
  }

  void consider(int point, const Vec2& q, Hit& best) const {
    const double dx = q.x() - pts_(point, 0);
    const double dy = q.y() - pts_(point, 1);
    const double d2 = dx * dx + dy * dy;
    if (d2 < best.dist2 || (d2 == best.dist2 && point < best.index)) {
      best.dist2 = d2;
      best.index = point;
    }
  }

  void search(int node_id, const Vec2& q, Hit& best) const {
    if (node_id < 0) return;
    const Node& node = nodes_[node_id];
    consider(node.point, q, best);
    const double delta = q(node.axis) - pts_(node.point, node.axis);
    const int near = delta < 0 ? node.left : node.right;
    const int far = delta < 0 ? node.right : node.left;
    search(near, q, best);
    // equal plane distance may still hide an equal-distance lower index
    if (delta * delta <= best.dist2) search(far, q, best);
  }

  const Points2& pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace bodyid
