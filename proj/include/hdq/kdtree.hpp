#pragma once

// Exact 3D kd-tree for k-nearest-neighbor queries. Results are required
// to match a brute-force scan, so pruning is conservative and distance
// ties are broken by the lower point index.

#include <algorithm>
#include <numeric>
#include <vector>

#include "hdq/core.hpp"

namespace hdq {

struct Neighbor {
    double dist_sq;
    int index;
};

// Lexicographic on (distance, index); the index breaks ties.
inline bool neighbor_better(const Neighbor& a, const Neighbor& b) {
    if (a.dist_sq != b.dist_sq) return a.dist_sq < b.dist_sq;
    return a.index < b.index;
}

class KdTree {
  public:
    static constexpr int kLeafSize = 16;

    KdTree() = default;

    explicit KdTree(std::vector<Vec3> points) : points_(std::move(points)) {
        if (points_.empty()) throw ConfigError("kd-tree over an empty point set");
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        nodes_.reserve(2 * points_.size() / kLeafSize + 2);
        build(0, int(points_.size()));
    }

    size_t size() const { return points_.size(); }
    const std::vector<Vec3>& points() const { return points_; }

    // Exact k nearest neighbors, ascending by (distance, index).
    void knn(const Vec3& query, int k, std::vector<Neighbor>& out) const {
        k = std::min<int>(k, int(points_.size()));
        out.clear();
        // Max-heap under neighbor_better keeps the current worst on top.
        heap_search(query, k, 0, out);
        std::sort_heap(out.begin(), out.end(), neighbor_better);
    }

    Neighbor nearest(const Vec3& query) const {
        thread_local std::vector<Neighbor> scratch;
        knn(query, 1, scratch);
        return scratch[0];
    }

  private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0;
        int left = -1, right = -1;
        int begin = 0, end = 0; // leaf payload range in order_
    };

    int build(int begin, int end) {
        int node_id = int(nodes_.size());
        nodes_.push_back({});
        if (end - begin <= kLeafSize) {
            nodes_[node_id].begin = begin;
            nodes_[node_id].end = end;
            return node_id;
        }
        Aabb box;
        for (int i = begin; i < end; ++i) box.expand(points_[order_[i]]);
        Vec3 extent = box.hi - box.lo;
        int axis = 0;
        if (extent.y > extent[axis]) axis = 1;
        if (extent.z > extent[axis]) axis = 2;

        int mid = (begin + end) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) { return points_[a][axis] < points_[b][axis]; });
        double split = points_[order_[mid]][axis];

        nodes_[node_id].axis = axis;
        nodes_[node_id].split = split;
        int left = build(begin, mid);
        int right = build(mid, end);
        nodes_[node_id].left = left;
        nodes_[node_id].right = right;
        return node_id;
    }

    void heap_search(const Vec3& query, int k, int node_id, std::vector<Neighbor>& heap) const {
        const Node& node = nodes_[node_id];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int idx = order_[i];
                Neighbor cand{length_squared(points_[idx] - query), idx};
                if (int(heap.size()) < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end(), neighbor_better);
                } else if (neighbor_better(cand, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), neighbor_better);
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end(), neighbor_better);
                }
            }
            return;
        }
        double delta = query[node.axis] - node.split;
        int near = delta < 0 ? node.left : node.right;
        int far = delta < 0 ? node.right : node.left;
        heap_search(query, k, near, heap);
        // The far side can hold equal-distance lower-index points, so only
        // prune on a strict distance excess.
        if (int(heap.size()) < k || delta * delta <= heap.front().dist_sq)
            heap_search(query, k, far, heap);
    }

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace hdq
