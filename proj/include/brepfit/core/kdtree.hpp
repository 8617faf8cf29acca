// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "brepfit/core/types.hpp"

namespace brepfit::detail {

/// Exact nearest-neighbor kd-tree over a point array. Internal helper: not
/// part of the public module surface. Ties are broken by point index so
/// queries are deterministic.
class KdTree {
public:
    KdTree() = default;

    explicit KdTree(const std::vector<Vec3>& points) : points_(&points) {
        order_.resize(points.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (!order_.empty()) build(0, order_.size(), 0);
    }

    std::size_t size() const { return order_.size(); }

    struct Hit {
        double dist2;
        int index;
        bool operator<(const Hit& o) const {
            return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
        }
    };

    /// k nearest points to `query`, sorted by (distance, index).
    /// `skip` excludes one index (use -1 for none).
    std::vector<Hit> knn(const Vec3& query, std::size_t k, int skip = -1) const {
        std::vector<Hit> heap; // max-heap on (dist2, index)
        heap.reserve(k + 1);
        if (k > 0 && !order_.empty()) knn_rec(0, order_.size(), 0, query, k, skip, heap);
        std::sort_heap(heap.begin(), heap.end());
        return heap;
    }

    /// Index of the single nearest point, or -1 on an empty tree.
    int nearest(const Vec3& query, double* dist2_out = nullptr) const {
        auto hits = knn(query, 1);
        if (hits.empty()) return -1;
        if (dist2_out) *dist2_out = hits[0].dist2;
        return hits[0].index;
    }

    /// All indices with distance <= radius, sorted ascending.
    std::vector<int> radius(const Vec3& query, double r) const {
        std::vector<int> out;
        if (!order_.empty()) radius_rec(0, order_.size(), 0, query, r * r, out);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// True when some point lies within distance <= r of query.
    bool any_within(const Vec3& query, double r) const {
        double d2 = std::numeric_limits<double>::infinity();
        if (nearest(query, &d2) < 0) return false;
        return d2 <= r * r;
    }

private:
    const std::vector<Vec3>* points_ = nullptr;
    std::vector<int> order_; // median-ordered index array

    const Vec3& pt(std::size_t slot) const { return (*points_)[order_[slot]]; }

    void build(std::size_t lo, std::size_t hi, int depth) {
        if (hi - lo <= 1) return;
        const std::size_t mid = (lo + hi) / 2;
        const int axis = depth % 3;
        std::nth_element(order_.begin() + lo, order_.begin() + mid,
                         order_.begin() + hi, [&](int a, int b) {
                             const double va = (*points_)[a][axis];
                             const double vb = (*points_)[b][axis];
                             return va < vb || (va == vb && a < b);
                         });
        build(lo, mid, depth + 1);
        build(mid + 1, hi, depth + 1);
    }

    void knn_rec(std::size_t lo, std::size_t hi, int depth, const Vec3& q,
                 std::size_t k, int skip, std::vector<Hit>& heap) const {
        if (lo >= hi) return;
        const std::size_t mid = (lo + hi) / 2;
        const int axis = depth % 3;
        const int idx = order_[mid];
        if (idx != skip) {
            const double d2 = ((*points_)[idx] - q).squaredNorm();
            const Hit h{d2, idx};
            if (heap.size() < k) {
                heap.push_back(h);
                std::push_heap(heap.begin(), heap.end());
            } else if (h < heap.front()) {
                std::pop_heap(heap.begin(), heap.end());
                heap.back() = h;
                std::push_heap(heap.begin(), heap.end());
            }
        }
        const double delta = q[axis] - pt(mid)[axis];
        const auto near_first = delta < 0.0;
        const auto descend = [&](bool left) {
            if (left)
                knn_rec(lo, mid, depth + 1, q, k, skip, heap);
            else
                knn_rec(mid + 1, hi, depth + 1, q, k, skip, heap);
        };
        descend(near_first);
        if (heap.size() < k || delta * delta <= heap.front().dist2)
            descend(!near_first);
    }

    void radius_rec(std::size_t lo, std::size_t hi, int depth, const Vec3& q,
                    double r2, std::vector<int>& out) const {
        if (lo >= hi) return;
        const std::size_t mid = (lo + hi) / 2;
        const int axis = depth % 3;
        const int idx = order_[mid];
        if (((*points_)[idx] - q).squaredNorm() <= r2) out.push_back(idx);
        const double delta = q[axis] - pt(mid)[axis];
        if (delta < 0.0) {
            radius_rec(lo, mid, depth + 1, q, r2, out);
            if (delta * delta <= r2) radius_rec(mid + 1, hi, depth + 1, q, r2, out);
        } else {
            radius_rec(mid + 1, hi, depth + 1, q, r2, out);
            if (delta * delta <= r2) radius_rec(lo, mid, depth + 1, q, r2, out);
        }
    }
};

} // namespace brepfit::detail
