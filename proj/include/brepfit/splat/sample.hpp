// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Conversion from an optimized Gaussian scene back to a labeled point
// cloud: ellipse-axis sampling per Gaussian plus patch labels from
// feature-space agglomerative merging.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "brepfit/core/types.hpp"
#include "brepfit/splat/types.hpp"

namespace brepfit {
namespace detail {

/// Cosine distance that never throws: degenerate features (empty, zero, or
/// mismatched length) are treated as maximally distant so they never merge.
inline double merge_distance(const Eigen::VectorXd& a,
                             const Eigen::VectorXd& b) {
    if (a.size() == 0 || a.size() != b.size()) return 2.0;
    const double na = a.norm();
    const double nb = b.norm();
    if (na < 1e-12 || nb < 1e-12) return 2.0;
    return 1.0 - a.dot(b) / (na * nb);
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    }
    void merge(int a, int b) {
        const int ra = find(a);
        const int rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
};

/// Patch label per Gaussian: single-linkage merging of feature embeddings
/// with cosine distance below `threshold`, labels compacted in order of
/// first appearance.
inline std::vector<int> merge_patch_labels(
    const std::vector<Gaussian2D>& gaussians, double threshold = 0.5) {
    const std::size_t n = gaussians.size();
    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (merge_distance(gaussians[i].feature, gaussians[j].feature) <
                threshold)
                uf.merge(static_cast<int>(i), static_cast<int>(j));
    std::vector<int> labels(n, -1);
    int next = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const int root = uf.find(static_cast<int>(i));
        if (labels[root] < 0) labels[root] = next++;
        labels[i] = labels[root];
    }
    return labels;
}

} // namespace detail

/// Sample a Gaussian scene into a labeled point cloud. Every Gaussian
/// emits its center; Gaussians whose axis elongation max(s)/min(s) is at
/// most `rho` also emit the four ellipse-axis points p +- s_u t_u and
/// p +- s_v t_v. Each point carries the splat-plane normal, the Gaussian's
/// edge value as its edge flag, and a patch id from feature-space merging
/// (cosine distance below 0.5 joins two Gaussians into one patch).
inline LabeledPointCloud sample_gaussians_to_points(
    const std::vector<Gaussian2D>& gaussians, double rho = 4.0) {
    const std::vector<int> labels = detail::merge_patch_labels(gaussians);
    LabeledPointCloud cloud;
    for (std::size_t gi = 0; gi < gaussians.size(); ++gi) {
        const Gaussian2D& g = gaussians[gi];
        Vec3 normal = g.t_u.cross(g.t_v);
        const double len = normal.norm();
        normal = len < 1e-12 ? Vec3::UnitZ() : Vec3(normal / len);

        std::vector<Vec3> emitted;
        emitted.push_back(g.center);
        const double s_max = std::max(g.scale.x(), g.scale.y());
        const double s_min = std::min(g.scale.x(), g.scale.y());
        if (s_max <= rho * s_min) {
            emitted.push_back(g.center + g.scale.x() * g.t_u);
            emitted.push_back(g.center - g.scale.x() * g.t_u);
            emitted.push_back(g.center + g.scale.y() * g.t_v);
            emitted.push_back(g.center - g.scale.y() * g.t_v);
        }
        for (const Vec3& p : emitted) {
            cloud.points.push_back(p);
            cloud.normals.push_back(normal);
            cloud.patch_id.push_back(labels[gi]);
            cloud.edge_flag.push_back(g.edge);
        }
    }
    return cloud;
}

} // namespace brepfit
