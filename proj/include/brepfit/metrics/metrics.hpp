// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Patch-level segmentation metrics and point-set distances. The nearest-
// neighbor queries run through the exact kd-tree, so results equal a
// quadratic brute-force evaluation bit for bit.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "brepfit/core/kdtree.hpp"
#include "brepfit/core/types.hpp"

namespace brepfit {

struct MetricConfig {
    double tau = 0.08;        // patch match threshold, unit length
    int surface_density = 4096; // sample points per face
    int curve_density = 512;    // sample points per edge
};

inline void validate(const MetricConfig& cfg) {
    if (!(cfg.tau > 0.0)) throw ConfigError("metrics: tau must be positive");
    if (cfg.surface_density < 1 || cfg.curve_density < 1)
        throw ConfigError("metrics: sample densities must be at least 1");
}

/// Patches as bare point sets; the unit both segmentation metrics match on.
using PatchSet = std::vector<std::vector<Vec3>>;

inline void validate(const PatchSet& set) {
    for (const auto& patch : set)
        if (patch.empty()) throw Error("metrics: empty patch in set");
}

/// Splits a labeled cloud into per-patch point sets (unlabeled points are
/// dropped). Patch ids need not be compacted.
inline PatchSet patches_from_cloud(const LabeledPointCloud& cloud) {
    PatchSet set;
    if (!cloud.has_patch_ids()) return set;
    LabeledPointCloud compact = cloud;
    compact_patch_ids(compact);
    set.resize(static_cast<std::size_t>(compact.patch_count()));
    for (std::size_t i = 0; i < compact.size(); ++i)
        if (compact.patch_id[i] >= 0)
            set[compact.patch_id[i]].push_back(compact.points[i]);
    return set;
}

/// Directed mean of nearest-neighbor distances: the average over points of
/// `from` of the distance to the closest point of `to`. Not symmetric.
inline double mean_min_distance(const std::vector<Vec3>& from,
                                const std::vector<Vec3>& to) {
    if (from.empty() || to.empty())
        throw Error("mean_min_distance: empty point set");
    const detail::KdTree tree(to);
    double acc = 0.0;
    for (const Vec3& p : from) {
        double d2 = 0.0;
        tree.nearest(p, &d2);
        acc += std::sqrt(d2);
    }
    return acc / static_cast<double>(from.size());
}

namespace detail {

/// Directed mean distance against a prebuilt tree.
inline double mean_min_distance(const std::vector<Vec3>& from, const KdTree& to) {
    double acc = 0.0;
    for (const Vec3& p : from) {
        double d2 = 0.0;
        to.nearest(p, &d2);
        acc += std::sqrt(d2);
    }
    return acc / static_cast<double>(from.size());
}

} // namespace detail

/// Fraction of predicted patches whose directed distance to the nearest
/// ground-truth patch stays within tau. The direction is from the predicted
/// patch, matching its definition.
inline double patch_precision(const PatchSet& pred, const PatchSet& gt,
                              const MetricConfig& cfg) {
    validate(cfg);
    validate(pred);
    validate(gt);
    if (pred.empty()) throw Error("patch_precision: no predicted patches");
    if (gt.empty()) throw Error("patch_precision: no ground-truth patches");
    std::vector<detail::KdTree> gt_trees;
    gt_trees.reserve(gt.size());
    for (const auto& g : gt) gt_trees.emplace_back(g);
    int matched = 0;
    for (const auto& s : pred) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& tree : gt_trees)
            best = std::min(best, detail::mean_min_distance(s, tree));
        if (best <= cfg.tau) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(pred.size());
}

/// Fraction of ground-truth patches whose directed distance to the nearest
/// predicted patch stays within tau. Note the direction: the mean runs over
/// the ground-truth patch's points, not the prediction's.
inline double patch_recall(const PatchSet& pred, const PatchSet& gt,
                           const MetricConfig& cfg) {
    validate(cfg);
    validate(pred);
    validate(gt);
    if (gt.empty()) throw Error("patch_recall: no ground-truth patches");
    if (pred.empty()) throw Error("patch_recall: no predicted patches");
    std::vector<detail::KdTree> pred_trees;
    pred_trees.reserve(pred.size());
    for (const auto& s : pred) pred_trees.emplace_back(s);
    int matched = 0;
    for (const auto& g : gt) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& tree : pred_trees)
            best = std::min(best, detail::mean_min_distance(g, tree));
        if (best <= cfg.tau) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(gt.size());
}

/// Harmonic mean with f1(0,0) = 0 so a total miss never divides by zero.
inline double f1(double precision, double recall) {
    if (precision < 0.0 || precision > 1.0 || recall < 0.0 || recall > 1.0)
        throw Error("f1: arguments outside [0,1]");
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

/// Symmetric Chamfer distance: the half-and-half mean of the two directed
/// mean distances.
inline double chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    return 0.5 * mean_min_distance(a, b) + 0.5 * mean_min_distance(b, a);
}

/// Symmetric Hausdorff distance: worst nearest-neighbor distance over both
/// directions.
inline double hausdorff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw Error("hausdorff: empty point set");
    const auto directed = [](const std::vector<Vec3>& from,
                             const std::vector<Vec3>& to) {
        const detail::KdTree tree(to);
        double worst = 0.0;
        for (const Vec3& p : from) {
            double d2 = 0.0;
            tree.nearest(p, &d2);
            worst = std::max(worst, d2);
        }
        return std::sqrt(worst);
    };
    return std::max(directed(a, b), directed(b, a));
}

} // namespace brepfit
