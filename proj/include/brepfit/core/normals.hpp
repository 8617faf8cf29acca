// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Eigenvalues>

#include "brepfit/core/kdtree.hpp"
#include "brepfit/core/types.hpp"

namespace brepfit {

/// Estimates a unit normal per point as the smallest-eigenvalue eigenvector
/// of the covariance over the point and its k nearest neighbors. The sign is
/// oriented away from the neighborhood centroid (outward heuristic; minimal-
/// sample cylinder fitting only needs the unoriented direction). Degenerate
/// neighborhoods (collinear) yield an arbitrary but deterministic normal.
inline LabeledPointCloud estimate_normals(const LabeledPointCloud& cloud, int k) {
    if (k < 3) throw ConfigError("estimate_normals: k must be at least 3");
    if (cloud.size() < static_cast<std::size_t>(k) + 1)
        throw Error("estimate_normals: cloud smaller than k+1 points");

    const detail::KdTree tree(cloud.points);
    LabeledPointCloud out = cloud;
    out.normals.assign(cloud.size(), Vec3::Zero());

    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto hits = tree.knn(cloud.points[i], static_cast<std::size_t>(k),
                                   static_cast<int>(i));
        Vec3 centroid = cloud.points[i];
        for (const auto& h : hits) centroid += cloud.points[h.index];
        centroid /= static_cast<double>(hits.size() + 1);

        Mat3 cov = Mat3::Zero();
        const auto accumulate = [&](const Vec3& p) {
            const Vec3 d = p - centroid;
            cov += d * d.transpose();
        };
        accumulate(cloud.points[i]);
        for (const auto& h : hits) accumulate(cloud.points[h.index]);

        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        Vec3 n = eig.eigenvectors().col(0); // ascending eigenvalues
        if (n.dot(cloud.points[i] - centroid) < 0.0) n = -n;
        out.normals[i] = n.normalized();
    }
    return out;
}

} // namespace brepfit
