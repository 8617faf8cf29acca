// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Corner candidate generation (plane triples, line segment pairs, curved
// segment endpoints) and single-linkage clustering into final corners.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "brepfit/core/types.hpp"
#include "brepfit/fitting/ransac.hpp"
#include "brepfit/intersect/trim.hpp"

namespace brepfit {

namespace detail {

inline bool lex_less(const Vec3& a, const Vec3& b) {
    if (a.x() != b.x()) return a.x() < b.x();
    if (a.y() != b.y()) return a.y() < b.y();
    return a.z() < b.z();
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
    void unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace detail

/// Corner candidates from all well-conditioned plane triples, all line
/// segment pairs that nearly meet inside their supported ranges, and the
/// endpoints of open curved segments.
inline std::vector<Vec3> corner_candidates(
    std::span<const PrimitiveFit> fits, std::span<const CurveSegment> segments,
    const TrimConfig& cfg) {
    validate(cfg);
    std::vector<Vec3> out;

    std::vector<const PlaneGeom*> planes;
    for (const PrimitiveFit& f : fits)
        if (f.primitive.kind() == PrimitiveKind::Plane)
            planes.push_back(&f.primitive.plane());

    for (std::size_t i = 0; i < planes.size(); ++i) {
        for (std::size_t j = i + 1; j < planes.size(); ++j) {
            for (std::size_t k = j + 1; k < planes.size(); ++k) {
                Mat3 m;
                m.row(0) = planes[i]->normal.transpose();
                m.row(1) = planes[j]->normal.transpose();
                m.row(2) = planes[k]->normal.transpose();
                const Eigen::JacobiSVD<Mat3> svd(
                    m, Eigen::ComputeFullU | Eigen::ComputeFullV);
                const double smin = svd.singularValues()(2);
                const double smax = svd.singularValues()(0);
                if (smin <= 0.0 || smax / smin >= 1e6) continue;
                out.push_back(svd.solve(Vec3(planes[i]->offset,
                                             planes[j]->offset,
                                             planes[k]->offset)));
            }
        }
    }

    std::vector<const CurveSegment*> lines;
    for (const CurveSegment& s : segments)
        if (curve_kind(s.geometry) == CurveKind::Line) lines.push_back(&s);

    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            const auto& la = std::get<LineGeom>(lines[i]->geometry);
            const auto& lb = std::get<LineGeom>(lines[j]->geometry);
            if (la.dir.cross(lb.dir).norm() < 1e-9) continue; // parallel
            // Closest approach: minimize |a(t1) - b(t2)| over (t1, t2).
            const Vec3 w = la.point - lb.point;
            Eigen::Matrix2d m;
            m << la.dir.dot(la.dir), -la.dir.dot(lb.dir),
                -la.dir.dot(lb.dir), lb.dir.dot(lb.dir);
            const Eigen::Vector2d rhs(-la.dir.dot(w), lb.dir.dot(w));
            const Eigen::Vector2d t = m.inverse() * rhs;
            const Vec3 pa = la.point + t[0] * la.dir;
            const Vec3 pb = lb.point + t[1] * lb.dir;
            if ((pa - pb).norm() >= cfg.projection_threshold) continue;
            if (t[0] < lines[i]->t_lo || t[0] > lines[i]->t_hi) continue;
            if (t[1] < lines[j]->t_lo || t[1] > lines[j]->t_hi) continue;
            out.push_back(0.5 * (pa + pb));
        }
    }

    for (const CurveSegment& s : segments) {
        if (curve_kind(s.geometry) == CurveKind::Line || s.closed) continue;
        out.push_back(s.start());
        out.push_back(s.end());
    }
    return out;
}

/// Single-linkage clustering with inclusive merge radius; returns cluster
/// centroids sorted lexicographically. Permutation invariant: membership is
/// transitive closure of the pairwise radius relation, and each centroid is
/// accumulated in lexicographic member order.
inline std::vector<Vec3> cluster_corners(std::span<const Vec3> candidates,
                                         const TrimConfig& cfg) {
    validate(cfg);
    if (candidates.empty()) return {};

    const double r = cfg.corner_cluster_radius;
    detail::UnionFind uf(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        for (std::size_t j = i + 1; j < candidates.size(); ++j)
            if ((candidates[i] - candidates[j]).norm() <= r)
                uf.unite(static_cast<int>(i), static_cast<int>(j));

    std::vector<std::vector<Vec3>> groups(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        groups[uf.find(static_cast<int>(i))].push_back(candidates[i]);

    std::vector<Vec3> corners;
    for (std::vector<Vec3>& g : groups) {
        if (g.empty()) continue;
        std::sort(g.begin(), g.end(), detail::lex_less);
        Vec3 sum = Vec3::Zero();
        for (const Vec3& p : g) sum += p;
        corners.push_back(sum / static_cast<double>(g.size()));
    }
    std::sort(corners.begin(), corners.end(), detail::lex_less);
    return corners;
}

} // namespace brepfit
