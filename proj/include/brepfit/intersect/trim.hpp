// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Edge-point projection onto candidate curves and extraction of supported
// parameter intervals. Projection is closed form for lines and circles and
// multi-start Newton for Beziers; extraction splits the sorted parameters
// at large gaps and keeps intervals with enough supporting points.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "brepfit/core/types.hpp"
#include "brepfit/intersect/bezier_fit.hpp"
#include "brepfit/intersect/intersect.hpp"

namespace brepfit {

struct TrimConfig {
    double projection_threshold = 0.02;  // max point-to-curve distance kept
    double gap_threshold = 0.05;         // split fraction of parameter span
    int min_support = 5;                 // points required per segment
    double corner_cluster_radius = 0.02; // merge radius for corner candidates
};

inline void validate(const TrimConfig& cfg) {
    if (cfg.projection_threshold <= 0.0)
        throw ConfigError("trim: projection_threshold must be positive");
    if (cfg.gap_threshold <= 0.0)
        throw ConfigError("trim: gap_threshold must be positive");
    if (cfg.min_support <= 0)
        throw ConfigError("trim: min_support must be positive");
    if (cfg.corner_cluster_radius <= 0.0)
        throw ConfigError("trim: corner_cluster_radius must be positive");
}

struct EdgeProjection {
    int point_index = -1;
    double t = 0.0;
    double distance = 0.0;
};

namespace detail {

inline double wrap_angle(double t) {
    t = std::fmod(t, 2.0 * M_PI);
    return t < 0.0 ? t + 2.0 * M_PI : t;
}

inline EdgeProjection project_point(const CurveGeometry& g, const Vec3& p,
                                    int index) {
    EdgeProjection proj;
    proj.point_index = index;
    if (const auto* ln = std::get_if<LineGeom>(&g)) {
        proj.t = (p - ln->point).dot(ln->dir);
        proj.distance = (p - (ln->point + proj.t * ln->dir)).norm();
        return proj;
    }
    if (const auto* ci = std::get_if<CircleGeom>(&g)) {
        const auto [e1, e2] = circle_frame(*ci);
        const Vec3 d = p - ci->center;
        const double u = d.dot(e1);
        const double v = d.dot(e2);
        if (std::hypot(u, v) < 1e-12) {
            // Directly above the center: every angle is equally close.
            proj.t = 0.0;
            proj.distance = (p - curve_point(g, 0.0)).norm();
            return proj;
        }
        proj.t = wrap_angle(std::atan2(v, u));
        proj.distance = (p - curve_point(g, proj.t)).norm();
        return proj;
    }
    // Bezier: multi-start Newton on the squared distance.
    const auto& bz = std::get<BezierGeom>(g);
    double best_t = 0.0;
    double best_d2 = (p - bz.ctrl[0]).squaredNorm();
    const double end_d2 = (p - bz.ctrl[3]).squaredNorm();
    if (end_d2 < best_d2) {
        best_t = 1.0;
        best_d2 = end_d2;
    }
    for (int s = 0; s < 16; ++s) {
        double t = (s + 0.5) / 16.0;
        t = newton_reparam(bz, p, t);
        const double d2 = (curve_point(g, t) - p).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best_t = t;
        }
    }
    proj.t = best_t;
    proj.distance = std::sqrt(best_d2);
    return proj;
}

} // namespace detail

/// Project `edge_points` onto the candidate curve, keeping every point whose
/// closest distance is at most the projection threshold. Circle parameters
/// land in [0, 2pi); Bezier parameters in [0, 1].
inline std::vector<EdgeProjection> project_edge_points(
    const CandidateCurve& curve, std::span<const Vec3> edge_points,
    const TrimConfig& cfg) {
    validate(cfg);
    std::vector<EdgeProjection> out;
    for (std::size_t i = 0; i < edge_points.size(); ++i) {
        EdgeProjection proj = detail::project_point(
            curve.geometry, edge_points[i], static_cast<int>(i));
        if (proj.distance <= cfg.projection_threshold)
            out.push_back(proj);
    }
    return out;
}

namespace detail {

struct Cluster {
    double t_lo = 0.0;
    double t_hi = 0.0;
    int count = 0;
};

inline std::vector<Cluster> split_linear(std::vector<double> ts,
                                         double gap_limit) {
    std::sort(ts.begin(), ts.end());
    std::vector<Cluster> clusters;
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= ts.size(); ++i) {
        if (i == ts.size() || ts[i] - ts[i - 1] > gap_limit) {
            clusters.push_back({ts[begin], ts[i - 1],
                                static_cast<int>(i - begin)});
            begin = i;
        }
    }
    return clusters;
}

inline void pad_cluster(Cluster& c) {
    if (c.count < 2) return;
    const double half_mean_gap = 0.5 * (c.t_hi - c.t_lo) / (c.count - 1);
    c.t_lo -= half_mean_gap;
    c.t_hi += half_mean_gap;
}

} // namespace detail

/// Split the projected supports into contiguous parameter intervals and
/// keep those with at least `min_support` points. Intervals are padded by
/// half the local mean gap; a circle supported all the way around becomes
/// one closed segment spanning the full turn.
inline std::vector<CurveSegment> extract_segments(
    std::span<const EdgeProjection> projections, const CandidateCurve& curve,
    const TrimConfig& cfg) {
    validate(cfg);
    std::vector<CurveSegment> out;
    if (projections.empty()) return out;

    std::vector<double> ts;
    ts.reserve(projections.size());
    for (const EdgeProjection& p : projections) ts.push_back(p.t);

    const CurveKind kind = curve_kind(curve.geometry);
    std::vector<detail::Cluster> clusters;
    bool full_circle = false;

    if (kind == CurveKind::Circle) {
        std::sort(ts.begin(), ts.end());
        const double gap_limit = cfg.gap_threshold * 2.0 * M_PI;
        // Find the largest circular gap, wraparound included.
        double largest_gap = 2.0 * M_PI - (ts.back() - ts.front());
        std::size_t cut_after = ts.size() - 1; // index before the largest gap
        for (std::size_t i = 1; i < ts.size(); ++i) {
            const double gap = ts[i] - ts[i - 1];
            if (gap > largest_gap) {
                largest_gap = gap;
                cut_after = i - 1;
            }
        }
        if (largest_gap <= gap_limit) {
            full_circle = true;
            clusters.push_back(
                {0.0, 2.0 * M_PI, static_cast<int>(ts.size())});
        } else {
            // Rotate so the sequence starts after the largest gap, then
            // unwrap and split linearly.
            std::vector<double> rotated;
            rotated.reserve(ts.size());
            for (std::size_t k = 0; k < ts.size(); ++k) {
                double t = ts[(cut_after + 1 + k) % ts.size()];
                if (!rotated.empty() && t < rotated.front()) t += 2.0 * M_PI;
                rotated.push_back(t);
            }
            clusters = detail::split_linear(std::move(rotated), gap_limit);
        }
    } else {
        std::sort(ts.begin(), ts.end());
        const double span = ts.back() - ts.front();
        const double gap_limit = cfg.gap_threshold * span;
        clusters = detail::split_linear(std::move(ts), gap_limit);
    }

    for (detail::Cluster& c : clusters) {
        if (c.count < cfg.min_support) continue;
        if (!full_circle) detail::pad_cluster(c);
        CurveSegment seg;
        seg.geometry = curve.geometry;
        seg.faces = curve.source_faces;
        seg.support_count = c.count;
        seg.support_polyline = curve.support_polyline;
        switch (kind) {
        case CurveKind::Circle:
            if (c.t_hi - c.t_lo >= 2.0 * M_PI) {
                c.t_lo = 0.0;
                c.t_hi = 2.0 * M_PI;
                seg.closed = true;
            }
            break;
        case CurveKind::Bezier:
            c.t_lo = std::max(c.t_lo, 0.0);
            c.t_hi = std::min(c.t_hi, 1.0);
            break;
        case CurveKind::Line:
            break;
        }
        if (full_circle) seg.closed = true;
        if (!(c.t_lo < c.t_hi)) continue; // degenerate support spread
        seg.t_lo = c.t_lo;
        seg.t_hi = c.t_hi;
        validate(seg);
        out.push_back(std::move(seg));
    }
    return out;
}

} // namespace brepfit
