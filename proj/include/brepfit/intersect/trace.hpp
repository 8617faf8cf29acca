// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Numeric intersection tracing for primitive pairs with no closed form.
// Seed points are relaxed onto the curve with a two-surface Newton
// projection, then marched along the cross product of the two gradients.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "brepfit/core/types.hpp"

namespace brepfit {

struct TraceOptions {
    double step = 0.005;          // arc-length march increment
    double project_tol = 1e-12;   // implicit residual target for projection
    int max_project_iters = 32;
    int max_steps = 100000;       // hard cap per branch
    double tangency_tol = 1e-6;   // |grad_a x grad_b| below this truncates
    Vec3 domain_lo{-0.25, -0.25, -0.25};
    Vec3 domain_hi{1.25, 1.25, 1.25};
};

struct TracedCurve {
    std::vector<Vec3> points;
    bool closed = false;
    bool truncated = false; // stopped at a tangency, not a domain exit
};

namespace detail {

/// Newton projection onto f_a = f_b = 0 moving within span{grad_a, grad_b}.
inline bool project_to_intersection(const Primitive& a, const Primitive& b,
                                    Vec3& x, const TraceOptions& opt) {
    for (int it = 0; it < opt.max_project_iters; ++it) {
        const double fa = implicit_value(a, x);
        const double fb = implicit_value(b, x);
        if (std::abs(fa) < opt.project_tol && std::abs(fb) < opt.project_tol)
            return true;
        const Vec3 ga = implicit_gradient(a, x);
        const Vec3 gb = implicit_gradient(b, x);
        Eigen::Matrix2d m;
        m << ga.dot(ga), ga.dot(gb), ga.dot(gb), gb.dot(gb);
        const double det = m.determinant();
        if (std::abs(det) < 1e-18) return false; // gradients parallel
        const Eigen::Vector2d coef = m.inverse() * Eigen::Vector2d(-fa, -fb);
        x += coef[0] * ga + coef[1] * gb;
        if (!x.allFinite()) return false;
    }
    return std::abs(implicit_value(a, x)) < 1e-9 &&
           std::abs(implicit_value(b, x)) < 1e-9;
}

inline bool in_domain(const Vec3& x, const TraceOptions& opt) {
    return (x.array() >= opt.domain_lo.array()).all() &&
           (x.array() <= opt.domain_hi.array()).all();
}

/// March from `start` in +-direction of the gradient cross product.
/// Returns points AFTER the start point, in march order.
inline std::vector<Vec3> march(const Primitive& a, const Primitive& b,
                               const Vec3& start, double direction,
                               const TraceOptions& opt, bool& closed,
                               bool& truncated) {
    std::vector<Vec3> out;
    Vec3 x = start;
    Vec3 prev_tangent = Vec3::Zero();
    for (int step = 0; step < opt.max_steps; ++step) {
        const Vec3 cross =
            implicit_gradient(a, x).cross(implicit_gradient(b, x));
        if (cross.norm() < opt.tangency_tol) {
            truncated = true;
            return out;
        }
        Vec3 tangent = direction * cross.normalized();
        // Keep heading consistent through curvature; never u-turn.
        if (prev_tangent.squaredNorm() > 0.0 && tangent.dot(prev_tangent) < 0.0)
            tangent = -tangent;
        Vec3 next = x + opt.step * tangent;
        if (!project_to_intersection(a, b, next, opt)) {
            truncated = true;
            return out;
        }
        if (!in_domain(next, opt)) return out; // leave the last in-domain point
        if (step >= 2 && (next - start).norm() < 0.5 * opt.step) {
            closed = true;
            return out;
        }
        out.push_back(next);
        prev_tangent = (next - x).normalized();
        x = next;
    }
    truncated = true;
    return out;
}

} // namespace detail

/// Trace the intersection of two primitives starting from `seeds` (points
/// already near both surfaces, typically edge-labeled cloud points). Each
/// seed is projected onto the curve; seeds landing within one step of an
/// already traced branch are folded into it. Open branches are extended in
/// both directions until domain exit, loop closure, or tangency.
inline std::vector<TracedCurve> trace_intersection_numeric(
    const Primitive& a, const Primitive& b, std::vector<Vec3> seeds,
    const TraceOptions& opt = {}) {
    validate(a);
    validate(b);
    if (opt.step <= 0.0) throw ConfigError("trace step must be positive");

    std::vector<TracedCurve> branches;
    for (Vec3 seed : seeds) {
        if (!detail::project_to_intersection(a, b, seed, opt)) continue;
        if (!detail::in_domain(seed, opt)) continue;
        bool duplicate = false;
        for (const TracedCurve& br : branches) {
            for (const Vec3& p : br.points) {
                if ((p - seed).norm() < opt.step) {
                    duplicate = true;
                    break;
                }
            }
            if (duplicate) break;
        }
        if (duplicate) continue;

        TracedCurve curve;
        bool truncated_fwd = false;
        bool truncated_bwd = false;
        std::vector<Vec3> forward = detail::march(a, b, seed, +1.0, opt,
                                                  curve.closed, truncated_fwd);
        std::vector<Vec3> backward;
        if (!curve.closed)
            backward = detail::march(a, b, seed, -1.0, opt, curve.closed,
                                     truncated_bwd);
        curve.truncated = truncated_fwd || truncated_bwd;

        curve.points.reserve(backward.size() + 1 + forward.size());
        for (auto it = backward.rbegin(); it != backward.rend(); ++it)
            curve.points.push_back(*it);
        curve.points.push_back(seed);
        curve.points.insert(curve.points.end(), forward.begin(), forward.end());
        if (curve.closed) curve.points.push_back(curve.points.front());
        if (curve.points.size() >= 2) branches.push_back(std::move(curve));
    }
    return branches;
}

} // namespace brepfit
