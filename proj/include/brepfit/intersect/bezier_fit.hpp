// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Least-squares cubic Bezier fitting over traced polylines: chord-length
// parameterization, pinned endpoints, Newton parameter refinement, and
// recursive splitting until every sample sits within tolerance.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "brepfit/core/types.hpp"

namespace brepfit {

/// One fitted cubic plus the polyline samples it is responsible for.
struct BezierPiece {
    BezierGeom geometry;
    std::vector<Vec3> support;
    double max_deviation = 0.0;
};

namespace detail {

inline void bernstein3(double t, double& b0, double& b1, double& b2,
                       double& b3) {
    const double u = 1.0 - t;
    b0 = u * u * u;
    b1 = 3.0 * u * u * t;
    b2 = 3.0 * u * t * t;
    b3 = t * t * t;
}

inline Vec3 bezier_eval(const BezierGeom& bz, double t) {
    double b0, b1, b2, b3;
    bernstein3(t, b0, b1, b2, b3);
    return b0 * bz.ctrl[0] + b1 * bz.ctrl[1] + b2 * bz.ctrl[2] +
           b3 * bz.ctrl[3];
}

inline Vec3 bezier_deriv1(const BezierGeom& bz, double t) {
    const double u = 1.0 - t;
    return 3.0 * u * u * (bz.ctrl[1] - bz.ctrl[0]) +
           6.0 * u * t * (bz.ctrl[2] - bz.ctrl[1]) +
           3.0 * t * t * (bz.ctrl[3] - bz.ctrl[2]);
}

inline Vec3 bezier_deriv2(const BezierGeom& bz, double t) {
    const double u = 1.0 - t;
    return 6.0 * u * (bz.ctrl[2] - 2.0 * bz.ctrl[1] + bz.ctrl[0]) +
           6.0 * t * (bz.ctrl[3] - 2.0 * bz.ctrl[2] + bz.ctrl[1]);
}

inline std::vector<double> chord_length_params(std::span<const Vec3> pts) {
    std::vector<double> t(pts.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        total += (pts[i] - pts[i - 1]).norm();
        t[i] = total;
    }
    if (total <= 0.0) throw FitError("bezier fit requires a non-degenerate polyline");
    for (double& v : t) v /= total;
    return t;
}

/// Solve for the interior control points with endpoints pinned.
inline BezierGeom solve_interior(std::span<const Vec3> pts,
                                 const std::vector<double>& t) {
    BezierGeom bz;
    bz.ctrl[0] = pts.front();
    bz.ctrl[3] = pts.back();
    double a11 = 0.0, a12 = 0.0, a22 = 0.0;
    Vec3 r1 = Vec3::Zero(), r2 = Vec3::Zero();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        double b0, b1, b2, b3;
        bernstein3(t[i], b0, b1, b2, b3);
        const Vec3 resid = pts[i] - b0 * bz.ctrl[0] - b3 * bz.ctrl[3];
        a11 += b1 * b1;
        a12 += b1 * b2;
        a22 += b2 * b2;
        r1 += b1 * resid;
        r2 += b2 * resid;
    }
    const double det = a11 * a22 - a12 * a12;
    if (std::abs(det) < 1e-14) {
        // Degenerate sampling: fall back to thirds of the chord.
        const Vec3 span = bz.ctrl[3] - bz.ctrl[0];
        bz.ctrl[1] = bz.ctrl[0] + span / 3.0;
        bz.ctrl[2] = bz.ctrl[0] + 2.0 * span / 3.0;
        return bz;
    }
    bz.ctrl[1] = (a22 * r1 - a12 * r2) / det;
    bz.ctrl[2] = (a11 * r2 - a12 * r1) / det;
    return bz;
}

inline double newton_reparam(const BezierGeom& bz, const Vec3& q, double t) {
    for (int it = 0; it < 4; ++it) {
        const Vec3 diff = bezier_eval(bz, t) - q;
        const Vec3 d1 = bezier_deriv1(bz, t);
        const Vec3 d2 = bezier_deriv2(bz, t);
        const double denom = diff.dot(d2) + d1.squaredNorm();
        if (std::abs(denom) < 1e-14) break;
        t -= diff.dot(d1) / denom;
        t = std::clamp(t, 0.0, 1.0);
    }
    return t;
}

inline double max_deviation_at(const BezierGeom& bz, std::span<const Vec3> pts,
                               const std::vector<double>& t,
                               std::size_t& worst) {
    double dev = 0.0;
    worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = (bezier_eval(bz, t[i]) - pts[i]).norm();
        if (d > dev) {
            dev = d;
            worst = i;
        }
    }
    return dev;
}

inline double sum_sq_at(const BezierGeom& bz, std::span<const Vec3> pts,
                        const std::vector<double>& t) {
    double f = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        f += (bezier_eval(bz, t[i]) - pts[i]).squaredNorm();
    return f;
}

/// Single-piece fit: linear solve at chord-length parameters, then joint
/// Gauss-Newton over the interior control points and the per-point
/// parameters. Each parameter appears in exactly one residual, so its
/// block is eliminated with a Schur complement, leaving a 6x6 system.
/// `worst` receives the worst-fit sample index.
inline BezierPiece fit_single(std::span<const Vec3> pts, std::size_t& worst) {
    const std::size_t n = pts.size();
    std::vector<double> t = chord_length_params(pts);
    BezierGeom bz = solve_interior(pts, t);
    double fval = sum_sq_at(bz, pts, t);

    for (int iter = 0; iter < 40 && fval > 1e-26; ++iter) {
        Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        // Per-point cached pieces for the parameter back-substitution.
        std::vector<double> binv(n, 0.0); // 1/|B'(t_i)|^2 (0 for frozen t)
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 r = bezier_eval(bz, t[i]) - pts[i];
            double b1, b2;
            {
                double w0, w3;
                bernstein3(t[i], w0, b1, b2, w3);
            }
            const Vec3 d1 = bezier_deriv1(bz, t[i]);
            const bool frozen = (i == 0 || i + 1 == n);
            const double bb = d1.squaredNorm();
            Eigen::Matrix<double, 3, 6> jc = Eigen::Matrix<double, 3, 6>::Zero();
            jc.block<3, 3>(0, 0) = b1 * Mat3::Identity();
            jc.block<3, 3>(0, 3) = b2 * Mat3::Identity();
            if (!frozen && bb > 1e-18) {
                binv[i] = 1.0 / bb;
                // Project out the parameter direction: P = I - d1 d1^T / bb.
                const Eigen::Matrix<double, 3, 6> pj =
                    jc - d1 * (d1.transpose() * jc) * binv[i];
                h += jc.transpose() * pj;
                g += pj.transpose() * r;
            } else {
                h += jc.transpose() * jc;
                g += jc.transpose() * r;
            }
        }
        const double damping = 1e-12 * (1.0 + h.trace());
        h.diagonal().array() += damping;
        Eigen::Matrix<double, 6, 1> dc = h.ldlt().solve(-g);

        bool improved = false;
        for (int half = 0; half < 24; ++half) {
            BezierGeom trial = bz;
            trial.ctrl[1] += dc.segment<3>(0);
            trial.ctrl[2] += dc.segment<3>(3);
            std::vector<double> tt = t;
            for (std::size_t i = 1; i + 1 < n; ++i) {
                if (binv[i] == 0.0) continue;
                const Vec3 r = bezier_eval(bz, t[i]) - pts[i];
                double w0, b1, b2, w3;
                bernstein3(t[i], w0, b1, b2, w3);
                const Vec3 jdc =
                    b1 * dc.segment<3>(0) + b2 * dc.segment<3>(3);
                const Vec3 d1 = bezier_deriv1(bz, t[i]);
                tt[i] = std::clamp(t[i] - d1.dot(r + jdc) * binv[i], 0.0, 1.0);
            }
            const double trial_f = sum_sq_at(trial, pts, tt);
            if (trial_f < fval) {
                const double rel = (fval - trial_f) / (1.0 + fval);
                bz = trial;
                t = std::move(tt);
                fval = trial_f;
                improved = rel > 1e-14;
                break;
            }
            dc *= 0.5;
        }
        if (!improved) break;
    }

    BezierPiece piece;
    piece.geometry = bz;
    piece.support.assign(pts.begin(), pts.end());
    piece.max_deviation = max_deviation_at(bz, pts, t, worst);
    return piece;
}

inline void fit_recursive(std::span<const Vec3> pts, double max_dev,
                          std::vector<BezierPiece>& out) {
    std::size_t worst = 0;
    BezierPiece piece = fit_single(pts, worst);
    const bool splittable = pts.size() >= 8;
    if (piece.max_deviation <= max_dev || !splittable) {
        out.push_back(std::move(piece));
        return;
    }
    // Both halves need four points; splitting at the worst sample subject
    // to that keeps the recursion well posed.
    std::size_t split = std::clamp<std::size_t>(worst, 3, pts.size() - 4);
    fit_recursive(pts.subspan(0, split + 1), max_dev, out);
    fit_recursive(pts.subspan(split), max_dev, out);
}

} // namespace detail

/// Fit a chain of cubic Beziers to `polyline` so that no sample deviates
/// more than twice `eta` from its curve; pieces share endpoints. Requires
/// at least four samples.
inline std::vector<BezierPiece> fit_bezier(std::span<const Vec3> polyline,
                                           double eta) {
    if (eta <= 0.0) throw ConfigError("bezier tolerance must be positive");
    if (polyline.size() < 4)
        throw FitError("bezier fit requires at least 4 points");
    std::vector<BezierPiece> out;
    detail::fit_recursive(polyline, 2.0 * eta, out);
    for (const BezierPiece& p : out)
        for (const Vec3& c : p.geometry.ctrl)
            if (!c.allFinite())
                throw FitError("bezier fit produced non-finite control points");
    return out;
}

} // namespace brepfit
