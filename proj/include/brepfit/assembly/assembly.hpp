// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Bottom-up assembly of fitted primitives, trimmed curve segments, and
// clustered corners into a trimmed boundary representation: endpoint
// snapping, per-face boundary loop tracing in surface charts, and pruning
// of under-supported fragments.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "brepfit/core/charts.hpp"
#include "brepfit/core/types.hpp"
#include "brepfit/fitting/ransac.hpp"
#include "brepfit/intersect/bezier_fit.hpp"
#include "brepfit/intersect/trim.hpp"

namespace brepfit {

struct AssemblyConfig {
    double snap_radius = 0.02;          // corner capture distance
    int min_face_inliers = 30;          // faces below this are pruned
    double loop_closure_tolerance = 0.01; // self-closure distance
};

inline void validate(const AssemblyConfig& cfg) {
    if (cfg.snap_radius <= 0.0)
        throw ConfigError("assembly: snap_radius must be positive");
    if (cfg.min_face_inliers <= 0)
        throw ConfigError("assembly: min_face_inliers must be positive");
    if (cfg.loop_closure_tolerance <= 0.0)
        throw ConfigError("assembly: loop_closure_tolerance must be positive");
}

namespace detail {

/// Index of the nearest corner within `radius`, or -1. Corners arrive
/// lexicographically sorted, so keeping the strictly closest one resolves
/// equidistant ties toward the lexicographically smaller corner.
inline int nearest_corner(const Vec3& p, std::span<const Vec3> corners,
                          double radius) {
    int best = -1;
    double best_d = radius;
    for (std::size_t i = 0; i < corners.size(); ++i) {
        const double d = (corners[i] - p).norm();
        if (d < best_d || (best < 0 && d == best_d)) {
            best = static_cast<int>(i);
            best_d = d;
        }
    }
    return best;
}

/// Angle of `p` in the circle's plane, unwrapped to the representative
/// nearest `ref` so parameter ranges stay contiguous.
inline double circle_angle_near(const CircleGeom& ci, const Vec3& p,
                                double ref) {
    const auto [e1, e2] = circle_frame(ci);
    const Vec3 d = p - ci.center;
    double t = std::atan2(d.dot(e2), d.dot(e1));
    while (t - ref > M_PI) t -= 2.0 * M_PI;
    while (ref - t > M_PI) t += 2.0 * M_PI;
    return t;
}

/// Re-fit the interior control points of a Bezier against its traced
/// polyline with both endpoints pinned to the given positions. Joint
/// Gauss-Newton over the interior controls and all sample parameters, with
/// the parameter block eliminated through its Schur complement.
inline BezierGeom refit_bezier_pinned(std::span<const Vec3> polyline,
                                      const Vec3& p0, const Vec3& p3,
                                      const BezierGeom& fallback) {
    if (polyline.size() < 4) {
        BezierGeom bz = fallback;
        bz.ctrl[0] = p0;
        bz.ctrl[3] = p3;
        return bz;
    }
    const std::size_t n = polyline.size();
    std::vector<double> t = chord_length_params(polyline);
    BezierGeom bz;
    bz.ctrl[0] = p0;
    bz.ctrl[3] = p3;
    {
        // Linear warm start at the chord parameters.
        double a11 = 0.0, a12 = 0.0, a22 = 0.0;
        Vec3 r1 = Vec3::Zero(), r2 = Vec3::Zero();
        for (std::size_t i = 0; i < n; ++i) {
            double b0, b1, b2, b3;
            bernstein3(t[i], b0, b1, b2, b3);
            const Vec3 resid = polyline[i] - b0 * p0 - b3 * p3;
            a11 += b1 * b1;
            a12 += b1 * b2;
            a22 += b2 * b2;
            r1 += b1 * resid;
            r2 += b2 * resid;
        }
        const double det = a11 * a22 - a12 * a12;
        if (std::abs(det) < 1e-14) {
            const Vec3 diag = p3 - p0;
            bz.ctrl[1] = p0 + diag / 3.0;
            bz.ctrl[2] = p0 + 2.0 * diag / 3.0;
            return bz;
        }
        bz.ctrl[1] = (a22 * r1 - a12 * r2) / det;
        bz.ctrl[2] = (a11 * r2 - a12 * r1) / det;
    }
    double fval = sum_sq_at(bz, polyline, t);

    for (int iter = 0; iter < 40 && fval > 1e-26; ++iter) {
        Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        std::vector<double> binv(n, 0.0); // 1/|B'(t_i)|^2
        for (std::size_t i = 0; i < n; ++i) {
            const Vec3 r = bezier_eval(bz, t[i]) - polyline[i];
            double b0, b1, b2, b3;
            bernstein3(t[i], b0, b1, b2, b3);
            const Vec3 d1 = bezier_deriv1(bz, t[i]);
            const double bb = d1.squaredNorm();
            Eigen::Matrix<double, 3, 6> jc = Eigen::Matrix<double, 3, 6>::Zero();
            jc.block<3, 3>(0, 0) = b1 * Mat3::Identity();
            jc.block<3, 3>(0, 3) = b2 * Mat3::Identity();
            if (bb > 1e-18) {
                binv[i] = 1.0 / bb;
                const Eigen::Matrix<double, 3, 6> pj =
                    jc - d1 * (d1.transpose() * jc) * binv[i];
                h += jc.transpose() * pj;
                g += pj.transpose() * r;
            } else {
                h += jc.transpose() * jc;
                g += jc.transpose() * r;
            }
        }
        h.diagonal().array() += 1e-12 * (1.0 + h.trace());
        Eigen::Matrix<double, 6, 1> dc = h.ldlt().solve(-g);

        bool improved = false;
        for (int half = 0; half < 24; ++half) {
            BezierGeom trial = bz;
            trial.ctrl[1] += dc.segment<3>(0);
            trial.ctrl[2] += dc.segment<3>(3);
            std::vector<double> tt = t;
            for (std::size_t i = 0; i < n; ++i) {
                if (binv[i] == 0.0) continue;
                const Vec3 r = bezier_eval(bz, t[i]) - polyline[i];
                double b0, b1, b2, b3;
                bernstein3(t[i], b0, b1, b2, b3);
                const Vec3 jdc = b1 * dc.segment<3>(0) + b2 * dc.segment<3>(3);
                const Vec3 d1 = bezier_deriv1(bz, t[i]);
                tt[i] = std::clamp(t[i] - d1.dot(r + jdc) * binv[i], 0.0, 1.0);
            }
            const double trial_f = sum_sq_at(trial, polyline, tt);
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
    return bz;
}

} // namespace detail

/// Snap segment endpoints to nearby corners. Lines and circles move their
/// parameter bounds; Beziers translate their end control points and re-fit
/// the interior against the traced polyline. Segments whose free endpoints
/// coincide within the closure tolerance are marked closed.
inline std::vector<CurveSegment> snap_endpoints(std::vector<CurveSegment> segments,
                                                std::span<const Vec3> corners,
                                                const AssemblyConfig& cfg) {
    validate(cfg);
    for (CurveSegment& seg : segments) {
        if (seg.closed) continue;
        const Vec3 s = seg.start();
        const Vec3 e = seg.end();
        const int ci = detail::nearest_corner(s, corners, cfg.snap_radius);
        const int cj = detail::nearest_corner(e, corners, cfg.snap_radius);

        switch (curve_kind(seg.geometry)) {
        case CurveKind::Line: {
            const auto& ln = std::get<LineGeom>(seg.geometry);
            double lo = seg.t_lo;
            double hi = seg.t_hi;
            if (ci >= 0) lo = (corners[ci] - ln.point).dot(ln.dir);
            if (cj >= 0) hi = (corners[cj] - ln.point).dot(ln.dir);
            if (lo < hi) {
                seg.t_lo = lo;
                seg.t_hi = hi;
                seg.endpoint_corners = {ci, cj};
            }
            break;
        }
        case CurveKind::Circle: {
            const auto& circle = std::get<CircleGeom>(seg.geometry);
            double lo = seg.t_lo;
            double hi = seg.t_hi;
            if (ci >= 0)
                lo = detail::circle_angle_near(circle, corners[ci], seg.t_lo);
            if (cj >= 0)
                hi = detail::circle_angle_near(circle, corners[cj], seg.t_hi);
            if (lo < hi && hi - lo <= 2.0 * M_PI) {
                seg.t_lo = lo;
                seg.t_hi = hi;
                seg.endpoint_corners = {ci, cj};
            }
            break;
        }
        case CurveKind::Bezier: {
            if (ci >= 0 || cj >= 0) {
                const auto& bz = std::get<BezierGeom>(seg.geometry);
                const Vec3 p0 = ci >= 0 ? corners[ci] : s;
                const Vec3 p3 = cj >= 0 ? corners[cj] : e;
                // Only the polyline samples inside this segment's parameter
                // window should drive the re-fit.
                std::vector<Vec3> window;
                window.reserve(seg.support_polyline.size());
                for (const Vec3& q : seg.support_polyline) {
                    const double t =
                        detail::project_point(seg.geometry, q, 0).t;
                    if (t >= seg.t_lo - 0.02 && t <= seg.t_hi + 0.02)
                        window.push_back(q);
                }
                seg.geometry =
                    detail::refit_bezier_pinned(window, p0, p3, bz);
                seg.t_lo = 0.0;
                seg.t_hi = 1.0;
                seg.endpoint_corners = {ci, cj};
            }
            break;
        }
        }

        if (seg.endpoint_corners[0] < 0 && seg.endpoint_corners[1] < 0 &&
            (seg.start() - seg.end()).norm() < cfg.loop_closure_tolerance) {
            seg.closed = true;
            if (curve_kind(seg.geometry) == CurveKind::Circle)
                seg.t_hi = seg.t_lo + 2.0 * M_PI; // complete the turn exactly
        }
    }
    return segments;
}

namespace detail {

/// Unit chart-space direction of a 3D tangent at a surface point.
inline Vec2 chart_dir(const SurfaceChart& chart, const Vec3& p,
                      const Vec3& dir) {
    const double h = 1e-5;
    const Vec2 a = chart.to_chart(p);
    Vec2 b = chart.to_chart(p + h * dir.normalized());
    if (chart.periodic_u()) b.x() = chart.unwrap_near(b.x(), a.x());
    const Vec2 d = b - a;
    const double n = d.norm();
    return n > 1e-14 ? Vec2(d / n) : Vec2(1.0, 0.0);
}

/// Counterclockwise angle from `from` to `to` in (0, 2 pi].
inline double ccw_angle(const Vec2& from, const Vec2& to) {
    const double a = std::atan2(from.x() * to.y() - from.y() * to.x(),
                                from.dot(to));
    return a > 0.0 ? a : a + 2.0 * M_PI;
}

struct HalfEdge {
    int edge = -1;      // index into the model's edge list
    bool reversed = false;
    int from = -1;      // departure corner
    int to = -1;        // arrival corner
};

/// Chart polygon of one loop, sampled along each directed edge use.
inline std::vector<Vec2> loop_polygon(const FaceLoop& loop,
                                      std::span<const CurveSegment> edges,
                                      const SurfaceChart& chart,
                                      int samples_per_edge = 32) {
    std::vector<Vec2> poly;
    for (const LoopEntry& entry : loop.entries) {
        const CurveSegment& seg = edges[entry.edge];
        for (int k = 0; k < samples_per_edge; ++k) {
            const double f = static_cast<double>(k) / samples_per_edge;
            const double t = entry.reversed
                                 ? seg.t_hi - seg.span() * f
                                 : seg.t_lo + seg.span() * f;
            Vec2 uv = chart.to_chart(curve_point(seg.geometry, t));
            if (!poly.empty() && chart.periodic_u())
                uv.x() = chart.unwrap_near(uv.x(), poly.back().x());
            poly.push_back(uv);
        }
    }
    return poly;
}

inline double signed_area(const std::vector<Vec2>& poly) {
    double a2 = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % poly.size()];
        a2 += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * a2;
}

inline void flip_loop(FaceLoop& loop) {
    std::reverse(loop.entries.begin(), loop.entries.end());
    for (LoopEntry& e : loop.entries) e.reversed = !e.reversed;
}

} // namespace detail

struct FaceLoopBuild {
    std::vector<FaceLoop> loops;
    bool watertight = true;
};

/// Trace boundary loops for one face from its snapped segments. Cycles are
/// extracted greedily: at each corner the walk continues along the unused
/// segment with the smallest counterclockwise turn in the face's chart.
/// Chains that cannot close are emitted open and flag the face. On
/// non-periodic charts the largest loop is oriented counterclockwise and
/// holes clockwise.
inline FaceLoopBuild build_face_loops(const Primitive& primitive,
                                      std::span<const CurveSegment> edges,
                                      std::span<const int> edge_indices,
                                      const AssemblyConfig& cfg) {
    validate(cfg);
    FaceLoopBuild out;

    // Chart hint: mean boundary direction keeps a sphere's stereographic
    // pole away from the data.
    Vec3 hint = Vec3::Zero();
    for (int ei : edge_indices) {
        const CurveSegment& seg = edges[ei];
        hint += curve_point(seg.geometry, 0.5 * (seg.t_lo + seg.t_hi));
    }
    if (primitive.kind() == PrimitiveKind::Sphere)
        hint = (edge_indices.empty())
                   ? Vec3(0, 0, 1)
                   : Vec3(hint / static_cast<double>(edge_indices.size()) -
                          primitive.sphere().center);
    const SurfaceChart chart(primitive, hint);

    std::vector<detail::HalfEdge> half_edges;
    std::vector<int> open_single; // segments that cannot chain
    for (int ei : edge_indices) {
        const CurveSegment& seg = edges[ei];
        if (seg.closed) {
            FaceLoop loop;
            loop.entries.push_back({ei, false});
            loop.closed = true;
            out.loops.push_back(std::move(loop));
            continue;
        }
        const int c0 = seg.endpoint_corners[0];
        const int c1 = seg.endpoint_corners[1];
        if (c0 < 0 || c1 < 0) {
            open_single.push_back(ei);
            continue;
        }
        half_edges.push_back({ei, false, c0, c1});
        half_edges.push_back({ei, true, c1, c0});
    }

    auto departure_dir = [&](const detail::HalfEdge& he) {
        const CurveSegment& seg = edges[he.edge];
        const double t = he.reversed ? seg.t_hi : seg.t_lo;
        const Vec3 tan = curve_derivative(seg.geometry, t) *
                         (he.reversed ? -1.0 : 1.0);
        return detail::chart_dir(chart, curve_point(seg.geometry, t), tan);
    };
    auto arrival_dir = [&](const detail::HalfEdge& he) {
        const CurveSegment& seg = edges[he.edge];
        const double t = he.reversed ? seg.t_lo : seg.t_hi;
        const Vec3 tan = curve_derivative(seg.geometry, t) *
                         (he.reversed ? -1.0 : 1.0);
        return detail::chart_dir(chart, curve_point(seg.geometry, t), tan);
    };

    auto entry_corners = [&](const LoopEntry& entry) {
        const CurveSegment& seg = edges[entry.edge];
        const int a = seg.endpoint_corners[entry.reversed ? 1 : 0];
        const int b = seg.endpoint_corners[entry.reversed ? 0 : 1];
        return std::array<int, 2>{a, b};
    };

    std::vector<bool> edge_used(edges.size(), false);
    for (std::size_t start = 0; start < half_edges.size(); ++start) {
        if (edge_used[half_edges[start].edge]) continue;
        FaceLoop loop;
        detail::HalfEdge cur = half_edges[start];
        int head = cur.from; // corner at the front of the growing chain
        loop.entries.push_back({cur.edge, cur.reversed});
        edge_used[cur.edge] = true;
        bool reversed_once = false;
        while (true) {
            if (cur.to == head) {
                loop.closed = true;
                break;
            }
            // Candidates departing from the arrival corner.
            const Vec2 in_dir = arrival_dir(cur);
            const detail::HalfEdge* next = nullptr;
            double best_angle = 0.0;
            for (const detail::HalfEdge& he : half_edges) {
                if (edge_used[he.edge] || he.from != cur.to) continue;
                const double angle = detail::ccw_angle(in_dir, departure_dir(he));
                if (next == nullptr || angle < best_angle ||
                    (angle == best_angle && he.edge < next->edge)) {
                    next = &he;
                    best_angle = angle;
                }
            }
            if (next == nullptr) {
                if (!reversed_once) {
                    // Dead end: flip the chain and grow from the other side
                    // so the reported chain is maximal.
                    reversed_once = true;
                    detail::flip_loop(loop);
                    const auto back = entry_corners(loop.entries.back());
                    cur.edge = loop.entries.back().edge;
                    cur.reversed = loop.entries.back().reversed;
                    cur.from = back[0];
                    cur.to = back[1];
                    head = entry_corners(loop.entries.front())[0];
                    continue;
                }
                loop.closed = false;
                out.watertight = false;
                break;
            }
            cur = *next;
            loop.entries.push_back({cur.edge, cur.reversed});
            edge_used[cur.edge] = true;
        }
        out.loops.push_back(std::move(loop));
    }

    for (int ei : open_single) {
        FaceLoop loop;
        loop.entries.push_back({ei, false});
        loop.closed = false;
        out.loops.push_back(std::move(loop));
        out.watertight = false;
    }

    // Deterministic orientation on non-periodic charts: the loop with the
    // largest enclosed area runs counterclockwise, holes clockwise.
    if (!chart.periodic_u()) {
        double outer_abs = -1.0;
        std::size_t outer = 0;
        std::vector<double> areas(out.loops.size(), 0.0);
        for (std::size_t i = 0; i < out.loops.size(); ++i) {
            if (!out.loops[i].closed) continue;
            areas[i] = detail::signed_area(
                detail::loop_polygon(out.loops[i], edges, chart));
            if (std::abs(areas[i]) > outer_abs) {
                outer_abs = std::abs(areas[i]);
                outer = i;
            }
        }
        for (std::size_t i = 0; i < out.loops.size(); ++i) {
            if (!out.loops[i].closed) continue;
            const bool want_ccw = (i == outer);
            if (want_ccw != (areas[i] > 0.0)) detail::flip_loop(out.loops[i]);
        }
    }
    return out;
}

/// Remove faces with too few supporting inliers, then the edges stranded by
/// their removal and the corners referenced by no surviving edge, and
/// reindex everything.
inline BRepModel prune_fragments(const BRepModel& model,
                                 const AssemblyConfig& cfg) {
    validate(cfg);
    const int nf = static_cast<int>(model.faces.size());
    const int ne = static_cast<int>(model.edges.size());
    const int nc = static_cast<int>(model.corners.size());

    std::vector<int> face_map(nf, -1);
    int kept_faces = 0;
    for (int f = 0; f < nf; ++f)
        if (model.faces[f].primitive.inlier_count >= cfg.min_face_inliers)
            face_map[f] = kept_faces++;

    std::vector<int> edge_map(ne, -1);
    int kept_edges = 0;
    for (int e = 0; e < ne; ++e) {
        const auto& faces = model.edges[e].faces;
        const bool alive =
            (faces[0] >= 0 && face_map[faces[0]] >= 0) ||
            (faces[1] >= 0 && face_map[faces[1]] >= 0);
        if (alive) edge_map[e] = kept_edges++;
    }

    std::vector<int> corner_map(nc, -1);
    int kept_corners = 0;
    for (int c = 0; c < nc; ++c) {
        bool referenced = false;
        for (int e = 0; e < ne && !referenced; ++e)
            if (edge_map[e] >= 0 &&
                (model.edges[e].endpoint_corners[0] == c ||
                 model.edges[e].endpoint_corners[1] == c))
                referenced = true;
        if (referenced) corner_map[c] = kept_corners++;
    }

    BRepModel out;
    out.corners.reserve(kept_corners);
    for (int c = 0; c < nc; ++c)
        if (corner_map[c] >= 0) out.corners.push_back(model.corners[c]);

    out.edges.reserve(kept_edges);
    for (int e = 0; e < ne; ++e) {
        if (edge_map[e] < 0) continue;
        CurveSegment seg = model.edges[e];
        for (int& c : seg.endpoint_corners)
            c = (c >= 0) ? corner_map[c] : -1;
        for (int& f : seg.faces) f = (f >= 0) ? face_map[f] : -1;
        out.edges.push_back(std::move(seg));
    }

    out.faces.reserve(kept_faces);
    for (int f = 0; f < nf; ++f) {
        if (face_map[f] < 0) continue;
        BRepFace face = model.faces[f];
        for (FaceLoop& loop : face.loops)
            for (LoopEntry& entry : loop.entries) entry.edge = edge_map[entry.edge];
        out.faces.push_back(std::move(face));
    }
    return out;
}

struct AssemblyResult {
    BRepModel model;
    std::vector<int> non_watertight_faces; // indices into model.faces
};

/// Full bottom-up assembly: snap endpoints to corners, trace per-face
/// boundary loops, prune under-supported fragments, and report every face
/// whose boundary failed to close.
inline AssemblyResult assemble_brep(const LabeledPointCloud& cloud,
                                    std::span<const PrimitiveFit> fits,
                                    std::vector<CurveSegment> segments,
                                    std::span<const Vec3> corners,
                                    const AssemblyConfig& cfg) {
    validate(cfg);
    validate(cloud);
    if (fits.empty())
        throw Error("empty model: no fittable patches to assemble");

    BRepModel model;
    model.corners.assign(corners.begin(), corners.end());
    model.edges = snap_endpoints(std::move(segments), corners, cfg);

    model.faces.reserve(fits.size());
    for (const PrimitiveFit& fit : fits) {
        BRepFace face;
        face.primitive = fit.primitive;
        model.faces.push_back(std::move(face));
    }

    for (std::size_t f = 0; f < model.faces.size(); ++f) {
        std::vector<int> edge_indices;
        for (std::size_t e = 0; e < model.edges.size(); ++e)
            if (model.edges[e].faces[0] == static_cast<int>(f) ||
                model.edges[e].faces[1] == static_cast<int>(f))
                edge_indices.push_back(static_cast<int>(e));
        FaceLoopBuild build = build_face_loops(
            model.faces[f].primitive, model.edges, edge_indices, cfg);
        model.faces[f].loops = std::move(build.loops);
        model.faces[f].watertight = build.watertight;
    }

    AssemblyResult result;
    result.model = prune_fragments(model, cfg);
    for (std::size_t f = 0; f < result.model.faces.size(); ++f)
        if (!result.model.faces[f].watertight)
            result.non_watertight_faces.push_back(static_cast<int>(f));
    validate(result.model);
    return result;
}

} // namespace brepfit
