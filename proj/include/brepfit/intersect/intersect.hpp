// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Analytic intersection curves between primitive pairs. Only configurations
// whose curve satisfies both source implicits to machine precision are
// answered analytically; everything else is referred to the numeric tracer.

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <vector>

#include "brepfit/core/types.hpp"

namespace brepfit {

/// One intersection curve candidate between two faces. Analytic candidates
/// come straight from closed forms; traced candidates are Bezier fits over
/// `support_polyline`.
struct CandidateCurve {
    CurveGeometry geometry;
    std::array<int, 2> source_faces{-1, -1};
    bool is_analytic = true;
    std::vector<Vec3> support_polyline; // traced curves only
};

struct IntersectResult {
    std::vector<CandidateCurve> curves;
    bool coincident = false;     // same surface: no curve by definition
    bool needs_numeric = false;  // defer to trace_intersection_numeric
};

namespace detail {

// Angular thresholds are tight enough that every analytic curve meets both
// implicits to well below 1e-9 over the unit box; anything looser is traced.
inline constexpr double kParallelTol = 1e-6;      // |cross| for plane pairs
inline constexpr double kAxisAlignTol = 1e-9;     // axis vs plane normal
inline constexpr double kAxisInPlaneTol = 1e-10;  // axis dot plane normal

inline IntersectResult plane_plane(const Primitive& pa, const Primitive& pb) {
    IntersectResult res;
    const PlaneGeom& a = pa.plane();
    const PlaneGeom& b = pb.plane();
    const Vec3 cross = a.normal.cross(b.normal);
    if (cross.norm() < kParallelTol) {
        res.coincident = primitives_coincident(pa, pb);
        return res; // parallel: coincident or disjoint, never a line
    }
    const Vec3 dir = cross.normalized();
    Mat3 m;
    m.row(0) = a.normal.transpose();
    m.row(1) = b.normal.transpose();
    m.row(2) = dir.transpose();
    const Vec3 point = m.partialPivLu().solve(Vec3(a.offset, b.offset, 0.0));
    CandidateCurve c;
    c.geometry = LineGeom{point, dir};
    res.curves.push_back(std::move(c));
    return res;
}

inline IntersectResult plane_sphere(const Primitive& pa, const Primitive& pb) {
    IntersectResult res;
    const PlaneGeom& pl = pa.plane();
    const SphereGeom& sp = pb.sphere();
    const double s = pl.normal.dot(sp.center) - pl.offset;
    if (std::abs(s) >= sp.radius) return res; // tangent contact is a point
    CandidateCurve c;
    c.geometry = CircleGeom{sp.center - s * pl.normal, pl.normal,
                            std::sqrt(sp.radius * sp.radius - s * s)};
    res.curves.push_back(std::move(c));
    return res;
}

inline IntersectResult sphere_sphere(const Primitive& pa, const Primitive& pb) {
    IntersectResult res;
    const SphereGeom& a = pa.sphere();
    const SphereGeom& b = pb.sphere();
    const Vec3 d = b.center - a.center;
    const double dist = d.norm();
    if (dist < 1e-12) {
        res.coincident = std::abs(a.radius - b.radius) < 1e-6;
        return res; // concentric
    }
    if (dist >= a.radius + b.radius || dist <= std::abs(a.radius - b.radius))
        return res; // separate or nested (tangency is a point)
    const Vec3 axis = d / dist;
    const double along =
        (dist * dist + a.radius * a.radius - b.radius * b.radius) / (2.0 * dist);
    CandidateCurve c;
    c.geometry = CircleGeom{a.center + along * axis, axis,
                            std::sqrt(a.radius * a.radius - along * along)};
    res.curves.push_back(std::move(c));
    return res;
}

inline IntersectResult plane_cylinder(const Primitive& pa, const Primitive& pb) {
    IntersectResult res;
    const PlaneGeom& pl = pa.plane();
    const CylinderGeom& cy = pb.cylinder();
    const double align = pl.normal.dot(cy.axis_dir);

    if (std::abs(std::abs(align) - 1.0) < kAxisAlignTol) {
        // Axis orthogonal to the plane: the section is a circle of the
        // cylinder's own radius around the axis puncture point.
        const double t = (pl.offset - pl.normal.dot(cy.axis_point)) / align;
        CandidateCurve c;
        c.geometry =
            CircleGeom{cy.axis_point + t * cy.axis_dir, cy.axis_dir, cy.radius};
        res.curves.push_back(std::move(c));
        return res;
    }
    if (std::abs(align) < kAxisInPlaneTol) {
        // Axis parallel to the plane: 0, 1, or 2 rulings.
        const double s = pl.normal.dot(cy.axis_point) - pl.offset;
        if (std::abs(s) > cy.radius) return res;
        const Vec3 foot = cy.axis_point - s * pl.normal;
        const double offset = std::sqrt(
            std::max(0.0, cy.radius * cy.radius - s * s));
        const Vec3 lateral = cy.axis_dir.cross(pl.normal).normalized();
        if (offset < 1e-12) {
            CandidateCurve c;
            c.geometry = LineGeom{foot, cy.axis_dir};
            res.curves.push_back(std::move(c));
            return res;
        }
        for (double sign : {-1.0, 1.0}) {
            CandidateCurve c;
            c.geometry = LineGeom{foot + sign * offset * lateral, cy.axis_dir};
            res.curves.push_back(std::move(c));
        }
        return res;
    }
    res.needs_numeric = true; // oblique section (ellipse)
    return res;
}

} // namespace detail

/// Closed-form intersection for the pairs that admit one; oblique
/// plane-cylinder sections and all cylinder-cylinder / cylinder-sphere
/// pairs set `needs_numeric` instead. Coincident surfaces set `coincident`
/// and produce no curve. `face_a`/`face_b` are stamped on every candidate.
inline IntersectResult intersect_primitives(const Primitive& a, const Primitive& b,
                                            int face_a = -1, int face_b = -1) {
    validate(a);
    validate(b);
    IntersectResult res;
    if (primitives_coincident(a, b)) {
        res.coincident = true;
        return res;
    }
    const auto ka = a.kind();
    const auto kb = b.kind();
    using K = PrimitiveKind;
    if (ka == K::Plane && kb == K::Plane) res = detail::plane_plane(a, b);
    else if (ka == K::Plane && kb == K::Sphere) res = detail::plane_sphere(a, b);
    else if (ka == K::Sphere && kb == K::Plane) res = detail::plane_sphere(b, a);
    else if (ka == K::Sphere && kb == K::Sphere) res = detail::sphere_sphere(a, b);
    else if (ka == K::Plane && kb == K::Cylinder) res = detail::plane_cylinder(a, b);
    else if (ka == K::Cylinder && kb == K::Plane) res = detail::plane_cylinder(b, a);
    else res.needs_numeric = true; // cylinder-cylinder, cylinder-sphere

    for (CandidateCurve& c : res.curves) c.source_faces = {face_a, face_b};
    return res;
}

} // namespace brepfit
