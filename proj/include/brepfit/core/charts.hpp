// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// 2D parameter charts over the supported surfaces. Loop assembly,
// tessellation, and surface sampling all share these mappings so trim
// decisions agree across the pipeline.

#pragma once

#include <cmath>
#include <numbers>

#include "brepfit/core/types.hpp"

namespace brepfit {

/// Chart over one primitive surface.
///  - Plane: orthonormal in-plane coordinates, lengths preserved.
///  - Cylinder: (theta, h); theta is periodic with period 2*pi and measures
///    angle about the axis from the deterministic axis frame, h is the
///    coordinate along the axis. Distances in theta scale by the radius.
///  - Sphere: stereographic projection from a pole; the pole should face
///    away from the data so trim loops stay bounded.
class SurfaceChart {
public:
    explicit SurfaceChart(const Primitive& p, const Vec3& pole_hint = Vec3::Zero())
        : kind_(p.kind()) {
        switch (kind_) {
        case PrimitiveKind::Plane: {
            const PlaneGeom& g = p.plane();
            origin_ = g.normal * g.offset;
            axis_ = g.normal;
            std::tie(e1_, e2_) = plane_frame(axis_);
            break;
        }
        case PrimitiveKind::Cylinder: {
            const CylinderGeom& g = p.cylinder();
            origin_ = g.axis_point;
            axis_ = g.axis_dir;
            radius_ = g.radius;
            std::tie(e1_, e2_) = plane_frame(axis_);
            break;
        }
        case PrimitiveKind::Sphere: {
            const SphereGeom& g = p.sphere();
            origin_ = g.center;
            radius_ = g.radius;
            // Pole opposite the hint keeps the data region away from the
            // projection singularity. Zero hint picks -z.
            Vec3 hint = pole_hint;
            if (hint.norm() < 1e-12) hint = Vec3(0.0, 0.0, 1.0);
            axis_ = -hint.normalized();
            std::tie(e1_, e2_) = plane_frame(axis_);
            break;
        }
        }
    }

    PrimitiveKind kind() const { return kind_; }
    bool periodic_u() const { return kind_ == PrimitiveKind::Cylinder; }
    static constexpr double period() { return 2.0 * std::numbers::pi; }

    /// 3D point -> chart coordinates. Cylinder theta lies in [0, 2*pi).
    Vec2 to_chart(const Vec3& x) const {
        switch (kind_) {
        case PrimitiveKind::Plane: {
            const Vec3 d = x - origin_;
            return Vec2(d.dot(e1_), d.dot(e2_));
        }
        case PrimitiveKind::Cylinder: {
            const Vec3 d = x - origin_;
            const double h = d.dot(axis_);
            const Vec3 q = d - h * axis_;
            double theta = std::atan2(q.dot(e2_), q.dot(e1_));
            if (theta < 0.0) theta += period();
            return Vec2(theta, h);
        }
        case PrimitiveKind::Sphere: {
            Vec3 d = x - origin_;
            const double len = d.norm();
            if (len < 1e-14) return Vec2(0.0, 0.0);
            d /= len;
            // Stereographic from the pole at axis_ onto the equator plane.
            const double w = d.dot(axis_);
            const double denom = 1.0 - w;
            if (denom < 1e-12) return Vec2(1e9, 1e9); // at the pole
            return Vec2(d.dot(e1_) / denom, d.dot(e2_) / denom);
        }
        }
        return Vec2::Zero();
    }

    /// Chart coordinates -> 3D point on the surface.
    Vec3 to_surface(const Vec2& uv) const {
        switch (kind_) {
        case PrimitiveKind::Plane:
            return origin_ + uv.x() * e1_ + uv.y() * e2_;
        case PrimitiveKind::Cylinder: {
            const Vec3 radial = std::cos(uv.x()) * e1_ + std::sin(uv.x()) * e2_;
            return origin_ + radius_ * radial + uv.y() * axis_;
        }
        case PrimitiveKind::Sphere: {
            const double s2 = uv.squaredNorm();
            const double denom = s2 + 1.0;
            const Vec3 d = (2.0 * uv.x() / denom) * e1_ + (2.0 * uv.y() / denom) * e2_ +
                           ((s2 - 1.0) / denom) * axis_;
            return origin_ + radius_ * d;
        }
        }
        return origin_;
    }

    /// Unwraps `u` to the copy nearest `ref` (cylinder charts only).
    double unwrap_near(double u, double ref) const {
        if (!periodic_u()) return u;
        while (u - ref > 0.5 * period()) u -= period();
        while (ref - u > 0.5 * period()) u += period();
        return u;
    }

    const Vec3& origin() const { return origin_; }
    const Vec3& axis() const { return axis_; }
    double radius() const { return radius_; }

private:
    PrimitiveKind kind_;
    Vec3 origin_ = Vec3::Zero();
    Vec3 axis_ = Vec3::UnitZ();
    Vec3 e1_ = Vec3::UnitX();
    Vec3 e2_ = Vec3::UnitY();
    double radius_ = 1.0;
};

/// Even-odd point-in-polygon on chart polygons. `polys` holds closed loops
/// as vertex lists (implicitly closed back to the front). On periodic
/// charts, crossings are counted on a ray in the +v direction with u
/// compared modulo the period, so loops that wrap the seam still test
/// correctly.
inline bool point_in_loops(const Vec2& q, const std::vector<std::vector<Vec2>>& polys,
                           bool periodic_u, double period = 2.0 * std::numbers::pi) {
    int crossings = 0;
    const auto wrap_delta = [&](double du) {
        if (!periodic_u) return du;
        du = std::fmod(du, period);
        if (du > 0.5 * period) du -= period;
        if (du < -0.5 * period) du += period;
        return du;
    };
    for (const auto& poly : polys) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = poly[i];
            const Vec2& b = poly[(i + 1) % n];
            // Segment endpoints relative to q in u, with periodic wrapping
            // applied consistently across the segment.
            const double ua = wrap_delta(a.x() - q.x());
            const double ub = ua + (periodic_u ? wrap_delta(b.x() - a.x())
                                               : (b.x() - a.x()));
            if ((ua > 0.0) == (ub > 0.0)) continue;
            const double t = ua / (ua - ub);
            const double v = a.y() + t * (b.y() - a.y());
            if (v > q.y()) ++crossings;
        }
    }
    return (crossings % 2) == 1;
}

} // namespace brepfit
