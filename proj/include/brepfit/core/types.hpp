// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Shared geometric and pipeline value types. Everything here is an immutable
// value after construction; all free functions are pure.

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "brepfit/core/error.hpp"

namespace brepfit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Sentinel patch id for points no segmentation stage claimed.
inline constexpr int kUnlabeled = -1;

// ---------------------------------------------------------------------------
// LabeledPointCloud
// ---------------------------------------------------------------------------

/// Point cloud with optional unit normals, per-point patch instance ids and a
/// per-point edge value in [0,1]. `normals` is either empty or one entry per
/// point; the same holds for `patch_id` and `edge_flag` (missing labels are
/// materialized as kUnlabeled / 0 by the readers).
struct LabeledPointCloud {
    std::vector<Vec3> points;
    std::vector<Vec3> normals;    // empty or points.size()
    std::vector<int> patch_id;    // empty or points.size(); kUnlabeled allowed
    std::vector<double> edge_flag; // empty or points.size(); values in [0,1]

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    bool has_normals() const { return !normals.empty(); }
    bool has_patch_ids() const { return !patch_id.empty(); }
    bool has_edge_flags() const { return !edge_flag.empty(); }

    /// Number of distinct non-negative patch ids. Assumes compacted ids.
    int patch_count() const {
        int max_id = -1;
        for (int id : patch_id) max_id = std::max(max_id, id);
        return max_id + 1;
    }
};

/// Remaps patch ids so the used non-negative ids become the contiguous set
/// {0..K-1} (ascending by original id); kUnlabeled is preserved.
inline void compact_patch_ids(LabeledPointCloud& cloud) {
    if (!cloud.has_patch_ids()) return;
    std::map<int, int> remap;
    for (int id : cloud.patch_id)
        if (id >= 0) remap.emplace(id, 0);
    int next = 0;
    for (auto& [old_id, new_id] : remap) new_id = next++;
    for (int& id : cloud.patch_id)
        if (id >= 0) id = remap[id];
}

/// Indices of points whose edge flag is >= 0.5 (the edge-point convention
/// used for trimming and edge metrics).
inline std::vector<int> edge_point_indices(const LabeledPointCloud& cloud) {
    std::vector<int> out;
    for (std::size_t i = 0; i < cloud.edge_flag.size(); ++i)
        if (cloud.edge_flag[i] >= 0.5) out.push_back(static_cast<int>(i));
    return out;
}

/// Throws if per-point array sizes disagree or normals are not unit length.
inline void validate(const LabeledPointCloud& cloud) {
    const std::size_t n = cloud.points.size();
    if (!cloud.normals.empty() && cloud.normals.size() != n)
        throw Error("cloud: normals size mismatch");
    if (!cloud.patch_id.empty() && cloud.patch_id.size() != n)
        throw Error("cloud: patch_id size mismatch");
    if (!cloud.edge_flag.empty() && cloud.edge_flag.size() != n)
        throw Error("cloud: edge_flag size mismatch");
    for (const Vec3& nrm : cloud.normals)
        if (std::abs(nrm.norm() - 1.0) > 1e-6)
            throw Error("cloud: non-unit normal");
    for (double e : cloud.edge_flag)
        if (!(e >= 0.0 && e <= 1.0))
            throw Error("cloud: edge flag outside [0,1]");
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

enum class PrimitiveKind : std::uint8_t { Plane = 0, Cylinder = 1, Sphere = 2 };

inline const char* to_string(PrimitiveKind k) {
    switch (k) {
    case PrimitiveKind::Plane: return "plane";
    case PrimitiveKind::Cylinder: return "cylinder";
    case PrimitiveKind::Sphere: return "sphere";
    }
    return "?";
}

/// n·x = d with |n| = 1.
struct PlaneGeom {
    Vec3 normal;
    double offset = 0.0;
};

/// Points at distance `radius` from the line {axis_point + t axis_dir}.
struct CylinderGeom {
    Vec3 axis_point;
    Vec3 axis_dir; // unit
    double radius = 0.0;
};

struct SphereGeom {
    Vec3 center;
    double radius = 0.0;
};

/// Tagged parametric surface plus the fit statistics of the patch it came from.
struct Primitive {
    std::variant<PlaneGeom, CylinderGeom, SphereGeom> surface;
    int inlier_count = 0;
    double rms_residual = 0.0;

    PrimitiveKind kind() const {
        return static_cast<PrimitiveKind>(surface.index());
    }
    const PlaneGeom& plane() const { return std::get<PlaneGeom>(surface); }
    const CylinderGeom& cylinder() const { return std::get<CylinderGeom>(surface); }
    const SphereGeom& sphere() const { return std::get<SphereGeom>(surface); }
};

/// Flips a direction so its first component with magnitude above 1e-12 is
/// positive. Gives planes/cylinder axes a comparable canonical sign.
inline bool needs_sign_flip(const Vec3& v) {
    for (int i = 0; i < 3; ++i) {
        if (std::abs(v[i]) > 1e-12) return v[i] < 0.0;
    }
    return false;
}

inline Primitive canonicalized(Primitive p) {
    if (p.kind() == PrimitiveKind::Plane) {
        auto& pl = std::get<PlaneGeom>(p.surface);
        pl.normal.normalize();
        if (needs_sign_flip(pl.normal)) {
            pl.normal = -pl.normal;
            pl.offset = -pl.offset;
        }
    } else if (p.kind() == PrimitiveKind::Cylinder) {
        auto& cy = std::get<CylinderGeom>(p.surface);
        cy.axis_dir.normalize();
        if (needs_sign_flip(cy.axis_dir)) cy.axis_dir = -cy.axis_dir;
        // Axis point pinned to the plane through the origin orthogonal to the
        // axis, so equal cylinders compare equal.
        cy.axis_point -= cy.axis_dir.dot(cy.axis_point) * cy.axis_dir;
    }
    return p;
}

/// Signed implicit value: zero on the surface, gradient is unit where defined.
inline double implicit_value(const Primitive& p, const Vec3& x) {
    switch (p.kind()) {
    case PrimitiveKind::Plane:
        return p.plane().normal.dot(x) - p.plane().offset;
    case PrimitiveKind::Cylinder: {
        const auto& cy = p.cylinder();
        const Vec3 w = x - cy.axis_point;
        return (w - w.dot(cy.axis_dir) * cy.axis_dir).norm() - cy.radius;
    }
    case PrimitiveKind::Sphere:
        return (x - p.sphere().center).norm() - p.sphere().radius;
    }
    return 0.0;
}

/// Unsigned distance from x to the surface.
inline double distance(const Primitive& p, const Vec3& x) {
    return std::abs(implicit_value(p, x));
}

/// Gradient of implicit_value. Undefined on a cylinder axis or a sphere
/// center; returns a zero vector there.
inline Vec3 implicit_gradient(const Primitive& p, const Vec3& x) {
    switch (p.kind()) {
    case PrimitiveKind::Plane:
        return p.plane().normal;
    case PrimitiveKind::Cylinder: {
        const auto& cy = p.cylinder();
        const Vec3 w = x - cy.axis_point;
        const Vec3 q = w - w.dot(cy.axis_dir) * cy.axis_dir;
        const double rho = q.norm();
        return rho > 1e-14 ? Vec3(q / rho) : Vec3::Zero();
    }
    case PrimitiveKind::Sphere: {
        const Vec3 w = x - p.sphere().center;
        const double r = w.norm();
        return r > 1e-14 ? Vec3(w / r) : Vec3::Zero();
    }
    }
    return Vec3::Zero();
}

/// Closest point on the surface. For degenerate queries (axis/center) an
/// arbitrary but deterministic direction is used.
inline Vec3 project_to_surface(const Primitive& p, const Vec3& x) {
    switch (p.kind()) {
    case PrimitiveKind::Plane:
        return x - implicit_value(p, x) * p.plane().normal;
    case PrimitiveKind::Cylinder: {
        const auto& cy = p.cylinder();
        const Vec3 w = x - cy.axis_point;
        const double h = w.dot(cy.axis_dir);
        Vec3 q = w - h * cy.axis_dir;
        double rho = q.norm();
        if (rho < 1e-14) {
            q = cy.axis_dir.unitOrthogonal();
            rho = 1.0;
        }
        return cy.axis_point + h * cy.axis_dir + (cy.radius / rho) * q;
    }
    case PrimitiveKind::Sphere: {
        const auto& sp = p.sphere();
        Vec3 w = x - sp.center;
        double r = w.norm();
        if (r < 1e-14) {
            w = Vec3::UnitX();
            r = 1.0;
        }
        return sp.center + (sp.radius / r) * w;
    }
    }
    return x;
}

/// True when a and b describe the same surface within `tol` (compared on
/// canonicalized parameters).
inline bool primitives_coincident(const Primitive& a, const Primitive& b,
                                  double tol = 1e-6) {
    if (a.kind() != b.kind()) return false;
    const Primitive ca = canonicalized(a);
    const Primitive cb = canonicalized(b);
    switch (ca.kind()) {
    case PrimitiveKind::Plane:
        return (ca.plane().normal - cb.plane().normal).norm() < tol &&
               std::abs(ca.plane().offset - cb.plane().offset) < tol;
    case PrimitiveKind::Cylinder:
        return (ca.cylinder().axis_dir - cb.cylinder().axis_dir).norm() < tol &&
               (ca.cylinder().axis_point - cb.cylinder().axis_point).norm() < tol &&
               std::abs(ca.cylinder().radius - cb.cylinder().radius) < tol;
    case PrimitiveKind::Sphere:
        return (ca.sphere().center - cb.sphere().center).norm() < tol &&
               std::abs(ca.sphere().radius - cb.sphere().radius) < tol;
    }
    return false;
}

/// Throws unless unit vectors are unit, radii positive.
inline void validate(const Primitive& p) {
    switch (p.kind()) {
    case PrimitiveKind::Plane:
        if (std::abs(p.plane().normal.norm() - 1.0) > 1e-9)
            throw Error("primitive: non-unit plane normal");
        break;
    case PrimitiveKind::Cylinder:
        if (std::abs(p.cylinder().axis_dir.norm() - 1.0) > 1e-9)
            throw Error("primitive: non-unit cylinder axis");
        if (!(p.cylinder().radius > 0.0))
            throw Error("primitive: non-positive cylinder radius");
        break;
    case PrimitiveKind::Sphere:
        if (!(p.sphere().radius > 0.0))
            throw Error("primitive: non-positive sphere radius");
        break;
    }
}

// ---------------------------------------------------------------------------
// Curves
// ---------------------------------------------------------------------------

/// point(t) = point + t * dir, |dir| = 1, t in length units.
struct LineGeom {
    Vec3 point;
    Vec3 dir; // unit
};

/// point(t) = center + radius*(cos t * e1 + sin t * e2) where (e1,e2) is the
/// deterministic in-plane frame from circle_frame(). t is the angle in
/// radians measured from e1.
struct CircleGeom {
    Vec3 center;
    Vec3 normal; // unit
    double radius = 0.0;
};

/// Cubic Bezier with the Bernstein basis; t in [0,1].
struct BezierGeom {
    std::array<Vec3, 4> ctrl;
};

using CurveGeometry = std::variant<LineGeom, CircleGeom, BezierGeom>;

enum class CurveKind : std::uint8_t { Line = 0, Circle = 1, Bezier = 2 };

inline CurveKind curve_kind(const CurveGeometry& g) {
    return static_cast<CurveKind>(g.index());
}

inline const char* to_string(CurveKind k) {
    switch (k) {
    case CurveKind::Line: return "line";
    case CurveKind::Circle: return "circle";
    case CurveKind::Bezier: return "bezier";
    }
    return "?";
}

/// Deterministic in-plane frame for a unit axis: e1 is the normalized
/// projection of global +x onto the orthogonal plane, or of +y when the axis
/// is within ~25 degrees of +x. e2 completes the right-handed frame.
inline std::pair<Vec3, Vec3> plane_frame(const Vec3& axis) {
    const Vec3 ref =
        std::abs(axis.dot(Vec3::UnitX())) <= 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 e1 = (ref - ref.dot(axis) * axis).normalized();
    const Vec3 e2 = axis.cross(e1);
    return {e1, e2};
}

inline std::pair<Vec3, Vec3> circle_frame(const CircleGeom& c) {
    return plane_frame(c.normal);
}

inline Vec3 curve_point(const CurveGeometry& g, double t) {
    if (const auto* ln = std::get_if<LineGeom>(&g)) return ln->point + t * ln->dir;
    if (const auto* ci = std::get_if<CircleGeom>(&g)) {
        const auto [e1, e2] = circle_frame(*ci);
        return ci->center + ci->radius * (std::cos(t) * e1 + std::sin(t) * e2);
    }
    const auto& b = std::get<BezierGeom>(g).ctrl;
    const double s = 1.0 - t;
    return s * s * s * b[0] + 3.0 * s * s * t * b[1] + 3.0 * s * t * t * b[2] +
           t * t * t * b[3];
}

/// Bernstein-basis evaluation of a cubic Bezier. t must lie in [0,1].
inline Vec3 bezier_point(const std::array<Vec3, 4>& ctrl, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw Error("bezier_point: parameter outside [0,1]");
    return curve_point(BezierGeom{ctrl}, t);
}

/// d point / d t.
inline Vec3 curve_derivative(const CurveGeometry& g, double t) {
    if (const auto* ln = std::get_if<LineGeom>(&g)) {
        (void)t;
        return ln->dir;
    }
    if (const auto* ci = std::get_if<CircleGeom>(&g)) {
        const auto [e1, e2] = circle_frame(*ci);
        return ci->radius * (-std::sin(t) * e1 + std::cos(t) * e2);
    }
    const auto& b = std::get<BezierGeom>(g).ctrl;
    const double s = 1.0 - t;
    return 3.0 * s * s * (b[1] - b[0]) + 6.0 * s * t * (b[2] - b[1]) +
           3.0 * t * t * (b[3] - b[2]);
}

/// Analytic curve restricted to [t_lo, t_hi], with optional corner indices at
/// its endpoints and the pair of faces it separates. `support_polyline` keeps
/// the traced points a Bezier edge was fitted to (used when an endpoint is
/// snapped); it is transient and never serialized.
struct CurveSegment {
    CurveGeometry geometry;
    double t_lo = 0.0;
    double t_hi = 0.0;
    int support_count = 0;
    std::array<int, 2> endpoint_corners{-1, -1};
    bool closed = false;
    std::array<int, 2> faces{-1, -1};
    std::vector<Vec3> support_polyline;

    Vec3 start() const { return curve_point(geometry, t_lo); }
    Vec3 end() const { return curve_point(geometry, t_hi); }
    double span() const { return t_hi - t_lo; }
};

inline void validate(const CurveSegment& seg) {
    if (!(seg.t_lo < seg.t_hi)) throw Error("segment: empty parameter range");
    switch (curve_kind(seg.geometry)) {
    case CurveKind::Circle:
        if (seg.span() > 2.0 * M_PI + 1e-9)
            throw Error("segment: circle span exceeds full turn");
        break;
    case CurveKind::Bezier:
        if (seg.t_lo < -1e-12 || seg.t_hi > 1.0 + 1e-12)
            throw Error("segment: bezier range outside [0,1]");
        break;
    case CurveKind::Line:
        break;
    }
}

// ---------------------------------------------------------------------------
// B-rep model
// ---------------------------------------------------------------------------

/// One directed use of an edge inside a boundary loop.
struct LoopEntry {
    int edge = -1;
    bool reversed = false;
};

/// Ordered cycle of edges bounding a face. `closed` is false only for the
/// open chains reported on non-watertight faces.
struct FaceLoop {
    std::vector<LoopEntry> entries;
    bool closed = true;
};

struct BRepFace {
    Primitive primitive;
    std::vector<FaceLoop> loops;
    bool watertight = true;
};

/// Corners, trimmed edges, trimmed faces and their incidence. Edge->face
/// adjacency lives on each edge's `faces` pair.
struct BRepModel {
    std::vector<Vec3> corners;
    std::vector<CurveSegment> edges;
    std::vector<BRepFace> faces;

    bool empty() const { return faces.empty() && edges.empty(); }

    /// edge index -> (face, face) incidence map.
    std::vector<std::array<int, 2>> adjacency() const {
        std::vector<std::array<int, 2>> adj;
        adj.reserve(edges.size());
        for (const CurveSegment& e : edges) adj.push_back(e.faces);
        return adj;
    }
};

/// Structural validation: all indices in range, loops are connected cycles.
inline void validate(const BRepModel& model) {
    const int nc = static_cast<int>(model.corners.size());
    const int ne = static_cast<int>(model.edges.size());
    const int nf = static_cast<int>(model.faces.size());
    for (const CurveSegment& e : model.edges) {
        validate(e);
        for (int c : e.endpoint_corners)
            if (c != -1 && (c < 0 || c >= nc))
                throw Error("brep: edge references missing corner");
        for (int f : e.faces)
            if (f != -1 && (f < 0 || f >= nf))
                throw Error("brep: edge references missing face");
    }
    for (const BRepFace& face : model.faces) {
        validate(face.primitive);
        for (const FaceLoop& loop : face.loops) {
            for (const LoopEntry& entry : loop.entries)
                if (entry.edge < 0 || entry.edge >= ne)
                    throw Error("brep: loop references missing edge");
            if (!loop.closed) continue;
            const std::size_t n = loop.entries.size();
            if (n == 1) {
                const CurveSegment& e = model.edges[loop.entries[0].edge];
                if (!e.closed &&
                    e.endpoint_corners[0] != e.endpoint_corners[1])
                    throw Error("brep: single-edge loop on an open edge");
                continue;
            }
            for (std::size_t i = 0; i < n; ++i) {
                const LoopEntry& cur = loop.entries[i];
                const LoopEntry& nxt = loop.entries[(i + 1) % n];
                const CurveSegment& ec = model.edges[cur.edge];
                const CurveSegment& en = model.edges[nxt.edge];
                const int tail = cur.reversed ? ec.endpoint_corners[0]
                                              : ec.endpoint_corners[1];
                const int head = nxt.reversed ? en.endpoint_corners[1]
                                              : en.endpoint_corners[0];
                if (tail == -1 || tail != head)
                    throw Error("brep: loop edges do not share a corner");
            }
        }
    }
}

} // namespace brepfit
