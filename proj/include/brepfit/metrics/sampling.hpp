// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic point sampling of B-rep faces and edges for the CAD
// metrics. Faces are sampled uniformly in their parameter chart, rejected
// against the trim loops; edges are sampled uniformly in parameter.

#pragma once

#include <vector>

#include "brepfit/core/face_domain.hpp"
#include "brepfit/core/rng.hpp"
#include "brepfit/metrics/metrics.hpp"

namespace brepfit {

/// Samples one face: up to `count` points uniform over the chart bounding
/// box of its trim loops, kept when inside the trimmed domain. An untrimmed
/// sphere face falls back to a golden-spiral covering of the whole sphere.
/// Rejection is capped, so a degenerate (zero-area) trim yields fewer
/// points rather than looping forever.
inline std::vector<Vec3> sample_face_points(const BRepModel& model,
                                            int face_index, int count,
                                            std::uint64_t seed,
                                            int samples_per_edge = 64) {
    const BRepFace& face = model.faces[face_index];
    const SurfaceChart chart(face.primitive);
    const auto polys = face_loop_polygons(model, face_index, chart, samples_per_edge);
    std::vector<Vec3> out;
    if (count < 1) return out;

    if (polys.empty()) {
        if (chart.kind() != PrimitiveKind::Sphere) return out; // unbounded
        const SphereGeom& g = model.faces[face_index].primitive.sphere();
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
            const double z = 1.0 - 2.0 * (k + 0.5) / count;
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden * k;
            out.push_back(g.center +
                          g.radius * Vec3(rho * std::cos(phi), rho * std::sin(phi), z));
        }
        return out;
    }

    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (const auto& poly : polys)
        for (const Vec2& v : poly) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    if (chart.periodic_u()) {
        // Wrapping loops cover every angle; use the full period.
        lo.x() = 0.0;
        hi.x() = SurfaceChart::period();
    }

    Rng rng = Rng::stream(seed, 0x5a5a0000ULL + static_cast<std::uint64_t>(face_index));
    const long max_attempts = 100L * count;
    for (long attempt = 0;
         attempt < max_attempts && static_cast<int>(out.size()) < count; ++attempt) {
        const Vec2 uv(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()));
        if (point_in_face(chart, polys, uv)) out.push_back(chart.to_surface(uv));
    }
    return out;
}

/// Per-face surface samples for the whole model.
inline PatchSet sample_brep_surface(const BRepModel& model, int per_face,
                                    std::uint64_t seed) {
    PatchSet set;
    for (int f = 0; f < static_cast<int>(model.faces.size()); ++f)
        set.push_back(sample_face_points(model, f, per_face, seed));
    return set;
}

/// Uniform-in-parameter samples along every edge (cell-centered, so closed
/// circles get no duplicate at the seam).
inline std::vector<Vec3> sample_brep_edges(const BRepModel& model, int per_edge) {
    std::vector<Vec3> out;
    for (const CurveSegment& e : model.edges)
        for (int k = 0; k < per_edge; ++k) {
            const double t = e.t_lo + e.span() * (k + 0.5) / per_edge;
            out.push_back(curve_point(e.geometry, t));
        }
    return out;
}

} // namespace brepfit
