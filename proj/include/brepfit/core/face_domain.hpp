// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Trimmed face domains: boundary loops densified into chart-space polygons,
// plus the containment test shared by surface sampling and tessellation.

#pragma once

#include <vector>

#include "brepfit/core/charts.hpp"
#include "brepfit/core/types.hpp"

namespace brepfit {

/// Densifies one face's boundary loops into closed chart polygons. Each
/// edge contributes `samples_per_edge` points walked in loop direction; the
/// shared endpoint of consecutive edges appears once. Open (non-closed)
/// loops are returned as-is and only make sense for diagnostics.
inline std::vector<std::vector<Vec2>>
face_loop_polygons(const BRepModel& model, int face_index,
                   const SurfaceChart& chart, int samples_per_edge = 64) {
    const BRepFace& face = model.faces[face_index];
    std::vector<std::vector<Vec2>> polys;
    for (const FaceLoop& loop : face.loops) {
        std::vector<Vec2> poly;
        for (const LoopEntry& entry : loop.entries) {
            const CurveSegment& seg = model.edges[entry.edge];
            for (int k = 0; k < samples_per_edge; ++k) {
                // Last sample of each edge coincides with the next edge's
                // first; skip it to keep the polygon simple.
                const double frac = static_cast<double>(k) / samples_per_edge;
                const double t =
                    entry.reversed ? seg.t_hi - frac * seg.span()
                                   : seg.t_lo + frac * seg.span();
                poly.push_back(chart.to_chart(curve_point(seg.geometry, t)));
            }
        }
        if (!poly.empty()) polys.push_back(std::move(poly));
    }
    return polys;
}

/// Containment in the trimmed face domain. An untrimmed sphere face is the
/// whole sphere; untrimmed planes and cylinders are unbounded, so nothing
/// is inside them.
inline bool point_in_face(const SurfaceChart& chart,
                          const std::vector<std::vector<Vec2>>& polys,
                          const Vec2& uv) {
    if (polys.empty()) return chart.kind() == PrimitiveKind::Sphere;
    return point_in_loops(uv, polys, chart.periodic_u(), SurfaceChart::period());
}

} // namespace brepfit
