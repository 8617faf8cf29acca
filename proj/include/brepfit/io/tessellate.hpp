// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Triangle-mesh previews of B-rep models. Each face is triangulated in its
// parameter chart, trimmed against its boundary loops:
//   - plane faces: the densified loop polygons are triangulated exactly by
//     ear clipping, holes bridged into the outer loop first;
//   - cylinder faces whose loops do not wrap the seam: the same, on the
//     unwrapped (arc length, height) chart; full barrels (two seam-wrapping
//     loops) become a seam-cut strip between the boundary chains, with any
//     non-wrapping loops removed as holes;
//   - sphere faces: ear clipping in the stereographic chart, then midpoint
//     refinement so interior triangles follow the curvature; loop-free
//     watertight sphere faces become a latitude/longitude sphere.
// Non-watertight faces (open or missing loops) are tessellated to their
// untrimmed support region and reported in `warnings`. Model edges are
// exported as polylines alongside the triangles.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "brepfit/core/face_domain.hpp"
#include "brepfit/io/text.hpp"

namespace brepfit {

/// Indexed triangles plus edge polylines, as written to OBJ. Vertices are
/// not welded across faces; this is a preview mesh, not a solid.
struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::vector<Vec3>> edge_polylines;
    std::vector<std::string> warnings;
};

namespace detail {

// ---------------------------------------------------------------------------
// 2D polygon machinery
// ---------------------------------------------------------------------------

inline double tri_cross(const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

inline double polygon_area2(const std::vector<Vec2>& poly) {
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        a += p.x() * q.y() - q.x() * p.y();
    }
    return a;
}

inline double polygons_scale(const std::vector<std::vector<Vec2>>& polys) {
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (const auto& poly : polys)
        for (const Vec2& v : poly) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    if (lo.x() > hi.x()) return 1.0;
    return std::max((hi - lo).norm(), 1e-12);
}

/// Drops consecutive duplicates and straight-through collinear vertices so
/// densified straight edges collapse back to their endpoints.
inline std::vector<Vec2> simplify_polygon(const std::vector<Vec2>& poly, double scale) {
    const double eps_len = 1e-9 * scale;
    const double eps_area = 1e-12 * scale * scale;
    std::vector<Vec2> out;
    for (const Vec2& v : poly)
        if (out.empty() || (v - out.back()).norm() > eps_len) out.push_back(v);
    while (out.size() >= 2 && (out.front() - out.back()).norm() <= eps_len)
        out.pop_back();
    bool changed = true;
    while (changed && out.size() > 3) {
        changed = false;
        const std::size_t n = out.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& prev = out[(i + n - 1) % n];
            const Vec2& cur = out[i];
            const Vec2& next = out[(i + 1) % n];
            if (std::abs(tri_cross(prev, cur, next)) <= eps_area &&
                (cur - prev).dot(next - cur) > 0.0) {
                out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return out;
}

inline bool point_in_tri_strict(const Vec2& p, const Vec2& a, const Vec2& b,
                                const Vec2& c, double eps) {
    const double d1 = tri_cross(a, b, p);
    const double d2 = tri_cross(b, c, p);
    const double d3 = tri_cross(c, a, p);
    return (d1 > eps && d2 > eps && d3 > eps) ||
           (d1 < -eps && d2 < -eps && d3 < -eps);
}

/// Splices one hole (CW) into the outer polygon (CCW) through a bridge to a
/// mutually visible vertex. Returns false when the hole lies outside.
inline bool merge_hole(std::vector<Vec2>& outer, const std::vector<Vec2>& hole,
                       double scale) {
    if (hole.size() < 3 || outer.size() < 3) return false;
    const double eps = 1e-12 * scale * scale;

    std::size_t mi = 0;
    for (std::size_t i = 1; i < hole.size(); ++i)
        if (hole[i].x() > hole[mi].x()) mi = i;
    const Vec2 m = hole[mi];

    // Closest +x ray hit on the outer boundary.
    double best_x = std::numeric_limits<double>::max();
    std::size_t best_edge = outer.size();
    const std::size_t n = outer.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = outer[i];
        const Vec2& b = outer[(i + 1) % n];
        if ((a.y() > m.y()) == (b.y() > m.y())) continue;
        const double t = (m.y() - a.y()) / (b.y() - a.y());
        const double x = a.x() + t * (b.x() - a.x());
        if (x >= m.x() - 1e-9 * scale && x < best_x) {
            best_x = x;
            best_edge = i;
        }
    }
    if (best_edge == n) return false;

    const Vec2 hit(best_x, m.y());
    std::size_t pi = outer[best_edge].x() > outer[(best_edge + 1) % n].x()
                         ? best_edge
                         : (best_edge + 1) % n;
    // Another outer vertex inside triangle (m, hit, candidate) would make
    // the bridge cross the boundary; reroute to the one most aligned with +x.
    double best_angle = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < n; ++i) {
        if (i == pi) continue;
        if (!point_in_tri_strict(outer[i], m, hit, outer[pi], eps)) continue;
        const Vec2 d = outer[i] - m;
        const double angle = std::abs(std::atan2(d.y(), d.x()));
        if (angle < best_angle) {
            best_angle = angle;
            pi = i;
        }
    }

    std::vector<Vec2> merged;
    merged.reserve(outer.size() + hole.size() + 2);
    merged.insert(merged.end(), outer.begin(),
                  outer.begin() + static_cast<std::ptrdiff_t>(pi) + 1);
    for (std::size_t k = 0; k <= hole.size(); ++k)
        merged.push_back(hole[(mi + k) % hole.size()]);
    merged.push_back(outer[pi]);
    merged.insert(merged.end(), outer.begin() + static_cast<std::ptrdiff_t>(pi) + 1,
                  outer.end());
    outer = std::move(merged);
    return true;
}

/// Ear clipping of a CCW polygon (bridged holes allowed). `clean` reports
/// whether every triangle came from a genuine ear; a fan fallback clears it.
inline std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2>& poly,
                                                double scale, bool& clean) {
    clean = true;
    std::vector<std::array<int, 3>> tris;
    if (poly.size() < 3) return tris;
    const double eps = 1e-12 * scale * scale;

    std::vector<int> idx(poly.size());
    std::iota(idx.begin(), idx.end(), 0);
    while (idx.size() > 3) {
        const std::size_t k = idx.size();
        bool clipped = false;
        for (std::size_t i = 0; i < k && !clipped; ++i) {
            const int ia = idx[(i + k - 1) % k];
            const int ib = idx[i];
            const int ic = idx[(i + 1) % k];
            if (tri_cross(poly[ia], poly[ib], poly[ic]) <= eps) continue;
            bool blocked = false;
            for (const int j : idx) {
                if (j == ia || j == ib || j == ic) continue;
                if (point_in_tri_strict(poly[j], poly[ia], poly[ib], poly[ic], eps)) {
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
            tris.push_back({ia, ib, ic});
            idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
            clipped = true;
        }
        if (clipped) continue;
        // No convex ear: drop one degenerate (zero-area) vertex if present.
        for (std::size_t i = 0; i < k && !clipped; ++i) {
            const int ia = idx[(i + k - 1) % k];
            const int ib = idx[i];
            const int ic = idx[(i + 1) % k];
            if (std::abs(tri_cross(poly[ia], poly[ib], poly[ic])) <= eps) {
                idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
                clipped = true;
            }
        }
        if (!clipped) {
            clean = false;
            for (std::size_t i = 1; i + 1 < idx.size(); ++i)
                tris.push_back({idx[0], idx[i], idx[i + 1]});
            return tris;
        }
    }
    if (idx.size() == 3) tris.push_back({idx[0], idx[1], idx[2]});
    return tris;
}

/// Orients the largest-area loop CCW as the outer boundary, the rest CW as
/// holes, and bridges them into one polygon. Loops the bridge step cannot
/// reach (disjoint regions) are dropped with a warning.
inline std::vector<Vec2> build_region_polygon(std::vector<std::vector<Vec2>> polys,
                                              double scale,
                                              std::vector<std::string>& warnings,
                                              const std::string& label) {
    std::size_t outer = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < polys.size(); ++i) {
        const double a = std::abs(polygon_area2(polys[i]));
        if (a > best) {
            best = a;
            outer = i;
        }
    }
    std::vector<Vec2> region = std::move(polys[outer]);
    if (polygon_area2(region) < 0.0) std::reverse(region.begin(), region.end());

    std::vector<std::vector<Vec2>> holes;
    for (std::size_t i = 0; i < polys.size(); ++i) {
        if (i == outer || polys[i].size() < 3) continue;
        if (polygon_area2(polys[i]) > 0.0)
            std::reverse(polys[i].begin(), polys[i].end());
        holes.push_back(std::move(polys[i]));
    }
    std::sort(holes.begin(), holes.end(), [](const auto& a, const auto& b) {
        const auto max_x = [](const std::vector<Vec2>& p) {
            double m = std::numeric_limits<double>::lowest();
            for (const Vec2& v : p) m = std::max(m, v.x());
            return m;
        };
        return max_x(a) > max_x(b);
    });
    for (const auto& hole : holes)
        if (!merge_hole(region, hole, scale))
            warnings.push_back(label + ": boundary loop outside the outer loop; dropped");
    return region;
}

// ---------------------------------------------------------------------------
// Chart-space emission helpers
// ---------------------------------------------------------------------------

/// Quadrisects triangles (chart-space midpoints) `rounds` times, then maps
/// chart points onto the surface and appends everything to the mesh.
inline void emit_refined(const SurfaceChart& chart, std::vector<Vec2> pts,
                         std::vector<std::array<int, 3>> tris, int rounds,
                         TriangleMesh& mesh) {
    for (int r = 0; r < rounds; ++r) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int id = static_cast<int>(pts.size());
            pts.push_back(0.5 * (pts[a] + pts[b]));
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& t : tris) {
            const int ab = mid(t[0], t[1]);
            const int bc = mid(t[1], t[2]);
            const int ca = mid(t[2], t[0]);
            next.push_back({t[0], ab, ca});
            next.push_back({ab, t[1], bc});
            next.push_back({ca, bc, t[2]});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }
    const int base = static_cast<int>(mesh.vertices.size());
    for (const Vec2& uv : pts) mesh.vertices.push_back(chart.to_surface(uv));
    for (const auto& t : tris)
        mesh.triangles.push_back({base + t[0], base + t[1], base + t[2]});
}

inline int refine_rounds_for(const std::vector<Vec2>& pts,
                             const std::vector<std::array<int, 3>>& tris,
                             double target) {
    double longest = 0.0;
    for (const auto& t : tris)
        for (int k = 0; k < 3; ++k)
            longest = std::max(longest, (pts[t[k]] - pts[t[(k + 1) % 3]]).norm());
    if (longest <= target || target <= 0.0) return 0;
    const int rounds = static_cast<int>(std::ceil(std::log2(longest / target)));
    return std::clamp(rounds, 0, 4);
}

/// Regular grid over a chart rectangle, mapped through the chart.
inline void emit_grid(const SurfaceChart& chart, const Vec2& lo, const Vec2& hi,
                      int nu, int nv, TriangleMesh& mesh) {
    const int base = static_cast<int>(mesh.vertices.size());
    for (int j = 0; j <= nv; ++j)
        for (int i = 0; i <= nu; ++i) {
            const Vec2 uv(lo.x() + (hi.x() - lo.x()) * i / nu,
                          lo.y() + (hi.y() - lo.y()) * j / nv);
            mesh.vertices.push_back(chart.to_surface(uv));
        }
    const auto at = [&](int i, int j) { return base + j * (nu + 1) + i; };
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            mesh.triangles.push_back({at(i, j), at(i + 1, j), at(i + 1, j + 1)});
            mesh.triangles.push_back({at(i, j), at(i + 1, j + 1), at(i, j + 1)});
        }
}

inline void emit_latlong_sphere(const SphereGeom& g, int density, TriangleMesh& mesh) {
    const int stacks = std::max(4, density / 4);
    const int slices = std::max(8, density / 2);
    const int base = static_cast<int>(mesh.vertices.size());
    for (int s = 0; s <= stacks; ++s) {
        const double phi = M_PI * s / stacks;
        for (int k = 0; k <= slices; ++k) {
            const double theta = 2.0 * M_PI * k / slices;
            mesh.vertices.push_back(
                g.center + g.radius * Vec3(std::sin(phi) * std::cos(theta),
                                           std::sin(phi) * std::sin(theta),
                                           std::cos(phi)));
        }
    }
    const auto at = [&](int s, int k) { return base + s * (slices + 1) + k; };
    for (int s = 0; s < stacks; ++s)
        for (int k = 0; k < slices; ++k) {
            if (s > 0)
                mesh.triangles.push_back({at(s, k), at(s + 1, k), at(s, k + 1)});
            if (s + 1 < stacks)
                mesh.triangles.push_back({at(s, k + 1), at(s + 1, k), at(s + 1, k + 1)});
        }
}

/// Untrimmed support region: the chart bounding box of whatever boundary
/// samples exist (a default box when there are none), or the whole sphere.
inline void emit_untrimmed(const SurfaceChart& chart, const Primitive& primitive,
                           const std::vector<std::vector<Vec2>>& polys, int density,
                           TriangleMesh& mesh) {
    if (chart.kind() == PrimitiveKind::Sphere) {
        emit_latlong_sphere(primitive.sphere(), density, mesh);
        return;
    }
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::max());
    Vec2 hi = Vec2::Constant(std::numeric_limits<double>::lowest());
    for (const auto& poly : polys)
        for (const Vec2& v : poly) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    if (lo.x() > hi.x()) {
        lo = Vec2(-1.0, -1.0);
        hi = Vec2(1.0, 1.0);
    } else {
        const Vec2 pad = 0.05 * (hi - lo) + Vec2::Constant(1e-6);
        lo -= pad;
        hi += pad;
    }
    if (chart.periodic_u()) {
        lo.x() = 0.0;
        hi.x() = SurfaceChart::period();
    }
    const int cells = std::max(8, density / 4);
    emit_grid(chart, lo, hi, cells, cells, mesh);
}

/// Continuously unwrapped copy of a loop polygon on a periodic chart, plus
/// its winding number about the period.
struct UnwrappedLoop {
    std::vector<Vec2> pts;
    int winding = 0;
    double mean_u = 0.0;
    double mean_v = 0.0;
};

inline UnwrappedLoop unwrap_loop(const SurfaceChart& chart,
                                 const std::vector<Vec2>& poly) {
    UnwrappedLoop out;
    out.pts.reserve(poly.size());
    double prev_u = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const double u = i == 0 ? poly[i].x() : chart.unwrap_near(poly[i].x(), prev_u);
        out.pts.emplace_back(u, poly[i].y());
        out.mean_u += u;
        out.mean_v += poly[i].y();
        prev_u = u;
    }
    if (!poly.empty()) {
        out.mean_u /= static_cast<double>(poly.size());
        out.mean_v /= static_cast<double>(poly.size());
        const double closure = chart.unwrap_near(poly[0].x(), prev_u);
        out.winding = static_cast<int>(
            std::lround((closure - out.pts[0].x()) / SurfaceChart::period()));
    }
    return out;
}

/// Height of a seam-wrapping chain at angle `u` (first crossing wins; exact
/// for boundary circles perpendicular to the axis).
inline double chain_height_at(const std::vector<Vec2>& chain, double u) {
    const double period = SurfaceChart::period();
    const double u0 = chain.front().x();
    double q = u0 + std::fmod(u - u0, period);
    if (q < u0) q += period;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const double a = chain[i].x();
        const double b = chain[i + 1].x();
        if ((a - q) * (b - q) > 0.0) continue;
        if (std::abs(b - a) < 1e-15) return chain[i].y();
        return chain[i].y() + (q - a) / (b - a) * (chain[i + 1].y() - chain[i].y());
    }
    return chain.back().y();
}

/// Full cylinder barrel: a seam-cut strip between the two wrapping boundary
/// chains, with triangles whose centers fall inside a hole loop removed.
inline void emit_barrel_strip(const SurfaceChart& chart, UnwrappedLoop bottom,
                              UnwrappedLoop top,
                              const std::vector<std::vector<Vec2>>& holes,
                              int density, TriangleMesh& mesh) {
    for (UnwrappedLoop* chain : {&bottom, &top}) {
        if (chain->pts.size() >= 2 && chain->pts.back().x() < chain->pts.front().x())
            std::reverse(chain->pts.begin(), chain->pts.end());
        // Close the chain across the period so every angle has a crossing.
        chain->pts.emplace_back(chain->pts.front().x() + SurfaceChart::period(),
                                chain->pts.front().y());
    }
    const int nu = std::max(16, density);
    const int nv = std::max(1, density / 8);
    const double period = SurfaceChart::period();

    const int base = static_cast<int>(mesh.vertices.size());
    std::vector<Vec2> uv_grid;
    uv_grid.reserve(static_cast<std::size_t>(nu + 1) * (nv + 1));
    for (int j = 0; j <= nv; ++j)
        for (int i = 0; i <= nu; ++i) {
            const double u = period * i / nu;
            const double v_lo = chain_height_at(bottom.pts, u);
            const double v_hi = chain_height_at(top.pts, u);
            const Vec2 uv(u, v_lo + (v_hi - v_lo) * j / nv);
            uv_grid.push_back(uv);
            mesh.vertices.push_back(chart.to_surface(uv));
        }
    const auto at = [&](int i, int j) { return j * (nu + 1) + i; };
    const auto keep = [&](int a, int b, int c) {
        if (holes.empty()) return true;
        Vec2 centroid = (uv_grid[a] + uv_grid[b] + uv_grid[c]) / 3.0;
        centroid.x() = std::fmod(centroid.x(), period);
        return !point_in_loops(centroid, holes, true, period);
    };
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            const int a = at(i, j);
            const int b = at(i + 1, j);
            const int c = at(i + 1, j + 1);
            const int d = at(i, j + 1);
            if (keep(a, b, c))
                mesh.triangles.push_back({base + a, base + b, base + c});
            if (keep(a, c, d))
                mesh.triangles.push_back({base + a, base + c, base + d});
        }
}

inline void tessellate_face(const BRepModel& model, int face_index, int density,
                            TriangleMesh& mesh) {
    const BRepFace& face = model.faces[face_index];
    const SurfaceChart chart(face.primitive);
    const std::string label = "face " + std::to_string(face_index) + " (" +
                              to_string(face.primitive.kind()) + ")";

    bool loops_closed = !face.loops.empty();
    for (const FaceLoop& loop : face.loops)
        if (!loop.closed || loop.entries.empty()) loops_closed = false;

    const auto polys = face_loop_polygons(model, face_index, chart, density);

    if (!face.watertight || !loops_closed) {
        if (chart.kind() == PrimitiveKind::Sphere && face.loops.empty() &&
            face.watertight) {
            emit_latlong_sphere(face.primitive.sphere(), density, mesh);
            return;
        }
        mesh.warnings.push_back(label +
                                ": not watertight; tessellating the untrimmed "
                                "support region");
        emit_untrimmed(chart, face.primitive, polys, density, mesh);
        return;
    }

    switch (chart.kind()) {
    case PrimitiveKind::Plane: {
        const double scale = polygons_scale(polys);
        std::vector<std::vector<Vec2>> clean;
        for (const auto& poly : polys) {
            auto s = simplify_polygon(poly, scale);
            if (s.size() >= 3) clean.push_back(std::move(s));
        }
        if (clean.empty()) {
            mesh.warnings.push_back(label + ": degenerate trim loops; skipped");
            return;
        }
        const auto region = build_region_polygon(std::move(clean), scale,
                                                 mesh.warnings, label);
        bool ok = true;
        const auto tris = ear_clip(region, scale, ok);
        if (!ok) mesh.warnings.push_back(label + ": triangulation fell back to a fan");
        emit_refined(chart, region, tris, 0, mesh);
        return;
    }
    case PrimitiveKind::Sphere: {
        const double scale = polygons_scale(polys);
        std::vector<std::vector<Vec2>> clean;
        for (const auto& poly : polys) {
            auto s = simplify_polygon(poly, scale);
            if (s.size() >= 3) clean.push_back(std::move(s));
        }
        if (clean.empty()) {
            emit_latlong_sphere(face.primitive.sphere(), density, mesh);
            return;
        }
        const auto region = build_region_polygon(std::move(clean), scale,
                                                 mesh.warnings, label);
        bool ok = true;
        const auto tris = ear_clip(region, scale, ok);
        if (!ok) mesh.warnings.push_back(label + ": triangulation fell back to a fan");
        emit_refined(chart, region, tris,
                     refine_rounds_for(region, tris, scale / std::max(8, density / 4)),
                     mesh);
        return;
    }
    case PrimitiveKind::Cylinder: {
        // Work on the unwrapped chart, with angles scaled to arc length so
        // the two axes are commensurable.
        const double radius = face.primitive.cylinder().radius;
        std::vector<UnwrappedLoop> wrapping;
        std::vector<UnwrappedLoop> flat;
        for (const auto& poly : polys) {
            UnwrappedLoop u = unwrap_loop(chart, poly);
            if (u.winding == 0)
                flat.push_back(std::move(u));
            else
                wrapping.push_back(std::move(u));
        }

        if (wrapping.size() == 2) {
            if (wrapping[0].mean_v > wrapping[1].mean_v)
                std::swap(wrapping[0], wrapping[1]);
            std::vector<std::vector<Vec2>> holes;
            for (const UnwrappedLoop& loop : flat) {
                std::vector<Vec2> raw;
                raw.reserve(loop.pts.size());
                for (const Vec2& p : loop.pts) {
                    double u = std::fmod(p.x(), SurfaceChart::period());
                    if (u < 0.0) u += SurfaceChart::period();
                    raw.emplace_back(u, p.y());
                }
                holes.push_back(std::move(raw));
            }
            emit_barrel_strip(chart, std::move(wrapping[0]), std::move(wrapping[1]),
                              holes, density, mesh);
            return;
        }
        if (!wrapping.empty()) {
            mesh.warnings.push_back(label +
                                    ": unsupported seam-wrapping loop layout; "
                                    "tessellating the untrimmed support region");
            emit_untrimmed(chart, face.primitive, polys, density, mesh);
            return;
        }

        // Rebase every loop onto the branch of the largest loop, then scale
        // u to arc length and triangulate like a plane.
        std::size_t outer = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double a = std::abs(polygon_area2(flat[i].pts));
            if (a > best) {
                best = a;
                outer = i;
            }
        }
        std::vector<std::vector<Vec2>> arc;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            const double shift =
                SurfaceChart::period() *
                std::round((flat[outer].mean_u - flat[i].mean_u) / SurfaceChart::period());
            std::vector<Vec2> pts;
            pts.reserve(flat[i].pts.size());
            for (const Vec2& p : flat[i].pts)
                pts.emplace_back((p.x() + shift) * radius, p.y());
            arc.push_back(std::move(pts));
        }
        const double scale = polygons_scale(arc);
        std::vector<std::vector<Vec2>> clean;
        for (const auto& poly : arc) {
            auto s = simplify_polygon(poly, scale);
            if (s.size() >= 3) clean.push_back(std::move(s));
        }
        if (clean.empty()) {
            mesh.warnings.push_back(label + ": degenerate trim loops; skipped");
            return;
        }
        const auto region = build_region_polygon(std::move(clean), scale,
                                                 mesh.warnings, label);
        bool ok = true;
        auto tris = ear_clip(region, scale, ok);
        if (!ok) mesh.warnings.push_back(label + ": triangulation fell back to a fan");
        const int rounds = refine_rounds_for(
            region, tris, radius * SurfaceChart::period() / std::max(16, density));
        // Map arc-length u back to angle for the chart.
        std::vector<Vec2> uv;
        uv.reserve(region.size());
        for (const Vec2& p : region) uv.emplace_back(p.x() / radius, p.y());
        emit_refined(chart, uv, tris, rounds, mesh);
        return;
    }
    }
}

} // namespace detail

/// Triangulates every face as described in the header comment and samples
/// every edge into a polyline. `density` is the number of samples per
/// boundary edge and the angular resolution of periodic sweeps.
inline TriangleMesh tessellate(const BRepModel& model, int density = 48) {
    validate(model);
    TriangleMesh mesh;
    const int d = std::max(density, 8);
    for (int f = 0; f < static_cast<int>(model.faces.size()); ++f)
        detail::tessellate_face(model, f, d, mesh);
    for (const CurveSegment& e : model.edges) {
        std::vector<Vec3> line;
        line.reserve(static_cast<std::size_t>(d) + 1);
        for (int k = 0; k <= d; ++k)
            line.push_back(curve_point(e.geometry, e.t_lo + e.span() * k / d));
        mesh.edge_polylines.push_back(std::move(line));
    }
    return mesh;
}

/// Wavefront OBJ: triangle vertices and faces first, then each edge
/// polyline as its own vertex run plus an 'l' record.
inline void write_obj(const TriangleMesh& mesh, std::ostream& out) {
    out << "# brepfit tessellation\n";
    for (const Vec3& v : mesh.vertices)
        out << "v " << detail::format_g17(v.x()) << ' ' << detail::format_g17(v.y())
            << ' ' << detail::format_g17(v.z()) << '\n';
    for (const auto& t : mesh.triangles)
        out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
    int next = static_cast<int>(mesh.vertices.size());
    for (const auto& line : mesh.edge_polylines) {
        for (const Vec3& v : line)
            out << "v " << detail::format_g17(v.x()) << ' '
                << detail::format_g17(v.y()) << ' ' << detail::format_g17(v.z())
                << '\n';
        out << "l";
        for (std::size_t k = 0; k < line.size(); ++k) out << ' ' << ++next;
        out << '\n';
    }
}

inline void write_obj(const TriangleMesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_obj(mesh, out);
    if (!out) throw Error("write failed: " + path);
}

} // namespace brepfit
