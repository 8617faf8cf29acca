// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end reconstruction: labeled cloud in, trimmed B-rep out. The run
// normalizes the cloud to the unit box (every distance threshold in the
// config is expressed there), estimates normals when the input has none,
// fits one primitive per labeled patch, aligns near-parallel cap normals to
// cylinder axes, intersects all primitive pairs (closed forms first, marched
// traces plus cubic fits for the rest), trims candidates against the edge-
// flagged points, clusters corner candidates, assembles the topology, and
// maps the model back to input coordinates. Per-patch fitting and per-pair
// intersection run in parallel; every result lands in an index-addressed
// slot, so the output is identical for any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "brepfit/assembly/assembly.hpp"
#include "brepfit/core/normalize.hpp"
#include "brepfit/core/normals.hpp"
#include "brepfit/core/parallel.hpp"
#include "brepfit/fitting/ransac.hpp"
#include "brepfit/intersect/bezier_fit.hpp"
#include "brepfit/intersect/corners.hpp"
#include "brepfit/intersect/intersect.hpp"
#include "brepfit/intersect/trace.hpp"
#include "brepfit/intersect/trim.hpp"
#include "brepfit/pipeline/config.hpp"

namespace brepfit {

/// Neighborhood size for normal estimation when the input has no normals.
inline constexpr int kNormalNeighbors = 16;

/// Cap normals within this angle of a cylinder axis snap onto it.
inline constexpr double kAxisSnapAngle = 0.01; // radians

struct FitReport {
    std::vector<std::string> stages; // one line per pipeline stage
    std::string summary;             // "N faces, M edges, K corners"
    int patches = 0;
    int planes = 0;
    int cylinders = 0;
    int spheres = 0;
    std::size_t candidates = 0;
    std::size_t traced = 0;
    std::size_t segments = 0;
    std::size_t corners = 0;
};

struct FitResult {
    BRepModel model;               // input coordinates
    SimilarityTransform transform; // the normalization that was applied
    std::vector<PrimitiveFit> fits; // per patch, unit-box frame
    std::vector<int> fit_patch_ids; // source patch id per fit
    std::vector<int> non_watertight_faces;
    FitReport report;
};

namespace detail {

[[noreturn]] inline void stage_fail(const std::string& stage,
                                    const std::string& what) {
    throw PipelineError("stage " + stage + ": " + what);
}

/// Maps unit-box geometry back to input coordinates: positions through the
/// inverse similarity, lengths (radii, line parameters) by 1/scale, angular
/// and normalized parameters unchanged.
inline BRepModel denormalize_model(BRepModel model,
                                   const SimilarityTransform& t) {
    const double inv = 1.0 / t.scale;
    for (Vec3& c : model.corners) c = t.invert(c);
    for (CurveSegment& e : model.edges) {
        if (auto* ln = std::get_if<LineGeom>(&e.geometry)) {
            ln->point = t.invert(ln->point);
            e.t_lo *= inv;
            e.t_hi *= inv;
        } else if (auto* ci = std::get_if<CircleGeom>(&e.geometry)) {
            ci->center = t.invert(ci->center);
            ci->radius *= inv;
        } else if (auto* bz = std::get_if<BezierGeom>(&e.geometry)) {
            for (Vec3& c : bz->ctrl) c = t.invert(c);
        }
        e.support_polyline.clear(); // working data, meaningful only per run
    }
    for (BRepFace& f : model.faces) {
        if (auto* pl = std::get_if<PlaneGeom>(&f.primitive.surface)) {
            pl->offset = pl->offset * inv - pl->normal.dot(t.translation);
        } else if (auto* cy = std::get_if<CylinderGeom>(&f.primitive.surface)) {
            cy->axis_point = t.invert(cy->axis_point);
            cy->radius *= inv;
        } else if (auto* sp = std::get_if<SphereGeom>(&f.primitive.surface)) {
            sp->center = t.invert(sp->center);
            sp->radius *= inv;
        }
    }
    return model;
}

/// Snaps plane normals lying within kAxisSnapAngle of a fitted cylinder axis
/// onto that axis and re-centers the plane on its inliers. Cap planes fitted
/// from thin noisy disks tilt by a few milliradians; the cylinder axis is
/// the better-conditioned estimate, and exact alignment turns the cap/barrel
/// intersections into exact circles. Returns how many planes moved.
inline int align_caps_to_axes(std::vector<PrimitiveFit>& fits,
                              const std::vector<std::vector<Vec3>>& patch_pts) {
    const double cos_snap = std::cos(kAxisSnapAngle);
    int snapped = 0;
    for (std::size_t i = 0; i < fits.size(); ++i) {
        if (fits[i].primitive.kind() != PrimitiveKind::Plane) continue;
        PlaneGeom plane = fits[i].primitive.plane();
        for (const PrimitiveFit& other : fits) {
            if (other.primitive.kind() != PrimitiveKind::Cylinder) continue;
            const Vec3 axis = other.primitive.cylinder().axis_dir;
            const double align = plane.normal.dot(axis);
            if (std::abs(align) < cos_snap) continue;
            const Vec3 snapped_normal = align >= 0.0 ? axis : Vec3(-axis);
            double offset_sum = 0.0;
            for (int idx : fits[i].inlier_indices)
                offset_sum += snapped_normal.dot(patch_pts[i][idx]);
            plane.normal = snapped_normal;
            plane.offset = offset_sum /
                           static_cast<double>(fits[i].inlier_indices.size());
            fits[i].primitive.surface = plane;
            fits[i].primitive = canonicalized(fits[i].primitive);
            ++snapped;
            break;
        }
    }
    return snapped;
}

} // namespace detail

/// Runs the full reconstruction. Throws PipelineError with a stage-tagged
/// message on any stage failure ("stage fit: ...", "stage assemble: ...").
inline FitResult run_fit_pipeline(const LabeledPointCloud& cloud,
                                  const PipelineConfig& cfg, int threads = 1) {
    validate(cfg);
    validate(cloud);

    FitResult result;
    FitReport& report = result.report;
    const auto stage_line = [&](const std::string& line) {
        report.stages.push_back(line);
    };

    // --- normalize ------------------------------------------------------
    std::vector<int> patch_ids;
    if (cloud.has_patch_ids())
        for (int id : cloud.patch_id)
            if (id >= 0) patch_ids.push_back(id);
    std::sort(patch_ids.begin(), patch_ids.end());
    patch_ids.erase(std::unique(patch_ids.begin(), patch_ids.end()),
                    patch_ids.end());
    if (patch_ids.empty())
        detail::stage_fail("normalize", "no labeled patches in the input");
    report.patches = static_cast<int>(patch_ids.size());

    LabeledPointCloud norm;
    try {
        auto [c, t] = normalize_cloud(cloud);
        norm = std::move(c);
        result.transform = t;
    } catch (const Error& e) {
        detail::stage_fail("normalize", e.what());
    }
    {
        std::ostringstream line;
        line << "normalize: " << norm.size() << " points, " << report.patches
             << " patches, scale " << result.transform.scale;
        stage_line(line.str());
    }

    // --- normals ----------------------------------------------------------
    if (norm.normals.empty()) {
        try {
            norm = estimate_normals(norm, kNormalNeighbors);
        } catch (const Error& e) {
            detail::stage_fail("normals", e.what());
        }
        stage_line("normals: estimated (k=" + std::to_string(kNormalNeighbors) +
                   ")");
    } else {
        stage_line("normals: provided by the input");
    }

    // --- fit --------------------------------------------------------------
    std::vector<std::vector<Vec3>> patch_pts(patch_ids.size());
    std::vector<std::vector<Vec3>> patch_normals(patch_ids.size());
    {
        std::map<int, std::size_t> slot;
        for (std::size_t k = 0; k < patch_ids.size(); ++k)
            slot[patch_ids[k]] = k;
        for (std::size_t i = 0; i < norm.size(); ++i) {
            if (norm.patch_id[i] < 0) continue;
            const std::size_t k = slot[norm.patch_id[i]];
            patch_pts[k].push_back(norm.points[i]);
            patch_normals[k].push_back(norm.normals[i]);
        }
    }

    RansacConfig ransac = cfg.ransac;
    ransac.seed ^= cfg.seed; // the global seed perturbs every random stage
    result.fits.resize(patch_ids.size());
    result.fit_patch_ids = patch_ids;
    try {
        parallel_for(patch_ids.size(), threads, [&](std::size_t k) {
            try {
                result.fits[k] = select_primitive(
                    patch_pts[k], patch_normals[k], ransac,
                    static_cast<std::uint64_t>(patch_ids[k]));
            } catch (const Error& e) {
                throw PipelineError("stage fit: patch " +
                                    std::to_string(patch_ids[k]) + ": " +
                                    e.what());
            }
        });
    } catch (const PipelineError&) {
        throw;
    } catch (const Error& e) {
        detail::stage_fail("fit", e.what());
    }
    for (const PrimitiveFit& f : result.fits) {
        switch (f.primitive.kind()) {
        case PrimitiveKind::Plane: ++report.planes; break;
        case PrimitiveKind::Cylinder: ++report.cylinders; break;
        case PrimitiveKind::Sphere: ++report.spheres; break;
        }
    }
    {
        std::ostringstream line;
        line << "fit: " << report.planes << " planes, " << report.cylinders
             << " cylinders, " << report.spheres << " spheres";
        stage_line(line.str());
    }

    // --- align ------------------------------------------------------------
    const int snapped = detail::align_caps_to_axes(result.fits, patch_pts);
    stage_line("align: " + std::to_string(snapped) + " cap normals snapped");

    // --- intersect ---------------------------------------------------------
    // Edge points grouped by patch slot; a candidate curve only ever trims
    // against the edge points of its own two patches.
    std::vector<std::vector<Vec3>> patch_edges(patch_ids.size());
    std::size_t edge_point_count = 0;
    {
        std::map<int, std::size_t> slot;
        for (std::size_t k = 0; k < patch_ids.size(); ++k)
            slot[patch_ids[k]] = k;
        if (norm.has_edge_flags()) {
            for (std::size_t i = 0; i < norm.size(); ++i) {
                if (norm.patch_id[i] < 0 || norm.edge_flag[i] < 0.5) continue;
                patch_edges[slot[norm.patch_id[i]]].push_back(norm.points[i]);
                ++edge_point_count;
            }
        }
    }

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < result.fits.size(); ++i)
        for (std::size_t j = i + 1; j < result.fits.size(); ++j)
            pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));

    std::vector<std::vector<CandidateCurve>> pair_curves(pairs.size());
    std::vector<std::size_t> pair_traced(pairs.size(), 0);
    try {
        parallel_for(pairs.size(), threads, [&](std::size_t p) {
            const auto [i, j] = pairs[p];
            IntersectResult res = intersect_primitives(
                result.fits[i].primitive, result.fits[j].primitive, i, j);
            if (res.coincident) return;
            if (res.needs_numeric) {
                // Seed the marcher from this pair's edge points (thinned).
                std::vector<Vec3> seeds;
                const auto add_seeds = [&](const std::vector<Vec3>& pts) {
                    const std::size_t step = std::max<std::size_t>(
                        1, pts.size() / 32);
                    for (std::size_t s = 0; s < pts.size(); s += step)
                        seeds.push_back(pts[s]);
                };
                add_seeds(patch_edges[i]);
                add_seeds(patch_edges[j]);
                if (seeds.empty()) return;
                for (const TracedCurve& traced :
                     trace_intersection_numeric(result.fits[i].primitive,
                                                result.fits[j].primitive,
                                                std::move(seeds))) {
                    if (traced.points.size() < 4) continue;
                    ++pair_traced[p];
                    for (BezierPiece& piece :
                         fit_bezier(traced.points,
                                    0.5 * cfg.trim.projection_threshold)) {
                        CandidateCurve c;
                        c.geometry = piece.geometry;
                        c.source_faces = {i, j};
                        c.is_analytic = false;
                        c.support_polyline = std::move(piece.support);
                        pair_curves[p].push_back(std::move(c));
                    }
                }
            } else {
                pair_curves[p] = std::move(res.curves);
            }
        });
    } catch (const Error& e) {
        detail::stage_fail("intersect", e.what());
    }

    std::vector<CandidateCurve> candidates;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        report.traced += pair_traced[p];
        for (CandidateCurve& c : pair_curves[p])
            candidates.push_back(std::move(c));
    }
    report.candidates = candidates.size();
    {
        std::ostringstream line;
        line << "intersect: " << report.candidates << " candidate curves ("
             << report.traced << " traced)";
        stage_line(line.str());
    }

    // --- trim ---------------------------------------------------------------
    std::vector<CurveSegment> segments;
    try {
        for (const CandidateCurve& curve : candidates) {
            std::vector<Vec3> edge_pts = patch_edges[curve.source_faces[0]];
            edge_pts.insert(edge_pts.end(),
                            patch_edges[curve.source_faces[1]].begin(),
                            patch_edges[curve.source_faces[1]].end());
            const auto projections =
                project_edge_points(curve, edge_pts, cfg.trim);
            for (CurveSegment& seg :
                 extract_segments(projections, curve, cfg.trim))
                segments.push_back(std::move(seg));
        }
    } catch (const Error& e) {
        detail::stage_fail("trim", e.what());
    }
    report.segments = segments.size();
    {
        std::ostringstream line;
        line << "trim: " << report.segments << " segments from "
             << edge_point_count << " edge points";
        stage_line(line.str());
    }

    // --- corners -------------------------------------------------------------
    std::vector<Vec3> corners;
    std::size_t corner_candidate_count = 0;
    try {
        const std::vector<Vec3> raw =
            corner_candidates(result.fits, segments, cfg.trim);
        corner_candidate_count = raw.size();
        corners = cluster_corners(raw, cfg.trim);
    } catch (const Error& e) {
        detail::stage_fail("corners", e.what());
    }
    report.corners = corners.size();
    {
        std::ostringstream line;
        line << "corners: " << report.corners << " corners from "
             << corner_candidate_count << " candidates";
        stage_line(line.str());
    }

    // --- assemble -------------------------------------------------------------
    AssemblyResult assembled;
    try {
        assembled = assemble_brep(norm, result.fits, std::move(segments),
                                  corners, cfg.assembly);
    } catch (const Error& e) {
        detail::stage_fail("assemble", e.what());
    }
    result.non_watertight_faces = std::move(assembled.non_watertight_faces);
    {
        std::ostringstream line;
        const std::size_t faces = assembled.model.faces.size();
        line << "assemble: " << faces << " faces, "
             << assembled.model.edges.size() << " edges, "
             << assembled.model.corners.size() << " corners; "
             << faces - result.non_watertight_faces.size() << "/" << faces
             << " watertight";
        stage_line(line.str());
    }

    // --- denormalize ------------------------------------------------------------
    result.model =
        detail::denormalize_model(std::move(assembled.model), result.transform);
    {
        std::ostringstream line;
        line << result.model.faces.size() << " faces, "
             << result.model.edges.size() << " edges, "
             << result.model.corners.size() << " corners";
        report.summary = line.str();
    }
    return result;
}

} // namespace brepfit
