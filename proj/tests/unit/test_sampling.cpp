// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "brepfit/metrics/sampling.hpp"
#include "brepfit/synth/shapes.hpp"

#include <cmath>

using namespace brepfit;

namespace {

/// Plane face at z=0 with a square outer loop (side 1) and a circular hole
/// (radius 0.2) around the origin.
BRepModel plate_with_hole() {
    BRepModel model;
    const double h = 0.5;
    model.corners = {Vec3(-h, -h, 0), Vec3(h, -h, 0), Vec3(h, h, 0), Vec3(-h, h, 0)};
    for (int k = 0; k < 4; ++k) {
        const Vec3& a = model.corners[k];
        const Vec3& b = model.corners[(k + 1) % 4];
        CurveSegment seg;
        seg.geometry = LineGeom{a, (b - a).normalized()};
        seg.t_lo = 0.0;
        seg.t_hi = (b - a).norm();
        seg.endpoint_corners = {k, (k + 1) % 4};
        seg.faces = {0, -1};
        model.edges.push_back(seg);
    }
    CurveSegment hole;
    hole.geometry = CircleGeom{Vec3::Zero(), Vec3::UnitZ(), 0.2};
    hole.t_lo = 0.0;
    hole.t_hi = 2.0 * M_PI;
    hole.closed = true;
    hole.faces = {0, -1};
    model.edges.push_back(hole);

    BRepFace face;
    face.primitive.surface = PlaneGeom{Vec3::UnitZ(), 0.0};
    FaceLoop outer;
    for (int k = 0; k < 4; ++k) outer.entries.push_back(LoopEntry{k, false});
    FaceLoop inner;
    inner.entries.push_back(LoopEntry{4, false});
    face.loops = {outer, inner};
    model.faces.push_back(face);
    return model;
}

} // namespace

TEST_CASE("plate with hole: samples avoid the hole and stay in the square",
          "[sampling]") {
    const BRepModel model = plate_with_hole();
    REQUIRE_NOTHROW(validate(model));
    const auto pts = sample_face_points(model, 0, 2000, 7);
    REQUIRE(pts.size() == 2000);
    for (const Vec3& p : pts) {
        REQUIRE(std::abs(p.z()) < 1e-12);
        REQUIRE(std::abs(p.x()) <= 0.5 + 1e-9);
        REQUIRE(std::abs(p.y()) <= 0.5 + 1e-9);
        // The 64-gon sampling of the hole loop shrinks it by cos(pi/64).
        REQUIRE(std::hypot(p.x(), p.y()) >= 0.2 * std::cos(M_PI / 64) - 1e-12);
    }

    // Deterministic for a fixed seed, different for another.
    const auto again = sample_face_points(model, 0, 2000, 7);
    REQUIRE(pts.size() == again.size());
    for (std::size_t i = 0; i < pts.size(); ++i) REQUIRE(pts[i] == again[i]);
    const auto other = sample_face_points(model, 0, 2000, 8);
    REQUIRE(pts[0] != other[0]);
}

TEST_CASE("cylinder model samples satisfy the surface implicits", "[sampling]") {
    const double r = 0.4, height = 1.2;
    const BRepModel model = synth::cylinder_caps_brep(r, height);
    const PatchSet set = sample_brep_surface(model, 500, 3);
    REQUIRE(set.size() == 3);
    REQUIRE(set[0].size() == 500);

    for (const Vec3& p : set[0]) { // side
        REQUIRE(std::abs(std::hypot(p.x(), p.y()) - r) < 1e-9);
        REQUIRE(std::abs(p.z()) <= 0.5 * height + 1e-9);
    }
    for (int cap = 0; cap < 2; ++cap)
        for (const Vec3& p : set[1 + cap]) {
            REQUIRE(std::abs(p.z() - (cap == 0 ? 0.6 : -0.6)) < 1e-9);
            REQUIRE(std::hypot(p.x(), p.y()) <= r + 1e-9);
        }
}

TEST_CASE("cube model samples lie on their faces inside bounds", "[sampling]") {
    const BRepModel model = synth::cube_brep(Vec3::Zero(), 1.0);
    const PatchSet set = sample_brep_surface(model, 800, 5);
    REQUIRE(set.size() == 6);
    for (int f = 0; f < 6; ++f) {
        REQUIRE(set[f].size() == 800);
        for (const Vec3& p : set[f]) {
            REQUIRE(distance(model.faces[f].primitive, p) < 1e-9);
            REQUIRE(p.cwiseAbs().maxCoeff() <= 0.5 + 1e-9);
        }
    }
}

TEST_CASE("untrimmed sphere face falls back to a full covering", "[sampling]") {
    BRepModel model;
    BRepFace face;
    face.primitive.surface = SphereGeom{Vec3(0.1, 0.2, 0.3), 0.7};
    model.faces.push_back(face);
    const auto pts = sample_face_points(model, 0, 600, 1);
    REQUIRE(pts.size() == 600);
    Vec3 mean = Vec3::Zero();
    for (const Vec3& p : pts) {
        REQUIRE(std::abs((p - Vec3(0.1, 0.2, 0.3)).norm() - 0.7) < 1e-12);
        mean += p;
    }
    mean /= 600.0;
    REQUIRE((mean - Vec3(0.1, 0.2, 0.3)).norm() < 0.05); // covers all sides
}

TEST_CASE("edge sampling is uniform in parameter and on-curve", "[sampling]") {
    const BRepModel model = synth::cylinder_caps_brep(0.3, 1.0);
    const auto pts = sample_brep_edges(model, 256);
    REQUIRE(pts.size() == 2 * 256);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double z = i < 256 ? 0.5 : -0.5;
        REQUIRE(std::abs(pts[i].z() - z) < 1e-12);
        REQUIRE(std::abs(std::hypot(pts[i].x(), pts[i].y()) - 0.3) < 1e-12);
    }
}
