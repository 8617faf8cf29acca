// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "brepfit/assembly/assembly.hpp"
#include "brepfit/core/charts.hpp"
#include "brepfit/core/types.hpp"

using namespace brepfit;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

Primitive plane_prim(const Vec3& n, double d, int inliers = 100) {
    Primitive p;
    p.surface = PlaneGeom{n.normalized(), d};
    p = canonicalized(p);
    p.inlier_count = inliers;
    return p;
}

Primitive cylinder_prim(const Vec3& ap, const Vec3& ad, double r,
                        int inliers = 100) {
    Primitive p;
    p.surface = CylinderGeom{ap, ad.normalized(), r};
    p = canonicalized(p);
    p.inlier_count = inliers;
    return p;
}

Primitive sphere_prim(const Vec3& c, double r, int inliers = 100) {
    Primitive p;
    p.surface = SphereGeom{c, r};
    p = canonicalized(p);
    p.inlier_count = inliers;
    return p;
}

PrimitiveFit fit_of(const Primitive& p) {
    PrimitiveFit f;
    f.primitive = p;
    f.inlier_ratio = 1.0;
    return f;
}

CurveSegment line_segment(const Vec3& a, const Vec3& b, int fa, int fb,
                          double t_lo = 0.01, double t_hi = -1.0) {
    CurveSegment seg;
    const Vec3 d = b - a;
    seg.geometry = LineGeom{a, d.normalized()};
    seg.t_lo = t_lo;
    seg.t_hi = t_hi < 0.0 ? d.norm() - 0.01 : t_hi;
    seg.support_count = 50;
    seg.faces = {fa, fb};
    return seg;
}

CurveSegment circle_segment(const Vec3& center, const Vec3& n, double r,
                            int fa, int fb, bool closed = true) {
    CurveSegment seg;
    seg.geometry = CircleGeom{center, n.normalized(), r};
    seg.t_lo = 0.0;
    seg.t_hi = 2.0 * M_PI;
    seg.closed = closed;
    seg.support_count = 50;
    seg.faces = {fa, fb};
    return seg;
}

LabeledPointCloud tiny_cloud() {
    LabeledPointCloud cloud;
    cloud.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
    return cloud;
}

/// Fixture for the unit cube [0,1]^3: 6 faces, 12 edges trimmed slightly
/// short of the 8 exact vertices.
struct CubeFixture {
    std::vector<PrimitiveFit> fits;
    std::vector<CurveSegment> segments;
    std::vector<Vec3> corners;

    // Faces: 0 x=0, 1 x=1, 2 y=0, 3 y=1, 4 z=0, 5 z=1.
    explicit CubeFixture(std::vector<int> weak = {}) {
        for (int axis = 0; axis < 3; ++axis)
            for (int side = 0; side < 2; ++side) {
                Vec3 n = Vec3::Zero();
                n[axis] = 1.0;
                const int idx = 2 * axis + side;
                const bool is_weak =
                    std::find(weak.begin(), weak.end(), idx) != weak.end();
                fits.push_back(fit_of(plane_prim(
                    n, static_cast<double>(side), is_weak ? 10 : 100)));
            }
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                for (int z = 0; z < 2; ++z)
                    corners.push_back(Vec3(x, y, z)); // already lex sorted
        // Edges along x: faces (y, z); along y: faces (x, z); along z: (x, y).
        for (int y = 0; y < 2; ++y)
            for (int z = 0; z < 2; ++z)
                segments.push_back(line_segment(Vec3(0, y, z), Vec3(1, y, z),
                                                2 + y, 4 + z));
        for (int x = 0; x < 2; ++x)
            for (int z = 0; z < 2; ++z)
                segments.push_back(line_segment(Vec3(x, 0, z), Vec3(x, 1, z),
                                                0 + x, 4 + z));
        for (int x = 0; x < 2; ++x)
            for (int y = 0; y < 2; ++y)
                segments.push_back(line_segment(Vec3(x, y, 0), Vec3(x, y, 1),
                                                0 + x, 2 + y));
    }
};

/// Flattened loop structure for determinism comparisons.
std::vector<int> loop_signature(const BRepModel& model) {
    std::vector<int> sig;
    for (const BRepFace& face : model.faces) {
        sig.push_back(-1);
        for (const FaceLoop& loop : face.loops) {
            sig.push_back(-2);
            sig.push_back(loop.closed ? 1 : 0);
            for (const LoopEntry& e : loop.entries) {
                sig.push_back(e.edge);
                sig.push_back(e.reversed ? 1 : 0);
            }
        }
    }
    return sig;
}

int loop_references(const BRepModel& model, int edge) {
    int n = 0;
    for (const BRepFace& face : model.faces)
        for (const FaceLoop& loop : face.loops)
            for (const LoopEntry& e : loop.entries)
                if (e.edge == edge) ++n;
    return n;
}

} // namespace

TEST_CASE("snap_endpoints moves line bounds to corner feet", "[assembly]") {
    std::vector<CurveSegment> segs{line_segment(Vec3(0, 0, 0), Vec3(1, 0, 0),
                                                0, 1, 0.05, 0.95)};
    const std::vector<Vec3> corners{Vec3(0.04, 0.012, 0.0),
                                    Vec3(0.96, -0.01, 0.0)};
    const auto out = snap_endpoints(segs, corners, AssemblyConfig{});
    REQUIRE(out.size() == 1);
    CHECK_THAT(out[0].t_lo, WithinAbs(0.04, 1e-15));
    CHECK_THAT(out[0].t_hi, WithinAbs(0.96, 1e-15));
    CHECK(out[0].endpoint_corners[0] == 0);
    CHECK(out[0].endpoint_corners[1] == 1);
    CHECK_FALSE(out[0].closed);
}

TEST_CASE("snap_endpoints prefers the lexicographically smaller corner on ties",
          "[assembly]") {
    std::vector<CurveSegment> segs{line_segment(Vec3(0, 0, 0), Vec3(1, 0, 0),
                                                0, 1, 0.005, 0.995)};
    // Both corners are exactly 0.01 from the segment start.
    const std::vector<Vec3> corners{Vec3(0.0, -0.01, 0.0),
                                    Vec3(0.0, 0.01, 0.0)};
    const auto out = snap_endpoints(segs, corners, AssemblyConfig{});
    CHECK(out[0].endpoint_corners[0] == 0);
    CHECK(out[0].endpoint_corners[1] == -1);
    CHECK_THAT(out[0].t_lo, WithinAbs(0.0, 1e-15));
}

TEST_CASE("snap_endpoints reverts a snap that would invert the range",
          "[assembly]") {
    // Both endpoints of a very short segment capture the same corner.
    std::vector<CurveSegment> segs{line_segment(Vec3(0, 0, 0), Vec3(1, 0, 0),
                                                0, 1, 0.0, 0.01)};
    const std::vector<Vec3> corners{Vec3(0.005, 0.015, 0.0)};
    const auto out = snap_endpoints(segs, corners, AssemblyConfig{});
    CHECK_THAT(out[0].t_lo, WithinAbs(0.0, 1e-15));
    CHECK_THAT(out[0].t_hi, WithinAbs(0.01, 1e-15));
    CHECK(out[0].endpoint_corners[0] == -1);
    CHECK(out[0].endpoint_corners[1] == -1);
}

TEST_CASE("snap_endpoints adjusts circle angles toward nearby corners",
          "[assembly]") {
    const Vec3 center(0.2, -0.1, 0.4);
    const Vec3 normal = Vec3(1, 2, 2).normalized();
    const double r = 0.3;
    CurveSegment seg;
    seg.geometry = CircleGeom{center, normal, r};
    seg.t_lo = 0.5;
    seg.t_hi = 2.0;
    seg.faces = {0, 1};
    const auto [e1, e2] = circle_frame(std::get<CircleGeom>(seg.geometry));
    auto at_angle = [&](double t) {
        return Vec3(center + r * (std::cos(t) * e1 + std::sin(t) * e2));
    };
    std::vector<Vec3> corners{at_angle(0.45), at_angle(2.06)};
    std::sort(corners.begin(), corners.end(), [](const Vec3& a, const Vec3& b) {
        return std::lexicographical_compare(a.data(), a.data() + 3, b.data(),
                                            b.data() + 3);
    });
    const auto out = snap_endpoints({seg}, corners, AssemblyConfig{});
    CHECK_THAT(out[0].t_lo, WithinAbs(0.45, 1e-9));
    CHECK_THAT(out[0].t_hi, WithinAbs(2.06, 1e-9));
    CHECK(out[0].endpoint_corners[0] >= 0);
    CHECK(out[0].endpoint_corners[1] >= 0);
    CHECK(out[0].endpoint_corners[0] != out[0].endpoint_corners[1]);
}

TEST_CASE("snap_endpoints closes a near-complete circle with free endpoints",
          "[assembly]") {
    const double r = 0.3;
    CurveSegment seg;
    seg.geometry = CircleGeom{Vec3(0, 0, 0), Vec3(0, 0, 1), r};
    seg.t_lo = 0.015;
    seg.t_hi = 2.0 * M_PI - 0.015; // endpoint gap chord ~0.009 < tolerance
    seg.faces = {0, 1};
    const auto out = snap_endpoints({seg}, {}, AssemblyConfig{});
    CHECK(out[0].closed);
    CHECK_THAT(out[0].t_hi - out[0].t_lo, WithinAbs(2.0 * M_PI, 1e-12));
}

TEST_CASE("snap_endpoints re-fits bezier interiors with pinned endpoints",
          "[assembly]") {
    BezierGeom truth;
    truth.ctrl = {Vec3(0, 0, 0), Vec3(0.3, 0.2, 0.0), Vec3(0.7, -0.2, 0.1),
                  Vec3(1, 0, 0)};
    CurveSegment seg;
    BezierGeom drifted = truth;
    drifted.ctrl[0] += Vec3(0.012, 0.0, 0.0); // fit drifted off the corner
    seg.geometry = drifted;
    seg.t_lo = 0.0;
    seg.t_hi = 1.0;
    seg.faces = {0, 1};
    for (int i = 0; i <= 200; ++i) {
        double b0, b1, b2, b3;
        detail::bernstein3(i / 200.0, b0, b1, b2, b3);
        seg.support_polyline.push_back(b0 * truth.ctrl[0] + b1 * truth.ctrl[1] +
                                       b2 * truth.ctrl[2] + b3 * truth.ctrl[3]);
    }
    const std::vector<Vec3> corners{Vec3(0, 0, 0), Vec3(1, 0, 0)};
    const auto out = snap_endpoints({seg}, corners, AssemblyConfig{});
    const auto& bz = std::get<BezierGeom>(out[0].geometry);
    CHECK((bz.ctrl[0] - corners[0]).norm() == 0.0);
    CHECK((bz.ctrl[3] - corners[1]).norm() == 0.0);
    CHECK((bz.ctrl[1] - truth.ctrl[1]).norm() < 5e-3);
    CHECK((bz.ctrl[2] - truth.ctrl[2]).norm() < 5e-3);
    CHECK(out[0].endpoint_corners[0] == 0);
    CHECK(out[0].endpoint_corners[1] == 1);
    // The refit curve stays close to the supporting polyline.
    double worst = 0.0;
    for (const Vec3& q : out[0].support_polyline) {
        const double t = detail::project_point(out[0].geometry, q, 0).t;
        worst = std::max(worst, (curve_point(out[0].geometry, t) - q).norm());
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("assemble_brep reconstructs the cube", "[assembly]") {
    const CubeFixture fx;
    const AssemblyConfig cfg;
    const auto result = assemble_brep(tiny_cloud(), fx.fits, fx.segments,
                                      fx.corners, cfg);
    const BRepModel& model = result.model;

    REQUIRE(model.faces.size() == 6);
    REQUIRE(model.edges.size() == 12);
    REQUIRE(model.corners.size() == 8);
    CHECK(result.non_watertight_faces.empty());

    for (const CurveSegment& e : model.edges) {
        CHECK(e.endpoint_corners[0] >= 0);
        CHECK(e.endpoint_corners[1] >= 0);
        CHECK_THAT(e.t_lo, WithinAbs(0.0, 1e-12));
        CHECK_THAT(e.t_hi, WithinAbs(1.0, 1e-12));
        CHECK(e.faces[0] >= 0);
        CHECK(e.faces[1] >= 0);
    }
    for (std::size_t f = 0; f < model.faces.size(); ++f) {
        const BRepFace& face = model.faces[f];
        CHECK(face.watertight);
        REQUIRE(face.loops.size() == 1);
        CHECK(face.loops[0].closed);
        REQUIRE(face.loops[0].entries.size() == 4);
        for (const LoopEntry& e : face.loops[0].entries) {
            const auto& faces = model.edges[e.edge].faces;
            CHECK((faces[0] == static_cast<int>(f) ||
                   faces[1] == static_cast<int>(f)));
        }
    }
    // Watertight: every edge is used by exactly two faces.
    for (int e = 0; e < 12; ++e) CHECK(loop_references(model, e) == 2);
    CHECK_NOTHROW(validate(model));

    // Same inputs, same model.
    const auto again = assemble_brep(tiny_cloud(), fx.fits, fx.segments,
                                     fx.corners, cfg);
    CHECK(loop_signature(model) == loop_signature(again.model));
    REQUIRE(again.model.edges.size() == 12);
    for (std::size_t e = 0; e < 12; ++e) {
        CHECK(model.edges[e].t_lo == again.model.edges[e].t_lo);
        CHECK(model.edges[e].t_hi == again.model.edges[e].t_hi);
    }
}

TEST_CASE("assemble_brep handles the capped cylinder", "[assembly]") {
    std::vector<PrimitiveFit> fits{
        fit_of(cylinder_prim(Vec3(0, 0, 0), Vec3(0, 0, 1), 0.3)),
        fit_of(plane_prim(Vec3(0, 0, 1), 0.0)),
        fit_of(plane_prim(Vec3(0, 0, 1), 1.0))};
    std::vector<CurveSegment> segments{
        circle_segment(Vec3(0, 0, 0), Vec3(0, 0, 1), 0.3, 0, 1),
        circle_segment(Vec3(0, 0, 1), Vec3(0, 0, 1), 0.3, 0, 2,
                       /*closed=*/false)};
    // The second rim arrives open but nearly complete; assembly closes it.
    segments[1].t_lo = 0.015;
    segments[1].t_hi = 2.0 * M_PI - 0.015;

    const auto result = assemble_brep(tiny_cloud(), fits, segments, {},
                                      AssemblyConfig{});
    const BRepModel& model = result.model;

    REQUIRE(model.faces.size() == 3);
    REQUIRE(model.edges.size() == 2);
    CHECK(model.corners.empty());
    CHECK(result.non_watertight_faces.empty());
    CHECK(model.edges[1].closed);
    CHECK_THAT(std::get<CircleGeom>(model.edges[0].geometry).radius,
               WithinAbs(0.3, 1e-15));

    REQUIRE(model.faces[0].loops.size() == 2); // both rims bound the barrel
    for (const FaceLoop& loop : model.faces[0].loops) {
        CHECK(loop.closed);
        CHECK(loop.entries.size() == 1);
    }
    for (int f = 1; f < 3; ++f) {
        REQUIRE(model.faces[f].loops.size() == 1);
        CHECK(model.faces[f].loops[0].closed);
    }
    CHECK_NOTHROW(validate(model));
}

TEST_CASE("assemble_brep orients plate-with-hole loops oppositely",
          "[assembly]") {
    std::vector<PrimitiveFit> fits{fit_of(plane_prim(Vec3(0, 0, 1), 0.0))};
    const std::vector<Vec3> corners{Vec3(-0.5, -0.5, 0), Vec3(-0.5, 0.5, 0),
                                    Vec3(0.5, -0.5, 0), Vec3(0.5, 0.5, 0)};
    std::vector<CurveSegment> segments{
        line_segment(Vec3(-0.5, -0.5, 0), Vec3(0.5, -0.5, 0), 0, -1),
        line_segment(Vec3(0.5, -0.5, 0), Vec3(0.5, 0.5, 0), 0, -1),
        line_segment(Vec3(0.5, 0.5, 0), Vec3(-0.5, 0.5, 0), 0, -1),
        line_segment(Vec3(-0.5, 0.5, 0), Vec3(-0.5, -0.5, 0), 0, -1),
        circle_segment(Vec3(0, 0, 0), Vec3(0, 0, 1), 0.2, 0, -1)};

    const auto result = assemble_brep(tiny_cloud(), fits, segments, corners,
                                      AssemblyConfig{});
    const BRepModel& model = result.model;
    REQUIRE(model.faces.size() == 1);
    REQUIRE(model.edges.size() == 5);
    CHECK(result.non_watertight_faces.empty());

    const BRepFace& face = model.faces[0];
    REQUIRE(face.loops.size() == 2);
    const SurfaceChart chart(face.primitive);
    double outer_area = 0.0;
    double hole_area = 0.0;
    for (const FaceLoop& loop : face.loops) {
        REQUIRE(loop.closed);
        const double area = detail::signed_area(
            detail::loop_polygon(loop, model.edges, chart));
        if (loop.entries.size() == 1)
            hole_area = area;
        else
            outer_area = area;
    }
    CHECK_THAT(std::abs(outer_area), WithinAbs(1.0, 1e-3));
    CHECK_THAT(std::abs(hole_area), WithinAbs(M_PI * 0.2 * 0.2, 1e-3));
    CHECK(outer_area > 0.0); // outer boundary runs counterclockwise
    CHECK(hole_area < 0.0);  // hole runs clockwise
}

TEST_CASE("build_face_loops separates loops sharing a corner", "[assembly]") {
    // Two unit squares meeting only at the origin corner. The
    // smallest-turn rule must close each square on itself instead of
    // crossing over at the shared corner.
    std::vector<PrimitiveFit> fits{fit_of(plane_prim(Vec3(0, 0, 1), 0.0))};
    const Vec3 S(0, 0, 0), A1(1, 0, 0), A2(1, 1, 0), A3(0, 1, 0);
    const Vec3 B1(0, -1, 0), B2(-1, -1, 0), B3(-1, 0, 0);
    std::vector<Vec3> corners{S, A1, A2, A3, B1, B2, B3};
    std::sort(corners.begin(), corners.end(), [](const Vec3& a, const Vec3& b) {
        return std::lexicographical_compare(a.data(), a.data() + 3, b.data(),
                                            b.data() + 3);
    });
    std::vector<CurveSegment> segments{
        line_segment(S, A1, 0, -1), line_segment(A1, A2, 0, -1),
        line_segment(A2, A3, 0, -1), line_segment(A3, S, 0, -1),
        line_segment(S, B1, 0, -1), line_segment(B1, B2, 0, -1),
        line_segment(B2, B3, 0, -1), line_segment(B3, S, 0, -1)};

    const auto result = assemble_brep(tiny_cloud(), fits, segments, corners,
                                      AssemblyConfig{});
    const BRepFace& face = result.model.faces.at(0);
    CHECK(face.watertight);
    REQUIRE(face.loops.size() == 2);
    for (const FaceLoop& loop : face.loops) {
        CHECK(loop.closed);
        REQUIRE(loop.entries.size() == 4);
        // Each loop stays within one square's edge range.
        const bool square_a = loop.entries[0].edge < 4;
        for (const LoopEntry& e : loop.entries)
            CHECK((e.edge < 4) == square_a);
    }
}

TEST_CASE("assemble_brep reports open faces on the ablated cube", "[assembly]") {
    // Cube without its z=1 face: the four side faces cannot close.
    std::vector<PrimitiveFit> fits;
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side) {
            if (axis == 2 && side == 1) continue;
            Vec3 n = Vec3::Zero();
            n[axis] = 1.0;
            fits.push_back(fit_of(plane_prim(n, side)));
        }
    // Face ids: 0 x=0, 1 x=1, 2 y=0, 3 y=1, 4 z=0.
    std::vector<Vec3> corners{Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0),
                              Vec3(1, 1, 0)};
    std::vector<CurveSegment> segments;
    for (int y = 0; y < 2; ++y)
        segments.push_back(
            line_segment(Vec3(0, y, 0), Vec3(1, y, 0), 2 + y, 4));
    for (int x = 0; x < 2; ++x)
        segments.push_back(
            line_segment(Vec3(x, 0, 0), Vec3(x, 1, 0), 0 + x, 4));
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            segments.push_back(
                line_segment(Vec3(x, y, 0), Vec3(x, y, 1), 0 + x, 2 + y));

    const auto result = assemble_brep(tiny_cloud(), fits, segments, corners,
                                      AssemblyConfig{});
    const BRepModel& model = result.model;
    REQUIRE(model.faces.size() == 5);
    REQUIRE(model.edges.size() == 8);
    REQUIRE(model.corners.size() == 4);
    CHECK(result.non_watertight_faces == std::vector<int>{0, 1, 2, 3});
    CHECK(model.faces[4].watertight);
    REQUIRE(model.faces[4].loops.size() == 1);
    CHECK(model.faces[4].loops[0].closed);
    CHECK(model.faces[4].loops[0].entries.size() == 4);
    // Vertical edges keep their free upper ends.
    for (int e = 4; e < 8; ++e) {
        CHECK(model.edges[e].endpoint_corners[0] >= 0);
        CHECK(model.edges[e].endpoint_corners[1] == -1);
    }
    CHECK_NOTHROW(validate(model));
}

TEST_CASE("assemble_brep prunes weak faces and strands", "[assembly]") {
    // Remove the three faces meeting at (1,1,1); the shared corner and its
    // three edges must disappear with them.
    const CubeFixture fx({1, 3, 5});
    const auto result = assemble_brep(tiny_cloud(), fx.fits, fx.segments,
                                      fx.corners, AssemblyConfig{});
    const BRepModel& model = result.model;

    REQUIRE(model.faces.size() == 3);
    REQUIRE(model.edges.size() == 9);
    REQUIRE(model.corners.size() == 7);
    for (const Vec3& c : model.corners)
        CHECK((c - Vec3(1, 1, 1)).norm() > 0.5);
    for (const CurveSegment& e : model.edges) {
        for (int c : e.endpoint_corners) CHECK(c < 7);
        CHECK((e.faces[0] >= 0 || e.faces[1] >= 0));
        for (int f : e.faces) CHECK(f < 3);
    }
    // Kept faces keep their full boundary.
    for (const BRepFace& face : model.faces) {
        CHECK(face.watertight);
        REQUIRE(face.loops.size() == 1);
        CHECK(face.loops[0].entries.size() == 4);
    }
    CHECK_NOTHROW(validate(model));
}

TEST_CASE("assemble_brep closes a spherical cap against its rim", "[assembly]") {
    std::vector<PrimitiveFit> fits{fit_of(sphere_prim(Vec3(0, 0, 0), 0.5)),
                                   fit_of(plane_prim(Vec3(0, 0, 1), 0.3))};
    std::vector<CurveSegment> segments{
        circle_segment(Vec3(0, 0, 0.3), Vec3(0, 0, 1), 0.4, 0, 1)};
    const auto result = assemble_brep(tiny_cloud(), fits, segments, {},
                                      AssemblyConfig{});
    REQUIRE(result.model.faces.size() == 2);
    CHECK(result.non_watertight_faces.empty());
    for (const BRepFace& face : result.model.faces) {
        REQUIRE(face.loops.size() == 1);
        CHECK(face.loops[0].closed);
        CHECK(face.watertight);
    }
}

TEST_CASE("assemble_brep rejects empty input and bad configs", "[assembly]") {
    CHECK_THROWS_WITH(assemble_brep(tiny_cloud(), {}, {}, {}, AssemblyConfig{}),
                      ContainsSubstring("empty model"));
    AssemblyConfig bad;
    bad.snap_radius = 0.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = AssemblyConfig{};
    bad.min_face_inliers = 0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
    bad = AssemblyConfig{};
    bad.loop_closure_tolerance = -1.0;
    CHECK_THROWS_AS(validate(bad), ConfigError);
}
