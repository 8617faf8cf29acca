// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic synthetic point clouds and exact reference models for the
// supported primitives. Noise is Gaussian along the true surface normal, so
// the unsigned surface distance of a generated point equals |noise|.

#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <utility>
#include <vector>

#include "brepfit/core/rng.hpp"
#include "brepfit/core/types.hpp"

namespace brepfit::synth {

/// Cell-centered square grid on the plane, `grid` x `grid` points over
/// [-extent/2, extent/2]^2 around the point of the plane nearest the origin.
inline LabeledPointCloud plane_cloud(const PlaneGeom& g, double extent, int grid,
                                     double sigma, std::uint64_t seed) {
    LabeledPointCloud cloud;
    Rng rng = Rng::stream(seed, 11);
    const Vec3 center = g.normal * g.offset;
    const auto [e1, e2] = plane_frame(g.normal);
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) {
            const double u = extent * ((i + 0.5) / grid - 0.5);
            const double v = extent * ((j + 0.5) / grid - 0.5);
            cloud.points.push_back(center + u * e1 + v * e2 +
                                   sigma * rng.normal() * g.normal);
            cloud.normals.push_back(g.normal);
            cloud.patch_id.push_back(0);
            cloud.edge_flag.push_back(0.0f);
        }
    return cloud;
}

/// Golden-angle spiral over the full sphere.
inline LabeledPointCloud sphere_cloud(const SphereGeom& g, int count, double sigma,
                                      std::uint64_t seed) {
    LabeledPointCloud cloud;
    Rng rng = Rng::stream(seed, 12);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < count; ++k) {
        const double z = 1.0 - 2.0 * (k + 0.5) / count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * k;
        const Vec3 dir(rho * std::cos(phi), rho * std::sin(phi), z);
        cloud.points.push_back(g.center + (g.radius + sigma * rng.normal()) * dir);
        cloud.normals.push_back(dir);
        cloud.patch_id.push_back(0);
        cloud.edge_flag.push_back(0.0f);
    }
    return cloud;
}

/// Cell-centered (theta, h) grid on the cylinder side, h centered on the
/// axis point.
inline LabeledPointCloud cylinder_cloud(const CylinderGeom& g, double height,
                                        int grid_theta, int grid_h, double sigma,
                                        std::uint64_t seed) {
    LabeledPointCloud cloud;
    Rng rng = Rng::stream(seed, 13);
    const auto [e1, e2] = plane_frame(g.axis_dir);
    for (int i = 0; i < grid_theta; ++i)
        for (int j = 0; j < grid_h; ++j) {
            const double theta = 2.0 * std::numbers::pi * (i + 0.5) / grid_theta;
            const double h = height * ((j + 0.5) / grid_h - 0.5);
            const Vec3 radial = std::cos(theta) * e1 + std::sin(theta) * e2;
            cloud.points.push_back(g.axis_point + h * g.axis_dir +
                                   (g.radius + sigma * rng.normal()) * radial);
            cloud.normals.push_back(radial);
            cloud.patch_id.push_back(0);
            cloud.edge_flag.push_back(0.0f);
        }
    return cloud;
}

/// Axis-aligned cube, one labeled patch per face. Patch ids follow the face
/// order -x, +x, -y, +y, -z, +z. Points closer than `edge_band` to a face
/// boundary carry edge flag 1.
inline LabeledPointCloud cube_cloud(const Vec3& center, double side, int grid,
                                    double sigma, std::uint64_t seed,
                                    double edge_band = 0.02) {
    LabeledPointCloud cloud;
    Rng rng = Rng::stream(seed, 14);
    const double h = 0.5 * side;
    const Vec3 axes[3] = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    int patch = 0;
    for (int a = 0; a < 3; ++a)
        for (int sgn = -1; sgn <= 1; sgn += 2, ++patch) {
            const Vec3 n = sgn * axes[a];
            const Vec3 e1 = axes[(a + 1) % 3];
            const Vec3 e2 = axes[(a + 2) % 3];
            for (int i = 0; i < grid; ++i)
                for (int j = 0; j < grid; ++j) {
                    const double u = side * ((i + 0.5) / grid - 0.5);
                    const double v = side * ((j + 0.5) / grid - 0.5);
                    cloud.points.push_back(center + h * n + u * e1 + v * e2 +
                                           sigma * rng.normal() * n);
                    cloud.normals.push_back(n);
                    cloud.patch_id.push_back(patch);
                    const double boundary = h - std::max(std::abs(u), std::abs(v));
                    cloud.edge_flag.push_back(boundary < edge_band ? 1.0f : 0.0f);
                }
        }
    return cloud;
}

/// Closed cylinder along +z centered at the origin: side patch 0, top cap
/// patch 1, bottom cap patch 2. Points within `edge_band` of a rim carry
/// edge flag 1.
inline LabeledPointCloud cylinder_caps_cloud(double radius, double height, int grid,
                                             double sigma, std::uint64_t seed,
                                             double edge_band = 0.02) {
    LabeledPointCloud cloud;
    Rng rng = Rng::stream(seed, 15);
    const double hh = 0.5 * height;
    const int grid_theta = 3 * grid;
    for (int i = 0; i < grid_theta; ++i)
        for (int j = 0; j < grid; ++j) {
            const double theta = 2.0 * std::numbers::pi * (i + 0.5) / grid_theta;
            const double z = height * ((j + 0.5) / grid - 0.5);
            const Vec3 radial(std::cos(theta), std::sin(theta), 0.0);
            cloud.points.push_back((radius + sigma * rng.normal()) * radial +
                                   Vec3(0.0, 0.0, z));
            cloud.normals.push_back(radial);
            cloud.patch_id.push_back(0);
            cloud.edge_flag.push_back(hh - std::abs(z) < edge_band ? 1.0f : 0.0f);
        }
    for (int cap = 0; cap < 2; ++cap) {
        const double z = cap == 0 ? hh : -hh;
        const Vec3 n(0.0, 0.0, cap == 0 ? 1.0 : -1.0);
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) {
                const double u = 2.0 * radius * ((i + 0.5) / grid - 0.5);
                const double v = 2.0 * radius * ((j + 0.5) / grid - 0.5);
                const double rho = std::hypot(u, v);
                if (rho > radius) continue;
                cloud.points.push_back(Vec3(u, v, z + sigma * rng.normal() * n.z()));
                cloud.normals.push_back(n);
                cloud.patch_id.push_back(1 + cap);
                cloud.edge_flag.push_back(radius - rho < edge_band ? 1.0f : 0.0f);
            }
    }
    return cloud;
}

namespace detail {

/// Links `corner_seq` (a closed corner cycle) into a face loop, reusing
/// edges from `edge_of_pair` keyed on the sorted corner pair.
inline FaceLoop link_loop(const std::vector<int>& corner_seq,
                          const std::map<std::pair<int, int>, int>& edge_of_pair) {
    FaceLoop loop;
    loop.closed = true;
    const std::size_t n = corner_seq.size();
    for (std::size_t k = 0; k < n; ++k) {
        const int a = corner_seq[k];
        const int b = corner_seq[(k + 1) % n];
        const auto it = edge_of_pair.find({std::min(a, b), std::max(a, b)});
        LoopEntry entry;
        entry.edge = it->second;
        entry.reversed = a > b;
        loop.entries.push_back(entry);
    }
    return loop;
}

} // namespace detail

/// Exact axis-aligned cube model: 8 corners, 12 line edges, 6 planar faces,
/// outer loops oriented by the right-hand rule about the outward normal.
inline BRepModel cube_brep(const Vec3& center, double side) {
    BRepModel model;
    const double h = 0.5 * side;
    for (int i = 0; i < 8; ++i)
        model.corners.push_back(center + Vec3(i & 1 ? h : -h, i & 2 ? h : -h,
                                              i & 4 ? h : -h));
    std::map<std::pair<int, int>, int> edge_of_pair;
    for (int a = 0; a < 8; ++a)
        for (int bit = 0; bit < 3; ++bit) {
            const int b = a ^ (1 << bit);
            if (b < a) continue;
            CurveSegment seg;
            const Vec3 dir = (model.corners[b] - model.corners[a]).normalized();
            seg.geometry = LineGeom{model.corners[a], dir};
            seg.t_lo = 0.0;
            seg.t_hi = side;
            seg.endpoint_corners = {a, b};
            edge_of_pair[{a, b}] = static_cast<int>(model.edges.size());
            model.edges.push_back(seg);
        }
    // Corner cycles per face, wound by the right-hand rule about the
    // outward normal (-x,+x,-y,+y,-z,+z order to match cube_cloud patches).
    const std::vector<std::vector<int>> cycles = {
        {0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4},
        {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
    const Vec3 normals[6] = {-Vec3::UnitX(), Vec3::UnitX(),  -Vec3::UnitY(),
                             Vec3::UnitY(),  -Vec3::UnitZ(), Vec3::UnitZ()};
    for (int f = 0; f < 6; ++f) {
        BRepFace face;
        face.primitive.surface =
            PlaneGeom{normals[f], normals[f].dot(center) + h};
        face.primitive = canonicalized(face.primitive);
        face.loops.push_back(detail::link_loop(cycles[f], edge_of_pair));
        face.watertight = true;
        model.faces.push_back(face);
    }
    for (int f = 0; f < 6; ++f)
        for (const LoopEntry& e : model.faces[f].loops[0].entries) {
            CurveSegment& seg = model.edges[e.edge];
            (seg.faces[0] < 0 ? seg.faces[0] : seg.faces[1]) = f;
        }
    return model;
}

/// Exact closed cylinder along +z centered at the origin: 2 closed circular
/// edges, no corners, faces ordered side, top cap, bottom cap to match
/// cylinder_caps_cloud patches.
inline BRepModel cylinder_caps_brep(double radius, double height) {
    BRepModel model;
    const double hh = 0.5 * height;
    for (int cap = 0; cap < 2; ++cap) {
        CurveSegment rim;
        rim.geometry = CircleGeom{Vec3(0.0, 0.0, cap == 0 ? hh : -hh),
                                  Vec3::UnitZ(), radius};
        rim.t_lo = 0.0;
        rim.t_hi = 2.0 * std::numbers::pi;
        rim.closed = true;
        rim.faces = {0, 1 + cap};
        model.edges.push_back(rim);
    }
    BRepFace side;
    side.primitive.surface = CylinderGeom{Vec3::Zero(), Vec3::UnitZ(), radius};
    side.primitive = canonicalized(side.primitive);
    for (int cap = 0; cap < 2; ++cap) {
        FaceLoop loop;
        loop.closed = true;
        // Interior of the side strip lies below the top rim and above the
        // bottom rim in the (theta, h) chart.
        loop.entries.push_back(LoopEntry{cap, cap == 0});
        side.loops.push_back(loop);
    }
    side.watertight = true;
    model.faces.push_back(side);
    for (int cap = 0; cap < 2; ++cap) {
        BRepFace face;
        const Vec3 n(0.0, 0.0, cap == 0 ? 1.0 : -1.0);
        face.primitive.surface = PlaneGeom{n, hh};
        face.primitive = canonicalized(face.primitive);
        FaceLoop loop;
        loop.closed = true;
        loop.entries.push_back(LoopEntry{cap, cap == 1});
        face.loops.push_back(loop);
        face.watertight = true;
        model.faces.push_back(face);
    }
    return model;
}

} // namespace brepfit::synth
