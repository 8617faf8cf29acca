// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Surface-aligned 2D Gaussians, the orthographic desk camera, image
// containers, and the loss configuration knobs shared across rendering,
// losses, and gradient checks.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "brepfit/core/types.hpp"

namespace brepfit {

/// Flat elliptical Gaussian living on a surface: a center, an orthonormal
/// tangent pair with per-axis scales, and the blended payload (opacity,
/// color, edge value, feature embedding).
struct Gaussian2D {
    Vec3 center = Vec3::Zero();
    Vec3 t_u = Vec3::UnitX();
    Vec3 t_v = Vec3::UnitY();
    Vec2 scale = Vec2::Ones(); // (s_u, s_v), positive
    double opacity = 1.0;                            // [0, 1]
    Vec3 color = Vec3::Zero();                       // [0, 1]^3
    double edge = 0.0;                               // [0, 1]
    Eigen::VectorXd feature;                         // d-dim embedding
};

inline void validate(const Gaussian2D& g) {
    if (!g.center.allFinite()) throw Error("gaussian: non-finite center");
    if (std::abs(g.t_u.norm() - 1.0) > 1e-9 || std::abs(g.t_v.norm() - 1.0) > 1e-9)
        throw Error("gaussian: tangents must be unit length");
    if (std::abs(g.t_u.dot(g.t_v)) >= 1e-9)
        throw Error("gaussian: tangents must be orthogonal");
    if (!(g.scale.x() > 0.0 && g.scale.y() > 0.0))
        throw Error("gaussian: scales must be positive");
    if (!(g.opacity >= 0.0 && g.opacity <= 1.0))
        throw Error("gaussian: opacity outside [0,1]");
    if (!(g.edge >= 0.0 && g.edge <= 1.0))
        throw Error("gaussian: edge value outside [0,1]");
    for (int i = 0; i < 3; ++i)
        if (!(g.color[i] >= 0.0 && g.color[i] <= 1.0))
            throw Error("gaussian: color outside [0,1]");
    if (!g.feature.allFinite()) throw Error("gaussian: non-finite feature");
}

/// Orthographic camera: rays start on the plane through `origin` spanned by
/// `right`/`up` and travel along `view`. Pixel (ix, iy) is centered at
/// origin + (ix + 0.5 - W/2) * pixel_size * right
///        + (iy + 0.5 - H/2) * pixel_size * up.
struct Camera {
    Vec3 origin = Vec3::Zero();
    Vec3 right = Vec3::UnitX();
    Vec3 up = Vec3::UnitY();
    Vec3 view = Vec3::UnitZ();
    int width = 64;
    int height = 64;
    double pixel_size = 1.0 / 64.0;
};

inline void validate(const Camera& cam) {
    const double tol = 1e-9;
    if (std::abs(cam.right.norm() - 1.0) > tol ||
        std::abs(cam.up.norm() - 1.0) > tol ||
        std::abs(cam.view.norm() - 1.0) > tol)
        throw Error("camera: frame vectors must be unit length");
    if (std::abs(cam.right.dot(cam.up)) > tol ||
        std::abs(cam.right.dot(cam.view)) > tol ||
        std::abs(cam.up.dot(cam.view)) > tol)
        throw Error("camera: frame vectors must be orthogonal");
    if (cam.width < 1 || cam.height < 1)
        throw Error("camera: resolution must be at least 1x1");
    if (!(cam.pixel_size > 0.0))
        throw Error("camera: pixel_size must be positive");
}

/// World position of the pixel-center ray origin.
inline Vec3 pixel_ray_origin(const Camera& cam, int ix, int iy) {
    return cam.origin +
           (ix + 0.5 - 0.5 * cam.width) * cam.pixel_size * cam.right +
           (iy + 0.5 - 0.5 * cam.height) * cam.pixel_size * cam.up;
}

/// Row-major float image with interleaved channels, values nominally [0,1].
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> data; // width * height * channels

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c),
          data(static_cast<std::size_t>(w) * h * c, fill) {}

    double& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    double at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::size_t pixel_count() const {
        return static_cast<std::size_t>(width) * height;
    }
};

inline void validate(const Image& img) {
    if (img.width < 0 || img.height < 0 || img.channels < 1)
        throw Error("image: invalid dimensions");
    if (img.data.size() !=
        static_cast<std::size_t>(img.width) * img.height * img.channels)
        throw Error("image: data size does not match dimensions");
}

/// Stage-1 photometric loss weights: structural-similarity mixing weight
/// and the edge-term multiplier.
struct Stage1LossConfig {
    double lambda = 0.2;
    double edge_weight = 0.1;
};

inline void validate(const Stage1LossConfig& cfg) {
    if (!(cfg.lambda >= 0.0 && cfg.lambda <= 1.0))
        throw ConfigError("stage1 loss: lambda outside [0,1]");
    if (!(cfg.edge_weight >= 0.0))
        throw ConfigError("stage1 loss: edge_weight must be non-negative");
}

/// Feature-separation triplet loss knobs.
struct TripletConfig {
    double margin = 0.3;
    int triplets_per_mask = 16;
    int negatives_per_mask = 64;
};

inline void validate(const TripletConfig& cfg) {
    if (!(cfg.margin > 0.0))
        throw ConfigError("triplet: margin must be positive");
    if (cfg.triplets_per_mask < 1)
        throw ConfigError("triplet: triplets_per_mask must be positive");
    if (cfg.negatives_per_mask < 1)
        throw ConfigError("triplet: negatives_per_mask must be positive");
}

/// Unit isotropic Gaussian kernel in local splat coordinates.
inline double gaussian_kernel(const Vec2& u) {
    return std::exp(-0.5 * u.squaredNorm());
}

/// Local splat coordinates of a pixel's ray hit, or invalid when the ray
/// runs parallel to the splat plane.
struct LocalCoords {
    Vec2 uv = Vec2::Zero();
    double ray_depth = 0.0; // parameter along the view ray
    bool valid = false;
};

/// Intersect the pixel ray with the splat plane and express the hit in
/// scale-normalized tangent coordinates.
inline LocalCoords pixel_local_coords(const Gaussian2D& g, const Camera& cam,
                                      int ix, int iy) {
    LocalCoords out;
    const Vec3 n = g.t_u.cross(g.t_v);
    const double denom = cam.view.dot(n);
    if (std::abs(denom) <= 1e-9) return out; // parallel: skip this Gaussian
    const Vec3 o = pixel_ray_origin(cam, ix, iy);
    const double tau = (g.center - o).dot(n) / denom;
    const Vec3 q = o + tau * cam.view - g.center;
    out.uv = Vec2(q.dot(g.t_u) / g.scale.x(),
                             q.dot(g.t_v) / g.scale.y());
    out.ray_depth = tau;
    out.valid = true;
    return out;
}

/// Cubic Bezier point with Bernstein weights; `t` must lie in [0,1].
inline Vec3 bezier_point(const Vec3& p0, const Vec3& p1, const Vec3& p2,
                         const Vec3& p3, double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw Error("bezier_point: parameter outside [0,1]");
    const double s = 1.0 - t;
    return s * s * s * p0 + 3.0 * s * s * t * p1 + 3.0 * s * t * t * p2 +
           t * t * t * p3;
}

/// Indices of `gaussians` ordered front-to-back along the camera view
/// direction (stable for equal depths).
inline std::vector<int> depth_order(const std::vector<Gaussian2D>& gaussians,
                                    const Camera& cam) {
    std::vector<int> order(gaussians.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return (gaussians[a].center - cam.origin).dot(cam.view) <
               (gaussians[b].center - cam.origin).dot(cam.view);
    });
    return order;
}

/// Gaussians reordered front-to-back (the order render_channels expects).
inline std::vector<Gaussian2D> sort_front_to_back(
    std::vector<Gaussian2D> gaussians, const Camera& cam) {
    const std::vector<int> order = depth_order(gaussians, cam);
    std::vector<Gaussian2D> sorted;
    sorted.reserve(gaussians.size());
    for (int i : order) sorted.push_back(std::move(gaussians[i]));
    return sorted;
}

} // namespace brepfit
