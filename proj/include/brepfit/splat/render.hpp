// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Orthographic CPU splatting: front-to-back alpha compositing of surface
// Gaussians into color, edge, feature, and coverage maps.

#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "brepfit/splat/types.hpp"

namespace brepfit {

/// Which output maps render_channels fills in.
struct ChannelSelector {
    bool color = true;
    bool edge = true;
    bool feature = true;
    bool alpha = true;
};

/// Composited per-pixel maps. `feature` is pixel-major: the feature of
/// pixel (x, y) starts at (y * width + x) * feature_dim.
struct RenderedChannels {
    int width = 0;
    int height = 0;
    int feature_dim = 0;
    std::vector<Vec3> color;
    std::vector<double> edge;
    std::vector<double> alpha;
    std::vector<double> feature;

    Image color_image() const {
        Image img(width, height, 3);
        for (std::size_t px = 0; px < color.size(); ++px)
            for (int c = 0; c < 3; ++c) img.data[px * 3 + c] = color[px][c];
        return img;
    }
    Image edge_image() const {
        Image img(width, height, 1);
        img.data = edge;
        return img;
    }
    Image alpha_image() const {
        Image img(width, height, 1);
        img.data = alpha;
        return img;
    }
};

namespace detail {

/// Contributions weaker than this at a pixel are treated as absent: they
/// add nothing and do not attenuate the Gaussians behind them.
inline constexpr double kMinContribution = 1e-4;

inline int common_feature_dim(const std::vector<Gaussian2D>& gaussians) {
    if (gaussians.empty()) return 0;
    const int d = static_cast<int>(gaussians.front().feature.size());
    for (const Gaussian2D& g : gaussians)
        if (static_cast<int>(g.feature.size()) != d)
            throw Error("render: feature dimensions disagree across Gaussians");
    return d;
}

inline void require_sorted(const std::vector<Gaussian2D>& gaussians,
                           const Camera& cam) {
    double prev = -std::numeric_limits<double>::infinity();
    for (const Gaussian2D& g : gaussians) {
        const double depth = (g.center - cam.origin).dot(cam.view);
        if (depth < prev)
            throw Error("render: gaussians must be sorted front-to-back");
        prev = depth;
    }
}

} // namespace detail

/// Composite `gaussians` (already sorted front-to-back) into per-pixel
/// maps. Per pixel, Gaussian i receives weight
///   w_i = a_i * prod_{j < i} (1 - a_j),   a_i = opacity_i * G_i(u),
/// and each requested channel is the weight-blended payload. Contributions
/// with a_i below 1e-4, and Gaussians whose plane is parallel to the ray,
/// are skipped entirely at that pixel.
inline RenderedChannels render_channels(const std::vector<Gaussian2D>& gaussians,
                                        const Camera& cam,
                                        const ChannelSelector& sel = {}) {
    validate(cam);
    for (const Gaussian2D& g : gaussians) validate(g);
    detail::require_sorted(gaussians, cam);

    RenderedChannels out;
    out.width = cam.width;
    out.height = cam.height;
    out.feature_dim = sel.feature ? detail::common_feature_dim(gaussians) : 0;
    const std::size_t npx = static_cast<std::size_t>(cam.width) * cam.height;
    if (sel.color) out.color.assign(npx, Vec3::Zero());
    if (sel.edge) out.edge.assign(npx, 0.0);
    if (sel.alpha) out.alpha.assign(npx, 0.0);
    if (out.feature_dim > 0) out.feature.assign(npx * out.feature_dim, 0.0);

    for (int iy = 0; iy < cam.height; ++iy) {
        for (int ix = 0; ix < cam.width; ++ix) {
            const std::size_t px = static_cast<std::size_t>(iy) * cam.width + ix;
            double transmittance = 1.0;
            for (const Gaussian2D& g : gaussians) {
                const LocalCoords lc = pixel_local_coords(g, cam, ix, iy);
                if (!lc.valid) continue;
                const double a = g.opacity * gaussian_kernel(lc.uv);
                if (a < detail::kMinContribution) continue;
                const double w = a * transmittance;
                if (sel.color) out.color[px] += w * g.color;
                if (sel.edge) out.edge[px] += w * g.edge;
                if (sel.alpha) out.alpha[px] += w;
                if (out.feature_dim > 0)
                    for (int k = 0; k < out.feature_dim; ++k)
                        out.feature[px * out.feature_dim + k] += w * g.feature[k];
                transmittance *= 1.0 - a;
            }
        }
    }
    return out;
}

} // namespace brepfit
