// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Photometric and feature-separation losses over rendered maps: L1 plus
// structural-dissimilarity color loss, squared-error edge loss restricted
// to an edge mask, their weighted stage-1 combination, and a cosine-margin
// triplet loss with hardest-negative mining.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "brepfit/core/rng.hpp"
#include "brepfit/splat/render.hpp"
#include "brepfit/splat/types.hpp"

namespace brepfit {
namespace detail {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01; // data range 1
inline constexpr double kSsimC2 = 0.03 * 0.03;

inline const std::array<double, kSsimWindow>& ssim_kernel() {
    static const std::array<double, kSsimWindow> kernel = [] {
        std::array<double, kSsimWindow> k{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double x = i - (kSsimWindow - 1) / 2.0;
            k[i] = std::exp(-0.5 * x * x / (kSsimSigma * kSsimSigma));
            sum += k[i];
        }
        for (double& v : k) v /= sum;
        return k;
    }();
    return kernel;
}

/// Same-size separable convolution with zero padding. The kernel is
/// symmetric, so this operator is its own transpose (used by gradients).
inline std::vector<double> blur_same(const std::vector<double>& src, int w,
                                     int h) {
    const auto& k = ssim_kernel();
    const int r = kSsimWindow / 2;
    std::vector<double> tmp(src.size(), 0.0), dst(src.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int xx = x + i;
                if (xx < 0 || xx >= w) continue;
                acc += k[i + r] * src[static_cast<std::size_t>(y) * w + xx];
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int yy = y + i;
                if (yy < 0 || yy >= h) continue;
                acc += k[i + r] * tmp[static_cast<std::size_t>(yy) * w + x];
            }
            dst[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return dst;
}

inline std::vector<double> image_plane(const Image& img, int channel) {
    std::vector<double> plane(img.pixel_count());
    for (std::size_t px = 0; px < plane.size(); ++px)
        plane[px] = img.data[px * img.channels + channel];
    return plane;
}

/// Windowed moment maps of one channel pair, the inputs to the pointwise
/// structural-similarity formula (and to its chain rule).
struct SsimMoments {
    std::vector<double> mx, my, mxx, myy, mxy;
};

inline SsimMoments ssim_moments(const std::vector<double>& x,
                                const std::vector<double>& y, int w, int h) {
    SsimMoments m;
    m.mx = blur_same(x, w, h);
    m.my = blur_same(y, w, h);
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
    }
    m.mxx = blur_same(xx, w, h);
    m.myy = blur_same(yy, w, h);
    m.mxy = blur_same(xy, w, h);
    return m;
}

inline double ssim_at(const SsimMoments& m, std::size_t p) {
    const double mx = m.mx[p], my = m.my[p];
    const double vx = m.mxx[p] - mx * mx;
    const double vy = m.myy[p] - my * my;
    const double cxy = m.mxy[p] - mx * my;
    const double a1 = 2.0 * mx * my + kSsimC1;
    const double a2 = 2.0 * cxy + kSsimC2;
    const double b1 = mx * mx + my * my + kSsimC1;
    const double b2 = vx + vy + kSsimC2;
    return (a1 * a2) / (b1 * b2);
}

inline void require_same_shape(const Image& a, const Image& b,
                               const char* what) {
    if (a.width != b.width || a.height != b.height || a.channels != b.channels)
        throw Error(std::string(what) + ": image dimensions disagree");
}

} // namespace detail

/// Mean structural similarity between two equal-shape images (11x11
/// Gaussian window, sigma 1.5, standard stabilization constants), averaged
/// over pixels and channels.
inline double ssim(const Image& a, const Image& b) {
    detail::require_same_shape(a, b, "ssim");
    validate(a);
    validate(b);
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        const auto x = detail::image_plane(a, c);
        const auto y = detail::image_plane(b, c);
        const auto m = detail::ssim_moments(x, y, a.width, a.height);
        for (std::size_t p = 0; p < x.size(); ++p) total += detail::ssim_at(m, p);
    }
    return total / (static_cast<double>(a.pixel_count()) * a.channels);
}

/// Photometric color loss: (1 - lambda) * mean absolute error +
/// lambda * (1 - SSIM) / 2.
inline double loss_geo(const Image& rendered, const Image& target,
                       const Stage1LossConfig& cfg) {
    validate(cfg);
    detail::require_same_shape(rendered, target, "loss_geo");
    double l1 = 0.0;
    for (std::size_t i = 0; i < rendered.data.size(); ++i)
        l1 += std::abs(rendered.data[i] - target.data[i]);
    l1 /= static_cast<double>(rendered.data.size());
    const double dssim = (1.0 - ssim(rendered, target)) / 2.0;
    return (1.0 - cfg.lambda) * l1 + cfg.lambda * dssim;
}

/// Squared-error edge loss restricted to the masked pixels: the sum of
/// (rendered - target)^2 over pixels whose mask value is at least 0.5. An
/// empty mask contributes zero (with a warning).
inline double loss_edge(const Image& rendered_edge, const Image& target_mask) {
    detail::require_same_shape(rendered_edge, target_mask, "loss_edge");
    if (rendered_edge.channels != 1)
        throw Error("loss_edge: expected single-channel maps");
    double sum = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < rendered_edge.data.size(); ++i) {
        if (target_mask.data[i] < 0.5) continue;
        const double d = rendered_edge.data[i] - target_mask.data[i];
        sum += d * d;
        any = true;
    }
    if (!any)
        std::cerr << "warning: loss_edge called with an empty edge mask\n";
    return sum;
}

/// Stage-1 objective: photometric color loss plus the weighted edge term.
inline double loss_stage1(const RenderedChannels& rendered,
                          const Image& target_color, const Image& target_mask,
                          const Stage1LossConfig& cfg) {
    validate(cfg);
    return loss_geo(rendered.color_image(), target_color, cfg) +
           cfg.edge_weight * loss_edge(rendered.edge_image(), target_mask);
}

/// 1 - cosine similarity of the l2-normalized vectors; range [0, 2].
inline double cosine_distance(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na < 1e-12 || nb < 1e-12)
        throw Error("cosine_distance: zero-length feature");
    return 1.0 - a.dot(b) / (na * nb);
}

namespace detail {

/// One sampled triplet: anchor and positive pixels from the same mask and
/// the candidate-negative pixel pool drawn from the other masks.
struct TripletDraw {
    int mask = -1;
    int anchor = -1;
    int positive = -1;
    std::vector<int> candidates;
};

/// Deterministic triplet sampling. Masks with fewer than two pixels are
/// skipped; each valid mask draws its own substream, `triplets_per_mask`
/// anchor/positive pairs, and `negatives_per_mask` candidate negatives
/// (with replacement) from the union of the other valid masks' pixels.
inline std::vector<TripletDraw> sample_triplets(
    const std::vector<std::vector<int>>& masks, const TripletConfig& cfg,
    std::uint64_t seed) {
    validate(cfg);
    std::vector<int> valid;
    for (std::size_t k = 0; k < masks.size(); ++k)
        if (masks[k].size() >= 2) valid.push_back(static_cast<int>(k));
    if (valid.size() < 2)
        throw Error("triplet_loss: need at least 2 masks with 2+ pixels");

    std::vector<TripletDraw> draws;
    for (const int k : valid) {
        std::vector<int> pool;
        for (const int other : valid)
            if (other != k)
                pool.insert(pool.end(), masks[other].begin(),
                            masks[other].end());
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k));
        for (int t = 0; t < cfg.triplets_per_mask; ++t) {
            TripletDraw draw;
            draw.mask = k;
            const std::size_t n = masks[k].size();
            const std::size_t ai = rng.uniform_index(n);
            std::size_t pi = rng.uniform_index(n - 1);
            if (pi >= ai) ++pi; // uniform over the remaining pixels
            draw.anchor = masks[k][ai];
            draw.positive = masks[k][pi];
            draw.candidates.reserve(cfg.negatives_per_mask);
            for (int c = 0; c < cfg.negatives_per_mask; ++c)
                draw.candidates.push_back(pool[rng.uniform_index(pool.size())]);
            draws.push_back(std::move(draw));
        }
    }
    return draws;
}

inline Eigen::VectorXd feature_at(const RenderedChannels& rc, int px) {
    return Eigen::Map<const Eigen::VectorXd>(
        rc.feature.data() + static_cast<std::size_t>(px) * rc.feature_dim,
        rc.feature_dim);
}

} // namespace detail

/// Hardest-negative triplet loss over the rendered feature map: for each
/// sampled anchor/positive pair the negative is the candidate with minimal
/// cosine distance to the anchor, and the loss is the mean hinge
/// max(0, d(a,p) - d(a,n) + margin) over all sampled triplets.
inline double triplet_loss(const RenderedChannels& features,
                           const std::vector<std::vector<int>>& masks,
                           const TripletConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    if (features.feature_dim < 1)
        throw Error("triplet_loss: feature channel was not rendered");
    const auto draws = detail::sample_triplets(masks, cfg, seed);
    double total = 0.0;
    for (const detail::TripletDraw& draw : draws) {
        const Eigen::VectorXd fa = detail::feature_at(features, draw.anchor);
        const Eigen::VectorXd fp = detail::feature_at(features, draw.positive);
        double best = std::numeric_limits<double>::infinity();
        for (const int cand : draw.candidates) {
            const double d =
                cosine_distance(fa, detail::feature_at(features, cand));
            if (d < best) best = d;
        }
        total += std::max(0.0, cosine_distance(fa, fp) - best + cfg.margin);
    }
    return total / static_cast<double>(draws.size());
}

} // namespace brepfit
