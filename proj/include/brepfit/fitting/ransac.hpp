// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// RANSAC estimation of plane / cylinder / sphere parameters with
// least-squares refinement and model-type selection.

#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "brepfit/core/rng.hpp"
#include "brepfit/core/types.hpp"

namespace brepfit {

struct RansacConfig {
    int max_iterations = 1024;
    double inlier_threshold = 0.01; // length units on the unit-box model
    double min_inlier_ratio = 0.5;
    std::uint64_t seed = 0;
    double type_preference_margin = 0.02;
};

inline void validate(const RansacConfig& cfg) {
    if (!(cfg.inlier_threshold > 0.0))
        throw ConfigError("ransac: inlier_threshold must be positive");
    if (!(cfg.min_inlier_ratio > 0.0 && cfg.min_inlier_ratio <= 1.0))
        throw ConfigError("ransac: min_inlier_ratio must be in (0,1]");
    if (cfg.max_iterations < 1)
        throw ConfigError("ransac: max_iterations must be at least 1");
    if (cfg.type_preference_margin < 0.0)
        throw ConfigError("ransac: type_preference_margin must be non-negative");
}

/// A fitted primitive together with its supporting points.
struct PrimitiveFit {
    Primitive primitive;
    std::vector<int> inlier_indices; // sorted ascending
    std::vector<double> residuals;   // unsigned, parallel to inlier_indices
    double inlier_ratio = 0.0;
};

namespace detail {

inline int count_inliers(std::span<const Vec3> pts, const Primitive& p, double eps) {
    int n = 0;
    for (const Vec3& x : pts)
        if (distance(p, x) <= eps) ++n;
    return n;
}

inline void collect_inliers(std::span<const Vec3> pts, const Primitive& prim,
                            double eps, PrimitiveFit& fit) {
    fit.inlier_indices.clear();
    fit.residuals.clear();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = distance(prim, pts[i]);
        if (d <= eps) {
            fit.inlier_indices.push_back(static_cast<int>(i));
            fit.residuals.push_back(d);
        }
    }
    double sq = 0.0;
    for (double r : fit.residuals) sq += r * r;
    fit.primitive = prim;
    fit.primitive.inlier_count = static_cast<int>(fit.inlier_indices.size());
    fit.primitive.rms_residual =
        fit.residuals.empty() ? 0.0
                              : std::sqrt(sq / static_cast<double>(fit.residuals.size()));
    fit.inlier_ratio = pts.empty()
                           ? 0.0
                           : static_cast<double>(fit.inlier_indices.size()) /
                                 static_cast<double>(pts.size());
}

/// Standard adaptive RANSAC stopping bound at 99.9% confidence.
inline int iterations_needed(double inlier_ratio, int sample_size, int cap) {
    if (inlier_ratio <= 0.0) return cap;
    const double w = std::pow(inlier_ratio, sample_size);
    if (w >= 1.0 - 1e-12) return 1;
    const double n = std::log(1.0 - 0.999) / std::log(1.0 - w);
    if (!(n < static_cast<double>(cap))) return cap;
    return std::max(1, static_cast<int>(std::ceil(n)));
}

inline double rms_on(std::span<const Vec3> pts, const std::vector<int>& idx,
                     const Primitive& p) {
    if (idx.empty()) return 0.0;
    double sq = 0.0;
    for (int i : idx) {
        const double d = implicit_value(p, pts[i]);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(idx.size()));
}

/// Total-least-squares plane through the given subset: centroid plus the
/// smallest covariance eigenvector. Global optimum, so refinement is a
/// single step.
inline std::optional<PlaneGeom> tls_plane(std::span<const Vec3> pts,
                                          const std::vector<int>& idx) {
    if (idx.size() < 3) return std::nullopt;
    Vec3 centroid = Vec3::Zero();
    for (int i : idx) centroid += pts[i];
    centroid /= static_cast<double>(idx.size());
    Mat3 cov = Mat3::Zero();
    for (int i : idx) {
        const Vec3 d = pts[i] - centroid;
        cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    // Rank check: collinear subsets leave two near-zero eigenvalues.
    if (eig.eigenvalues()[1] <= 1e-18 * (1.0 + eig.eigenvalues()[2]))
        return std::nullopt;
    const Vec3 n = eig.eigenvectors().col(0).normalized();
    return PlaneGeom{n, n.dot(centroid)};
}

/// Gauss-Newton on sum((|x-c|-r)^2). Steps are halved until the residual
/// does not increase, so the RMS on the refit subset is monotone.
inline SphereGeom gn_sphere(std::span<const Vec3> pts, const std::vector<int>& idx,
                            SphereGeom s) {
    const int n = static_cast<int>(idx.size());
    if (n < 4) return s;
    auto sse = [&](const SphereGeom& g) {
        double acc = 0.0;
        for (int i : idx) {
            const double f = (pts[i] - g.center).norm() - g.radius;
            acc += f * f;
        }
        return acc;
    };
    double prev = sse(s);
    for (int iter = 0; iter < 50; ++iter) {
        Eigen::Matrix4d jtj = Eigen::Matrix4d::Zero();
        Eigen::Vector4d jtf = Eigen::Vector4d::Zero();
        for (int i : idx) {
            const Vec3 w = pts[i] - s.center;
            const double len = w.norm();
            if (len < 1e-14) continue;
            Eigen::Vector4d row;
            row << -w.x() / len, -w.y() / len, -w.z() / len, -1.0;
            jtj += row * row.transpose();
            jtf += row * ((len - s.radius));
        }
        jtj.diagonal().array() += 1e-12 * (1.0 + jtj.trace());
        const Eigen::Vector4d step = jtj.ldlt().solve(-jtf);
        double scale = 1.0;
        SphereGeom trial = s;
        double cur = prev;
        for (int h = 0; h < 24; ++h) {
            trial.center = s.center + scale * step.head<3>();
            trial.radius = s.radius + scale * step[3];
            cur = sse(trial);
            if (cur <= prev && trial.radius > 0.0) break;
            scale *= 0.5;
        }
        if (!(trial.radius > 0.0) || cur > prev) break;
        s = trial;
        if (prev - cur <= 1e-10 * (prev + 1e-300)) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    return s;
}

/// Gauss-Newton on sum((dist_to_axis - r)^2) over the 5 local parameters
/// (2 axis-point offsets and 2 axis tilts in the frame orthogonal to the
/// axis, plus the radius).
inline CylinderGeom gn_cylinder(std::span<const Vec3> pts,
                                const std::vector<int>& idx, CylinderGeom c) {
    const int n = static_cast<int>(idx.size());
    if (n < 5) return c;
    auto sse = [&](const CylinderGeom& g) {
        double acc = 0.0;
        for (int i : idx) {
            const Vec3 w = pts[i] - g.axis_point;
            const double f = (w - w.dot(g.axis_dir) * g.axis_dir).norm() - g.radius;
            acc += f * f;
        }
        return acc;
    };
    double prev = sse(c);
    using Vec5 = Eigen::Matrix<double, 5, 1>;
    using Mat5 = Eigen::Matrix<double, 5, 5>;
    for (int iter = 0; iter < 50; ++iter) {
        const auto [b1, b2] = plane_frame(c.axis_dir);
        Mat5 jtj = Mat5::Zero();
        Vec5 jtf = Vec5::Zero();
        for (int i : idx) {
            const Vec3 w = pts[i] - c.axis_point;
            const double h = w.dot(c.axis_dir);
            const Vec3 q = w - h * c.axis_dir;
            const double rho = q.norm();
            if (rho < 1e-14) continue;
            const Vec3 qn = q / rho;
            Vec5 row;
            row << -qn.dot(b1), -qn.dot(b2), -h * qn.dot(b1), -h * qn.dot(b2), -1.0;
            jtj += row * row.transpose();
            jtf += row * (rho - c.radius);
        }
        jtj.diagonal().array() += 1e-12 * (1.0 + jtj.trace());
        const Vec5 step = jtj.ldlt().solve(-jtf);
        double scale = 1.0;
        CylinderGeom trial = c;
        double cur = prev;
        for (int h = 0; h < 24; ++h) {
            trial.axis_point = c.axis_point + scale * (step[0] * b1 + step[1] * b2);
            trial.axis_dir = (c.axis_dir + scale * (step[2] * b1 + step[3] * b2)).normalized();
            trial.radius = c.radius + scale * step[4];
            cur = sse(trial);
            if (cur <= prev && trial.radius > 0.0) break;
            scale *= 0.5;
        }
        if (!(trial.radius > 0.0) || cur > prev) break;
        c = trial;
        if (prev - cur <= 1e-10 * (prev + 1e-300)) {
            prev = cur;
            break;
        }
        prev = cur;
    }
    return c;
}

/// Shared consensus-then-refine driver. `sample` draws one hypothesis or
/// nothing (degenerate minimal set); `refine` improves parameters on an
/// inlier subset. Refined parameters are accepted only while the inlier
/// count does not drop, which keeps the returned ratio at least as high as
/// every sampled hypothesis.
template <typename SampleFn, typename RefineFn>
PrimitiveFit ransac_driver(std::span<const Vec3> pts, const RansacConfig& cfg,
                           int sample_size, SampleFn&& sample, RefineFn&& refine,
                           const char* degenerate_msg, Rng rng) {
    validate(cfg);
    std::optional<Primitive> best;
    int best_count = -1;
    int budget = cfg.max_iterations;
    for (int iter = 0; iter < budget; ++iter) {
        std::optional<Primitive> hyp = sample(rng);
        if (!hyp) continue;
        const int count = count_inliers(pts, *hyp, cfg.inlier_threshold);
        if (count > best_count) {
            best_count = count;
            best = *hyp;
            const double ratio =
                static_cast<double>(count) / static_cast<double>(pts.size());
            budget = std::min(cfg.max_iterations,
                              iterations_needed(ratio, sample_size, cfg.max_iterations));
        }
    }
    if (!best || best_count < sample_size) throw FitError(degenerate_msg);

    PrimitiveFit fit;
    collect_inliers(pts, *best, cfg.inlier_threshold, fit);
    for (int round = 0; round < 3; ++round) {
        Primitive refined = refine(fit.primitive, fit.inlier_indices);
        const int count = count_inliers(pts, refined, cfg.inlier_threshold);
        if (count < static_cast<int>(fit.inlier_indices.size())) break;
        const bool grew = count > static_cast<int>(fit.inlier_indices.size());
        collect_inliers(pts, refined, cfg.inlier_threshold, fit);
        if (!grew) break;
    }
    fit.primitive = canonicalized(fit.primitive);
    return fit;
}

} // namespace detail

/// Plane with the highest consensus over sampled 3-point hypotheses,
/// refined by a total-least-squares fit on its inliers.
inline PrimitiveFit fit_plane_ransac(std::span<const Vec3> pts,
                                     const RansacConfig& cfg,
                                     std::uint64_t stream_id = 0) {
    validate(cfg);
    if (pts.size() < 3) throw FitError("degenerate patch: fewer than 3 points");
    auto sample = [&](Rng& rng) -> std::optional<Primitive> {
        const std::size_t n = pts.size();
        std::size_t i0 = rng.uniform_index(n), i1 = i0, i2 = i0;
        while (i1 == i0) i1 = rng.uniform_index(n);
        while (i2 == i0 || i2 == i1) i2 = rng.uniform_index(n);
        const Vec3 u = pts[i1] - pts[i0];
        const Vec3 v = pts[i2] - pts[i0];
        const Vec3 c = u.cross(v);
        const double norm = c.norm();
        if (norm < 1e-12 * (1.0 + u.norm() * v.norm())) return std::nullopt;
        const Vec3 normal = c / norm;
        Primitive p;
        p.surface = PlaneGeom{normal, normal.dot(pts[i0])};
        return p;
    };
    auto refine = [&](const Primitive& p, const std::vector<int>& idx) -> Primitive {
        auto plane = detail::tls_plane(pts, idx);
        if (!plane) return p;
        Primitive out;
        out.surface = *plane;
        return out;
    };
    return detail::ransac_driver(pts, cfg, 3, sample, refine,
                                 "degenerate patch: collinear points",
                                 Rng::stream(cfg.seed, stream_id * 4 + 1));
}

/// Sphere through sampled 4-point hypotheses (exact linear solve), refined
/// by Gauss-Newton on the radial residuals. Hypotheses with radius above 10
/// unit lengths are rejected as near-planes.
inline PrimitiveFit fit_sphere_ransac(std::span<const Vec3> pts,
                                      const RansacConfig& cfg,
                                      std::uint64_t stream_id = 0) {
    validate(cfg);
    if (pts.size() < 4) throw FitError("degenerate patch: fewer than 4 points");
    auto sample = [&](Rng& rng) -> std::optional<Primitive> {
        const std::size_t n = pts.size();
        std::size_t idx[4];
        idx[0] = rng.uniform_index(n);
        for (int k = 1; k < 4; ++k) {
            std::size_t candidate = rng.uniform_index(n);
            bool dup = true;
            while (dup) {
                dup = false;
                for (int j = 0; j < k; ++j)
                    if (candidate == idx[j]) {
                        candidate = rng.uniform_index(n);
                        dup = true;
                        break;
                    }
            }
            idx[k] = candidate;
        }
        Mat3 a;
        Vec3 b;
        for (int k = 1; k < 4; ++k) {
            const Vec3 d = pts[idx[k]] - pts[idx[0]];
            a.row(k - 1) = 2.0 * d.transpose();
            b[k - 1] = pts[idx[k]].squaredNorm() - pts[idx[0]].squaredNorm();
        }
        if (std::abs(a.determinant()) < 1e-12) return std::nullopt; // coplanar
        const Vec3 center = a.partialPivLu().solve(b);
        const double radius = (pts[idx[0]] - center).norm();
        if (!(radius > 0.0) || radius > 10.0) return std::nullopt; // near-plane
        Primitive p;
        p.surface = SphereGeom{center, radius};
        return p;
    };
    auto refine = [&](const Primitive& p, const std::vector<int>& idx) -> Primitive {
        Primitive out;
        out.surface = detail::gn_sphere(pts, idx, p.sphere());
        return out;
    };
    return detail::ransac_driver(pts, cfg, 4, sample, refine,
                                 "degenerate patch: coplanar points",
                                 Rng::stream(cfg.seed, stream_id * 4 + 2));
}

/// Cylinder from sampled two-point-with-normal hypotheses (axis from the
/// normal cross product), refined by Gauss-Newton over axis point, axis
/// direction, and radius.
inline PrimitiveFit fit_cylinder_ransac(std::span<const Vec3> pts,
                                        std::span<const Vec3> normals,
                                        const RansacConfig& cfg,
                                        std::uint64_t stream_id = 0) {
    validate(cfg);
    if (normals.empty())
        throw FitError("cylinder fitting requires normals; run estimate_normals first");
    if (normals.size() != pts.size())
        throw FitError("cylinder fitting: normals count mismatch");
    if (pts.size() < 2) throw FitError("degenerate patch: fewer than 2 points");
    auto sample = [&](Rng& rng) -> std::optional<Primitive> {
        const std::size_t n = pts.size();
        std::size_t i0 = rng.uniform_index(n), i1 = i0;
        while (i1 == i0) i1 = rng.uniform_index(n);
        const Vec3 cross = normals[i0].cross(normals[i1]);
        const double cn = cross.norm();
        if (cn < 1e-3) return std::nullopt; // near-parallel normal pair
        const Vec3 axis = cross / cn;
        const auto [b1, b2] = plane_frame(axis);
        const auto to2d = [&](const Vec3& v) { return Vec2(v.dot(b1), v.dot(b2)); };
        const Vec2 p0 = to2d(pts[i0]), p1 = to2d(pts[i1]);
        const Vec2 d0 = to2d(normals[i0]), d1 = to2d(normals[i1]);
        // Axis location: intersection of the two projected normal lines.
        const double det = d0.x() * (-d1.y()) - (-d1.x()) * d0.y();
        if (std::abs(det) < 1e-12) return std::nullopt;
        const Vec2 rhs = p1 - p0;
        const double t = (rhs.x() * (-d1.y()) - (-d1.x()) * rhs.y()) / det;
        const Vec2 center2d = p0 + t * d0;
        const double radius =
            0.5 * ((p0 - center2d).norm() + (p1 - center2d).norm());
        if (!(radius > 1e-9) || !(radius < 1e6)) return std::nullopt;
        Primitive p;
        p.surface = CylinderGeom{center2d.x() * b1 + center2d.y() * b2, axis, radius};
        return p;
    };
    auto refine = [&](const Primitive& p, const std::vector<int>& idx) -> Primitive {
        Primitive out;
        out.surface = detail::gn_cylinder(pts, idx, p.cylinder());
        return out;
    };
    return detail::ransac_driver(pts, cfg, 2, sample, refine,
                                 "degenerate patch: no valid normal pair",
                                 Rng::stream(cfg.seed, stream_id * 4 + 3));
}

/// Runs all applicable fitters and keeps the highest inlier ratio; a simpler
/// model within `type_preference_margin` of the best ratio wins the tie
/// (Plane < Cylinder < Sphere). Throws FitError "unfittable patch" when the
/// winner stays below min_inlier_ratio.
inline PrimitiveFit select_primitive(std::span<const Vec3> pts,
                                     std::span<const Vec3> normals,
                                     const RansacConfig& cfg,
                                     std::uint64_t stream_id = 0) {
    validate(cfg);
    if (pts.size() < 4) throw FitError("unfittable patch: fewer than 4 points");
    std::vector<PrimitiveFit> candidates; // ordered by simplicity
    auto try_fit = [&](auto&& fn) {
        try {
            candidates.push_back(fn());
        } catch (const FitError&) {
            // fitter degenerate for this patch; other models may still apply
        }
    };
    try_fit([&] { return fit_plane_ransac(pts, cfg, stream_id); });
    if (!normals.empty())
        try_fit([&] { return fit_cylinder_ransac(pts, normals, cfg, stream_id); });
    try_fit([&] { return fit_sphere_ransac(pts, cfg, stream_id); });
    if (candidates.empty()) throw FitError("unfittable patch: all fitters degenerate");

    double best_ratio = 0.0;
    for (const PrimitiveFit& f : candidates)
        best_ratio = std::max(best_ratio, f.inlier_ratio);
    if (best_ratio < cfg.min_inlier_ratio)
        throw FitError("unfittable patch: best inlier ratio below minimum");
    for (const PrimitiveFit& f : candidates)
        if (f.inlier_ratio >= best_ratio - cfg.type_preference_margin) return f;
    return candidates.front(); // unreachable
}

} // namespace brepfit
