// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "brepfit/core/rng.hpp"
#include "brepfit/splat/render.hpp"
#include "brepfit/splat/types.hpp"

#include <cmath>
#include <vector>

using namespace brepfit;
using Catch::Approx;

namespace {

Vec3 rotate_about(const Vec3& v, const Vec3& axis, double angle) {
    const Vec3 k = axis.normalized();
    return v * std::cos(angle) + k.cross(v) * std::sin(angle) +
           k * k.dot(v) * (1.0 - std::cos(angle));
}

Gaussian2D random_gaussian(Rng& rng, double depth) {
    Gaussian2D g;
    g.center = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), depth);
    const Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    const double tilt = rng.uniform(0.0, 0.5);
    g.t_u = rotate_about(Vec3::UnitX(), axis, tilt);
    g.t_v = rotate_about(Vec3::UnitY(), axis, tilt);
    g.scale = Vec2(rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4));
    g.opacity = rng.uniform(0.2, 0.9);
    g.color = Vec3(rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9),
                   rng.uniform(0.1, 0.9));
    g.edge = rng.uniform(0.1, 0.9);
    g.feature = Eigen::VectorXd(3);
    for (int k = 0; k < 3; ++k) g.feature[k] = rng.uniform(0.2, 1.0);
    return g;
}

/// Brute-force local coordinates: solve the 3x3 system
/// origin + tau * view = center + a * t_u + b * t_v directly.
LocalCoords oracle_local_coords(const Gaussian2D& g, const Camera& cam,
                                int ix, int iy) {
    LocalCoords out;
    Mat3 m;
    m.col(0) = g.t_u;
    m.col(1) = g.t_v;
    m.col(2) = -cam.view;
    if (std::abs(m.determinant()) <= 1e-12) return out;
    const Vec3 rhs = pixel_ray_origin(cam, ix, iy) - g.center;
    const Vec3 sol = m.colPivHouseholderQr().solve(rhs);
    out.uv = Vec2(sol.x() / g.scale.x(), sol.y() / g.scale.y());
    out.ray_depth = sol.z();
    out.valid = true;
    return out;
}

} // namespace

TEST_CASE("gaussian kernel matches its closed form") {
    CHECK(gaussian_kernel(Vec2(0.0, 0.0)) == 1.0);
    CHECK(gaussian_kernel(Vec2(1.0, 0.0)) == Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(gaussian_kernel(Vec2(3.0, 4.0)) == Approx(std::exp(-12.5)).epsilon(1e-15));
}

TEST_CASE("pixel ray through the center lands at the kernel peak") {
    Camera cam;
    cam.width = 1;
    cam.height = 1;
    Gaussian2D g;
    g.center = cam.origin + 1.0 * cam.view;
    const LocalCoords lc = pixel_local_coords(g, cam, 0, 0);
    REQUIRE(lc.valid);
    CHECK(lc.uv.x() == 0.0);
    CHECK(lc.uv.y() == 0.0);
    CHECK(lc.ray_depth == Approx(1.0));
}

TEST_CASE("hit one scale length along the u tangent maps to u = 1") {
    Camera cam;
    cam.width = 1;
    cam.height = 1;
    Gaussian2D g;
    g.center = Vec3(0.2, -0.1, 1.0);
    g.scale = Vec2(0.7, 0.3);
    cam.origin = g.center + g.scale.x() * g.t_u - 1.0 * cam.view;
    const LocalCoords lc = pixel_local_coords(g, cam, 0, 0);
    REQUIRE(lc.valid);
    CHECK(lc.uv.x() == Approx(1.0).margin(1e-14));
    CHECK(lc.uv.y() == Approx(0.0).margin(1e-14));
}

TEST_CASE("local coordinates match the linear-system oracle") {
    Rng rng(41);
    Camera cam;
    const Vec3 axis(0.3, -0.8, 0.52);
    cam.right = rotate_about(Vec3::UnitX(), axis, 0.4);
    cam.up = rotate_about(Vec3::UnitY(), axis, 0.4);
    cam.view = rotate_about(Vec3::UnitZ(), axis, 0.4);
    for (int trial = 0; trial < 50; ++trial) {
        const Gaussian2D g = random_gaussian(rng, rng.uniform(0.5, 2.0));
        const int ix = static_cast<int>(rng.uniform_index(cam.width));
        const int iy = static_cast<int>(rng.uniform_index(cam.height));
        const LocalCoords got = pixel_local_coords(g, cam, ix, iy);
        const LocalCoords want = oracle_local_coords(g, cam, ix, iy);
        REQUIRE(got.valid == want.valid);
        if (!got.valid) continue;
        CHECK(std::abs(got.uv.x() - want.uv.x()) < 1e-12);
        CHECK(std::abs(got.uv.y() - want.uv.y()) < 1e-12);
        CHECK(std::abs(got.ray_depth - want.ray_depth) < 1e-12);
    }
}

TEST_CASE("rays parallel to the splat plane are skipped") {
    Camera cam;
    Gaussian2D g;
    g.center = Vec3(0.0, 0.0, 1.0);
    g.t_u = Vec3::UnitX();
    g.t_v = Vec3::UnitZ(); // splat plane contains the view direction
    g.feature = Eigen::VectorXd::Zero(0);
    CHECK_FALSE(pixel_local_coords(g, cam, 3, 7).valid);

    const RenderedChannels rc = render_channels({g}, cam);
    for (const double a : rc.alpha) CHECK(a == 0.0);
    for (const Vec3& c : rc.color) CHECK(c.norm() == 0.0);
}

TEST_CASE("bezier evaluation interpolates endpoints and rejects bad t") {
    const Vec3 p0(0, 0, 0), p1(1, 0, 0), p2(2, 0, 0), p3(3, 0, 0);
    CHECK((bezier_point(p0, p1, p2, p3, 0.0) - p0).norm() == 0.0);
    CHECK((bezier_point(p0, p1, p2, p3, 1.0) - p3).norm() == 0.0);
    CHECK(bezier_point(p0, p1, p2, p3, 0.5).x() == Approx(1.5).margin(1e-15));

    const Vec3 p(0.3, -0.4, 0.9);
    for (const double t : {0.0, 0.21, 0.5, 0.83, 1.0})
        CHECK((bezier_point(p, p, p, p, t) - p).norm() < 1e-15);

    CHECK_THROWS_AS(bezier_point(p0, p1, p2, p3, -0.01), Error);
    CHECK_THROWS_AS(bezier_point(p0, p1, p2, p3, 1.01), Error);
}

TEST_CASE("a single opaque gaussian reproduces its payload exactly") {
    Camera cam;
    cam.width = 3;
    cam.height = 3;
    Gaussian2D g;
    g.center = cam.origin + 1.0 * cam.view; // on the center pixel's ray
    g.opacity = 1.0;
    g.color = Vec3(0.37, 0.81, 0.24);
    g.edge = 0.66;
    g.feature = Eigen::VectorXd(2);
    g.feature << 0.125, 0.875;

    const RenderedChannels rc = render_channels({g}, cam);
    const std::size_t px = 1 * 3 + 1;
    CHECK(rc.color[px].x() == g.color.x());
    CHECK(rc.color[px].y() == g.color.y());
    CHECK(rc.color[px].z() == g.color.z());
    CHECK(rc.edge[px] == g.edge);
    CHECK(rc.alpha[px] == 1.0);
    CHECK(rc.feature[px * 2 + 0] == g.feature[0]);
    CHECK(rc.feature[px * 2 + 1] == g.feature[1]);
}

TEST_CASE("two half-opaque gaussians composite to the closed form") {
    Camera cam;
    cam.width = 1;
    cam.height = 1;
    Gaussian2D front;
    front.center = cam.origin + 1.0 * cam.view;
    front.opacity = 0.5;
    front.edge = 0.8;
    front.color = Vec3(0.9, 0.1, 0.3);
    front.feature = Eigen::VectorXd::Zero(0);
    Gaussian2D back = front;
    back.center = cam.origin + 2.0 * cam.view;
    back.opacity = 0.5;
    back.edge = 0.4;
    back.color = Vec3(0.2, 0.6, 0.7);

    const RenderedChannels rc = render_channels({front, back}, cam);
    CHECK(rc.edge[0] == 0.5 * front.edge + 0.25 * back.edge);
    CHECK(rc.color[0].x() == 0.5 * front.color.x() + 0.25 * back.color.x());
    CHECK(rc.alpha[0] == 0.75);
}

TEST_CASE("random scenes match a naive compositing oracle") {
    Rng rng(1009);
    Camera cam; // 64x64
    std::vector<Gaussian2D> gaussians;
    for (int i = 0; i < 10; ++i)
        gaussians.push_back(random_gaussian(rng, 0.5 + 0.2 * i));

    const RenderedChannels rc = render_channels(gaussians, cam);

    double worst = 0.0;
    for (int iy = 0; iy < cam.height; ++iy) {
        for (int ix = 0; ix < cam.width; ++ix) {
            Vec3 color = Vec3::Zero();
            double edge = 0.0, alpha = 0.0;
            Eigen::VectorXd feat = Eigen::VectorXd::Zero(3);
            double trans = 1.0;
            for (const Gaussian2D& g : gaussians) {
                const LocalCoords lc = oracle_local_coords(g, cam, ix, iy);
                if (!lc.valid) continue;
                const double a =
                    g.opacity * std::exp(-0.5 * lc.uv.squaredNorm());
                if (a < 1e-4) continue;
                color += a * trans * g.color;
                edge += a * trans * g.edge;
                feat += a * trans * g.feature;
                alpha += a * trans;
                trans *= 1.0 - a;
            }
            const std::size_t px = static_cast<std::size_t>(iy) * cam.width + ix;
            worst = std::max(worst, (rc.color[px] - color).lpNorm<Eigen::Infinity>());
            worst = std::max(worst, std::abs(rc.edge[px] - edge));
            worst = std::max(worst, std::abs(rc.alpha[px] - alpha));
            for (int k = 0; k < 3; ++k)
                worst = std::max(worst, std::abs(rc.feature[px * 3 + k] - feat[k]));
        }
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("contributions below the threshold neither paint nor attenuate") {
    Camera cam;
    cam.width = 1;
    cam.height = 1;
    Gaussian2D faint;
    faint.center = cam.origin + 0.5 * cam.view;
    faint.opacity = 9e-5; // below 1e-4 even at the kernel peak
    faint.color = Vec3(1.0, 1.0, 1.0);
    faint.edge = 1.0;
    faint.feature = Eigen::VectorXd::Zero(0);
    Gaussian2D solid = faint;
    solid.center = cam.origin + 1.5 * cam.view;
    solid.opacity = 0.7;
    solid.edge = 0.5;

    const RenderedChannels with_faint = render_channels({faint, solid}, cam);
    const RenderedChannels without = render_channels({solid}, cam);
    CHECK(with_faint.edge[0] == without.edge[0]);
    CHECK(with_faint.alpha[0] == without.alpha[0]);
    CHECK((with_faint.color[0] - without.color[0]).norm() == 0.0);
}

TEST_CASE("rendering requires a front-to-back order and is deterministic") {
    Rng rng(77);
    Camera cam;
    cam.width = 16;
    cam.height = 16;
    std::vector<Gaussian2D> unsorted;
    for (int i = 0; i < 6; ++i)
        unsorted.push_back(random_gaussian(rng, rng.uniform(0.5, 2.0)));

    bool already_sorted = true;
    for (std::size_t i = 1; i < unsorted.size(); ++i)
        already_sorted &= (unsorted[i - 1].center.z() <= unsorted[i].center.z());
    if (!already_sorted)
        CHECK_THROWS_AS(render_channels(unsorted, cam), Error);

    const std::vector<Gaussian2D> sorted = sort_front_to_back(unsorted, cam);
    for (std::size_t i = 1; i < sorted.size(); ++i)
        CHECK((sorted[i - 1].center - cam.origin).dot(cam.view) <=
              (sorted[i].center - cam.origin).dot(cam.view));

    const RenderedChannels a = render_channels(sorted, cam);
    const RenderedChannels b = render_channels(sorted, cam);
    CHECK(a.edge == b.edge);
    CHECK(a.alpha == b.alpha);
    CHECK(a.feature == b.feature);
    for (std::size_t px = 0; px < a.color.size(); ++px)
        CHECK((a.color[px] - b.color[px]).norm() == 0.0);
}

TEST_CASE("edge and alpha maps stay inside the unit interval") {
    Rng rng(5150);
    Camera cam;
    cam.width = 32;
    cam.height = 32;
    for (int scene = 0; scene < 5; ++scene) {
        std::vector<Gaussian2D> gaussians;
        for (int i = 0; i < 8; ++i)
            gaussians.push_back(random_gaussian(rng, 0.4 + 0.2 * i));
        const RenderedChannels rc = render_channels(gaussians, cam);
        for (const double e : rc.edge) {
            CHECK(e >= 0.0);
            CHECK(e <= 1.0);
        }
        for (const double a : rc.alpha) {
            CHECK(a >= 0.0);
            CHECK(a <= 1.0);
        }
    }
}

TEST_CASE("channel selector controls which maps are produced") {
    Camera cam;
    cam.width = 4;
    cam.height = 4;
    Gaussian2D g;
    g.center = cam.origin + 1.0 * cam.view;
    g.feature = Eigen::VectorXd::Ones(5);
    ChannelSelector sel;
    sel.feature = false;
    sel.alpha = false;
    const RenderedChannels rc = render_channels({g}, cam, sel);
    CHECK(rc.feature_dim == 0);
    CHECK(rc.feature.empty());
    CHECK(rc.alpha.empty());
    CHECK(rc.color.size() == 16);
    CHECK(rc.edge.size() == 16);
}

TEST_CASE("mismatched feature dimensions are rejected") {
    Camera cam;
    Gaussian2D a;
    a.center = cam.origin + 1.0 * cam.view;
    a.feature = Eigen::VectorXd::Ones(3);
    Gaussian2D b = a;
    b.center = cam.origin + 2.0 * cam.view;
    b.feature = Eigen::VectorXd::Ones(4);
    CHECK_THROWS_AS(render_channels({a, b}, cam), Error);
}

TEST_CASE("gaussian and camera validation reject malformed inputs") {
    Gaussian2D g;
    g.feature = Eigen::VectorXd::Zero(2);
    CHECK_NOTHROW(validate(g));
    Gaussian2D skewed = g;
    skewed.t_v = (Vec3::UnitY() + 0.1 * Vec3::UnitX()).normalized();
    CHECK_THROWS_AS(validate(skewed), Error);
    Gaussian2D overdriven = g;
    overdriven.opacity = 1.2;
    CHECK_THROWS_AS(validate(overdriven), Error);
    Gaussian2D flat = g;
    flat.scale = Vec2(0.0, 0.1);
    CHECK_THROWS_AS(validate(flat), Error);

    Camera cam;
    CHECK_NOTHROW(validate(cam));
    Camera crooked = cam;
    crooked.up = (Vec3::UnitY() + 0.2 * Vec3::UnitZ()).normalized();
    CHECK_THROWS_AS(validate(crooked), Error);
    Camera degenerate = cam;
    degenerate.width = 0;
    CHECK_THROWS_AS(validate(degenerate), Error);
}
