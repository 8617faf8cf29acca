// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "brepfit/core/kdtree.hpp"
#include "brepfit/core/rng.hpp"

#include <algorithm>
#include <vector>

using namespace brepfit;

namespace {

std::vector<Vec3> random_cloud(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    return pts;
}

std::vector<detail::KdTree::Hit> brute_knn(const std::vector<Vec3>& pts,
                                           const Vec3& q, std::size_t k, int skip) {
    std::vector<detail::KdTree::Hit> hits;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (static_cast<int>(i) == skip) continue;
        hits.push_back({(pts[i] - q).squaredNorm(), static_cast<int>(i)});
    }
    std::sort(hits.begin(), hits.end());
    if (hits.size() > k) hits.resize(k);
    return hits;
}

} // namespace

TEST_CASE("knn agrees with brute force including tie order", "[kdtree]") {
    const auto pts = random_cloud(500, 11);
    const detail::KdTree tree(pts);
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec3 q(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                     rng.uniform(-1.2, 1.2));
        for (std::size_t k : {std::size_t(1), std::size_t(7), std::size_t(32)}) {
            const auto got = tree.knn(q, k);
            const auto want = brute_knn(pts, q, k, -1);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                REQUIRE(got[i].index == want[i].index);
                REQUIRE(got[i].dist2 == want[i].dist2);
            }
        }
    }
}

TEST_CASE("knn skip leaves the query point out", "[kdtree]") {
    const auto pts = random_cloud(200, 21);
    const detail::KdTree tree(pts);
    for (int i : {0, 17, 199}) {
        const auto got = tree.knn(pts[i], 5, i);
        const auto want = brute_knn(pts, pts[i], 5, i);
        REQUIRE(got.size() == 5);
        for (std::size_t j = 0; j < got.size(); ++j)
            REQUIRE(got[j].index == want[j].index);
    }
}

TEST_CASE("radius query returns exactly the in-range indices", "[kdtree]") {
    const auto pts = random_cloud(400, 31);
    const detail::KdTree tree(pts);
    Rng rng(32);
    for (int trial = 0; trial < 30; ++trial) {
        const Vec3 q(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const double r = rng.uniform(0.05, 0.6);
        const auto got = tree.radius(q, r);
        std::vector<int> want;
        for (std::size_t i = 0; i < pts.size(); ++i)
            if ((pts[i] - q).norm() <= r) want.push_back(static_cast<int>(i));
        REQUIRE(got == want);
        REQUIRE(tree.any_within(q, r) == !want.empty());
    }
}

TEST_CASE("nearest and edge cases", "[kdtree]") {
    const std::vector<Vec3> pts = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 2, 0)};
    const detail::KdTree tree(pts);
    double d2 = 0.0;
    REQUIRE(tree.nearest(Vec3(0.9, 0.1, 0), &d2) == 1);
    REQUIRE(d2 == Catch::Approx(0.02));

    const std::vector<Vec3> empty;
    const detail::KdTree none(empty);
    REQUIRE(none.nearest(Vec3::Zero()) == -1);
    REQUIRE(none.knn(Vec3::Zero(), 3).empty());
    REQUIRE_FALSE(none.any_within(Vec3::Zero(), 10.0));

    // Duplicate coordinates: ties resolve by ascending index.
    const std::vector<Vec3> dup = {Vec3(1, 1, 1), Vec3(1, 1, 1), Vec3(1, 1, 1)};
    const detail::KdTree dtree(dup);
    const auto hits = dtree.knn(Vec3(1, 1, 1), 3);
    REQUIRE(hits.size() == 3);
    REQUIRE(hits[0].index == 0);
    REQUIRE(hits[1].index == 1);
    REQUIRE(hits[2].index == 2);
}
