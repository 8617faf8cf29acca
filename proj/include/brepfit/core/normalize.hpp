// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <utility>

#include "brepfit/core/types.hpp"

namespace brepfit {

/// x' = scale * (x + translation). Isotropic, so all length thresholds stay
/// comparable after normalization.
struct SimilarityTransform {
    Vec3 translation = Vec3::Zero();
    double scale = 1.0;

    Vec3 apply(const Vec3& x) const { return scale * (x + translation); }
    Vec3 invert(const Vec3& x) const { return x / scale - translation; }

    bool is_identity(double tol = 0.0) const {
        return translation.norm() <= tol && std::abs(scale - 1.0) <= tol;
    }
};

/// Translates the bounding-box minimum to the origin and scales by the
/// longest axis, so the result fits [0,1]^3 with the longest axis spanning
/// exactly [0,1]. A zero-extent cloud is translated only. Labels and edge
/// flags are carried over; normals are unchanged (rotation-free transform).
inline std::pair<LabeledPointCloud, SimilarityTransform>
normalize_cloud(const LabeledPointCloud& cloud) {
    if (cloud.empty()) throw Error("normalize_cloud: empty input");
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());
    for (const Vec3& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double longest = (hi - lo).maxCoeff();
    SimilarityTransform t;
    t.translation = -lo;
    t.scale = longest > 0.0 ? 1.0 / longest : 1.0;

    LabeledPointCloud out = cloud;
    for (Vec3& p : out.points) p = t.apply(p);
    return {std::move(out), t};
}

} // namespace brepfit
