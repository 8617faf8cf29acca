// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Text serialization for Gaussian scenes. One record per line:
//
//   px py pz  tux tuy tuz  tvx tvy tvz  su sv  opacity  r g b  edge  f0 .. fD-1
//
// '#' comment lines and blank lines are skipped. The feature dimension D is
// inferred from the first record (16 fixed columns, the rest are feature
// components) and must be the same on every line; D = 0 is allowed. The
// reader checks finiteness only; semantic constraints (unit tangents,
// opacity range) are enforced by validate(Gaussian2D) at the call site, so
// fixtures for validation tests can still be written to disk.

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "brepfit/io/text.hpp"
#include "brepfit/splat/types.hpp"

namespace brepfit {

inline std::vector<Gaussian2D> read_scene(std::istream& in,
                                          const std::string& origin = "<stream>") {
    std::vector<Gaussian2D> scene;
    int feature_dim = -1;
    std::string line;
    int line_no = 0;
    while (detail::next_line(in, line)) {
        ++line_no;
        const auto tokens = detail::split_tokens(line);
        if (tokens.empty() || tokens[0].front() == '#') continue;
        if (tokens.size() < 16)
            detail::parse_fail(origin, line_no,
                               "a record needs at least 16 values, got " +
                                   std::to_string(tokens.size()));
        const int d = static_cast<int>(tokens.size()) - 16;
        if (feature_dim < 0) feature_dim = d;
        if (d != feature_dim)
            detail::parse_fail(origin, line_no,
                               "feature dimension " + std::to_string(d) +
                                   " disagrees with earlier records (" +
                                   std::to_string(feature_dim) + ")");

        double v[16];
        for (int k = 0; k < 16; ++k) {
            v[k] = detail::require_double(tokens[k], origin, line_no, "record value");
            if (!std::isfinite(v[k]))
                detail::parse_fail(origin, line_no, "non-finite record value");
        }
        Gaussian2D g;
        g.center = Vec3(v[0], v[1], v[2]);
        g.t_u = Vec3(v[3], v[4], v[5]);
        g.t_v = Vec3(v[6], v[7], v[8]);
        g.scale = Vec2(v[9], v[10]);
        g.opacity = v[11];
        g.color = Vec3(v[12], v[13], v[14]);
        g.edge = v[15];
        g.feature.resize(d);
        for (int k = 0; k < d; ++k) {
            const double f =
                detail::require_double(tokens[16 + k], origin, line_no, "feature value");
            if (!std::isfinite(f))
                detail::parse_fail(origin, line_no, "non-finite feature value");
            g.feature[k] = f;
        }
        scene.push_back(std::move(g));
    }
    return scene;
}

inline std::vector<Gaussian2D> read_scene(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    return read_scene(in, path);
}

inline void write_scene(const std::vector<Gaussian2D>& scene, std::ostream& out) {
    out << "# brepfit gaussian scene\n"
        << "# columns: px py pz  tux tuy tuz  tvx tvy tvz  su sv  opacity  "
           "r g b  edge  features\n";
    for (const Gaussian2D& g : scene) {
        const double fixed[16] = {
            g.center.x(), g.center.y(), g.center.z(), g.t_u.x(),   g.t_u.y(),
            g.t_u.z(),    g.t_v.x(),    g.t_v.y(),    g.t_v.z(),   g.scale.x(),
            g.scale.y(),  g.opacity,    g.color.x(),  g.color.y(), g.color.z(),
            g.edge};
        for (int k = 0; k < 16; ++k) {
            if (k) out << ' ';
            out << detail::format_g17(fixed[k]);
        }
        for (Eigen::Index k = 0; k < g.feature.size(); ++k)
            out << ' ' << detail::format_g17(g.feature[k]);
        out << '\n';
    }
}

inline void write_scene(const std::vector<Gaussian2D>& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_scene(scene, out);
    if (!out) throw Error("write failed: " + path);
}

} // namespace brepfit
