// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Run-wide configuration: every tunable from the fitting, trimming,
// assembly, metric, and splat-loss stages under one roof, plus the global
// seed and verbosity. The file format is a plain key-value document:
//
//   # comment
//   seed = 7
//   verbosity = 1
//
//   [ransac]
//   max_iterations = 1024
//   inlier_threshold = 0.01
//   min_inlier_ratio = 0.5
//   type_preference_margin = 0.02
//   seed = 0
//
//   [trim]
//   projection_threshold = 0.02
//   gap_threshold = 0.05
//   min_support = 5
//   corner_cluster_radius = 0.02
//
//   [assembly]
//   snap_radius = 0.02
//   min_face_inliers = 30
//   loop_closure_tolerance = 0.01
//
//   [metrics]
//   tau = 0.08
//   surface_density = 4096
//   curve_density = 512
//
//   [triplet]
//   margin = 0.3
//   triplets_per_mask = 16
//   negatives_per_mask = 64
//
//   [stage1]
//   lambda = 0.2
//   edge_weight = 0.1
//
// Section headers name the stage; keys outside any section are global.
// Unknown sections and keys are rejected with the offending name. When a
// key repeats, the last occurrence wins; command-line flags override file
// values. The global seed is folded (xor) into the RANSAC stream seed and
// drives triplet sampling, so runs with equal config and seed are
// reproducible byte for byte.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>

#include "brepfit/assembly/assembly.hpp"
#include "brepfit/core/error.hpp"
#include "brepfit/fitting/ransac.hpp"
#include "brepfit/intersect/trim.hpp"
#include "brepfit/metrics/metrics.hpp"
#include "brepfit/splat/types.hpp"

namespace brepfit {

struct PipelineConfig {
    RansacConfig ransac;
    TrimConfig trim;
    AssemblyConfig assembly;
    MetricConfig metrics;
    TripletConfig triplet;
    Stage1LossConfig stage1;
    std::uint64_t seed = 0;
    int verbosity = 0;
};

inline void validate(const PipelineConfig& cfg) {
    validate(cfg.ransac);
    validate(cfg.trim);
    validate(cfg.assembly);
    validate(cfg.metrics);
    validate(cfg.triplet);
    validate(cfg.stage1);
    if (cfg.verbosity < 0)
        throw ConfigError("config: verbosity must be non-negative");
}

namespace detail {

inline std::string_view config_trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

template <typename T>
inline T config_number(std::string_view value, const std::string& key) {
    T parsed{};
    const char* begin = value.data();
    const char* end = begin + value.size();
    if (!value.empty() && value.front() == '+') ++begin; // from_chars rejects '+'
    const auto [ptr, ec] = std::from_chars(begin, end, parsed);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("config: invalid value '" + std::string(value) +
                          "' for key " + key);
    return parsed;
}

/// Assigns one key in one section; throws naming the key when nothing in
/// that section matches.
inline void config_assign(PipelineConfig& cfg, const std::string& section,
                          const std::string& key, std::string_view value) {
    const std::string qualified = section.empty() ? key : section + "." + key;
    const auto num = [&](auto& field) {
        field = config_number<std::decay_t<decltype(field)>>(value, qualified);
    };
    if (section.empty()) {
        if (key == "seed") return num(cfg.seed);
        if (key == "verbosity") return num(cfg.verbosity);
    } else if (section == "ransac") {
        if (key == "max_iterations") return num(cfg.ransac.max_iterations);
        if (key == "inlier_threshold") return num(cfg.ransac.inlier_threshold);
        if (key == "min_inlier_ratio") return num(cfg.ransac.min_inlier_ratio);
        if (key == "type_preference_margin")
            return num(cfg.ransac.type_preference_margin);
        if (key == "seed") return num(cfg.ransac.seed);
    } else if (section == "trim") {
        if (key == "projection_threshold")
            return num(cfg.trim.projection_threshold);
        if (key == "gap_threshold") return num(cfg.trim.gap_threshold);
        if (key == "min_support") return num(cfg.trim.min_support);
        if (key == "corner_cluster_radius")
            return num(cfg.trim.corner_cluster_radius);
    } else if (section == "assembly") {
        if (key == "snap_radius") return num(cfg.assembly.snap_radius);
        if (key == "min_face_inliers") return num(cfg.assembly.min_face_inliers);
        if (key == "loop_closure_tolerance")
            return num(cfg.assembly.loop_closure_tolerance);
    } else if (section == "metrics") {
        if (key == "tau") return num(cfg.metrics.tau);
        if (key == "surface_density") return num(cfg.metrics.surface_density);
        if (key == "curve_density") return num(cfg.metrics.curve_density);
    } else if (section == "triplet") {
        if (key == "margin") return num(cfg.triplet.margin);
        if (key == "triplets_per_mask") return num(cfg.triplet.triplets_per_mask);
        if (key == "negatives_per_mask")
            return num(cfg.triplet.negatives_per_mask);
    } else if (section == "stage1") {
        if (key == "lambda") return num(cfg.stage1.lambda);
        if (key == "edge_weight") return num(cfg.stage1.edge_weight);
    } else {
        throw ConfigError("config: unknown section [" + section + "]");
    }
    throw ConfigError("config: unknown key " + qualified);
}

} // namespace detail

/// Parses a sectioned key-value document on top of `base` (so command-line
/// defaults survive keys the file omits). Rejects unknown sections/keys and
/// malformed lines; validates the final result.
inline PipelineConfig parse_config(std::istream& in,
                                   const PipelineConfig& base = {},
                                   const std::string& origin = "<config>") {
    PipelineConfig cfg = base;
    std::string section;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = detail::config_trim(line);
        if (text.empty() || text.front() == '#') continue;
        if (text.front() == '[') {
            if (text.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": unterminated section header");
            section = std::string(
                detail::config_trim(text.substr(1, text.size() - 2)));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": empty section name");
            continue;
        }
        const std::size_t eq = text.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" +
                              std::string(text) + "'");
        const std::string key(detail::config_trim(text.substr(0, eq)));
        const std::string_view value = detail::config_trim(text.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected 'key = value', got '" +
                              std::string(text) + "'");
        detail::config_assign(cfg, section, key, value);
    }
    validate(cfg);
    return cfg;
}

inline PipelineConfig parse_config_file(const std::string& path,
                                        const PipelineConfig& base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file: " + path);
    return parse_config(in, base, path);
}

/// Canonical full dump of a configuration, parseable by parse_config.
inline std::string serialize_config(const PipelineConfig& cfg) {
    std::ostringstream out;
    out.precision(17);
    out << "seed = " << cfg.seed << "\n";
    out << "verbosity = " << cfg.verbosity << "\n";
    out << "\n[ransac]\n";
    out << "max_iterations = " << cfg.ransac.max_iterations << "\n";
    out << "inlier_threshold = " << cfg.ransac.inlier_threshold << "\n";
    out << "min_inlier_ratio = " << cfg.ransac.min_inlier_ratio << "\n";
    out << "type_preference_margin = " << cfg.ransac.type_preference_margin
        << "\n";
    out << "seed = " << cfg.ransac.seed << "\n";
    out << "\n[trim]\n";
    out << "projection_threshold = " << cfg.trim.projection_threshold << "\n";
    out << "gap_threshold = " << cfg.trim.gap_threshold << "\n";
    out << "min_support = " << cfg.trim.min_support << "\n";
    out << "corner_cluster_radius = " << cfg.trim.corner_cluster_radius << "\n";
    out << "\n[assembly]\n";
    out << "snap_radius = " << cfg.assembly.snap_radius << "\n";
    out << "min_face_inliers = " << cfg.assembly.min_face_inliers << "\n";
    out << "loop_closure_tolerance = " << cfg.assembly.loop_closure_tolerance
        << "\n";
    out << "\n[metrics]\n";
    out << "tau = " << cfg.metrics.tau << "\n";
    out << "surface_density = " << cfg.metrics.surface_density << "\n";
    out << "curve_density = " << cfg.metrics.curve_density << "\n";
    out << "\n[triplet]\n";
    out << "margin = " << cfg.triplet.margin << "\n";
    out << "triplets_per_mask = " << cfg.triplet.triplets_per_mask << "\n";
    out << "negatives_per_mask = " << cfg.triplet.negatives_per_mask << "\n";
    out << "\n[stage1]\n";
    out << "lambda = " << cfg.stage1.lambda << "\n";
    out << "edge_weight = " << cfg.stage1.edge_weight << "\n";
    return out.str();
}

} // namespace brepfit
