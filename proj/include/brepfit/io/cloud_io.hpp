// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Labeled point-cloud readers and writers. Two interchange forms are
// supported:
//   - PLY (ascii or binary little-endian) with vertex properties x, y, z,
//     optional nx/ny/nz, optional patch_id (int, -1 = unlabeled) and
//     optional edge (float in [0,1]);
//   - XYZL, a plain-text table of "x y z patch_id edge" rows for
//     hand-written fixtures ('#' comments and blank lines are skipped;
//     normals are not representable in this form).
// Readers materialize missing patch_id/edge columns as kUnlabeled/0 so the
// returned cloud always carries full label arrays. Writers format floats
// with 17 significant digits (and binary PLY stores doubles), so a
// write/read round trip preserves every coordinate to better than 1e-12.

#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <iostream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "brepfit/core/types.hpp"
#include "brepfit/io/text.hpp"

namespace brepfit {

/// On-disk encodings understood by write_cloud. Readers detect the encoding
/// from the content, not the name.
enum class CloudFormat { PlyBinary, PlyAscii, Xyzl };

namespace detail {

inline void emit_warning(std::vector<std::string>* sink, const std::string& msg) {
    if (sink)
        sink->push_back(msg);
    else
        std::cerr << "warning: " << msg << "\n";
}

// ---------------------------------------------------------------------------
// PLY machinery
// ---------------------------------------------------------------------------

enum class PlyType : std::uint8_t { I8, U8, I16, U16, I32, U32, F32, F64 };

inline std::size_t ply_type_size(PlyType t) {
    switch (t) {
    case PlyType::I8:
    case PlyType::U8: return 1;
    case PlyType::I16:
    case PlyType::U16: return 2;
    case PlyType::I32:
    case PlyType::U32:
    case PlyType::F32: return 4;
    case PlyType::F64: return 8;
    }
    return 0;
}

inline bool parse_ply_type(std::string_view s, PlyType& out) {
    if (s == "char" || s == "int8") out = PlyType::I8;
    else if (s == "uchar" || s == "uint8") out = PlyType::U8;
    else if (s == "short" || s == "int16") out = PlyType::I16;
    else if (s == "ushort" || s == "uint16") out = PlyType::U16;
    else if (s == "int" || s == "int32") out = PlyType::I32;
    else if (s == "uint" || s == "uint32") out = PlyType::U32;
    else if (s == "float" || s == "float32") out = PlyType::F32;
    else if (s == "double" || s == "float64") out = PlyType::F64;
    else return false;
    return true;
}

inline bool ply_type_is_integer(PlyType t) {
    return t != PlyType::F32 && t != PlyType::F64;
}

inline double decode_ply_scalar(const unsigned char* p, PlyType t) {
    static_assert(std::endian::native == std::endian::little,
                  "binary PLY decoding assumes a little-endian host");
    switch (t) {
    case PlyType::I8: return static_cast<double>(static_cast<std::int8_t>(p[0]));
    case PlyType::U8: return static_cast<double>(p[0]);
    case PlyType::I16: {
        std::int16_t v;
        std::memcpy(&v, p, 2);
        return static_cast<double>(v);
    }
    case PlyType::U16: {
        std::uint16_t v;
        std::memcpy(&v, p, 2);
        return static_cast<double>(v);
    }
    case PlyType::I32: {
        std::int32_t v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    case PlyType::U32: {
        std::uint32_t v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    case PlyType::F32: {
        float v;
        std::memcpy(&v, p, 4);
        return static_cast<double>(v);
    }
    case PlyType::F64: {
        double v;
        std::memcpy(&v, p, 8);
        return v;
    }
    }
    return 0.0;
}

/// Reads one binary scalar; throws on a short read.
inline double read_ply_scalar(std::istream& in, PlyType t,
                              const std::string& origin, const char* where) {
    unsigned char buf[8];
    const std::size_t n = ply_type_size(t);
    if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n)))
        throw ParseError(origin + ": unexpected end of file in " + where);
    return decode_ply_scalar(buf, t);
}

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::F64;
    bool is_list = false;
    PlyType count_type = PlyType::U8;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

struct PlyHeader {
    bool binary = false;
    std::vector<PlyElement> elements;
};

/// Parses header lines after the "ply" magic, up to and including
/// end_header. `line_no` continues the caller's count.
inline PlyHeader parse_ply_header(std::istream& in, const std::string& origin,
                                  int& line_no) {
    PlyHeader header;
    bool have_format = false;
    std::string line;
    while (true) {
        if (!next_line(in, line))
            parse_fail(origin, line_no, "unexpected end of file in PLY header");
        ++line_no;
        const auto tokens = split_tokens(line);
        if (tokens.empty()) continue;
        const std::string_view key = tokens[0];
        if (key == "comment" || key == "obj_info") continue;
        if (key == "format") {
            if (tokens.size() != 3)
                parse_fail(origin, line_no, "malformed format line");
            if (tokens[1] == "ascii") header.binary = false;
            else if (tokens[1] == "binary_little_endian") header.binary = true;
            else
                parse_fail(origin, line_no,
                           "unsupported PLY format '" + std::string(tokens[1]) +
                               "' (ascii and binary_little_endian are supported)");
            have_format = true;
        } else if (key == "element") {
            if (tokens.size() != 3)
                parse_fail(origin, line_no, "malformed element line");
            PlyElement elem;
            elem.name = std::string(tokens[1]);
            const long long count =
                require_int(tokens[2], origin, line_no, "element count");
            if (count < 0) parse_fail(origin, line_no, "negative element count");
            elem.count = static_cast<std::size_t>(count);
            header.elements.push_back(std::move(elem));
        } else if (key == "property") {
            if (header.elements.empty())
                parse_fail(origin, line_no, "property before any element");
            PlyProperty prop;
            if (tokens.size() == 3) {
                if (!parse_ply_type(tokens[1], prop.type))
                    parse_fail(origin, line_no,
                               "unknown property type '" + std::string(tokens[1]) + "'");
                prop.name = std::string(tokens[2]);
            } else if (tokens.size() == 5 && tokens[1] == "list") {
                prop.is_list = true;
                if (!parse_ply_type(tokens[2], prop.count_type) ||
                    !ply_type_is_integer(prop.count_type))
                    parse_fail(origin, line_no, "invalid list count type");
                if (!parse_ply_type(tokens[3], prop.type))
                    parse_fail(origin, line_no, "invalid list item type");
                prop.name = std::string(tokens[4]);
            } else {
                parse_fail(origin, line_no, "malformed property line");
            }
            header.elements.back().props.push_back(std::move(prop));
        } else if (key == "end_header") {
            break;
        } else {
            parse_fail(origin, line_no,
                       "unknown PLY header keyword '" + std::string(key) + "'");
        }
    }
    if (!have_format)
        parse_fail(origin, line_no, "PLY header has no format line");
    return header;
}

/// Per-vertex-property destination in the cloud arrays.
enum class CloudColumn { X, Y, Z, NX, NY, NZ, Patch, Edge, Ignore };

inline CloudColumn cloud_column_for(const std::string& name) {
    if (name == "x") return CloudColumn::X;
    if (name == "y") return CloudColumn::Y;
    if (name == "z") return CloudColumn::Z;
    if (name == "nx") return CloudColumn::NX;
    if (name == "ny") return CloudColumn::NY;
    if (name == "nz") return CloudColumn::NZ;
    if (name == "patch_id") return CloudColumn::Patch;
    if (name == "edge") return CloudColumn::Edge;
    return CloudColumn::Ignore;
}

/// Shared per-row checks and conversions. `row_label` names the offending
/// row in errors (file line for text inputs, vertex index for binary).
struct CloudRowSink {
    LabeledPointCloud cloud;
    bool want_normals = false;
    bool want_patch = false;
    bool want_edge = false;
    std::string origin;

    void push_row(double x, double y, double z, double nx, double ny, double nz,
                  double patch, double edge, const std::string& row_label) {
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
            throw ParseError(origin + ": non-finite coordinate at " + row_label);
        cloud.points.emplace_back(x, y, z);
        if (want_normals) {
            Vec3 n(nx, ny, nz);
            if (!n.allFinite())
                throw ParseError(origin + ": non-finite normal at " + row_label);
            const double len = n.norm();
            if (len < 1e-12)
                throw ParseError(origin + ": zero-length normal at " + row_label);
            cloud.normals.push_back(n / len);
        }
        if (want_patch) {
            if (!std::isfinite(patch) ||
                std::abs(patch - std::llround(patch)) > 1e-6)
                throw ParseError(origin + ": non-integer patch id at " + row_label);
            const long long id = std::llround(patch);
            if (id < -1 || id > std::numeric_limits<int>::max())
                throw ParseError(origin + ": patch id out of range at " + row_label);
            cloud.patch_id.push_back(static_cast<int>(id));
        }
        if (want_edge) {
            if (!std::isfinite(edge) || edge < -1e-9 || edge > 1.0 + 1e-9)
                throw ParseError(origin + ": edge flag outside [0,1] at " + row_label);
            cloud.edge_flag.push_back(std::clamp(edge, 0.0, 1.0));
        }
    }

    /// Fills the label columns the file did not carry.
    LabeledPointCloud finish(std::vector<std::string>* warnings) {
        const std::size_t n = cloud.points.size();
        if (want_patch && !want_edge)
            emit_warning(warnings,
                         origin + ": patch_id present but edge missing; "
                                  "edge flags default to 0");
        if (!want_patch) cloud.patch_id.assign(n, kUnlabeled);
        if (!want_edge) cloud.edge_flag.assign(n, 0.0);
        return std::move(cloud);
    }
};

inline LabeledPointCloud read_cloud_ply(std::istream& in, const std::string& origin,
                                        std::vector<std::string>* warnings,
                                        int& line_no) {
    const PlyHeader header = parse_ply_header(in, origin, line_no);

    const PlyElement* vertex = nullptr;
    for (const PlyElement& e : header.elements)
        if (e.name == "vertex") vertex = &e;
    if (!vertex)
        throw ParseError(origin + ": PLY header declares no vertex element");

    std::vector<CloudColumn> roles;
    bool seen[9] = {};
    for (const PlyProperty& p : vertex->props) {
        if (p.is_list)
            throw ParseError(origin + ": list property '" + p.name +
                             "' not supported on the vertex element");
        const CloudColumn col = cloud_column_for(p.name);
        if (col != CloudColumn::Ignore) {
            if (seen[static_cast<int>(col)])
                throw ParseError(origin + ": duplicate vertex property '" + p.name + "'");
            seen[static_cast<int>(col)] = true;
        }
        roles.push_back(col);
    }
    const auto has = [&](CloudColumn c) { return seen[static_cast<int>(c)]; };
    if (!has(CloudColumn::X) || !has(CloudColumn::Y) || !has(CloudColumn::Z))
        throw ParseError(origin + ": vertex element must declare x, y and z");
    const int normal_count = int(has(CloudColumn::NX)) + int(has(CloudColumn::NY)) +
                             int(has(CloudColumn::NZ));
    if (normal_count != 0 && normal_count != 3)
        throw ParseError(origin + ": vertex normals must declare all of nx, ny, nz");

    CloudRowSink sink;
    sink.origin = origin;
    sink.want_normals = normal_count == 3;
    sink.want_patch = has(CloudColumn::Patch);
    sink.want_edge = has(CloudColumn::Edge);
    sink.cloud.points.reserve(vertex->count);

    std::string line;
    for (const PlyElement& elem : header.elements) {
        if (&elem != vertex) {
            // Skip a foreign element's data wholesale.
            for (std::size_t i = 0; i < elem.count; ++i) {
                if (!header.binary) {
                    if (!next_line(in, line))
                        parse_fail(origin, line_no + 1,
                                   "unexpected end of file in element '" + elem.name + "'");
                    ++line_no;
                    continue;
                }
                for (const PlyProperty& p : elem.props) {
                    if (!p.is_list) {
                        read_ply_scalar(in, p.type, origin,
                                        ("element '" + elem.name + "'").c_str());
                        continue;
                    }
                    const double c = read_ply_scalar(in, p.count_type, origin,
                                                     ("element '" + elem.name + "'").c_str());
                    const auto items = static_cast<std::streamsize>(c);
                    in.ignore(items * static_cast<std::streamsize>(ply_type_size(p.type)));
                    if (!in)
                        throw ParseError(origin + ": unexpected end of file in element '" +
                                         elem.name + "'");
                }
            }
            continue;
        }

        for (std::size_t i = 0; i < vertex->count; ++i) {
            double vals[9] = {};
            std::string row_label;
            if (header.binary) {
                row_label = "vertex " + std::to_string(i);
                for (std::size_t k = 0; k < roles.size(); ++k) {
                    const double v = read_ply_scalar(in, vertex->props[k].type, origin,
                                                     row_label.c_str());
                    if (roles[k] != CloudColumn::Ignore)
                        vals[static_cast<int>(roles[k])] = v;
                }
            } else {
                if (!next_line(in, line))
                    parse_fail(origin, line_no + 1,
                               "unexpected end of file: vertex " + std::to_string(i) +
                                   " of " + std::to_string(vertex->count) + " missing");
                ++line_no;
                const auto tokens = split_tokens(line);
                if (tokens.empty()) {
                    --i; // blank line between rows; tolerate and retry
                    continue;
                }
                if (tokens.size() != roles.size())
                    parse_fail(origin, line_no,
                               "expected " + std::to_string(roles.size()) +
                                   " values, got " + std::to_string(tokens.size()));
                row_label = "line " + std::to_string(line_no) + " (vertex " +
                            std::to_string(i) + ")";
                for (std::size_t k = 0; k < roles.size(); ++k) {
                    const double v =
                        require_double(tokens[k], origin, line_no,
                                       vertex->props[k].name.c_str());
                    if (roles[k] != CloudColumn::Ignore)
                        vals[static_cast<int>(roles[k])] = v;
                }
            }
            sink.push_row(vals[0], vals[1], vals[2], vals[3], vals[4], vals[5],
                          vals[6], vals[7], row_label);
        }
    }

    // Anything left beyond the declared elements means the counts are wrong.
    if (header.binary) {
        if (in.peek() != std::char_traits<char>::eof())
            throw ParseError(origin + ": trailing bytes after the declared elements");
    } else {
        while (next_line(in, line)) {
            ++line_no;
            if (!split_tokens(line).empty())
                parse_fail(origin, line_no, "trailing content after the declared elements");
        }
    }
    return sink.finish(warnings);
}

inline LabeledPointCloud read_cloud_xyzl(std::istream& in, const std::string& origin,
                                         std::vector<std::string>* warnings,
                                         const std::string& first_line, int& line_no) {
    CloudRowSink sink;
    sink.origin = origin;
    sink.want_patch = true;
    sink.want_edge = true;

    std::string line = first_line;
    bool have_line = true;
    while (have_line || next_line(in, line)) {
        if (!have_line) ++line_no;
        have_line = false;
        const auto tokens = split_tokens(line);
        if (tokens.empty() || tokens[0].front() == '#') continue;
        if (tokens.size() != 5)
            parse_fail(origin, line_no,
                       "expected 5 values (x y z patch_id edge), got " +
                           std::to_string(tokens.size()));
        const double x = require_double(tokens[0], origin, line_no, "x");
        const double y = require_double(tokens[1], origin, line_no, "y");
        const double z = require_double(tokens[2], origin, line_no, "z");
        const double patch = static_cast<double>(
            require_int(tokens[3], origin, line_no, "patch_id"));
        const double edge = require_double(tokens[4], origin, line_no, "edge");
        sink.push_row(x, y, z, 0, 0, 0, patch, edge,
                      "line " + std::to_string(line_no));
    }
    return sink.finish(warnings);
}

} // namespace detail

/// Reads a labeled cloud from a stream, detecting PLY via its magic line and
/// treating everything else as XYZL text. `origin` names the source in
/// errors. Warnings are appended to `warnings` when given, otherwise printed
/// to stderr.
inline LabeledPointCloud read_cloud(std::istream& in,
                                    const std::string& origin = "<stream>",
                                    std::vector<std::string>* warnings = nullptr) {
    std::string first;
    int line_no = 0;
    if (!detail::next_line(in, first)) return LabeledPointCloud{};
    ++line_no;
    const auto tokens = detail::split_tokens(first);
    if (tokens.size() == 1 && tokens[0] == "ply")
        return detail::read_cloud_ply(in, origin, warnings, line_no);
    return detail::read_cloud_xyzl(in, origin, warnings, first, line_no);
}

inline LabeledPointCloud read_cloud(const std::string& path,
                                    std::vector<std::string>* warnings = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    return read_cloud(in, path, warnings);
}

/// Writes a cloud in the requested encoding. Label columns are always
/// emitted (missing ones as kUnlabeled / 0); normals are emitted when
/// present, except in XYZL which cannot carry them.
inline void write_cloud(const LabeledPointCloud& cloud, std::ostream& out,
                        CloudFormat format) {
    const std::size_t n = cloud.size();
    const bool normals = cloud.has_normals();
    const auto patch_of = [&](std::size_t i) {
        return cloud.has_patch_ids() ? cloud.patch_id[i] : kUnlabeled;
    };
    const auto edge_of = [&](std::size_t i) {
        return cloud.has_edge_flags() ? cloud.edge_flag[i] : 0.0;
    };

    if (format == CloudFormat::Xyzl) {
        for (std::size_t i = 0; i < n; ++i) {
            out << detail::format_g17(cloud.points[i].x()) << ' '
                << detail::format_g17(cloud.points[i].y()) << ' '
                << detail::format_g17(cloud.points[i].z()) << ' ' << patch_of(i)
                << ' ' << detail::format_g17(edge_of(i)) << '\n';
        }
        return;
    }

    const bool binary = format == CloudFormat::PlyBinary;
    out << "ply\n"
        << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
        << "comment brepfit labeled point cloud\n"
        << "element vertex " << n << "\n"
        << "property double x\nproperty double y\nproperty double z\n";
    if (normals) out << "property double nx\nproperty double ny\nproperty double nz\n";
    out << "property int patch_id\nproperty double edge\nend_header\n";

    for (std::size_t i = 0; i < n; ++i) {
        if (binary) {
            const auto put_double = [&](double v) {
                out.write(reinterpret_cast<const char*>(&v), sizeof(double));
            };
            put_double(cloud.points[i].x());
            put_double(cloud.points[i].y());
            put_double(cloud.points[i].z());
            if (normals) {
                put_double(cloud.normals[i].x());
                put_double(cloud.normals[i].y());
                put_double(cloud.normals[i].z());
            }
            const std::int32_t id = patch_of(i);
            out.write(reinterpret_cast<const char*>(&id), sizeof(id));
            put_double(edge_of(i));
        } else {
            out << detail::format_g17(cloud.points[i].x()) << ' '
                << detail::format_g17(cloud.points[i].y()) << ' '
                << detail::format_g17(cloud.points[i].z());
            if (normals)
                out << ' ' << detail::format_g17(cloud.normals[i].x()) << ' '
                    << detail::format_g17(cloud.normals[i].y()) << ' '
                    << detail::format_g17(cloud.normals[i].z());
            out << ' ' << patch_of(i) << ' ' << detail::format_g17(edge_of(i))
                << '\n';
        }
    }
}

/// Picks the encoding from the file extension: .xyz/.xyzl/.txt write XYZL,
/// everything else writes binary PLY.
inline CloudFormat cloud_format_for_path(const std::string& path) {
    const auto ends_with = [&](std::string_view suffix) {
        return path.size() >= suffix.size() &&
               path.compare(path.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    if (ends_with(".xyz") || ends_with(".xyzl") || ends_with(".txt"))
        return CloudFormat::Xyzl;
    return CloudFormat::PlyBinary;
}

inline void write_cloud(const LabeledPointCloud& cloud, const std::string& path,
                        CloudFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_cloud(cloud, out, format);
    if (!out) throw Error("write failed: " + path);
}

inline void write_cloud(const LabeledPointCloud& cloud, const std::string& path) {
    write_cloud(cloud, path, cloud_format_for_path(path));
}

} // namespace brepfit
