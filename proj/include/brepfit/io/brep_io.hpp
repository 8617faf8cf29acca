// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Structured text serialization for B-rep models. The document is line
// oriented and fully deterministic: fixed field order, 17-significant-digit
// floats, '\n' line endings. Layout:
//
//   brepfit brep 1
//   corners <n>
//   <x> <y> <z>                                        (n rows)
//   edges <m>
//   line   <px py pz dx dy dz>        <t_lo> <t_hi> <c0> <c1> <closed> <f0> <f1>
//   circle <cx cy cz nx ny nz r>      <t_lo> <t_hi> <c0> <c1> <closed> <f0> <f1>
//   bezier <12 control coordinates>   <t_lo> <t_hi> <c0> <c1> <closed> <f0> <f1>
//   faces <k>
//   plane    <nx ny nz d>             <watertight> <nloops>
//   cylinder <px py pz ax ay az r>    <watertight> <nloops>
//   sphere   <cx cy cz r>             <watertight> <nloops>
//   loop <closed> <count> <signed 1-based edge indices>   (nloops rows per face)
//   end
//
// Corner and face references on edges are 0-based with -1 for "none". Loop
// entries are 1-based and signed: +i walks edge i-1 forward, -i reversed.
// Fit statistics (inlier counts, residuals) and traced support polylines are
// transient diagnostics and are not serialized; a write/read round trip
// reproduces the geometry and topology exactly.

#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "brepfit/core/types.hpp"
#include "brepfit/io/text.hpp"

namespace brepfit {
namespace detail {

/// Token cursor over non-blank lines with 1-based line numbers for errors.
struct LineCursor {
    std::istream& in;
    std::string origin;
    int line_no = 0;
    std::string line;
    std::vector<std::string_view> tokens;

    bool advance() {
        while (next_line(in, line)) {
            ++line_no;
            tokens = split_tokens(line);
            if (!tokens.empty()) return true;
        }
        return false;
    }

    const std::vector<std::string_view>& expect(const char* what) {
        if (!advance())
            parse_fail(origin, line_no + 1,
                       std::string("unexpected end of file; expected ") + what);
        return tokens;
    }

    [[noreturn]] void fail(const std::string& message) const {
        parse_fail(origin, line_no, message);
    }
};

inline std::size_t expect_section(LineCursor& cur, const char* name) {
    const auto& t = cur.expect(name);
    if (t.size() != 2 || t[0] != name)
        cur.fail(std::string("expected '") + name + " <count>'");
    const long long n = require_int(t[1], cur.origin, cur.line_no, "count");
    if (n < 0) cur.fail("negative count");
    return static_cast<std::size_t>(n);
}

inline int require_index(std::string_view tok, LineCursor& cur, const char* what,
                         int limit) {
    const long long v = require_int(tok, cur.origin, cur.line_no, what);
    if (v < -1 || v >= limit)
        cur.fail(std::string(what) + " out of range: " + std::string(tok));
    return static_cast<int>(v);
}

inline bool require_flag(std::string_view tok, LineCursor& cur, const char* what) {
    if (tok == "0") return false;
    if (tok == "1") return true;
    cur.fail(std::string(what) + " must be 0 or 1, got '" + std::string(tok) + "'");
}

inline void put_vec3(std::ostream& out, const Vec3& v) {
    out << format_g17(v.x()) << ' ' << format_g17(v.y()) << ' '
        << format_g17(v.z());
}

} // namespace detail

/// Serializes a valid model to the documented text layout. Output bytes are
/// identical across runs for identical models.
inline void write_brep(const BRepModel& model, std::ostream& out) {
    validate(model);
    out << "brepfit brep 1\n";

    out << "corners " << model.corners.size() << "\n";
    for (const Vec3& c : model.corners) {
        detail::put_vec3(out, c);
        out << '\n';
    }

    out << "edges " << model.edges.size() << "\n";
    for (const CurveSegment& e : model.edges) {
        out << to_string(curve_kind(e.geometry)) << ' ';
        if (const auto* ln = std::get_if<LineGeom>(&e.geometry)) {
            detail::put_vec3(out, ln->point);
            out << ' ';
            detail::put_vec3(out, ln->dir);
        } else if (const auto* ci = std::get_if<CircleGeom>(&e.geometry)) {
            detail::put_vec3(out, ci->center);
            out << ' ';
            detail::put_vec3(out, ci->normal);
            out << ' ' << detail::format_g17(ci->radius);
        } else {
            const auto& b = std::get<BezierGeom>(e.geometry);
            for (int k = 0; k < 4; ++k) {
                if (k) out << ' ';
                detail::put_vec3(out, b.ctrl[k]);
            }
        }
        out << ' ' << detail::format_g17(e.t_lo) << ' ' << detail::format_g17(e.t_hi)
            << ' ' << e.endpoint_corners[0] << ' ' << e.endpoint_corners[1] << ' '
            << (e.closed ? 1 : 0) << ' ' << e.faces[0] << ' ' << e.faces[1] << '\n';
    }

    out << "faces " << model.faces.size() << "\n";
    for (const BRepFace& f : model.faces) {
        out << to_string(f.primitive.kind()) << ' ';
        switch (f.primitive.kind()) {
        case PrimitiveKind::Plane: {
            const PlaneGeom& g = f.primitive.plane();
            detail::put_vec3(out, g.normal);
            out << ' ' << detail::format_g17(g.offset);
            break;
        }
        case PrimitiveKind::Cylinder: {
            const CylinderGeom& g = f.primitive.cylinder();
            detail::put_vec3(out, g.axis_point);
            out << ' ';
            detail::put_vec3(out, g.axis_dir);
            out << ' ' << detail::format_g17(g.radius);
            break;
        }
        case PrimitiveKind::Sphere: {
            const SphereGeom& g = f.primitive.sphere();
            detail::put_vec3(out, g.center);
            out << ' ' << detail::format_g17(g.radius);
            break;
        }
        }
        out << ' ' << (f.watertight ? 1 : 0) << ' ' << f.loops.size() << '\n';
        for (const FaceLoop& loop : f.loops) {
            out << "loop " << (loop.closed ? 1 : 0) << ' ' << loop.entries.size();
            for (const LoopEntry& entry : loop.entries)
                out << ' ' << (entry.reversed ? -(entry.edge + 1) : entry.edge + 1);
            out << '\n';
        }
    }
    out << "end\n";
}

inline void write_brep(const BRepModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_brep(model, out);
    if (!out) throw Error("write failed: " + path);
}

/// Parses a document produced by write_brep. Malformed input raises a parse
/// error naming the line; a well-formed document describing an inconsistent
/// model (dangling indices, broken loops) is also a parse error.
inline BRepModel read_brep(std::istream& in, const std::string& origin = "<stream>") {
    detail::LineCursor cur{in, origin, 0, {}, {}};

    const auto& magic = cur.expect("'brepfit brep 1' header");
    if (magic.size() != 3 || magic[0] != "brepfit" || magic[1] != "brep")
        cur.fail("not a brepfit brep document");
    if (magic[2] != "1")
        cur.fail("unsupported brep document version '" + std::string(magic[2]) + "'");

    BRepModel model;

    const std::size_t nc = detail::expect_section(cur, "corners");
    model.corners.reserve(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        const auto& t = cur.expect("corner row");
        if (t.size() != 3) cur.fail("corner row must hold exactly x y z");
        model.corners.emplace_back(
            detail::require_double(t[0], origin, cur.line_no, "corner x"),
            detail::require_double(t[1], origin, cur.line_no, "corner y"),
            detail::require_double(t[2], origin, cur.line_no, "corner z"));
        if (!model.corners.back().allFinite()) cur.fail("non-finite corner");
    }

    const std::size_t ne = detail::expect_section(cur, "edges");
    model.edges.reserve(ne);
    for (std::size_t i = 0; i < ne; ++i) {
        const auto& t = cur.expect("edge row");
        std::size_t params = 0;
        CurveSegment seg;
        const auto num = [&](std::size_t k, const char* what) {
            return detail::require_double(t[1 + k], origin, cur.line_no, what);
        };
        if (t[0] == "line") {
            params = 6;
            if (t.size() != 1 + params + 7) cur.fail("malformed line edge row");
            LineGeom g;
            g.point = Vec3(num(0, "px"), num(1, "py"), num(2, "pz"));
            g.dir = Vec3(num(3, "dx"), num(4, "dy"), num(5, "dz"));
            seg.geometry = g;
        } else if (t[0] == "circle") {
            params = 7;
            if (t.size() != 1 + params + 7) cur.fail("malformed circle edge row");
            CircleGeom g;
            g.center = Vec3(num(0, "cx"), num(1, "cy"), num(2, "cz"));
            g.normal = Vec3(num(3, "nx"), num(4, "ny"), num(5, "nz"));
            g.radius = num(6, "radius");
            seg.geometry = g;
        } else if (t[0] == "bezier") {
            params = 12;
            if (t.size() != 1 + params + 7) cur.fail("malformed bezier edge row");
            BezierGeom g;
            for (int k = 0; k < 4; ++k)
                g.ctrl[k] = Vec3(num(3 * k, "ctrl x"), num(3 * k + 1, "ctrl y"),
                                 num(3 * k + 2, "ctrl z"));
            seg.geometry = g;
        } else {
            cur.fail("unknown edge kind '" + std::string(t[0]) + "'");
        }
        std::size_t k = 1 + params;
        seg.t_lo = detail::require_double(t[k++], origin, cur.line_no, "t_lo");
        seg.t_hi = detail::require_double(t[k++], origin, cur.line_no, "t_hi");
        const int corner_limit = static_cast<int>(nc);
        seg.endpoint_corners[0] = detail::require_index(t[k++], cur, "corner index", corner_limit);
        seg.endpoint_corners[1] = detail::require_index(t[k++], cur, "corner index", corner_limit);
        seg.closed = detail::require_flag(t[k++], cur, "closed flag");
        seg.faces[0] = detail::require_index(t[k++], cur, "face index", 1 << 30);
        seg.faces[1] = detail::require_index(t[k++], cur, "face index", 1 << 30);
        model.edges.push_back(std::move(seg));
    }

    const std::size_t nf = detail::expect_section(cur, "faces");
    model.faces.reserve(nf);
    for (std::size_t i = 0; i < nf; ++i) {
        const auto& t = cur.expect("face row");
        std::size_t params = 0;
        BRepFace face;
        const auto num = [&](std::size_t k, const char* what) {
            return detail::require_double(t[1 + k], origin, cur.line_no, what);
        };
        if (t[0] == "plane") {
            params = 4;
            if (t.size() != 1 + params + 2) cur.fail("malformed plane face row");
            PlaneGeom g;
            g.normal = Vec3(num(0, "nx"), num(1, "ny"), num(2, "nz"));
            g.offset = num(3, "offset");
            face.primitive.surface = g;
        } else if (t[0] == "cylinder") {
            params = 7;
            if (t.size() != 1 + params + 2) cur.fail("malformed cylinder face row");
            CylinderGeom g;
            g.axis_point = Vec3(num(0, "px"), num(1, "py"), num(2, "pz"));
            g.axis_dir = Vec3(num(3, "ax"), num(4, "ay"), num(5, "az"));
            g.radius = num(6, "radius");
            face.primitive.surface = g;
        } else if (t[0] == "sphere") {
            params = 4;
            if (t.size() != 1 + params + 2) cur.fail("malformed sphere face row");
            SphereGeom g;
            g.center = Vec3(num(0, "cx"), num(1, "cy"), num(2, "cz"));
            g.radius = num(3, "radius");
            face.primitive.surface = g;
        } else {
            cur.fail("unknown face kind '" + std::string(t[0]) + "'");
        }
        std::size_t k = 1 + params;
        face.watertight = detail::require_flag(t[k++], cur, "watertight flag");
        const long long nloops = detail::require_int(t[k], origin, cur.line_no, "loop count");
        if (nloops < 0) cur.fail("negative loop count");
        for (long long li = 0; li < nloops; ++li) {
            const auto& lt = cur.expect("loop row");
            if (lt.size() < 3 || lt[0] != "loop")
                cur.fail("expected 'loop <closed> <count> <entries>'");
            FaceLoop loop;
            loop.closed = detail::require_flag(lt[1], cur, "loop closed flag");
            const long long count = detail::require_int(lt[2], origin, cur.line_no, "entry count");
            if (count < 0 || lt.size() != 3 + static_cast<std::size_t>(count))
                cur.fail("loop entry count does not match the row");
            for (long long ei = 0; ei < count; ++ei) {
                const long long v =
                    detail::require_int(lt[3 + ei], origin, cur.line_no, "loop entry");
                const long long mag = v < 0 ? -v : v;
                if (v == 0 || mag > static_cast<long long>(ne))
                    cur.fail("loop entry out of range: " + std::to_string(v));
                loop.entries.push_back(LoopEntry{static_cast<int>(mag) - 1, v < 0});
            }
            face.loops.push_back(std::move(loop));
        }
        model.faces.push_back(std::move(face));
    }

    const auto& tail = cur.expect("'end'");
    if (tail.size() != 1 || tail[0] != "end") cur.fail("expected 'end'");
    if (cur.advance()) cur.fail("trailing content after 'end'");

    // Face references on edges could not be range-checked until the face
    // count was known.
    for (const CurveSegment& e : model.edges)
        for (int f : e.faces)
            if (f >= static_cast<int>(nf))
                throw ParseError(origin + ": edge references face " +
                                 std::to_string(f) + " of " + std::to_string(nf));

    try {
        validate(model);
    } catch (const Error& e) {
        throw ParseError(origin + ": inconsistent model: " + e.what());
    }
    return model;
}

inline BRepModel read_brep(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    return read_brep(in, path);
}

} // namespace brepfit
