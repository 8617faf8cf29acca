// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "brepfit/core/rng.hpp"
#include "brepfit/io/cloud_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

using namespace brepfit;
using Catch::Approx;

namespace {

LabeledPointCloud random_cloud(std::size_t n, std::uint64_t seed, bool normals) {
    Rng rng(seed);
    LabeledPointCloud cloud;
    for (std::size_t i = 0; i < n; ++i) {
        cloud.points.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2),
                                  rng.uniform(-2, 2));
        if (normals) {
            Vec3 d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
            if (d.norm() < 1e-6) d = Vec3::UnitZ();
            cloud.normals.push_back(d.normalized());
        }
        cloud.patch_id.push_back(static_cast<int>(i % 5) - 1);
        cloud.edge_flag.push_back(i % 3 == 0 ? 1.0 : rng.uniform(0, 1));
    }
    return cloud;
}

void require_same_geometry(const LabeledPointCloud& a, const LabeledPointCloud& b,
                           double normal_tol) {
    REQUIRE(a.size() == b.size());
    REQUIRE(a.normals.size() == b.normals.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE((a.points[i] - b.points[i]).norm() == 0.0);
        if (!a.normals.empty())
            REQUIRE((a.normals[i] - b.normals[i]).norm() <= normal_tol);
        REQUIRE(a.patch_id[i] == b.patch_id[i]);
        REQUIRE(a.edge_flag[i] == b.edge_flag[i]);
    }
}

} // namespace

TEST_CASE("xyzl reads whitespace rows with comments", "[io][cloud]") {
    std::istringstream in(
        "# fixture\n"
        "0 0 0 0 0\n"
        "\n"
        "1.5  -2.5\t3.25 1 0.75\n"
        "1e-3 2e3 -0.125 -1 1\n");
    const LabeledPointCloud cloud = read_cloud(in, "fixture.xyzl");
    REQUIRE(cloud.size() == 3);
    REQUIRE(cloud.points[1] == Vec3(1.5, -2.5, 3.25));
    REQUIRE(cloud.patch_id == std::vector<int>{0, 1, -1});
    REQUIRE(cloud.edge_flag == std::vector<double>{0.0, 0.75, 1.0});
    REQUIRE(cloud.normals.empty());
    validate(cloud);
}

TEST_CASE("xyzl errors name the offending line", "[io][cloud]") {
    const auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_cloud(in, "bad.xyzl");
    };
    // Wrong arity.
    REQUIRE_THROWS_MATCHES(read("0 0 0 0 0\n1 2 3 4\n"), ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("bad.xyzl:2")));
    // NaN coordinate names the row.
    REQUIRE_THROWS_MATCHES(read("0 0 0 0 0\n0 nan 0 0 0\n"), ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("line 2")));
    // Non-integer patch id.
    REQUIRE_THROWS_AS(read("0 0 0 1.5 0\n"), ParseError);
    // Patch id below the unlabeled sentinel.
    REQUIRE_THROWS_AS(read("0 0 0 -2 0\n"), ParseError);
    // Edge flag outside [0,1].
    REQUIRE_THROWS_AS(read("0 0 0 0 1.5\n"), ParseError);
    // Garbage token.
    REQUIRE_THROWS_AS(read("0 zero 0 0 0\n"), ParseError);
}

TEST_CASE("ply ascii round trip is exact", "[io][cloud]") {
    const LabeledPointCloud cloud = random_cloud(64, 11, true);
    std::stringstream buf;
    write_cloud(cloud, buf, CloudFormat::PlyAscii);
    const LabeledPointCloud back = read_cloud(buf, "roundtrip.ply");
    require_same_geometry(cloud, back, 1e-15);

    // Deterministic bytes: parsing and rewriting a normal-free cloud is the
    // identity (normals are renormalized on read, so they may move an ulp).
    const LabeledPointCloud flat = random_cloud(64, 11, false);
    std::stringstream first;
    write_cloud(flat, first, CloudFormat::PlyAscii);
    std::stringstream copy(first.str());
    std::stringstream again;
    write_cloud(read_cloud(copy, "copy.ply"), again, CloudFormat::PlyAscii);
    REQUIRE(again.str() == first.str());
}

TEST_CASE("ply binary round trip is exact", "[io][cloud]") {
    const LabeledPointCloud cloud = random_cloud(64, 12, true);
    std::stringstream buf;
    write_cloud(cloud, buf, CloudFormat::PlyBinary);
    const LabeledPointCloud back = read_cloud(buf, "roundtrip.ply");
    require_same_geometry(cloud, back, 1e-15);
}

TEST_CASE("xyzl round trip is exact for label-only clouds", "[io][cloud]") {
    const LabeledPointCloud cloud = random_cloud(40, 13, false);
    std::stringstream buf;
    write_cloud(cloud, buf, CloudFormat::Xyzl);
    const LabeledPointCloud back = read_cloud(buf, "roundtrip.xyzl");
    require_same_geometry(cloud, back, 0.0);
}

TEST_CASE("cloud file round trip through disk", "[io][cloud]") {
    const LabeledPointCloud cloud = random_cloud(32, 14, true);
    const auto dir = std::filesystem::temp_directory_path();
    const std::string ply = (dir / "brepfit_io_test.ply").string();
    const std::string xyzl = (dir / "brepfit_io_test.xyzl").string();
    REQUIRE(cloud_format_for_path(ply) == CloudFormat::PlyBinary);
    REQUIRE(cloud_format_for_path(xyzl) == CloudFormat::Xyzl);

    write_cloud(cloud, ply);
    require_same_geometry(cloud, read_cloud(ply), 1e-15);
    write_cloud(cloud, xyzl); // normals are not representable; labels survive
    const LabeledPointCloud flat = read_cloud(xyzl);
    REQUIRE(flat.normals.empty());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        REQUIRE((flat.points[i] - cloud.points[i]).norm() == 0.0);
    std::filesystem::remove(ply);
    std::filesystem::remove(xyzl);

    REQUIRE_THROWS_AS(read_cloud((dir / "brepfit_does_not_exist.ply").string()),
                      ParseError);
}

TEST_CASE("ply with patch ids but no edge warns and defaults", "[io][cloud]") {
    std::istringstream in(
        "ply\n"
        "format ascii 1.0\n"
        "element vertex 2\n"
        "property float x\nproperty float y\nproperty float z\n"
        "property uchar red\n"
        "property int patch_id\n"
        "end_header\n"
        "1.5 2.5 3.5 255 0\n"
        "-1 0.25 7 12 3\n");
    std::vector<std::string> warnings;
    const LabeledPointCloud cloud = read_cloud(in, "labels.ply", &warnings);
    REQUIRE(cloud.size() == 2);
    REQUIRE(cloud.points[0] == Vec3(1.5, 2.5, 3.5));
    REQUIRE(cloud.patch_id == std::vector<int>{0, 3});
    REQUIRE(cloud.edge_flag == std::vector<double>{0.0, 0.0});
    REQUIRE(warnings.size() == 1);
    REQUIRE_THAT(warnings[0], Catch::Matchers::ContainsSubstring("edge"));
}

TEST_CASE("plain ply materializes unlabeled ids without warning", "[io][cloud]") {
    std::istringstream in(
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property double x\nproperty double y\nproperty double z\n"
        "end_header\n0.5 0 -0.5\n");
    std::vector<std::string> warnings;
    const LabeledPointCloud cloud = read_cloud(in, "plain.ply", &warnings);
    REQUIRE(cloud.patch_id == std::vector<int>{kUnlabeled});
    REQUIRE(cloud.edge_flag == std::vector<double>{0.0});
    REQUIRE(warnings.empty());
}

TEST_CASE("ply header errors are parse errors", "[io][cloud]") {
    const auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_cloud(in, "hdr.ply");
    };
    // Unknown keyword.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelemnt vertex 1\nend_header\n"),
                      ParseError);
    // Missing format line.
    REQUIRE_THROWS_AS(read("ply\nelement vertex 0\nend_header\n"), ParseError);
    // Big-endian unsupported.
    REQUIRE_THROWS_AS(read("ply\nformat binary_big_endian 1.0\nend_header\n"),
                      ParseError);
    // No vertex element.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nend_header\n"), ParseError);
    // Missing coordinate property.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelement vertex 1\n"
                           "property double x\nproperty double y\n"
                           "end_header\n0 0\n"),
                      ParseError);
    // Partial normals.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelement vertex 1\n"
                           "property double x\nproperty double y\nproperty double z\n"
                           "property double nx\n"
                           "end_header\n0 0 0 1\n"),
                      ParseError);
    // Duplicate property.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelement vertex 1\n"
                           "property double x\nproperty double x\nproperty double y\n"
                           "property double z\nend_header\n0 0 0 0\n"),
                      ParseError);
    // List property on the vertex element.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelement vertex 1\n"
                           "property double x\nproperty double y\nproperty double z\n"
                           "property list uchar int ring\nend_header\n0 0 0 0\n"),
                      ParseError);
    // Unknown property type.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelement vertex 1\n"
                           "property quadruple x\nend_header\n0\n"),
                      ParseError);
    // Truncated header.
    REQUIRE_THROWS_AS(read("ply\nformat ascii 1.0\nelement vertex 1\n"), ParseError);
}

TEST_CASE("ply data errors carry row positions", "[io][cloud]") {
    const std::string header =
        "ply\nformat ascii 1.0\nelement vertex 3\n"
        "property double x\nproperty double y\nproperty double z\n"
        "end_header\n";
    const auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_cloud(in, "rows.ply");
    };
    // Fewer rows than declared.
    REQUIRE_THROWS_AS(read(header + "0 0 0\n1 1 1\n"), ParseError);
    // Extra rows beyond the declared count.
    REQUIRE_THROWS_AS(read(header + "0 0 0\n1 1 1\n2 2 2\n3 3 3\n"), ParseError);
    // Wrong arity in a row.
    REQUIRE_THROWS_AS(read(header + "0 0 0\n1 1\n2 2 2\n"), ParseError);
    // Non-finite coordinate names the row.
    REQUIRE_THROWS_MATCHES(
        read(header + "0 0 0\ninf 1 1\n2 2 2\n"), ParseError,
        Catch::Matchers::MessageMatches(
            Catch::Matchers::ContainsSubstring("vertex 1")));
}

TEST_CASE("ply ascii skips foreign elements after the vertices", "[io][cloud]") {
    std::istringstream in(
        "ply\nformat ascii 1.0\n"
        "element vertex 2\n"
        "property double x\nproperty double y\nproperty double z\n"
        "element face 1\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
        "0 0 0\n"
        "1 1 1\n"
        "3 0 1 0\n");
    const LabeledPointCloud cloud = read_cloud(in, "faces.ply");
    REQUIRE(cloud.size() == 2);
}

TEST_CASE("ply binary reads and skips typed payloads", "[io][cloud]") {
    std::stringstream buf;
    buf << "ply\nformat binary_little_endian 1.0\n"
           "element vertex 2\n"
           "property float x\nproperty float y\nproperty float z\n"
           "property int patch_id\nproperty double edge\n"
           "element face 1\n"
           "property list uchar int vertex_indices\n"
           "end_header\n";
    const auto put_f32 = [&](float v) {
        buf.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    const auto put_i32 = [&](std::int32_t v) {
        buf.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    const auto put_f64 = [&](double v) {
        buf.write(reinterpret_cast<const char*>(&v), sizeof(v));
    };
    put_f32(1.5f), put_f32(-2.0f), put_f32(0.25f), put_i32(4), put_f64(0.5);
    put_f32(0.0f), put_f32(3.0f), put_f32(-1.0f), put_i32(-1), put_f64(1.0);
    const unsigned char count = 3;
    buf.write(reinterpret_cast<const char*>(&count), 1);
    put_i32(0), put_i32(1), put_i32(0);

    const LabeledPointCloud cloud = read_cloud(buf, "binary.ply");
    REQUIRE(cloud.size() == 2);
    REQUIRE(cloud.points[0] == Vec3(1.5, -2.0, 0.25));
    REQUIRE(cloud.patch_id == std::vector<int>{4, -1});
    REQUIRE(cloud.edge_flag == std::vector<double>{0.5, 1.0});
}

TEST_CASE("ply binary truncation and payload errors", "[io][cloud]") {
    const auto header = [](int n) {
        return "ply\nformat binary_little_endian 1.0\nelement vertex " +
               std::to_string(n) +
               "\nproperty double x\nproperty double y\nproperty double z\n"
               "end_header\n";
    };
    {
        std::stringstream buf;
        buf << header(2);
        const double vals[4] = {0, 0, 0, 1}; // half a row short
        buf.write(reinterpret_cast<const char*>(vals), sizeof(vals));
        REQUIRE_THROWS_MATCHES(read_cloud(buf, "short.ply"), ParseError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("vertex 1")));
    }
    {
        std::stringstream buf;
        buf << header(1);
        const double vals[3] = {0, std::numeric_limits<double>::quiet_NaN(), 0};
        buf.write(reinterpret_cast<const char*>(vals), sizeof(vals));
        REQUIRE_THROWS_MATCHES(read_cloud(buf, "nan.ply"), ParseError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("vertex 0")));
    }
    {
        std::stringstream buf;
        buf << header(1);
        const double vals[3] = {0, 0, 0};
        buf.write(reinterpret_cast<const char*>(vals), sizeof(vals));
        buf << "junk";
        REQUIRE_THROWS_MATCHES(read_cloud(buf, "tail.ply"), ParseError,
                               Catch::Matchers::MessageMatches(
                                   Catch::Matchers::ContainsSubstring("trailing")));
    }
}

TEST_CASE("reader normalizes slightly off-unit normals", "[io][cloud]") {
    std::istringstream in(
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property double x\nproperty double y\nproperty double z\n"
        "property double nx\nproperty double ny\nproperty double nz\n"
        "end_header\n"
        "0 0 0 0.70710681 0.70710681 0\n"); // float32-precision diagonal
    const LabeledPointCloud cloud = read_cloud(in, "normals.ply");
    REQUIRE(cloud.normals.size() == 1);
    REQUIRE(cloud.normals[0].norm() == Approx(1.0).margin(1e-15));
    validate(cloud);

    std::istringstream zero(
        "ply\nformat ascii 1.0\nelement vertex 1\n"
        "property double x\nproperty double y\nproperty double z\n"
        "property double nx\nproperty double ny\nproperty double nz\n"
        "end_header\n"
        "0 0 0 0 0 0\n");
    REQUIRE_THROWS_AS(read_cloud(zero, "zero.ply"), ParseError);
}

TEST_CASE("empty inputs give empty clouds", "[io][cloud]") {
    std::istringstream empty("");
    REQUIRE(read_cloud(empty, "empty.xyzl").empty());

    std::stringstream buf;
    write_cloud(LabeledPointCloud{}, buf, CloudFormat::PlyBinary);
    REQUIRE(read_cloud(buf, "empty.ply").empty());
}
