// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include "brepfit/io/image_io.hpp"
#include "brepfit/io/scene_io.hpp"

#include <zlib.h>

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <sstream>
#include <vector>

using namespace brepfit;
using Catch::Approx;

namespace {

std::vector<Gaussian2D> sample_scene(int feature_dim) {
    std::vector<Gaussian2D> scene;
    for (int i = 0; i < 3; ++i) {
        Gaussian2D g;
        g.center = Vec3(0.1 * i, -0.2 * i, 1.0 / (i + 3.0));
        g.t_u = Vec3::UnitX();
        g.t_v = Vec3::UnitY();
        g.scale = Vec2(0.05 + 0.01 * i, 0.07);
        g.opacity = 0.25 + 0.2 * i;
        g.color = Vec3(0.9, 0.1 * i, 0.3);
        g.edge = i == 2 ? 1.0 : 0.0;
        g.feature.resize(feature_dim);
        for (int k = 0; k < feature_dim; ++k)
            g.feature[k] = std::sin(1.0 + i + 0.5 * k);
        scene.push_back(std::move(g));
    }
    return scene;
}

void require_same_scene(const std::vector<Gaussian2D>& a,
                        const std::vector<Gaussian2D>& b) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE((a[i].center - b[i].center).norm() == 0.0);
        REQUIRE((a[i].t_u - b[i].t_u).norm() == 0.0);
        REQUIRE((a[i].t_v - b[i].t_v).norm() == 0.0);
        REQUIRE((a[i].scale - b[i].scale).norm() == 0.0);
        REQUIRE(a[i].opacity == b[i].opacity);
        REQUIRE((a[i].color - b[i].color).norm() == 0.0);
        REQUIRE(a[i].edge == b[i].edge);
        REQUIRE(a[i].feature.size() == b[i].feature.size());
        if (a[i].feature.size() > 0)
            REQUIRE((a[i].feature - b[i].feature).norm() == 0.0);
    }
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

struct PngContents {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int bit_depth = 0;
    int color_type = 0;
    std::vector<unsigned char> scanlines; // decompressed, filter bytes included
};

/// Minimal PNG reader for the writer tests: checks the signature, IHDR, and
/// inflates the IDAT stream.
PngContents parse_png(const std::string& bytes, std::size_t raw_size) {
    const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    REQUIRE(bytes.size() > 8);
    REQUIRE(std::memcmp(bytes.data(), sig, 8) == 0);

    PngContents png;
    std::vector<unsigned char> idat;
    std::size_t pos = 8;
    bool saw_end = false;
    while (pos + 8 <= bytes.size()) {
        const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
        const std::uint32_t len = be32(p);
        const std::string type(bytes.data() + pos + 4, 4);
        REQUIRE(pos + 12 + len <= bytes.size());
        const auto* data = p + 8;
        if (type == "IHDR") {
            REQUIRE(len == 13);
            png.width = be32(data);
            png.height = be32(data + 4);
            png.bit_depth = data[8];
            png.color_type = data[9];
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            saw_end = true;
        }
        pos += 12 + len;
    }
    REQUIRE(saw_end);
    REQUIRE(pos == bytes.size());

    png.scanlines.resize(raw_size);
    uLongf out_len = static_cast<uLongf>(raw_size);
    REQUIRE(uncompress(png.scanlines.data(), &out_len, idat.data(),
                       static_cast<uLong>(idat.size())) == Z_OK);
    REQUIRE(out_len == raw_size);
    return png;
}

} // namespace

TEST_CASE("scene files round trip exactly", "[io][scene]") {
    const auto scene = sample_scene(4);
    std::stringstream buf;
    write_scene(scene, buf);
    REQUIRE_THAT(buf.str(), Catch::Matchers::StartsWith("#"));
    require_same_scene(scene, read_scene(buf, "scene.gsc"));
}

TEST_CASE("scene files support empty feature vectors", "[io][scene]") {
    const auto scene = sample_scene(0);
    std::stringstream buf;
    write_scene(scene, buf);
    require_same_scene(scene, read_scene(buf, "scene.gsc"));
}

TEST_CASE("scene reader skips comments and blank lines", "[io][scene]") {
    std::istringstream in(
        "# heading\n"
        "\n"
        "0 0 1  1 0 0  0 1 0  0.1 0.2  0.5  1 0 0  0\n"
        "   # indented comment\n"
        "1 1 2  1 0 0  0 1 0  0.1 0.2  0.5  0 1 0  1\n");
    const auto scene = read_scene(in, "c.gsc");
    REQUIRE(scene.size() == 2);
    REQUIRE(scene[1].center == Vec3(1, 1, 2));
    REQUIRE(scene[1].feature.size() == 0);
}

TEST_CASE("scene reader rejects malformed records", "[io][scene]") {
    const auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_scene(in, "bad.gsc");
    };
    // Too few columns.
    REQUIRE_THROWS_MATCHES(read("0 0 1 1 0 0 0 1 0 0.1\n"), ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("bad.gsc:1")));
    // Feature dimension disagreement between records.
    REQUIRE_THROWS_AS(read("0 0 1 1 0 0 0 1 0 0.1 0.2 0.5 1 0 0 0 7 8\n"
                           "0 0 1 1 0 0 0 1 0 0.1 0.2 0.5 1 0 0 0 7\n"),
                      ParseError);
    // Non-finite value.
    REQUIRE_THROWS_AS(read("0 0 1 1 0 0 0 1 0 0.1 0.2 nan 1 0 0 0\n"), ParseError);
    // Unparseable token.
    REQUIRE_THROWS_AS(read("0 0 1 1 0 0 0 1 0 0.1 0.2 x 1 0 0 0\n"), ParseError);
    // File that cannot be opened.
    REQUIRE_THROWS_AS(read_scene("/nonexistent/scene.gsc"), ParseError);
}

TEST_CASE("scene files round trip through disk", "[io][scene]") {
    const auto path =
        (std::filesystem::temp_directory_path() / "brepfit_scene_test.gsc").string();
    const auto scene = sample_scene(2);
    write_scene(scene, path);
    require_same_scene(scene, read_scene(path));
    std::filesystem::remove(path);
}

TEST_CASE("pfm round trips at float precision", "[io][image]") {
    Image img(3, 2, 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = std::cos(1.0 + x + 3.0 * y + 0.25 * c) * (c + 1);

    std::stringstream buf;
    write_pfm(img, buf);
    const Image back = read_pfm(buf, "img.pfm");
    REQUIRE(back.width == img.width);
    REQUIRE(back.height == img.height);
    REQUIRE(back.channels == 3);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                REQUIRE(back.at(x, y, c) ==
                        static_cast<double>(static_cast<float>(img.at(x, y, c))));
}

TEST_CASE("grayscale pfm round trips", "[io][image]") {
    Image img(2, 2, 1);
    img.at(0, 0) = 0.25; // all four values are float32-exact
    img.at(1, 0) = -1.5;
    img.at(0, 1) = 0.0009765625;
    img.at(1, 1) = 1024.0;
    std::stringstream buf;
    write_pfm(img, buf);
    const Image back = read_pfm(buf, "gray.pfm");
    REQUIRE(back.channels == 1);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 2; ++x)
            REQUIRE(back.at(x, y) == img.at(x, y));
}

TEST_CASE("pfm stores the bottom row first", "[io][image]") {
    std::stringstream buf;
    buf << "Pf\n1 2\n-1.0\n";
    const float rows[2] = {1.0f, 2.0f};
    buf.write(reinterpret_cast<const char*>(rows), sizeof(rows));
    const Image img = read_pfm(buf, "order.pfm");
    REQUIRE(img.at(0, 0) == 1.0); // y = 0 is the bottom row
    REQUIRE(img.at(0, 1) == 2.0);

    // And the writer emits the same layout.
    std::stringstream out;
    write_pfm(img, out);
    const std::string bytes = out.str();
    float first = 0.0f;
    std::memcpy(&first, bytes.data() + bytes.size() - sizeof(rows), sizeof(first));
    REQUIRE(first == 1.0f);
}

TEST_CASE("pfm reader rejects malformed streams", "[io][image]") {
    const auto read = [](const std::string& bytes) {
        std::istringstream in(bytes);
        return read_pfm(in, "bad.pfm");
    };
    const std::string floats(8, '\0');
    REQUIRE_THROWS_AS(read("PX\n2 1\n-1.0\n" + floats), ParseError);
    REQUIRE_THROWS_AS(read("Pf\n2 1\n1.0\n" + floats), ParseError); // big-endian
    REQUIRE_THROWS_AS(read("Pf\n2 1\n-1.0\n" + floats.substr(0, 4)), ParseError);
    REQUIRE_THROWS_AS(read("Pf\n-2 1\n-1.0\n" + floats), ParseError);
    REQUIRE_THROWS_AS(read("Pf\n"), ParseError);

    Image two(2, 2, 2);
    std::stringstream buf;
    REQUIRE_THROWS_AS(write_pfm(two, buf), Error);
}

TEST_CASE("png writer emits valid rgb images", "[io][image]") {
    Image img(2, 2, 3);
    const auto set = [&](int x, int y, double r, double g, double b) {
        img.at(x, y, 0) = r;
        img.at(x, y, 1) = g;
        img.at(x, y, 2) = b;
    };
    set(0, 0, -0.5, 0.25, 1.5); // clamps to 0 and 255
    set(1, 0, 1.0, 0.0, 0.0);
    set(0, 1, 0.5, 0.5, 0.5);
    set(1, 1, 0.0, 1.0, 0.0);

    std::stringstream buf;
    write_png(img, buf);
    const PngContents png = parse_png(buf.str(), 2 * (1 + 2 * 3));
    REQUIRE(png.width == 2);
    REQUIRE(png.height == 2);
    REQUIRE(png.bit_depth == 8);
    REQUIRE(png.color_type == 2);

    // Scanlines run top to bottom; our y axis points up, so y = 1 comes first.
    const std::vector<unsigned char> expected = {
        0, 128, 128, 128, 0, 255, 0, // row y = 1
        0, 0, 64, 255, 255, 0, 0,    // row y = 0
    };
    REQUIRE(png.scanlines == expected);
}

TEST_CASE("png writer emits valid grayscale images", "[io][image]") {
    Image img(3, 1, 1);
    img.at(0, 0) = 0.0;
    img.at(1, 0) = 0.2;
    img.at(2, 0) = 1.0;
    std::stringstream buf;
    write_png(img, buf);
    const PngContents png = parse_png(buf.str(), 1 * (1 + 3));
    REQUIRE(png.width == 3);
    REQUIRE(png.color_type == 0);
    REQUIRE(png.scanlines == std::vector<unsigned char>{0, 0, 51, 255});

    Image two(2, 2, 2);
    std::stringstream reject;
    REQUIRE_THROWS_AS(write_png(two, reject), Error);
}

TEST_CASE("map adapters reshape render buffers", "[io][image]") {
    const std::vector<Vec3> colors = {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1),
                                      Vec3(1, 1, 1)};
    const Image rgb = color_map_to_image(colors, 2, 2);
    REQUIRE(rgb.channels == 3);
    REQUIRE(rgb.at(1, 0, 1) == 1.0);
    REQUIRE(rgb.at(1, 1, 2) == 1.0);

    const std::vector<double> gray = {0.5, 0.75};
    const Image g = scalar_map_to_image(gray, 2, 1);
    REQUIRE(g.channels == 1);
    REQUIRE(g.at(1, 0) == 0.75);

    REQUIRE_THROWS_AS(color_map_to_image(colors, 3, 2), Error);
    REQUIRE_THROWS_AS(scalar_map_to_image(gray, 2, 2), Error);
}
