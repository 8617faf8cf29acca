// Copyright Contributors to the BrepFit Project
// SPDX-License-Identifier: Apache-2.0
//
// Image serialization for rendered channel maps. Two encodings:
//   - PFM (portable float map), the lossless-ish interchange form: float32
//     little-endian samples, rows stored bottom-to-top, which matches the
//     renderer's y-up pixel convention, so row 0 is written first. Grayscale
//     maps use 'Pf', 3-channel maps 'PF'. The header scale factor is written
//     as -1 and its magnitude is ignored on read.
//   - PNG previews: 8-bit grayscale or RGB, values clamped to [0,1] and
//     scaled to 0..255 with no gamma applied. Write-only.

#pragma once

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "brepfit/core/types.hpp"
#include "brepfit/io/text.hpp"
#include "brepfit/splat/types.hpp"

namespace brepfit {

// ---------------------------------------------------------------------------
// PFM
// ---------------------------------------------------------------------------

inline void write_pfm(const Image& img, std::ostream& out) {
    validate(img);
    if (img.channels != 1 && img.channels != 3)
        throw Error("pfm: only 1- or 3-channel images are supported");
    out << (img.channels == 3 ? "PF" : "Pf") << "\n"
        << img.width << " " << img.height << "\n-1\n";
    // Bottom-to-top row order; our row 0 is the bottom row already.
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                const float v = static_cast<float>(img.at(x, y, c));
                out.write(reinterpret_cast<const char*>(&v), sizeof(float));
            }
        }
    }
}

inline void write_pfm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_pfm(img, out);
    if (!out) throw Error("write failed: " + path);
}

inline Image read_pfm(std::istream& in, const std::string& origin = "<stream>") {
    static_assert(std::endian::native == std::endian::little,
                  "PFM decoding assumes a little-endian host");
    std::string magic;
    int w = 0;
    int h = 0;
    double scale = 0.0;
    if (!(in >> magic >> w >> h >> scale))
        throw ParseError(origin + ": malformed PFM header");
    if (magic != "PF" && magic != "Pf")
        throw ParseError(origin + ": not a PFM file (magic '" + magic + "')");
    if (w < 1 || h < 1)
        throw ParseError(origin + ": invalid PFM dimensions");
    if (scale >= 0.0)
        throw ParseError(origin + ": big-endian PFM is not supported");
    in.get(); // the single whitespace byte separating header from samples

    Image img(w, h, magic == "PF" ? 3 : 1);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                float v = 0.0f;
                if (!in.read(reinterpret_cast<char*>(&v), sizeof(float)))
                    throw ParseError(origin + ": unexpected end of PFM samples at row " +
                                     std::to_string(y));
                img.at(x, y, c) = static_cast<double>(v);
            }
        }
    }
    return img;
}

inline Image read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    return read_pfm(in, path);
}

// ---------------------------------------------------------------------------
// PNG (write-only previews)
// ---------------------------------------------------------------------------

namespace detail {

inline void png_write_be32(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v >> 24));
    buf.push_back(static_cast<unsigned char>(v >> 16));
    buf.push_back(static_cast<unsigned char>(v >> 8));
    buf.push_back(static_cast<unsigned char>(v));
}

inline void png_write_chunk(std::ostream& out, const char type[4],
                            const std::vector<unsigned char>& data) {
    std::vector<unsigned char> head;
    png_write_be32(head, static_cast<std::uint32_t>(data.size()));
    head.insert(head.end(), type, type + 4);
    out.write(reinterpret_cast<const char*>(head.data()),
              static_cast<std::streamsize>(head.size()));
    if (!data.empty())
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size()));
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
    std::vector<unsigned char> tail;
    png_write_be32(tail, static_cast<std::uint32_t>(crc));
    out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

} // namespace detail

inline void write_png(const Image& img, std::ostream& out) {
    validate(img);
    if (img.channels != 1 && img.channels != 3)
        throw Error("png: only 1- or 3-channel images are supported");
    if (img.width < 1 || img.height < 1)
        throw Error("png: empty image");

    static const unsigned char signature[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.write(reinterpret_cast<const char*>(signature), 8);

    std::vector<unsigned char> ihdr;
    detail::png_write_be32(ihdr, static_cast<std::uint32_t>(img.width));
    detail::png_write_be32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(img.channels == 3 ? 2 : 0);          // color type
    ihdr.push_back(0);                                  // compression
    ihdr.push_back(0);                                  // filter
    ihdr.push_back(0);                                  // interlace
    detail::png_write_chunk(out, "IHDR", ihdr);

    // Scanlines top-to-bottom; our row 0 is the bottom, so walk y downward.
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(img.height) *
                (1 + static_cast<std::size_t>(img.width) * img.channels));
    for (int y = img.height - 1; y >= 0; --y) {
        raw.push_back(0); // filter: none
        for (int x = 0; x < img.width; ++x) {
            for (int c = 0; c < img.channels; ++c) {
                const double v = std::clamp(img.at(x, y, c), 0.0, 1.0);
                raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
            }
        }
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> idat(bound);
    if (compress2(idat.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_BEST_COMPRESSION) != Z_OK)
        throw Error("png: deflate failed");
    idat.resize(bound);
    detail::png_write_chunk(out, "IDAT", idat);
    detail::png_write_chunk(out, "IEND", {});
}

inline void write_png(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path);
    write_png(img, out);
    if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Map -> Image adapters
// ---------------------------------------------------------------------------

/// Packs a pixel-major color map into a 3-channel image.
inline Image color_map_to_image(const std::vector<Vec3>& map, int width, int height) {
    if (map.size() != static_cast<std::size_t>(width) * height)
        throw Error("image: color map size does not match dimensions");
    Image img(width, height, 3);
    for (std::size_t p = 0; p < map.size(); ++p)
        for (int c = 0; c < 3; ++c) img.data[3 * p + c] = map[p][c];
    return img;
}

/// Packs a pixel-major scalar map into a single-channel image.
inline Image scalar_map_to_image(const std::vector<double>& map, int width,
                                 int height) {
    if (map.size() != static_cast<std::size_t>(width) * height)
        throw Error("image: scalar map size does not match dimensions");
    Image img(width, height, 1);
    img.data = map;
    return img;
}

} // namespace brepfit
