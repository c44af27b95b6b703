/*
 * Copyright 2026 The naswd authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "naswd/png_io.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace naswd::png {

namespace {

constexpr std::array<std::uint8_t, 8> kSignature = {137, 80, 78, 71, 13, 10, 26, 10};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_chunk(std::vector<std::uint8_t>& out, const char tag[5],
               const std::vector<std::uint8_t>& payload) {
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    std::size_t crc_start = out.size();
    out.insert(out.end(), tag, tag + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, out.data() + crc_start, static_cast<uInt>(4 + payload.size()));
    put_u32(out, static_cast<std::uint32_t>(crc));
}

std::vector<std::uint8_t> zlib_deflate(const std::vector<std::uint8_t>& in) {
    uLongf cap = compressBound(static_cast<uLong>(in.size()));
    std::vector<std::uint8_t> out(cap);
    // fixed level keeps the byte stream reproducible across runs
    int rc = compress2(out.data(), &cap, in.data(), static_cast<uLong>(in.size()), 6);
    if (rc != Z_OK) throw std::runtime_error("png: deflate failed");
    out.resize(cap);
    return out;
}

std::vector<std::uint8_t> zlib_inflate(const std::uint8_t* data, std::size_t n,
                                       std::size_t expected) {
    std::vector<std::uint8_t> out(expected);
    uLongf got = static_cast<uLongf>(expected);
    int rc = uncompress(out.data(), &got, data, static_cast<uLong>(n));
    if (rc != Z_OK || got != expected) throw std::runtime_error("png: inflate failed");
    return out;
}

std::uint8_t paeth(int a, int b, int c) {
    int p = a + b - c;
    int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<std::uint8_t>(a);
    if (pb <= pc) return static_cast<std::uint8_t>(b);
    return static_cast<std::uint8_t>(c);
}

} // namespace

std::vector<std::uint8_t> encode(const Image& image) {
    if (image.width == 0 || image.height == 0)
        throw std::runtime_error("png: empty image");
    if (image.pixels.size() != image.width * image.height * 3)
        throw std::runtime_error("png: pixel buffer size mismatch");

    std::vector<std::uint8_t> out;
    out.insert(out.end(), kSignature.begin(), kSignature.end());

    std::vector<std::uint8_t> ihdr;
    put_u32(ihdr, static_cast<std::uint32_t>(image.width));
    put_u32(ihdr, static_cast<std::uint32_t>(image.height));
    ihdr.push_back(8); // bit depth
    ihdr.push_back(2); // color type: truecolor
    ihdr.push_back(0); // compression
    ihdr.push_back(0); // filter method
    ihdr.push_back(0); // no interlace
    put_chunk(out, "IHDR", ihdr);

    std::size_t stride = image.width * 3;
    std::vector<std::uint8_t> scanlines;
    scanlines.reserve((stride + 1) * image.height);
    for (std::size_t r = 0; r < image.height; ++r) {
        scanlines.push_back(0); // filter type 0 on every row
        const std::uint8_t* row = image.pixels.data() + r * stride;
        scanlines.insert(scanlines.end(), row, row + stride);
    }
    put_chunk(out, "IDAT", zlib_deflate(scanlines));
    put_chunk(out, "IEND", {});
    return out;
}

Image decode(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || !std::equal(kSignature.begin(), kSignature.end(), bytes.begin()))
        throw std::runtime_error("png: bad signature");

    std::size_t pos = 8;
    Image img;
    std::size_t channels = 0;
    std::vector<std::uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;
    while (pos + 12 <= bytes.size() && !saw_iend) {
        std::uint32_t len = get_u32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) throw std::runtime_error("png: truncated chunk");
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(tag, "IHDR", 4) == 0) {
            if (len != 13) throw std::runtime_error("png: bad IHDR");
            img.width = get_u32(payload);
            img.height = get_u32(payload + 4);
            std::uint8_t depth = payload[8], color = payload[9], interlace = payload[12];
            if (depth != 8 || (color != 2 && color != 6) || interlace != 0)
                throw std::runtime_error("png: only 8-bit RGB/RGBA non-interlaced supported");
            channels = color == 2 ? 3 : 4;
            saw_ihdr = true;
        } else if (std::memcmp(tag, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(tag, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;
    }
    if (!saw_ihdr || idat.empty()) throw std::runtime_error("png: missing IHDR or IDAT");
    if (img.width == 0 || img.height == 0) throw std::runtime_error("png: empty image");

    std::size_t stride = img.width * channels;
    std::vector<std::uint8_t> lines =
        zlib_inflate(idat.data(), idat.size(), (stride + 1) * img.height);

    std::vector<std::uint8_t> prev(stride, 0);
    std::vector<std::uint8_t> cur(stride);
    img.pixels.resize(img.width * img.height * 3);
    std::size_t bpp = channels;
    for (std::size_t r = 0; r < img.height; ++r) {
        const std::uint8_t* src = lines.data() + r * (stride + 1);
        std::uint8_t filter = src[0];
        const std::uint8_t* f = src + 1;
        for (std::size_t i = 0; i < stride; ++i) {
            int a = i >= bpp ? cur[i - bpp] : 0;
            int b = prev[i];
            int c = i >= bpp ? prev[i - bpp] : 0;
            int x = f[i];
            switch (filter) {
            case 0: cur[i] = static_cast<std::uint8_t>(x); break;
            case 1: cur[i] = static_cast<std::uint8_t>(x + a); break;
            case 2: cur[i] = static_cast<std::uint8_t>(x + b); break;
            case 3: cur[i] = static_cast<std::uint8_t>(x + (a + b) / 2); break;
            case 4: cur[i] = static_cast<std::uint8_t>(x + paeth(a, b, c)); break;
            default: throw std::runtime_error("png: unknown filter type");
            }
        }
        for (std::size_t col = 0; col < img.width; ++col)
            std::memcpy(img.at(r, col), cur.data() + col * channels, 3);
        std::swap(prev, cur);
    }
    return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes = encode(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

Image read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode(bytes);
}

} // namespace naswd::png
