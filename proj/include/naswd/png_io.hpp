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

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace naswd::png {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels; // width * height * 3

    std::uint8_t* at(std::size_t row, std::size_t col) {
        return pixels.data() + (row * width + col) * 3;
    }
    const std::uint8_t* at(std::size_t row, std::size_t col) const {
        return pixels.data() + (row * width + col) * 3;
    }
};

// Serialize to an in-memory PNG (color type 2, bit depth 8, filter 0 on every
// row, single IDAT). Output is byte-for-byte deterministic for equal input.
std::vector<std::uint8_t> encode(const Image& image);

// Parse a PNG produced by encode() (or any 8-bit RGB/RGBA PNG without
// interlacing). Alpha, if present, is dropped.
Image decode(const std::vector<std::uint8_t>& bytes);

void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

} // namespace naswd::png
