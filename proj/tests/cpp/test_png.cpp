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

#include <stdexcept>

#include "doctest.h"
#include "naswd/png_io.hpp"
#include "naswd/rng.hpp"
#include "test_support.hpp"

using namespace naswd::png;

namespace {

Image random_image(std::size_t w, std::size_t h, std::uint64_t seed) {
    Image img;
    img.width = w;
    img.height = h;
    img.pixels.resize(w * h * 3);
    naswd::Rng rng(seed);
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.uniform_below(256));
    return img;
}

} // namespace

TEST_CASE("png: encode/decode round trip") {
    Image img = random_image(13, 7, 3);
    std::vector<std::uint8_t> bytes = encode(img);
    // PNG signature
    REQUIRE(bytes.size() > 8);
    CHECK(bytes[0] == 0x89);
    CHECK(bytes[1] == 'P');
    CHECK(bytes[2] == 'N');
    CHECK(bytes[3] == 'G');

    Image back = decode(bytes);
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("png: deterministic bytes for identical input") {
    Image img = random_image(9, 9, 11);
    CHECK(encode(img) == encode(img));
}

TEST_CASE("png: file write/read round trip") {
    auto dir = tsup::temp_dir("png_io");
    Image img = random_image(4, 5, 21);
    write_png(img, dir / "t.png");
    Image back = read_png(dir / "t.png");
    CHECK(back.width == img.width);
    CHECK(back.height == img.height);
    CHECK(back.pixels == img.pixels);

    // file bytes equal in-memory encoding
    std::vector<std::uint8_t> bytes = encode(img);
    CHECK(tsup::read_bytes(dir / "t.png") == std::vector<unsigned char>(bytes.begin(), bytes.end()));
}

TEST_CASE("png: decode rejects garbage") {
    std::vector<std::uint8_t> junk = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    CHECK_THROWS_AS((void)decode(junk), std::runtime_error);
}

TEST_CASE("png: 1x1 image") {
    Image img;
    img.width = 1;
    img.height = 1;
    img.pixels = {10, 200, 30};
    Image back = decode(encode(img));
    CHECK(back.pixels == img.pixels);
}
