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

#include <limits>
#include <stdexcept>

#include "doctest.h"
#include "naswd/maps.hpp"
#include "test_support.hpp"

using namespace naswd;
using namespace naswd::maps;

namespace {

wd::PixelGrid make_grid(std::size_t lines, std::size_t samples) {
    wd::PixelGrid g;
    g.lines = lines;
    g.samples = samples;
    g.present.assign(lines * samples, 1);
    g.values.assign(lines * samples, 0.0);
    return g;
}

bool pixel_is(const png::Image& img, std::size_t r, std::size_t c,
              const std::array<std::uint8_t, 3>& color) {
    const std::uint8_t* p = img.at(r, c);
    return p[0] == color[0] && p[1] == color[1] && p[2] == color[2];
}

} // namespace

TEST_CASE("maps: hardness bin edges are closed on the left bins") {
    CHECK(bin_hardness(0.0) == 0);
    CHECK(bin_hardness(3.5) == 0);
    CHECK(bin_hardness(3.55) == 1);
    CHECK(bin_hardness(7.1) == 1);
    CHECK(bin_hardness(7.11) == 2);
    CHECK(bin_hardness(10.8) == 2);
    CHECK(bin_hardness(10.81) == 3);
    CHECK(bin_hardness(1000.0) == 3);
    CHECK_THROWS_AS((void)bin_hardness(-0.01), std::runtime_error);
    CHECK_THROWS_AS((void)bin_hardness(std::numeric_limits<double>::quiet_NaN()),
                    std::runtime_error);
}

TEST_CASE("maps: class percentages") {
    SUBCASE("single class") {
        wd::PixelGrid g = make_grid(2, 3);
        auto pct = class_percentages(g);
        CHECK(pct[0] == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(pct[1] == 0.0);
        CHECK(pct[2] == 0.0);
    }

    SUBCASE("7/2/1 split, absent pixels excluded") {
        wd::PixelGrid g = make_grid(2, 6); // 12 cells, 2 absent
        g.present[10] = 0;
        g.present[11] = 0;
        g.values[10] = 99.0; // garbage behind an absent pixel is ignored
        for (std::size_t i = 7; i < 9; ++i) g.values[i] = 1.0;
        g.values[9] = 2.0;
        auto pct = class_percentages(g);
        CHECK(pct[0] == doctest::Approx(70.0).epsilon(1e-12));
        CHECK(pct[1] == doctest::Approx(20.0).epsilon(1e-12));
        CHECK(pct[2] == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(pct[0] + pct[1] + pct[2] == doctest::Approx(100.0).epsilon(1e-12));
    }

    SUBCASE("contracts") {
        wd::PixelGrid empty = make_grid(2, 2);
        empty.present.assign(4, 0);
        CHECK_THROWS_AS((void)class_percentages(empty), std::runtime_error);

        wd::PixelGrid frac = make_grid(1, 2);
        frac.values[1] = 0.5; // not a class index
        CHECK_THROWS_AS((void)class_percentages(frac), std::runtime_error);

        wd::PixelGrid high = make_grid(1, 2);
        high.values[1] = 3.0; // outside {0,1,2}
        CHECK_THROWS_AS((void)class_percentages(high), std::runtime_error);
    }
}

TEST_CASE("maps: hardness percentages") {
    SUBCASE("uniform soft tissue") {
        wd::PixelGrid g = make_grid(3, 3);
        g.values.assign(9, 2.0);
        auto pct = hardness_percentages(g);
        CHECK(pct[0] == doctest::Approx(100.0).epsilon(1e-12));
        CHECK(pct[1] + pct[2] + pct[3] == 0.0);
    }

    SUBCASE("equal quarters at the bin centers") {
        wd::PixelGrid g = make_grid(2, 2);
        g.values = {1.75, 5.3, 8.95, 15.0};
        auto pct = hardness_percentages(g);
        for (double p : pct) CHECK(p == doctest::Approx(25.0).epsilon(1e-12));
    }
}

TEST_CASE("maps: class map rendering") {
    SUBCASE("single pixel round trip carries the NB color") {
        auto dir = tsup::temp_dir("maps_single");
        wd::PixelGrid g = make_grid(1, 1);
        write_class_map(g, dir / "one.png");
        png::Image img = png::read_png(dir / "one.png");
        REQUIRE(img.width == 1);
        REQUIRE(img.height == 1);
        CHECK(pixel_is(img, 0, 0, kClassColors[0]));
    }

    SUBCASE("checkerboard of NB and SWB with an absent corner") {
        wd::PixelGrid g = make_grid(4, 4);
        for (std::size_t l = 0; l < 4; ++l)
            for (std::size_t s = 0; s < 4; ++s)
                g.values[l * 4 + s] = ((l + s) % 2 == 0) ? 0.0 : 2.0;
        g.present[15] = 0;
        png::Image img = render_class_map(g);
        REQUIRE(img.width == 4);
        REQUIRE(img.height == 4);
        for (std::size_t l = 0; l < 4; ++l)
            for (std::size_t s = 0; s < 4; ++s) {
                if (l == 3 && s == 3) {
                    CHECK(pixel_is(img, l, s, kBackground));
                } else if ((l + s) % 2 == 0) {
                    CHECK(pixel_is(img, l, s, kClassColors[0]));
                } else {
                    CHECK(pixel_is(img, l, s, kClassColors[2]));
                }
            }
    }

    SUBCASE("all three class colors land exactly") {
        wd::PixelGrid g = make_grid(1, 3);
        g.values = {0.0, 1.0, 2.0};
        png::Image img = render_class_map(g);
        CHECK(pixel_is(img, 0, 0, {0, 200, 0}));
        CHECK(pixel_is(img, 0, 1, {230, 200, 0}));
        CHECK(pixel_is(img, 0, 2, {220, 0, 0}));
    }
}

TEST_CASE("maps: hardness map rendering") {
    wd::PixelGrid g = make_grid(1, 5);
    g.values = {0.5, 4.0, 9.0, 20.0, 0.0};
    g.present[4] = 0;
    png::Image img = render_hardness_map(g);
    CHECK(pixel_is(img, 0, 0, kHardnessColors[0]));
    CHECK(pixel_is(img, 0, 1, kHardnessColors[1]));
    CHECK(pixel_is(img, 0, 2, kHardnessColors[2]));
    CHECK(pixel_is(img, 0, 3, kHardnessColors[3]));
    CHECK(pixel_is(img, 0, 4, kBackground));

    SUBCASE("write returns the percentages and is byte deterministic") {
        auto dir = tsup::temp_dir("maps_hardness");
        auto pct1 = write_hardness_map(g, dir / "a.png");
        auto pct2 = write_hardness_map(g, dir / "b.png");
        CHECK(tsup::read_bytes(dir / "a.png") == tsup::read_bytes(dir / "b.png"));
        double total = 0.0;
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(pct1[i] == doctest::Approx(25.0).epsilon(1e-12));
            CHECK(pct1[i] == pct2[i]);
            total += pct1[i];
        }
        CHECK(total == doctest::Approx(100.0).epsilon(1e-10));
    }
}

TEST_CASE("maps: percentage table format") {
    auto dir = tsup::temp_dir("maps_pct");
    write_percentages({{"NB", 62.5}, {"MWB", 25.0}, {"SWB", 12.5}}, dir / "pct.csv");
    std::string text = tsup::read_text(dir / "pct.csv");
    CHECK(text ==
          "category,percent\nNB,62.500000\nMWB,25.000000\nSWB,12.500000\n");
}
