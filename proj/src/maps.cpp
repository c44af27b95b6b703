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

#include "naswd/maps.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace naswd::maps {

int bin_hardness(double force_n) {
    if (!(force_n >= 0.0)) throw std::runtime_error("bin_hardness: negative force");
    if (force_n <= kBinEdges[0]) return 0;
    if (force_n <= kBinEdges[1]) return 1;
    if (force_n <= kBinEdges[2]) return 2;
    return 3;
}

namespace {

std::size_t present_count(const wd::PixelGrid& grid) {
    std::size_t n = 0;
    for (std::uint8_t p : grid.present) n += p ? 1 : 0;
    if (n == 0) throw std::runtime_error("map: no masked pixels");
    return n;
}

int class_of(const wd::PixelGrid& grid, std::size_t i) {
    double v = grid.values[i];
    int c = static_cast<int>(std::lround(v));
    if (c < 0 || c > 2 || std::fabs(v - c) > 1e-9)
        throw std::runtime_error("class map: value is not a class index");
    return c;
}

} // namespace

std::array<double, 3> class_percentages(const wd::PixelGrid& grid) {
    double n = static_cast<double>(present_count(grid));
    std::array<double, 3> pct{};
    for (std::size_t i = 0; i < grid.present.size(); ++i)
        if (grid.present[i]) pct[static_cast<std::size_t>(class_of(grid, i))] += 1.0;
    for (double& p : pct) p = 100.0 * p / n;
    return pct;
}

std::array<double, 4> hardness_percentages(const wd::PixelGrid& grid) {
    double n = static_cast<double>(present_count(grid));
    std::array<double, 4> pct{};
    for (std::size_t i = 0; i < grid.present.size(); ++i)
        if (grid.present[i])
            pct[static_cast<std::size_t>(bin_hardness(grid.values[i]))] += 1.0;
    for (double& p : pct) p = 100.0 * p / n;
    return pct;
}

png::Image render_class_map(const wd::PixelGrid& grid) {
    present_count(grid);
    png::Image img;
    img.width = grid.samples;
    img.height = grid.lines;
    img.pixels.assign(img.width * img.height * 3, 0);
    for (std::size_t l = 0; l < grid.lines; ++l)
        for (std::size_t s = 0; s < grid.samples; ++s) {
            std::size_t i = l * grid.samples + s;
            const auto& color =
                grid.present[i] ? kClassColors[static_cast<std::size_t>(class_of(grid, i))]
                                : kBackground;
            std::uint8_t* px = img.at(l, s);
            px[0] = color[0];
            px[1] = color[1];
            px[2] = color[2];
        }
    return img;
}

png::Image render_hardness_map(const wd::PixelGrid& grid) {
    present_count(grid);
    png::Image img;
    img.width = grid.samples;
    img.height = grid.lines;
    img.pixels.assign(img.width * img.height * 3, 0);
    for (std::size_t l = 0; l < grid.lines; ++l)
        for (std::size_t s = 0; s < grid.samples; ++s) {
            std::size_t i = l * grid.samples + s;
            const auto& color =
                grid.present[i]
                    ? kHardnessColors[static_cast<std::size_t>(bin_hardness(grid.values[i]))]
                    : kBackground;
            std::uint8_t* px = img.at(l, s);
            px[0] = color[0];
            px[1] = color[1];
            px[2] = color[2];
        }
    return img;
}

void write_class_map(const wd::PixelGrid& grid, const std::filesystem::path& path) {
    png::write_png(render_class_map(grid), path);
}

std::array<double, 4> write_hardness_map(const wd::PixelGrid& grid,
                                         const std::filesystem::path& path) {
    png::write_png(render_hardness_map(grid), path);
    return hardness_percentages(grid);
}

void write_percentages(const std::vector<std::pair<std::string, double>>& rows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "category,percent\n";
    char buf[32];
    for (const auto& [name, pct] : rows) {
        std::snprintf(buf, sizeof buf, "%.6f", pct);
        out << name << ',' << buf << "\n";
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

} // namespace naswd::maps
