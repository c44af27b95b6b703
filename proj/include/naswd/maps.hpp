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

#include "naswd/png_io.hpp"
#include "naswd/widedeep.hpp"

namespace naswd::maps {

// class palette: NB green, MWB yellow, SWB red; background black
constexpr std::array<std::array<std::uint8_t, 3>, 3> kClassColors = {{
    {0, 200, 0},
    {230, 200, 0},
    {220, 0, 0},
}};
constexpr std::array<std::uint8_t, 3> kBackground = {0, 0, 0};

// hardness bins: [0,3.5], (3.5,7.1], (7.1,10.8], (10.8,inf) — light to dark
constexpr std::array<double, 3> kBinEdges = {3.5, 7.1, 10.8};
constexpr std::array<std::array<std::uint8_t, 3>, 4> kHardnessColors = {{
    {255, 245, 200},
    {250, 190, 90},
    {215, 95, 20},
    {110, 35, 10},
}};

// [0,3.5] -> 0, (3.5,7.1] -> 1, (7.1,10.8] -> 2, (10.8,inf) -> 3
int bin_hardness(double force_n);

// percentage of non-absent pixels per class, summing to 100
std::array<double, 3> class_percentages(const wd::PixelGrid& grid);
std::array<double, 4> hardness_percentages(const wd::PixelGrid& grid);

png::Image render_class_map(const wd::PixelGrid& grid);
png::Image render_hardness_map(const wd::PixelGrid& grid);

void write_class_map(const wd::PixelGrid& grid, const std::filesystem::path& path);

// Writes the PNG and returns the per-bin percentages.
std::array<double, 4> write_hardness_map(const wd::PixelGrid& grid,
                                         const std::filesystem::path& path);

// Percentage table as structured text: `category,percent` lines.
void write_percentages(const std::vector<std::pair<std::string, double>>& rows,
                       const std::filesystem::path& path);

} // namespace naswd::maps
