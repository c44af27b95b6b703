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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "naswd/hsi.hpp"
#include "naswd/preproc.hpp"
#include "naswd/rng.hpp"

namespace tsup {

// Fresh per-test scratch directory under the system temp root.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "naswd-unit" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<unsigned char> read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename F>
naswd::hsi::HyperCube make_cube(std::size_t lines, std::size_t samples, std::size_t bands,
                                naswd::hsi::CubeKind kind, F value) {
    naswd::hsi::HyperCube c;
    c.lines = lines;
    c.samples = samples;
    c.bands = bands;
    c.kind = kind;
    c.axis = naswd::hsi::default_axis(bands);
    c.data.resize(lines * samples * bands);
    for (std::size_t l = 0; l < lines; ++l)
        for (std::size_t s = 0; s < samples; ++s)
            for (std::size_t b = 0; b < bands; ++b)
                c.at(l, s, b) = value(l, s, b);
    return c;
}

// Uniform-valued cube.
inline naswd::hsi::HyperCube const_cube(std::size_t lines, std::size_t samples,
                                        std::size_t bands, naswd::hsi::CubeKind kind,
                                        double v) {
    return make_cube(lines, samples, bands, kind,
                     [v](std::size_t, std::size_t, std::size_t) { return v; });
}

// Class archetypes that differ in spectral shape (bump position), so the
// separation survives per-spectrum normalization such as SNV.
inline double toy_archetype(int cls, std::size_t band, std::size_t bands) {
    double t = static_cast<double>(band) / static_cast<double>(bands - 1);
    double center = 0.2 + 0.3 * static_cast<double>(cls);
    double z = (t - center) / 0.12;
    return 0.4 + 0.3 * std::exp(-z * z);
}

// Small labeled table with one well-separated archetype per class plus
// seeded noise; region tag = whole, forces = class-dependent with jitter.
inline naswd::preproc::SpectraTable toy_table(std::size_t per_class, std::size_t bands,
                                              double noise_sd, std::uint64_t seed) {
    using naswd::preproc::Severity;
    naswd::Rng rng(seed);
    naswd::preproc::SpectraTable table;
    const double force[3] = {4.0, 8.0, 16.0};
    for (int cls = 0; cls < 3; ++cls) {
        for (std::size_t i = 0; i < per_class; ++i) {
            naswd::preproc::SpectraRow row;
            row.sample_id = "toy_" + std::to_string(cls) + "_" + std::to_string(i);
            row.region = naswd::preproc::Region::whole;
            row.label = static_cast<Severity>(cls);
            row.force_n = force[cls] + 0.5 * rng.normal();
            row.spectrum.values.resize(bands);
            for (std::size_t b = 0; b < bands; ++b)
                row.spectrum.values[b] =
                    toy_archetype(cls, b, bands) + noise_sd * rng.normal();
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

} // namespace tsup
