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

#include "naswd/hsi.hpp"
#include "naswd/preproc.hpp"
#include "naswd/rng.hpp"

namespace naswd::synth {

// Compression-force distributions per severity class and region (Newtons).
struct HardnessStats {
    double mean;
    double sd;
};

struct ClassHardness {
    HardnessStats whole, cranial, medial, caudal;
};

// NB / MWB / SWB rows of the reference force table.
constexpr std::array<ClassHardness, 3> kHardnessTable = {{
    {{4.89, 2.47}, {7.02, 2.23}, {3.14, 1.21}, {5.33, 2.70}},
    {{5.47, 2.78}, {8.23, 2.50}, {4.06, 1.54}, {4.78, 3.02}},
    {{11.12, 7.21}, {21.03, 6.75}, {11.16, 6.42}, {13.59, 6.26}},
}};

struct SyntheticSpec {
    std::array<std::size_t, 3> n_per_class = {78, 82, 90}; // NB, MWB, SWB
    std::size_t bands = 224;
    std::size_t lines = 32;
    std::size_t samples = 32;
    // reflectance shift per Newton inside the coupling window
    double coupling = 0.01;
    double coupling_lo_nm = 550.0;
    double coupling_hi_nm = 650.0;
    double noise_sd = 0.015; // per-pixel white sensor noise
    double gain_sd = 0.10;   // per-sample smooth multiplicative gain texture
    double illumination_jitter = 0.05; // multiplicative scale sd per sample
    std::uint64_t seed = 0;

    std::size_t total() const { return n_per_class[0] + n_per_class[1] + n_per_class[2]; }
    void validate() const;
};

struct SampleTruth {
    std::string id;
    preproc::Severity label = preproc::Severity::NB;
    double whole_n = 0.0;
    double cranial_n = 0.0;
    double medial_n = 0.0;
    double caudal_n = 0.0;
};

struct SynthResult {
    std::vector<SampleTruth> truths;
    std::filesystem::path dir;
    std::filesystem::path dark_header;
    std::filesystem::path white_header;
    std::filesystem::path labels_csv;
    std::vector<std::filesystem::path> cube_headers; // one raw cube per sample
};

// Normal draw truncated at 0 by rejection.
double draw_hardness(preproc::Severity cls, preproc::Region region, Rng& rng);

// Class reflectance archetype: sum of Gaussian bumps over wavelength.
double archetype_reflectance(preproc::Severity cls, double wavelength_nm);

// In-memory sample: ground-truth blob mask plus the reflectance cube before
// sensor synthesis. Pixel spectra = (archetype + hardness-coupled shift in
// the window) x smooth per-sample gain x illumination scale + white noise,
// clipped to [0.01, 1.04].
struct SampleCube {
    hsi::HyperCube reflectance;
    preproc::Mask blob;
    SampleTruth truth;
};

SampleCube make_sample(const SyntheticSpec& spec, preproc::Severity cls,
                       const std::string& id, Rng& sample_rng);

// Writes dark/white frames, per-sample raw cubes (u16 counts synthesized as
// dark + R*(white-dark)), labels CSV, and a generator spec echo (JSON).
SynthResult synth_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

// labels CSV round-trip: `sample_id,label,whole_n,cranial_n,medial_n,caudal_n`
void write_labels_csv(const std::vector<SampleTruth>& truths,
                      const std::filesystem::path& path);
std::vector<SampleTruth> read_labels_csv(const std::filesystem::path& path);

} // namespace naswd::synth
