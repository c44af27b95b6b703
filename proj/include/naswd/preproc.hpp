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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "naswd/hsi.hpp"
#include "naswd/png_io.hpp"

namespace naswd::preproc {

// ---------------------------------------------------------------- raster ---

// Planar-interleaved 3-channel image of doubles (RGB in [0,1] or L*a*b*).
struct Image3 {
    std::size_t lines = 0;
    std::size_t samples = 0;
    std::vector<double> data; // lines * samples * 3, channel-minor

    double& at(std::size_t l, std::size_t s, std::size_t c) {
        return data[(l * samples + s) * 3 + c];
    }
    double at(std::size_t l, std::size_t s, std::size_t c) const {
        return data[(l * samples + s) * 3 + c];
    }
};

struct Mask {
    std::size_t lines = 0;
    std::size_t samples = 0;
    std::vector<std::uint8_t> bits; // lines * samples, 0/1

    bool at(std::size_t l, std::size_t s) const { return bits[l * samples + s] != 0; }
    void set(std::size_t l, std::size_t s, bool v) {
        bits[l * samples + s] = v ? 1 : 0;
    }
    std::size_t count() const;
};

// Pixel index = line * samples + sample.
struct RegionPartition {
    std::vector<std::size_t> cranial;
    std::vector<std::size_t> medial;
    std::vector<std::size_t> caudal;
};

enum class Region { cranial, medial, caudal, whole };
std::string to_string(Region r);
Region region_from_string(const std::string& s);

enum class Severity : int { NB = 0, MWB = 1, SWB = 2 };
std::string to_string(Severity s);
Severity severity_from_string(const std::string& s);

enum class Normalization { none, snv, zscore };
std::string to_string(Normalization n);
Normalization normalization_from_string(const std::string& s);

struct Spectrum {
    std::vector<double> values;
    Normalization normalization = Normalization::none;
};

struct SpectraRow {
    std::string sample_id;
    Region region = Region::whole;
    Severity label = Severity::NB;
    std::optional<double> force_n; // compression force, Newtons
    Spectrum spectrum;
};

struct SpectraTable {
    std::vector<SpectraRow> rows;
    std::size_t bands() const { return rows.empty() ? 0 : rows[0].spectrum.values.size(); }
    void validate() const;
};

// ------------------------------------------------------------ operations ---

constexpr double kDefaultRedNm = 640.0;
constexpr double kDefaultGreenNm = 550.0;
constexpr double kDefaultBlueNm = 460.0;

// Nearest-band reflectance planes, clipped to [0,1].
Image3 pseudo_rgb(const hsi::HyperCube& cube, double r_nm = kDefaultRedNm,
                  double g_nm = kDefaultGreenNm, double b_nm = kDefaultBlueNm);

// CIE L*a*b*, D65 / 2 degree observer, sRGB companding. Inputs clamped to [0,1].
std::array<double, 3> rgb_to_lab(double r, double g, double b);

Image3 rgb_image_to_lab(const Image3& rgb);

// Closed per-channel acceptance intervals on (L*, a*, b*).
struct ThresholdRules {
    double l_min = 35.0, l_max = 100.0;
    double a_min = -10.0, a_max = 45.0;
    double b_min = -5.0, b_max = 50.0;
};

// Threshold, keep largest 4-connected component, fill interior holes.
// Throws if nothing survives.
Mask threshold_mask(const Image3& lab, const ThresholdRules& rules);

enum class CranialEnd { low, high };

// Equal-count thirds along the major principal axis of the mask coordinates.
// `end` picks which extreme of the axis is the cranial end (default low).
RegionPartition partition_regions(const Mask& mask, CranialEnd end = CranialEnd::low);

Spectrum mean_spectrum(const hsi::HyperCube& cube, const std::vector<std::size_t>& pixels);

struct ZscoreStats {
    std::vector<double> mean;
    std::vector<double> sd;
};

// Per-band statistics over a training matrix (rows = spectra).
ZscoreStats fit_zscore(const std::vector<std::vector<double>>& rows);

Spectrum normalize_spectrum(const Spectrum& s, Normalization method,
                            const ZscoreStats* stats = nullptr);

// In-place SNV over a raw vector; throws on near-zero variance.
void snv_inplace(std::vector<double>& v);

// ------------------------------------------------------------------- I/O ---

void write_mask_png(const Mask& mask, const std::filesystem::path& path);
Mask read_mask_png(const std::filesystem::path& path);

void write_rgb_png(const Image3& rgb, const std::filesystem::path& path);

// CSV: header `sample_id,region,label,force_n,b0..b{B-1}`; absent force -> empty field.
void write_spectra_csv(const SpectraTable& table, const std::filesystem::path& path);
SpectraTable read_spectra_csv(const std::filesystem::path& path);

} // namespace naswd::preproc
