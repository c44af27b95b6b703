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

#ifndef NASWD_HSI_HPP
#define NASWD_HSI_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace naswd::hsi {

enum class CubeKind { raw, dark, white, reflectance };
enum class Interleave { bsq, bil, bip };
enum class DataType { f32, f64, u16 };

std::string to_string(CubeKind k);
CubeKind cube_kind_from_string(const std::string& s);

/// Spectral axis in nanometers; strictly increasing, within [300, 1200].
struct BandAxis {
    std::vector<double> wavelengths_nm;

    std::size_t bands() const { return wavelengths_nm.size(); }
    void validate() const;
};

/// Evenly spaced axis over 397-1005 nm (the scanner's range).
BandAxis default_axis(std::size_t bands = 224);

/// Index of the band nearest to target_nm; ties break toward the lower
/// index. target_nm must lie within [min - 5, max + 5] nm.
std::size_t band_index_for_wavelength(const BandAxis& axis, double target_nm);

/// 3-D reflectance/count array stored line-major: data[(line*samples + sample)*bands + band].
struct HyperCube {
    std::size_t lines = 0;
    std::size_t samples = 0;
    std::size_t bands = 0;
    std::vector<double> data;
    BandAxis axis;
    CubeKind kind = CubeKind::raw;
    DataType storage = DataType::f32; // binary representation on disk

    double& at(std::size_t line, std::size_t sample, std::size_t band) {
        return data[(line * samples + sample) * bands + band];
    }
    double at(std::size_t line, std::size_t sample, std::size_t band) const {
        return data[(line * samples + sample) * bands + band];
    }
    std::size_t size() const { return lines * samples * bands; }
    void validate() const;
};

struct EnviHeader {
    std::size_t samples = 0;
    std::size_t lines = 0;
    std::size_t bands = 0;
    Interleave interleave = Interleave::bsq;
    DataType data_type = DataType::f32;
    std::vector<double> wavelengths;
    CubeKind kind = CubeKind::raw;

    void validate() const;
};

EnviHeader read_header(const std::filesystem::path& header_path);

/// Reads an ENVI-subset cube (ASCII .hdr plus raw little-endian binary
/// sibling with extension .raw). All three interleaves are accepted.
HyperCube read_cube(const std::filesystem::path& header_path);

/// Writes header + BSQ binary. Round-trips bit-exactly for f32/f64 storage.
void write_cube(const HyperCube& cube, const std::filesystem::path& header_path);

struct CalibrationResult {
    HyperCube cube;              // kind = reflectance, clamped to [0, 1.05]
    std::size_t dead_pixels = 0; // output elements where W - D <= 1e-6
};

/// Per-element relative reflectance (raw - dark) / (white - dark).
/// dark/white may be single-line frames broadcast along the scan axis.
CalibrationResult calibrate_reflectance(const HyperCube& raw, const HyperCube& dark,
                                        const HyperCube& white);

} // namespace naswd::hsi

#endif
