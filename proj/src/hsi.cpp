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

#include "naswd/hsi.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "cube binaries are little-endian; big-endian hosts unsupported");

namespace naswd::hsi {

namespace {

constexpr double kReflectanceCeiling = 1.05;
constexpr double kDeadPixelDelta = 1e-6;

std::size_t element_size(DataType t) {
    switch (t) {
    case DataType::f32: return 4;
    case DataType::f64: return 8;
    case DataType::u16: return 2;
    }
    return 0;
}

int envi_type_code(DataType t) {
    switch (t) {
    case DataType::f32: return 4;
    case DataType::f64: return 5;
    case DataType::u16: return 12;
    }
    return 0;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

[[noreturn]] void header_error(const std::filesystem::path& p, const std::string& what) {
    throw std::runtime_error("malformed header " + p.string() + ": " + what);
}

std::filesystem::path binary_path(const std::filesystem::path& header_path) {
    std::filesystem::path p = header_path;
    p.replace_extension(".raw");
    return p;
}

std::size_t parse_count(const std::filesystem::path& p, const std::string& key,
                        const std::string& value) {
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        header_error(p, "bad value for '" + key + "'");
    }
    if (pos != value.size() || v <= 0) header_error(p, "bad value for '" + key + "'");
    return static_cast<std::size_t>(v);
}

} // namespace

std::string to_string(CubeKind k) {
    switch (k) {
    case CubeKind::raw: return "raw";
    case CubeKind::dark: return "dark";
    case CubeKind::white: return "white";
    case CubeKind::reflectance: return "reflectance";
    }
    return "raw";
}

CubeKind cube_kind_from_string(const std::string& s) {
    std::string v = lower(trim(s));
    if (v == "raw") return CubeKind::raw;
    if (v == "dark") return CubeKind::dark;
    if (v == "white") return CubeKind::white;
    if (v == "reflectance") return CubeKind::reflectance;
    throw std::runtime_error("unknown cube kind '" + s + "'");
}

void BandAxis::validate() const {
    if (wavelengths_nm.empty())
        throw std::runtime_error("band axis: empty wavelength list");
    double prev = -1.0;
    for (double w : wavelengths_nm) {
        if (!std::isfinite(w) || w < 300.0 || w > 1200.0)
            throw std::runtime_error("band axis: wavelength outside [300, 1200] nm");
        if (w <= prev)
            throw std::runtime_error("band axis: wavelengths not strictly increasing");
        prev = w;
    }
}

BandAxis default_axis(std::size_t bands) {
    BandAxis axis;
    axis.wavelengths_nm.resize(bands);
    double lo = 397.0, hi = 1005.0;
    for (std::size_t i = 0; i < bands; ++i) {
        double t = bands > 1 ? static_cast<double>(i) / static_cast<double>(bands - 1) : 0.0;
        axis.wavelengths_nm[i] = lo + t * (hi - lo);
    }
    return axis;
}

std::size_t band_index_for_wavelength(const BandAxis& axis, double target_nm) {
    const auto& w = axis.wavelengths_nm;
    if (w.empty()) throw std::runtime_error("band axis: empty wavelength list");
    if (target_nm < w.front() - 5.0 || target_nm > w.back() + 5.0)
        throw std::out_of_range("wavelength " + std::to_string(target_nm) +
                                " nm outside axis range");
    std::size_t best = 0;
    double best_dist = std::fabs(w[0] - target_nm);
    for (std::size_t i = 1; i < w.size(); ++i) {
        double d = std::fabs(w[i] - target_nm);
        if (d < best_dist) { // strict, so ties keep the lower index
            best = i;
            best_dist = d;
        }
    }
    return best;
}

void HyperCube::validate() const {
    if (lines == 0 || samples == 0 || bands == 0)
        throw std::runtime_error("cube: zero-sized dimension");
    if (data.size() != size())
        throw std::runtime_error("cube: data length does not match dimensions");
    axis.validate();
    if (axis.bands() != bands)
        throw std::runtime_error("cube: wavelength count does not match band count");
    for (double v : data)
        if (!std::isfinite(v)) throw std::runtime_error("cube: non-finite value");
    if (kind == CubeKind::reflectance) {
        for (double v : data)
            if (v < 0.0 || v > kReflectanceCeiling)
                throw std::runtime_error("cube: reflectance outside [0, 1.05]");
    }
}

void EnviHeader::validate() const {
    if (samples == 0 || lines == 0 || bands == 0)
        throw std::runtime_error("header: counts must be positive");
    if (wavelengths.size() != bands)
        throw std::runtime_error("header: wavelength count does not match bands");
}

EnviHeader read_header(const std::filesystem::path& header_path) {
    std::ifstream in(header_path);
    if (!in) throw std::runtime_error("cannot open header " + header_path.string());

    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (all.rfind("ENVI", 0) != 0) header_error(header_path, "missing ENVI magic");

    // key = value lines; a brace-delimited value may span lines.
    EnviHeader h;
    bool saw_samples = false, saw_lines = false, saw_bands = false, saw_wl = false;
    std::size_t pos = all.find('\n');
    while (pos != std::string::npos && pos + 1 < all.size()) {
        std::size_t eq = all.find('=', pos);
        if (eq == std::string::npos) break;
        std::string key = lower(trim(all.substr(pos + 1, eq - pos - 1)));
        std::size_t value_end;
        std::string value;
        std::size_t vstart = eq + 1;
        while (vstart < all.size() && (all[vstart] == ' ' || all[vstart] == '\t')) ++vstart;
        if (vstart < all.size() && all[vstart] == '{') {
            std::size_t close = all.find('}', vstart);
            if (close == std::string::npos) header_error(header_path, "unterminated { list");
            value = all.substr(vstart + 1, close - vstart - 1);
            value_end = all.find('\n', close);
        } else {
            value_end = all.find('\n', vstart);
            value = trim(all.substr(vstart, value_end == std::string::npos
                                                 ? std::string::npos
                                                 : value_end - vstart));
        }

        if (key == "samples") {
            h.samples = parse_count(header_path, key, value);
            saw_samples = true;
        } else if (key == "lines") {
            h.lines = parse_count(header_path, key, value);
            saw_lines = true;
        } else if (key == "bands") {
            h.bands = parse_count(header_path, key, value);
            saw_bands = true;
        } else if (key == "interleave") {
            std::string v = lower(trim(value));
            if (v == "bsq") h.interleave = Interleave::bsq;
            else if (v == "bil") h.interleave = Interleave::bil;
            else if (v == "bip") h.interleave = Interleave::bip;
            else header_error(header_path, "unsupported interleave '" + v + "'");
        } else if (key == "data type") {
            std::string v = trim(value);
            if (v == "4") h.data_type = DataType::f32;
            else if (v == "5") h.data_type = DataType::f64;
            else if (v == "12") h.data_type = DataType::u16;
            else header_error(header_path, "unsupported data type '" + v + "'");
        } else if (key == "cube kind") {
            try {
                h.kind = cube_kind_from_string(value);
            } catch (const std::exception& e) {
                header_error(header_path, e.what());
            }
        } else if (key == "wavelength") {
            std::stringstream ss(value);
            std::string tok;
            h.wavelengths.clear();
            while (std::getline(ss, tok, ',')) {
                tok = trim(tok);
                if (tok.empty()) continue;
                try {
                    std::size_t used = 0;
                    double w = std::stod(tok, &used);
                    if (used != tok.size()) throw std::invalid_argument(tok);
                    h.wavelengths.push_back(w);
                } catch (const std::exception&) {
                    header_error(header_path, "bad wavelength entry '" + tok + "'");
                }
            }
            saw_wl = true;
        }
        // unknown keys ignored (header offset, byte order, file type, ...)
        pos = value_end;
    }

    if (!saw_samples || !saw_lines || !saw_bands)
        header_error(header_path, "missing samples/lines/bands");
    if (!saw_wl) header_error(header_path, "missing wavelength list");
    try {
        h.validate();
    } catch (const std::exception& e) {
        header_error(header_path, e.what());
    }
    return h;
}

HyperCube read_cube(const std::filesystem::path& header_path) {
    EnviHeader h = read_header(header_path);
    std::filesystem::path bin = binary_path(header_path);
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open binary " + bin.string());

    in.seekg(0, std::ios::end);
    std::size_t file_size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::size_t n = h.samples * h.lines * h.bands;
    std::size_t want = n * element_size(h.data_type);
    if (file_size != want)
        throw std::runtime_error("size mismatch for " + bin.string() + ": expected " +
                                 std::to_string(want) + " bytes, found " +
                                 std::to_string(file_size));

    std::vector<char> raw(want);
    in.read(raw.data(), static_cast<std::streamsize>(want));
    if (!in) throw std::runtime_error("short read from " + bin.string());

    HyperCube cube;
    cube.lines = h.lines;
    cube.samples = h.samples;
    cube.bands = h.bands;
    cube.axis.wavelengths_nm = h.wavelengths;
    cube.kind = h.kind;
    cube.storage = h.data_type;
    cube.data.resize(n);

    auto element = [&](std::size_t i) -> double {
        switch (h.data_type) {
        case DataType::f32: {
            float v;
            std::memcpy(&v, raw.data() + i * 4, 4);
            return static_cast<double>(v);
        }
        case DataType::f64: {
            double v;
            std::memcpy(&v, raw.data() + i * 8, 8);
            return v;
        }
        case DataType::u16: {
            std::uint16_t v;
            std::memcpy(&v, raw.data() + i * 2, 2);
            return static_cast<double>(v);
        }
        }
        return 0.0;
    };

    // file index -> (line, sample, band) per interleave, stored line-major
    std::size_t L = h.lines, S = h.samples, B = h.bands;
    std::size_t idx = 0;
    switch (h.interleave) {
    case Interleave::bsq:
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t l = 0; l < L; ++l)
                for (std::size_t s = 0; s < S; ++s)
                    cube.data[(l * S + s) * B + b] = element(idx++);
        break;
    case Interleave::bil:
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t b = 0; b < B; ++b)
                for (std::size_t s = 0; s < S; ++s)
                    cube.data[(l * S + s) * B + b] = element(idx++);
        break;
    case Interleave::bip:
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t s = 0; s < S; ++s)
                for (std::size_t b = 0; b < B; ++b)
                    cube.data[(l * S + s) * B + b] = element(idx++);
        break;
    }

    cube.validate();
    return cube;
}

void write_cube(const HyperCube& cube, const std::filesystem::path& header_path) {
    cube.validate();

    std::ofstream hdr(header_path);
    if (!hdr) throw std::runtime_error("cannot write header " + header_path.string());
    hdr << "ENVI\n";
    hdr << "samples = " << cube.samples << "\n";
    hdr << "lines = " << cube.lines << "\n";
    hdr << "bands = " << cube.bands << "\n";
    hdr << "header offset = 0\n";
    hdr << "file type = ENVI Standard\n";
    hdr << "data type = " << envi_type_code(cube.storage) << "\n";
    hdr << "interleave = bsq\n";
    hdr << "byte order = 0\n";
    hdr << "cube kind = " << to_string(cube.kind) << "\n";
    hdr << "wavelength = {";
    char buf[32];
    for (std::size_t i = 0; i < cube.axis.wavelengths_nm.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", cube.axis.wavelengths_nm[i]);
        hdr << (i ? ", " : "") << buf;
    }
    hdr << "}\n";
    if (!hdr) throw std::runtime_error("write failure on " + header_path.string());
    hdr.close();

    std::filesystem::path bin = binary_path(header_path);
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write binary " + bin.string());

    std::size_t L = cube.lines, S = cube.samples, B = cube.bands;
    auto put = [&](double v) {
        switch (cube.storage) {
        case DataType::f32: {
            float f = static_cast<float>(v);
            out.write(reinterpret_cast<const char*>(&f), 4);
            break;
        }
        case DataType::f64:
            out.write(reinterpret_cast<const char*>(&v), 8);
            break;
        case DataType::u16: {
            double c = std::clamp(std::round(v), 0.0, 65535.0);
            std::uint16_t u = static_cast<std::uint16_t>(c);
            out.write(reinterpret_cast<const char*>(&u), 2);
            break;
        }
        }
    };
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t l = 0; l < L; ++l)
            for (std::size_t s = 0; s < S; ++s)
                put(cube.at(l, s, b));
    if (!out) throw std::runtime_error("write failure on " + bin.string());
}

CalibrationResult calibrate_reflectance(const HyperCube& raw, const HyperCube& dark,
                                        const HyperCube& white) {
    if (raw.kind != CubeKind::raw || dark.kind != CubeKind::dark ||
        white.kind != CubeKind::white)
        throw std::runtime_error("calibrate: cube kinds must be raw/dark/white");
    if (dark.samples != raw.samples || dark.bands != raw.bands ||
        white.samples != raw.samples || white.bands != raw.bands)
        throw std::runtime_error("calibrate: sample/band shape mismatch");
    bool dark_bcast = dark.lines == 1;
    bool white_bcast = white.lines == 1;
    if (!dark_bcast && dark.lines != raw.lines)
        throw std::runtime_error("calibrate: dark line count mismatch");
    if (!white_bcast && white.lines != raw.lines)
        throw std::runtime_error("calibrate: white line count mismatch");

    CalibrationResult result;
    HyperCube& out = result.cube;
    out.lines = raw.lines;
    out.samples = raw.samples;
    out.bands = raw.bands;
    out.axis = raw.axis;
    out.kind = CubeKind::reflectance;
    out.storage = DataType::f32;
    out.data.resize(raw.size());

    std::size_t live = 0;
    for (std::size_t l = 0; l < raw.lines; ++l) {
        std::size_t dl = dark_bcast ? 0 : l;
        std::size_t wl = white_bcast ? 0 : l;
        for (std::size_t s = 0; s < raw.samples; ++s) {
            for (std::size_t b = 0; b < raw.bands; ++b) {
                double d = dark.at(dl, s, b);
                double w = white.at(wl, s, b);
                double denom = w - d;
                double& o = out.at(l, s, b);
                if (denom <= kDeadPixelDelta) {
                    o = 0.0;
                    ++result.dead_pixels;
                } else {
                    o = std::clamp((raw.at(l, s, b) - d) / denom, 0.0, kReflectanceCeiling);
                    ++live;
                }
            }
        }
    }
    if (live == 0)
        throw std::runtime_error("calibrate: white reference is dead everywhere");
    return result;
}

} // namespace naswd::hsi
