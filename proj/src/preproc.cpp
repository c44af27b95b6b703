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

#include "naswd/preproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace naswd::preproc {

namespace {

constexpr double kSnvMinSd = 1e-12;

double srgb_linearize(double c) {
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    if (t > delta * delta * delta) return std::cbrt(t);
    return t / (3.0 * delta * delta) + 4.0 / 29.0;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

std::size_t Mask::count() const {
    return static_cast<std::size_t>(
        std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

std::string to_string(Region r) {
    switch (r) {
    case Region::cranial: return "cranial";
    case Region::medial: return "medial";
    case Region::caudal: return "caudal";
    case Region::whole: return "whole";
    }
    return "whole";
}

Region region_from_string(const std::string& s) {
    if (s == "cranial") return Region::cranial;
    if (s == "medial") return Region::medial;
    if (s == "caudal") return Region::caudal;
    if (s == "whole") return Region::whole;
    throw std::runtime_error("unknown region tag '" + s + "'");
}

std::string to_string(Severity s) {
    switch (s) {
    case Severity::NB: return "NB";
    case Severity::MWB: return "MWB";
    case Severity::SWB: return "SWB";
    }
    return "NB";
}

Severity severity_from_string(const std::string& s) {
    if (s == "NB") return Severity::NB;
    if (s == "MWB") return Severity::MWB;
    if (s == "SWB") return Severity::SWB;
    throw std::runtime_error("unknown severity label '" + s + "'");
}

std::string to_string(Normalization n) {
    switch (n) {
    case Normalization::none: return "none";
    case Normalization::snv: return "snv";
    case Normalization::zscore: return "zscore";
    }
    return "none";
}

Normalization normalization_from_string(const std::string& s) {
    if (s == "none") return Normalization::none;
    if (s == "snv") return Normalization::snv;
    if (s == "zscore") return Normalization::zscore;
    throw std::runtime_error("unknown normalization '" + s + "'");
}

void SpectraTable::validate() const {
    std::size_t b = bands();
    for (const auto& row : rows) {
        if (row.spectrum.values.size() != b)
            throw std::runtime_error("spectra table: ragged spectrum lengths");
        for (double v : row.spectrum.values)
            if (!std::isfinite(v))
                throw std::runtime_error("spectra table: non-finite spectrum value");
        if (row.force_n && !std::isfinite(*row.force_n))
            throw std::runtime_error("spectra table: non-finite force");
    }
}

Image3 pseudo_rgb(const hsi::HyperCube& cube, double r_nm, double g_nm, double b_nm) {
    if (cube.kind != hsi::CubeKind::reflectance)
        throw std::runtime_error("pseudo_rgb: cube must hold reflectance");
    std::size_t rb = hsi::band_index_for_wavelength(cube.axis, r_nm);
    std::size_t gb = hsi::band_index_for_wavelength(cube.axis, g_nm);
    std::size_t bb = hsi::band_index_for_wavelength(cube.axis, b_nm);

    Image3 img;
    img.lines = cube.lines;
    img.samples = cube.samples;
    img.data.resize(cube.lines * cube.samples * 3);
    for (std::size_t l = 0; l < cube.lines; ++l)
        for (std::size_t s = 0; s < cube.samples; ++s) {
            img.at(l, s, 0) = std::clamp(cube.at(l, s, rb), 0.0, 1.0);
            img.at(l, s, 1) = std::clamp(cube.at(l, s, gb), 0.0, 1.0);
            img.at(l, s, 2) = std::clamp(cube.at(l, s, bb), 0.0, 1.0);
        }
    return img;
}

std::array<double, 3> rgb_to_lab(double r, double g, double b) {
    double rl = srgb_linearize(r);
    double gl = srgb_linearize(g);
    double bl = srgb_linearize(b);

    // sRGB -> XYZ (D65)
    double x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
    double y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
    double z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;

    // D65 reference white
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    double fx = lab_f(x / xn);
    double fy = lab_f(y / yn);
    double fz = lab_f(z / zn);

    return {116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

Image3 rgb_image_to_lab(const Image3& rgb) {
    Image3 lab;
    lab.lines = rgb.lines;
    lab.samples = rgb.samples;
    lab.data.resize(rgb.data.size());
    for (std::size_t l = 0; l < rgb.lines; ++l)
        for (std::size_t s = 0; s < rgb.samples; ++s) {
            auto v = rgb_to_lab(rgb.at(l, s, 0), rgb.at(l, s, 1), rgb.at(l, s, 2));
            lab.at(l, s, 0) = v[0];
            lab.at(l, s, 1) = v[1];
            lab.at(l, s, 2) = v[2];
        }
    return lab;
}

namespace {

// Label 4-connected components of `keep`; returns labels (0 = none) and sizes
// indexed by label. Plain BFS with an explicit stack keeps it allocation-light.
std::vector<int> label_components(const std::vector<std::uint8_t>& keep, std::size_t lines,
                                  std::size_t samples, std::vector<std::size_t>& sizes) {
    std::vector<int> label(keep.size(), 0);
    sizes.assign(1, 0); // label 0 unused
    std::vector<std::size_t> stack;
    int next = 1;
    for (std::size_t start = 0; start < keep.size(); ++start) {
        if (!keep[start] || label[start]) continue;
        int cur = next++;
        sizes.push_back(0);
        stack.push_back(start);
        label[start] = cur;
        while (!stack.empty()) {
            std::size_t p = stack.back();
            stack.pop_back();
            ++sizes[static_cast<std::size_t>(cur)];
            std::size_t l = p / samples, s = p % samples;
            auto visit = [&](std::size_t q) {
                if (keep[q] && !label[q]) {
                    label[q] = cur;
                    stack.push_back(q);
                }
            };
            if (l > 0) visit(p - samples);
            if (l + 1 < lines) visit(p + samples);
            if (s > 0) visit(p - 1);
            if (s + 1 < samples) visit(p + 1);
        }
    }
    return label;
}

} // namespace

Mask threshold_mask(const Image3& lab, const ThresholdRules& rules) {
    if (rules.l_min > rules.l_max || rules.a_min > rules.a_max || rules.b_min > rules.b_max)
        throw std::runtime_error("threshold_mask: interval lo > hi");

    std::size_t lines = lab.lines, samples = lab.samples;
    std::vector<std::uint8_t> keep(lines * samples, 0);
    for (std::size_t l = 0; l < lines; ++l)
        for (std::size_t s = 0; s < samples; ++s) {
            double L = lab.at(l, s, 0), a = lab.at(l, s, 1), b = lab.at(l, s, 2);
            keep[l * samples + s] = (L >= rules.l_min && L <= rules.l_max && a >= rules.a_min &&
                                     a <= rules.a_max && b >= rules.b_min && b <= rules.b_max)
                                        ? 1
                                        : 0;
        }

    std::vector<std::size_t> sizes;
    std::vector<int> label = label_components(keep, lines, samples, sizes);
    if (sizes.size() <= 1) throw std::runtime_error("threshold_mask: empty mask");
    int best = 1;
    for (int c = 2; c < static_cast<int>(sizes.size()); ++c)
        if (sizes[static_cast<std::size_t>(c)] > sizes[static_cast<std::size_t>(best)]) best = c;

    Mask mask;
    mask.lines = lines;
    mask.samples = samples;
    mask.bits.assign(lines * samples, 0);
    for (std::size_t i = 0; i < label.size(); ++i)
        if (label[i] == best) mask.bits[i] = 1;

    // Hole fill: background components that never touch the frame border are
    // interior holes of the kept blob.
    std::vector<std::uint8_t> bg(lines * samples);
    for (std::size_t i = 0; i < bg.size(); ++i) bg[i] = mask.bits[i] ? 0 : 1;
    std::vector<std::size_t> bg_sizes;
    std::vector<int> bg_label = label_components(bg, lines, samples, bg_sizes);
    std::vector<std::uint8_t> touches_border(bg_sizes.size(), 0);
    for (std::size_t s = 0; s < samples; ++s) {
        if (bg_label[s]) touches_border[static_cast<std::size_t>(bg_label[s])] = 1;
        std::size_t last = (lines - 1) * samples + s;
        if (bg_label[last]) touches_border[static_cast<std::size_t>(bg_label[last])] = 1;
    }
    for (std::size_t l = 0; l < lines; ++l) {
        std::size_t first = l * samples, last = l * samples + samples - 1;
        if (bg_label[first]) touches_border[static_cast<std::size_t>(bg_label[first])] = 1;
        if (bg_label[last]) touches_border[static_cast<std::size_t>(bg_label[last])] = 1;
    }
    for (std::size_t i = 0; i < bg_label.size(); ++i)
        if (bg_label[i] && !touches_border[static_cast<std::size_t>(bg_label[i])])
            mask.bits[i] = 1;

    if (mask.count() == 0) throw std::runtime_error("threshold_mask: empty mask");
    return mask;
}

RegionPartition partition_regions(const Mask& mask, CranialEnd end) {
    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        if (mask.bits[i]) pixels.push_back(i);
    std::size_t n = pixels.size();
    if (n < 3) throw std::runtime_error("partition_regions: mask has fewer than 3 pixels");

    double mean_l = 0.0, mean_s = 0.0;
    for (std::size_t p : pixels) {
        mean_l += static_cast<double>(p / mask.samples);
        mean_s += static_cast<double>(p % mask.samples);
    }
    mean_l /= static_cast<double>(n);
    mean_s /= static_cast<double>(n);

    double cll = 0.0, css = 0.0, cls = 0.0;
    for (std::size_t p : pixels) {
        double dl = static_cast<double>(p / mask.samples) - mean_l;
        double ds = static_cast<double>(p % mask.samples) - mean_s;
        cll += dl * dl;
        css += ds * ds;
        cls += dl * ds;
    }
    cll /= static_cast<double>(n);
    css /= static_cast<double>(n);
    cls /= static_cast<double>(n);

    // Dominant eigenvector of [[cll, cls], [cls, css]]; for an isotropic blob
    // fall back to the line axis so the split is still deterministic.
    double vl, vs;
    double tr = cll + css;
    double det = cll * css - cls * cls;
    double disc = std::sqrt(std::max(tr * tr / 4.0 - det, 0.0));
    double lam = tr / 2.0 + disc;
    if (std::fabs(cls) > 1e-12) {
        vl = lam - css;
        vs = cls;
    } else if (cll >= css) {
        vl = 1.0;
        vs = 0.0;
    } else {
        vl = 0.0;
        vs = 1.0;
    }
    double norm = std::hypot(vl, vs);
    vl /= norm;
    vs /= norm;
    // sign convention: first nonzero component positive
    if (vl < 0.0 || (vl == 0.0 && vs < 0.0)) {
        vl = -vl;
        vs = -vs;
    }

    std::vector<std::pair<double, std::size_t>> proj(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t p = pixels[i];
        double dl = static_cast<double>(p / mask.samples) - mean_l;
        double ds = static_cast<double>(p % mask.samples) - mean_s;
        proj[i] = {dl * vl + ds * vs, p};
    }
    std::sort(proj.begin(), proj.end()); // ties broken by pixel index
    if (end == CranialEnd::high) std::reverse(proj.begin(), proj.end());

    auto third = [&](double k) {
        return static_cast<std::size_t>(std::floor(static_cast<double>(n) * k / 3.0 + 0.5));
    };
    std::size_t n1 = third(1.0), n2 = third(2.0);

    RegionPartition part;
    for (std::size_t i = 0; i < n; ++i) {
        if (i < n1) part.cranial.push_back(proj[i].second);
        else if (i < n2) part.medial.push_back(proj[i].second);
        else part.caudal.push_back(proj[i].second);
    }
    std::sort(part.cranial.begin(), part.cranial.end());
    std::sort(part.medial.begin(), part.medial.end());
    std::sort(part.caudal.begin(), part.caudal.end());
    return part;
}

Spectrum mean_spectrum(const hsi::HyperCube& cube, const std::vector<std::size_t>& pixels) {
    if (pixels.empty()) throw std::runtime_error("mean_spectrum: empty pixel set");
    if (cube.kind != hsi::CubeKind::reflectance)
        throw std::runtime_error("mean_spectrum: cube must hold reflectance");
    Spectrum s;
    s.values.assign(cube.bands, 0.0);
    for (std::size_t p : pixels) {
        const double* px = cube.data.data() + p * cube.bands;
        for (std::size_t b = 0; b < cube.bands; ++b) s.values[b] += px[b];
    }
    for (double& v : s.values) v /= static_cast<double>(pixels.size());
    return s;
}

ZscoreStats fit_zscore(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::runtime_error("fit_zscore: no rows");
    std::size_t bands = rows[0].size();
    ZscoreStats st;
    st.mean.assign(bands, 0.0);
    st.sd.assign(bands, 0.0);
    for (const auto& r : rows) {
        if (r.size() != bands) throw std::runtime_error("fit_zscore: ragged rows");
        for (std::size_t b = 0; b < bands; ++b) st.mean[b] += r[b];
    }
    for (double& m : st.mean) m /= static_cast<double>(rows.size());
    for (const auto& r : rows)
        for (std::size_t b = 0; b < bands; ++b) {
            double d = r[b] - st.mean[b];
            st.sd[b] += d * d;
        }
    for (double& v : st.sd) {
        v = std::sqrt(v / static_cast<double>(rows.size()));
        if (v < kSnvMinSd) v = 1.0; // constant band carries no signal either way
    }
    return st;
}

void snv_inplace(std::vector<double>& v) {
    if (v.empty()) throw std::runtime_error("snv: empty spectrum");
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / static_cast<double>(v.size()));
    if (sd <= kSnvMinSd) throw std::runtime_error("snv: zero-variance spectrum");
    for (double& x : v) x = (x - mean) / sd;
}

Spectrum normalize_spectrum(const Spectrum& s, Normalization method, const ZscoreStats* stats) {
    Spectrum out = s;
    switch (method) {
    case Normalization::none:
        out.normalization = Normalization::none;
        break;
    case Normalization::snv:
        snv_inplace(out.values);
        out.normalization = Normalization::snv;
        break;
    case Normalization::zscore: {
        if (!stats) throw std::runtime_error("zscore: missing fitted statistics");
        if (stats->mean.size() != s.values.size())
            throw std::runtime_error("zscore: statistics band count mismatch");
        for (std::size_t b = 0; b < out.values.size(); ++b)
            out.values[b] = (out.values[b] - stats->mean[b]) / stats->sd[b];
        out.normalization = Normalization::zscore;
        break;
    }
    }
    return out;
}

void write_mask_png(const Mask& mask, const std::filesystem::path& path) {
    png::Image img;
    img.width = mask.samples;
    img.height = mask.lines;
    img.pixels.assign(img.width * img.height * 3, 0);
    for (std::size_t l = 0; l < mask.lines; ++l)
        for (std::size_t s = 0; s < mask.samples; ++s)
            if (mask.at(l, s)) {
                std::uint8_t* px = img.at(l, s);
                px[0] = px[1] = px[2] = 255;
            }
    png::write_png(img, path);
}

Mask read_mask_png(const std::filesystem::path& path) {
    png::Image img = png::read_png(path);
    Mask mask;
    mask.lines = img.height;
    mask.samples = img.width;
    mask.bits.assign(img.width * img.height, 0);
    for (std::size_t l = 0; l < mask.lines; ++l)
        for (std::size_t s = 0; s < mask.samples; ++s)
            mask.bits[l * mask.samples + s] = img.at(l, s)[0] != 0 ? 1 : 0;
    return mask;
}

void write_rgb_png(const Image3& rgb, const std::filesystem::path& path) {
    png::Image img;
    img.width = rgb.samples;
    img.height = rgb.lines;
    img.pixels.resize(img.width * img.height * 3);
    for (std::size_t l = 0; l < rgb.lines; ++l)
        for (std::size_t s = 0; s < rgb.samples; ++s)
            for (std::size_t c = 0; c < 3; ++c) {
                double v = std::clamp(rgb.at(l, s, c), 0.0, 1.0);
                img.at(l, s)[c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
            }
    png::write_png(img, path);
}

void write_spectra_csv(const SpectraTable& table, const std::filesystem::path& path) {
    table.validate();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    std::size_t bands = table.bands();
    out << "sample_id,region,label,force_n";
    for (std::size_t b = 0; b < bands; ++b) out << ",b" << b;
    out << "\n";
    char buf[32];
    for (const auto& row : table.rows) {
        out << row.sample_id << ',' << to_string(row.region) << ',' << to_string(row.label)
            << ',';
        if (row.force_n) {
            std::snprintf(buf, sizeof buf, "%.17g", *row.force_n);
            out << buf;
        }
        for (double v : row.spectrum.values) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

SpectraTable read_spectra_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty spectra file " + path.string());
    auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "sample_id" || header[1] != "region" ||
        header[2] != "label" || header[3] != "force_n")
        throw std::runtime_error("bad spectra header in " + path.string());
    std::size_t bands = header.size() - 4;

    SpectraTable table;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != bands + 4)
            throw std::runtime_error("ragged spectra row in " + path.string());
        SpectraRow row;
        row.sample_id = cells[0];
        row.region = region_from_string(cells[1]);
        row.label = severity_from_string(cells[2]);
        if (!cells[3].empty()) row.force_n = std::stod(cells[3]);
        row.spectrum.values.resize(bands);
        for (std::size_t b = 0; b < bands; ++b) row.spectrum.values[b] = std::stod(cells[4 + b]);
        table.rows.push_back(std::move(row));
    }
    table.validate();
    return table;
}

} // namespace naswd::preproc
