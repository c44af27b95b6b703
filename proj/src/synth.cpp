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

#include "naswd/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace naswd::synth {

void SyntheticSpec::validate() const {
    if (total() == 0) throw std::runtime_error("synth: zero samples");
    if (bands < 8) throw std::runtime_error("synth: too few bands");
    if (lines < 8 || samples < 8) throw std::runtime_error("synth: image too small");
    if (coupling < 0.0) throw std::runtime_error("synth: negative coupling");
    if (coupling_lo_nm >= coupling_hi_nm)
        throw std::runtime_error("synth: empty coupling window");
    if (noise_sd < 0.0 || gain_sd < 0.0 || illumination_jitter < 0.0)
        throw std::runtime_error("synth: negative noise level");
}

double draw_hardness(preproc::Severity cls, preproc::Region region, Rng& rng) {
    const ClassHardness& row = kHardnessTable[static_cast<std::size_t>(cls)];
    const HardnessStats* st = nullptr;
    switch (region) {
    case preproc::Region::whole: st = &row.whole; break;
    case preproc::Region::cranial: st = &row.cranial; break;
    case preproc::Region::medial: st = &row.medial; break;
    case preproc::Region::caudal: st = &row.caudal; break;
    }
    // truncation at 0 by rejection; all table means sit > 2 sd above 0
    for (;;) {
        double v = st->mean + st->sd * rng.normal();
        if (v >= 0.0) return v;
    }
}

namespace {

struct Bump {
    double center_nm;
    double width_nm;
    double amplitude;
};

struct Archetype {
    double base;
    std::array<Bump, 5> bumps;
};

// pinkish-white fillet tones; classes differ in bump balance and NIR position
constexpr std::array<Archetype, 3> kArchetypes = {{
    {0.30,
     {{{460, 45, 0.16}, {560, 55, 0.24}, {650, 50, 0.22}, {780, 90, 0.12}, {930, 70, 0.06}}}},
    {0.32,
     {{{460, 45, 0.18}, {560, 55, 0.20}, {650, 50, 0.24}, {800, 90, 0.10}, {950, 70, 0.09}}}},
    {0.34,
     {{{460, 45, 0.21}, {560, 55, 0.16}, {650, 50, 0.26}, {820, 90, 0.08}, {970, 70, 0.12}}}},
}};

constexpr double kBackgroundReflectance = 0.03;
constexpr double kReflectFloor = 0.01;
constexpr double kReflectCeil = 1.04;

// smooth per-sample multiplicative gain texture: log-gain bumps at fixed
// centers with seeded amplitudes. The visible bump is broad so the pseudo-RGB
// bands move together and the L*a*b* mask stays valid; the NIR bumps add
// shape nuisance. Widths are too broad to fake the narrow archetype features,
// and the multiplicative form is what makes recovering the hardness shift a
// nonlinear problem.
constexpr std::array<double, 3> kGainCenters = {600, 800, 980};
constexpr std::array<double, 3> kGainWidths = {110, 130, 130};

double gauss(double x, double c, double w) {
    double z = (x - c) / w;
    return std::exp(-0.5 * z * z);
}

// raised-cosine coupling window over [lo, hi]
double window_weight(double nm, double lo, double hi) {
    if (nm <= lo || nm >= hi) return 0.0;
    double t = (nm - lo) / (hi - lo);
    return 0.5 * (1.0 - std::cos(2.0 * M_PI * t));
}

} // namespace

double archetype_reflectance(preproc::Severity cls, double wavelength_nm) {
    const Archetype& a = kArchetypes[static_cast<std::size_t>(cls)];
    double v = a.base;
    for (const Bump& b : a.bumps) v += b.amplitude * gauss(wavelength_nm, b.center_nm, b.width_nm);
    return v;
}

SampleCube make_sample(const SyntheticSpec& spec, preproc::Severity cls,
                       const std::string& id, Rng& sample_rng) {
    spec.validate();
    SampleCube out;
    out.truth.id = id;
    out.truth.label = cls;

    // elliptical blob, major axis along samples, kept clear of the border
    double cl = static_cast<double>(spec.lines) / 2.0 +
                0.05 * static_cast<double>(spec.lines) * (sample_rng.uniform() - 0.5);
    double cs = static_cast<double>(spec.samples) / 2.0 +
                0.05 * static_cast<double>(spec.samples) * (sample_rng.uniform() - 0.5);
    double axis_s =
        static_cast<double>(spec.samples) * (0.36 + 0.03 * sample_rng.uniform());
    double axis_l = static_cast<double>(spec.lines) * (0.24 + 0.03 * sample_rng.uniform());

    double illum = 1.0 + spec.illumination_jitter * sample_rng.normal();
    illum = std::clamp(illum, 0.75, 1.25);

    std::array<double, kGainCenters.size()> gain_amp;
    for (double& a : gain_amp) a = spec.gain_sd * sample_rng.normal();

    out.truth.whole_n = draw_hardness(cls, preproc::Region::whole, sample_rng);
    out.truth.cranial_n = draw_hardness(cls, preproc::Region::cranial, sample_rng);
    out.truth.medial_n = draw_hardness(cls, preproc::Region::medial, sample_rng);
    out.truth.caudal_n = draw_hardness(cls, preproc::Region::caudal, sample_rng);

    out.blob.lines = spec.lines;
    out.blob.samples = spec.samples;
    out.blob.bits.assign(spec.lines * spec.samples, 0);
    for (std::size_t l = 0; l < spec.lines; ++l)
        for (std::size_t s = 0; s < spec.samples; ++s) {
            double dl = (static_cast<double>(l) - cl) / axis_l;
            double ds = (static_cast<double>(s) - cs) / axis_s;
            if (dl * dl + ds * ds <= 1.0) out.blob.set(l, s, true);
        }

    // region membership drives the per-pixel hardness shift
    preproc::RegionPartition part = preproc::partition_regions(out.blob);
    std::vector<double> pixel_force(spec.lines * spec.samples, 0.0);
    for (std::size_t p : part.cranial) pixel_force[p] = out.truth.cranial_n;
    for (std::size_t p : part.medial) pixel_force[p] = out.truth.medial_n;
    for (std::size_t p : part.caudal) pixel_force[p] = out.truth.caudal_n;

    hsi::HyperCube& cube = out.reflectance;
    cube.lines = spec.lines;
    cube.samples = spec.samples;
    cube.bands = spec.bands;
    cube.axis = hsi::default_axis(spec.bands);
    cube.kind = hsi::CubeKind::reflectance;
    cube.storage = hsi::DataType::f32;
    cube.data.resize(cube.size());

    std::vector<double> base(spec.bands), window(spec.bands), gain(spec.bands);
    for (std::size_t b = 0; b < spec.bands; ++b) {
        double nm = cube.axis.wavelengths_nm[b];
        base[b] = archetype_reflectance(cls, nm);
        window[b] = window_weight(nm, spec.coupling_lo_nm, spec.coupling_hi_nm);
        double log_gain = 0.0;
        for (std::size_t m = 0; m < kGainCenters.size(); ++m)
            log_gain += gain_amp[m] * gauss(nm, kGainCenters[m], kGainWidths[m]);
        gain[b] = std::exp(log_gain);
    }

    for (std::size_t l = 0; l < spec.lines; ++l)
        for (std::size_t s = 0; s < spec.samples; ++s) {
            std::size_t p = l * spec.samples + s;
            bool in_blob = out.blob.bits[p] != 0;
            double force = pixel_force[p];
            for (std::size_t b = 0; b < spec.bands; ++b) {
                double r;
                if (in_blob) {
                    r = (base[b] + spec.coupling * force * window[b]) * gain[b] * illum;
                } else {
                    r = kBackgroundReflectance * illum;
                }
                r += spec.noise_sd * sample_rng.normal();
                cube.data[p * spec.bands + b] = std::clamp(r, kReflectFloor, kReflectCeil);
            }
        }
    return out;
}

namespace {

constexpr double kDarkLevel = 100.0;

double white_level(double nm) {
    double z = (nm - 690.0) / 250.0;
    return 1400.0 + 2400.0 * std::exp(-z * z);
}

} // namespace

SynthResult synth_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    std::filesystem::create_directories(out_dir);

    SynthResult result;
    result.dir = out_dir;
    hsi::BandAxis axis = hsi::default_axis(spec.bands);

    hsi::HyperCube dark;
    dark.lines = 1;
    dark.samples = spec.samples;
    dark.bands = spec.bands;
    dark.axis = axis;
    dark.kind = hsi::CubeKind::dark;
    dark.storage = hsi::DataType::u16;
    dark.data.assign(dark.size(), kDarkLevel);

    hsi::HyperCube white = dark;
    white.kind = hsi::CubeKind::white;
    for (std::size_t s = 0; s < spec.samples; ++s)
        for (std::size_t b = 0; b < spec.bands; ++b)
            white.data[s * spec.bands + b] = std::round(white_level(axis.wavelengths_nm[b]));

    result.dark_header = out_dir / "dark.hdr";
    result.white_header = out_dir / "white.hdr";
    hsi::write_cube(dark, result.dark_header);
    hsi::write_cube(white, result.white_header);

    Rng root(spec.seed);
    std::size_t index = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        preproc::Severity cls = static_cast<preproc::Severity>(static_cast<int>(c));
        for (std::size_t i = 0; i < spec.n_per_class[c]; ++i, ++index) {
            char idbuf[32];
            std::snprintf(idbuf, sizeof idbuf, "sample_%03zu", index);
            std::string id(idbuf);
            Rng sample_rng = root.fork(id);
            SampleCube sample = make_sample(spec, cls, id, sample_rng);

            // sensor counts: dark + R * (white - dark), rounded to u16
            hsi::HyperCube raw;
            raw.lines = spec.lines;
            raw.samples = spec.samples;
            raw.bands = spec.bands;
            raw.axis = axis;
            raw.kind = hsi::CubeKind::raw;
            raw.storage = hsi::DataType::u16;
            raw.data.resize(raw.size());
            for (std::size_t l = 0; l < spec.lines; ++l)
                for (std::size_t s = 0; s < spec.samples; ++s)
                    for (std::size_t b = 0; b < spec.bands; ++b) {
                        double d = dark.data[s * spec.bands + b];
                        double w = white.data[s * spec.bands + b];
                        double r = sample.reflectance.at(l, s, b);
                        raw.at(l, s, b) = std::round(d + r * (w - d));
                    }
            std::filesystem::path hdr = out_dir / (id + ".hdr");
            hsi::write_cube(raw, hdr);
            result.cube_headers.push_back(hdr);
            result.truths.push_back(sample.truth);
        }
    }

    result.labels_csv = out_dir / "labels.csv";
    write_labels_csv(result.truths, result.labels_csv);

    nlohmann::json echo = {
        {"n_per_class", spec.n_per_class},
        {"bands", spec.bands},
        {"lines", spec.lines},
        {"samples", spec.samples},
        {"coupling_per_newton", spec.coupling},
        {"coupling_window_nm", {spec.coupling_lo_nm, spec.coupling_hi_nm}},
        {"noise_sd", spec.noise_sd},
        {"gain_sd", spec.gain_sd},
        {"illumination_jitter", spec.illumination_jitter},
        {"seed", spec.seed},
    };
    std::ofstream echo_out(out_dir / "synth_spec.json");
    echo_out << echo.dump(2) << "\n";
    if (!echo_out) throw std::runtime_error("synth: cannot write spec echo");
    return result;
}

void write_labels_csv(const std::vector<SampleTruth>& truths,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "sample_id,label,whole_n,cranial_n,medial_n,caudal_n\n";
    char buf[32];
    for (const auto& t : truths) {
        out << t.id << ',' << preproc::to_string(t.label);
        for (double v : {t.whole_n, t.cranial_n, t.medial_n, t.caudal_n}) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

std::vector<SampleTruth> read_labels_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "sample_id,label,whole_n,cranial_n,medial_n,caudal_n")
        throw std::runtime_error("bad labels header in " + path.string());
    std::vector<SampleTruth> truths;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        SampleTruth t;
        std::getline(ss, t.id, ',');
        std::getline(ss, cell, ',');
        t.label = preproc::severity_from_string(cell);
        double* fields[4] = {&t.whole_n, &t.cranial_n, &t.medial_n, &t.caudal_n};
        for (double* f : fields) {
            if (!std::getline(ss, cell, ','))
                throw std::runtime_error("short labels row in " + path.string());
            *f = std::stod(cell);
        }
        truths.push_back(std::move(t));
    }
    return truths;
}

} // namespace naswd::synth
