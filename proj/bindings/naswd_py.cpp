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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "naswd/pipeline.hpp"

namespace py = pybind11;
using namespace naswd;

namespace {

preproc::ThresholdRules rules_from(double l_min, double l_max, double a_min, double a_max,
                                   double b_min, double b_max) {
    preproc::ThresholdRules r;
    r.l_min = l_min;
    r.l_max = l_max;
    r.a_min = a_min;
    r.a_max = a_max;
    r.b_min = b_min;
    r.b_max = b_max;
    return r;
}

wd::ArchSpec spec_from(const std::string& activation, std::size_t units, std::size_t layers,
                       double dropout, double learning_rate) {
    wd::ArchSpec spec;
    spec.activation = nn::activation_from_string(activation);
    spec.units_per_layer = units;
    spec.n_layers = layers;
    spec.dropout_rate = dropout;
    spec.learning_rate = learning_rate;
    return spec;
}

nn::TrainConfig caps_from(wd::Task task, std::size_t max_epochs, std::size_t patience,
                          std::size_t batch_size) {
    nn::TrainConfig cfg;
    cfg.max_epochs = max_epochs;
    cfg.patience = patience;
    cfg.batch_size = batch_size;
    cfg.loss = task == wd::Task::classify3 ? nn::LossKind::sparse_cce : nn::LossKind::mse;
    return cfg;
}

py::dict spec_to_dict(const wd::ArchSpec& spec) {
    py::dict d;
    d["activation"] = nn::to_string(spec.activation);
    d["units"] = spec.units_per_layer;
    d["layers"] = spec.n_layers;
    d["dropout"] = spec.dropout_rate;
    d["learning_rate"] = spec.learning_rate;
    return d;
}

} // namespace

PYBIND11_MODULE(_naswd, m) {
    m.doc() = "hyperspectral fillet pipeline: calibration, masking, wide-deep training, "
              "architecture search, evaluation, pixel maps, synthetic data";

    m.def(
        "synth",
        [](const std::filesystem::path& out_dir, std::uint64_t seed,
           std::array<std::size_t, 3> n_per_class, std::size_t bands, std::size_t lines,
           std::size_t samples, double coupling, double noise_sd, double gain_sd,
           double illumination_jitter) {
            synth::SyntheticSpec spec;
            spec.seed = seed;
            spec.n_per_class = n_per_class;
            spec.bands = bands;
            spec.lines = lines;
            spec.samples = samples;
            spec.coupling = coupling;
            spec.noise_sd = noise_sd;
            spec.gain_sd = gain_sd;
            spec.illumination_jitter = illumination_jitter;
            synth::SynthResult r = synth::synth_dataset(spec, out_dir);
            py::dict d;
            d["cubes"] = r.cube_headers.size();
            d["labels_csv"] = r.labels_csv;
            return d;
        },
        py::arg("out_dir"), py::arg("seed") = 0,
        py::arg("n_per_class") = std::array<std::size_t, 3>{78, 82, 90},
        py::arg("bands") = 224, py::arg("lines") = 32, py::arg("samples") = 32,
        py::arg("coupling") = 0.01, py::arg("noise_sd") = 0.015, py::arg("gain_sd") = 0.10,
        py::arg("illumination_jitter") = 0.05,
        "Write a seeded synthetic dataset (dark/white frames, raw cubes, labels CSV).");

    m.def(
        "calibrate",
        [](const std::filesystem::path& raw, const std::filesystem::path& dark,
           const std::filesystem::path& white, const std::filesystem::path& out) {
            return pipeline::calibrate_file(raw, dark, white, out).dead_pixels;
        },
        py::arg("raw"), py::arg("dark"), py::arg("white"), py::arg("out"),
        "Raw counts to reflectance; returns the dead-pixel count.");

    m.def(
        "mask",
        [](const std::filesystem::path& cube, const std::filesystem::path& out_png,
           double l_min, double l_max, double a_min, double a_max, double b_min,
           double b_max) {
            auto s = pipeline::mask_file(
                cube, rules_from(l_min, l_max, a_min, a_max, b_min, b_max), out_png);
            py::dict d;
            d["kept"] = s.kept_pixels;
            d["total"] = s.total_pixels;
            return d;
        },
        py::arg("cube"), py::arg("out_png"), py::arg("l_min") = 35.0,
        py::arg("l_max") = 100.0, py::arg("a_min") = -10.0, py::arg("a_max") = 45.0,
        py::arg("b_min") = -5.0, py::arg("b_max") = 50.0,
        "L*a*b* threshold mask PNG from a reflectance cube.");

    m.def(
        "extract",
        [](const std::filesystem::path& data_dir, const std::filesystem::path& out_csv,
           double l_min, double l_max, double a_min, double a_max, double b_min,
           double b_max, const std::string& cranial_end) {
            pipeline::ExtractConfig cfg;
            cfg.rules = rules_from(l_min, l_max, a_min, a_max, b_min, b_max);
            if (cranial_end == "low")
                cfg.cranial_end = preproc::CranialEnd::low;
            else if (cranial_end == "high")
                cfg.cranial_end = preproc::CranialEnd::high;
            else
                throw std::runtime_error("cranial_end must be low or high");
            preproc::SpectraTable table = pipeline::extract_dataset(data_dir, cfg);
            preproc::write_spectra_csv(table, out_csv);
            return table.rows.size();
        },
        py::arg("data_dir"), py::arg("out_csv"), py::arg("l_min") = 35.0,
        py::arg("l_max") = 100.0, py::arg("a_min") = -10.0, py::arg("a_max") = 45.0,
        py::arg("b_min") = -5.0, py::arg("b_max") = 50.0, py::arg("cranial_end") = "low",
        "Region mean spectra for every labeled cube; returns the row count.");

    m.def(
        "train",
        [](const std::filesystem::path& spectra_csv, const std::filesystem::path& out_ckpt,
           const std::string& task, const std::string& model, const std::string& activation,
           std::size_t units, std::size_t layers, double dropout, double learning_rate,
           const std::string& normalization, std::size_t plsr_components,
           double val_fraction, double ceiling, std::uint64_t seed, std::size_t max_epochs,
           std::size_t patience, std::size_t batch_size) {
            preproc::SpectraTable table = preproc::read_spectra_csv(spectra_csv);
            pipeline::TrainOptions options;
            options.family = eval::family_from_string(model);
            options.task = wd::task_from_string(task);
            options.spec = spec_from(activation, units, layers, dropout, learning_rate);
            options.plsr_components = plsr_components;
            options.normalization = preproc::normalization_from_string(normalization);
            options.val_fraction = val_fraction;
            options.seed = seed;
            options.train = caps_from(options.task, max_epochs, patience, batch_size);
            preproc::SpectraTable rows = pipeline::task_table(table, options.task, ceiling);
            pipeline::TrainSummary s = pipeline::train_full(rows, options, out_ckpt);
            py::dict d;
            d["val_metric"] = s.val_metric;
            d["best_epoch"] = s.best_epoch;
            return d;
        },
        py::arg("spectra_csv"), py::arg("out_ckpt"), py::arg("task") = "classify",
        py::arg("model") = "naswd", py::arg("activation") = "relu", py::arg("units") = 64,
        py::arg("layers") = 2, py::arg("dropout") = 0.0, py::arg("learning_rate") = 1e-3,
        py::arg("normalization") = "snv", py::arg("plsr_components") = 10,
        py::arg("val_fraction") = 0.15, py::arg("ceiling") = 10.8, py::arg("seed") = 0,
        py::arg("max_epochs") = 300, py::arg("patience") = 30, py::arg("batch_size") = 32,
        "Fit one model on the task rows and write a checkpoint.");

    m.def(
        "tune",
        [](const std::filesystem::path& spectra_csv, const std::filesystem::path& out_log,
           const std::string& task, std::size_t budget, std::size_t n_init, std::size_t k,
           const std::string& normalization, double ceiling, std::uint64_t seed,
           std::size_t max_epochs, std::size_t patience, std::size_t batch_size) {
            preproc::SpectraTable table = preproc::read_spectra_csv(spectra_csv);
            eval::CvConfig cvc;
            cvc.task = wd::task_from_string(task);
            cvc.k = k;
            cvc.seed = seed;
            cvc.normalization = preproc::normalization_from_string(normalization);
            cvc.train = caps_from(cvc.task, max_epochs, patience, batch_size);
            preproc::SpectraTable rows = pipeline::task_table(table, cvc.task, ceiling);
            bo::SearchConfig sc;
            sc.budget = budget;
            sc.n_init = n_init;
            sc.seed = seed;
            bo::SearchResult result = pipeline::tune(rows, cvc, sc);
            bo::write_trial_log(result.log, out_log);
            py::dict d = spec_to_dict(result.best.spec);
            d["objective"] = result.best.objective;
            d["trials"] = result.log.size();
            return d;
        },
        py::arg("spectra_csv"), py::arg("out_log"), py::arg("task") = "classify",
        py::arg("budget") = 40, py::arg("n_init") = 8, py::arg("k") = 5,
        py::arg("normalization") = "snv", py::arg("ceiling") = 10.8, py::arg("seed") = 0,
        py::arg("max_epochs") = 150, py::arg("patience") = 20, py::arg("batch_size") = 32,
        "Architecture search; writes the trial log and returns the best spec.");

    m.def(
        "evaluate",
        [](const std::filesystem::path& spectra_csv, const std::filesystem::path& out_json,
           const std::string& task, const std::string& model, const std::string& activation,
           std::size_t units, std::size_t layers, double dropout, double learning_rate,
           const std::string& normalization, std::size_t plsr_components, std::size_t k,
           double ceiling, std::uint64_t seed, std::size_t max_epochs, std::size_t patience,
           std::size_t batch_size) {
            preproc::SpectraTable table = preproc::read_spectra_csv(spectra_csv);
            eval::CvConfig cvc;
            cvc.family = eval::family_from_string(model);
            cvc.task = wd::task_from_string(task);
            cvc.spec = spec_from(activation, units, layers, dropout, learning_rate);
            cvc.plsr_components = plsr_components;
            cvc.k = k;
            cvc.seed = seed;
            cvc.normalization = preproc::normalization_from_string(normalization);
            cvc.train = caps_from(cvc.task, max_epochs, patience, batch_size);
            preproc::SpectraTable rows = pipeline::task_table(table, cvc.task, ceiling);
            eval::EvalReport report = eval::run_cv(cvc, rows);
            eval::write_report(report, out_json);
            py::dict d;
            d["objective"] = report.objective;
            if (cvc.task == wd::Task::classify3) {
                d["accuracy"] = report.classif.accuracy;
                d["f1"] = report.classif.f1;
                d["ci"] = py::make_tuple(report.classif.ci_low, report.classif.ci_high);
            } else {
                d["r"] = report.regr.r;
                d["r2"] = report.regr.r2;
                d["rmse"] = report.regr.rmse;
            }
            return d;
        },
        py::arg("spectra_csv"), py::arg("out_json"), py::arg("task") = "classify",
        py::arg("model") = "naswd", py::arg("activation") = "relu", py::arg("units") = 64,
        py::arg("layers") = 2, py::arg("dropout") = 0.0, py::arg("learning_rate") = 1e-3,
        py::arg("normalization") = "snv", py::arg("plsr_components") = 10, py::arg("k") = 5,
        py::arg("ceiling") = 10.8, py::arg("seed") = 0, py::arg("max_epochs") = 300,
        py::arg("patience") = 30, py::arg("batch_size") = 32,
        "k-fold cross-validated metrics report (JSON); returns the headline numbers.");

    m.def(
        "map_cube",
        [](const std::filesystem::path& checkpoint, const std::filesystem::path& cube,
           const std::filesystem::path& out_png, const std::filesystem::path& out_csv,
           double l_min, double l_max, double a_min, double a_max, double b_min,
           double b_max) {
            wd::WideDeepModel model = wd::load_checkpoint(checkpoint);
            pipeline::MapSummary s = pipeline::map_file(
                model, cube, rules_from(l_min, l_max, a_min, a_max, b_min, b_max), out_png,
                out_csv);
            py::dict d;
            if (model.task == wd::Task::classify3)
                d["percent"] = s.class_pct;
            else
                d["percent"] = s.hardness_pct;
            return d;
        },
        py::arg("checkpoint"), py::arg("cube"), py::arg("out_png"), py::arg("out_csv"),
        py::arg("l_min") = 35.0, py::arg("l_max") = 100.0, py::arg("a_min") = -10.0,
        py::arg("a_max") = 45.0, py::arg("b_min") = -5.0, py::arg("b_max") = 50.0,
        "Per-pixel class or hardness map from a trained checkpoint.");

    // small pure helpers, handy for smoke tests
    m.def(
        "rgb_to_lab",
        [](double r, double g, double b) {
            auto lab = preproc::rgb_to_lab(r, g, b);
            return py::make_tuple(lab[0], lab[1], lab[2]);
        },
        py::arg("r"), py::arg("g"), py::arg("b"), "CIE L*a*b* (D65) from sRGB in [0,1].");
    m.def("bin_hardness", &maps::bin_hardness, py::arg("force_n"),
          "Hardness bin index: [0,3.5] -> 0, (3.5,7.1] -> 1, (7.1,10.8] -> 2, else 3.");
    m.def(
        "cube_shape",
        [](const std::filesystem::path& header) {
            hsi::HyperCube cube = hsi::read_cube(header);
            return py::make_tuple(cube.lines, cube.samples, cube.bands);
        },
        py::arg("header"), "(lines, samples, bands) of a stored cube.");

    m.attr("__version__") = "0.1.0";
}
