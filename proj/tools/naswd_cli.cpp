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

#include <CLI11.hpp>
#include <Eigen/Core>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "naswd/pipeline.hpp"

namespace fs = std::filesystem;
using namespace naswd;

namespace {

void add_threshold_options(CLI::App* cmd, preproc::ThresholdRules& rules) {
    cmd->add_option("--l-min", rules.l_min, "L* lower bound")->capture_default_str();
    cmd->add_option("--l-max", rules.l_max, "L* upper bound")->capture_default_str();
    cmd->add_option("--a-min", rules.a_min, "a* lower bound")->capture_default_str();
    cmd->add_option("--a-max", rules.a_max, "a* upper bound")->capture_default_str();
    cmd->add_option("--b-min", rules.b_min, "b* lower bound")->capture_default_str();
    cmd->add_option("--b-max", rules.b_max, "b* upper bound")->capture_default_str();
}

struct ArchFlags {
    std::string activation = "relu";
    std::size_t units = 64;
    std::size_t layers = 2;
    double dropout = 0.0;
    double learning_rate = 1e-3;
    std::string spec_json; // tuned-spec file; explicit flags override its fields
};

void add_arch_options(CLI::App* cmd, ArchFlags& a) {
    cmd->add_option("--activation", a.activation, "relu|sigmoid")->capture_default_str();
    cmd->add_option("--units", a.units, "units per hidden layer")->capture_default_str();
    cmd->add_option("--layers", a.layers, "hidden layer count")->capture_default_str();
    cmd->add_option("--dropout", a.dropout, "dropout rate")->capture_default_str();
    cmd->add_option("--lr", a.learning_rate, "learning rate")->capture_default_str();
    cmd->add_option("--spec-json", a.spec_json, "architecture spec written by tune");
}

wd::ArchSpec arch_from_flags(const CLI::App* cmd, const ArchFlags& a) {
    wd::ArchSpec spec;
    if (!a.spec_json.empty()) {
        std::ifstream in(a.spec_json);
        if (!in) throw std::runtime_error("cannot open " + a.spec_json);
        nlohmann::json j;
        in >> j;
        spec.activation = nn::activation_from_string(j.at("activation").get<std::string>());
        spec.units_per_layer = j.at("units").get<std::size_t>();
        spec.n_layers = j.at("layers").get<std::size_t>();
        spec.dropout_rate = j.at("dropout").get<double>();
        spec.learning_rate = j.at("learning_rate").get<double>();
    }
    auto passed = [&](const char* name) { return cmd->count(name) > 0; };
    if (a.spec_json.empty() || passed("--activation"))
        spec.activation = nn::activation_from_string(a.activation);
    if (a.spec_json.empty() || passed("--units")) spec.units_per_layer = a.units;
    if (a.spec_json.empty() || passed("--layers")) spec.n_layers = a.layers;
    if (a.spec_json.empty() || passed("--dropout")) spec.dropout_rate = a.dropout;
    if (a.spec_json.empty() || passed("--lr")) spec.learning_rate = a.learning_rate;
    return spec;
}

struct TrainCaps {
    std::size_t max_epochs = 300;
    std::size_t patience = 30;
    std::size_t batch_size = 32;
};

void add_train_caps(CLI::App* cmd, TrainCaps& caps) {
    cmd->add_option("--max-epochs", caps.max_epochs)->capture_default_str();
    cmd->add_option("--patience", caps.patience)->capture_default_str();
    cmd->add_option("--batch-size", caps.batch_size, "0 = full batch")->capture_default_str();
}

nn::TrainConfig train_config_from(const TrainCaps& caps, wd::Task task) {
    nn::TrainConfig cfg;
    cfg.max_epochs = caps.max_epochs;
    cfg.patience = caps.patience;
    cfg.batch_size = caps.batch_size;
    cfg.loss = task == wd::Task::classify3 ? nn::LossKind::sparse_cce : nn::LossKind::mse;
    return cfg;
}

fs::path manifest_dir(const fs::path& out_file) {
    fs::path parent = out_file.parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

} // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("NASWD_THREADS"); threads != nullptr) {
        int n = std::atoi(threads);
        if (n > 0) Eigen::setNbThreads(n);
    }

    CLI::App app{"hyperspectral fillet pipeline: calibration, masking, spectra "
                 "extraction, wide-deep training, architecture search, evaluation, "
                 "pixel maps, and synthetic data"};
    app.require_subcommand(1);
    app.set_config("--config", "", "configuration file (INI); explicit flags win");

    // ---------------------------------------------------------- calibrate ---
    auto* cal = app.add_subcommand("calibrate", "raw counts to reflectance");
    std::string cal_raw, cal_dark, cal_white, cal_out;
    cal->add_option("--raw", cal_raw, "raw cube header")->required();
    cal->add_option("--dark", cal_dark, "dark frame header")->required();
    cal->add_option("--white", cal_white, "white frame header")->required();
    cal->add_option("--out", cal_out, "output reflectance header")->required();
    cal->callback([&] {
        auto s = pipeline::calibrate_file(cal_raw, cal_dark, cal_white, cal_out);
        pipeline::record_manifest(manifest_dir(cal_out), "calibrate", {cal_out});
        std::cout << "calibrate: wrote " << cal_out << " (" << s.dead_pixels
                  << " dead pixels)\n";
    });

    // --------------------------------------------------------------- mask ---
    auto* msk = app.add_subcommand("mask", "L*a*b* threshold mask from a reflectance cube");
    std::string msk_cube, msk_out;
    bool msk_rgb = false;
    preproc::ThresholdRules msk_rules;
    msk->add_option("--cube", msk_cube, "reflectance cube header")->required();
    msk->add_option("--out", msk_out, "output directory")->required();
    msk->add_flag("--rgb", msk_rgb, "also write the pseudo-RGB preview");
    add_threshold_options(msk, msk_rules);
    msk->callback([&] {
        fs::create_directories(msk_out);
        fs::path png = fs::path(msk_out) / "mask.png";
        fs::path rgb = fs::path(msk_out) / "rgb.png";
        auto s = pipeline::mask_file(msk_cube, msk_rules, png, msk_rgb ? &rgb : nullptr);
        std::vector<fs::path> artifacts{png};
        if (msk_rgb) artifacts.push_back(rgb);
        pipeline::record_manifest(msk_out, "mask", artifacts);
        std::cout << "mask: kept " << s.kept_pixels << "/" << s.total_pixels
                  << " pixels -> " << png.string() << "\n";
    });

    // ------------------------------------------------------------ extract ---
    auto* ext = app.add_subcommand("extract", "region mean spectra from a labeled dataset");
    std::string ext_data, ext_out, ext_end = "low";
    bool ext_regions = true;
    preproc::ThresholdRules ext_rules;
    ext->add_option("--data", ext_data, "dataset directory (labels.csv, dark/white, cubes)")
        ->required();
    ext->add_option("--out", ext_out, "output directory")->required();
    ext->add_option("--cranial-end", ext_end, "low|high: axis extreme holding the cranial part")
        ->capture_default_str();
    ext->add_flag("--regions,!--no-regions", ext_regions,
                  "emit cranial/medial/caudal rows besides whole-fillet rows");
    add_threshold_options(ext, ext_rules);
    ext->callback([&] {
        pipeline::ExtractConfig cfg;
        cfg.rules = ext_rules;
        if (ext_end == "low")
            cfg.cranial_end = preproc::CranialEnd::low;
        else if (ext_end == "high")
            cfg.cranial_end = preproc::CranialEnd::high;
        else
            throw std::runtime_error("--cranial-end must be low or high");
        preproc::SpectraTable table = pipeline::extract_dataset(ext_data, cfg);
        if (!ext_regions) table = pipeline::select_region(table, preproc::Region::whole);
        fs::create_directories(ext_out);
        fs::path csv = fs::path(ext_out) / "spectra.csv";
        preproc::write_spectra_csv(table, csv);
        pipeline::record_manifest(ext_out, "extract", {csv});
        std::cout << "extract: " << table.rows.size() << " rows -> " << csv.string() << "\n";
    });

    // -------------------------------------------------------------- train ---
    auto* trn = app.add_subcommand("train", "fit one model and write a checkpoint");
    std::string trn_spectra, trn_out, trn_task = "classify", trn_model = "naswd",
                trn_norm = "snv";
    ArchFlags trn_arch;
    TrainCaps trn_caps;
    std::size_t trn_plsr = baselines::kDefaultPlsComponents;
    double trn_val = 0.15, trn_ceiling = pipeline::kDefaultOutlierCeiling;
    std::uint64_t trn_seed = 0;
    trn->add_option("--spectra", trn_spectra, "spectra CSV from extract")->required();
    trn->add_option("--out", trn_out, "output directory")->required();
    trn->add_option("--task", trn_task, "classify|regress")->capture_default_str();
    trn->add_option("--model", trn_model, "naswd|mlp|plsr")->capture_default_str();
    trn->add_option("--normalization", trn_norm, "snv|zscore|none")->capture_default_str();
    trn->add_option("--plsr-components", trn_plsr)->capture_default_str();
    trn->add_option("--val-fraction", trn_val)->capture_default_str();
    trn->add_option("--ceiling", trn_ceiling, "regression force ceiling (N)")
        ->capture_default_str();
    trn->add_option("--seed", trn_seed)->capture_default_str();
    add_arch_options(trn, trn_arch);
    add_train_caps(trn, trn_caps);
    trn->callback([&] {
        preproc::SpectraTable table = preproc::read_spectra_csv(trn_spectra);
        pipeline::TrainOptions options;
        options.family = eval::family_from_string(trn_model);
        options.task = wd::task_from_string(trn_task);
        options.spec = arch_from_flags(trn, trn_arch);
        options.plsr_components = trn_plsr;
        options.normalization = preproc::normalization_from_string(trn_norm);
        options.val_fraction = trn_val;
        options.seed = trn_seed;
        options.train = train_config_from(trn_caps, options.task);
        preproc::SpectraTable rows = pipeline::task_table(table, options.task, trn_ceiling);
        fs::create_directories(trn_out);
        fs::path ckpt = fs::path(trn_out) / "model.ckpt";
        pipeline::TrainSummary s = pipeline::train_full(rows, options, ckpt);
        pipeline::record_manifest(trn_out, "train", {ckpt}, trn_seed);
        const char* metric = options.task == wd::Task::classify3 ? "holdout accuracy"
                                                                 : "holdout MSE (N^2)";
        std::cout << "train: " << metric << " " << s.val_metric << " -> " << ckpt.string()
                  << "\n";
    });

    // --------------------------------------------------------------- tune ---
    auto* tun = app.add_subcommand("tune", "architecture search over the wide-deep space");
    std::string tun_spectra, tun_out, tun_task = "classify", tun_norm = "snv";
    TrainCaps tun_caps{150, 20, 32};
    std::size_t tun_budget = 40, tun_init = 8, tun_k = 5;
    double tun_ceiling = pipeline::kDefaultOutlierCeiling;
    std::uint64_t tun_seed = 0;
    bool tun_timings = false;
    tun->add_option("--spectra", tun_spectra, "spectra CSV from extract")->required();
    tun->add_option("--out", tun_out, "output directory")->required();
    tun->add_option("--task", tun_task, "classify|regress")->capture_default_str();
    tun->add_option("--budget", tun_budget, "total trials")->capture_default_str();
    tun->add_option("--n-init", tun_init, "quasi-random warmup trials")->capture_default_str();
    tun->add_option("--k", tun_k, "CV folds per trial")->capture_default_str();
    tun->add_option("--normalization", tun_norm, "snv|zscore|none")->capture_default_str();
    tun->add_option("--ceiling", tun_ceiling)->capture_default_str();
    tun->add_option("--seed", tun_seed)->capture_default_str();
    tun->add_flag("--timings", tun_timings, "record wall time per trial (breaks "
                                            "byte-reproducibility of the log)");
    add_train_caps(tun, tun_caps);
    tun->callback([&] {
        preproc::SpectraTable table = preproc::read_spectra_csv(tun_spectra);
        eval::CvConfig cvc;
        cvc.family = eval::ModelFamily::naswd;
        cvc.task = wd::task_from_string(tun_task);
        cvc.k = tun_k;
        cvc.seed = tun_seed;
        cvc.normalization = preproc::normalization_from_string(tun_norm);
        cvc.train = train_config_from(tun_caps, cvc.task);
        preproc::SpectraTable rows = pipeline::task_table(table, cvc.task, tun_ceiling);
        bo::SearchConfig sc;
        sc.budget = tun_budget;
        sc.n_init = tun_init;
        sc.seed = tun_seed;
        sc.record_timings = tun_timings;
        bo::SearchResult result = pipeline::tune(rows, cvc, sc);
        fs::create_directories(tun_out);
        fs::path log = fs::path(tun_out) / "trials.jsonl";
        bo::write_trial_log(result.log, log);
        fs::path best = fs::path(tun_out) / "best_spec.json";
        nlohmann::json j = {
            {"activation", nn::to_string(result.best.spec.activation)},
            {"units", result.best.spec.units_per_layer},
            {"layers", result.best.spec.n_layers},
            {"dropout", result.best.spec.dropout_rate},
            {"learning_rate", result.best.spec.learning_rate},
            {"objective", result.best.objective},
        };
        std::ofstream out(best);
        out << j.dump(2) << "\n";
        if (!out) throw std::runtime_error("cannot write " + best.string());
        pipeline::record_manifest(tun_out, "tune", {log, best}, tun_seed);
        std::cout << "tune: best objective " << result.best.objective << " ("
                  << nn::to_string(result.best.spec.activation) << ", units "
                  << result.best.spec.units_per_layer << ", layers "
                  << result.best.spec.n_layers << ", dropout "
                  << result.best.spec.dropout_rate << ", lr "
                  << result.best.spec.learning_rate << ") -> " << best.string() << "\n";
    });

    // ----------------------------------------------------------- evaluate ---
    auto* evl = app.add_subcommand("evaluate", "k-fold cross-validated metrics report");
    std::string evl_spectra, evl_out, evl_task = "classify", evl_model = "naswd",
                evl_norm = "snv";
    ArchFlags evl_arch;
    TrainCaps evl_caps;
    std::size_t evl_plsr = baselines::kDefaultPlsComponents, evl_k = 5;
    double evl_ceiling = pipeline::kDefaultOutlierCeiling;
    std::uint64_t evl_seed = 0;
    evl->add_option("--spectra", evl_spectra, "spectra CSV from extract")->required();
    evl->add_option("--out", evl_out, "output directory")->required();
    evl->add_option("--task", evl_task, "classify|regress")->capture_default_str();
    evl->add_option("--model", evl_model, "naswd|mlp|plsr")->capture_default_str();
    evl->add_option("--k", evl_k, "folds")->capture_default_str();
    evl->add_option("--normalization", evl_norm, "snv|zscore|none")->capture_default_str();
    evl->add_option("--plsr-components", evl_plsr)->capture_default_str();
    evl->add_option("--ceiling", evl_ceiling)->capture_default_str();
    evl->add_option("--seed", evl_seed)->capture_default_str();
    add_arch_options(evl, evl_arch);
    add_train_caps(evl, evl_caps);
    evl->callback([&] {
        preproc::SpectraTable table = preproc::read_spectra_csv(evl_spectra);
        eval::CvConfig cvc;
        cvc.family = eval::family_from_string(evl_model);
        cvc.task = wd::task_from_string(evl_task);
        cvc.spec = arch_from_flags(evl, evl_arch);
        cvc.plsr_components = evl_plsr;
        cvc.k = evl_k;
        cvc.seed = evl_seed;
        cvc.normalization = preproc::normalization_from_string(evl_norm);
        cvc.train = train_config_from(evl_caps, cvc.task);
        preproc::SpectraTable rows = pipeline::task_table(table, cvc.task, evl_ceiling);
        eval::EvalReport report = eval::run_cv(cvc, rows);
        fs::create_directories(evl_out);
        fs::path json = fs::path(evl_out) / "report.json";
        eval::write_report(report, json);
        pipeline::record_manifest(evl_out, "evaluate", {json}, evl_seed);
        if (cvc.task == wd::Task::classify3)
            std::cout << "evaluate: accuracy " << report.classif.accuracy << " f1 "
                      << report.classif.f1 << " -> " << json.string() << "\n";
        else
            std::cout << "evaluate: r " << report.regr.r << " rmse " << report.regr.rmse
                      << " N -> " << json.string() << "\n";
    });

    // ---------------------------------------------------------------- map ---
    auto* mp = app.add_subcommand("map", "per-pixel class or hardness map");
    mp->alias("predict-map");
    std::string mp_ckpt, mp_cube, mp_out, mp_task;
    preproc::ThresholdRules mp_rules;
    mp->add_option("--checkpoint", mp_ckpt, "model checkpoint from train")->required();
    mp->add_option("--cube", mp_cube, "reflectance cube header")->required();
    mp->add_option("--out", mp_out, "output directory")->required();
    mp->add_option("--task", mp_task, "classify|regress (must match the checkpoint)");
    add_threshold_options(mp, mp_rules);
    mp->callback([&] {
        wd::WideDeepModel model = wd::load_checkpoint(mp_ckpt);
        if (!mp_task.empty() && wd::task_from_string(mp_task) != model.task)
            throw std::runtime_error("--task does not match the checkpoint task");
        fs::create_directories(mp_out);
        fs::path png = fs::path(mp_out) / "map.png";
        fs::path csv = fs::path(mp_out) / "percentages.csv";
        pipeline::MapSummary s = pipeline::map_file(model, mp_cube, mp_rules, png, csv);
        pipeline::record_manifest(mp_out, "map", {png, csv});
        std::cout << "map: wrote " << png.string() << " and " << csv.string() << "\n";
    });

    // -------------------------------------------------------------- synth ---
    auto* syn = app.add_subcommand("synth", "seeded synthetic dataset generator");
    std::string syn_out;
    synth::SyntheticSpec syn_spec;
    syn->add_option("--out", syn_out, "output directory")->required();
    syn->add_option("--seed", syn_spec.seed)->capture_default_str();
    syn->add_option("--n-nb", syn_spec.n_per_class[0], "normal-breast samples")
        ->capture_default_str();
    syn->add_option("--n-mwb", syn_spec.n_per_class[1], "moderate samples")
        ->capture_default_str();
    syn->add_option("--n-swb", syn_spec.n_per_class[2], "severe samples")
        ->capture_default_str();
    syn->add_option("--bands", syn_spec.bands)->capture_default_str();
    syn->add_option("--lines", syn_spec.lines)->capture_default_str();
    syn->add_option("--samples", syn_spec.samples)->capture_default_str();
    syn->add_option("--coupling", syn_spec.coupling, "reflectance shift per Newton")
        ->capture_default_str();
    syn->add_option("--noise-sd", syn_spec.noise_sd)->capture_default_str();
    syn->add_option("--gain-sd", syn_spec.gain_sd, "smooth multiplicative gain texture sd")
        ->capture_default_str();
    syn->add_option("--illumination-jitter", syn_spec.illumination_jitter)
        ->capture_default_str();
    syn->callback([&] {
        synth::SynthResult r = synth::synth_dataset(syn_spec, syn_out);
        pipeline::record_manifest(syn_out, "synth",
                                  {r.labels_csv, r.dark_header, r.white_header},
                                  syn_spec.seed);
        std::cout << "synth: " << r.cube_headers.size() << " cubes -> " << syn_out << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "naswd: " << e.what() << "\n\n" << app.help() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "naswd: " << e.what() << std::endl;
        return 1;
    }
    return 0;
}
