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

#include "naswd/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace naswd::pipeline {

CalibrateSummary calibrate_file(const std::filesystem::path& raw_hdr,
                                const std::filesystem::path& dark_hdr,
                                const std::filesystem::path& white_hdr,
                                const std::filesystem::path& out_hdr) {
    hsi::HyperCube raw = hsi::read_cube(raw_hdr);
    hsi::HyperCube dark = hsi::read_cube(dark_hdr);
    hsi::HyperCube white = hsi::read_cube(white_hdr);
    hsi::CalibrationResult calib = hsi::calibrate_reflectance(raw, dark, white);
    calib.cube.storage = hsi::DataType::f32;
    hsi::write_cube(calib.cube, out_hdr);
    return {calib.dead_pixels, out_hdr};
}

MaskSummary mask_file(const std::filesystem::path& reflectance_hdr,
                      const preproc::ThresholdRules& rules,
                      const std::filesystem::path& out_png,
                      const std::filesystem::path* rgb_png) {
    hsi::HyperCube cube = hsi::read_cube(reflectance_hdr);
    if (cube.kind != hsi::CubeKind::reflectance)
        throw std::runtime_error("mask expects a reflectance cube: " +
                                 reflectance_hdr.string());
    preproc::Image3 rgb = preproc::pseudo_rgb(cube);
    if (rgb_png != nullptr) preproc::write_rgb_png(rgb, *rgb_png);
    preproc::Mask mask = preproc::threshold_mask(preproc::rgb_image_to_lab(rgb), rules);
    preproc::write_mask_png(mask, out_png);
    return {mask.count(), mask.lines * mask.samples, out_png};
}

namespace {

std::vector<std::size_t> mask_pixels(const preproc::Mask& mask) {
    std::vector<std::size_t> px;
    px.reserve(mask.count());
    for (std::size_t p = 0; p < mask.bits.size(); ++p)
        if (mask.bits[p] != 0) px.push_back(p);
    return px;
}

} // namespace

preproc::SpectraTable extract_dataset(const std::filesystem::path& data_dir,
                                      const ExtractConfig& cfg) {
    std::vector<synth::SampleTruth> truths = synth::read_labels_csv(data_dir / "labels.csv");
    if (truths.empty()) throw std::runtime_error("extract: empty labels file");
    hsi::HyperCube dark = hsi::read_cube(data_dir / "dark.hdr");
    hsi::HyperCube white = hsi::read_cube(data_dir / "white.hdr");

    preproc::SpectraTable table;
    table.rows.reserve(truths.size() * 4);
    for (const synth::SampleTruth& truth : truths) {
        hsi::HyperCube raw = hsi::read_cube(data_dir / (truth.id + ".hdr"));
        hsi::CalibrationResult calib = hsi::calibrate_reflectance(raw, dark, white);
        const hsi::HyperCube& cube = calib.cube;
        preproc::Mask mask =
            preproc::threshold_mask(preproc::rgb_image_to_lab(preproc::pseudo_rgb(cube)),
                                    cfg.rules);
        preproc::RegionPartition part = preproc::partition_regions(mask, cfg.cranial_end);

        auto add_row = [&](preproc::Region region, const std::vector<std::size_t>& px,
                           double force) {
            preproc::SpectraRow row;
            row.sample_id = truth.id;
            row.region = region;
            row.label = truth.label;
            row.force_n = force;
            row.spectrum = preproc::mean_spectrum(cube, px);
            table.rows.push_back(std::move(row));
        };
        add_row(preproc::Region::whole, mask_pixels(mask), truth.whole_n);
        add_row(preproc::Region::cranial, part.cranial, truth.cranial_n);
        add_row(preproc::Region::medial, part.medial, truth.medial_n);
        add_row(preproc::Region::caudal, part.caudal, truth.caudal_n);
    }
    table.validate();
    return table;
}

OutlierFilterResult apply_outlier_filter(const preproc::SpectraTable& table, double ceiling) {
    if (ceiling <= 0.0) throw std::runtime_error("outlier ceiling must be positive");
    OutlierFilterResult out;
    for (const auto& row : table.rows) {
        if (row.force_n.has_value() && *row.force_n > ceiling)
            ++out.removed;
        else
            out.table.rows.push_back(row);
    }
    if (out.table.rows.empty())
        throw std::runtime_error("outlier filter removed every row");
    return out;
}

preproc::SpectraTable select_region(const preproc::SpectraTable& table,
                                    preproc::Region region) {
    preproc::SpectraTable out;
    for (const auto& row : table.rows)
        if (row.region == region) out.rows.push_back(row);
    return out;
}

preproc::SpectraTable task_table(const preproc::SpectraTable& table, wd::Task task,
                                 double ceiling) {
    if (task == wd::Task::classify3) return select_region(table, preproc::Region::whole);
    return apply_outlier_filter(select_region(table, preproc::Region::cranial), ceiling).table;
}

namespace {

double holdout_metric(const wd::WideDeepModel& model, const wd::Dataset& val, wd::Task task) {
    double acc = 0.0, sse = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
        double pred = wd::predict_value(model, val.x.col(static_cast<Eigen::Index>(i)));
        if (task == wd::Task::classify3) {
            if (static_cast<int>(pred) == val.labels[i]) acc += 1.0;
        } else {
            double d = pred - val.force[static_cast<Eigen::Index>(i)];
            sse += d * d;
        }
    }
    double n = static_cast<double>(val.size());
    return task == wd::Task::classify3 ? acc / n : sse / n;
}

} // namespace

TrainSummary train_full(const preproc::SpectraTable& task_rows, const TrainOptions& options,
                        const std::filesystem::path& checkpoint_path) {
    task_rows.validate();
    const std::size_t n = task_rows.rows.size();
    if (n < 4) throw std::runtime_error("train: need at least 4 rows");

    Rng root(options.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng holdout = root.fork("holdout");
    holdout.shuffle(order);
    std::size_t val_n = static_cast<std::size_t>(
        std::max(1.0, std::round(options.val_fraction * static_cast<double>(n))));
    if (val_n > n / 2) val_n = n / 2;

    preproc::SpectraTable train_table, val_table;
    for (std::size_t i = 0; i < n; ++i) {
        auto& dst = i < val_n ? val_table : train_table;
        dst.rows.push_back(task_rows.rows[order[i]]);
    }

    preproc::ZscoreStats stats;
    const preproc::ZscoreStats* stats_ptr = nullptr;
    if (options.normalization == preproc::Normalization::zscore) {
        std::vector<std::vector<double>> rows;
        rows.reserve(train_table.rows.size());
        for (const auto& r : train_table.rows) rows.push_back(r.spectrum.values);
        stats = preproc::fit_zscore(rows);
        stats_ptr = &stats;
    }
    wd::Dataset train_ds = wd::dataset_from_table(train_table, options.normalization, stats_ptr);
    wd::Dataset val_ds = wd::dataset_from_table(val_table, options.normalization, stats_ptr);

    TrainSummary summary;
    summary.checkpoint = checkpoint_path;
    const std::size_t input_dim = static_cast<std::size_t>(train_ds.x.rows());

    if (options.family == eval::ModelFamily::plsr) {
        if (options.task != wd::Task::regress1)
            throw std::runtime_error("plsr supports regression only");
        std::size_t a = std::min(options.plsr_components,
                                 std::min(train_ds.size() - 1, input_dim));
        Eigen::MatrixXd train_x = train_ds.x.transpose();
        baselines::PlsrModel model = baselines::plsr_fit(train_x, train_ds.force, a);
        Eigen::MatrixXd val_x = val_ds.x.transpose();
        Eigen::VectorXd preds = baselines::plsr_predict(model, val_x);
        summary.val_metric =
            (preds - val_ds.force).squaredNorm() / static_cast<double>(val_ds.size());
        save_plsr({std::move(model), options.normalization}, checkpoint_path);
        return summary;
    }

    nn::TrainConfig config = options.train;
    config.learning_rate = options.spec.learning_rate;
    config.dropout_rate = options.spec.dropout_rate;
    config.seed = root.fork("train").seed();
    std::uint64_t init_seed = root.fork("init").seed();

    wd::WideDeepModel model = options.family == eval::ModelFamily::naswd
                                  ? wd::build(options.spec, input_dim, options.task, init_seed)
                                  : baselines::build_mlp(options.spec, input_dim, options.task,
                                                         init_seed);
    model.normalization = options.normalization;
    if (stats_ptr != nullptr) model.zscore = stats;
    nn::TrainHistory history = wd::train_joint(model, train_ds, val_ds, config);

    summary.val_metric = holdout_metric(model, val_ds, options.task);
    summary.best_epoch = history.best_epoch;
    wd::save_checkpoint(model, checkpoint_path);
    return summary;
}

void save_plsr(const PlsrCheckpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << ' ' << buf;
    };
    out << "naswd-plsr 1\n";
    out << "normalization " << preproc::to_string(ckpt.normalization) << "\n";
    out << "components " << ckpt.model.n_components << ' ' << ckpt.model.n_used << "\n";
    out << "features " << ckpt.model.x_mean.size() << "\n";
    out << "x_mean";
    for (Eigen::Index i = 0; i < ckpt.model.x_mean.size(); ++i) put(ckpt.model.x_mean[i]);
    out << "\ny_mean";
    put(ckpt.model.y_mean);
    out << "\ncoef";
    for (Eigen::Index i = 0; i < ckpt.model.coef.size(); ++i) put(ckpt.model.coef[i]);
    out << "\n";
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

PlsrCheckpoint load_plsr(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string word;
    auto expect = [&](const std::string& tag) {
        if (!(in >> word) || word != tag)
            throw std::runtime_error("bad plsr checkpoint: expected " + tag);
    };
    expect("naswd-plsr");
    expect("1");
    expect("normalization");
    in >> word;
    PlsrCheckpoint ckpt;
    ckpt.normalization = preproc::normalization_from_string(word);
    expect("components");
    in >> ckpt.model.n_components >> ckpt.model.n_used;
    expect("features");
    Eigen::Index p = 0;
    in >> p;
    if (!in || p <= 0) throw std::runtime_error("bad plsr checkpoint: features");
    ckpt.model.x_mean.resize(p);
    ckpt.model.coef.resize(p);
    expect("x_mean");
    for (Eigen::Index i = 0; i < p; ++i) in >> ckpt.model.x_mean[i];
    expect("y_mean");
    in >> ckpt.model.y_mean;
    expect("coef");
    for (Eigen::Index i = 0; i < p; ++i) in >> ckpt.model.coef[i];
    if (!in) throw std::runtime_error("truncated plsr checkpoint: " + path.string());
    return ckpt;
}

bo::SearchResult tune(const preproc::SpectraTable& task_rows, const eval::CvConfig& cv_template,
                      const bo::SearchConfig& search) {
    task_rows.validate();
    bo::Objective objective = [&](const wd::ArchSpec& spec) -> bo::TrialOutcome {
        eval::CvConfig cfg = cv_template;
        cfg.family = eval::ModelFamily::naswd;
        cfg.spec = spec;
        try {
            eval::EvalReport report = eval::run_cv(cfg, task_rows);
            return {report.objective, report.fold_scores};
        } catch (const std::exception&) {
            return {-std::numeric_limits<double>::infinity(), {}};
        }
    };
    return bo::bo_search(objective, search);
}

MapSummary map_file(const wd::WideDeepModel& model, const std::filesystem::path& reflectance_hdr,
                    const preproc::ThresholdRules& rules, const std::filesystem::path& out_png,
                    const std::filesystem::path& pct_csv) {
    hsi::HyperCube cube = hsi::read_cube(reflectance_hdr);
    if (cube.kind != hsi::CubeKind::reflectance)
        throw std::runtime_error("map expects a reflectance cube: " + reflectance_hdr.string());
    preproc::Mask mask =
        preproc::threshold_mask(preproc::rgb_image_to_lab(preproc::pseudo_rgb(cube)), rules);
    wd::PixelGrid grid = wd::predict_cube(model, cube, mask);

    MapSummary summary;
    summary.map_png = out_png;
    summary.percentages_csv = pct_csv;
    std::vector<std::pair<std::string, double>> pct_rows;
    if (model.task == wd::Task::classify3) {
        maps::write_class_map(grid, out_png);
        summary.class_pct = maps::class_percentages(grid);
        const char* names[3] = {"NB", "MWB", "SWB"};
        for (int c = 0; c < 3; ++c) pct_rows.emplace_back(names[c], summary.class_pct[c]);
    } else {
        summary.hardness_pct = maps::write_hardness_map(grid, out_png);
        const char* bins[4] = {"[0,3.5]", "(3.5,7.1]", "(7.1,10.8]", "(10.8,inf)"};
        for (int b = 0; b < 4; ++b) pct_rows.emplace_back(bins[b], summary.hardness_pct[b]);
    }
    maps::write_percentages(pct_rows, pct_csv);
    return summary;
}

void record_manifest(const std::filesystem::path& out_dir, const std::string& stage,
                     const std::vector<std::filesystem::path>& artifacts,
                     std::optional<std::uint64_t> seed) {
    std::filesystem::create_directories(out_dir);
    std::filesystem::path manifest = out_dir / "manifest.json";
    nlohmann::json doc;
    if (std::filesystem::exists(manifest)) {
        std::ifstream in(manifest);
        in >> doc;
    }
    if (!doc.contains("stages")) doc["stages"] = nlohmann::json::array();
    nlohmann::json entry;
    entry["stage"] = stage;
    entry["artifacts"] = nlohmann::json::array();
    for (const auto& a : artifacts) entry["artifacts"].push_back(a.string());
    if (seed.has_value()) entry["seed"] = *seed;
    doc["stages"].push_back(entry);
    std::ofstream out(manifest);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write " + manifest.string());
}

} // namespace naswd::pipeline
