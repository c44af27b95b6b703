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

#include "naswd/eval.hpp"
#include "naswd/maps.hpp"
#include "naswd/nasbo.hpp"
#include "naswd/synth.hpp"

namespace naswd::pipeline {

// ------------------------------------------------------------ file stages ---

struct CalibrateSummary {
    std::size_t dead_pixels = 0;
    std::filesystem::path out_header;
};

// raw + dark/white frames -> reflectance cube on disk.
CalibrateSummary calibrate_file(const std::filesystem::path& raw_hdr,
                                const std::filesystem::path& dark_hdr,
                                const std::filesystem::path& white_hdr,
                                const std::filesystem::path& out_hdr);

struct MaskSummary {
    std::size_t kept_pixels = 0;
    std::size_t total_pixels = 0;
    std::filesystem::path mask_png;
};

// reflectance cube -> pseudo-RGB -> L*a*b* threshold mask PNG; optionally
// also writes the pseudo-RGB preview.
MaskSummary mask_file(const std::filesystem::path& reflectance_hdr,
                      const preproc::ThresholdRules& rules,
                      const std::filesystem::path& out_png,
                      const std::filesystem::path* rgb_png = nullptr);

// -------------------------------------------------------------- extraction ---

struct ExtractConfig {
    preproc::ThresholdRules rules;
    preproc::CranialEnd cranial_end = preproc::CranialEnd::low;
};

// Calibrates and masks every labeled cube under data_dir (layout written by
// synth_dataset: labels.csv, dark.hdr, white.hdr, <sample_id>.hdr) and emits
// four rows per sample: whole, cranial, medial, caudal mean spectra with the
// matching force targets.
preproc::SpectraTable extract_dataset(const std::filesystem::path& data_dir,
                                      const ExtractConfig& cfg = {});

constexpr double kDefaultOutlierCeiling = 10.8; // Newtons

struct OutlierFilterResult {
    preproc::SpectraTable table;
    std::size_t removed = 0;
};

// Drops rows whose force strictly exceeds the ceiling (rows without a force
// are kept). Throws if nothing survives.
OutlierFilterResult apply_outlier_filter(const preproc::SpectraTable& table, double ceiling);

preproc::SpectraTable select_region(const preproc::SpectraTable& table, preproc::Region region);

// classify3 -> whole-fillet rows; regress1 -> cranial rows with the outlier
// ceiling applied.
preproc::SpectraTable task_table(const preproc::SpectraTable& table, wd::Task task,
                                 double ceiling = kDefaultOutlierCeiling);

// ----------------------------------------------------------------- training ---

struct TrainOptions {
    eval::ModelFamily family = eval::ModelFamily::naswd;
    wd::Task task = wd::Task::classify3;
    wd::ArchSpec spec;
    std::size_t plsr_components = baselines::kDefaultPlsComponents;
    preproc::Normalization normalization = preproc::Normalization::snv;
    double val_fraction = 0.15; // held out for early stopping
    std::uint64_t seed = 0;
    nn::TrainConfig train;
};

struct TrainSummary {
    double val_metric = 0.0; // held-out accuracy (classify) or MSE (regress)
    std::size_t best_epoch = 0;
    std::filesystem::path checkpoint;
};

// Fits one model on the task rows and writes a checkpoint. nn families use
// wd::save_checkpoint; plsr uses the text format below.
TrainSummary train_full(const preproc::SpectraTable& task_rows, const TrainOptions& options,
                        const std::filesystem::path& checkpoint_path);

struct PlsrCheckpoint {
    baselines::PlsrModel model;
    preproc::Normalization normalization = preproc::Normalization::snv;
};

void save_plsr(const PlsrCheckpoint& ckpt, const std::filesystem::path& path);
PlsrCheckpoint load_plsr(const std::filesystem::path& path);

// ------------------------------------------------------------------- tuning ---

// Architecture search driven by k-fold CV on the task rows: each trial runs
// run_cv with the proposed spec and reports its objective.
bo::SearchResult tune(const preproc::SpectraTable& task_rows, const eval::CvConfig& cv_template,
                      const bo::SearchConfig& search);

// ------------------------------------------------------------------ mapping ---

struct MapSummary {
    std::array<double, 3> class_pct{};    // classify3
    std::array<double, 4> hardness_pct{}; // regress1
    std::filesystem::path map_png;
    std::filesystem::path percentages_csv;
};

// Masks the cube with the given rules, predicts per masked pixel, renders the
// map PNG and writes the percentage table.
MapSummary map_file(const wd::WideDeepModel& model, const std::filesystem::path& reflectance_hdr,
                    const preproc::ThresholdRules& rules, const std::filesystem::path& out_png,
                    const std::filesystem::path& pct_csv);

// ----------------------------------------------------------------- manifest ---

// Appends one stage entry to <out_dir>/manifest.json ({stage, artifacts,
// seed?}); creates the manifest on first use.
void record_manifest(const std::filesystem::path& out_dir, const std::string& stage,
                     const std::vector<std::filesystem::path>& artifacts,
                     std::optional<std::uint64_t> seed = std::nullopt);

} // namespace naswd::pipeline
