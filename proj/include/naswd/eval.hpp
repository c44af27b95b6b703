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

#include "naswd/baselines.hpp"
#include "naswd/widedeep.hpp"

namespace naswd::eval {

// ------------------------------------------------------------------ splits ---

struct FoldSplit {
    std::size_t k = 0;
    std::vector<std::size_t> assignments; // sample index -> fold index

    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> complement_rows(std::size_t fold) const;
};

// Seeded shuffle then contiguous chunks; the first n mod k folds get the
// extra sample.
FoldSplit kfold_split(std::size_t n, std::size_t k, std::uint64_t seed);

// ----------------------------------------------------------------- metrics ---

constexpr std::size_t kNumClasses = 3;

struct ConfusionMatrix {
    std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{}; // [true][pred]
    std::size_t total() const;
    std::size_t trace() const;
};

struct ClassifMetrics {
    double accuracy = 0.0;
    double precision = 0.0; // class-frequency weighted
    double recall = 0.0;
    double f1 = 0.0;
    double ci_low = 0.0;  // t-interval over fold accuracies, clipped to [0,1]
    double ci_high = 0.0;
    std::vector<int> absent_classes; // labels never observed (metrics forced to 0)
};

struct ClassifResult {
    ClassifMetrics metrics;
    ConfusionMatrix confusion;
};

ClassifResult classification_metrics(const std::vector<int>& preds,
                                     const std::vector<int>& labels,
                                     const std::vector<double>& fold_accuracies);

struct RegrMetrics {
    double r = 0.0;
    double r2 = 0.0;
    double rmse = 0.0;     // same units as the targets
    double rmse_std = 0.0; // rmse divided by the target standard deviation
    bool degenerate = false; // constant predictions: r reported as 0
};

RegrMetrics regression_metrics(const Eigen::VectorXd& preds, const Eigen::VectorXd& targets);

struct AnovaResult {
    double f_stat = 0.0;
    std::size_t df_between = 0;
    std::size_t df_within = 0;
    double p_value = 1.0;
};

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

// ---------------------------------------------------------------- CV harness ---

enum class ModelFamily { naswd, mlp, plsr };
std::string to_string(ModelFamily f);
ModelFamily family_from_string(const std::string& s);

struct CvConfig {
    ModelFamily family = ModelFamily::naswd;
    wd::Task task = wd::Task::classify3;
    wd::ArchSpec spec;                   // nn families
    std::size_t plsr_components = baselines::kDefaultPlsComponents;
    preproc::Normalization normalization = preproc::Normalization::snv;
    std::size_t k = 5;
    std::uint64_t seed = 0;
    nn::TrainConfig train; // learning_rate/dropout overridden by spec for nn families
};

struct EvalReport {
    ModelFamily family = ModelFamily::naswd;
    wd::Task task = wd::Task::classify3;
    std::size_t k_requested = 0;
    std::size_t k_effective = 0; // after skipping class-deficient folds
    std::uint64_t seed = 0;
    wd::ArchSpec spec;
    std::size_t plsr_components = 0;

    std::vector<double> fold_scores; // accuracy, or MSE in target units
    std::vector<std::size_t> skipped_folds;

    // classification (pooled out-of-fold predictions)
    ClassifMetrics classif;
    ConfusionMatrix confusion;

    // regression: pooled out-of-fold metrics are primary, fold means secondary
    RegrMetrics regr;
    double fold_rmse_mean = 0.0;

    // mean validation metric handed to the architecture search
    // (mean fold accuracy, or negative mean fold MSE)
    double objective = 0.0;
};

EvalReport run_cv(const CvConfig& config, const preproc::SpectraTable& table);

// Deterministic JSON serialization (sorted keys, shortest-round-trip numbers).
std::string report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

} // namespace naswd::eval
