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

#include <Eigen/Dense>

#include <filesystem>
#include <functional>

#include "naswd/rng.hpp"
#include "naswd/widedeep.hpp"

namespace naswd::bo {

// Architecture search space: activation one-hot (2), units, layers, dropout,
// log-scaled learning rate -> 6 encoded dimensions on the unit cube.
constexpr std::size_t kEncodedDim = 6;

using Encoded = Eigen::Matrix<double, kEncodedDim, 1>;

Encoded encode(const wd::ArchSpec& spec);
wd::ArchSpec decode(const Encoded& v); // integers snap by round-half-up
Encoded snap(const Encoded& v);        // encode(decode(v))

// ---------------------------------------------------------------------- GP ---

// Matern 5/2 kernel with per-dimension length scales (ARD).
struct GpHyper {
    Eigen::VectorXd log_length; // per encoded dimension
    double log_signal_sd = 0.0;
    double log_noise_sd = -6.0;
};

struct GpModel {
    Eigen::MatrixXd x; // n x d, unit-cube rows (deduplicated)
    Eigen::VectorXd y_std; // standardized targets
    double y_mean = 0.0;
    double y_sd = 1.0;
    GpHyper hyper;
    Eigen::MatrixXd chol_l; // lower factor of K + (sigma_n^2 + jitter) I
    Eigen::VectorXd alpha;  // (K + ...)^-1 y_std
    double jitter = 0.0;
    double log_marginal = 0.0;
};

// Rows of x within 1e-9 of one another are merged (targets averaged). Kernel
// hyperparameters maximize the log marginal likelihood via a seeded 16-restart
// bounded coordinate search.
GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
               std::uint64_t seed = 0x9e3779b97f4a7c15ull);

struct Posterior {
    double mean = 0.0;
    double variance = 0.0; // latent variance, clamped at 0
};

Posterior gp_posterior(const GpModel& gp, const Encoded& x);

// Maximization convention: improvement over best_so_far.
double expected_improvement(double mean, double variance, double best_so_far);

// 2048 seeded uniform candidates snapped to the valid grid; the EI argmax
// wins, ties by lowest candidate index. gp == nullptr -> uniform random spec.
wd::ArchSpec propose_next(const GpModel* gp, double best_so_far, Rng& rng);

constexpr std::size_t kProposalCandidates = 2048;

// ------------------------------------------------------------------ search ---

struct TrialOutcome {
    double objective = 0.0; // mean validation accuracy or -MSE; -inf = failed
    std::vector<double> fold_scores;
};

struct TrialRecord {
    std::size_t index = 0;
    wd::ArchSpec spec;
    double objective = 0.0;
    bool failed = false;
    std::vector<double> fold_scores;
    double seconds = 0.0; // wall time; recorded only when timing is enabled
};

struct SearchResult {
    TrialRecord best;
    std::vector<TrialRecord> log;
};

using Objective = std::function<TrialOutcome(const wd::ArchSpec&)>;

struct SearchConfig {
    std::size_t budget = 40;
    std::size_t n_init = 8;
    std::uint64_t seed = 0;
    bool record_timings = false; // keep logs byte-reproducible by default
};

// n_init Halton points under a seeded rotation, then fit-propose-evaluate to
// budget. Failed (non-finite) trials stay in the log with objective -inf and
// never enter the GP fit.
SearchResult bo_search(const Objective& objective, const SearchConfig& config);

// Line-delimited JSON, one record per trial, in trial order.
void write_trial_log(const std::vector<TrialRecord>& log, const std::filesystem::path& path);
std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path);

// Halton low-discrepancy point, bases 2,3,5,7,11,13, index starts at 1.
Encoded halton_point(std::size_t index);

} // namespace naswd::bo
