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

#include "naswd/widedeep.hpp"

namespace naswd::baselines {

// Partial least squares regression (PLS1) fitted by NIPALS deflation.
struct PlsrModel {
    std::size_t n_components = 0; // requested
    std::size_t n_used = 0;       // may stop early on exhausted covariance
    Eigen::VectorXd x_mean;
    double y_mean = 0.0;
    Eigen::MatrixXd weights;  // p x A
    Eigen::MatrixXd loadings; // p x A
    Eigen::VectorXd q;        // A, y-loadings
    Eigen::VectorXd coef;     // p, maps centered x to centered y
    Eigen::MatrixXd scores;   // n x A, mutually orthogonal latent scores
};

constexpr std::size_t kDefaultPlsComponents = 10;

// X rows are samples. n_components must not exceed min(n-1, p).
PlsrModel plsr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::size_t n_components);

double plsr_predict(const PlsrModel& model, const Eigen::VectorXd& x);
Eigen::VectorXd plsr_predict(const PlsrModel& model, const Eigen::MatrixXd& x);

// Deep-only topology: identical deep stack and training loop, no wide branch,
// no combiner. Trained with wd::train_joint like any other model.
wd::WideDeepModel build_mlp(const wd::ArchSpec& spec, std::size_t input_dim, wd::Task task,
                            std::uint64_t seed);

struct MlpResult {
    wd::WideDeepModel model;
    nn::TrainHistory history;
};

MlpResult mlp_baseline(const wd::ArchSpec& spec, const wd::Dataset& train,
                       const wd::Dataset& val, wd::Task task, const nn::TrainConfig& config,
                       std::uint64_t seed);

} // namespace naswd::baselines
