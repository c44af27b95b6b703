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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "naswd/rng.hpp"

namespace naswd::nn {

enum class Activation { relu, sigmoid, identity };
std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

enum class LossKind { sparse_cce, mse };

// Columns are samples throughout this module: a batch of N spectra of
// dimension d is a d x N matrix.
struct DenseLayer {
    Eigen::MatrixXd weights; // out x in
    Eigen::VectorXd bias;    // out
    Activation activation = Activation::identity;
};

using Stack = std::vector<DenseLayer>;

// Glorot-uniform weights, zero biases.
DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Activation act, Rng& rng);

struct ForwardCache {
    Eigen::MatrixXd input;
    std::vector<Eigen::MatrixXd> pre;     // per layer, pre-activation
    std::vector<Eigen::MatrixXd> post;    // per layer, after activation (+ dropout)
    std::vector<Eigen::MatrixXd> dropout; // per layer; empty when not applied
};

enum class Mode { train, infer };

// Inverted dropout is applied after every activation except the final
// layer's (the head). In infer mode, or at rate 0, dropout is skipped.
Eigen::MatrixXd forward(const Stack& stack, const Eigen::MatrixXd& x, Mode mode,
                        double dropout_rate, Rng& rng, ForwardCache* cache = nullptr);

// Numerically stable column-wise softmax (max subtraction).
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

// Mean loss over the batch and its gradient w.r.t. the network output.
// sparse_cce: columns are logit vectors, targets are class indices.
double sparse_cce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& targets,
                       Eigen::MatrixXd& grad);
// mse: loss = mean over all elements of (output - target)^2.
double mse_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target,
                Eigen::MatrixXd& grad);

struct LayerGrads {
    Eigen::MatrixXd weights;
    Eigen::VectorXd bias;
};

// Reverse pass. Returns per-layer parameter gradients; if `input_grad` is
// non-null it also receives dL/d(input).
std::vector<LayerGrads> backward(const Stack& stack, const ForwardCache& cache,
                                 const Eigen::MatrixXd& output_grad,
                                 Eigen::MatrixXd* input_grad = nullptr);

// ------------------------------------------------------------------ Adam ---

struct AdamState {
    std::vector<Eigen::ArrayXd> m;
    std::vector<Eigen::ArrayXd> v;
    long step = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

using ParamView = Eigen::Map<Eigen::ArrayXd>;
using GradView = Eigen::Map<const Eigen::ArrayXd>;

// Standard bias-corrected update; state accumulators are allocated on first use.
void adam_step(std::vector<ParamView>& params, const std::vector<GradView>& grads,
               AdamState& state, double learning_rate);

// ---------------------------------------------------------------- training ---

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t max_epochs = 10000;
    std::size_t patience = 100;
    std::size_t batch_size = 0; // 0 = full batch
    double dropout_rate = 0.0;
    std::uint64_t seed = 0;
    LossKind loss = LossKind::sparse_cce;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

// Model plumbing supplied by the caller; train_loop owns only the schedule
// (shuffling, batching, early stopping, best-checkpoint restore).
struct TrainProblem {
    std::size_t n_train = 0;
    // One optimizer step over the given row subset; returns the batch loss.
    std::function<double(const std::vector<std::size_t>&)> train_step;
    // Validation loss in infer mode.
    std::function<double()> validation_loss;
    std::function<std::vector<double>()> save_params;
    std::function<void(const std::vector<double>&)> load_params;
};

// Improvement threshold for early stopping.
inline constexpr double kMinImprovement = 1e-6;

TrainHistory train_loop(TrainProblem& problem, const TrainConfig& config);

} // namespace naswd::nn
