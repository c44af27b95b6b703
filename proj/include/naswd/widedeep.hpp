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

#include <filesystem>
#include <optional>

#include "naswd/nn.hpp"
#include "naswd/preproc.hpp"

namespace naswd::wd {

struct ArchSpec {
    nn::Activation activation = nn::Activation::relu; // relu or sigmoid
    std::size_t units_per_layer = 64;
    std::size_t n_layers = 2;
    double dropout_rate = 0.0;
    double learning_rate = 1e-3;

    void validate() const; // enforces the closed search-space ranges
    bool operator==(const ArchSpec&) const = default;
};

constexpr std::size_t kUnitsMin = 32, kUnitsMax = 512;
constexpr std::size_t kLayersMin = 1, kLayersMax = 3;
constexpr double kDropoutMax = 0.5;
constexpr double kLrMin = 1e-4, kLrMax = 1e-2;

enum class Task { classify3, regress1 };
std::string to_string(Task t);
Task task_from_string(const std::string& s);

inline std::size_t output_dim(Task t) { return t == Task::classify3 ? 3 : 1; }

// Regression map outputs are clamped to this many Newtons.
constexpr double kForceCeiling = 40.0;

struct WideDeepModel {
    ArchSpec spec;
    Task task = Task::classify3;
    std::size_t input_dim = 0;
    bool wide_enabled = true; // false = deep-only baseline topology

    nn::DenseLayer wide;  // K x d affine, identity activation
    nn::Stack deep;       // n_layers hidden + linear K head
    Eigen::Vector2d combiner = Eigen::Vector2d::Ones(); // (a_w, a_d)

    preproc::Normalization normalization = preproc::Normalization::snv;
    std::optional<preproc::ZscoreStats> zscore; // required iff normalization==zscore

    // regression target standardization (identity for classification)
    double target_mean = 0.0;
    double target_sd = 1.0;

    std::size_t parameter_count() const;
};

// Seeded Glorot init; validates the spec against the search-space ranges.
WideDeepModel build(const ArchSpec& spec, std::size_t input_dim, Task task,
                    std::uint64_t seed);

// Same construction without range validation (tiny nets for test harnesses).
WideDeepModel build_unchecked(const ArchSpec& spec, std::size_t input_dim, Task task,
                              std::uint64_t seed);

// Combined logits a_w*(Wx+b) + a_d*deep(x) for a batch (columns = samples).
Eigen::MatrixXd predict_logits(const WideDeepModel& model, const Eigen::MatrixXd& x);
Eigen::VectorXd predict_logits(const WideDeepModel& model, const Eigen::VectorXd& x);

// Class index (classify3) or force in Newtons, de-standardized (regress1).
double predict_value(const WideDeepModel& model, const Eigen::VectorXd& x);

// ---------------------------------------------------------------- training ---

// Normalized design matrix plus targets; columns of x are samples.
struct Dataset {
    Eigen::MatrixXd x;
    std::vector<int> labels;
    Eigen::VectorXd force;

    std::size_t size() const { return static_cast<std::size_t>(x.cols()); }
    Dataset rows(const std::vector<std::size_t>& idx) const;
};

Dataset dataset_from_table(const preproc::SpectraTable& table,
                           preproc::Normalization norm,
                           const preproc::ZscoreStats* stats = nullptr);

// Joint training of wide weights, deep weights and combiner scalars with one
// Adam optimizer; early stopping on `val` per nn::train_loop.
nn::TrainHistory train_joint(WideDeepModel& model, const Dataset& train, const Dataset& val,
                             const nn::TrainConfig& config);

// Batch loss and, when grad_out is non-null, the gradient of every trainable
// parameter flattened in optimizer order (wide W, wide b, deep layers in
// order, combiner). Inference mode; exposed for gradient verification.
// Exactly one of labels/targets must be non-null.
double joint_loss(WideDeepModel& model, const Eigen::MatrixXd& x,
                  const std::vector<int>* labels, const Eigen::MatrixXd* targets,
                  std::vector<double>* grad_out = nullptr);

// Flattened trainable parameters in the same order as joint_loss gradients.
std::vector<double> get_params(WideDeepModel& model);
void set_params(WideDeepModel& model, const std::vector<double>& flat);

// ------------------------------------------------------------- pixel maps ---

struct PixelGrid {
    std::size_t lines = 0;
    std::size_t samples = 0;
    std::vector<std::uint8_t> present; // absent exactly on unmasked pixels
    std::vector<double> values;        // class index or clamped force (N)

    bool is_present(std::size_t l, std::size_t s) const {
        return present[l * samples + s] != 0;
    }
    double at(std::size_t l, std::size_t s) const { return values[l * samples + s]; }
};

PixelGrid predict_cube(const WideDeepModel& model, const hsi::HyperCube& cube,
                       const preproc::Mask& mask);

// ------------------------------------------------------------- checkpoint ---

void save_checkpoint(const WideDeepModel& model, const std::filesystem::path& path);
WideDeepModel load_checkpoint(const std::filesystem::path& path);

} // namespace naswd::wd
