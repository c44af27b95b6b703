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

#include "naswd/nn.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace naswd::nn {

std::string to_string(Activation a) {
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    if (s == "identity") return Activation::identity;
    throw std::runtime_error("unknown activation '" + s + "'");
}

DenseLayer make_dense(std::size_t in_dim, std::size_t out_dim, Activation act, Rng& rng) {
    if (in_dim == 0 || out_dim == 0) throw std::runtime_error("make_dense: zero dimension");
    DenseLayer layer;
    layer.activation = act;
    layer.weights.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
    double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    // column-major fill so the draw order is part of the format
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
            layer.weights(r, c) = rng.uniform(-limit, limit);
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out_dim));
    return layer;
}

namespace {

void apply_activation(Activation act, Eigen::MatrixXd& z) {
    switch (act) {
    case Activation::relu:
        z = z.cwiseMax(0.0);
        break;
    case Activation::sigmoid:
        z = ((-z.array()).exp() + 1.0).inverse().matrix();
        break;
    case Activation::identity:
        break;
    }
}

// derivative given pre-activation z and post-activation a
Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& z,
                                const Eigen::MatrixXd& a) {
    switch (act) {
    case Activation::relu:
        return (z.array() > 0.0).cast<double>().matrix();
    case Activation::sigmoid:
        return (a.array() * (1.0 - a.array())).matrix();
    case Activation::identity:
        return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    }
    return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

} // namespace

Eigen::MatrixXd forward(const Stack& stack, const Eigen::MatrixXd& x, Mode mode,
                        double dropout_rate, Rng& rng, ForwardCache* cache) {
    if (stack.empty()) throw std::runtime_error("forward: empty stack");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw std::runtime_error("forward: dropout rate outside [0, 1)");
    if (x.rows() != stack.front().weights.cols())
        throw std::runtime_error("forward: input dimension mismatch");

    if (cache) {
        cache->input = x;
        cache->pre.clear();
        cache->post.clear();
        cache->dropout.clear();
    }

    Eigen::MatrixXd a = x;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        const DenseLayer& layer = stack[i];
        if (a.rows() != layer.weights.cols())
            throw std::runtime_error("forward: layer shape mismatch");
        Eigen::MatrixXd z = layer.weights * a;
        z.colwise() += layer.bias;
        if (cache) cache->pre.push_back(z);
        apply_activation(layer.activation, z);

        bool hidden = i + 1 < stack.size();
        Eigen::MatrixXd mask;
        if (hidden && mode == Mode::train && dropout_rate > 0.0) {
            mask.resize(z.rows(), z.cols());
            double scale = 1.0 / (1.0 - dropout_rate);
            for (Eigen::Index c = 0; c < mask.cols(); ++c)
                for (Eigen::Index r = 0; r < mask.rows(); ++r)
                    mask(r, c) = rng.uniform() < dropout_rate ? 0.0 : scale;
            z = z.cwiseProduct(mask);
        }
        if (!z.allFinite()) throw std::runtime_error("forward: non-finite activation");
        if (cache) {
            cache->post.push_back(z);
            cache->dropout.push_back(std::move(mask));
        }
        a = std::move(z);
    }
    return a;
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd out(logits.rows(), logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        Eigen::ArrayXd col = logits.col(c).array();
        col -= col.maxCoeff();
        col = col.exp();
        out.col(c) = (col / col.sum()).matrix();
    }
    return out;
}

double sparse_cce_loss(const Eigen::MatrixXd& logits, const std::vector<int>& targets,
                       Eigen::MatrixXd& grad) {
    if (static_cast<std::size_t>(logits.cols()) != targets.size())
        throw std::runtime_error("sparse_cce: batch size mismatch");
    if (logits.cols() == 0) throw std::runtime_error("sparse_cce: empty batch");
    Eigen::MatrixXd p = softmax_columns(logits);
    double n = static_cast<double>(logits.cols());
    double loss = 0.0;
    grad = p / n;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        int t = targets[static_cast<std::size_t>(c)];
        if (t < 0 || t >= logits.rows())
            throw std::runtime_error("sparse_cce: class index out of range");
        loss -= std::log(p(t, c));
        grad(t, c) -= 1.0 / n;
    }
    return loss / n;
}

double mse_loss(const Eigen::MatrixXd& output, const Eigen::MatrixXd& target,
                Eigen::MatrixXd& grad) {
    if (output.rows() != target.rows() || output.cols() != target.cols())
        throw std::runtime_error("mse: shape mismatch");
    if (output.size() == 0) throw std::runtime_error("mse: empty batch");
    double n = static_cast<double>(output.size());
    Eigen::MatrixXd diff = output - target;
    grad = 2.0 * diff / n;
    return diff.squaredNorm() / n;
}

std::vector<LayerGrads> backward(const Stack& stack, const ForwardCache& cache,
                                 const Eigen::MatrixXd& output_grad,
                                 Eigen::MatrixXd* input_grad) {
    if (cache.pre.size() != stack.size() || cache.post.size() != stack.size())
        throw std::runtime_error("backward: cache does not match stack");

    std::vector<LayerGrads> grads(stack.size());
    Eigen::MatrixXd delta = output_grad; // dL/d(post-activation of layer i)
    for (std::size_t ii = stack.size(); ii-- > 0;) {
        const DenseLayer& layer = stack[ii];
        if (cache.dropout[ii].size() > 0) delta = delta.cwiseProduct(cache.dropout[ii]);
        // post stored after dropout; recover pure activation for sigmoid'
        Eigen::MatrixXd act = cache.pre[ii];
        apply_activation(layer.activation, act);
        delta = delta.cwiseProduct(activation_grad(layer.activation, cache.pre[ii], act));

        const Eigen::MatrixXd& below = ii == 0 ? cache.input : cache.post[ii - 1];
        grads[ii].weights = delta * below.transpose();
        grads[ii].bias = delta.rowwise().sum();
        if (ii > 0 || input_grad) {
            Eigen::MatrixXd next = layer.weights.transpose() * delta;
            if (ii == 0) {
                *input_grad = std::move(next);
            } else {
                delta = std::move(next);
            }
        }
    }
    return grads;
}

void adam_step(std::vector<ParamView>& params, const std::vector<GradView>& grads,
               AdamState& state, double learning_rate) {
    if (params.size() != grads.size())
        throw std::runtime_error("adam: parameter/gradient block count mismatch");
    if (state.m.empty()) {
        for (const auto& p : params) {
            state.m.emplace_back(Eigen::ArrayXd::Zero(p.size()));
            state.v.emplace_back(Eigen::ArrayXd::Zero(p.size()));
        }
    }
    if (state.m.size() != params.size())
        throw std::runtime_error("adam: state does not match parameters");

    ++state.step;
    double t = static_cast<double>(state.step);
    double c1 = 1.0 - std::pow(state.beta1, t);
    double c2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size())
            throw std::runtime_error("adam: block shape mismatch");
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grads[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grads[i].square();
        params[i] -= learning_rate * (state.m[i] / c1) / ((state.v[i] / c2).sqrt() + state.eps);
    }
}

void TrainConfig::validate() const {
    if (learning_rate < 1e-6 || learning_rate > 1.0)
        throw std::runtime_error("train config: learning rate outside [1e-6, 1]");
    if (patience > max_epochs)
        throw std::runtime_error("train config: patience exceeds max_epochs");
    if (dropout_rate < 0.0 || dropout_rate > 0.5)
        throw std::runtime_error("train config: dropout outside [0, 0.5]");
    if (max_epochs == 0) throw std::runtime_error("train config: max_epochs must be positive");
}

TrainHistory train_loop(TrainProblem& problem, const TrainConfig& config) {
    config.validate();
    if (problem.n_train == 0) throw std::runtime_error("train_loop: empty training set");

    Rng shuffle_rng = Rng(config.seed).fork("epoch-shuffle");
    std::vector<std::size_t> order(problem.n_train);
    std::iota(order.begin(), order.end(), 0);
    std::size_t batch = config.batch_size == 0 ? problem.n_train
                                               : std::min(config.batch_size, problem.n_train);

    TrainHistory history;
    history.best_val_loss = std::numeric_limits<double>::infinity();
    std::vector<double> best_params = problem.save_params();
    std::size_t since_improvement = 0;

    for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        double train_loss = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < problem.n_train; start += batch) {
            std::size_t stop = std::min(start + batch, problem.n_train);
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(stop));
            train_loss += problem.train_step(rows);
            ++n_batches;
        }
        train_loss /= static_cast<double>(n_batches);
        double val_loss = problem.validation_loss();
        if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
            throw std::runtime_error("train_loop: non-finite loss at epoch " +
                                     std::to_string(epoch));
        history.epochs.push_back({epoch, train_loss, val_loss});

        if (history.best_val_loss - val_loss > kMinImprovement) {
            history.best_val_loss = val_loss;
            history.best_epoch = epoch;
            best_params = problem.save_params();
            since_improvement = 0;
        } else {
            ++since_improvement;
            if (since_improvement > config.patience) break;
        }
    }

    problem.load_params(best_params);
    return history;
}

} // namespace naswd::nn
