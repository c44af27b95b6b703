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

#include "naswd/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace naswd::baselines {

namespace {

constexpr double kNipalsTol = 1e-12;
constexpr int kNipalsMaxIter = 500;

} // namespace

PlsrModel plsr_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   std::size_t n_components) {
    Eigen::Index n = x.rows(), p = x.cols();
    if (n != y.size()) throw std::runtime_error("plsr: X rows and y length differ");
    if (n < 2) throw std::runtime_error("plsr: need at least 2 samples");
    if (!x.allFinite() || !y.allFinite()) throw std::runtime_error("plsr: non-finite input");
    std::size_t bound = static_cast<std::size_t>(std::min<Eigen::Index>(n - 1, p));
    if (n_components == 0 || n_components > bound)
        throw std::runtime_error("plsr: n_components outside [1, min(n-1, p)]");

    PlsrModel m;
    m.n_components = n_components;
    m.x_mean = x.colwise().mean();
    m.y_mean = y.mean();

    Eigen::MatrixXd xc = x.rowwise() - m.x_mean.transpose();
    Eigen::VectorXd yc = y.array() - m.y_mean;
    if (xc.squaredNorm() <= 1e-24)
        throw std::runtime_error("plsr: zero-variance X after centering");

    Eigen::Index a_max = static_cast<Eigen::Index>(n_components);
    m.weights.setZero(p, a_max);
    m.loadings.setZero(p, a_max);
    m.q.setZero(a_max);
    m.scores.setZero(n, a_max);

    double y_scale = yc.norm();
    Eigen::Index a = 0;
    for (; a < a_max; ++a) {
        // NIPALS inner iteration; with a single target u stays proportional to
        // the y residual, so the weight vector converges on the first pass.
        Eigen::VectorXd u = yc;
        if (u.norm() <= kNipalsTol * std::max(y_scale, 1.0)) break; // y exhausted
        Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
        Eigen::VectorXd t;
        for (int it = 0; it < kNipalsMaxIter; ++it) {
            Eigen::VectorXd w_new = xc.transpose() * u;
            double wn = w_new.norm();
            if (wn <= 1e-14) break; // no covariance left
            w_new /= wn;
            double change = (w_new - w).norm();
            w = w_new;
            t = xc * w;
            if (change < kNipalsTol) break;
        }
        if (t.size() == 0) break;
        double tt = t.squaredNorm();
        if (tt <= 1e-28) break;
        double qa = yc.dot(t) / tt;
        Eigen::VectorXd pa = xc.transpose() * t / tt;

        m.weights.col(a) = w;
        m.loadings.col(a) = pa;
        m.q(a) = qa;
        m.scores.col(a) = t;

        xc.noalias() -= t * pa.transpose();
        yc.noalias() -= qa * t;
    }
    m.n_used = static_cast<std::size_t>(a);

    if (m.n_used == 0) {
        m.coef = Eigen::VectorXd::Zero(p);
        m.weights.resize(p, 0);
        m.loadings.resize(p, 0);
        m.q.resize(0);
        m.scores.resize(n, 0);
        return m;
    }
    m.weights.conservativeResize(p, a);
    m.loadings.conservativeResize(p, a);
    m.q.conservativeResize(a);
    m.scores.conservativeResize(n, a);

    // B = W (P'W)^-1 q maps raw centered x to centered y
    Eigen::MatrixXd pw = m.loadings.transpose() * m.weights;
    m.coef = m.weights * pw.colPivHouseholderQr().solve(m.q);
    return m;
}

double plsr_predict(const PlsrModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.x_mean.size())
        throw std::runtime_error("plsr: feature count mismatch");
    return (x - model.x_mean).dot(model.coef) + model.y_mean;
}

Eigen::VectorXd plsr_predict(const PlsrModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.x_mean.size())
        throw std::runtime_error("plsr: feature count mismatch");
    return ((x.rowwise() - model.x_mean.transpose()) * model.coef).array() + model.y_mean;
}

wd::WideDeepModel build_mlp(const wd::ArchSpec& spec, std::size_t input_dim, wd::Task task,
                            std::uint64_t seed) {
    wd::WideDeepModel model = wd::build(spec, input_dim, task, seed);
    model.wide_enabled = false;
    return model;
}

MlpResult mlp_baseline(const wd::ArchSpec& spec, const wd::Dataset& train,
                       const wd::Dataset& val, wd::Task task, const nn::TrainConfig& config,
                       std::uint64_t seed) {
    MlpResult out{build_mlp(spec, static_cast<std::size_t>(train.x.rows()), task, seed), {}};
    out.history = wd::train_joint(out.model, train, val, config);
    return out;
}

} // namespace naswd::baselines
