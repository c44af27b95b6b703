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

#include "naswd/eval.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "naswd/stats.hpp"

namespace naswd::eval {

std::vector<std::size_t> FoldSplit::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) rows.push_back(i);
    return rows;
}

std::vector<std::size_t> FoldSplit::complement_rows(std::size_t fold) const {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) rows.push_back(i);
    return rows;
}

FoldSplit kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw std::runtime_error("kfold: k must be at least 2");
    if (n < k) throw std::runtime_error("kfold: fewer samples than folds");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng(seed).fork("kfold-shuffle");
    rng.shuffle(order);

    FoldSplit split;
    split.k = k;
    split.assignments.assign(n, 0);
    std::size_t base = n / k, extra = n % k;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < k; ++f) {
        std::size_t size = base + (f < extra ? 1 : 0);
        for (std::size_t i = 0; i < size; ++i) split.assignments[order[pos++]] = f;
    }
    return split;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts)
        for (std::size_t c : row) t += c;
    return t;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < kNumClasses; ++i) t += counts[i][i];
    return t;
}

ClassifResult classification_metrics(const std::vector<int>& preds,
                                     const std::vector<int>& labels,
                                     const std::vector<double>& fold_accuracies) {
    if (preds.size() != labels.size())
        throw std::runtime_error("classification_metrics: length mismatch");
    if (preds.empty()) throw std::runtime_error("classification_metrics: empty input");

    ClassifResult out;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        int t = labels[i], p = preds[i];
        if (t < 0 || t >= static_cast<int>(kNumClasses) || p < 0 ||
            p >= static_cast<int>(kNumClasses))
            throw std::runtime_error("classification_metrics: label outside {0,1,2}");
        ++out.confusion.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }

    double total = static_cast<double>(out.confusion.total());
    out.metrics.accuracy = static_cast<double>(out.confusion.trace()) / total;

    double wp = 0.0, wr = 0.0, wf = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double tp = static_cast<double>(out.confusion.counts[c][c]);
        double row = 0.0, col = 0.0;
        for (std::size_t j = 0; j < kNumClasses; ++j) {
            row += static_cast<double>(out.confusion.counts[c][j]);
            col += static_cast<double>(out.confusion.counts[j][c]);
        }
        if (row == 0.0) {
            out.metrics.absent_classes.push_back(static_cast<int>(c));
            continue; // weight 0; precision for the absent class defined as 0
        }
        double precision = col > 0.0 ? tp / col : 0.0;
        double recall = tp / row;
        double f1 = precision + recall > 0.0
                        ? 2.0 * precision * recall / (precision + recall)
                        : 0.0;
        double weight = row / total;
        wp += weight * precision;
        wr += weight * recall;
        wf += weight * f1;
    }
    out.metrics.precision = wp;
    out.metrics.recall = wr;
    out.metrics.f1 = wf;

    if (fold_accuracies.empty()) {
        out.metrics.ci_low = out.metrics.ci_high = out.metrics.accuracy;
        return out;
    }
    double mean = stats::mean(fold_accuracies);
    if (fold_accuracies.size() == 1) {
        out.metrics.ci_low = out.metrics.ci_high = std::clamp(mean, 0.0, 1.0);
        return out;
    }
    double sd = std::sqrt(stats::sample_variance(fold_accuracies));
    double k = static_cast<double>(fold_accuracies.size());
    double tq = stats::student_t_quantile(0.975, k - 1.0);
    double half = tq * sd / std::sqrt(k);
    out.metrics.ci_low = std::clamp(mean - half, 0.0, 1.0);
    out.metrics.ci_high = std::clamp(mean + half, 0.0, 1.0);
    return out;
}

RegrMetrics regression_metrics(const Eigen::VectorXd& preds, const Eigen::VectorXd& targets) {
    if (preds.size() != targets.size())
        throw std::runtime_error("regression_metrics: length mismatch");
    if (preds.size() < 2) throw std::runtime_error("regression_metrics: need >= 2 points");

    double n = static_cast<double>(preds.size());
    double pm = preds.mean(), tm = targets.mean();
    Eigen::ArrayXd pd = preds.array() - pm;
    Eigen::ArrayXd td = targets.array() - tm;
    double ss_tot = td.square().sum();
    if (ss_tot <= 0.0) throw std::runtime_error("regression_metrics: zero target variance");
    double ss_pred = pd.square().sum();

    RegrMetrics m;
    if (ss_pred <= 0.0) {
        m.degenerate = true;
        m.r = 0.0;
    } else {
        m.r = (pd * td).sum() / std::sqrt(ss_pred * ss_tot);
    }
    double ss_res = (preds - targets).squaredNorm();
    m.r2 = 1.0 - ss_res / ss_tot;
    m.rmse = std::sqrt(ss_res / n);
    m.rmse_std = m.rmse / std::sqrt(ss_tot / n);
    return m;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw std::runtime_error("anova: need at least 2 groups");
    std::size_t n_total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw std::runtime_error("anova: each group needs >= 2 values");
        n_total += g.size();
        grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
    }
    double grand_mean = grand_sum / static_cast<double>(n_total);

    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double gm = stats::mean(g);
        ss_between += static_cast<double>(g.size()) * (gm - grand_mean) * (gm - grand_mean);
        for (double v : g) ss_within += (v - gm) * (v - gm);
    }
    if (ss_between + ss_within <= 0.0)
        throw std::runtime_error("anova: zero total variance");

    AnovaResult res;
    res.df_between = groups.size() - 1;
    res.df_within = n_total - groups.size();
    double ms_between = ss_between / static_cast<double>(res.df_between);
    double ms_within = ss_within / static_cast<double>(res.df_within);
    if (ms_within <= 0.0) {
        // groups internally constant but separated: evidence is unbounded
        res.f_stat = std::numeric_limits<double>::infinity();
        res.p_value = 0.0;
        return res;
    }
    res.f_stat = ms_between / ms_within;
    res.p_value = 1.0 - stats::f_cdf(res.f_stat, static_cast<double>(res.df_between),
                                     static_cast<double>(res.df_within));
    res.p_value = std::clamp(res.p_value, 0.0, 1.0);
    return res;
}

} // namespace naswd::eval
