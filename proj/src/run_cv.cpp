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

#include <json.hpp>

#include <fstream>
#include <set>

#include "naswd/eval.hpp"
#include "naswd/stats.hpp"

namespace naswd::eval {

std::string to_string(ModelFamily f) {
    switch (f) {
    case ModelFamily::naswd: return "naswd";
    case ModelFamily::mlp: return "mlp";
    case ModelFamily::plsr: return "plsr";
    }
    return "naswd";
}

ModelFamily family_from_string(const std::string& s) {
    if (s == "naswd") return ModelFamily::naswd;
    if (s == "mlp") return ModelFamily::mlp;
    if (s == "plsr") return ModelFamily::plsr;
    throw std::runtime_error("unknown model family '" + s + "'");
}

namespace {

preproc::SpectraTable subset(const preproc::SpectraTable& table,
                             const std::vector<std::size_t>& rows) {
    preproc::SpectraTable out;
    out.rows.reserve(rows.size());
    for (std::size_t r : rows) out.rows.push_back(table.rows[r]);
    return out;
}

std::vector<int> argmax_columns(const Eigen::MatrixXd& logits) {
    std::vector<int> out(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        int best = 0;
        for (int r = 1; r < logits.rows(); ++r)
            if (logits(r, c) > logits(best, c)) best = r;
        out[static_cast<std::size_t>(c)] = best;
    }
    return out;
}

} // namespace

EvalReport run_cv(const CvConfig& config, const preproc::SpectraTable& table) {
    table.validate();
    std::size_t n = table.rows.size();
    if (config.family == ModelFamily::plsr && config.task == wd::Task::classify3)
        throw std::runtime_error("run_cv: plsr supports the regression task only");
    if (config.task == wd::Task::regress1)
        for (const auto& row : table.rows)
            if (!row.force_n)
                throw std::runtime_error("run_cv: regression row without a force target");

    std::set<int> all_classes;
    if (config.task == wd::Task::classify3)
        for (const auto& row : table.rows) all_classes.insert(static_cast<int>(row.label));

    FoldSplit split = kfold_split(n, config.k, config.seed);
    Rng root(config.seed);

    EvalReport report;
    report.family = config.family;
    report.task = config.task;
    report.k_requested = config.k;
    report.seed = config.seed;
    report.spec = config.spec;
    report.plsr_components = config.plsr_components;

    std::vector<int> pooled_preds, pooled_labels;
    std::vector<double> pooled_force_pred, pooled_force_true, fold_rmses;

    for (std::size_t f = 0; f < config.k; ++f) {
        std::vector<std::size_t> val_rows = split.fold_rows(f);
        std::vector<std::size_t> train_rows = split.complement_rows(f);

        if (config.task == wd::Task::classify3) {
            std::set<int> present;
            for (std::size_t r : train_rows) present.insert(static_cast<int>(table.rows[r].label));
            if (present != all_classes) {
                report.skipped_folds.push_back(f);
                continue;
            }
        }

        preproc::SpectraTable train_t = subset(table, train_rows);
        preproc::SpectraTable val_t = subset(table, val_rows);

        preproc::ZscoreStats stats;
        const preproc::ZscoreStats* stats_ptr = nullptr;
        if (config.normalization == preproc::Normalization::zscore) {
            std::vector<std::vector<double>> raw;
            raw.reserve(train_t.rows.size());
            for (const auto& row : train_t.rows) raw.push_back(row.spectrum.values);
            stats = preproc::fit_zscore(raw);
            stats_ptr = &stats;
        }
        wd::Dataset train_ds = wd::dataset_from_table(train_t, config.normalization, stats_ptr);
        wd::Dataset val_ds = wd::dataset_from_table(val_t, config.normalization, stats_ptr);

        Rng fold_rng = root.fork("fold-" + std::to_string(f));

        if (config.family == ModelFamily::plsr) {
            Eigen::MatrixXd x = train_ds.x.transpose();
            std::size_t bound = static_cast<std::size_t>(
                std::min<Eigen::Index>(x.rows() - 1, x.cols()));
            std::size_t comps = std::min(config.plsr_components, bound);
            baselines::PlsrModel model = baselines::plsr_fit(x, train_ds.force, comps);
            Eigen::MatrixXd val_x = val_ds.x.transpose();
            Eigen::VectorXd preds = baselines::plsr_predict(model, val_x);
            double mse = (preds - val_ds.force).squaredNorm() /
                         static_cast<double>(preds.size());
            report.fold_scores.push_back(mse);
            fold_rmses.push_back(std::sqrt(mse));
            for (Eigen::Index i = 0; i < preds.size(); ++i) {
                pooled_force_pred.push_back(preds(i));
                pooled_force_true.push_back(val_ds.force(i));
            }
            continue;
        }

        nn::TrainConfig tc = config.train;
        tc.learning_rate = config.spec.learning_rate;
        tc.dropout_rate = config.spec.dropout_rate;
        tc.loss = config.task == wd::Task::classify3 ? nn::LossKind::sparse_cce
                                                     : nn::LossKind::mse;
        tc.seed = fold_rng.fork("train").seed();
        std::uint64_t init_seed = fold_rng.fork("init").seed();

        wd::WideDeepModel model =
            config.family == ModelFamily::naswd
                ? wd::build(config.spec, table.bands(), config.task, init_seed)
                : baselines::build_mlp(config.spec, table.bands(), config.task, init_seed);
        model.normalization = config.normalization;
        if (stats_ptr) model.zscore = stats;

        // The held-out fold doubles as the early-stopping validation split.
        wd::train_joint(model, train_ds, val_ds, tc);

        Eigen::MatrixXd logits = wd::predict_logits(model, val_ds.x);
        if (config.task == wd::Task::classify3) {
            std::vector<int> preds = argmax_columns(logits);
            std::size_t correct = 0;
            for (std::size_t i = 0; i < preds.size(); ++i) {
                pooled_preds.push_back(preds[i]);
                pooled_labels.push_back(val_ds.labels[i]);
                if (preds[i] == val_ds.labels[i]) ++correct;
            }
            report.fold_scores.push_back(static_cast<double>(correct) /
                                         static_cast<double>(preds.size()));
        } else {
            Eigen::VectorXd preds =
                (logits.row(0).transpose().array() * model.target_sd + model.target_mean)
                    .matrix();
            double mse =
                (preds - val_ds.force).squaredNorm() / static_cast<double>(preds.size());
            report.fold_scores.push_back(mse);
            fold_rmses.push_back(std::sqrt(mse));
            for (Eigen::Index i = 0; i < preds.size(); ++i) {
                pooled_force_pred.push_back(preds(i));
                pooled_force_true.push_back(val_ds.force(i));
            }
        }
    }

    report.k_effective = config.k - report.skipped_folds.size();
    if (report.k_effective == 0) throw std::runtime_error("run_cv: every fold was skipped");

    if (config.task == wd::Task::classify3) {
        ClassifResult res =
            classification_metrics(pooled_preds, pooled_labels, report.fold_scores);
        report.classif = res.metrics;
        report.confusion = res.confusion;
        report.objective = stats::mean(report.fold_scores);
    } else {
        Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(
            pooled_force_pred.data(), static_cast<Eigen::Index>(pooled_force_pred.size()));
        Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(
            pooled_force_true.data(), static_cast<Eigen::Index>(pooled_force_true.size()));
        report.regr = regression_metrics(p, t);
        report.fold_rmse_mean = stats::mean(fold_rmses);
        report.objective = -stats::mean(report.fold_scores);
    }
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::json j;
    j["family"] = to_string(report.family);
    j["task"] = wd::to_string(report.task);
    j["k_requested"] = report.k_requested;
    j["k_effective"] = report.k_effective;
    j["seed"] = report.seed;
    j["fold_scores"] = report.fold_scores;
    j["skipped_folds"] = report.skipped_folds;
    j["objective"] = report.objective;
    if (report.family == ModelFamily::plsr) {
        j["plsr_components"] = report.plsr_components;
    } else {
        j["spec"] = {{"activation", nn::to_string(report.spec.activation)},
                     {"units", report.spec.units_per_layer},
                     {"layers", report.spec.n_layers},
                     {"dropout", report.spec.dropout_rate},
                     {"learning_rate", report.spec.learning_rate}};
    }
    if (report.task == wd::Task::classify3) {
        nlohmann::json conf = nlohmann::json::array();
        for (const auto& row : report.confusion.counts) {
            nlohmann::json r = nlohmann::json::array();
            for (std::size_t c : row) r.push_back(c);
            conf.push_back(r);
        }
        j["classification"] = {{"accuracy", report.classif.accuracy},
                               {"precision", report.classif.precision},
                               {"recall", report.classif.recall},
                               {"f1", report.classif.f1},
                               {"ci", {report.classif.ci_low, report.classif.ci_high}},
                               {"absent_classes", report.classif.absent_classes},
                               {"confusion", conf}};
    } else {
        j["regression"] = {{"r", report.regr.r},
                           {"r2", report.regr.r2},
                           {"rmse", report.regr.rmse},
                           {"rmse_std", report.regr.rmse_std},
                           {"degenerate", report.regr.degenerate},
                           {"fold_rmse_mean", report.fold_rmse_mean}};
    }
    return j.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << report_to_json(report);
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

} // namespace naswd::eval
