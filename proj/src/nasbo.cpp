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

#include "naswd/nasbo.hpp"

#include <json.hpp>

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "naswd/stats.hpp"

namespace naswd::bo {

namespace {

const double kLogLrMin = std::log(wd::kLrMin);
const double kLogLrMax = std::log(wd::kLrMax);

double unit_clamp(double v) { return std::clamp(v, 0.0, 1.0); }

std::size_t round_half_up(double v) {
    return static_cast<std::size_t>(std::floor(v + 0.5));
}

} // namespace

Encoded encode(const wd::ArchSpec& spec) {
    Encoded v;
    bool relu = spec.activation == nn::Activation::relu;
    v(0) = relu ? 1.0 : 0.0;
    v(1) = relu ? 0.0 : 1.0;
    v(2) = (static_cast<double>(spec.units_per_layer) - static_cast<double>(wd::kUnitsMin)) /
           static_cast<double>(wd::kUnitsMax - wd::kUnitsMin);
    v(3) = (static_cast<double>(spec.n_layers) - static_cast<double>(wd::kLayersMin)) /
           static_cast<double>(wd::kLayersMax - wd::kLayersMin);
    v(4) = spec.dropout_rate / wd::kDropoutMax;
    v(5) = (std::log(spec.learning_rate) - kLogLrMin) / (kLogLrMax - kLogLrMin);
    return v;
}

wd::ArchSpec decode(const Encoded& v) {
    wd::ArchSpec spec;
    spec.activation = v(0) >= v(1) ? nn::Activation::relu : nn::Activation::sigmoid;
    double units = static_cast<double>(wd::kUnitsMin) +
                   unit_clamp(v(2)) * static_cast<double>(wd::kUnitsMax - wd::kUnitsMin);
    spec.units_per_layer = std::clamp(round_half_up(units), wd::kUnitsMin, wd::kUnitsMax);
    double layers = static_cast<double>(wd::kLayersMin) +
                    unit_clamp(v(3)) * static_cast<double>(wd::kLayersMax - wd::kLayersMin);
    spec.n_layers = std::clamp(round_half_up(layers), wd::kLayersMin, wd::kLayersMax);
    spec.dropout_rate = unit_clamp(v(4)) * wd::kDropoutMax;
    spec.learning_rate =
        std::clamp(std::exp(kLogLrMin + unit_clamp(v(5)) * (kLogLrMax - kLogLrMin)),
                   wd::kLrMin, wd::kLrMax);
    return spec;
}

Encoded snap(const Encoded& v) { return encode(decode(v)); }

// ---------------------------------------------------------------------- GP ---

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

double matern52(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const GpHyper& h) {
    double r2 = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
        double diff = (a(d) - b(d)) / std::exp(h.log_length(d));
        r2 += diff * diff;
    }
    double r = std::sqrt(r2);
    double s2 = std::exp(2.0 * h.log_signal_sd);
    return s2 * (1.0 + kSqrt5 * r + 5.0 * r2 / 3.0) * std::exp(-kSqrt5 * r);
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, const GpHyper& h) {
    Eigen::Index n = x.rows();
    Eigen::MatrixXd k(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = matern52(x.row(i).transpose(), x.row(j).transpose(), h);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

constexpr double kJitterStart = 1e-8;
constexpr double kJitterMax = 1e-2;

// Cholesky with escalating jitter; returns false only past kJitterMax.
bool factorize(const Eigen::MatrixXd& k, double noise_var, Eigen::MatrixXd& l,
               double& jitter_used) {
    Eigen::Index n = k.rows();
    for (double jitter = kJitterStart; jitter <= kJitterMax * 1.0000001; jitter *= 10.0) {
        Eigen::MatrixXd a = k;
        a.diagonal().array() += noise_var + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(a);
        if (llt.info() == Eigen::Success) {
            l = llt.matrixL();
            jitter_used = jitter;
            return true;
        }
    }
    return false;
}

// log marginal likelihood of standardized targets under h; -inf on failure
double log_marginal(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GpHyper& h) {
    Eigen::MatrixXd l;
    double jitter = 0.0;
    if (!factorize(kernel_matrix(x, h), std::exp(2.0 * h.log_noise_sd), l, jitter))
        return -std::numeric_limits<double>::infinity();
    Eigen::VectorXd alpha = l.triangularView<Eigen::Lower>().solve(y);
    alpha = l.transpose().triangularView<Eigen::Upper>().solve(alpha);
    double lml = -0.5 * y.dot(alpha);
    lml -= l.diagonal().array().log().sum();
    lml -= 0.5 * static_cast<double>(x.rows()) * std::log(2.0 * M_PI);
    return lml;
}

struct HyperBounds {
    double lo, hi;
};

const HyperBounds kLengthBounds{std::log(1e-2), std::log(1e1)};
const HyperBounds kSignalBounds{std::log(1e-1), std::log(1e1)};
const HyperBounds kNoiseBounds{std::log(1e-8), std::log(1e0)};

GpHyper fit_hyper(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) {
    std::size_t d = static_cast<std::size_t>(x.cols());
    auto bounds_for = [&](std::size_t i) -> HyperBounds {
        if (i < d) return kLengthBounds;
        if (i == d) return kSignalBounds;
        return kNoiseBounds;
    };
    auto unpack = [&](const std::vector<double>& theta) {
        GpHyper h;
        h.log_length = Eigen::VectorXd(static_cast<Eigen::Index>(d));
        for (std::size_t i = 0; i < d; ++i) h.log_length(static_cast<Eigen::Index>(i)) = theta[i];
        h.log_signal_sd = theta[d];
        h.log_noise_sd = theta[d + 1];
        return h;
    };

    Rng rng = Rng(seed).fork("gp-hyper");
    std::vector<double> best_theta;
    double best_lml = -std::numeric_limits<double>::infinity();

    constexpr int kRestarts = 16;
    for (int restart = 0; restart < kRestarts; ++restart) {
        std::vector<double> theta(d + 2);
        if (restart == 0) {
            // conventional anchor start: unit scales, small noise
            for (std::size_t i = 0; i < d; ++i) theta[i] = std::log(0.5);
            theta[d] = std::log(1.0);
            theta[d + 1] = std::log(1e-3);
        } else {
            for (std::size_t i = 0; i < theta.size(); ++i) {
                HyperBounds b = bounds_for(i);
                theta[i] = rng.uniform(b.lo, b.hi);
            }
        }
        double cur = log_marginal(x, y, unpack(theta));

        double step = 1.0;
        int sweeps = 0;
        while (step > 0.02 && sweeps++ < 48) {
            bool improved = false;
            for (std::size_t i = 0; i < theta.size(); ++i) {
                HyperBounds b = bounds_for(i);
                for (double dir : {+1.0, -1.0}) {
                    double trial = std::clamp(theta[i] + dir * step, b.lo, b.hi);
                    if (trial == theta[i]) continue;
                    double saved = theta[i];
                    theta[i] = trial;
                    double lml = log_marginal(x, y, unpack(theta));
                    if (lml > cur + 1e-12) {
                        cur = lml;
                        improved = true;
                        break; // keep the move, rescan this coordinate next sweep
                    }
                    theta[i] = saved;
                }
            }
            if (!improved) step *= 0.5;
        }
        if (cur > best_lml) {
            best_lml = cur;
            best_theta = theta;
        }
    }
    if (best_theta.empty()) throw std::runtime_error("gp: hyperparameter search failed");
    return unpack(best_theta);
}

} // namespace

GpModel gp_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, std::uint64_t seed) {
    if (x.rows() != y.size()) throw std::runtime_error("gp_fit: x/y length mismatch");
    if (x.rows() < 2) throw std::runtime_error("gp_fit: need at least 2 points");

    // merge near-duplicate rows (targets averaged)
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> sums;
    std::vector<int> counts;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        Eigen::VectorXd r = x.row(i).transpose();
        bool merged = false;
        for (std::size_t j = 0; j < rows.size(); ++j) {
            if ((rows[j] - r).cwiseAbs().maxCoeff() <= 1e-9) {
                sums[j] += y(i);
                counts[j] += 1;
                merged = true;
                break;
            }
        }
        if (!merged) {
            rows.push_back(std::move(r));
            sums.push_back(y(i));
            counts.push_back(1);
        }
    }

    GpModel gp;
    gp.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    Eigen::VectorXd yd(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        gp.x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
        yd(static_cast<Eigen::Index>(i)) = sums[i] / counts[i];
    }

    gp.y_mean = yd.mean();
    double var = (yd.array() - gp.y_mean).square().mean();
    gp.y_sd = std::sqrt(var);
    if (gp.y_sd < 1e-12) gp.y_sd = 1.0; // constant targets standardize to zero
    gp.y_std = (yd.array() - gp.y_mean) / gp.y_sd;

    if (gp.x.rows() >= 2 && gp.y_std.cwiseAbs().maxCoeff() > 0.0) {
        gp.hyper = fit_hyper(gp.x, gp.y_std, seed);
    } else {
        gp.hyper.log_length = Eigen::VectorXd::Constant(gp.x.cols(), std::log(0.5));
        gp.hyper.log_signal_sd = 0.0;
        gp.hyper.log_noise_sd = std::log(1e-3);
    }

    double noise_var = std::exp(2.0 * gp.hyper.log_noise_sd);
    if (!factorize(kernel_matrix(gp.x, gp.hyper), noise_var, gp.chol_l, gp.jitter))
        throw std::runtime_error("gp: factorization failed at maximum jitter");
    gp.alpha = gp.chol_l.triangularView<Eigen::Lower>().solve(gp.y_std);
    gp.alpha = gp.chol_l.transpose().triangularView<Eigen::Upper>().solve(gp.alpha);
    gp.log_marginal = log_marginal(gp.x, gp.y_std, gp.hyper);
    return gp;
}

Posterior gp_posterior(const GpModel& gp, const Encoded& x) {
    Eigen::Index n = gp.x.rows();
    Eigen::VectorXd kstar(n);
    for (Eigen::Index i = 0; i < n; ++i)
        kstar(i) = matern52(gp.x.row(i).transpose(), x, gp.hyper);
    Posterior post;
    post.mean = kstar.dot(gp.alpha) * gp.y_sd + gp.y_mean;
    Eigen::VectorXd v = gp.chol_l.triangularView<Eigen::Lower>().solve(kstar);
    double var_std = std::exp(2.0 * gp.hyper.log_signal_sd) - v.squaredNorm();
    post.variance = std::max(var_std, 0.0) * gp.y_sd * gp.y_sd;
    return post;
}

double expected_improvement(double mean, double variance, double best_so_far) {
    double sigma = std::sqrt(std::max(variance, 0.0));
    double diff = mean - best_so_far;
    if (sigma <= 0.0) return std::max(0.0, diff);
    double z = diff / sigma;
    return diff * stats::norm_cdf(z) + sigma * stats::norm_pdf(z);
}

wd::ArchSpec propose_next(const GpModel* gp, double best_so_far, Rng& rng) {
    if (!gp || gp->x.rows() == 0) {
        Encoded v;
        for (Eigen::Index d = 0; d < v.size(); ++d) v(d) = rng.uniform();
        return decode(v);
    }
    wd::ArchSpec best_spec;
    double best_ei = -1.0;
    for (std::size_t i = 0; i < kProposalCandidates; ++i) {
        Encoded v;
        for (Eigen::Index d = 0; d < v.size(); ++d) v(d) = rng.uniform();
        wd::ArchSpec spec = decode(v);
        Encoded snapped = encode(spec);
        Posterior post = gp_posterior(*gp, snapped);
        double ei = expected_improvement(post.mean, post.variance, best_so_far);
        if (ei > best_ei) { // strict: ties keep the lowest candidate index
            best_ei = ei;
            best_spec = spec;
        }
    }
    return best_spec;
}

Encoded halton_point(std::size_t index) {
    constexpr std::array<unsigned, kEncodedDim> bases = {2, 3, 5, 7, 11, 13};
    Encoded v;
    for (std::size_t d = 0; d < kEncodedDim; ++d) {
        double f = 1.0, r = 0.0;
        std::size_t i = index;
        while (i > 0) {
            f /= bases[d];
            r += f * static_cast<double>(i % bases[d]);
            i /= bases[d];
        }
        v(static_cast<Eigen::Index>(d)) = r;
    }
    return v;
}

SearchResult bo_search(const Objective& objective, const SearchConfig& config) {
    if (config.n_init < 2) throw std::runtime_error("bo_search: n_init must be >= 2");
    if (config.budget < config.n_init)
        throw std::runtime_error("bo_search: budget must be >= n_init");

    Rng root(config.seed);
    Rng rotation_rng = root.fork("halton-rotation");
    Encoded rotation;
    for (Eigen::Index d = 0; d < rotation.size(); ++d) rotation(d) = rotation_rng.uniform();
    Rng propose_rng = root.fork("propose");

    SearchResult result;
    result.best.objective = -std::numeric_limits<double>::infinity();
    result.best.failed = true;

    auto run_trial = [&](const wd::ArchSpec& spec) {
        TrialRecord rec;
        rec.index = result.log.size();
        rec.spec = spec;
        auto t0 = std::chrono::steady_clock::now();
        TrialOutcome out = objective(spec);
        if (config.record_timings) {
            auto t1 = std::chrono::steady_clock::now();
            rec.seconds = std::chrono::duration<double>(t1 - t0).count();
        }
        if (std::isfinite(out.objective)) {
            rec.objective = out.objective;
            rec.fold_scores = out.fold_scores;
        } else {
            rec.objective = -std::numeric_limits<double>::infinity();
            rec.failed = true;
        }
        if (!rec.failed && rec.objective > result.best.objective) result.best = rec;
        result.log.push_back(std::move(rec));
    };

    for (std::size_t i = 0; i < config.n_init; ++i) {
        Encoded v = halton_point(i + 1);
        for (Eigen::Index d = 0; d < v.size(); ++d) {
            v(d) += rotation(d);
            v(d) -= std::floor(v(d)); // Cranley-Patterson rotation, stays in [0,1)
        }
        run_trial(decode(v));
    }

    while (result.log.size() < config.budget) {
        Eigen::MatrixXd x(0, static_cast<Eigen::Index>(kEncodedDim));
        std::vector<double> ys;
        for (const auto& rec : result.log) {
            if (rec.failed) continue;
            x.conservativeResize(x.rows() + 1, Eigen::NoChange);
            x.row(x.rows() - 1) = encode(rec.spec).transpose();
            ys.push_back(rec.objective);
        }
        wd::ArchSpec next;
        if (ys.size() >= 2) {
            Eigen::VectorXd y =
                Eigen::Map<const Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
            GpModel gp = gp_fit(x, y, root.seed());
            next = propose_next(&gp, result.best.objective, propose_rng);
        } else {
            next = propose_next(nullptr, 0.0, propose_rng);
        }
        run_trial(next);
    }

    if (result.best.failed) throw std::runtime_error("bo_search: every trial failed");
    return result;
}

// ----------------------------------------------------------------- logging ---

namespace {

nlohmann::json spec_to_json(const wd::ArchSpec& spec) {
    return {{"activation", nn::to_string(spec.activation)},
            {"units", spec.units_per_layer},
            {"layers", spec.n_layers},
            {"dropout", spec.dropout_rate},
            {"learning_rate", spec.learning_rate}};
}

wd::ArchSpec spec_from_json(const nlohmann::json& j) {
    wd::ArchSpec spec;
    spec.activation = nn::activation_from_string(j.at("activation").get<std::string>());
    spec.units_per_layer = j.at("units").get<std::size_t>();
    spec.n_layers = j.at("layers").get<std::size_t>();
    spec.dropout_rate = j.at("dropout").get<double>();
    spec.learning_rate = j.at("learning_rate").get<double>();
    return spec;
}

} // namespace

void write_trial_log(const std::vector<TrialRecord>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& rec : log) {
        nlohmann::json j = {{"trial", rec.index},
                            {"spec", spec_to_json(rec.spec)},
                            {"failed", rec.failed},
                            {"fold_scores", rec.fold_scores},
                            {"seconds", rec.seconds}};
        // -inf is not representable in JSON; failed trials carry null
        if (rec.failed) j["objective"] = nullptr;
        else j["objective"] = rec.objective;
        out << j.dump() << "\n";
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

std::vector<TrialRecord> read_trial_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<TrialRecord> log;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        TrialRecord rec;
        rec.index = j.at("trial").get<std::size_t>();
        rec.spec = spec_from_json(j.at("spec"));
        rec.failed = j.at("failed").get<bool>();
        rec.objective = rec.failed ? -std::numeric_limits<double>::infinity()
                                   : j.at("objective").get<double>();
        rec.fold_scores = j.at("fold_scores").get<std::vector<double>>();
        rec.seconds = j.at("seconds").get<double>();
        log.push_back(std::move(rec));
    }
    return log;
}

} // namespace naswd::bo
