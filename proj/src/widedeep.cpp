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

#include "naswd/widedeep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace naswd::wd {

void ArchSpec::validate() const {
    if (activation != nn::Activation::relu && activation != nn::Activation::sigmoid)
        throw std::runtime_error("arch spec: activation must be relu or sigmoid");
    if (units_per_layer < kUnitsMin || units_per_layer > kUnitsMax)
        throw std::runtime_error("arch spec: units outside [32, 512]");
    if (n_layers < kLayersMin || n_layers > kLayersMax)
        throw std::runtime_error("arch spec: layers outside [1, 3]");
    if (dropout_rate < 0.0 || dropout_rate > kDropoutMax)
        throw std::runtime_error("arch spec: dropout outside [0, 0.5]");
    if (learning_rate < kLrMin || learning_rate > kLrMax)
        throw std::runtime_error("arch spec: learning rate outside [1e-4, 1e-2]");
}

std::string to_string(Task t) {
    return t == Task::classify3 ? "classify3" : "regress1";
}

Task task_from_string(const std::string& s) {
    if (s == "classify3" || s == "classify") return Task::classify3;
    if (s == "regress1" || s == "regress") return Task::regress1;
    throw std::runtime_error("unknown task '" + s + "'");
}

std::size_t WideDeepModel::parameter_count() const {
    std::size_t n = 0;
    if (wide_enabled)
        n += static_cast<std::size_t>(wide.weights.size() + wide.bias.size()) + 2;
    for (const auto& layer : deep)
        n += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    return n;
}

WideDeepModel build_unchecked(const ArchSpec& spec, std::size_t input_dim, Task task,
                              std::uint64_t seed) {
    if (input_dim == 0) throw std::runtime_error("build: input_dim must be positive");
    WideDeepModel model;
    model.spec = spec;
    model.task = task;
    model.input_dim = input_dim;

    Rng rng(seed);
    Rng wide_rng = rng.fork("init-wide");
    Rng deep_rng = rng.fork("init-deep");
    std::size_t k = output_dim(task);

    model.wide = nn::make_dense(input_dim, k, nn::Activation::identity, wide_rng);
    std::size_t in = input_dim;
    for (std::size_t i = 0; i < spec.n_layers; ++i) {
        model.deep.push_back(nn::make_dense(in, spec.units_per_layer, spec.activation, deep_rng));
        in = spec.units_per_layer;
    }
    model.deep.push_back(nn::make_dense(in, k, nn::Activation::identity, deep_rng));
    model.combiner = Eigen::Vector2d::Ones();
    return model;
}

WideDeepModel build(const ArchSpec& spec, std::size_t input_dim, Task task,
                    std::uint64_t seed) {
    spec.validate();
    return build_unchecked(spec, input_dim, task, seed);
}

Eigen::MatrixXd predict_logits(const WideDeepModel& model, const Eigen::MatrixXd& x) {
    if (x.rows() != static_cast<Eigen::Index>(model.input_dim))
        throw std::runtime_error("predict: input dimension mismatch");
    Rng unused(0);
    Eigen::MatrixXd deep_out = forward(model.deep, x, nn::Mode::infer, 0.0, unused);
    if (!model.wide_enabled) return deep_out;
    Eigen::MatrixXd wide_out = model.wide.weights * x;
    wide_out.colwise() += model.wide.bias;
    return model.combiner(0) * wide_out + model.combiner(1) * deep_out;
}

Eigen::VectorXd predict_logits(const WideDeepModel& model, const Eigen::VectorXd& x) {
    Eigen::MatrixXd out = predict_logits(model, Eigen::MatrixXd(x));
    return out.col(0);
}

double predict_value(const WideDeepModel& model, const Eigen::VectorXd& x) {
    Eigen::VectorXd logits = predict_logits(model, x);
    if (model.task == Task::classify3) {
        int best = 0;
        for (int i = 1; i < logits.size(); ++i)
            if (logits(i) > logits(best)) best = i;
        return static_cast<double>(best);
    }
    return logits(0) * model.target_sd + model.target_mean;
}

Dataset Dataset::rows(const std::vector<std::size_t>& idx) const {
    Dataset out;
    out.x.resize(x.rows(), static_cast<Eigen::Index>(idx.size()));
    if (!labels.empty()) out.labels.resize(idx.size());
    if (force.size() > 0) out.force.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.x.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(idx[i]));
        if (!labels.empty()) out.labels[i] = labels[idx[i]];
        if (force.size() > 0)
            out.force(static_cast<Eigen::Index>(i)) = force(static_cast<Eigen::Index>(idx[i]));
    }
    return out;
}

Dataset dataset_from_table(const preproc::SpectraTable& table, preproc::Normalization norm,
                           const preproc::ZscoreStats* stats) {
    table.validate();
    if (table.rows.empty()) throw std::runtime_error("dataset: empty table");
    std::size_t d = table.bands(), n = table.rows.size();
    Dataset ds;
    ds.x.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(n));
    ds.labels.resize(n);
    ds.force.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        preproc::Spectrum s =
            preproc::normalize_spectrum(table.rows[i].spectrum, norm, stats);
        for (std::size_t b = 0; b < d; ++b)
            ds.x(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) = s.values[b];
        ds.labels[i] = static_cast<int>(table.rows[i].label);
        ds.force(static_cast<Eigen::Index>(i)) =
            table.rows[i].force_n ? *table.rows[i].force_n
                                  : std::numeric_limits<double>::quiet_NaN();
    }
    return ds;
}

namespace {

struct ParamBlocks {
    std::vector<nn::ParamView> views;
};

ParamBlocks make_views(WideDeepModel& m) {
    ParamBlocks pb;
    if (m.wide_enabled) {
        pb.views.emplace_back(m.wide.weights.data(), m.wide.weights.size());
        pb.views.emplace_back(m.wide.bias.data(), m.wide.bias.size());
    }
    for (auto& layer : m.deep) {
        pb.views.emplace_back(layer.weights.data(), layer.weights.size());
        pb.views.emplace_back(layer.bias.data(), layer.bias.size());
    }
    if (m.wide_enabled) pb.views.emplace_back(m.combiner.data(), m.combiner.size());
    return pb;
}

std::vector<double> flatten_params(WideDeepModel& m) {
    ParamBlocks pb = make_views(m);
    std::vector<double> out;
    for (const auto& v : pb.views) out.insert(out.end(), v.data(), v.data() + v.size());
    return out;
}

void unflatten_params(WideDeepModel& m, const std::vector<double>& flat) {
    ParamBlocks pb = make_views(m);
    std::size_t pos = 0;
    for (auto& v : pb.views) {
        std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                  flat.begin() + static_cast<std::ptrdiff_t>(pos + v.size()), v.data());
        pos += static_cast<std::size_t>(v.size());
    }
    if (pos != flat.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
}

// Forward both branches, compute loss, backprop into every parameter block
// (order must mirror make_views), optionally in train mode with dropout.
double joint_loss_and_grads(WideDeepModel& m, const Eigen::MatrixXd& x,
                            const std::vector<int>* labels, const Eigen::MatrixXd* target,
                            nn::Mode mode, Rng& dropout_rng,
                            std::vector<Eigen::ArrayXd>* grads_out) {
    nn::ForwardCache cache;
    Eigen::MatrixXd deep_out = forward(m.deep, x, mode, m.spec.dropout_rate, dropout_rng,
                                       grads_out ? &cache : nullptr);
    Eigen::MatrixXd wide_out;
    Eigen::MatrixXd combined;
    if (m.wide_enabled) {
        wide_out = m.wide.weights * x;
        wide_out.colwise() += m.wide.bias;
        combined = m.combiner(0) * wide_out + m.combiner(1) * deep_out;
    } else {
        combined = deep_out;
    }

    Eigen::MatrixXd g;
    double loss = labels ? nn::sparse_cce_loss(combined, *labels, g)
                         : nn::mse_loss(combined, *target, g);
    if (!grads_out) return loss;

    grads_out->clear();
    if (m.wide_enabled) {
        Eigen::MatrixXd gw = m.combiner(0) * g;
        Eigen::MatrixXd dW = gw * x.transpose();
        Eigen::VectorXd db = gw.rowwise().sum();
        grads_out->emplace_back(Eigen::Map<const Eigen::ArrayXd>(dW.data(), dW.size()));
        grads_out->emplace_back(Eigen::Map<const Eigen::ArrayXd>(db.data(), db.size()));
    }
    Eigen::MatrixXd gd = m.wide_enabled ? Eigen::MatrixXd(m.combiner(1) * g) : g;
    std::vector<nn::LayerGrads> deep_grads = nn::backward(m.deep, cache, gd);
    for (const auto& lg : deep_grads) {
        grads_out->emplace_back(
            Eigen::Map<const Eigen::ArrayXd>(lg.weights.data(), lg.weights.size()));
        grads_out->emplace_back(
            Eigen::Map<const Eigen::ArrayXd>(lg.bias.data(), lg.bias.size()));
    }
    if (m.wide_enabled) {
        Eigen::Array2d dc;
        dc(0) = (g.array() * wide_out.array()).sum();
        dc(1) = (g.array() * deep_out.array()).sum();
        grads_out->emplace_back(dc);
    }
    return loss;
}

} // namespace

double joint_loss(WideDeepModel& model, const Eigen::MatrixXd& x,
                  const std::vector<int>* labels, const Eigen::MatrixXd* targets,
                  std::vector<double>* grad_out) {
    if ((labels == nullptr) == (targets == nullptr))
        throw std::runtime_error("joint_loss: need exactly one of labels/targets");
    Rng unused(0);
    if (grad_out == nullptr)
        return joint_loss_and_grads(model, x, labels, targets, nn::Mode::infer, unused,
                                    nullptr);
    std::vector<Eigen::ArrayXd> grads;
    double loss = joint_loss_and_grads(model, x, labels, targets, nn::Mode::infer, unused,
                                       &grads);
    grad_out->clear();
    for (const auto& g : grads) grad_out->insert(grad_out->end(), g.data(), g.data() + g.size());
    return loss;
}

std::vector<double> get_params(WideDeepModel& model) { return flatten_params(model); }

void set_params(WideDeepModel& model, const std::vector<double>& flat) {
    unflatten_params(model, flat);
}

nn::TrainHistory train_joint(WideDeepModel& model, const Dataset& train, const Dataset& val,
                             const nn::TrainConfig& config) {
    if (train.size() == 0 || val.size() == 0)
        throw std::runtime_error("train_joint: empty train or validation set");
    if (train.x.rows() != static_cast<Eigen::Index>(model.input_dim))
        throw std::runtime_error("train_joint: input dimension mismatch");

    std::vector<int> train_labels, val_labels;
    Eigen::MatrixXd train_target, val_target;
    if (model.task == Task::classify3) {
        train_labels = train.labels;
        val_labels = val.labels;
        std::set<int> present(train_labels.begin(), train_labels.end());
        if (present.size() < 2)
            throw std::runtime_error("train_joint: single class in training data");
    } else {
        if (train.force.size() != train.x.cols() || val.force.size() != val.x.cols())
            throw std::runtime_error("train_joint: regression targets missing");
        if (!train.force.allFinite() || !val.force.allFinite())
            throw std::runtime_error("train_joint: non-finite regression target");
        model.target_mean = train.force.mean();
        double var = (train.force.array() - model.target_mean).square().mean();
        model.target_sd = std::sqrt(var);
        if (model.target_sd < 1e-12)
            throw std::runtime_error("train_joint: constant regression target");
        train_target = ((train.force.array() - model.target_mean) / model.target_sd)
                           .matrix()
                           .transpose();
        val_target =
            ((val.force.array() - model.target_mean) / model.target_sd).matrix().transpose();
    }

    Rng dropout_rng = Rng(config.seed).fork("dropout");
    ParamBlocks pb = make_views(model);
    nn::AdamState adam;
    std::vector<Eigen::ArrayXd> grads;

    nn::TrainProblem problem;
    problem.n_train = train.size();
    problem.train_step = [&](const std::vector<std::size_t>& rows) {
        Dataset batch = train.rows(rows);
        std::vector<int> blabels;
        Eigen::MatrixXd btarget;
        if (model.task == Task::classify3) {
            blabels.reserve(rows.size());
            for (std::size_t r : rows) blabels.push_back(train_labels[r]);
        } else {
            btarget.resize(1, static_cast<Eigen::Index>(rows.size()));
            for (std::size_t i = 0; i < rows.size(); ++i)
                btarget(0, static_cast<Eigen::Index>(i)) =
                    train_target(0, static_cast<Eigen::Index>(rows[i]));
        }
        double loss = joint_loss_and_grads(
            model, batch.x, model.task == Task::classify3 ? &blabels : nullptr,
            model.task == Task::classify3 ? nullptr : &btarget, nn::Mode::train, dropout_rng,
            &grads);
        std::vector<nn::GradView> gviews;
        gviews.reserve(grads.size());
        for (const auto& g : grads) gviews.emplace_back(g.data(), g.size());
        nn::adam_step(pb.views, gviews, adam, config.learning_rate);
        return loss;
    };
    problem.validation_loss = [&]() {
        return joint_loss_and_grads(model, val.x,
                                    model.task == Task::classify3 ? &val_labels : nullptr,
                                    model.task == Task::classify3 ? nullptr : &val_target,
                                    nn::Mode::infer, dropout_rng, nullptr);
    };
    problem.save_params = [&]() { return flatten_params(model); };
    problem.load_params = [&](const std::vector<double>& p) { unflatten_params(model, p); };

    return nn::train_loop(problem, config);
}

PixelGrid predict_cube(const WideDeepModel& model, const hsi::HyperCube& cube,
                       const preproc::Mask& mask) {
    if (cube.kind != hsi::CubeKind::reflectance)
        throw std::runtime_error("predict_cube: cube must hold reflectance");
    if (cube.bands != model.input_dim)
        throw std::runtime_error("predict_cube: band count mismatch");
    if (mask.lines != cube.lines || mask.samples != cube.samples)
        throw std::runtime_error("predict_cube: mask shape mismatch");

    PixelGrid grid;
    grid.lines = cube.lines;
    grid.samples = cube.samples;
    grid.present.assign(cube.lines * cube.samples, 0);
    grid.values.assign(cube.lines * cube.samples, 0.0);

    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        if (mask.bits[i]) pixels.push_back(i);

    const std::size_t chunk = 4096;
    Eigen::MatrixXd block(static_cast<Eigen::Index>(cube.bands), 0);
    const preproc::ZscoreStats* stats = model.zscore ? &*model.zscore : nullptr;
    std::vector<double> spec(cube.bands);
    for (std::size_t start = 0; start < pixels.size(); start += chunk) {
        std::size_t stop = std::min(start + chunk, pixels.size());
        block.resize(block.rows(), static_cast<Eigen::Index>(stop - start));
        for (std::size_t i = start; i < stop; ++i) {
            const double* px = cube.data.data() + pixels[i] * cube.bands;
            spec.assign(px, px + cube.bands);
            switch (model.normalization) {
            case preproc::Normalization::none:
                break;
            case preproc::Normalization::snv: {
                // dead/flat pixels inside a hole-filled mask carry no signal;
                // map them to the all-zero normalized spectrum instead of failing
                double mean = 0.0, var = 0.0;
                for (double v : spec) mean += v;
                mean /= static_cast<double>(spec.size());
                for (double v : spec) var += (v - mean) * (v - mean);
                double sd = std::sqrt(var / static_cast<double>(spec.size()));
                if (sd <= 1e-12) {
                    std::fill(spec.begin(), spec.end(), 0.0);
                } else {
                    for (double& v : spec) v = (v - mean) / sd;
                }
                break;
            }
            case preproc::Normalization::zscore: {
                if (!stats) throw std::runtime_error("predict_cube: missing zscore stats");
                for (std::size_t b = 0; b < spec.size(); ++b)
                    spec[b] = (spec[b] - stats->mean[b]) / stats->sd[b];
                break;
            }
            }
            for (std::size_t b = 0; b < cube.bands; ++b)
                block(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i - start)) =
                    spec[b];
        }
        Eigen::MatrixXd logits = predict_logits(model, block);
        for (std::size_t i = start; i < stop; ++i) {
            Eigen::Index c = static_cast<Eigen::Index>(i - start);
            double value;
            if (model.task == Task::classify3) {
                int best = 0;
                for (int r = 1; r < logits.rows(); ++r)
                    if (logits(r, c) > logits(best, c)) best = r;
                value = static_cast<double>(best);
            } else {
                value = logits(0, c) * model.target_sd + model.target_mean;
                value = std::clamp(value, 0.0, kForceCeiling);
            }
            grid.present[pixels[i]] = 1;
            grid.values[pixels[i]] = value;
        }
    }
    return grid;
}

namespace {

constexpr int kCheckpointVersion = 1;

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    char buf[32];
    out << m.rows() << ' ' << m.cols();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
            out << ' ' << buf;
        }
    out << '\n';
}

Eigen::MatrixXd read_matrix(std::istream& in) {
    Eigen::Index rows(0), cols(0);
    in >> rows >> cols;
    if (!in || rows < 0 || cols < 0) throw std::runtime_error("checkpoint: bad matrix header");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
        for (Eigen::Index r = 0; r < rows; ++r)
            if (!(in >> m(r, c))) throw std::runtime_error("checkpoint: truncated matrix");
    return m;
}

} // namespace

void save_checkpoint(const WideDeepModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    char buf[32];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "naswd-checkpoint " << kCheckpointVersion << "\n";
    out << "task " << to_string(model.task) << "\n";
    out << "arch " << nn::to_string(model.spec.activation) << ' ' << model.spec.units_per_layer
        << ' ' << model.spec.n_layers << ' ' << num(model.spec.dropout_rate) << ' '
        << num(model.spec.learning_rate) << "\n";
    out << "input_dim " << model.input_dim << "\n";
    out << "wide_enabled " << (model.wide_enabled ? 1 : 0) << "\n";
    out << "normalization " << preproc::to_string(model.normalization) << "\n";
    if (model.zscore) {
        out << "zscore " << model.zscore->mean.size();
        for (double v : model.zscore->mean) out << ' ' << num(v);
        for (double v : model.zscore->sd) out << ' ' << num(v);
        out << "\n";
    }
    out << "target " << num(model.target_mean) << ' ' << num(model.target_sd) << "\n";
    out << "combiner " << num(model.combiner(0)) << ' ' << num(model.combiner(1)) << "\n";
    out << "wide ";
    write_matrix(out, model.wide.weights);
    out << "wide_bias ";
    write_matrix(out, model.wide.bias);
    out << "deep " << model.deep.size() << "\n";
    for (const auto& layer : model.deep) {
        out << "layer " << nn::to_string(layer.activation) << ' ';
        write_matrix(out, layer.weights);
        out << "bias ";
        write_matrix(out, layer.bias);
    }
    if (!out) throw std::runtime_error("write failure on " + path.string());
}

WideDeepModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "naswd-checkpoint" || version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unrecognized format in " + path.string());

    WideDeepModel m;
    std::string word;
    in >> tag >> word;
    if (tag != "task") throw std::runtime_error("checkpoint: expected task");
    m.task = task_from_string(word);
    in >> tag >> word;
    if (tag != "arch") throw std::runtime_error("checkpoint: expected arch");
    m.spec.activation = nn::activation_from_string(word);
    in >> m.spec.units_per_layer >> m.spec.n_layers >> m.spec.dropout_rate >>
        m.spec.learning_rate;
    in >> tag >> m.input_dim;
    if (tag != "input_dim") throw std::runtime_error("checkpoint: expected input_dim");
    int wide_flag = 1;
    in >> tag >> wide_flag;
    if (tag != "wide_enabled") throw std::runtime_error("checkpoint: expected wide_enabled");
    m.wide_enabled = wide_flag != 0;
    in >> tag >> word;
    if (tag != "normalization") throw std::runtime_error("checkpoint: expected normalization");
    m.normalization = preproc::normalization_from_string(word);
    in >> tag;
    if (tag == "zscore") {
        std::size_t n = 0;
        in >> n;
        preproc::ZscoreStats st;
        st.mean.resize(n);
        st.sd.resize(n);
        for (double& v : st.mean) in >> v;
        for (double& v : st.sd) in >> v;
        m.zscore = std::move(st);
        in >> tag;
    }
    if (tag != "target") throw std::runtime_error("checkpoint: expected target");
    in >> m.target_mean >> m.target_sd;
    in >> tag >> m.combiner(0) >> m.combiner(1);
    if (tag != "combiner") throw std::runtime_error("checkpoint: expected combiner");
    in >> tag;
    if (tag != "wide") throw std::runtime_error("checkpoint: expected wide");
    m.wide.weights = read_matrix(in);
    in >> tag;
    if (tag != "wide_bias") throw std::runtime_error("checkpoint: expected wide_bias");
    m.wide.bias = read_matrix(in);
    m.wide.activation = nn::Activation::identity;
    std::size_t n_layers = 0;
    in >> tag >> n_layers;
    if (tag != "deep") throw std::runtime_error("checkpoint: expected deep");
    for (std::size_t i = 0; i < n_layers; ++i) {
        nn::DenseLayer layer;
        in >> tag >> word;
        if (tag != "layer") throw std::runtime_error("checkpoint: expected layer");
        layer.activation = nn::activation_from_string(word);
        layer.weights = read_matrix(in);
        in >> tag;
        if (tag != "bias") throw std::runtime_error("checkpoint: expected bias");
        layer.bias = read_matrix(in);
        m.deep.push_back(std::move(layer));
    }
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path.string());
    return m;
}

} // namespace naswd::wd
