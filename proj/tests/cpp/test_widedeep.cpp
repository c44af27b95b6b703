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

#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "naswd/widedeep.hpp"
#include "test_support.hpp"

using namespace naswd;
using namespace naswd::wd;

namespace {

// reference spectra table for training tests: three separated class levels
preproc::SpectraTable class_table(std::size_t per_class, std::size_t bands,
                                  std::uint64_t seed) {
    return tsup::toy_table(per_class, bands, 0.02, seed);
}

Dataset to_dataset(const preproc::SpectraTable& t) {
    return dataset_from_table(t, preproc::Normalization::snv);
}

} // namespace

TEST_CASE("widedeep: build shapes and parameter accounting") {
    ArchSpec spec;
    spec.activation = nn::Activation::relu;
    spec.units_per_layer = 32;
    spec.n_layers = 1;
    spec.dropout_rate = 0.0;
    spec.learning_rate = 1e-3;

    SUBCASE("parameter count arithmetic for d=224, classify3") {
        WideDeepModel m = build(spec, 224, Task::classify3, 1);
        std::size_t wide = 3 * 224 + 3;
        std::size_t deep = (224 * 32 + 32) + (32 * 3 + 3);
        CHECK(m.parameter_count() == wide + deep + 2);
        CHECK(get_params(m).size() == m.parameter_count());
        CHECK(m.combiner(0) == 1.0);
        CHECK(m.combiner(1) == 1.0);
    }

    SUBCASE("n_layers=3 builds exactly 3 hidden layers plus the head") {
        ArchSpec s3 = spec;
        s3.n_layers = 3;
        WideDeepModel m = build(s3, 50, Task::regress1, 1);
        CHECK(m.deep.size() == 4);
        CHECK(m.deep.back().activation == nn::Activation::identity);
        CHECK(m.deep.back().weights.rows() == 1); // regress1 head K=1
        CHECK(m.wide.weights.rows() == 1);
    }

    SUBCASE("out-of-range specs are rejected by build, allowed by build_unchecked") {
        ArchSpec bad = spec;
        bad.dropout_rate = 0.6;
        CHECK_THROWS_AS((void)build(bad, 10, Task::classify3, 1), std::runtime_error);
        bad = spec;
        bad.units_per_layer = 16;
        CHECK_THROWS_AS((void)build(bad, 10, Task::classify3, 1), std::runtime_error);
        CHECK_NOTHROW((void)build_unchecked(bad, 10, Task::classify3, 1));
        bad = spec;
        bad.learning_rate = 0.5;
        CHECK_THROWS_AS(bad.validate(), std::runtime_error);
        bad = spec;
        bad.n_layers = 4;
        CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    }
}

TEST_CASE("widedeep: combiner algebra") {
    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 2;
    WideDeepModel m = build(spec, 12, Task::classify3, 7);
    Rng rng(3);
    Eigen::VectorXd x(12);
    for (int i = 0; i < 12; ++i) x(i) = rng.normal();

    SUBCASE("zeroed deep branch leaves the pure wide model") {
        WideDeepModel z = m;
        for (auto& layer : z.deep) {
            layer.weights.setZero();
            layer.bias.setZero();
        }
        z.combiner << 1.7, 0.4;
        Eigen::VectorXd got = predict_logits(z, x);
        Eigen::VectorXd wide = 1.7 * (z.wide.weights * x + z.wide.bias);
        CHECK((got - wide).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("a_w = 0 leaves the pure deep model") {
        WideDeepModel d = m;
        d.combiner << 0.0, 0.9;
        Eigen::VectorXd got = predict_logits(d, x);
        Rng unused(0);
        Eigen::MatrixXd deep_out =
            nn::forward(d.deep, x, nn::Mode::infer, 0.0, unused);
        Eigen::VectorXd expect = 0.9 * deep_out.col(0);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("random model equals the independently recomputed branch sum") {
        Rng unused(0);
        Eigen::VectorXd wide = m.wide.weights * x + m.wide.bias;
        Eigen::VectorXd deep =
            nn::forward(m.deep, x, nn::Mode::infer, 0.0, unused).col(0);
        Eigen::VectorXd expect = m.combiner(0) * wide + m.combiner(1) * deep;
        Eigen::VectorXd got = predict_logits(m, x);
        CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-12);

        // batch form agrees with the vector form
        Eigen::MatrixXd xb(12, 3);
        xb << x, 2.0 * x, -x;
        Eigen::MatrixXd batch = predict_logits(m, xb);
        for (int c = 0; c < 3; ++c) {
            Eigen::VectorXd one = predict_logits(m, Eigen::VectorXd(xb.col(c)));
            CHECK((batch.col(c) - one).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
}

TEST_CASE("widedeep: joint loss gradients match finite differences (small)") {
    ArchSpec spec;
    spec.units_per_layer = 8;
    spec.n_layers = 2;
    Rng rng(11);
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 5);

    for (int pass = 0; pass < 2; ++pass) {
        Task task = pass == 0 ? Task::classify3 : Task::regress1;
        WideDeepModel m = build_unchecked(spec, 6, task, 21);
        std::vector<int> labels = {0, 1, 2, 1, 0};
        Eigen::MatrixXd targets(1, 5);
        targets << 0.2, -0.4, 1.0, 0.0, 0.5;
        const std::vector<int>* lp = task == Task::classify3 ? &labels : nullptr;
        const Eigen::MatrixXd* tp = task == Task::regress1 ? &targets : nullptr;

        std::vector<double> grad;
        (void)joint_loss(m, x, lp, tp, &grad);
        std::vector<double> params = get_params(m);
        REQUIRE(grad.size() == params.size());

        const double h = 1e-5;
        double max_rel = 0.0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            std::vector<double> p = params;
            p[i] = params[i] + h;
            set_params(m, p);
            double up = joint_loss(m, x, lp, tp);
            p[i] = params[i] - h;
            set_params(m, p);
            double dn = joint_loss(m, x, lp, tp);
            double fd = (up - dn) / (2.0 * h);
            double rel = std::abs(fd - grad[i]) /
                         std::max({1e-6, std::abs(fd), std::abs(grad[i])});
            max_rel = std::max(max_rel, rel);
        }
        set_params(m, params);
        CHECK(max_rel < 1e-4);
    }
}

TEST_CASE("widedeep: joint training moves wide, deep, and combiner together") {
    auto table = class_table(4, 16, 5);
    Dataset ds = to_dataset(table);

    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 1;
    spec.learning_rate = 1e-3;
    WideDeepModel m = build(spec, 16, Task::classify3, 9);

    std::vector<double> before = get_params(m);
    nn::TrainConfig cfg;
    cfg.learning_rate = 1e-3;
    cfg.max_epochs = 1;
    cfg.patience = 0;
    cfg.seed = 2;
    cfg.loss = nn::LossKind::sparse_cce;
    (void)train_joint(m, ds, ds, cfg);
    std::vector<double> after = get_params(m);

    std::size_t wide_n = (std::size_t)(m.wide.weights.size() + m.wide.bias.size());
    double d_wide = 0.0, d_deep = 0.0, d_comb = 0.0;
    for (std::size_t i = 0; i < before.size(); ++i) {
        double d = std::abs(after[i] - before[i]);
        if (i < wide_n) d_wide += d;
        else if (i < before.size() - 2) d_deep += d;
        else d_comb += d;
    }
    CHECK(d_wide > 0.0);
    CHECK(d_deep > 0.0);
    CHECK(d_comb > 0.0);
}

TEST_CASE("widedeep: regression loss decreases on linear data with deep zeroed") {
    // duplicate-row dataset with a perfectly linear target; deep branch zeroed
    // at init leaves an effectively linear (convex) model
    const std::size_t n = 24, d = 6;
    Rng rng(8);
    preproc::SpectraTable table;
    Eigen::VectorXd beta(d);
    for (std::size_t i = 0; i < d; ++i) beta((Eigen::Index)i) = 0.5 - 0.1 * (double)i;
    for (std::size_t i = 0; i < n; ++i) {
        preproc::SpectraRow row;
        row.sample_id = "r" + std::to_string(i / 2); // duplicate every other row
        row.region = preproc::Region::cranial;
        row.label = preproc::Severity::NB;
        row.spectrum.values.resize(d);
        Eigen::VectorXd xv(d);
        Rng rowrng = rng.fork(i / 2);
        for (std::size_t b = 0; b < d; ++b) {
            xv((Eigen::Index)b) = rowrng.normal();
            row.spectrum.values[b] = xv((Eigen::Index)b);
        }
        row.force_n = 5.0 + beta.dot(xv);
        table.rows.push_back(std::move(row));
    }
    Dataset ds = dataset_from_table(table, preproc::Normalization::none);

    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 1;
    WideDeepModel m = build(spec, d, Task::regress1, 4);
    for (auto& layer : m.deep) {
        layer.weights.setZero();
        layer.bias.setZero();
    }

    nn::TrainConfig cfg;
    cfg.learning_rate = 5e-3;
    cfg.max_epochs = 10;
    cfg.patience = 10;
    cfg.seed = 6;
    cfg.loss = nn::LossKind::mse;
    nn::TrainHistory h = train_joint(m, ds, ds, cfg);
    REQUIRE(h.epochs.size() == 10);
    for (std::size_t e = 1; e < h.epochs.size(); ++e)
        CHECK(h.epochs[e].train_loss < h.epochs[e - 1].train_loss);
}

TEST_CASE("widedeep: training determinism and full-batch order invariance") {
    auto table = class_table(5, 12, 31);
    Dataset ds = to_dataset(table);

    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 1;

    auto train_once = [&](const Dataset& data) {
        WideDeepModel m = build(spec, 12, Task::classify3, 77);
        nn::TrainConfig cfg;
        cfg.learning_rate = 2e-3;
        cfg.max_epochs = 20;
        cfg.patience = 20;
        cfg.seed = 13;
        (void)train_joint(m, data, data, cfg);
        return get_params(m);
    };

    SUBCASE("same seed, same data -> bit-identical parameters") {
        CHECK(train_once(ds) == train_once(ds));
    }

    SUBCASE("full-batch gradients are row-order invariant") {
        std::vector<std::size_t> perm(ds.size());
        for (std::size_t i = 0; i < perm.size(); ++i)
            perm[i] = (i * 7 + 3) % perm.size(); // a fixed permutation
        Dataset shuffled = ds.rows(perm);

        WideDeepModel m = build(spec, 12, Task::classify3, 77);
        WideDeepModel m2 = m;
        std::vector<double> g1, g2;
        double l1 = joint_loss(m, ds.x, &ds.labels, nullptr, &g1);
        double l2 = joint_loss(m2, shuffled.x, &shuffled.labels, nullptr, &g2);
        CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
        for (std::size_t i = 0; i < g1.size(); ++i)
            CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-10));
    }
}

TEST_CASE("widedeep: per-pixel prediction grid") {
    auto table = class_table(6, 16, 2);
    Dataset ds = to_dataset(table);
    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 1;
    WideDeepModel m = build(spec, 16, Task::classify3, 15);
    nn::TrainConfig cfg;
    cfg.learning_rate = 3e-3;
    cfg.max_epochs = 150;
    cfg.patience = 150;
    cfg.seed = 1;
    (void)train_joint(m, ds, ds, cfg);

    SUBCASE("uniform cube gives one shared prediction") {
        // constant spectra have zero variance under snv; use a sloped fill
        auto cube = tsup::make_cube(4, 4, 16, hsi::CubeKind::reflectance,
                                    [](std::size_t, std::size_t, std::size_t b) {
                                        return 0.2 + 0.01 * (double)b;
                                    });
        preproc::Mask mask;
        mask.lines = 4;
        mask.samples = 4;
        mask.bits.assign(16, 1);
        PixelGrid grid = predict_cube(m, cube, mask);
        CHECK(grid.lines == 4);
        double first = grid.at(0, 0);
        for (std::size_t l = 0; l < 4; ++l)
            for (std::size_t s = 0; s < 4; ++s) {
                CHECK(grid.is_present(l, s));
                CHECK(grid.at(l, s) == first);
            }
    }

    SUBCASE("single masked pixel equals direct prediction on its spectrum") {
        naswd::Rng rng(9);
        auto cube = tsup::make_cube(3, 3, 16, hsi::CubeKind::reflectance,
                                    [&](std::size_t, std::size_t, std::size_t) {
                                        return rng.uniform(0.1, 0.9);
                                    });
        preproc::Mask mask;
        mask.lines = 3;
        mask.samples = 3;
        mask.bits.assign(9, 0);
        mask.set(1, 2, true);
        PixelGrid grid = predict_cube(m, cube, mask);
        std::size_t defined = 0;
        for (std::size_t l = 0; l < 3; ++l)
            for (std::size_t s = 0; s < 3; ++s)
                if (grid.is_present(l, s)) ++defined;
        CHECK(defined == 1);

        preproc::Spectrum sp;
        sp.values.resize(16);
        for (std::size_t b = 0; b < 16; ++b) sp.values[b] = cube.at(1, 2, b);
        preproc::Spectrum normed =
            preproc::normalize_spectrum(sp, m.normalization, nullptr);
        Eigen::VectorXd xv =
            Eigen::Map<const Eigen::VectorXd>(normed.values.data(), 16);
        CHECK(grid.at(1, 2) == doctest::Approx(predict_value(m, xv)).epsilon(1e-15));
    }

    SUBCASE("band mismatch throws") {
        auto cube = tsup::const_cube(2, 2, 8, hsi::CubeKind::reflectance, 0.4);
        preproc::Mask mask;
        mask.lines = 2;
        mask.samples = 2;
        mask.bits.assign(4, 1);
        CHECK_THROWS_AS((void)predict_cube(m, cube, mask), std::runtime_error);
    }

    SUBCASE("two spatial halves from two class archetypes classify per half") {
        naswd::Rng rng(14);
        auto cube = tsup::make_cube(6, 8, 16, hsi::CubeKind::reflectance,
                                    [&](std::size_t, std::size_t s, std::size_t b) {
                                        int cls = s < 4 ? 0 : 2;
                                        return tsup::toy_archetype(cls, b, 16) +
                                               0.02 * rng.normal();
                                    });
        preproc::Mask mask;
        mask.lines = 6;
        mask.samples = 8;
        mask.bits.assign(48, 1);
        PixelGrid grid = predict_cube(m, cube, mask);
        std::size_t left_ok = 0, right_ok = 0;
        for (std::size_t l = 0; l < 6; ++l)
            for (std::size_t s = 0; s < 8; ++s) {
                if (s < 4 && grid.at(l, s) == 0.0) ++left_ok;
                if (s >= 4 && grid.at(l, s) == 2.0) ++right_ok;
            }
        CHECK((double)left_ok >= 0.95 * 24);
        CHECK((double)right_ok >= 0.95 * 24);
    }
}

TEST_CASE("widedeep: regression predictions are de-standardized and clamped") {
    // fit y = 10 + 5 * mean(x) style data and check outputs are in Newtons
    preproc::SpectraTable table;
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        preproc::SpectraRow row;
        row.sample_id = "q" + std::to_string(i);
        row.region = preproc::Region::cranial;
        row.label = preproc::Severity::NB;
        row.spectrum.values.resize(10);
        double t = rng.uniform();
        for (std::size_t b = 0; b < 10; ++b)
            row.spectrum.values[b] = t + 0.05 * std::sin((double)b) + 0.01 * rng.normal();
        row.force_n = 4.0 + 8.0 * t;
        table.rows.push_back(std::move(row));
    }
    Dataset ds = dataset_from_table(table, preproc::Normalization::none);
    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 1;
    WideDeepModel m = build(spec, 10, Task::regress1, 6);
    nn::TrainConfig cfg;
    cfg.learning_rate = 5e-3;
    cfg.max_epochs = 300;
    cfg.patience = 300;
    cfg.seed = 4;
    cfg.loss = nn::LossKind::mse;
    (void)train_joint(m, ds, ds, cfg);

    CHECK(m.target_sd > 0.0);
    CHECK(m.target_mean == doctest::Approx(8.0).epsilon(0.25)); // mean of 4 + 8t

    double pred_mid = predict_value(m, ds.x.col(0));
    CHECK(pred_mid > 0.0);
    CHECK(pred_mid < kForceCeiling + 1e-9);
}

TEST_CASE("widedeep: checkpoint round trip") {
    auto dir = tsup::temp_dir("wd_ckpt");
    auto table = class_table(4, 10, 77);

    // fit zscore stats so the optional block is exercised
    std::vector<std::vector<double>> raw;
    for (const auto& row : table.rows) raw.push_back(row.spectrum.values);
    preproc::ZscoreStats stats = preproc::fit_zscore(raw);
    Dataset ds = dataset_from_table(table, preproc::Normalization::zscore, &stats);

    ArchSpec spec;
    spec.activation = nn::Activation::sigmoid;
    spec.units_per_layer = 33;
    spec.n_layers = 2;
    spec.dropout_rate = 0.125;
    spec.learning_rate = 2.5e-3;
    WideDeepModel m = build(spec, 10, Task::classify3, 19);
    m.normalization = preproc::Normalization::zscore;
    m.zscore = stats;
    nn::TrainConfig cfg;
    cfg.learning_rate = spec.learning_rate;
    cfg.max_epochs = 5;
    cfg.patience = 5;
    cfg.seed = 3;
    (void)train_joint(m, ds, ds, cfg);

    save_checkpoint(m, dir / "m.ckpt");
    WideDeepModel back = load_checkpoint(dir / "m.ckpt");

    CHECK(back.spec == m.spec);
    CHECK(back.task == m.task);
    CHECK(back.input_dim == m.input_dim);
    CHECK(back.normalization == m.normalization);
    CHECK(back.wide_enabled == m.wide_enabled);
    REQUIRE(back.zscore.has_value());
    CHECK(back.zscore->mean == stats.mean);
    CHECK(back.zscore->sd == stats.sd);
    CHECK(back.target_mean == m.target_mean);
    CHECK(back.target_sd == m.target_sd);
    CHECK(get_params(back) == get_params(m)); // bit-exact parameters

    Eigen::VectorXd x = ds.x.col(2);
    CHECK(predict_value(back, x) == predict_value(m, x));
}

TEST_CASE("widedeep: task strings and degenerate data") {
    CHECK(task_from_string("classify3") == Task::classify3);
    CHECK(task_from_string("classify") == Task::classify3);
    CHECK(task_from_string("regress1") == Task::regress1);
    CHECK(task_from_string("regress") == Task::regress1);
    CHECK_THROWS_AS((void)task_from_string("rank"), std::runtime_error);
    CHECK(to_string(Task::classify3) == "classify3");

    // single-class classification data is degenerate
    preproc::SpectraTable t;
    for (int i = 0; i < 6; ++i) {
        preproc::SpectraRow row;
        row.sample_id = "x" + std::to_string(i);
        row.label = preproc::Severity::NB;
        row.spectrum.values = {0.1 * i, 0.2, 0.3, 0.4};
        t.rows.push_back(row);
    }
    Dataset ds = dataset_from_table(t, preproc::Normalization::none);
    ArchSpec spec;
    spec.units_per_layer = 32;
    spec.n_layers = 1;
    WideDeepModel m = build(spec, 4, Task::classify3, 2);
    nn::TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.patience = 3;
    CHECK_THROWS_AS((void)train_joint(m, ds, ds, cfg), std::runtime_error);
}
