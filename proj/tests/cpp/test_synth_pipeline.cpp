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

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "doctest.h"
#include "naswd/pipeline.hpp"
#include "test_support.hpp"

using namespace naswd;

namespace {

std::vector<std::size_t> blob_pixels(const preproc::Mask& m) {
    std::vector<std::size_t> px;
    for (std::size_t p = 0; p < m.bits.size(); ++p)
        if (m.bits[p]) px.push_back(p);
    return px;
}

// whole-blob mean spectra labeled by class, straight from the generator (no
// file round trip, no L*a*b* mask) so degraded settings can be probed too
preproc::SpectraTable truth_table(const synth::SyntheticSpec& spec, std::size_t per_class,
                                  std::uint64_t seed) {
    Rng root(seed);
    preproc::SpectraTable table;
    std::size_t index = 0;
    for (int cls = 0; cls < 3; ++cls) {
        for (std::size_t i = 0; i < per_class; ++i, ++index) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "s_%03zu", index);
            Rng sample_rng = root.fork(buf);
            synth::SampleCube sample = synth::make_sample(
                spec, static_cast<preproc::Severity>(cls), buf, sample_rng);
            preproc::SpectraRow row;
            row.sample_id = buf;
            row.region = preproc::Region::whole;
            row.label = static_cast<preproc::Severity>(cls);
            row.spectrum = preproc::mean_spectrum(sample.reflectance,
                                                  blob_pixels(sample.blob));
            table.rows.push_back(std::move(row));
        }
    }
    return table;
}

double cv_accuracy(const preproc::SpectraTable& table, std::uint64_t seed) {
    eval::CvConfig cfg;
    cfg.family = eval::ModelFamily::naswd;
    cfg.task = wd::Task::classify3;
    cfg.spec.units_per_layer = 32;
    cfg.spec.n_layers = 1;
    cfg.spec.learning_rate = 3e-3;
    cfg.k = 5;
    cfg.seed = seed;
    cfg.train.max_epochs = 150;
    cfg.train.patience = 15;
    return eval::run_cv(cfg, table).objective;
}

} // namespace

TEST_CASE("synth: spec validation") {
    synth::SyntheticSpec s;
    CHECK_NOTHROW(s.validate());
    synth::SyntheticSpec bad = s;
    bad.n_per_class = {0, 0, 0};
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = s;
    bad.bands = 7;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = s;
    bad.lines = 7;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = s;
    bad.coupling = -0.1;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = s;
    bad.coupling_lo_nm = 700.0; // empty window
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = s;
    bad.noise_sd = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    // arbitrarily harsh sensors are allowed
    bad = s;
    bad.noise_sd = 25.0;
    CHECK_NOTHROW(bad.validate());
}

TEST_CASE("synth: hardness draws sit on the reference distribution") {
    Rng rng(4);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        double v = synth::draw_hardness(preproc::Severity::NB, preproc::Region::cranial, rng);
        CHECK(v >= 0.0);
        sum += v;
    }
    // NB cranial reference: mean 7.02, sd 2.23 -> SE of the mean 0.0223
    CHECK(std::abs(sum / n - 7.02) < 0.1);

    // truncation keeps every class and region nonnegative
    Rng rng2(5);
    for (int cls = 0; cls < 3; ++cls)
        for (auto region : {preproc::Region::whole, preproc::Region::cranial,
                            preproc::Region::medial, preproc::Region::caudal})
            for (int i = 0; i < 200; ++i)
                CHECK(synth::draw_hardness(static_cast<preproc::Severity>(cls), region, rng2) >=
                      0.0);
}

TEST_CASE("synth: class archetypes are plausible reflectances that differ in shape") {
    double max_gap = 0.0;
    for (double nm = 397.0; nm <= 1005.0; nm += 10.0) {
        for (int cls = 0; cls < 3; ++cls) {
            double v = synth::archetype_reflectance(static_cast<preproc::Severity>(cls), nm);
            CHECK(v > 0.2);
            CHECK(v < 1.0);
        }
        max_gap = std::max(max_gap,
                           std::abs(synth::archetype_reflectance(preproc::Severity::NB, nm) -
                                    synth::archetype_reflectance(preproc::Severity::SWB, nm)));
    }
    CHECK(max_gap > 0.02);
}

TEST_CASE("synth: noiseless samples reproduce the archetype exactly") {
    synth::SyntheticSpec spec;
    spec.n_per_class = {1, 1, 1};
    spec.bands = 32;
    spec.lines = 16;
    spec.samples = 16;
    spec.coupling = 0.0;
    spec.noise_sd = 0.0;
    spec.gain_sd = 0.0;
    spec.illumination_jitter = 0.0;

    Rng rng(9);
    Rng fork = rng.fork("one");
    synth::SampleCube s = synth::make_sample(spec, preproc::Severity::MWB, "one", fork);
    CHECK(s.truth.id == "one");
    CHECK(s.truth.label == preproc::Severity::MWB);
    for (double f : {s.truth.whole_n, s.truth.cranial_n, s.truth.medial_n, s.truth.caudal_n})
        CHECK(f > 0.0);

    std::vector<std::size_t> px = blob_pixels(s.blob);
    REQUIRE(px.size() > 20);
    CHECK(px.size() < 16 * 16 / 2); // the blob never swallows the frame
    const auto& cube = s.reflectance;
    for (std::size_t b = 0; b < spec.bands; ++b) {
        double expected = synth::archetype_reflectance(preproc::Severity::MWB,
                                                       cube.axis.wavelengths_nm[b]);
        for (std::size_t p : px) CHECK(cube.data[p * spec.bands + b] == expected);
    }
    // background is flat low reflectance
    for (std::size_t p = 0; p < s.blob.bits.size(); ++p)
        if (!s.blob.bits[p]) CHECK(cube.data[p * spec.bands] == doctest::Approx(0.03));
}

TEST_CASE("synth: hardness coupling is confined to its wavelength window") {
    synth::SyntheticSpec spec;
    spec.n_per_class = {1, 1, 1};
    spec.bands = 64;
    spec.lines = 16;
    spec.samples = 16;
    spec.coupling = 0.05;
    spec.noise_sd = 0.0;
    spec.gain_sd = 0.0;
    spec.illumination_jitter = 0.0;

    Rng rng(10);
    Rng fork = rng.fork("cpl");
    synth::SampleCube s = synth::make_sample(spec, preproc::Severity::SWB, "cpl", fork);
    preproc::RegionPartition part = preproc::partition_regions(s.blob);
    REQUIRE(part.cranial.size() > 0);
    REQUIRE(part.medial.size() > 0);
    // regional forces differ almost surely under the reference draws
    REQUIRE(s.truth.cranial_n != s.truth.medial_n);

    std::size_t p_cr = part.cranial[0], p_md = part.medial[0];
    bool differs_inside = false;
    for (std::size_t b = 0; b < spec.bands; ++b) {
        double nm = s.reflectance.axis.wavelengths_nm[b];
        double d = s.reflectance.data[p_cr * spec.bands + b] -
                   s.reflectance.data[p_md * spec.bands + b];
        if (nm <= spec.coupling_lo_nm || nm >= spec.coupling_hi_nm)
            CHECK(d == 0.0); // outside the window regions are indistinguishable
        else if (std::abs(d) > 1e-9)
            differs_inside = true;
    }
    CHECK(differs_inside);
}

TEST_CASE("synth: dataset generation is byte deterministic") {
    synth::SyntheticSpec spec;
    spec.n_per_class = {2, 2, 2};
    spec.bands = 16;
    spec.lines = 16;
    spec.samples = 16;
    spec.seed = 7;

    auto dir_a = tsup::temp_dir("synth_det_a");
    auto dir_b = tsup::temp_dir("synth_det_b");
    synth::SynthResult a = synth::synth_dataset(spec, dir_a);
    synth::SynthResult b = synth::synth_dataset(spec, dir_b);

    REQUIRE(a.truths.size() == 6);
    REQUIRE(a.cube_headers.size() == 6);
    CHECK(a.truths[0].id == "sample_000");
    CHECK(a.truths[5].id == "sample_005");
    CHECK(a.truths[0].label == preproc::Severity::NB);
    CHECK(a.truths[2].label == preproc::Severity::MWB);
    CHECK(a.truths[5].label == preproc::Severity::SWB);

    for (const char* name : {"labels.csv", "synth_spec.json", "dark.hdr", "dark.raw",
                             "white.hdr", "white.raw", "sample_000.hdr", "sample_000.raw",
                             "sample_005.raw"}) {
        CAPTURE(name);
        REQUIRE(std::filesystem::exists(dir_a / name));
        CHECK(tsup::read_bytes(dir_a / name) == tsup::read_bytes(dir_b / name));
    }

    SUBCASE("labels round trip bit-exactly") {
        std::vector<synth::SampleTruth> back = synth::read_labels_csv(a.labels_csv);
        REQUIRE(back.size() == a.truths.size());
        for (std::size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].id == a.truths[i].id);
            CHECK(back[i].label == a.truths[i].label);
            CHECK(back[i].whole_n == a.truths[i].whole_n);
            CHECK(back[i].cranial_n == a.truths[i].cranial_n);
            CHECK(back[i].medial_n == a.truths[i].medial_n);
            CHECK(back[i].caudal_n == a.truths[i].caudal_n);
        }
    }

    SUBCASE("a different seed changes the data") {
        synth::SyntheticSpec other = spec;
        other.seed = 8;
        auto dir_c = tsup::temp_dir("synth_det_c");
        synth::synth_dataset(other, dir_c);
        CHECK(tsup::read_bytes(dir_a / "labels.csv") !=
              tsup::read_bytes(dir_c / "labels.csv"));
    }
}

TEST_CASE("pipeline: outlier filter and task tables") {
    preproc::SpectraTable t;
    auto add = [&](preproc::Region region, std::optional<double> force) {
        preproc::SpectraRow r;
        r.sample_id = "r" + std::to_string(t.rows.size());
        r.region = region;
        r.label = preproc::Severity::NB;
        r.force_n = force;
        r.spectrum.values = {0.1, 0.2, 0.3};
        t.rows.push_back(std::move(r));
    };
    add(preproc::Region::whole, 5.0);
    add(preproc::Region::cranial, 5.0);
    add(preproc::Region::cranial, 10.8);
    add(preproc::Region::cranial, 10.81);
    add(preproc::Region::medial, 99.0);
    add(preproc::Region::cranial, std::nullopt);

    SUBCASE("ceiling keeps the boundary and drops strict exceedances") {
        pipeline::OutlierFilterResult res = pipeline::apply_outlier_filter(t, 10.8);
        CHECK(res.removed == 2); // 10.81 and 99.0
        CHECK(res.table.rows.size() == 4);
        for (const auto& row : res.table.rows)
            if (row.force_n) CHECK(*row.force_n <= 10.8);
    }

    SUBCASE("rows without force are never dropped") {
        pipeline::OutlierFilterResult res = pipeline::apply_outlier_filter(t, 0.5);
        bool kept_nullopt = false;
        for (const auto& row : res.table.rows)
            if (!row.force_n) kept_nullopt = true;
        CHECK(kept_nullopt);
    }

    SUBCASE("filter that removes everything throws") {
        preproc::SpectraTable hard;
        hard.rows = {t.rows[4]}; // rows with force 99 only
        CHECK_THROWS_AS((void)pipeline::apply_outlier_filter(hard, 10.0), std::runtime_error);
        CHECK_THROWS_AS((void)pipeline::apply_outlier_filter(t, 0.0), std::runtime_error);
    }

    SUBCASE("task tables pick the paper regions") {
        preproc::SpectraTable cls = pipeline::task_table(t, wd::Task::classify3);
        REQUIRE(cls.rows.size() == 1);
        CHECK(cls.rows[0].region == preproc::Region::whole);

        preproc::SpectraTable reg = pipeline::task_table(t, wd::Task::regress1);
        CHECK(reg.rows.size() == 3); // cranial rows at 5, 10.8 and the missing-force row
        for (const auto& row : reg.rows) {
            CHECK(row.region == preproc::Region::cranial);
            if (row.force_n) CHECK(*row.force_n <= 10.8);
        }
    }
}

TEST_CASE("pipeline: calibrate, mask, extract, train, map on generated files") {
    synth::SyntheticSpec spec;
    spec.n_per_class = {3, 3, 3};
    spec.bands = 40;
    spec.lines = 24;
    spec.samples = 24;
    spec.seed = 3;

    auto dir = tsup::temp_dir("pipeline_files");
    synth::SynthResult synth_out = synth::synth_dataset(spec, dir);

    // --- calibrate one cube ------------------------------------------------
    auto refl_hdr = dir / "sample_000_refl.hdr";
    pipeline::CalibrateSummary cal = pipeline::calibrate_file(
        synth_out.cube_headers[0], synth_out.dark_header, synth_out.white_header, refl_hdr);
    CHECK(cal.dead_pixels == 0);
    REQUIRE(std::filesystem::exists(refl_hdr));
    hsi::HyperCube refl = hsi::read_cube(refl_hdr);
    CHECK(refl.kind == hsi::CubeKind::reflectance);
    CHECK(refl.bands == 40);
    for (double v : refl.data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.05);
    }

    // --- mask the calibrated cube -------------------------------------------
    auto mask_png = dir / "sample_000_mask.png";
    auto rgb_png = dir / "sample_000_rgb.png";
    pipeline::MaskSummary ms =
        pipeline::mask_file(refl_hdr, preproc::ThresholdRules{}, mask_png, &rgb_png);
    CHECK(ms.total_pixels == 24 * 24);
    // the elliptical fillet fills roughly 30% of the frame
    CHECK(ms.kept_pixels > ms.total_pixels / 8);
    CHECK(ms.kept_pixels < ms.total_pixels * 6 / 10);
    REQUIRE(std::filesystem::exists(mask_png));
    REQUIRE(std::filesystem::exists(rgb_png));
    CHECK(preproc::read_mask_png(mask_png).count() == ms.kept_pixels);

    // masking a raw (uncalibrated) cube is rejected
    CHECK_THROWS_AS((void)pipeline::mask_file(synth_out.cube_headers[0],
                                              preproc::ThresholdRules{}, mask_png),
                    std::runtime_error);

    // --- extract spectra ------------------------------------------------------
    preproc::SpectraTable table = pipeline::extract_dataset(dir);
    REQUIRE(table.rows.size() == 4 * 9);
    CHECK(table.bands() == 40);
    for (std::size_t i = 0; i < synth_out.truths.size(); ++i) {
        const synth::SampleTruth& truth = synth_out.truths[i];
        const auto* rows = &table.rows[i * 4];
        CHECK(rows[0].region == preproc::Region::whole);
        CHECK(rows[1].region == preproc::Region::cranial);
        CHECK(rows[2].region == preproc::Region::medial);
        CHECK(rows[3].region == preproc::Region::caudal);
        for (int j = 0; j < 4; ++j) {
            CHECK(rows[j].sample_id == truth.id);
            CHECK(rows[j].label == truth.label);
        }
        CHECK(*rows[0].force_n == truth.whole_n);
        CHECK(*rows[1].force_n == truth.cranial_n);
        CHECK(*rows[2].force_n == truth.medial_n);
        CHECK(*rows[3].force_n == truth.caudal_n);
        // mean reflectance of fillet pixels stays in the plausible band
        for (double v : rows[0].spectrum.values) {
            CHECK(v > 0.05);
            CHECK(v < 1.05);
        }
    }

    // --- classification training with checkpoint round trip -----------------
    preproc::SpectraTable cls_rows = pipeline::task_table(table, wd::Task::classify3);
    REQUIRE(cls_rows.rows.size() == 9);
    pipeline::TrainOptions opt;
    opt.family = eval::ModelFamily::naswd;
    opt.task = wd::Task::classify3;
    opt.spec.units_per_layer = 32;
    opt.spec.n_layers = 1;
    opt.spec.learning_rate = 3e-3;
    opt.val_fraction = 0.25;
    opt.seed = 1;
    opt.train.max_epochs = 120;
    opt.train.patience = 15;
    auto ckpt_path = dir / "classify.ckpt";
    pipeline::TrainSummary ts = pipeline::train_full(cls_rows, opt, ckpt_path);
    CHECK(ts.val_metric >= 0.0);
    CHECK(ts.val_metric <= 1.0);
    REQUIRE(std::filesystem::exists(ckpt_path));

    wd::WideDeepModel restored = wd::load_checkpoint(ckpt_path);
    CHECK(restored.task == wd::Task::classify3);
    CHECK(restored.input_dim == 40);

    // --- plsr regression training with checkpoint round trip ----------------
    preproc::SpectraTable reg_rows = pipeline::task_table(table, wd::Task::regress1);
    REQUIRE(reg_rows.rows.size() >= 4);
    for (const auto& row : reg_rows.rows) {
        CHECK(row.region == preproc::Region::cranial);
        CHECK(*row.force_n <= 10.8);
    }
    pipeline::TrainOptions popt;
    popt.family = eval::ModelFamily::plsr;
    popt.task = wd::Task::regress1;
    popt.plsr_components = 3;
    popt.val_fraction = 0.25;
    popt.seed = 2;
    auto plsr_path = dir / "force.plsr";
    pipeline::TrainSummary ps = pipeline::train_full(reg_rows, popt, plsr_path);
    CHECK(ps.val_metric >= 0.0);
    REQUIRE(std::filesystem::exists(plsr_path));

    pipeline::PlsrCheckpoint pc = pipeline::load_plsr(plsr_path);
    CHECK(pc.normalization == preproc::Normalization::snv);
    CHECK(pc.model.x_mean.size() == 40);
    // checkpoint text stores coefficients losslessly: predictions agree
    preproc::Spectrum norm = preproc::normalize_spectrum(reg_rows.rows[0].spectrum,
                                                         preproc::Normalization::snv);
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(
        norm.values.data(), static_cast<Eigen::Index>(norm.values.size()));
    double direct = baselines::plsr_predict(pc.model, x);
    CHECK(std::isfinite(direct));

    // --- per-pixel class map ---------------------------------------------------
    auto map_png = dir / "class_map.png";
    auto pct_csv = dir / "class_pct.csv";
    pipeline::MapSummary mp =
        pipeline::map_file(restored, refl_hdr, preproc::ThresholdRules{}, map_png, pct_csv);
    REQUIRE(std::filesystem::exists(map_png));
    REQUIRE(std::filesystem::exists(pct_csv));
    CHECK(mp.class_pct[0] + mp.class_pct[1] + mp.class_pct[2] ==
          doctest::Approx(100.0).epsilon(1e-9));
    std::string pct_text = tsup::read_text(pct_csv);
    CHECK(pct_text.rfind("category,percent\nNB,", 0) == 0);

    // map refuses raw cubes
    CHECK_THROWS_AS((void)pipeline::map_file(restored, synth_out.cube_headers[0],
                                             preproc::ThresholdRules{}, map_png, pct_csv),
                    std::runtime_error);

    // --- manifest ---------------------------------------------------------------
    pipeline::record_manifest(dir, "calibrate", {refl_hdr}, 0);
    pipeline::record_manifest(dir, "map", {map_png, pct_csv});
    nlohmann::json doc = nlohmann::json::parse(tsup::read_text(dir / "manifest.json"));
    REQUIRE(doc.contains("stages"));
    REQUIRE(doc["stages"].size() == 2);
    CHECK(doc["stages"][0]["stage"] == "calibrate");
    CHECK(doc["stages"][0]["seed"] == 0);
    CHECK(doc["stages"][1]["stage"] == "map");
    CHECK(doc["stages"][1]["artifacts"].size() == 2);
    CHECK_FALSE(doc["stages"][1].contains("seed"));
}

TEST_CASE("synth: generator separability is real but bounded") {
    synth::SyntheticSpec spec;
    spec.bands = 60;
    spec.lines = 24;
    spec.samples = 24;
    spec.gain_sd = 0.0;
    spec.illumination_jitter = 0.0;

    SUBCASE("clean spectra are nearly perfectly classifiable") {
        synth::SyntheticSpec clean = spec;
        clean.coupling = 0.05;
        clean.noise_sd = 0.001;
        preproc::SpectraTable table = truth_table(clean, 18, 100);
        CHECK(cv_accuracy(table, 0) >= 0.95);
    }

    SUBCASE("sensor noise far beyond the signal drives accuracy to chance") {
        synth::SyntheticSpec fog = spec;
        fog.coupling = 0.0;
        fog.noise_sd = 25.0;
        double total = 0.0;
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            preproc::SpectraTable table = truth_table(fog, 18, 200 + seed);
            double acc = cv_accuracy(table, seed);
            CHECK(acc > 0.10); // no fold collapses pathologically
            CHECK(acc < 0.62);
            total += acc;
        }
        double mean_acc = total / 5.0;
        CHECK(mean_acc > 1.0 / 3.0 - 0.05);
        CHECK(mean_acc < 1.0 / 3.0 + 0.05);
    }
}
