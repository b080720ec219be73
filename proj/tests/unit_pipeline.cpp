/*
 * This file is part of mlho
 *
 * Copyright 2026 mlho developers
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "mlho/pipeline.hpp"
#include "mlho/synth.hpp"

using namespace mlho;

namespace {

// a quick profile over a small synthetic cohort
PipelineConfig fast_config() {
    PipelineConfig config;
    config.n_resamples = 2;
    config.cv_folds_phase1 = 3;
    config.cv_folds_phase2 = 3;
    config.msmr.mi_keep = 200;
    config.msmr.jmi_budget = 25;
    config.gbm.trees = {40};
    config.gbm.shrinkage = {0.1};
    config.gbm.depth = {2};
    config.enet.n_lambda = 12;
    config.seed = 314;
    config.jobs = 2;
    return config;
}

Cohort small_cohort(std::size_t n = 500, std::uint64_t seed = 99) {
    GeneratorSpec spec = GeneratorSpec::defaults();
    spec.n_patients = n;
    spec.seed = seed;
    auto [cohort, truth] = generate_cohort(spec);
    return apply_temporal_buffer(cohort, 14);
}

bool contains_feature(const std::vector<FeatureDescriptor>& list, const FeatureDescriptor& f) {
    return std::find(list.begin(), list.end(), f) != list.end();
}

}  // namespace

TEST_CASE("config round trips losslessly through its file format") {
    PipelineConfig original = fast_config();
    original.msmr.min_prevalence = 0.0123;
    original.outcomes = {Outcome::Hospitalization, Outcome::Death};
    original.feature_classes = {FeatureClass::Combined};
    original.union_mode = UnionMode::Pooled;
    original.split_mode = SplitMode::Simple;
    original.calibration_scheme = BinScheme::Quantile;
    original.synth.raw_effects[0].weight[2] = 0.3333333333333333;

    const std::string text = original.serialize();
    PipelineConfig reparsed = PipelineConfig::parse(text);
    CHECK(reparsed.serialize() == text);

    const auto path = std::filesystem::temp_directory_path() / "mlho_config.txt";
    original.save(path.string());
    PipelineConfig loaded = PipelineConfig::load(path.string());
    CHECK(loaded.serialize() == text);
    std::filesystem::remove(path);
}

TEST_CASE("config parser reports unknown keys and bad values") {
    CHECK_THROWS_WITH_AS(PipelineConfig::parse("nonsense_key=1\n"), doctest::Contains("nonsense_key"),
                         ConfigError);
    CHECK_THROWS_AS(PipelineConfig::parse("test_fraction=1.5\n"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::parse("outcomes=hosp,flu\n"), ConfigError);
    CHECK_THROWS_AS(PipelineConfig::parse("buffer_days"), ConfigError);
    // comments and blank lines are fine
    PipelineConfig c = PipelineConfig::parse("# comment\n\nbuffer_days=7\n");
    CHECK(c.buffer_days == 7);
}

TEST_CASE("phase 1 produces a full cell grid, ranking and unions") {
    Cohort cohort = small_cohort();
    PipelineConfig config = fast_config();
    Phase1Report report = run_phase1(cohort, config);

    // 4 outcomes x 2 iterations x 2 algorithms
    CHECK(report.cells.size() == 16);
    CHECK(report.ranking.size() == 2);
    CHECK(report.top_algorithms.size() == 2);
    std::set<std::string> names{report.top_algorithms.begin(), report.top_algorithms.end()};
    CHECK(names == std::set<std::string>{"gbm", "glmnet"});
    for (const auto& cell : report.cells) {
        CHECK(cell.auc > 0.0);
        CHECK(cell.auc < 1.0);
    }
    for (const auto& [oname, features] : report.union_features) CHECK(!features.empty());
    CHECK(!report.combined_union.empty());
    // the combined union covers each per-outcome union
    for (const auto& [oname, features] : report.union_features)
        for (const auto& f : features) CHECK(contains_feature(report.combined_union, f));
    // iteration-0 selection rows exported per outcome
    CHECK(report.selection_example.size() == 4);
}

TEST_CASE("phase 1 union grows monotonically with more resamples") {
    Cohort cohort = small_cohort();
    PipelineConfig config = fast_config();
    config.n_resamples = 1;
    Phase1Report one = run_phase1(cohort, config);
    config.n_resamples = 2;
    Phase1Report two = run_phase1(cohort, config);
    for (const auto& [oname, features] : one.union_features)
        for (const auto& f : features) CHECK(contains_feature(two.union_features.at(oname), f));
}

TEST_CASE("hyperparameter grids are tuned by cross-validation deterministically") {
    Cohort cohort = small_cohort(400, 321);
    PipelineConfig config = fast_config();
    config.n_resamples = 1;
    config.outcomes = {Outcome::Hospitalization};
    config.gbm.trees = {15, 40};
    config.gbm.depth = {1, 2};
    config.enet.alpha = {0.2, 0.9};
    Phase1Report a = run_phase1(cohort, config);
    Phase1Report b = run_phase1(cohort, config);
    REQUIRE(a.cells.size() == 2);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].auc == b.cells[i].auc);
}

TEST_CASE("phase 1 is deterministic") {
    Cohort cohort = small_cohort();
    PipelineConfig config = fast_config();
    Phase1Report a = run_phase1(cohort, config);
    Phase1Report b = run_phase1(cohort, config);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        CHECK(a.cells[i].algorithm == b.cells[i].algorithm);
        CHECK(a.cells[i].auc == b.cells[i].auc);
    }
    CHECK(a.combined_union == b.combined_union);
}

TEST_CASE("phase 2 builds the full grid with the model-count invariant") {
    Cohort cohort = small_cohort();
    PipelineConfig config = fast_config();
    Phase1Report phase1 = run_phase1(cohort, config);
    Phase2Report phase2 = run_phase2(cohort, config, phase1);

    // 4 outcomes x 3 classes x 2 iterations x 2 algorithms
    CHECK(phase2.cells.size() == 48);
    CHECK(phase2.groups.size() == 12);
    for (const auto& [key, group] : phase2.groups) {
        CHECK(group.model_count == config.n_resamples * 2);
        CHECK(group.metrics.per_iteration_auc.size() == static_cast<std::size_t>(group.model_count));
        CHECK(group.metrics.ci_lower <= group.metrics.mean_auc);
        CHECK(group.metrics.mean_auc <= group.metrics.ci_upper);
        CHECK(group.per_model_curves.size() == static_cast<std::size_t>(group.model_count));
        std::size_t pooled = 0;
        for (const auto& bin : group.pooled_calibration.bins) pooled += bin.count;
        CHECK(pooled > 0);
    }
    // gbm influence present for every group
    for (const auto& [key, group] : phase2.groups) {
        CHECK(!group.influence.empty());
        CHECK(group.influence.front().influence == doctest::Approx(100.0));
    }
    CHECK(!phase2.scenarios.probabilities.empty());
    CHECK(phase2.summary.n_patients == cohort.size());
}

TEST_CASE("an outcome with a deterministic age threshold is learned by demographics alone") {
    Cohort cohort = small_cohort(400, 1234);
    // overwrite the death outcome with a pure age rule
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        bool positive = cohort.demographics[i].age > 60;
        auto& flag = cohort.outcomes[i].flag(Outcome::Death);
        flag.positive = positive;
        flag.event_date = positive ? std::optional<Date>(cohort.outcomes[i].index_date.plus_days(10))
                                   : std::nullopt;
    }
    PipelineConfig config = fast_config();
    config.outcomes = {Outcome::Death};
    config.feature_classes = {FeatureClass::Demographic};
    Phase1Report phase1 = run_phase1(cohort, config);
    Phase2Report phase2 = run_phase2(cohort, config, phase1);
    const Phase2Group& group = phase2.groups.at(phase2_group_key(Outcome::Death, FeatureClass::Demographic));
    CHECK(group.metrics.mean_auc >= 0.99);
}

TEST_CASE("a feature present only in test rows never reaches a model") {
    Cohort cohort = small_cohort(500, 777);
    PipelineConfig config = fast_config();
    config.n_resamples = 1;

    // find the single resample's test side with the pipeline's own seed stream
    const std::uint64_t split_seed = derive_seed(config.seed, "split", 0);
    auto [train, test] = split_train_test(cohort, config.test_fraction, split_seed, config.split_mode);
    std::set<std::string> test_ids(test.patient_ids.begin(), test.patient_ids.end());

    // plant a highly prevalent probe code into every test patient
    const FeatureDescriptor probe_raw{FeatureKind::Raw, "PROBE", ""};
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        if (!test_ids.count(cohort.patient_ids[i])) continue;
        Date d = cohort.outcomes[i].index_date.plus_days(-60);
        cohort.timelines[i].events.push_back({"PROBE", d});
        cohort.timelines[i].rebuild_index();
    }

    Phase1Report phase1 = run_phase1(cohort, config);
    for (const auto& [oname, features] : phase1.union_features)
        for (const auto& f : features) CHECK(f.code_a != "PROBE");
    CHECK(!contains_feature(phase1.combined_union, probe_raw));
    for (const auto& [oname, rows] : phase1.selection_example)
        for (const auto& row : rows) CHECK(row.feature.code_a != "PROBE");

    Phase2Report phase2 = run_phase2(cohort, config, phase1);
    for (const auto& [key, group] : phase2.groups)
        for (const auto& row : group.influence) {
            CHECK(row.feature.code_a != "PROBE");
            CHECK(row.feature.code_b != "PROBE");
        }
}

TEST_CASE("phase reports round trip through JSON") {
    Cohort cohort = small_cohort(400, 55);
    PipelineConfig config = fast_config();
    config.outcomes = {Outcome::Hospitalization};
    Phase1Report phase1 = run_phase1(cohort, config);
    Phase2Report phase2 = run_phase2(cohort, config, phase1);

    const auto dir = std::filesystem::temp_directory_path() / "mlho_reports_roundtrip";
    std::filesystem::create_directories(dir);
    const std::string p1 = (dir / "phase1.json").string();
    const std::string p2 = (dir / "phase2.json").string();
    save_phase1(phase1, p1);
    save_phase2(phase2, p2);
    Phase1Report phase1b = load_phase1(p1);
    Phase2Report phase2b = load_phase2(p2);

    CHECK(phase1b.cells.size() == phase1.cells.size());
    CHECK(phase1b.combined_union == phase1.combined_union);
    CHECK(phase1b.top_algorithms == phase1.top_algorithms);
    CHECK(phase2b.cells.size() == phase2.cells.size());
    REQUIRE(phase2b.groups.size() == phase2.groups.size());
    for (const auto& [key, group] : phase2.groups) {
        const Phase2Group& other = phase2b.groups.at(key);
        CHECK(other.metrics.mean_auc == group.metrics.mean_auc);
        CHECK(other.model_count == group.model_count);
        CHECK(other.influence.size() == group.influence.size());
    }
    // saving the reloaded reports reproduces identical bytes
    const std::string p1again = (dir / "phase1_again.json").string();
    save_phase1(phase1b, p1again);
    std::ifstream a(p1), b(p1again);
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
    std::filesystem::remove_all(dir);
}

TEST_CASE("emit_reports writes the documented file set with a stable manifest") {
    Cohort cohort = small_cohort(400, 66);
    PipelineConfig config = fast_config();
    config.outcomes = {Outcome::Hospitalization, Outcome::Death};
    Phase1Report phase1 = run_phase1(cohort, config);
    Phase2Report phase2 = run_phase2(cohort, config, phase1);

    const auto dir = std::filesystem::temp_directory_path() / "mlho_emit";
    std::filesystem::remove_all(dir);
    auto manifest1 = emit_reports(phase1, phase2, dir.string());
    for (const char* name :
         {"cohort_summary.csv", "scenarios.csv", "phase1_auc.csv", "phase1_ranking.csv",
          "phase1_union.csv", "metrics_auc.csv", "table1.csv", "calibration.csv", "influence.csv",
          "manifest.txt", "msmr_selection_hosp.csv", "msmr_selection_death.csv"}) {
        CHECK(std::filesystem::exists(dir / name));
    }
    auto manifest2 = emit_reports(phase1, phase2, dir.string());
    CHECK(manifest1 == manifest2);

    // cluster mapping decorates the influence listing
    const auto map_path = dir / "clusters.csv";
    {
        std::ofstream out(map_path);
        out << "code,cluster_label\nC007,Cardiovascular disease\n";
    }
    emit_reports(phase1, phase2, dir.string(), map_path.string());
    std::ifstream influence(dir / "influence.csv");
    std::string content((std::istreambuf_iterator<char>(influence)), std::istreambuf_iterator<char>());
    CHECK(content.find("Cardiovascular disease") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("phase 2 demands a usable clinical union") {
    Cohort cohort = small_cohort(400, 88);
    PipelineConfig config = fast_config();
    Phase1Report empty_phase1;
    empty_phase1.top_algorithms = {"gbm", "glmnet"};
    CHECK_THROWS_WITH_AS(run_phase2(cohort, config, empty_phase1), doctest::Contains("MSMR"),
                         DataError);
}

TEST_CASE("pooled union mode uses the cross-outcome union everywhere") {
    Cohort cohort = small_cohort(400, 91);
    PipelineConfig config = fast_config();
    config.n_resamples = 1;
    config.outcomes = {Outcome::Hospitalization, Outcome::Icu};
    config.feature_classes = {FeatureClass::Clinical};
    Phase1Report phase1 = run_phase1(cohort, config);
    config.union_mode = UnionMode::Pooled;
    Phase2Report pooled = run_phase2(cohort, config, phase1);
    CHECK(pooled.groups.size() == 2);
}
