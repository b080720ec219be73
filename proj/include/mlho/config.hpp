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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlho/cohort.hpp"
#include "mlho/evaluation.hpp"
#include "mlho/synth.hpp"
#include "mlho/tspm.hpp"

namespace mlho {

struct MsmrConfig {
    double min_prevalence = 0.002;
    int mi_keep = 30000;
    int jmi_budget = 400;
};

struct GbmGridConfig {
    std::vector<int> trees{100, 300};
    std::vector<double> shrinkage{0.05, 0.1};
    std::vector<int> depth{2, 3};
    double bag_fraction = 0.5;
    int min_leaf = 10;
};

struct EnetGridConfig {
    std::vector<double> alpha{0.5};
    int n_lambda = 50;
    double lambda_min_ratio = 0.05;
};

enum class UnionMode { PerOutcome, Pooled };

// Flat key=value configuration; round-trips losslessly through save/load.
struct PipelineConfig {
    int buffer_days = 14;
    bool buffer_inclusive = true;
    double test_fraction = 0.2;
    int n_resamples = 10;
    int cv_folds_phase1 = 10;
    int cv_folds_phase2 = 5;
    MsmrConfig msmr;
    GbmGridConfig gbm;
    EnetGridConfig enet;
    std::vector<Outcome> outcomes{Outcome::Hospitalization, Outcome::Icu, Outcome::Ventilation,
                                  Outcome::Death};
    std::vector<FeatureClass> feature_classes{FeatureClass::Demographic, FeatureClass::Clinical,
                                              FeatureClass::Combined};
    UnionMode union_mode = UnionMode::PerOutcome;
    SplitMode split_mode = SplitMode::Stratified;
    int calibration_bins = 10;
    BinScheme calibration_scheme = BinScheme::EqualWidth;
    std::size_t tspm_max_pair_entries = 200'000'000;
    std::uint64_t seed = 20200301;
    int jobs = 0;  // 0 = hardware concurrency
    GeneratorSpec synth = GeneratorSpec::defaults();

    static PipelineConfig load(const std::string& path);
    void save(const std::string& path) const;
    std::string serialize() const;
    static PipelineConfig parse(const std::string& text);

    // --key value override, same keys as the file format
    void set(const std::string& key, const std::string& value);
};

}  // namespace mlho
