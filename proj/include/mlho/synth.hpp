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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mlho/cohort.hpp"
#include "mlho/tspm.hpp"

namespace mlho {

// A planted predictor: either a single code (code_b empty) whose post-buffer
// presence carries the log-odds weights, or an ordered pair whose realized
// first(a) <= first(b) indicator does.
struct PlantedEffect {
    std::string code_a;
    std::string code_b;
    std::array<double, kNumOutcomes> weight{};  // log-odds per outcome
    double carrier_probability = 0.2;           // chance the pattern is forced in
};

// Outcomes are realized as a severity chain: hospitalization, then ICU given
// hospitalization, then ventilation given ICU; death is drawn among the
// hospitalized with a bonus that grows with the deepest stage reached. Stage
// base offsets are calibrated so the cohort-mean outcome rates hit
// target_rate, which makes the chain monotone and the "None" share equal
// 1 - target_rate[hosp] by construction.
struct GeneratorSpec {
    std::size_t n_patients = 5000;
    int n_codes = 500;
    double mean_events = 40.0;  // Poisson background events per patient
    int history_days = 365;     // events fall in [index - history_days, index]
    // Planted signal is placed at least this many days before the index date
    // so a modest temporal buffer cannot erase it.
    int effect_min_days_before_index = 30;
    int buffer_days = 14;  // horizon on which ground-truth covariates live

    std::vector<PlantedEffect> raw_effects;
    std::vector<PlantedEffect> sequence_effects;
    std::array<double, kNumOutcomes> age_weight{};   // log-odds per decade above 51
    std::array<double, kNumOutcomes> male_weight{};
    std::array<double, kNumOutcomes> target_rate{0.28, 0.10, 0.05, 0.053};

    std::uint64_t seed = 20200301;

    // Desk-scale spec: 5000 patients, 500 codes, 10 raw + 5 sequence effects.
    static GeneratorSpec defaults();
};

struct GroundTruth {
    std::vector<FeatureDescriptor> planted_features;       // raw + sequence effects
    std::vector<std::array<double, kNumOutcomes>> true_probs;  // per patient, cohort order
    std::array<double, kNumOutcomes> expected_rate{};          // mean of true_probs
};

// Deterministic given spec.seed; per-patient substreams make generation
// order-independent. Throws ConfigError when a planted code falls outside
// the code universe.
std::pair<Cohort, GroundTruth> generate_cohort(const GeneratorSpec& spec);

// events.csv, demographics.csv, outcomes.csv in the ingestion formats, plus
// ground_truth.txt and true_probs.txt.
void write_cohort_files(const Cohort& cohort, const std::string& dir);
void write_ground_truth_files(const GeneratorSpec& spec, const GroundTruth& truth,
                              const Cohort& cohort, const std::string& dir);

}  // namespace mlho
