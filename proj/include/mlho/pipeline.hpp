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

#include <map>
#include <string>
#include <vector>

#include "mlho/config.hpp"
#include "mlho/evaluation.hpp"
#include "mlho/learners.hpp"

namespace mlho {

// Phase 1: iterative feature and algorithm selection. Per resample
// iteration and outcome, representations are mined on the training side
// only, reduced by MSMR, and every registered learner is fitted and scored
// on the held-out side; embedded screens accumulate into per-outcome
// feature unions.

struct Phase1Cell {
    Outcome outcome = Outcome::Hospitalization;
    int iteration = 0;
    std::string algorithm;
    double auc = 0.0;
};

struct SelectionRow {
    int rank = 0;
    FeatureDescriptor feature;
    double mi = 0.0;
    double jmi_gain = 0.0;  // 0 for rank 1
};

struct Phase1Report {
    std::vector<Phase1Cell> cells;
    // per outcome: screened-feature union across iterations (sorted)
    std::map<std::string, std::vector<FeatureDescriptor>> union_features;
    std::vector<FeatureDescriptor> combined_union;  // cross-outcome
    std::vector<std::pair<std::string, double>> ranking;  // algorithm, median AUC (desc)
    std::vector<std::string> top_algorithms;               // the two finalists
    // iteration-0 MSMR selection per outcome, for the selection report export
    std::map<std::string, std::vector<SelectionRow>> selection_example;
};

Phase1Report run_phase1(const Cohort& cohort, const PipelineConfig& config);

// Phase 2: final calibrated models per outcome and feature class using the
// phase-1 unions and the two top algorithms.

struct Phase2Cell {
    Outcome outcome = Outcome::Hospitalization;
    FeatureClass feature_class = FeatureClass::Combined;
    int iteration = 0;
    std::string algorithm;
    double auc = 0.0;
};

struct InfluenceRow {
    FeatureDescriptor feature;
    double influence = 0.0;  // scaled, max 100
};

struct Phase2Group {
    MetricSummary metrics;
    CalibrationCurve pooled_calibration;              // all iterations and algorithms pooled
    std::vector<CalibrationCurve> per_model_curves;   // one per (iteration, algorithm)
    std::vector<InfluenceRow> influence;              // aggregated over gbm fits
    int model_count = 0;
};

struct Phase2Report {
    std::vector<Phase2Cell> cells;
    // key "<outcome>/<feature_class>"
    std::map<std::string, Phase2Group> groups;
    ScenarioTable scenarios;
    CohortSummary summary;
};

Phase2Report run_phase2(const Cohort& cohort, const PipelineConfig& config, const Phase1Report& phase1);

// JSON persistence for the phase reports (machine-readable hand-off between
// the phase1/phase2/report subcommands).
void save_phase1(const Phase1Report& report, const std::string& path);
Phase1Report load_phase1(const std::string& path);
void save_phase2(const Phase2Report& report, const std::string& path);
Phase2Report load_phase2(const std::string& path);

// Writes the delimited report files plus manifest.txt with per-file SHA-256
// hashes. cluster_map_path may be empty; when given it must be a
// code,cluster_label file applied to the influence listing. Returns the
// manifest entries (filename -> hash).
std::vector<std::pair<std::string, std::string>> emit_reports(const Phase1Report& phase1,
                                                              const Phase2Report& phase2,
                                                              const std::string& out_dir,
                                                              const std::string& cluster_map_path = "");

std::string phase2_group_key(Outcome outcome, FeatureClass fclass);

}  // namespace mlho
