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

#include "mlho/tspm.hpp"

namespace mlho {

// Three-step dimensionality reduction: prevalence cut, mutual-information
// ranking, greedy joint-mutual-information selection. Count-valued columns
// are binarized to presence indicators for the information estimators; the
// learners still see the counts.

struct MiScore {
    std::uint32_t feature = 0;
    double mi = 0.0;  // nats, >= 0
};

struct JmiSelection {
    std::vector<std::uint32_t> selected;  // in selection order; first = top MI
    std::vector<double> step_scores;      // winning J per step; size = selected.size() - 1
};

// Plug-in empirical MI of two binary variables over the 2x2 table, natural
// log, 0*log 0 := 0. Inputs are the usual sufficient counts.
double mi_binary(std::size_t n, std::size_t n_x1, std::size_t n_y1, std::size_t n_x1y1);

// MI of a feature column (binarized at nonzero) against binary labels.
double mutual_information(const SparseFeatureMatrix& m, std::uint32_t column,
                          const std::vector<std::uint8_t>& labels);

std::vector<MiScore> mi_scores(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& labels,
                               int jobs = 1);

// Step 1: drop features with prevalence < min_prevalence (>= retains).
SparseFeatureMatrix prevalence_filter(const SparseFeatureMatrix& m, double min_prevalence);

// Step 2: keep the keep_count features with the highest MI; ties broken by
// dictionary order. Identity when fewer features exist.
SparseFeatureMatrix mi_rank_filter(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& labels,
                                   std::size_t keep_count, int jobs = 1);

// Step 3: greedy JMI. S starts with the top-MI feature; each step adds the
// candidate maximizing sum over s in S of I((X_c, X_s); Y), the pair joint
// treated as a 4-level variable. Scores accumulate incrementally, so each
// step costs one pairwise MI per candidate.
JmiSelection jmi_greedy_select(const SparseFeatureMatrix& m, const std::vector<std::uint8_t>& labels,
                               std::size_t budget, int jobs = 1);

// rank,kind,code_a,code_b,mi,jmi_gain
void write_selection_report(const std::string& path, const SparseFeatureMatrix& m,
                            const JmiSelection& selection, const std::vector<MiScore>& scores);

}  // namespace mlho
