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

// Independent reference implementations used as test oracles. These stay
// deliberately naive (dense loops, direct probability tables) so they share
// no code path with the library's optimized versions.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mlho/cohort.hpp"
#include "mlho/common.hpp"

namespace oracle {

// --- transitive pairs: O(d^2) double loop per patient ----------------------

struct TransitiveExpectation {
    // dictionary in (code_a, code_b) order
    std::vector<std::pair<std::string, std::string>> pairs;
    // per patient: set of dictionary indices with value 1
    std::vector<std::set<std::size_t>> rows;
};

inline TransitiveExpectation brute_force_transitive(const mlho::Cohort& cohort,
                                                    double min_prevalence = 0.0) {
    std::map<std::pair<std::string, std::string>, std::size_t> pair_patients;
    std::vector<std::set<std::pair<std::string, std::string>>> per_patient(cohort.size());
    for (std::size_t p = 0; p < cohort.size(); ++p) {
        const auto& fo = cohort.timelines[p].first_occurrence;
        std::vector<std::pair<std::string, mlho::Date>> codes(fo.begin(), fo.end());
        for (std::size_t i = 0; i < codes.size(); ++i)
            for (std::size_t j = 0; j < codes.size(); ++j) {
                if (i == j) continue;
                if (codes[i].second <= codes[j].second)
                    per_patient[p].insert({codes[i].first, codes[j].first});
            }
        for (const auto& pr : per_patient[p]) ++pair_patients[pr];
    }
    const double n = static_cast<double>(cohort.size());
    TransitiveExpectation out;
    std::map<std::pair<std::string, std::string>, std::size_t> index_of;
    for (const auto& [pr, count] : pair_patients) {
        if (n > 0 && static_cast<double>(count) / n < min_prevalence) continue;
        index_of[pr] = out.pairs.size();
        out.pairs.push_back(pr);
    }
    out.rows.resize(cohort.size());
    for (std::size_t p = 0; p < cohort.size(); ++p)
        for (const auto& pr : per_patient[p]) {
            auto it = index_of.find(pr);
            if (it != index_of.end()) out.rows[p].insert(it->second);
        }
    return out;
}

// --- mutual information from explicit probability tables -------------------

inline double table_mi(const std::vector<int>& x, const std::vector<int>& y, int x_levels,
                       int y_levels) {
    const double n = static_cast<double>(x.size());
    std::vector<double> joint(static_cast<std::size_t>(x_levels * y_levels), 0.0);
    std::vector<double> px(static_cast<std::size_t>(x_levels), 0.0), py(static_cast<std::size_t>(y_levels), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        joint[static_cast<std::size_t>(x[i] * y_levels + y[i])] += 1.0 / n;
        px[static_cast<std::size_t>(x[i])] += 1.0 / n;
        py[static_cast<std::size_t>(y[i])] += 1.0 / n;
    }
    double mi = 0.0;
    for (int a = 0; a < x_levels; ++a)
        for (int b = 0; b < y_levels; ++b) {
            const double pj = joint[static_cast<std::size_t>(a * y_levels + b)];
            if (pj > 0.0) mi += pj * std::log(pj / (px[static_cast<std::size_t>(a)] * py[static_cast<std::size_t>(b)]));
        }
    return mi;
}

// Greedy JMI on dense binary columns: S starts at the top-MI feature, each
// step adds argmax over candidates of sum over s in S of I((Xc,Xs);Y), joint
// coded as a 4-level variable. Scores within 1e-9 count as ties and break
// toward the lower index, the same rule the library applies.
inline std::vector<std::size_t> brute_force_jmi(const std::vector<std::vector<int>>& columns,
                                                const std::vector<int>& y, std::size_t budget) {
    constexpr double kTieEpsilon = 1e-9;
    const std::size_t p = columns.size();
    std::vector<bool> taken(p, false);
    std::vector<std::size_t> selected;

    std::size_t best = 0;
    double best_mi = -1.0;
    for (std::size_t c = 0; c < p; ++c) {
        double mi = table_mi(columns[c], y, 2, 2);
        if (mi > best_mi + kTieEpsilon) {
            best_mi = mi;
            best = c;
        }
    }
    selected.push_back(best);
    taken[best] = true;

    while (selected.size() < std::min(budget, p)) {
        double best_score = -1.0;
        std::size_t winner = p;
        for (std::size_t c = 0; c < p; ++c) {
            if (taken[c]) continue;
            double score = 0.0;
            for (std::size_t s : selected) {
                std::vector<int> joint(y.size());
                for (std::size_t i = 0; i < y.size(); ++i)
                    joint[i] = columns[c][i] * 2 + columns[s][i];
                score += table_mi(joint, y, 4, 2);
            }
            if (score > best_score + kTieEpsilon) {
                best_score = score;
                winner = c;
            }
        }
        if (winner == p) break;
        selected.push_back(winner);
        taken[winner] = true;
    }
    return selected;
}

// --- AUC: all positive-negative pairs, half credit for ties ----------------

inline double brute_force_auc(const std::vector<double>& scores,
                              const std::vector<std::uint8_t>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// --- random small cohorts for oracle sweeps --------------------------------

inline mlho::Cohort random_cohort(mlho::Rng& rng, std::size_t max_patients = 50, int max_codes = 20,
                                  double tie_rate = 0.3) {
    mlho::Cohort cohort;
    const std::size_t n = 2 + rng.below(max_patients - 1);
    const int n_codes = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_codes - 1)));
    const mlho::Date base = mlho::Date::from_civil(2020, 1, 1);
    for (std::size_t p = 0; p < n; ++p) {
        char id[16];
        std::snprintf(id, sizeof(id), "P%03u", static_cast<unsigned>(p));
        mlho::PatientTimeline tl;
        tl.patient_id = id;
        const int n_events = static_cast<int>(rng.below(12));
        // few distinct days makes first-occurrence ties common
        const int day_span = tie_rate > rng.real01() ? 3 : 60;
        for (int e = 0; e < n_events; ++e) {
            char code[8];
            std::snprintf(code, sizeof(code), "K%02d", static_cast<int>(rng.below(static_cast<std::uint64_t>(n_codes))));
            tl.events.push_back({code, base.plus_days(static_cast<std::int32_t>(rng.below(static_cast<std::uint64_t>(day_span))))});
        }
        tl.rebuild_index();
        mlho::OutcomeLabels labels;
        labels.patient_id = id;
        labels.index_date = base.plus_days(400);
        mlho::Demographics demo;
        demo.patient_id = id;
        demo.age = 30 + static_cast<int>(rng.below(50));
        demo.gender = rng.real01() < 0.5 ? "F" : "M";
        demo.race = "other";
        demo.ethnicity = "non_hispanic";
        cohort.patient_ids.push_back(id);
        cohort.timelines.push_back(std::move(tl));
        cohort.demographics.push_back(std::move(demo));
        cohort.outcomes.push_back(std::move(labels));
    }
    return cohort;
}

}  // namespace oracle
