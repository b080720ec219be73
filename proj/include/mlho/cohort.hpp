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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mlho/common.hpp"

namespace mlho {

enum class Outcome : int { Hospitalization = 0, Icu = 1, Ventilation = 2, Death = 3 };
constexpr int kNumOutcomes = 4;
const char* outcome_name(Outcome o);           // "hosp", "icu", "vent", "death"
std::optional<Outcome> outcome_from_name(std::string_view name);

struct ClinicalEvent {
    std::string code;  // non-empty after trimming
    Date date;
};

struct PatientTimeline {
    std::string patient_id;
    // Sorted non-decreasing by date; same-day events keep input order.
    std::vector<ClinicalEvent> events;
    // first_occurrence[c] == min date of events with code c; counts >= 1.
    std::map<std::string, Date> first_occurrence;
    std::map<std::string, int> occurrence_count;

    void rebuild_index();
};

struct Demographics {
    std::string patient_id;
    int age = 0;  // 0..130
    std::string gender;
    std::string race;
    std::string ethnicity;
};

struct OutcomeFlag {
    bool positive = false;
    std::optional<Date> event_date;  // present iff positive
};

struct OutcomeLabels {
    std::string patient_id;
    Date index_date;  // day of the positive test
    OutcomeFlag flags[kNumOutcomes];

    const OutcomeFlag& flag(Outcome o) const { return flags[static_cast<int>(o)]; }
    OutcomeFlag& flag(Outcome o) { return flags[static_cast<int>(o)]; }
};

// Patient-aligned columns are indexed by position; patient_ids is sorted
// ascending and defines row order everywhere downstream. Immutable once
// built, safe to share across workers.
struct Cohort {
    std::vector<std::string> patient_ids;
    std::vector<PatientTimeline> timelines;
    std::vector<Demographics> demographics;
    std::vector<OutcomeLabels> outcomes;

    std::size_t size() const { return patient_ids.size(); }
    std::vector<std::uint8_t> labels(Outcome o) const;
};

struct IngestReport {
    std::size_t event_rows = 0;
    std::size_t rejected_event_rows = 0;    // unknown patient id
    std::size_t rejected_demo_rows = 0;     // demographics for unknown patient id
};

// Parses the three cohort input files. The outcomes file defines the patient
// universe; event/demographic rows for unknown ids are counted and dropped.
// Malformed rows raise DataError with the offending line number.
Cohort ingest_events(std::istream& event_stream, std::istream& demo_stream,
                     std::istream& outcome_stream, IngestReport* report = nullptr);

Cohort ingest_files(const std::string& events_path, const std::string& demo_path,
                    const std::string& outcomes_path, IngestReport* report = nullptr);

// Drops every event dated inside the pre-index buffer window and rebuilds the
// per-code indexes. With inclusive=true (default), events dated exactly
// index_date - buffer_days are retained. Patients whose timelines empty out
// are kept.
Cohort apply_temporal_buffer(const Cohort& cohort, int buffer_days, bool inclusive = true);

struct ScenarioTable {
    // canonical scenario string -> probability over non-violating patients
    std::map<std::string, double> probabilities;
    std::map<std::string, std::size_t> counts;
    // patients whose positive-outcome dates contradict the severity order
    std::vector<std::string> violating_patients;
};

// Assigns each patient one scenario string built from the time order of their
// positive outcome events, e.g. "Hospitalized→ICU→Died" or "None".
// Probabilities sum to 1 over the non-violating patients.
ScenarioTable scenario_probabilities(const Cohort& cohort);

struct OutcomeSummary {
    std::size_t positives = 0;
    double rate = 0.0;
    std::optional<double> mean_age_positive;  // absent when no positives
};

struct CohortSummary {
    std::size_t n_patients = 0;
    double mean_age = 0.0;
    OutcomeSummary per_outcome[kNumOutcomes];
    double mortality_rate = 0.0;
};

CohortSummary cohort_summary(const Cohort& cohort);
std::string summary_text(const CohortSummary& summary, const ScenarioTable* scenarios = nullptr);

enum class SplitMode { Stratified, Simple };

// Disjoint, exhaustive partition with round(test_fraction * n) test rows.
// Stratified mode allocates within joint-outcome strata so each side keeps
// positives of every outcome the cohort has; it raises DataError (naming the
// outcome) when that is impossible. Deterministic given the seed.
std::pair<Cohort, Cohort> split_train_test(const Cohort& cohort, double test_fraction,
                                           std::uint64_t seed, SplitMode mode = SplitMode::Stratified);

}  // namespace mlho
