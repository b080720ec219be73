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

#include "mlho/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mlho/csv.hpp"

namespace mlho {

const char* outcome_name(Outcome o) {
    switch (o) {
        case Outcome::Hospitalization: return "hosp";
        case Outcome::Icu: return "icu";
        case Outcome::Ventilation: return "vent";
        case Outcome::Death: return "death";
    }
    return "?";
}

std::optional<Outcome> outcome_from_name(std::string_view name) {
    for (int i = 0; i < kNumOutcomes; ++i) {
        Outcome o = static_cast<Outcome>(i);
        if (name == outcome_name(o)) return o;
    }
    return std::nullopt;
}

void PatientTimeline::rebuild_index() {
    std::stable_sort(events.begin(), events.end(),
                     [](const ClinicalEvent& a, const ClinicalEvent& b) { return a.date < b.date; });
    first_occurrence.clear();
    occurrence_count.clear();
    for (const auto& ev : events) {
        auto [it, inserted] = first_occurrence.try_emplace(ev.code, ev.date);
        if (!inserted && ev.date < it->second) it->second = ev.date;
        ++occurrence_count[ev.code];
    }
}

std::vector<std::uint8_t> Cohort::labels(Outcome o) const {
    std::vector<std::uint8_t> y(outcomes.size());
    for (std::size_t i = 0; i < outcomes.size(); ++i)
        y[i] = outcomes[i].flag(o).positive ? 1 : 0;
    return y;
}

namespace {

Date parse_date_field(const DelimitedReader& reader, const std::string& field, const char* what) {
    auto d = Date::parse(field);
    if (!d) reader.fail(std::string("invalid ") + what + " date '" + field + "'");
    return *d;
}

bool parse_binary_field(const DelimitedReader& reader, const std::string& field, const char* what) {
    if (field == "0") return false;
    if (field == "1") return true;
    reader.fail(std::string(what) + " must be 0 or 1, got '" + field + "'");
    return false;  // unreachable
}

}  // namespace

Cohort ingest_events(std::istream& event_stream, std::istream& demo_stream,
                     std::istream& outcome_stream, IngestReport* report) {
    IngestReport stats;

    // Outcomes define the patient universe.
    std::unordered_map<std::string, OutcomeLabels> outcome_map;
    {
        DelimitedReader reader(outcome_stream, "outcomes",
                               {"patient_id", "index_date", "hosp", "hosp_date", "icu", "icu_date",
                                "vent", "vent_date", "death", "death_date"});
        std::vector<std::string> f;
        while (reader.next_row(f)) {
            OutcomeLabels labels;
            labels.patient_id = f[0];
            if (labels.patient_id.empty()) reader.fail("empty patient_id");
            labels.index_date = parse_date_field(reader, f[1], "index");
            for (int o = 0; o < kNumOutcomes; ++o) {
                bool positive = parse_binary_field(reader, f[2 + 2 * o], "outcome flag");
                const std::string& date_field = f[3 + 2 * o];
                OutcomeFlag& flag = labels.flags[o];
                flag.positive = positive;
                if (positive) {
                    if (date_field.empty()) reader.fail("positive outcome without an event date");
                    Date d = parse_date_field(reader, date_field, "outcome");
                    if (d < labels.index_date)
                        reader.fail("outcome event date precedes the index date");
                    flag.event_date = d;
                } else if (!date_field.empty()) {
                    reader.fail("negative outcome must have an empty event date");
                }
            }
            if (!outcome_map.emplace(labels.patient_id, std::move(labels)).second)
                reader.fail("duplicate patient_id '" + f[0] + "'");
        }
    }

    std::unordered_map<std::string, Demographics> demo_map;
    {
        DelimitedReader reader(demo_stream, "demographics",
                               {"patient_id", "age", "gender", "race", "ethnicity"});
        std::vector<std::string> f;
        while (reader.next_row(f)) {
            if (!outcome_map.count(f[0])) {
                ++stats.rejected_demo_rows;
                continue;
            }
            Demographics d;
            d.patient_id = f[0];
            try {
                d.age = std::stoi(f[1]);
            } catch (const std::exception&) {
                reader.fail("invalid age '" + f[1] + "'");
            }
            if (d.age < 0 || d.age > 130) reader.fail("age out of range [0,130]: " + f[1]);
            d.gender = f[2];
            d.race = f[3];
            d.ethnicity = f[4];
            if (!demo_map.emplace(d.patient_id, std::move(d)).second)
                reader.fail("duplicate patient_id '" + f[0] + "'");
        }
    }

    std::unordered_map<std::string, PatientTimeline> timeline_map;
    {
        DelimitedReader reader(event_stream, "events", {"patient_id", "code", "date"});
        std::vector<std::string> f;
        while (reader.next_row(f)) {
            ++stats.event_rows;
            if (!outcome_map.count(f[0])) {
                ++stats.rejected_event_rows;
                continue;
            }
            if (f[1].empty()) reader.fail("empty code");
            Date d = parse_date_field(reader, f[2], "event");
            auto& tl = timeline_map[f[0]];
            tl.patient_id = f[0];
            tl.events.push_back({f[1], d});
        }
    }

    Cohort cohort;
    cohort.patient_ids.reserve(outcome_map.size());
    for (const auto& [id, _] : outcome_map) cohort.patient_ids.push_back(id);
    std::sort(cohort.patient_ids.begin(), cohort.patient_ids.end());

    for (const auto& id : cohort.patient_ids) {
        auto demo_it = demo_map.find(id);
        if (demo_it == demo_map.end())
            throw DataError("patient '" + id + "' present in outcomes but missing demographics");
        cohort.demographics.push_back(demo_it->second);
        cohort.outcomes.push_back(outcome_map.at(id));
        auto tl_it = timeline_map.find(id);
        PatientTimeline tl;
        if (tl_it != timeline_map.end()) tl = std::move(tl_it->second);
        tl.patient_id = id;
        tl.rebuild_index();
        cohort.timelines.push_back(std::move(tl));
    }

    if (report) *report = stats;
    return cohort;
}

Cohort ingest_files(const std::string& events_path, const std::string& demo_path,
                    const std::string& outcomes_path, IngestReport* report) {
    std::ifstream events(events_path);
    if (!events) throw DataError("cannot open events file: " + events_path);
    std::ifstream demo(demo_path);
    if (!demo) throw DataError("cannot open demographics file: " + demo_path);
    std::ifstream outcomes(outcomes_path);
    if (!outcomes) throw DataError("cannot open outcomes file: " + outcomes_path);
    return ingest_events(events, demo, outcomes, report);
}

Cohort apply_temporal_buffer(const Cohort& cohort, int buffer_days, bool inclusive) {
    if (buffer_days < 0) throw ConfigError("buffer_days must be non-negative");
    Cohort out;
    out.patient_ids = cohort.patient_ids;
    out.demographics = cohort.demographics;
    out.outcomes = cohort.outcomes;
    out.timelines.resize(cohort.timelines.size());
    for (std::size_t i = 0; i < cohort.timelines.size(); ++i) {
        Date cutoff = cohort.outcomes[i].index_date.plus_days(-buffer_days);
        PatientTimeline tl;
        tl.patient_id = cohort.timelines[i].patient_id;
        for (const auto& ev : cohort.timelines[i].events) {
            bool keep = inclusive ? ev.date <= cutoff : ev.date < cutoff;
            if (keep) tl.events.push_back(ev);
        }
        tl.rebuild_index();
        out.timelines[i] = std::move(tl);
    }
    return out;
}

namespace {

const char* scenario_token(Outcome o) {
    switch (o) {
        case Outcome::Hospitalization: return "Hospitalized";
        case Outcome::Icu: return "ICU";
        case Outcome::Ventilation: return "Ventilation";
        case Outcome::Death: return "Died";
    }
    return "?";
}

}  // namespace

ScenarioTable scenario_probabilities(const Cohort& cohort) {
    ScenarioTable table;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const OutcomeLabels& labels = cohort.outcomes[i];
        std::vector<std::pair<Date, Outcome>> positives;
        bool violation = false;
        for (int o = 0; o < kNumOutcomes; ++o) {
            const OutcomeFlag& flag = labels.flags[o];
            if (!flag.positive) continue;
            if (!flag.event_date)
                throw DataError("patient '" + labels.patient_id + "': positive outcome without event date");
            positives.emplace_back(*flag.event_date, static_cast<Outcome>(o));
        }
        // Dates must not contradict the severity order among positive outcomes.
        for (std::size_t a = 0; a < positives.size() && !violation; ++a)
            for (std::size_t b = a + 1; b < positives.size(); ++b)
                if (positives[a].second < positives[b].second && positives[a].first > positives[b].first) {
                    violation = true;
                    break;
                }
        if (violation) {
            table.violating_patients.push_back(labels.patient_id);
            continue;
        }
        std::string scenario;
        if (positives.empty()) {
            scenario = "None";
        } else {
            std::sort(positives.begin(), positives.end(),
                      [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first < b.first : a.second < b.second;
                      });
            for (const auto& [date, outcome] : positives) {
                if (!scenario.empty()) scenario += "→";
                scenario += scenario_token(outcome);
            }
            if (!labels.flag(Outcome::Death).positive) scenario += "→Discharged";
        }
        ++table.counts[scenario];
        ++counted;
    }
    for (const auto& [scenario, count] : table.counts)
        table.probabilities[scenario] = counted > 0 ? static_cast<double>(count) / counted : 0.0;
    return table;
}

CohortSummary cohort_summary(const Cohort& cohort) {
    if (cohort.size() == 0) throw DataError("cohort_summary: empty cohort");
    CohortSummary s;
    s.n_patients = cohort.size();
    double age_sum = 0.0;
    for (const auto& d : cohort.demographics) age_sum += d.age;
    s.mean_age = age_sum / static_cast<double>(cohort.size());
    for (int o = 0; o < kNumOutcomes; ++o) {
        OutcomeSummary& os = s.per_outcome[o];
        double positive_age_sum = 0.0;
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            if (cohort.outcomes[i].flags[o].positive) {
                ++os.positives;
                positive_age_sum += cohort.demographics[i].age;
            }
        }
        os.rate = static_cast<double>(os.positives) / static_cast<double>(cohort.size());
        if (os.positives > 0) os.mean_age_positive = positive_age_sum / static_cast<double>(os.positives);
    }
    s.mortality_rate = s.per_outcome[static_cast<int>(Outcome::Death)].rate;
    return s;
}

std::string summary_text(const CohortSummary& summary, const ScenarioTable* scenarios) {
    std::ostringstream out;
    out << "patients: " << summary.n_patients << "\n";
    out << "mean_age: " << format_double(summary.mean_age) << "\n";
    for (int o = 0; o < kNumOutcomes; ++o) {
        const OutcomeSummary& os = summary.per_outcome[o];
        out << outcome_name(static_cast<Outcome>(o)) << ": count=" << os.positives
            << " rate=" << format_double(os.rate) << " mean_age_positive=";
        out << (os.mean_age_positive ? format_double(*os.mean_age_positive) : std::string("-"));
        out << "\n";
    }
    out << "mortality_rate: " << format_double(summary.mortality_rate) << "\n";
    if (scenarios) {
        out << "scenarios:\n";
        for (const auto& [name, p] : scenarios->probabilities)
            out << "  " << name << ": " << format_double(p)
                << " (" << scenarios->counts.at(name) << ")\n";
        if (!scenarios->violating_patients.empty())
            out << "  ordering violations: " << scenarios->violating_patients.size() << "\n";
    }
    return out.str();
}

namespace {

Cohort subset(const Cohort& cohort, const std::vector<std::size_t>& indices) {
    Cohort out;
    out.patient_ids.reserve(indices.size());
    out.timelines.reserve(indices.size());
    out.demographics.reserve(indices.size());
    out.outcomes.reserve(indices.size());
    for (std::size_t i : indices) {
        out.patient_ids.push_back(cohort.patient_ids[i]);
        out.timelines.push_back(cohort.timelines[i]);
        out.demographics.push_back(cohort.demographics[i]);
        out.outcomes.push_back(cohort.outcomes[i]);
    }
    return out;
}

}  // namespace

std::pair<Cohort, Cohort> split_train_test(const Cohort& cohort, double test_fraction,
                                           std::uint64_t seed, SplitMode mode) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ConfigError("test_fraction must be in (0,1)");
    const std::size_t n = cohort.size();
    if (n < 2) throw DataError("cannot split a cohort with fewer than 2 patients");
    const std::size_t n_test = std::max<std::size_t>(
        1, std::min<std::size_t>(n - 1, static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)))));

    Rng rng(seed);
    std::vector<std::size_t> test_indices;

    if (mode == SplitMode::Simple) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        test_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    } else {
        // Strata keyed by the joint outcome tuple; largest-remainder rounding
        // hits the exact test size.
        std::map<int, std::vector<std::size_t>> strata;
        for (std::size_t i = 0; i < n; ++i) {
            int key = 0;
            for (int o = 0; o < kNumOutcomes; ++o)
                if (cohort.outcomes[i].flags[o].positive) key |= 1 << o;
            strata[key].push_back(i);
        }
        struct Alloc {
            int key;
            std::size_t take;
            double remainder;
        };
        std::vector<Alloc> allocs;
        std::size_t assigned = 0;
        for (auto& [key, members] : strata) {
            double exact = test_fraction * static_cast<double>(members.size());
            std::size_t take = static_cast<std::size_t>(exact);
            allocs.push_back({key, take, exact - static_cast<double>(take)});
            assigned += take;
        }
        std::stable_sort(allocs.begin(), allocs.end(),
                         [](const Alloc& a, const Alloc& b) { return a.remainder > b.remainder; });
        for (auto& a : allocs) {
            if (assigned >= n_test) break;
            if (a.take < strata[a.key].size()) {
                ++a.take;
                ++assigned;
            }
        }
        // Rounding can leave a gap when many strata are tiny; fill from the
        // largest strata deterministically.
        while (assigned < n_test) {
            auto best = std::max_element(allocs.begin(), allocs.end(), [&](const Alloc& a, const Alloc& b) {
                return strata[a.key].size() - a.take < strata[b.key].size() - b.take;
            });
            if (best->take >= strata[best->key].size()) break;
            ++best->take;
            ++assigned;
        }
        std::sort(allocs.begin(), allocs.end(), [](const Alloc& a, const Alloc& b) { return a.key < b.key; });
        for (const auto& a : allocs) {
            auto& members = strata[a.key];
            rng.shuffle(members);
            for (std::size_t k = 0; k < a.take; ++k) test_indices.push_back(members[k]);
        }
    }

    std::sort(test_indices.begin(), test_indices.end());
    std::vector<bool> in_test(n, false);
    for (std::size_t i : test_indices) in_test[i] = true;
    std::vector<std::size_t> train_indices;
    train_indices.reserve(n - test_indices.size());
    for (std::size_t i = 0; i < n; ++i)
        if (!in_test[i]) train_indices.push_back(i);

    // Every outcome the cohort can evaluate must stay evaluable on both sides.
    for (int o = 0; o < kNumOutcomes; ++o) {
        std::size_t total = 0, test_pos = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (cohort.outcomes[i].flags[o].positive) {
                ++total;
                if (in_test[i]) ++test_pos;
            }
        if (total == 0) continue;
        if (test_pos == 0 || test_pos == total)
            throw DataError(std::string("split cannot place a positive '") +
                            outcome_name(static_cast<Outcome>(o)) + "' case on both sides");
    }

    return {subset(cohort, train_indices), subset(cohort, test_indices)};
}

}  // namespace mlho
