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

#include <cmath>
#include <set>
#include <sstream>

#include "mlho/cohort.hpp"

using namespace mlho;

namespace {

Cohort ingest_strings(const std::string& events, const std::string& demo, const std::string& outcomes,
                      IngestReport* report = nullptr) {
    std::istringstream e(events), d(demo), o(outcomes);
    return ingest_events(e, d, o, report);
}

const char* kHeaderOutcomes =
    "patient_id,index_date,hosp,hosp_date,icu,icu_date,vent,vent_date,death,death_date\n";

std::string one_patient_outcomes(const std::string& id = "p1") {
    return std::string(kHeaderOutcomes) + id + ",2020-04-01,0,,0,,0,,0,\n";
}

std::string one_patient_demo(const std::string& id = "p1") {
    return "patient_id,age,gender,race,ethnicity\n" + id + ",50,F,white,non_hispanic\n";
}

// builds a minimal cohort with the given per-patient outcome flags
Cohort make_cohort(const std::vector<std::array<int, 4>>& flags, int base_age = 50) {
    std::string outcomes = kHeaderOutcomes;
    std::string demo = "patient_id,age,gender,race,ethnicity\n";
    for (std::size_t i = 0; i < flags.size(); ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "p%04u", static_cast<unsigned>(i));
        demo += std::string(id) + "," + std::to_string(base_age) + ",F,white,non_hispanic\n";
        outcomes += std::string(id) + ",2020-04-01";
        const char* dates[4] = {"2020-04-03", "2020-04-04", "2020-04-05", "2020-04-09"};
        for (int o = 0; o < 4; ++o) {
            outcomes += flags[i][static_cast<std::size_t>(o)] ? std::string(",1,") + dates[o] : ",0,";
        }
        outcomes += "\n";
    }
    return ingest_strings("patient_id,code,date\n", demo, outcomes);
}

}  // namespace

TEST_CASE("ingest counts duplicate codes into occurrence counts") {
    Cohort c = ingest_strings(
        "patient_id,code,date\n"
        "p1,A,2020-01-05\n"
        "p1,A,2020-01-08\n"
        "p1,B,2020-01-02\n",
        one_patient_demo(), one_patient_outcomes());
    REQUIRE(c.size() == 1);
    CHECK(c.timelines[0].occurrence_count.at("A") == 2);
    CHECK(c.timelines[0].occurrence_count.at("B") == 1);
    CHECK(c.timelines[0].first_occurrence.at("A").format() == "2020-01-05");
    CHECK(c.timelines[0].events.size() == 3);
    // events sorted by date
    CHECK(c.timelines[0].events.front().code == "B");
}

TEST_CASE("ingest accepts an empty event stream") {
    Cohort c = ingest_strings("patient_id,code,date\n", one_patient_demo(), one_patient_outcomes());
    REQUIRE(c.size() == 1);
    CHECK(c.timelines[0].events.empty());
}

TEST_CASE("ingest rejects an invalid calendar day with the line number") {
    CHECK_THROWS_WITH_AS(ingest_strings("patient_id,code,date\n"
                                        "p1,A,2020-02-30\n",
                                        one_patient_demo(), one_patient_outcomes()),
                         doctest::Contains("line 2"), DataError);
}

TEST_CASE("ingest rejects unknown columns and names them") {
    std::istringstream e("patient_id,code,date,extra\n"), d(one_patient_demo()), o(one_patient_outcomes());
    CHECK_THROWS_WITH_AS(ingest_events(e, d, o), doctest::Contains("extra"), DataError);
}

TEST_CASE("ingest requires demographics for every outcome patient") {
    CHECK_THROWS_WITH_AS(
        ingest_strings("patient_id,code,date\n", "patient_id,age,gender,race,ethnicity\n",
                       one_patient_outcomes()),
        doctest::Contains("missing demographics"), DataError);
}

TEST_CASE("ingest drops event rows for unknown patients and counts them") {
    IngestReport report;
    Cohort c = ingest_strings(
        "patient_id,code,date\n"
        "p1,A,2020-01-05\n"
        "ghost,A,2020-01-05\n",
        one_patient_demo(), one_patient_outcomes(), &report);
    CHECK(c.size() == 1);
    CHECK(report.event_rows == 2);
    CHECK(report.rejected_event_rows == 1);
}

TEST_CASE("ingest validates outcome date consistency") {
    // positive without a date
    CHECK_THROWS_AS(ingest_strings("patient_id,code,date\n", one_patient_demo(),
                                   std::string(kHeaderOutcomes) + "p1,2020-04-01,1,,0,,0,,0,\n"),
                    DataError);
    // event date before index
    CHECK_THROWS_AS(ingest_strings("patient_id,code,date\n", one_patient_demo(),
                                   std::string(kHeaderOutcomes) +
                                       "p1,2020-04-01,1,2020-03-20,0,,0,,0,\n"),
                    DataError);
    // negative with a date
    CHECK_THROWS_AS(ingest_strings("patient_id,code,date\n", one_patient_demo(),
                                   std::string(kHeaderOutcomes) +
                                       "p1,2020-04-01,0,2020-04-05,0,,0,,0,\n"),
                    DataError);
}

TEST_CASE("temporal buffer removes events inside the window") {
    auto cohort = [](const char* date) {
        return ingest_strings(std::string("patient_id,code,date\np1,A,") + date + "\n",
                              one_patient_demo(), one_patient_outcomes());
    };
    // index date is 2020-04-01
    SUBCASE("event 10 days before index is removed with buffer 14") {
        Cohort c = apply_temporal_buffer(cohort("2020-03-22"), 14);
        CHECK(c.timelines[0].events.empty());
        CHECK(c.size() == 1);  // patient retained
    }
    SUBCASE("event exactly at index - 14 is retained (inclusive boundary)") {
        Cohort c = apply_temporal_buffer(cohort("2020-03-18"), 14);
        CHECK(c.timelines[0].events.size() == 1);
        Cohort strict = apply_temporal_buffer(cohort("2020-03-18"), 14, /*inclusive=*/false);
        CHECK(strict.timelines[0].events.empty());
    }
    SUBCASE("buffer 0 removes only events after the index date") {
        Cohort kept = apply_temporal_buffer(cohort("2020-04-01"), 0);
        CHECK(kept.timelines[0].events.size() == 1);
        Cohort removed = apply_temporal_buffer(cohort("2020-04-02"), 0);
        CHECK(removed.timelines[0].events.empty());
    }
}

TEST_CASE("temporal buffer invariant: no event after index - buffer") {
    std::string events = "patient_id,code,date\n";
    for (int d = 1; d <= 28; ++d) {
        char row[64];
        std::snprintf(row, sizeof(row), "p1,A,2020-03-%02d\n", d);
        events += row;
    }
    Cohort c = apply_temporal_buffer(ingest_strings(events, one_patient_demo(), one_patient_outcomes()), 14);
    const Date cutoff = c.outcomes[0].index_date.plus_days(-14);
    for (const auto& ev : c.timelines[0].events) CHECK(ev.date <= cutoff);
    CHECK(!c.timelines[0].events.empty());
}

TEST_CASE("scenario probabilities: no positives means None") {
    Cohort c = make_cohort({{0, 0, 0, 0}, {0, 0, 0, 0}});
    ScenarioTable t = scenario_probabilities(c);
    CHECK(t.probabilities.size() == 1);
    CHECK(t.probabilities.at("None") == 1.0);
}

TEST_CASE("scenario probabilities: counting example") {
    std::vector<std::array<int, 4>> flags;
    for (int i = 0; i < 5; ++i) flags.push_back({0, 0, 0, 0});
    for (int i = 0; i < 3; ++i) flags.push_back({1, 0, 0, 0});
    for (int i = 0; i < 2; ++i) flags.push_back({1, 1, 0, 1});
    ScenarioTable t = scenario_probabilities(make_cohort(flags));
    CHECK(t.probabilities.at("None") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(t.probabilities.at("Hospitalized→Discharged") == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(t.probabilities.at("Hospitalized→ICU→Died") == doctest::Approx(0.2).epsilon(1e-12));
    double sum = 0.0;
    for (auto& [name, p] : t.probabilities) sum += p;
    CHECK(std::fabs(sum - 1.0) <= 1e-12);
}

TEST_CASE("scenario ordering violation excludes the patient") {
    // ICU dated before hospitalization
    std::string outcomes = std::string(kHeaderOutcomes) +
                           "p1,2020-04-01,1,2020-04-10,1,2020-04-05,0,,0,\n"
                           "p2,2020-04-01,0,,0,,0,,0,\n";
    std::string demo =
        "patient_id,age,gender,race,ethnicity\np1,50,F,white,non_hispanic\np2,50,F,white,non_hispanic\n";
    Cohort c = ingest_strings("patient_id,code,date\n", demo, outcomes);
    ScenarioTable t = scenario_probabilities(c);
    REQUIRE(t.violating_patients.size() == 1);
    CHECK(t.violating_patients[0] == "p1");
    CHECK(t.probabilities.at("None") == 1.0);  // only p2 counted
}

TEST_CASE("cohort summary rates and empty strata") {
    std::vector<std::array<int, 4>> flags(100, {0, 0, 0, 0});
    for (int i = 0; i < 5; ++i) flags[static_cast<std::size_t>(i)] = {1, 0, 0, 1};
    CohortSummary s = cohort_summary(make_cohort(flags));
    CHECK(s.mortality_rate == doctest::Approx(0.05));
    CHECK(s.mean_age == doctest::Approx(50.0));
    CHECK(s.per_outcome[0].mean_age_positive.value() == doctest::Approx(50.0));
    // no ICU positives: mean age absent, not zero
    CHECK(!s.per_outcome[1].mean_age_positive.has_value());
    CHECK(s.per_outcome[1].positives == 0);
}

TEST_CASE("split is deterministic, disjoint and exhaustive") {
    std::vector<std::array<int, 4>> flags(1000, {0, 0, 0, 0});
    for (int i = 0; i < 200; ++i) flags[static_cast<std::size_t>(i)][0] = 1;
    for (int i = 0; i < 53; ++i) flags[static_cast<std::size_t>(i)][3] = 1;
    Cohort c = make_cohort(flags);

    auto [train1, test1] = split_train_test(c, 0.2, 99);
    auto [train2, test2] = split_train_test(c, 0.2, 99);
    CHECK(train1.patient_ids == train2.patient_ids);
    CHECK(test1.patient_ids == test2.patient_ids);
    CHECK(train1.size() == 800);
    CHECK(test1.size() == 200);

    std::set<std::string> all(train1.patient_ids.begin(), train1.patient_ids.end());
    all.insert(test1.patient_ids.begin(), test1.patient_ids.end());
    CHECK(all.size() == 1000);

    auto [train3, test3] = split_train_test(c, 0.2, 100);
    CHECK(test1.patient_ids != test3.patient_ids);
}

TEST_CASE("stratified split keeps the death rate near the cohort rate") {
    std::vector<std::array<int, 4>> flags(1000, {0, 0, 0, 0});
    for (int i = 0; i < 53; ++i) flags[static_cast<std::size_t>(i)][3] = 1;
    Cohort c = make_cohort(flags);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        auto [train, test] = split_train_test(c, 0.2, seed);
        std::size_t deaths = 0;
        for (const auto& o : test.outcomes) deaths += o.flag(Outcome::Death).positive ? 1 : 0;
        const double rate = static_cast<double>(deaths) / static_cast<double>(test.size());
        CHECK(rate >= 0.04);
        CHECK(rate <= 0.07);
    }
}

TEST_CASE("split errors when an outcome cannot reach both sides") {
    std::vector<std::array<int, 4>> flags(50, {0, 0, 0, 0});
    flags[0][3] = 1;  // a single death
    Cohort c = make_cohort(flags);
    CHECK_THROWS_WITH_AS(split_train_test(c, 0.2, 1), doctest::Contains("death"), DataError);
}

TEST_CASE("simple split mode is available and deterministic") {
    std::vector<std::array<int, 4>> flags(300, {0, 0, 0, 0});
    for (int i = 0; i < 100; ++i) flags[static_cast<std::size_t>(i)][0] = 1;
    Cohort c = make_cohort(flags);
    auto [train1, test1] = split_train_test(c, 0.2, 5, SplitMode::Simple);
    auto [train2, test2] = split_train_test(c, 0.2, 5, SplitMode::Simple);
    CHECK(test1.patient_ids == test2.patient_ids);
    CHECK(test1.size() == 60);
}

TEST_CASE("ingest to summary round trip matches direct counts") {
    std::vector<std::array<int, 4>> flags(40, {0, 0, 0, 0});
    for (int i = 0; i < 12; ++i) flags[static_cast<std::size_t>(i)][0] = 1;
    for (int i = 0; i < 4; ++i) flags[static_cast<std::size_t>(i)][1] = 1;
    Cohort c = make_cohort(flags);
    CohortSummary s = cohort_summary(c);
    CHECK(s.per_outcome[0].positives == 12);
    CHECK(s.per_outcome[1].positives == 4);
    CHECK(s.n_patients == 40);
}
