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

#include "mlho/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace mlho {

namespace {

inline double sigmoid(double f) {
    if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
    const double e = std::exp(f);
    return e / (1.0 + e);
}

std::string code_name(int index, int n_codes) {
    int width = 3;
    for (int v = n_codes - 1; v >= 1000; v /= 10) ++width;
    width = std::min(width, 9);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "C%0*d", width, index);
    return buf;
}

// Death hazard grows with the deepest stage reached.
constexpr double kStageBonus[3] = {0.0, 0.7, 1.4};  // hosp only, icu, vent

struct PatientDraft {
    std::string id;
    Demographics demo;
    Date index_date;
    std::vector<ClinicalEvent> events;
    // realized covariates on the post-buffer horizon
    std::vector<double> raw_x, seq_x;
    double age_z = 0.0;
    double male = 0.0;
    // per-outcome linear predictors without the calibrated base offsets
    std::array<double, kNumOutcomes> eta{};
};

// Solves mean over patients of rate(base) == target for the monotone rate
// functions used below.
template <typename RateFn>
double calibrate_base(const RateFn& rate_mean, double target) {
    double lo = -20.0, hi = 20.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (rate_mean(mid) < target) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

GeneratorSpec GeneratorSpec::defaults() {
    GeneratorSpec spec;
    auto raw = [](const char* code, double wh, double wi, double wv, double wd, double carrier) {
        return PlantedEffect{code, "", {wh, wi, wv, wd}, carrier};
    };
    auto seq = [](const char* a, const char* b, double wh, double wi, double wv, double wd, double carrier) {
        return PlantedEffect{a, b, {wh, wi, wv, wd}, carrier};
    };
    spec.raw_effects = {
        raw("C007", 1.2, 0.6, 0.3, 0.4, 0.25),
        raw("C023", 1.0, 0.8, 0.6, 0.3, 0.20),
        raw("C041", 0.9, 0.5, 0.4, 0.9, 0.22),
        raw("C059", 1.1, 0.4, 0.2, 0.2, 0.18),
        raw("C077", 0.8, 0.7, 0.5, 1.1, 0.15),
        raw("C101", 1.3, 0.5, 0.3, 0.5, 0.12),
        raw("C131", 0.9, 0.9, 0.8, 0.7, 0.20),
        raw("C163", 1.0, 0.3, 0.2, 1.0, 0.25),
        raw("C197", 1.2, 0.6, 0.5, 0.6, 0.15),
        raw("C233", 0.8, 0.4, 0.3, 0.8, 0.30),
    };
    spec.sequence_effects = {
        seq("C013", "C069", 1.1, 0.6, 0.4, 0.5, 0.20),
        seq("C087", "C156", 0.9, 0.8, 0.6, 0.4, 0.25),
        seq("C201", "C144", 1.2, 0.5, 0.3, 0.7, 0.15),
        seq("C055", "C260", 1.0, 0.4, 0.3, 0.9, 0.20),
        seq("C310", "C042", 0.8, 0.7, 0.5, 0.6, 0.25),
    };
    spec.age_weight = {0.45, 0.40, 0.35, 1.0};
    spec.male_weight = {0.30, 0.35, 0.40, 0.30};
    return spec;
}

std::pair<Cohort, GroundTruth> generate_cohort(const GeneratorSpec& spec) {
    const std::size_t n = spec.n_patients;
    if (n == 0) throw ConfigError("generator: n_patients must be positive");
    if (spec.n_codes < 2) throw ConfigError("generator: need at least 2 codes");

    std::set<std::string> universe;
    for (int c = 0; c < spec.n_codes; ++c) universe.insert(code_name(c, spec.n_codes));
    for (const auto& e : spec.raw_effects)
        if (!universe.count(e.code_a))
            throw ConfigError("generator: planted code outside the universe: " + e.code_a);
    for (const auto& e : spec.sequence_effects)
        if (!universe.count(e.code_a) || !universe.count(e.code_b))
            throw ConfigError("generator: planted pair outside the universe: " + e.code_a + "->" + e.code_b);

    const Date pandemic_start = Date::from_civil(2020, 3, 1);
    const int effect_floor = std::min(spec.effect_min_days_before_index, spec.history_days);

    std::vector<PatientDraft> drafts(n);
    int id_width = 4;
    for (std::size_t v = n - 1; v >= 10000; v /= 10) ++id_width;
    id_width = std::min(id_width, 12);

    for (std::size_t i = 0; i < n; ++i) {
        PatientDraft& d = drafts[i];
        Rng rng(derive_seed(spec.seed, "patient", i));
        char idbuf[24];
        std::snprintf(idbuf, sizeof(idbuf), "P%0*zu", id_width, i);
        d.id = idbuf;

        int age = static_cast<int>(std::lround(rng.normal(51.0, 18.0)));
        d.demo.patient_id = d.id;
        d.demo.age = std::clamp(age, 0, 100);
        d.demo.gender = rng.real01() < 0.5 ? "F" : "M";
        const double race_u = rng.real01();
        d.demo.race = race_u < 0.10 ? "asian" : race_u < 0.25 ? "black" : race_u < 0.40 ? "other" : "white";
        d.demo.ethnicity = rng.real01() < 0.12 ? "hispanic" : "non_hispanic";

        d.index_date = pandemic_start.plus_days(static_cast<std::int32_t>(rng.below(180)));

        // background history: popularity-skewed codes over the full window,
        // including dates inside the eventual temporal buffer
        const int n_events = rng.poisson(spec.mean_events);
        for (int e = 0; e < n_events; ++e) {
            const double u = rng.real01();
            const int code = std::min(spec.n_codes - 1, static_cast<int>(u * u * spec.n_codes));
            const int back = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.history_days + 1)));
            d.events.push_back({code_name(code, spec.n_codes), d.index_date.plus_days(-back)});
        }

        // planted raw codes: carriers receive occurrences safely before the buffer
        for (const auto& eff : spec.raw_effects) {
            if (rng.real01() >= eff.carrier_probability) continue;
            const int occurrences = 1 + static_cast<int>(rng.below(3));
            for (int k = 0; k < occurrences; ++k) {
                const int back = effect_floor +
                                 static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                     std::max(1, spec.history_days - effect_floor + 1))));
                d.events.push_back({eff.code_a, d.index_date.plus_days(-back)});
            }
        }
        // planted sequences: force first(a) on or before first(b), both pre-buffer
        for (const auto& eff : spec.sequence_effects) {
            if (rng.real01() >= eff.carrier_probability) continue;
            const int span = std::max(1, spec.history_days - effect_floor);
            const int back_a = effect_floor + static_cast<int>(rng.below(static_cast<std::uint64_t>(span + 1)));
            const int back_b = effect_floor + static_cast<int>(rng.below(static_cast<std::uint64_t>(back_a - effect_floor + 1)));
            Date day_a = d.index_date.plus_days(-back_a);
            Date day_b = d.index_date.plus_days(-back_b);  // back_b <= back_a so day_b >= day_a
            d.events.push_back({eff.code_a, day_a});
            d.events.push_back({eff.code_b, day_b});
        }
    }

    // realized covariates on the post-buffer horizon
    for (auto& d : drafts) {
        PatientTimeline tl;
        tl.patient_id = d.id;
        const Date cutoff = d.index_date.plus_days(-spec.buffer_days);
        for (const auto& ev : d.events)
            if (ev.date <= cutoff) tl.events.push_back(ev);
        tl.rebuild_index();

        d.raw_x.resize(spec.raw_effects.size(), 0.0);
        for (std::size_t e = 0; e < spec.raw_effects.size(); ++e)
            d.raw_x[e] = tl.occurrence_count.count(spec.raw_effects[e].code_a) ? 1.0 : 0.0;
        d.seq_x.resize(spec.sequence_effects.size(), 0.0);
        for (std::size_t e = 0; e < spec.sequence_effects.size(); ++e) {
            const auto& eff = spec.sequence_effects[e];
            auto a = tl.first_occurrence.find(eff.code_a);
            auto b = tl.first_occurrence.find(eff.code_b);
            if (a != tl.first_occurrence.end() && b != tl.first_occurrence.end() && a->second <= b->second)
                d.seq_x[e] = 1.0;
        }
        d.age_z = (static_cast<double>(d.demo.age) - 51.0) / 10.0;
        d.male = d.demo.gender == "M" ? 1.0 : 0.0;
        for (int o = 0; o < kNumOutcomes; ++o) {
            double eta = spec.age_weight[static_cast<std::size_t>(o)] * d.age_z +
                         spec.male_weight[static_cast<std::size_t>(o)] * d.male;
            for (std::size_t e = 0; e < spec.raw_effects.size(); ++e)
                eta += spec.raw_effects[e].weight[static_cast<std::size_t>(o)] * d.raw_x[e];
            for (std::size_t e = 0; e < spec.sequence_effects.size(); ++e)
                eta += spec.sequence_effects[e].weight[static_cast<std::size_t>(o)] * d.seq_x[e];
            d.eta[static_cast<std::size_t>(o)] = eta;
        }
    }

    // calibrate stage base offsets so cohort means hit the targets
    const double base_h = calibrate_base(
        [&](double b) {
            double acc = 0.0;
            for (const auto& d : drafts) acc += sigmoid(b + d.eta[0]);
            return acc / static_cast<double>(n);
        },
        spec.target_rate[0]);
    std::vector<double> p_h(n);
    for (std::size_t i = 0; i < n; ++i) p_h[i] = sigmoid(base_h + drafts[i].eta[0]);

    const double base_i = calibrate_base(
        [&](double b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += p_h[i] * sigmoid(b + drafts[i].eta[1]);
            return acc / static_cast<double>(n);
        },
        spec.target_rate[1]);
    std::vector<double> p_i(n);
    for (std::size_t i = 0; i < n; ++i) p_i[i] = sigmoid(base_i + drafts[i].eta[1]);

    const double base_v = calibrate_base(
        [&](double b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += p_h[i] * p_i[i] * sigmoid(b + drafts[i].eta[2]);
            return acc / static_cast<double>(n);
        },
        spec.target_rate[2]);
    std::vector<double> p_v(n);
    for (std::size_t i = 0; i < n; ++i) p_v[i] = sigmoid(base_v + drafts[i].eta[2]);

    auto death_prob = [&](double b, std::size_t i) {
        const double d_h = sigmoid(b + drafts[i].eta[3] + kStageBonus[0]);
        const double d_i = sigmoid(b + drafts[i].eta[3] + kStageBonus[1]);
        const double d_v = sigmoid(b + drafts[i].eta[3] + kStageBonus[2]);
        return p_h[i] * ((1.0 - p_i[i]) * d_h + p_i[i] * (1.0 - p_v[i]) * d_i + p_i[i] * p_v[i] * d_v);
    };
    const double base_d = calibrate_base(
        [&](double b) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += death_prob(b, i);
            return acc / static_cast<double>(n);
        },
        spec.target_rate[3]);

    // realize outcomes and assemble the cohort
    Cohort cohort;
    GroundTruth truth;
    truth.true_probs.resize(n);
    cohort.patient_ids.reserve(n);
    cohort.timelines.reserve(n);
    cohort.demographics.reserve(n);
    cohort.outcomes.reserve(n);

    for (std::size_t i = 0; i < n; ++i) {
        PatientDraft& d = drafts[i];
        Rng rng(derive_seed(spec.seed, "outcome", i));

        OutcomeLabels labels;
        labels.patient_id = d.id;
        labels.index_date = d.index_date;

        const bool hosp = rng.real01() < p_h[i];
        bool icu = false, vent = false, death = false;
        Date hosp_date{}, icu_date{}, vent_date{}, death_date{};
        int deepest = 0;
        if (hosp) {
            hosp_date = d.index_date.plus_days(1 + static_cast<std::int32_t>(rng.below(7)));
            icu = rng.real01() < p_i[i];
            if (icu) {
                icu_date = hosp_date.plus_days(static_cast<std::int32_t>(rng.below(5)));
                deepest = 1;
                vent = rng.real01() < p_v[i];
                if (vent) {
                    vent_date = icu_date.plus_days(static_cast<std::int32_t>(rng.below(3)));
                    deepest = 2;
                }
            }
            const double pd = sigmoid(base_d + d.eta[3] + kStageBonus[deepest]);
            death = rng.real01() < pd;
            if (death) {
                const Date anchor = deepest == 2 ? vent_date : deepest == 1 ? icu_date : hosp_date;
                death_date = anchor.plus_days(1 + static_cast<std::int32_t>(rng.below(14)));
            }
        }
        labels.flag(Outcome::Hospitalization) = {hosp, hosp ? std::optional<Date>(hosp_date) : std::nullopt};
        labels.flag(Outcome::Icu) = {icu, icu ? std::optional<Date>(icu_date) : std::nullopt};
        labels.flag(Outcome::Ventilation) = {vent, vent ? std::optional<Date>(vent_date) : std::nullopt};
        labels.flag(Outcome::Death) = {death, death ? std::optional<Date>(death_date) : std::nullopt};

        truth.true_probs[i] = {p_h[i], p_h[i] * p_i[i], p_h[i] * p_i[i] * p_v[i], death_prob(base_d, i)};

        PatientTimeline tl;
        tl.patient_id = d.id;
        tl.events = std::move(d.events);
        tl.rebuild_index();
        cohort.patient_ids.push_back(d.id);
        cohort.timelines.push_back(std::move(tl));
        cohort.demographics.push_back(d.demo);
        cohort.outcomes.push_back(std::move(labels));
    }

    for (const auto& e : spec.raw_effects)
        truth.planted_features.push_back({FeatureKind::Raw, e.code_a, ""});
    for (const auto& e : spec.sequence_effects)
        truth.planted_features.push_back({FeatureKind::Sequence, e.code_a, e.code_b});
    for (int o = 0; o < kNumOutcomes; ++o) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += truth.true_probs[i][static_cast<std::size_t>(o)];
        truth.expected_rate[static_cast<std::size_t>(o)] = acc / static_cast<double>(n);
    }
    return {std::move(cohort), std::move(truth)};
}

void write_cohort_files(const Cohort& cohort, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "events.csv");
        if (!out) throw Error("cannot write events.csv in " + dir);
        out << "patient_id,code,date\n";
        for (const auto& tl : cohort.timelines)
            for (const auto& ev : tl.events)
                out << tl.patient_id << ',' << ev.code << ',' << ev.date.format() << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "demographics.csv");
        if (!out) throw Error("cannot write demographics.csv in " + dir);
        out << "patient_id,age,gender,race,ethnicity\n";
        for (const auto& d : cohort.demographics)
            out << d.patient_id << ',' << d.age << ',' << d.gender << ',' << d.race << ','
                << d.ethnicity << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "outcomes.csv");
        if (!out) throw Error("cannot write outcomes.csv in " + dir);
        out << "patient_id,index_date,hosp,hosp_date,icu,icu_date,vent,vent_date,death,death_date\n";
        for (const auto& o : cohort.outcomes) {
            out << o.patient_id << ',' << o.index_date.format();
            for (int k = 0; k < kNumOutcomes; ++k) {
                const OutcomeFlag& f = o.flags[k];
                out << ',' << (f.positive ? '1' : '0') << ',';
                if (f.event_date) out << f.event_date->format();
            }
            out << "\n";
        }
    }
}

void write_ground_truth_files(const GeneratorSpec& spec, const GroundTruth& truth,
                              const Cohort& cohort, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream out(fs::path(dir) / "ground_truth.txt");
        if (!out) throw Error("cannot write ground_truth.txt in " + dir);
        out << "kind,code_a,code_b,w_hosp,w_icu,w_vent,w_death,carrier_probability\n";
        for (const auto& e : spec.raw_effects) {
            out << "raw," << e.code_a << ",,";
            for (double w : e.weight) out << format_double(w) << ',';
            out << format_double(e.carrier_probability) << "\n";
        }
        for (const auto& e : spec.sequence_effects) {
            out << "sequence," << e.code_a << ',' << e.code_b << ',';
            for (double w : e.weight) out << format_double(w) << ',';
            out << format_double(e.carrier_probability) << "\n";
        }
        out << "demographic,age,,";
        for (double w : spec.age_weight) out << format_double(w) << ',';
        out << "\n";
        out << "demographic,gender=M,,";
        for (double w : spec.male_weight) out << format_double(w) << ',';
        out << "\n";
    }
    {
        std::ofstream out(fs::path(dir) / "true_probs.txt");
        if (!out) throw Error("cannot write true_probs.txt in " + dir);
        out << "patient_id,p_hosp,p_icu,p_vent,p_death\n";
        for (std::size_t i = 0; i < cohort.size(); ++i) {
            out << cohort.patient_ids[i];
            for (double p : truth.true_probs[i]) out << ',' << format_double(p);
            out << "\n";
        }
    }
}

}  // namespace mlho
