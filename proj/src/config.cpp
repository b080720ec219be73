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

#include "mlho/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mlho {

namespace {

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw ConfigError("config key '" + key + "': invalid number '" + value + "'");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    auto res = std::from_chars(value.data(), value.data() + value.size(), v);
    if (res.ec != std::errc() || res.ptr != value.data() + value.size())
        throw ConfigError("config key '" + key + "': invalid integer '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true") return true;
    if (value == "0" || value == "false") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    for (const auto& part : split(value, ','))
        if (!part.empty()) out.push_back(parse_double(key, part));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    for (const auto& part : split(value, ','))
        if (!part.empty()) out.push_back(static_cast<int>(parse_int(key, part)));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

template <typename T>
std::string join_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_same_v<T, double>) out += format_double(v[i]);
        else out += std::to_string(v[i]);
    }
    return out;
}

// effects serialize as code[>code_b]:wh:wi:wv:wd:carrier joined by ';'
std::string effects_to_string(const std::vector<PlantedEffect>& effects) {
    std::string out;
    for (std::size_t i = 0; i < effects.size(); ++i) {
        if (i) out += ';';
        const auto& e = effects[i];
        out += e.code_a;
        if (!e.code_b.empty()) out += ">" + e.code_b;
        for (double w : e.weight) out += ":" + format_double(w);
        out += ":" + format_double(e.carrier_probability);
    }
    return out;
}

std::vector<PlantedEffect> effects_from_string(const std::string& key, const std::string& value) {
    std::vector<PlantedEffect> out;
    if (value.empty()) return out;
    for (const auto& record : split(value, ';')) {
        auto fields = split(record, ':');
        if (fields.size() != 6)
            throw ConfigError("config key '" + key + "': expected code[>code]:w:w:w:w:carrier, got '" +
                              record + "'");
        PlantedEffect e;
        auto arrow = fields[0].find('>');
        if (arrow == std::string::npos) {
            e.code_a = fields[0];
        } else {
            e.code_a = fields[0].substr(0, arrow);
            e.code_b = fields[0].substr(arrow + 1);
        }
        for (int w = 0; w < kNumOutcomes; ++w)
            e.weight[static_cast<std::size_t>(w)] = parse_double(key, fields[static_cast<std::size_t>(w + 1)]);
        e.carrier_probability = parse_double(key, fields[5]);
        out.push_back(std::move(e));
    }
    return out;
}

std::string rates_to_string(const std::array<double, kNumOutcomes>& rates) {
    std::string out;
    for (int i = 0; i < kNumOutcomes; ++i) {
        if (i) out += ',';
        out += format_double(rates[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::array<double, kNumOutcomes> rates_from_string(const std::string& key, const std::string& value) {
    auto list = parse_double_list(key, value);
    if (list.size() != kNumOutcomes)
        throw ConfigError("config key '" + key + "': expected " + std::to_string(kNumOutcomes) + " values");
    std::array<double, kNumOutcomes> out{};
    for (int i = 0; i < kNumOutcomes; ++i) out[static_cast<std::size_t>(i)] = list[static_cast<std::size_t>(i)];
    return out;
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
    if (key == "buffer_days") buffer_days = static_cast<int>(parse_int(key, value));
    else if (key == "buffer_inclusive") buffer_inclusive = parse_bool(key, value);
    else if (key == "test_fraction") test_fraction = parse_double(key, value);
    else if (key == "n_resamples") n_resamples = static_cast<int>(parse_int(key, value));
    else if (key == "cv_folds_phase1") cv_folds_phase1 = static_cast<int>(parse_int(key, value));
    else if (key == "cv_folds_phase2") cv_folds_phase2 = static_cast<int>(parse_int(key, value));
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "jobs") jobs = static_cast<int>(parse_int(key, value));
    else if (key == "calibration_bins") calibration_bins = static_cast<int>(parse_int(key, value));
    else if (key == "calibration_scheme") {
        if (value == "equal-width") calibration_scheme = BinScheme::EqualWidth;
        else if (value == "quantile") calibration_scheme = BinScheme::Quantile;
        else throw ConfigError("config key 'calibration_scheme': unknown scheme '" + value + "'");
    } else if (key == "union_mode") {
        if (value == "per_outcome") union_mode = UnionMode::PerOutcome;
        else if (value == "pooled") union_mode = UnionMode::Pooled;
        else throw ConfigError("config key 'union_mode': expected per_outcome or pooled");
    } else if (key == "split_mode") {
        if (value == "stratified") split_mode = SplitMode::Stratified;
        else if (value == "simple") split_mode = SplitMode::Simple;
        else throw ConfigError("config key 'split_mode': expected stratified or simple");
    } else if (key == "outcomes") {
        outcomes.clear();
        for (const auto& name : split(value, ',')) {
            auto o = outcome_from_name(name);
            if (!o) throw ConfigError("config key 'outcomes': unknown outcome '" + name + "'");
            outcomes.push_back(*o);
        }
        if (outcomes.empty()) throw ConfigError("config key 'outcomes': empty list");
    } else if (key == "feature_classes") {
        feature_classes.clear();
        for (const auto& name : split(value, ',')) {
            auto c = feature_class_from_name(name);
            if (!c) throw ConfigError("config key 'feature_classes': unknown class '" + name + "'");
            feature_classes.push_back(*c);
        }
        if (feature_classes.empty()) throw ConfigError("config key 'feature_classes': empty list");
    } else if (key == "msmr.min_prevalence") msmr.min_prevalence = parse_double(key, value);
    else if (key == "msmr.mi_keep") msmr.mi_keep = static_cast<int>(parse_int(key, value));
    else if (key == "msmr.jmi_budget") msmr.jmi_budget = static_cast<int>(parse_int(key, value));
    else if (key == "gbm.trees") gbm.trees = parse_int_list(key, value);
    else if (key == "gbm.shrinkage") gbm.shrinkage = parse_double_list(key, value);
    else if (key == "gbm.depth") gbm.depth = parse_int_list(key, value);
    else if (key == "gbm.bag_fraction") gbm.bag_fraction = parse_double(key, value);
    else if (key == "gbm.min_leaf") gbm.min_leaf = static_cast<int>(parse_int(key, value));
    else if (key == "enet.alpha") enet.alpha = parse_double_list(key, value);
    else if (key == "enet.n_lambda") enet.n_lambda = static_cast<int>(parse_int(key, value));
    else if (key == "enet.lambda_min_ratio") enet.lambda_min_ratio = parse_double(key, value);
    else if (key == "tspm.max_pair_entries")
        tspm_max_pair_entries = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "synth.n_patients") synth.n_patients = static_cast<std::size_t>(parse_int(key, value));
    else if (key == "synth.n_codes") synth.n_codes = static_cast<int>(parse_int(key, value));
    else if (key == "synth.mean_events") synth.mean_events = parse_double(key, value);
    else if (key == "synth.history_days") synth.history_days = static_cast<int>(parse_int(key, value));
    else if (key == "synth.effect_min_days")
        synth.effect_min_days_before_index = static_cast<int>(parse_int(key, value));
    else if (key == "synth.buffer_days") synth.buffer_days = static_cast<int>(parse_int(key, value));
    else if (key == "synth.target_rates") synth.target_rate = rates_from_string(key, value);
    else if (key == "synth.age_weights") synth.age_weight = rates_from_string(key, value);
    else if (key == "synth.male_weights") synth.male_weight = rates_from_string(key, value);
    else if (key == "synth.raw_effects") synth.raw_effects = effects_from_string(key, value);
    else if (key == "synth.seq_effects") synth.sequence_effects = effects_from_string(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

std::string PipelineConfig::serialize() const {
    std::ostringstream out;
    out << "buffer_days=" << buffer_days << "\n";
    out << "buffer_inclusive=" << (buffer_inclusive ? 1 : 0) << "\n";
    out << "test_fraction=" << format_double(test_fraction) << "\n";
    out << "n_resamples=" << n_resamples << "\n";
    out << "cv_folds_phase1=" << cv_folds_phase1 << "\n";
    out << "cv_folds_phase2=" << cv_folds_phase2 << "\n";
    out << "seed=" << seed << "\n";
    out << "jobs=" << jobs << "\n";
    out << "calibration_bins=" << calibration_bins << "\n";
    out << "calibration_scheme=" << bin_scheme_name(calibration_scheme) << "\n";
    out << "union_mode=" << (union_mode == UnionMode::PerOutcome ? "per_outcome" : "pooled") << "\n";
    out << "split_mode=" << (split_mode == SplitMode::Stratified ? "stratified" : "simple") << "\n";
    {
        out << "outcomes=";
        for (std::size_t i = 0; i < outcomes.size(); ++i)
            out << (i ? "," : "") << outcome_name(outcomes[i]);
        out << "\n";
        out << "feature_classes=";
        for (std::size_t i = 0; i < feature_classes.size(); ++i)
            out << (i ? "," : "") << feature_class_name(feature_classes[i]);
        out << "\n";
    }
    out << "msmr.min_prevalence=" << format_double(msmr.min_prevalence) << "\n";
    out << "msmr.mi_keep=" << msmr.mi_keep << "\n";
    out << "msmr.jmi_budget=" << msmr.jmi_budget << "\n";
    out << "gbm.trees=" << join_list(gbm.trees) << "\n";
    out << "gbm.shrinkage=" << join_list(gbm.shrinkage) << "\n";
    out << "gbm.depth=" << join_list(gbm.depth) << "\n";
    out << "gbm.bag_fraction=" << format_double(gbm.bag_fraction) << "\n";
    out << "gbm.min_leaf=" << gbm.min_leaf << "\n";
    out << "enet.alpha=" << join_list(enet.alpha) << "\n";
    out << "enet.n_lambda=" << enet.n_lambda << "\n";
    out << "enet.lambda_min_ratio=" << format_double(enet.lambda_min_ratio) << "\n";
    out << "tspm.max_pair_entries=" << tspm_max_pair_entries << "\n";
    out << "synth.n_patients=" << synth.n_patients << "\n";
    out << "synth.n_codes=" << synth.n_codes << "\n";
    out << "synth.mean_events=" << format_double(synth.mean_events) << "\n";
    out << "synth.history_days=" << synth.history_days << "\n";
    out << "synth.effect_min_days=" << synth.effect_min_days_before_index << "\n";
    out << "synth.buffer_days=" << synth.buffer_days << "\n";
    out << "synth.target_rates=" << rates_to_string(synth.target_rate) << "\n";
    out << "synth.age_weights=" << rates_to_string(synth.age_weight) << "\n";
    out << "synth.male_weights=" << rates_to_string(synth.male_weight) << "\n";
    out << "synth.raw_effects=" << effects_to_string(synth.raw_effects) << "\n";
    out << "synth.seq_effects=" << effects_to_string(synth.sequence_effects) << "\n";
    return out.str();
}

PipelineConfig PipelineConfig::parse(const std::string& text) {
    PipelineConfig config;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        config.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    // basic validation
    if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
        throw ConfigError("test_fraction must be in (0,1)");
    if (config.n_resamples < 1 || config.cv_folds_phase1 < 1 || config.cv_folds_phase2 < 1)
        throw ConfigError("counts must be >= 1");
    if (config.buffer_days < 0) throw ConfigError("buffer_days must be non-negative");
    return config;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void PipelineConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write config file: " + path);
    out << serialize();
}

}  // namespace mlho
