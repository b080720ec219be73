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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mlho/csv.hpp"
#include "mlho/pipeline.hpp"
#include "mlho/sha256.hpp"

namespace mlho {

namespace {

using nlohmann::json;

const char* kind_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::Raw: return "raw";
        case FeatureKind::Sequence: return "sequence";
        case FeatureKind::Demographic: return "demographic";
    }
    return "?";
}

FeatureKind kind_from_name(const std::string& name) {
    if (name == "raw") return FeatureKind::Raw;
    if (name == "sequence") return FeatureKind::Sequence;
    if (name == "demographic") return FeatureKind::Demographic;
    throw DataError("unknown feature kind: " + name);
}

json feature_to_json(const FeatureDescriptor& f) {
    return json::array({kind_name(f.kind), f.code_a, f.code_b});
}

FeatureDescriptor feature_from_json(const json& j) {
    return {kind_from_name(j.at(0).get<std::string>()), j.at(1).get<std::string>(),
            j.at(2).get<std::string>()};
}

json curve_to_json(const CalibrationCurve& curve) {
    json bins = json::array();
    for (const auto& b : curve.bins) {
        json bin;
        bin["lo"] = b.lo;
        bin["hi"] = b.hi;
        bin["count"] = b.count;
        bin["mean_pred"] = b.mean_pred ? json(*b.mean_pred) : json(nullptr);
        bin["observed"] = b.observed ? json(*b.observed) : json(nullptr);
        bins.push_back(std::move(bin));
    }
    json out;
    out["scheme"] = bin_scheme_name(curve.scheme);
    out["bins"] = std::move(bins);
    return out;
}

CalibrationCurve curve_from_json(const json& j) {
    CalibrationCurve curve;
    curve.scheme = j.at("scheme").get<std::string>() == "quantile" ? BinScheme::Quantile
                                                                   : BinScheme::EqualWidth;
    for (const auto& bin : j.at("bins")) {
        CalibrationBin b;
        b.lo = bin.at("lo").get<double>();
        b.hi = bin.at("hi").get<double>();
        b.count = bin.at("count").get<std::size_t>();
        if (!bin.at("mean_pred").is_null()) b.mean_pred = bin.at("mean_pred").get<double>();
        if (!bin.at("observed").is_null()) b.observed = bin.at("observed").get<double>();
        curve.bins.push_back(b);
    }
    return curve;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write report file: " + path.string());
    out << content;
    if (!out) throw Error("failed writing report file: " + path.string());
}

Outcome outcome_or_throw(const std::string& name) {
    auto o = outcome_from_name(name);
    if (!o) throw DataError("unknown outcome name: " + name);
    return *o;
}

FeatureClass feature_class_or_throw(const std::string& name) {
    auto c = feature_class_from_name(name);
    if (!c) throw DataError("unknown feature class: " + name);
    return *c;
}

}  // namespace

void save_phase1(const Phase1Report& report, const std::string& path) {
    json j;
    json cells = json::array();
    for (const auto& c : report.cells)
        cells.push_back(json{{"outcome", outcome_name(c.outcome)},
                             {"iteration", c.iteration},
                             {"algorithm", c.algorithm},
                             {"auc", c.auc}});
    j["cells"] = std::move(cells);
    json unions;
    for (const auto& [oname, features] : report.union_features) {
        json list = json::array();
        for (const auto& f : features) list.push_back(feature_to_json(f));
        unions[oname] = std::move(list);
    }
    j["union_features"] = std::move(unions);
    json combined = json::array();
    for (const auto& f : report.combined_union) combined.push_back(feature_to_json(f));
    j["combined_union"] = std::move(combined);
    json ranking = json::array();
    for (const auto& [name, value] : report.ranking) ranking.push_back(json::array({name, value}));
    j["ranking"] = std::move(ranking);
    j["top_algorithms"] = report.top_algorithms;
    json selection;
    for (const auto& [oname, rows] : report.selection_example) {
        json list = json::array();
        for (const auto& row : rows)
            list.push_back(json::array(
                {row.rank, kind_name(row.feature.kind), row.feature.code_a, row.feature.code_b, row.mi,
                 row.jmi_gain}));
        selection[oname] = std::move(list);
    }
    j["selection_example"] = std::move(selection);
    write_text_file(path, j.dump(2) + "\n");
}

Phase1Report load_phase1(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open phase-1 report: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("phase-1 report parse error: " + std::string(e.what()));
    }
    Phase1Report report;
    for (const auto& c : j.at("cells"))
        report.cells.push_back({outcome_or_throw(c.at("outcome").get<std::string>()),
                                c.at("iteration").get<int>(), c.at("algorithm").get<std::string>(),
                                c.at("auc").get<double>()});
    for (const auto& [oname, list] : j.at("union_features").items()) {
        auto& features = report.union_features[oname];
        for (const auto& f : list) features.push_back(feature_from_json(f));
    }
    for (const auto& f : j.at("combined_union")) report.combined_union.push_back(feature_from_json(f));
    for (const auto& r : j.at("ranking"))
        report.ranking.emplace_back(r.at(0).get<std::string>(), r.at(1).get<double>());
    report.top_algorithms = j.at("top_algorithms").get<std::vector<std::string>>();
    if (j.contains("selection_example"))
        for (const auto& [oname, list] : j.at("selection_example").items()) {
            auto& rows = report.selection_example[oname];
            for (const auto& r : list) {
                SelectionRow row;
                row.rank = r.at(0).get<int>();
                row.feature = {kind_from_name(r.at(1).get<std::string>()), r.at(2).get<std::string>(),
                               r.at(3).get<std::string>()};
                row.mi = r.at(4).get<double>();
                row.jmi_gain = r.at(5).get<double>();
                rows.push_back(std::move(row));
            }
        }
    return report;
}

void save_phase2(const Phase2Report& report, const std::string& path) {
    json j;
    json cells = json::array();
    for (const auto& c : report.cells)
        cells.push_back(json{{"outcome", outcome_name(c.outcome)},
                             {"feature_class", feature_class_name(c.feature_class)},
                             {"iteration", c.iteration},
                             {"algorithm", c.algorithm},
                             {"auc", c.auc}});
    j["cells"] = std::move(cells);
    json groups;
    for (const auto& [key, group] : report.groups) {
        json g;
        g["mean_auc"] = group.metrics.mean_auc;
        g["ci_lower"] = group.metrics.ci_lower;
        g["ci_upper"] = group.metrics.ci_upper;
        g["per_iteration_auc"] = group.metrics.per_iteration_auc;
        g["model_count"] = group.model_count;
        g["pooled_calibration"] = curve_to_json(group.pooled_calibration);
        json curves = json::array();
        for (const auto& curve : group.per_model_curves) curves.push_back(curve_to_json(curve));
        g["per_model_curves"] = std::move(curves);
        json influence = json::array();
        for (const auto& row : group.influence)
            influence.push_back(json::array({kind_name(row.feature.kind), row.feature.code_a,
                                             row.feature.code_b, row.influence}));
        g["influence"] = std::move(influence);
        groups[key] = std::move(g);
    }
    j["groups"] = std::move(groups);
    json scenarios;
    for (const auto& [name, p] : report.scenarios.probabilities)
        scenarios[name] = json::array({report.scenarios.counts.at(name), p});
    j["scenarios"] = std::move(scenarios);
    j["scenario_violations"] = report.scenarios.violating_patients;
    json summary;
    summary["n_patients"] = report.summary.n_patients;
    summary["mean_age"] = report.summary.mean_age;
    summary["mortality_rate"] = report.summary.mortality_rate;
    for (int o = 0; o < kNumOutcomes; ++o) {
        const OutcomeSummary& os = report.summary.per_outcome[o];
        json entry;
        entry["positives"] = os.positives;
        entry["rate"] = os.rate;
        entry["mean_age_positive"] = os.mean_age_positive ? json(*os.mean_age_positive) : json(nullptr);
        summary[outcome_name(static_cast<Outcome>(o))] = std::move(entry);
    }
    j["cohort_summary"] = std::move(summary);
    write_text_file(path, j.dump(2) + "\n");
}

Phase2Report load_phase2(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open phase-2 report: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("phase-2 report parse error: " + std::string(e.what()));
    }
    Phase2Report report;
    for (const auto& c : j.at("cells"))
        report.cells.push_back({outcome_or_throw(c.at("outcome").get<std::string>()),
                                feature_class_or_throw(c.at("feature_class").get<std::string>()),
                                c.at("iteration").get<int>(), c.at("algorithm").get<std::string>(),
                                c.at("auc").get<double>()});
    for (const auto& [key, g] : j.at("groups").items()) {
        Phase2Group group;
        group.metrics.mean_auc = g.at("mean_auc").get<double>();
        group.metrics.ci_lower = g.at("ci_lower").get<double>();
        group.metrics.ci_upper = g.at("ci_upper").get<double>();
        group.metrics.per_iteration_auc = g.at("per_iteration_auc").get<std::vector<double>>();
        group.model_count = g.at("model_count").get<int>();
        group.pooled_calibration = curve_from_json(g.at("pooled_calibration"));
        for (const auto& curve : g.at("per_model_curves"))
            group.per_model_curves.push_back(curve_from_json(curve));
        for (const auto& row : g.at("influence")) {
            InfluenceRow r;
            r.feature = {kind_from_name(row.at(0).get<std::string>()), row.at(1).get<std::string>(),
                         row.at(2).get<std::string>()};
            r.influence = row.at(3).get<double>();
            group.influence.push_back(std::move(r));
        }
        report.groups[key] = std::move(group);
    }
    for (const auto& [name, entry] : j.at("scenarios").items()) {
        report.scenarios.counts[name] = entry.at(0).get<std::size_t>();
        report.scenarios.probabilities[name] = entry.at(1).get<double>();
    }
    report.scenarios.violating_patients = j.at("scenario_violations").get<std::vector<std::string>>();
    const json& summary = j.at("cohort_summary");
    report.summary.n_patients = summary.at("n_patients").get<std::size_t>();
    report.summary.mean_age = summary.at("mean_age").get<double>();
    report.summary.mortality_rate = summary.at("mortality_rate").get<double>();
    for (int o = 0; o < kNumOutcomes; ++o) {
        const json& entry = summary.at(outcome_name(static_cast<Outcome>(o)));
        OutcomeSummary& os = report.summary.per_outcome[o];
        os.positives = entry.at("positives").get<std::size_t>();
        os.rate = entry.at("rate").get<double>();
        if (!entry.at("mean_age_positive").is_null())
            os.mean_age_positive = entry.at("mean_age_positive").get<double>();
    }
    return report;
}

namespace {

std::map<std::string, std::string> load_cluster_map(const std::string& path) {
    std::map<std::string, std::string> map;
    if (path.empty()) return map;
    std::ifstream in(path);
    if (!in) throw DataError("cannot open cluster mapping file: " + path);
    DelimitedReader reader(in, "cluster map", {"code", "cluster_label"});
    std::vector<std::string> f;
    while (reader.next_row(f)) map[f[0]] = f[1];
    return map;
}

std::string cluster_label(const std::map<std::string, std::string>& map, const FeatureDescriptor& f) {
    if (map.empty() || f.kind == FeatureKind::Demographic) return "";
    auto find = [&](const std::string& code) {
        auto it = map.find(code);
        return it != map.end() ? it->second : code;
    };
    if (f.kind == FeatureKind::Raw) {
        auto it = map.find(f.code_a);
        return it != map.end() ? it->second : "";
    }
    // sequence: label both ends when either is mapped
    if (!map.count(f.code_a) && !map.count(f.code_b)) return "";
    return find(f.code_a) + "->" + find(f.code_b);
}

std::string optional_field(const std::optional<double>& v) {
    return v ? format_double(*v) : "";
}

}  // namespace

std::vector<std::pair<std::string, std::string>> emit_reports(const Phase1Report& phase1,
                                                              const Phase2Report& phase2,
                                                              const std::string& out_dir,
                                                              const std::string& cluster_map_path) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!fs::is_directory(out_dir)) throw Error("cannot create report directory: " + out_dir);
    const auto cluster = load_cluster_map(cluster_map_path);

    std::map<std::string, std::string> files;  // name -> content

    {
        std::ostringstream out;
        out << "metric,value\n";
        out << "n_patients," << phase2.summary.n_patients << "\n";
        out << "mean_age," << format_double(phase2.summary.mean_age) << "\n";
        for (int o = 0; o < kNumOutcomes; ++o) {
            const char* name = outcome_name(static_cast<Outcome>(o));
            const OutcomeSummary& os = phase2.summary.per_outcome[o];
            out << name << "_count," << os.positives << "\n";
            out << name << "_rate," << format_double(os.rate) << "\n";
            out << name << "_mean_age_positive," << optional_field(os.mean_age_positive) << "\n";
        }
        out << "mortality_rate," << format_double(phase2.summary.mortality_rate) << "\n";
        files["cohort_summary.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "scenario,count,probability\n";
        for (const auto& [name, p] : phase2.scenarios.probabilities)
            out << name << ',' << phase2.scenarios.counts.at(name) << ',' << format_double(p) << "\n";
        files["scenarios.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "outcome,iteration,algorithm,auc\n";
        for (const auto& c : phase1.cells)
            out << outcome_name(c.outcome) << ',' << c.iteration << ',' << c.algorithm << ','
                << format_double(c.auc) << "\n";
        files["phase1_auc.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "rank,algorithm,median_auc\n";
        for (std::size_t i = 0; i < phase1.ranking.size(); ++i)
            out << (i + 1) << ',' << phase1.ranking[i].first << ','
                << format_double(phase1.ranking[i].second) << "\n";
        files["phase1_ranking.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "outcome,kind,code_a,code_b\n";
        for (const auto& [oname, features] : phase1.union_features)
            for (const auto& f : features)
                out << oname << ',' << (f.kind == FeatureKind::Raw ? "raw" : f.kind == FeatureKind::Sequence ? "sequence" : "demographic")
                    << ',' << f.code_a << ',' << f.code_b << "\n";
        for (const auto& f : phase1.combined_union)
            out << "all," << (f.kind == FeatureKind::Raw ? "raw" : f.kind == FeatureKind::Sequence ? "sequence" : "demographic")
                << ',' << f.code_a << ',' << f.code_b << "\n";
        files["phase1_union.csv"] = out.str();
    }
    for (const auto& [oname, rows] : phase1.selection_example) {
        std::ostringstream out;
        out << "rank,kind,code_a,code_b,mi,jmi_gain\n";
        for (const auto& row : rows) {
            out << row.rank << ','
                << (row.feature.kind == FeatureKind::Raw ? "raw" : row.feature.kind == FeatureKind::Sequence ? "sequence" : "demographic")
                << ',' << row.feature.code_a << ',' << row.feature.code_b << ','
                << format_double(row.mi) << ',';
            if (row.rank > 1) out << format_double(row.jmi_gain);
            out << "\n";
        }
        files["msmr_selection_" + oname + ".csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "outcome,feature_class,iteration,algorithm,auc\n";
        for (const auto& c : phase2.cells)
            out << outcome_name(c.outcome) << ',' << feature_class_name(c.feature_class) << ','
                << c.iteration << ',' << c.algorithm << ',' << format_double(c.auc) << "\n";
        files["metrics_auc.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "outcome,feature_class,mean_auc,ci_lower,ci_upper,n_models\n";
        for (const auto& [key, group] : phase2.groups) {
            auto slash = key.find('/');
            out << key.substr(0, slash) << ',' << key.substr(slash + 1) << ','
                << format_double(group.metrics.mean_auc) << ',' << format_double(group.metrics.ci_lower)
                << ',' << format_double(group.metrics.ci_upper) << ',' << group.model_count << "\n";
        }
        files["table1.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "outcome,feature_class,bin,mean_pred,obs_frac,count\n";
        for (const auto& [key, group] : phase2.groups) {
            auto slash = key.find('/');
            const std::string outcome = key.substr(0, slash);
            const std::string fclass = key.substr(slash + 1);
            for (std::size_t b = 0; b < group.pooled_calibration.bins.size(); ++b) {
                const CalibrationBin& bin = group.pooled_calibration.bins[b];
                out << outcome << ',' << fclass << ',' << b << ',' << optional_field(bin.mean_pred)
                    << ',' << optional_field(bin.observed) << ',' << bin.count << "\n";
            }
        }
        files["calibration.csv"] = out.str();
    }
    {
        std::ostringstream out;
        out << "outcome,feature_class,rank,kind,code_a,code_b,cluster,influence\n";
        for (const auto& [key, group] : phase2.groups) {
            auto slash = key.find('/');
            const std::string outcome = key.substr(0, slash);
            const std::string fclass = key.substr(slash + 1);
            for (std::size_t i = 0; i < group.influence.size(); ++i) {
                const InfluenceRow& row = group.influence[i];
                out << outcome << ',' << fclass << ',' << (i + 1) << ','
                    << (row.feature.kind == FeatureKind::Raw ? "raw" : row.feature.kind == FeatureKind::Sequence ? "sequence" : "demographic")
                    << ',' << row.feature.code_a << ',' << row.feature.code_b << ','
                    << cluster_label(cluster, row.feature) << ',' << format_double(row.influence)
                    << "\n";
            }
        }
        files["influence.csv"] = out.str();
    }

    std::vector<std::pair<std::string, std::string>> manifest;
    for (const auto& [name, content] : files) {
        write_text_file(fs::path(out_dir) / name, content);
        manifest.emplace_back(name, sha256_hex(content));
    }
    {
        std::ostringstream out;
        for (const auto& [name, hash] : manifest) out << hash << "  " << name << "\n";
        write_text_file(fs::path(out_dir) / "manifest.txt", out.str());
    }
    return manifest;
}

}  // namespace mlho
