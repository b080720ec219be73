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

// Command-line front end. Talks to the engine exclusively through the C API
// in mlho/capi.h; exit codes are the mlho_status values (0 ok, 2 config,
// 3 data, 4 runtime).

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mlho/capi.h"

namespace {

struct ConfigDeleter {
    void operator()(mlho_config* p) const { mlho_config_destroy(p); }
};
struct CohortDeleter {
    void operator()(mlho_cohort* p) const { mlho_cohort_destroy(p); }
};
using ConfigPtr = std::unique_ptr<mlho_config, ConfigDeleter>;
using CohortPtr = std::unique_ptr<mlho_cohort, CohortDeleter>;

[[noreturn]] void fail(int status) {
    std::fprintf(stderr, "error: %s\n", mlho_last_error());
    std::exit(status == MLHO_OK ? MLHO_ERR_RUNTIME : status);
}

void check(int status) {
    if (status != MLHO_OK) fail(status);
}

struct CommonOptions {
    std::string config_path;
    std::string seed;
    std::string jobs;
    std::vector<std::string> overrides;  // key=value
};

ConfigPtr make_config(const CommonOptions& options) {
    mlho_config* raw = nullptr;
    if (options.config_path.empty()) check(mlho_config_create(&raw));
    else check(mlho_config_load(options.config_path.c_str(), &raw));
    ConfigPtr config(raw);
    for (const auto& kv : options.overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
            std::exit(MLHO_ERR_CONFIG);
        }
        check(mlho_config_set(config.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
    }
    if (!options.seed.empty()) check(mlho_config_set(config.get(), "seed", options.seed.c_str()));
    if (!options.jobs.empty()) check(mlho_config_set(config.get(), "jobs", options.jobs.c_str()));
    return config;
}

struct InputFiles {
    std::string events, demographics, outcomes;
};

CohortPtr load_cohort(const mlho_config* config, const InputFiles& in) {
    mlho_cohort* raw = nullptr;
    check(mlho_cohort_load(config, in.events.c_str(), in.demographics.c_str(), in.outcomes.c_str(),
                           &raw));
    return CohortPtr(raw);
}

void add_common(CLI::App* cmd, CommonOptions& options) {
    cmd->add_option("--config", options.config_path, "configuration file (key=value lines)");
    cmd->add_option("--seed", options.seed, "master seed override");
    cmd->add_option("--jobs", options.jobs, "worker threads (0 = hardware)");
    cmd->add_option("--set", options.overrides, "extra config overrides, key=value")->take_all();
}

void add_inputs(CLI::App* cmd, InputFiles& in) {
    cmd->add_option("--events", in.events, "events file (patient_id,code,date)")->required();
    cmd->add_option("--demographics", in.demographics, "demographics file")->required();
    cmd->add_option("--outcomes", in.outcomes, "outcomes file")->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mlho - temporal representation mining and outcome prediction pipeline"};
    app.require_subcommand(1);

    CommonOptions common;
    InputFiles inputs;
    std::string out_dir;
    std::string phase1_path, phase2_path, cluster_map;

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort with known ground truth");
    add_common(synth, common);
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* ingest = app.add_subcommand("ingest", "validate input files and print a cohort summary");
    add_common(ingest, common);
    add_inputs(ingest, inputs);

    auto* phase1 = app.add_subcommand("phase1", "iterative feature and algorithm selection");
    add_common(phase1, common);
    add_inputs(phase1, inputs);
    phase1->add_option("--out", out_dir, "output directory (phase1.json)")->required();

    auto* phase2 = app.add_subcommand("phase2", "final modeling per outcome and feature class");
    add_common(phase2, common);
    add_inputs(phase2, inputs);
    phase2->add_option("--phase1", phase1_path, "phase1.json from the phase1 run")->required();
    phase2->add_option("--out", out_dir, "output directory (phase2.json)")->required();

    auto* report = app.add_subcommand("report", "emit delimited reports from stored phase results");
    report->add_option("--phase1", phase1_path, "phase1.json")->required();
    report->add_option("--phase2", phase2_path, "phase2.json")->required();
    report->add_option("--out", out_dir, "output directory")->required();
    report->add_option("--cluster-map", cluster_map, "optional code,cluster_label file");

    auto* run_all = app.add_subcommand("run-all", "phase1 + phase2 + reports in one run");
    add_common(run_all, common);
    add_inputs(run_all, inputs);
    run_all->add_option("--out", out_dir, "output directory")->required();
    run_all->add_option("--cluster-map", cluster_map, "optional code,cluster_label file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : MLHO_ERR_CONFIG;
    }

    if (synth->parsed()) {
        auto config = make_config(common);
        check(mlho_synth_generate(config.get(), out_dir.c_str()));
        std::printf("synthetic cohort written to %s\n", out_dir.c_str());
        return 0;
    }
    if (ingest->parsed()) {
        auto config = make_config(common);
        auto cohort = load_cohort(config.get(), inputs);
        char* text = nullptr;
        check(mlho_cohort_summary(cohort.get(), &text));
        std::fputs(text, stdout);
        mlho_string_free(text);
        return 0;
    }
    if (phase1->parsed()) {
        auto config = make_config(common);
        auto cohort = load_cohort(config.get(), inputs);
        check(mlho_run_phase1(config.get(), cohort.get(), out_dir.c_str()));
        std::printf("phase-1 report written to %s/phase1.json\n", out_dir.c_str());
        return 0;
    }
    if (phase2->parsed()) {
        auto config = make_config(common);
        auto cohort = load_cohort(config.get(), inputs);
        check(mlho_run_phase2(config.get(), cohort.get(), phase1_path.c_str(), out_dir.c_str()));
        std::printf("phase-2 report written to %s/phase2.json\n", out_dir.c_str());
        return 0;
    }
    if (report->parsed()) {
        check(mlho_emit_reports(phase1_path.c_str(), phase2_path.c_str(), out_dir.c_str(),
                                cluster_map.empty() ? nullptr : cluster_map.c_str()));
        std::printf("reports written to %s (see manifest.txt)\n", out_dir.c_str());
        return 0;
    }
    if (run_all->parsed()) {
        auto config = make_config(common);
        auto cohort = load_cohort(config.get(), inputs);
        check(mlho_run_all(config.get(), cohort.get(), out_dir.c_str(),
                           cluster_map.empty() ? nullptr : cluster_map.c_str()));
        std::printf("pipeline complete; reports in %s (see manifest.txt)\n", out_dir.c_str());
        return 0;
    }
    return MLHO_ERR_CONFIG;
}
