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

#include "mlho/capi.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

#include "mlho/config.hpp"
#include "mlho/pipeline.hpp"
#include "mlho/synth.hpp"

namespace {

thread_local std::string g_last_error = "";

int set_error(const std::exception& e) {
    g_last_error = e.what();
    if (dynamic_cast<const mlho::ConfigError*>(&e)) return MLHO_ERR_CONFIG;
    if (dynamic_cast<const mlho::DataError*>(&e)) return MLHO_ERR_DATA;
    return MLHO_ERR_RUNTIME;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return MLHO_OK;
    } catch (const std::exception& e) {
        return set_error(e);
    } catch (...) {
        g_last_error = "unknown error";
        return MLHO_ERR_RUNTIME;
    }
}

int invalid_argument(const char* message) {
    g_last_error = message;
    return MLHO_ERR_RUNTIME;
}

}  // namespace

struct mlho_config {
    mlho::PipelineConfig config;
};

struct mlho_cohort {
    mlho::Cohort cohort;
};

extern "C" {

const char* mlho_last_error(void) { return g_last_error.c_str(); }

int mlho_config_create(mlho_config** out) {
    if (!out) return invalid_argument("mlho_config_create: out is NULL");
    return guarded([&] { *out = new mlho_config{}; });
}

int mlho_config_load(const char* path, mlho_config** out) {
    if (!path || !out) return invalid_argument("mlho_config_load: NULL argument");
    return guarded([&] { *out = new mlho_config{mlho::PipelineConfig::load(path)}; });
}

int mlho_config_set(mlho_config* config, const char* key, const char* value) {
    if (!config || !key || !value) return invalid_argument("mlho_config_set: NULL argument");
    return guarded([&] { config->config.set(key, value); });
}

int mlho_config_save(const mlho_config* config, const char* path) {
    if (!config || !path) return invalid_argument("mlho_config_save: NULL argument");
    return guarded([&] { config->config.save(path); });
}

void mlho_config_destroy(mlho_config* config) { delete config; }

int mlho_synth_generate(const mlho_config* config, const char* out_dir) {
    if (!config || !out_dir) return invalid_argument("mlho_synth_generate: NULL argument");
    return guarded([&] {
        mlho::GeneratorSpec spec = config->config.synth;
        spec.seed = config->config.seed;
        auto [cohort, truth] = mlho::generate_cohort(spec);
        mlho::write_cohort_files(cohort, out_dir);
        mlho::write_ground_truth_files(spec, truth, cohort, out_dir);
    });
}

int mlho_cohort_load(const mlho_config* config, const char* events_path,
                     const char* demographics_path, const char* outcomes_path, mlho_cohort** out) {
    if (!config || !events_path || !demographics_path || !outcomes_path || !out)
        return invalid_argument("mlho_cohort_load: NULL argument");
    return guarded([&] {
        mlho::Cohort raw = mlho::ingest_files(events_path, demographics_path, outcomes_path);
        mlho::Cohort buffered = mlho::apply_temporal_buffer(raw, config->config.buffer_days,
                                                            config->config.buffer_inclusive);
        *out = new mlho_cohort{std::move(buffered)};
    });
}

void mlho_cohort_destroy(mlho_cohort* cohort) { delete cohort; }

int mlho_cohort_summary(const mlho_cohort* cohort, char** out_text) {
    if (!cohort || !out_text) return invalid_argument("mlho_cohort_summary: NULL argument");
    return guarded([&] {
        mlho::CohortSummary summary = mlho::cohort_summary(cohort->cohort);
        mlho::ScenarioTable scenarios = mlho::scenario_probabilities(cohort->cohort);
        std::string text = mlho::summary_text(summary, &scenarios);
        char* buf = static_cast<char*>(std::malloc(text.size() + 1));
        if (!buf) throw mlho::Error("out of memory");
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out_text = buf;
    });
}

void mlho_string_free(char* text) { std::free(text); }

int mlho_run_phase1(const mlho_config* config, const mlho_cohort* cohort, const char* out_dir) {
    if (!config || !cohort || !out_dir) return invalid_argument("mlho_run_phase1: NULL argument");
    return guarded([&] {
        std::filesystem::create_directories(out_dir);
        mlho::Phase1Report report = mlho::run_phase1(cohort->cohort, config->config);
        mlho::save_phase1(report, (std::filesystem::path(out_dir) / "phase1.json").string());
    });
}

int mlho_run_phase2(const mlho_config* config, const mlho_cohort* cohort, const char* phase1_path,
                    const char* out_dir) {
    if (!config || !cohort || !phase1_path || !out_dir)
        return invalid_argument("mlho_run_phase2: NULL argument");
    return guarded([&] {
        std::filesystem::create_directories(out_dir);
        mlho::Phase1Report phase1 = mlho::load_phase1(phase1_path);
        mlho::Phase2Report report = mlho::run_phase2(cohort->cohort, config->config, phase1);
        mlho::save_phase2(report, (std::filesystem::path(out_dir) / "phase2.json").string());
    });
}

int mlho_emit_reports(const char* phase1_path, const char* phase2_path, const char* out_dir,
                      const char* cluster_map_path) {
    if (!phase1_path || !phase2_path || !out_dir)
        return invalid_argument("mlho_emit_reports: NULL argument");
    return guarded([&] {
        mlho::Phase1Report phase1 = mlho::load_phase1(phase1_path);
        mlho::Phase2Report phase2 = mlho::load_phase2(phase2_path);
        mlho::emit_reports(phase1, phase2, out_dir, cluster_map_path ? cluster_map_path : "");
    });
}

int mlho_run_all(const mlho_config* config, const mlho_cohort* cohort, const char* out_dir,
                 const char* cluster_map_path) {
    if (!config || !cohort || !out_dir) return invalid_argument("mlho_run_all: NULL argument");
    return guarded([&] {
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        mlho::Phase1Report phase1 = mlho::run_phase1(cohort->cohort, config->config);
        mlho::save_phase1(phase1, (fs::path(out_dir) / "phase1.json").string());
        mlho::Phase2Report phase2 = mlho::run_phase2(cohort->cohort, config->config, phase1);
        mlho::save_phase2(phase2, (fs::path(out_dir) / "phase2.json").string());
        mlho::emit_reports(phase1, phase2, out_dir, cluster_map_path ? cluster_map_path : "");
    });
}

}  // extern "C"
