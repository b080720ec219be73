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

/*
 * C API of the mlho shared library. All functions return a status code
 * (MLHO_OK on success); on failure mlho_last_error() carries a message for
 * the calling thread. Handles are opaque and freed with their destroy
 * function. The status codes double as process exit codes for the CLI.
 */

#ifndef MLHO_CAPI_H
#define MLHO_CAPI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mlho_status {
    MLHO_OK = 0,
    MLHO_ERR_CONFIG = 2,
    MLHO_ERR_DATA = 3,
    MLHO_ERR_RUNTIME = 4
} mlho_status;

typedef struct mlho_config mlho_config;
typedef struct mlho_cohort mlho_cohort;

/* Message describing the most recent failure on this thread; never NULL. */
const char* mlho_last_error(void);

/* --- configuration ------------------------------------------------------ */

int mlho_config_create(mlho_config** out);                      /* defaults */
int mlho_config_load(const char* path, mlho_config** out);      /* key=value file */
int mlho_config_set(mlho_config* config, const char* key, const char* value);
int mlho_config_save(const mlho_config* config, const char* path);
void mlho_config_destroy(mlho_config* config);

/* --- synthetic data ------------------------------------------------------ */

/* Writes events.csv, demographics.csv, outcomes.csv, ground_truth.txt and
 * true_probs.txt into out_dir, using the synth.* keys and master seed. */
int mlho_synth_generate(const mlho_config* config, const char* out_dir);

/* --- cohort -------------------------------------------------------------- */

/* Ingests the three input files and applies the configured temporal buffer. */
int mlho_cohort_load(const mlho_config* config, const char* events_path,
                     const char* demographics_path, const char* outcomes_path,
                     mlho_cohort** out);
void mlho_cohort_destroy(mlho_cohort* cohort);

/* Human-readable cohort summary (counts, rates, scenario probabilities).
 * The returned string is freed with mlho_string_free. */
int mlho_cohort_summary(const mlho_cohort* cohort, char** out_text);
void mlho_string_free(char* text);

/* --- pipeline ------------------------------------------------------------ */

/* Runs phase 1 and writes phase1.json into out_dir. */
int mlho_run_phase1(const mlho_config* config, const mlho_cohort* cohort, const char* out_dir);

/* Runs phase 2 against a stored phase-1 report; writes phase2.json. */
int mlho_run_phase2(const mlho_config* config, const mlho_cohort* cohort,
                    const char* phase1_path, const char* out_dir);

/* Emits the delimited report files plus manifest.txt from stored phase
 * reports. cluster_map_path may be NULL. */
int mlho_emit_reports(const char* phase1_path, const char* phase2_path, const char* out_dir,
                      const char* cluster_map_path);

/* phase1 + phase2 + reports in one call; writes phase1.json, phase2.json,
 * the report files and manifest.txt into out_dir. */
int mlho_run_all(const mlho_config* config, const mlho_cohort* cohort, const char* out_dir,
                 const char* cluster_map_path);

#ifdef __cplusplus
}
#endif

#endif /* MLHO_CAPI_H */
