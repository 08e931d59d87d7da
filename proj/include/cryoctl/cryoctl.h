// Copyright 2026 The cryoctl Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/*
 * C interface to the cryoctl controller model.
 *
 * Objects are opaque handles returned through `out` parameters and
 * released with the matching *_free. Every fallible call returns a
 * cryoctl_status; on failure cryoctl_last_error() describes the problem
 * (thread-local, valid until the next failing call on that thread).
 *
 * Text and byte outputs use a caller-provided buffer: the call stores the
 * required size (including the terminating NUL for text) in *needed and
 * returns CRYOCTL_ERR_BUFFER_TOO_SMALL when `capacity` is insufficient. Pass
 * a NULL buffer with capacity 0 to query the size.
 */
#ifndef CRYOCTL_CRYOCTL_H
#define CRYOCTL_CRYOCTL_H

#include <stddef.h>
#include <stdint.h>

#if defined(CRYOCTL_BUILDING_LIBRARY)
#define CRYOCTL_API __attribute__((visibility("default")))
#else
#define CRYOCTL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cryoctl_status {
    CRYOCTL_OK = 0,
    CRYOCTL_ERR_INVALID_ARGUMENT = 1, /* NULL handle, bad index */
    CRYOCTL_ERR_CONFIG = 2,           /* configuration rejected */
    CRYOCTL_ERR_CAPACITY = 3,         /* controller memory exceeded */
    CRYOCTL_ERR_VALIDATION = 4,       /* inconsistent image or program */
    CRYOCTL_ERR_PARSE = 5,            /* malformed program, listing or image */
    CRYOCTL_ERR_RANGE = 6,            /* value outside its admissible range */
    CRYOCTL_ERR_IO = 7,               /* file could not be read or written */
    CRYOCTL_ERR_BUFFER_TOO_SMALL = 8,
    CRYOCTL_ERR_INTERNAL = 9
} cryoctl_status;

typedef struct cryoctl_config cryoctl_config;
typedef struct cryoctl_program cryoctl_program;
typedef struct cryoctl_image cryoctl_image;
typedef struct cryoctl_waveform cryoctl_waveform;
typedef struct cryoctl_result cryoctl_result;

CRYOCTL_API const char* cryoctl_version(void);
CRYOCTL_API const char* cryoctl_status_name(cryoctl_status status);
CRYOCTL_API const char* cryoctl_last_error(void);

/* ---- Configuration --------------------------------------------------- */

/* Parses a JSON configuration (see the README for the schema). Also accepts
 * a run manifest, whose embedded configuration is used. */
CRYOCTL_API cryoctl_status cryoctl_config_parse(const char* json_text, cryoctl_config** out);
CRYOCTL_API cryoctl_status cryoctl_config_load(const char* path, cryoctl_config** out);
/* Complete configuration with defaults filled in, as JSON. */
CRYOCTL_API cryoctl_status cryoctl_config_to_json(const cryoctl_config* cfg, char* buffer, size_t capacity,
                                                  size_t* needed);
/* Overrides experiment.seed / experiment.jobs (no-op without an experiment). */
CRYOCTL_API cryoctl_status cryoctl_config_set_seed(cryoctl_config* cfg, uint64_t seed);
CRYOCTL_API cryoctl_status cryoctl_config_set_jobs(cryoctl_config* cfg, unsigned jobs);
CRYOCTL_API void cryoctl_config_free(cryoctl_config* cfg);

/* ---- Compilation ----------------------------------------------------- */

/* Compiles gate-program text. A program containing an `oracle` line yields
 * one variant per Deutsch-Jozsa oracle; otherwise a single variant "main".
 * Each variant must fit one instruction list (2048 entries). */
CRYOCTL_API cryoctl_status cryoctl_compile(const cryoctl_config* cfg, const char* program_text, cryoctl_program** out);
CRYOCTL_API size_t cryoctl_program_variant_count(const cryoctl_program* program);
CRYOCTL_API cryoctl_status cryoctl_program_variant_name(const cryoctl_program* program, size_t variant, char* buffer,
                                                        size_t capacity, size_t* needed);
/* Occupancy report and frequency plan of one variant, as JSON. */
CRYOCTL_API cryoctl_status cryoctl_program_report_json(const cryoctl_program* program, size_t variant, char* buffer,
                                                       size_t capacity, size_t* needed);
/* Copies the memory image of one variant into a new handle. */
CRYOCTL_API cryoctl_status cryoctl_program_image(const cryoctl_program* program, size_t variant, cryoctl_image** out);
CRYOCTL_API void cryoctl_program_free(cryoctl_program* program);

/* ---- Memory images --------------------------------------------------- */

CRYOCTL_API cryoctl_status cryoctl_image_load(const char* path, cryoctl_image** out);
CRYOCTL_API cryoctl_status cryoctl_image_from_bytes(const uint8_t* bytes, size_t size, cryoctl_image** out);
CRYOCTL_API cryoctl_status cryoctl_image_from_listing(const char* text, cryoctl_image** out);
/* Atomic write of the binary image. */
CRYOCTL_API cryoctl_status cryoctl_image_save(const cryoctl_image* image, const char* path);
CRYOCTL_API cryoctl_status cryoctl_image_serialize(const cryoctl_image* image, uint8_t* buffer, size_t capacity,
                                                   size_t* needed);
/* Human-readable listing; `cfg` may be NULL (default transmitter). */
CRYOCTL_API cryoctl_status cryoctl_image_disassemble(const cryoctl_image* image, const cryoctl_config* cfg,
                                                     char* buffer, size_t capacity, size_t* needed);
CRYOCTL_API cryoctl_status cryoctl_image_instruction_count(const cryoctl_image* image, size_t* count);
CRYOCTL_API cryoctl_status cryoctl_image_validate(const cryoctl_image* image);
CRYOCTL_API void cryoctl_image_free(cryoctl_image* image);

/* ---- Waveforms and signal metrics ------------------------------------ */

/* Resets the transmitter and plays every instruction list of the image. */
CRYOCTL_API cryoctl_status cryoctl_execute(const cryoctl_config* cfg, const cryoctl_image* image,
                                           cryoctl_waveform** out);
CRYOCTL_API size_t cryoctl_waveform_length(const cryoctl_waveform* waveform);
CRYOCTL_API double cryoctl_waveform_sample_rate(const cryoctl_waveform* waveform);
/* Copies min(capacity, length) DAC codes; either pointer may be NULL. */
CRYOCTL_API cryoctl_status cryoctl_waveform_samples(const cryoctl_waveform* waveform, int32_t* i_codes,
                                                    int32_t* q_codes, size_t capacity);
/* Upconverts with the configured impairments and reports SNR, SFDR, LO
 * rejection and (for two tones) IMD3 as JSON. */
CRYOCTL_API cryoctl_status cryoctl_waveform_metrics_json(const cryoctl_config* cfg, const cryoctl_waveform* waveform,
                                                         char* buffer, size_t capacity, size_t* needed);
/* Spectrum as CSV (freq_hz, dbc). */
CRYOCTL_API cryoctl_status cryoctl_waveform_spectrum_csv(const cryoctl_config* cfg, const cryoctl_waveform* waveform,
                                                         char* buffer, size_t capacity, size_t* needed);
CRYOCTL_API void cryoctl_waveform_free(cryoctl_waveform* waveform);

/* ---- Experiments ----------------------------------------------------- */

/* Runs the experiment section of the configuration. */
CRYOCTL_API cryoctl_status cryoctl_experiment_run(const cryoctl_config* cfg, cryoctl_result** out);
CRYOCTL_API cryoctl_status cryoctl_result_csv(const cryoctl_result* result, char* buffer, size_t capacity,
                                              size_t* needed);
/* Result table as JSON ({"schema", "columns", "rows"}). */
CRYOCTL_API cryoctl_status cryoctl_result_table_json(const cryoctl_result* result, char* buffer, size_t capacity,
                                                     size_t* needed);
CRYOCTL_API cryoctl_status cryoctl_result_summary_json(const cryoctl_result* result, char* buffer, size_t capacity,
                                                       size_t* needed);
CRYOCTL_API void cryoctl_result_free(cryoctl_result* result);

/* ---- Utilities ------------------------------------------------------- */

/* P = F^-1 P_M for readout fidelities (f0, f1). `corrected` receives the
 * clamped pair; `clamped` (may be NULL) is set to 1 when clamping occurred. */
CRYOCTL_API cryoctl_status cryoctl_readout_correct(const double measured[2], double f0, double f1,
                                                   double corrected[2], int* clamped);
/* Writes bytes to a temporary sibling and renames it over `path`. */
CRYOCTL_API cryoctl_status cryoctl_write_file(const char* path, const void* data, size_t size);

#ifdef __cplusplus
}
#endif

#endif /* CRYOCTL_CRYOCTL_H */
