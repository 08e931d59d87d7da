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


#include "cryoctl/cryoctl.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cryoctl/compiler.hpp"
#include "cryoctl/config.hpp"
#include "cryoctl/error.hpp"
#include "cryoctl/experiments.hpp"
#include "cryoctl/io.hpp"
#include "cryoctl/memory_image.hpp"
#include "cryoctl/metrics.hpp"

#ifndef CRYOCTL_VERSION
#define CRYOCTL_VERSION "0.0.0"
#endif

struct cryoctl_config {
    cryoctl::Config cfg;
};

struct cryoctl_program {
    std::vector<std::string> names;
    std::vector<cryoctl::CompiledProgram> variants;
};

struct cryoctl_image {
    cryoctl::MemoryImage image;
};

struct cryoctl_waveform {
    cryoctl::BasebandWaveform bb;
};

struct cryoctl_result {
    cryoctl::ExperimentResult result;
};

namespace {

using cryoctl::Config;

thread_local std::string g_last_error;

cryoctl_status fail(cryoctl_status status, std::string message) {
    g_last_error = std::move(message);
    return status;
}

/// Runs `fn`, mapping library exceptions onto status codes.
template <typename Fn>
cryoctl_status guarded(Fn&& fn) {
    try {
        fn();
        return CRYOCTL_OK;
    } catch (const cryoctl::CapacityError& e) {
        return fail(CRYOCTL_ERR_CAPACITY, e.what());
    } catch (const cryoctl::RangeError& e) {
        return fail(CRYOCTL_ERR_RANGE, e.what());
    } catch (const cryoctl::ValidationError& e) {
        return fail(CRYOCTL_ERR_VALIDATION, e.what());
    } catch (const cryoctl::ParseError& e) {
        return fail(CRYOCTL_ERR_PARSE, e.what());
    } catch (const cryoctl::ConfigError& e) {
        return fail(CRYOCTL_ERR_CONFIG, e.what());
    } catch (const cryoctl::IoError& e) {
        return fail(CRYOCTL_ERR_IO, e.what());
    } catch (const std::bad_alloc&) {
        return fail(CRYOCTL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return fail(CRYOCTL_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(CRYOCTL_ERR_INTERNAL, "unknown error");
    }
}

cryoctl_status null_argument(const char* name) {
    return fail(CRYOCTL_ERR_INVALID_ARGUMENT, std::string(name) + " must not be NULL");
}

cryoctl_status copy_out(const std::string& text, char* buffer, size_t capacity, size_t* needed) {
    const size_t size = text.size() + 1;
    if (needed != nullptr) {
        *needed = size;
    }
    if (buffer == nullptr || capacity < size) {
        if (buffer == nullptr && capacity == 0 && needed != nullptr) {
            return CRYOCTL_ERR_BUFFER_TOO_SMALL;
        }
        return fail(CRYOCTL_ERR_BUFFER_TOO_SMALL,
                    "buffer holds " + std::to_string(capacity) + " bytes, " + std::to_string(size) + " needed");
    }
    std::memcpy(buffer, text.c_str(), size);
    return CRYOCTL_OK;
}

cryoctl_status copy_bytes(const std::vector<std::uint8_t>& bytes, uint8_t* buffer, size_t capacity, size_t* needed) {
    if (needed != nullptr) {
        *needed = bytes.size();
    }
    if (buffer == nullptr || capacity < bytes.size()) {
        return fail(CRYOCTL_ERR_BUFFER_TOO_SMALL,
                    "buffer holds " + std::to_string(capacity) + " bytes, " + std::to_string(bytes.size()) + " needed");
    }
    std::memcpy(buffer, bytes.data(), bytes.size());
    return CRYOCTL_OK;
}

cryoctl::Spectrum spectrum_of(const Config& cfg, const cryoctl::BasebandWaveform& bb) {
    if (bb.empty()) {
        throw cryoctl::ValidationError("waveform is empty");
    }
    const cryoctl::RfSignal rf = cryoctl::upconvert(bb, cfg.tx);
    return cryoctl::compute_spectrum(rf, cfg.analysis.window, cfg.analysis.fft_len);
}

/// Adds IMD3 when a second tone within 6 dB of the carrier is present.
void add_two_tone(const cryoctl::Spectrum& s, double lo_hz, cryoctl::MetricsReport& report) {
    const std::size_t lobe = s.lobe_halfwidth();
    const std::size_t lo_bin = s.bin_of(lo_hz);
    std::size_t best = s.size();
    double best_power = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        const std::size_t dt = k > s.tone_bin ? k - s.tone_bin : s.tone_bin - k;
        const std::size_t dl = k > lo_bin ? k - lo_bin : lo_bin - k;
        if (dt <= 2 * lobe + 1 || dl <= 2 * lobe + 1) {
            continue;
        }
        if (s.power[k] > best_power) {
            best_power = s.power[k];
            best = k;
        }
    }
    if (best == s.size() || s.tone_power <= 0.0 || s.lobe_power(best) < s.tone_power * std::pow(10.0, -0.6)) {
        return;
    }
    const auto tt = cryoctl::two_tone_report(s, s.freq_hz[s.tone_bin], s.freq_hz[best]);
    report.imd3_dbc = tt.imd3_dbc;
}

}  // namespace

extern "C" {

const char* cryoctl_version(void) {
    return CRYOCTL_VERSION;
}

const char* cryoctl_status_name(cryoctl_status status) {
    switch (status) {
        case CRYOCTL_OK: return "ok";
        case CRYOCTL_ERR_INVALID_ARGUMENT: return "invalid argument";
        case CRYOCTL_ERR_CONFIG: return "config error";
        case CRYOCTL_ERR_CAPACITY: return "capacity exceeded";
        case CRYOCTL_ERR_VALIDATION: return "validation error";
        case CRYOCTL_ERR_PARSE: return "parse error";
        case CRYOCTL_ERR_RANGE: return "range error";
        case CRYOCTL_ERR_IO: return "i/o error";
        case CRYOCTL_ERR_BUFFER_TOO_SMALL: return "buffer too small";
        case CRYOCTL_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

const char* cryoctl_last_error(void) {
    return g_last_error.c_str();
}

// ---- Configuration -------------------------------------------------------

cryoctl_status cryoctl_config_parse(const char* json_text, cryoctl_config** out) {
    if (json_text == nullptr) return null_argument("json_text");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new cryoctl_config{cryoctl::parse_config(json_text)}; });
}

cryoctl_status cryoctl_config_load(const char* path, cryoctl_config** out) {
    if (path == nullptr) return null_argument("path");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new cryoctl_config{cryoctl::load_config(path)}; });
}

cryoctl_status cryoctl_config_to_json(const cryoctl_config* cfg, char* buffer, size_t capacity, size_t* needed) {
    if (cfg == nullptr) return null_argument("cfg");
    std::string text;
    const cryoctl_status st = guarded([&] { text = cfg->cfg.to_json().dump(2) + "\n"; });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_config_set_seed(cryoctl_config* cfg, uint64_t seed) {
    if (cfg == nullptr) return null_argument("cfg");
    if (cfg->cfg.experiment) {
        cfg->cfg.experiment->seed = seed;
    }
    return CRYOCTL_OK;
}

cryoctl_status cryoctl_config_set_jobs(cryoctl_config* cfg, unsigned jobs) {
    if (cfg == nullptr) return null_argument("cfg");
    if (jobs == 0) return fail(CRYOCTL_ERR_INVALID_ARGUMENT, "jobs must be at least 1");
    if (cfg->cfg.experiment) {
        cfg->cfg.experiment->jobs = jobs;
    }
    return CRYOCTL_OK;
}

void cryoctl_config_free(cryoctl_config* cfg) {
    delete cfg;
}

// ---- Compilation ---------------------------------------------------------

cryoctl_status cryoctl_compile(const cryoctl_config* cfg, const char* program_text, cryoctl_program** out) {
    if (cfg == nullptr) return null_argument("cfg");
    if (program_text == nullptr) return null_argument("program_text");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] {
        const auto variants = cryoctl::expand_oracle(cryoctl::parse_program(program_text));
        const cryoctl::Lab lab(cryoctl::lab_config(cfg->cfg), cryoctl::make_backend(cfg->cfg));
        // Programs from files must fit one instruction list; only the
        // experiment protocols spread long sequences over sweep triggers.
        cryoctl::CompileOptions options;
        options.split_long_lists = false;
        auto program = std::make_unique<cryoctl_program>();
        for (const auto& v : variants) {
            program->names.push_back(v.name);
            program->variants.push_back(lab.compile(v.ir, options));
        }
        *out = program.release();
    });
}

size_t cryoctl_program_variant_count(const cryoctl_program* program) {
    return program == nullptr ? 0 : program->variants.size();
}

static cryoctl_status check_variant(const cryoctl_program* program, size_t variant) {
    if (program == nullptr) return null_argument("program");
    if (variant >= program->variants.size()) {
        return fail(CRYOCTL_ERR_INVALID_ARGUMENT, "variant " + std::to_string(variant) + " out of range (" +
                                                      std::to_string(program->variants.size()) + " variants)");
    }
    return CRYOCTL_OK;
}

cryoctl_status cryoctl_program_variant_name(const cryoctl_program* program, size_t variant, char* buffer,
                                            size_t capacity, size_t* needed) {
    if (auto st = check_variant(program, variant); st != CRYOCTL_OK) return st;
    return copy_out(program->names[variant], buffer, capacity, needed);
}

cryoctl_status cryoctl_program_report_json(const cryoctl_program* program, size_t variant, char* buffer,
                                           size_t capacity, size_t* needed) {
    if (auto st = check_variant(program, variant); st != CRYOCTL_OK) return st;
    std::string text;
    const auto& v = program->variants[variant];
    const cryoctl_status st = guarded([&] { text = v.report.to_json(v.plan); });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_program_image(const cryoctl_program* program, size_t variant, cryoctl_image** out) {
    if (auto st = check_variant(program, variant); st != CRYOCTL_OK) return st;
    if (out == nullptr) return null_argument("out");
    return guarded([&] { *out = new cryoctl_image{program->variants[variant].image}; });
}

void cryoctl_program_free(cryoctl_program* program) {
    delete program;
}

// ---- Memory images -------------------------------------------------------

cryoctl_status cryoctl_image_load(const char* path, cryoctl_image** out) {
    if (path == nullptr) return null_argument("path");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new cryoctl_image{cryoctl::load_image(path)}; });
}

cryoctl_status cryoctl_image_from_bytes(const uint8_t* bytes, size_t size, cryoctl_image** out) {
    if (bytes == nullptr && size > 0) return null_argument("bytes");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new cryoctl_image{cryoctl::parse_image({bytes, size})}; });
}

cryoctl_status cryoctl_image_from_listing(const char* text, cryoctl_image** out) {
    if (text == nullptr) return null_argument("text");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new cryoctl_image{cryoctl::parse_listing(text)}; });
}

cryoctl_status cryoctl_image_save(const cryoctl_image* image, const char* path) {
    if (image == nullptr) return null_argument("image");
    if (path == nullptr) return null_argument("path");
    return guarded([&] { cryoctl::save_image(image->image, path); });
}

cryoctl_status cryoctl_image_serialize(const cryoctl_image* image, uint8_t* buffer, size_t capacity,
                                       size_t* needed) {
    if (image == nullptr) return null_argument("image");
    std::vector<std::uint8_t> bytes;
    const cryoctl_status st = guarded([&] { bytes = cryoctl::serialize(image->image); });
    return st == CRYOCTL_OK ? copy_bytes(bytes, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_image_disassemble(const cryoctl_image* image, const cryoctl_config* cfg, char* buffer,
                                         size_t capacity, size_t* needed) {
    if (image == nullptr) return null_argument("image");
    std::string text;
    const cryoctl_status st = guarded([&] {
        text = cryoctl::disassemble(image->image, cfg != nullptr ? cfg->cfg.tx : cryoctl::TxConfig{});
    });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_image_instruction_count(const cryoctl_image* image, size_t* count) {
    if (image == nullptr) return null_argument("image");
    if (count == nullptr) return null_argument("count");
    *count = image->image.instruction_count();
    return CRYOCTL_OK;
}

cryoctl_status cryoctl_image_validate(const cryoctl_image* image) {
    if (image == nullptr) return null_argument("image");
    return guarded([&] { cryoctl::validate(image->image); });
}

void cryoctl_image_free(cryoctl_image* image) {
    delete image;
}

// ---- Waveforms -----------------------------------------------------------

cryoctl_status cryoctl_execute(const cryoctl_config* cfg, const cryoctl_image* image, cryoctl_waveform** out) {
    if (cfg == nullptr) return null_argument("cfg");
    if (image == nullptr) return null_argument("image");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    return guarded([&] { *out = new cryoctl_waveform{cryoctl::execute(image->image, cfg->cfg.tx)}; });
}

size_t cryoctl_waveform_length(const cryoctl_waveform* waveform) {
    return waveform == nullptr ? 0 : waveform->bb.size();
}

double cryoctl_waveform_sample_rate(const cryoctl_waveform* waveform) {
    return waveform == nullptr ? 0.0 : waveform->bb.sample_rate;
}

cryoctl_status cryoctl_waveform_samples(const cryoctl_waveform* waveform, int32_t* i_codes, int32_t* q_codes,
                                        size_t capacity) {
    if (waveform == nullptr) return null_argument("waveform");
    const size_t n = std::min(capacity, waveform->bb.size());
    if (i_codes != nullptr) {
        std::copy_n(waveform->bb.i_samples.begin(), n, i_codes);
    }
    if (q_codes != nullptr) {
        std::copy_n(waveform->bb.q_samples.begin(), n, q_codes);
    }
    return CRYOCTL_OK;
}

cryoctl_status cryoctl_waveform_metrics_json(const cryoctl_config* cfg, const cryoctl_waveform* waveform,
                                             char* buffer, size_t capacity, size_t* needed) {
    if (cfg == nullptr) return null_argument("cfg");
    if (waveform == nullptr) return null_argument("waveform");
    std::string text;
    const cryoctl_status st = guarded([&] {
        const cryoctl::Spectrum s = spectrum_of(cfg->cfg, waveform->bb);
        cryoctl::MetricsReport report = cryoctl::analyze(s, cfg->cfg.tx.lo_freq, cfg->cfg.analysis.snr_bandwidth_hz);
        add_two_tone(s, cfg->cfg.tx.lo_freq, report);
        text = report.to_json();
    });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_waveform_spectrum_csv(const cryoctl_config* cfg, const cryoctl_waveform* waveform,
                                             char* buffer, size_t capacity, size_t* needed) {
    if (cfg == nullptr) return null_argument("cfg");
    if (waveform == nullptr) return null_argument("waveform");
    std::string text;
    const cryoctl_status st = guarded([&] { text = cryoctl::spectrum_csv(spectrum_of(cfg->cfg, waveform->bb)); });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

void cryoctl_waveform_free(cryoctl_waveform* waveform) {
    delete waveform;
}

// ---- Experiments ---------------------------------------------------------

cryoctl_status cryoctl_experiment_run(const cryoctl_config* cfg, cryoctl_result** out) {
    if (cfg == nullptr) return null_argument("cfg");
    if (out == nullptr) return null_argument("out");
    *out = nullptr;
    if (!cfg->cfg.experiment) {
        return fail(CRYOCTL_ERR_CONFIG, "configuration has no 'experiment' section");
    }
    return guarded([&] {
        const cryoctl::Lab lab(cryoctl::lab_config(cfg->cfg), cryoctl::make_backend(cfg->cfg));
        *out = new cryoctl_result{cryoctl::run_experiment(lab, *cfg->cfg.experiment)};
    });
}

cryoctl_status cryoctl_result_csv(const cryoctl_result* result, char* buffer, size_t capacity, size_t* needed) {
    if (result == nullptr) return null_argument("result");
    std::string text;
    const cryoctl_status st = guarded([&] { text = result->result.csv(); });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_result_table_json(const cryoctl_result* result, char* buffer, size_t capacity,
                                         size_t* needed) {
    if (result == nullptr) return null_argument("result");
    std::string text;
    const cryoctl_status st = guarded([&] {
        nlohmann::ordered_json j;
        j["schema"] = "cryoctl.table/1";
        j["kind"] = result->result.kind;
        j["columns"] = result->result.columns;
        j["rows"] = result->result.rows;
        text = j.dump(2) + "\n";
    });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

cryoctl_status cryoctl_result_summary_json(const cryoctl_result* result, char* buffer, size_t capacity,
                                           size_t* needed) {
    if (result == nullptr) return null_argument("result");
    std::string text;
    const cryoctl_status st = guarded([&] { text = result->result.summary_json(); });
    return st == CRYOCTL_OK ? copy_out(text, buffer, capacity, needed) : st;
}

void cryoctl_result_free(cryoctl_result* result) {
    delete result;
}

// ---- Utilities -----------------------------------------------------------

cryoctl_status cryoctl_readout_correct(const double measured[2], double f0, double f1, double corrected[2],
                                       int* clamped) {
    if (measured == nullptr) return null_argument("measured");
    if (corrected == nullptr) return null_argument("corrected");
    return guarded([&] {
        const auto r = cryoctl::readout_correct({measured[0], measured[1]}, f0, f1);
        corrected[0] = r.p[0];
        corrected[1] = r.p[1];
        if (clamped != nullptr) {
            *clamped = r.clamped ? 1 : 0;
        }
    });
}

cryoctl_status cryoctl_write_file(const char* path, const void* data, size_t size) {
    if (path == nullptr) return null_argument("path");
    if (data == nullptr && size > 0) return null_argument("data");
    return guarded([&] {
        cryoctl::write_file_atomic(path, std::string(static_cast<const char*>(data), size));
    });
}

}  // extern "C"
