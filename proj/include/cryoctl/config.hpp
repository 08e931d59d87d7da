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

#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "cryoctl/controller.hpp"
#include "cryoctl/experiments.hpp"
#include "cryoctl/metrics.hpp"
#include "cryoctl/physics.hpp"

namespace cryoctl {

inline constexpr const char* kConfigSchema = "cryoctl.config/1";
inline constexpr const char* kManifestSchema = "cryoctl.manifest/1";

struct BackendConfig {
    enum class Kind { Physics, Analytic };
    Kind kind = Kind::Physics;
    bool ideal_gates = true;    // analytic only
    double depolarizing = 0.0;  // analytic only, per layer
};

struct AnalysisConfig {
    Window window = Window::BlackmanHarris;
    double snr_bandwidth_hz = 25e6;
    std::size_t fft_len = 0;  // 0 = whole waveform
};

/// Everything a run needs. Every field has a default, so `{}` is a valid
/// file; unknown keys are errors.
///
///   {
///     "schema": "cryoctl.config/1",
///     "device":      { "f1_hz", "f2_hz", "j_on_hz", "j_off_hz", "drive_coupling_hz": [q1, q2],
///                      "sigma_detune_hz", "sigma_j_hz", "readout": [{"f0", "f1"}, {"f0", "f1"}],
///                      "crot_readout_fidelity", "residual_excitation", "frame_hz" },
///     "tx":          { "f_clk_hz", "lo_hz", "dac_bits", "amp_bits", "phase_mod_bits",
///                      "pac_addr_bits", "gain_db", "rf_high" },
///     "impairments": { "lo_leakage_dbc", "iq_gain_mismatch", "iq_phase_error_rad",
///                      "spurs": [{"offset_hz", "level_dbc"}] },
///     "calibration": { "rabi_hz", "method": "simulated" | "nominal" },
///     "backend":     { "kind": "physics" | "analytic", "ideal_gates", "depolarizing" },
///     "analysis":    { "window": "rectangular" | "hann" | "blackman-harris", "snr_bandwidth_hz", "fft_len" },
///     "experiment":  { "kind", "sweep": {"start", "stop", "points"}, "shots", "seed", "jobs",
///                      "target": "q1" | "q2", "shape": "rectangular" | "gaussian", "exchange_on",
///                      "control_state", "amplitude", "rb_lengths", "rb_sequences" }
///   }
struct Config {
    DeviceModel device;
    TxConfig tx;
    double rabi_hz = 1e6;
    bool simulated_calibration = true;
    BackendConfig backend;
    AnalysisConfig analysis;
    std::optional<ExperimentSpec> experiment;

    /// Complete snapshot with defaults filled in; parse_config() of the dump
    /// yields an equal configuration.
    nlohmann::ordered_json to_json() const;
};

/// Throws ConfigError listing every problem found (unknown keys, wrong
/// types, out-of-range values). A run manifest is accepted in place of a
/// configuration; its "config" member is parsed.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

LabConfig lab_config(const Config& cfg);
std::shared_ptr<const Backend> make_backend(const Config& cfg);

}  // namespace cryoctl
