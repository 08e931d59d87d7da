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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cryoctl/controller.hpp"
#include "cryoctl/memory_image.hpp"

namespace cryoctl {

/// Gate set. X, Y, mX, mY are pi/2 rotations; X2 and Y2 are pi rotations.
/// Z(theta) advances the qubit's rotating frame by theta, so every later
/// rotation axis of that qubit is shifted by +theta.
enum class GateKind { I, X, Y, mX, mY, X2, Y2, Z, CROT_high, CROT_low };

enum class EnvelopeShape { Rectangular, Gaussian };

const char* gate_name(GateKind kind);
std::optional<GateKind> gate_from_name(const std::string& name);
const char* shape_name(EnvelopeShape shape);

struct Gate {
    GateKind kind = GateKind::I;
    int target = 0;  // 0 = Q1, 1 = Q2
    double angle = 0.0;  // Z only, radians
    std::optional<EnvelopeShape> shape;
    std::optional<double> duration;   // seconds; calibrated value when unset
    std::optional<double> amplitude;  // DAC fraction; overrides calibration
    bool concurrent = false;          // starts with the previous gate
    std::size_t line = 0;             // source line, 0 when built in code
};

struct GateIR {
    std::vector<Gate> gates;
    bool exchange_on = false;
    /// Gate counts after which a logical layer (e.g. one Clifford) ends.
    std::vector<std::size_t> layer_ends;

    GateIR& add(GateKind kind, int target) {
        Gate g;
        g.kind = kind;
        g.target = target;
        gates.push_back(g);
        return *this;
    }
    GateIR& z(int target, double angle) {
        Gate g;
        g.kind = GateKind::Z;
        g.target = target;
        g.angle = angle;
        gates.push_back(g);
        return *this;
    }
};

/// One drive tone. `condition` is the state of the other qubit the tone is
/// resonant for (-1 when exchange is off).
struct FrequencySlot {
    int qubit = 0;
    int condition = -1;
    double freq_hz = 0.0;
    double offset_hz = 0.0;
    std::uint32_t ftw = 0;
    std::uint8_t bank = 0;
    std::uint8_t nco = 0;
};

struct FrequencyPlan {
    double lo_hz = 13.54e9;
    double f_clk = 1e9;
    bool exchange_on = false;
    double j_hz = 0.0;
    std::array<double, 2> qubit_hz{};
    std::vector<FrequencySlot> slots;

    /// Index of the slot of `qubit` for control state `condition`
    /// (ignored when exchange is off).
    std::size_t slot_index(int qubit, int condition = -1) const;
    const FrequencySlot& slot(int qubit, int condition = -1) const { return slots[slot_index(qubit, condition)]; }
};

/// Plans one NCO per qubit, or with exchange on four slots at f_i +/- J/2.
/// Throws RangeError naming the qubit whose offset is beyond Nyquist.
FrequencyPlan allocate_frequencies(std::array<double, 2> qubit_hz,
                                   double lo_hz,
                                   double f_clk,
                                   bool exchange_on,
                                   double j_hz = 0.0);

struct BurstCalibration {
    std::size_t samples = 0;
    double amplitude = 0.0;  // rectangular-envelope DAC fraction
    /// Reference-phase increments (radians) applied to every slot of the
    /// plan after this burst, indexed like FrequencyPlan::slots.
    std::vector<double> frame_corrections;
};

struct SlotCalibration {
    /// Measured rotation-axis offset; the slot's NCO starts at -axis_offset.
    double axis_offset = 0.0;
    BurstCalibration half;  // pi/2
    BurstCalibration full;  // pi
};

struct CalibrationSet {
    std::vector<SlotCalibration> slots;
    EnvelopeShape shape = EnvelopeShape::Rectangular;
    /// Emit frame corrections as reference-phase updates.
    bool apply_frame_corrections = true;

    /// Throws ValidationError when durations are not positive whole samples
    /// or amplitudes are out of range.
    void validate(const FrequencyPlan& plan) const;
};

/// Closed-form calibration: rectangular bursts whose rotation angle is exact
/// up to amplitude quantization, accounting for the sinc roll-off of the
/// DAC hold. With exchange on, pi/2 bursts are synchronized so the other
/// conditional transition completes whole cycles.
CalibrationSet nominal_calibration(const FrequencyPlan& plan,
                                   const std::array<double, 2>& drive_coupling,
                                   const TxConfig& tx,
                                   double rabi_hz = 1e6);

/// Envelope points at t_k = k / f_clk, quantized to amp_bits.
std::vector<EnvelopeEntry> synthesize_envelope(EnvelopeShape shape,
                                               std::size_t samples,
                                               double amplitude,
                                               unsigned amp_bits,
                                               std::uint32_t phase_mod = 0);

/// Unquantized Gaussian profile (peak 1, endpoints 0) used by the
/// synthesizer and for equal-area scaling.
std::vector<double> gaussian_profile(std::size_t samples);

struct CompileOptions {
    bool deduplicate = true;
    /// Split lists longer than 2048 entries across triggers instead of
    /// failing.
    bool split_long_lists = true;
};

/// One emitted burst, kept for analytic backends and reports.
struct BurstRecord {
    std::size_t gate = 0;   // index into GateIR::gates
    std::size_t slot = 0;   // FrequencyPlan slot
    std::size_t samples = 0;
    double amplitude = 0.0;
    double axis = 0.0;      // radians
    double angle = 0.0;     // nominal rotation angle, radians
    double area = 0.0;      // sum of quantized envelope fractions
};

struct CompileReport {
    std::size_t envelope_used = 0;
    std::size_t envelope_capacity = kEnvelopeCapacity;
    std::size_t instructions = 0;
    std::size_t triggers = 0;
    std::array<std::array<std::size_t, kNcosPerBank>, kBanks> table_usage{};
    std::size_t samples = 0;
    bool split = false;

    std::string to_json(const FrequencyPlan& plan) const;
};

struct CompiledProgram {
    MemoryImage image;
    FrequencyPlan plan;
    GateIR ir;
    std::vector<BurstRecord> bursts;
    CompileReport report;
};

CompiledProgram compile(const GateIR& ir,
                        const FrequencyPlan& plan,
                        const CalibrationSet& cal,
                        const TxConfig& tx,
                        const CompileOptions& options = {});

/// Result of parsing program text; `oracle_at` marks an `oracle` line.
struct ParsedProgram {
    GateIR ir;
    std::optional<std::size_t> oracle_at;
};

ParsedProgram parse_program(const std::string& text);

struct OracleVariant {
    std::string name;
    bool constant = false;
    GateIR ir;
};

/// Deutsch-Jozsa oracles: constant = CNOT, Z-CNOT; balanced = I, X2 (on Q2).
std::vector<OracleVariant> dj_oracles();
/// Expands the `oracle` placeholder of a parsed program into the four
/// variants; a program without a placeholder yields one variant named "main".
std::vector<OracleVariant> expand_oracle(const ParsedProgram& program);

/// The full DJ program (preparation, oracle placeholder, unpreparation).
std::string dj_program_text();

}  // namespace cryoctl
