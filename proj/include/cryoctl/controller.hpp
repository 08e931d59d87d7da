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
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace cryoctl {

// Phase words are 22-bit unsigned integers; one LSB is 2*pi/2^22 rad.
inline constexpr unsigned kPhaseBits = 22;
inline constexpr std::uint32_t kPhaseModulus = 1u << kPhaseBits;
inline constexpr std::uint32_t kPhaseMask = kPhaseModulus - 1;

inline constexpr std::size_t kEnvelopeCapacity = 40960;
inline constexpr std::size_t kTableCapacity = 8;
inline constexpr std::size_t kListCapacity = 2048;
inline constexpr std::size_t kBanks = 2;
inline constexpr std::size_t kNcosPerBank = 16;

struct NcoState {
    std::uint32_t ftw = 0;
    std::uint32_t phase_acc = 0;
    std::uint32_t ref_phase = 0;
    bool active = false;
};

/// Frequency tuning word for 0 <= f < f_clk/2. Throws RangeError outside
/// that interval.
std::uint32_t freq_to_ftw(double f, double f_clk);

/// Tuning word for a signed baseband offset, -f_clk/2 <= f < f_clk/2.
/// Negative offsets wrap modulo 2^22.
std::uint32_t offset_to_ftw(double offset, double f_clk);

/// Signed frequency synthesized by `ftw` (words >= 2^21 are negative).
double ftw_to_offset(std::uint32_t ftw, double f_clk);

/// Angle in radians to the nearest phase word, wrapped into [0, 2^22).
std::uint32_t radians_to_phase_word(double radians);
double phase_word_to_radians(std::uint32_t word);

/// Advances the accumulator by one clock and returns the instantaneous
/// phase, (phase_acc + ref_phase) mod 2^22.
std::uint32_t nco_step(NcoState& state);

/// One point of envelope memory. `amplitude` is a two's complement code of
/// amp_bits bits (fraction = code / 2^(amp_bits-1)); `phase_mod` is in units
/// of one turn / 2^phase_mod_bits.
struct EnvelopeEntry {
    std::int32_t amplitude = 0;
    std::uint32_t phase_mod = 0;

    static EnvelopeEntry from_fraction(double amplitude, unsigned amp_bits, std::uint32_t phase_mod = 0);
    double fraction(unsigned amp_bits) const;

    friend bool operator==(const EnvelopeEntry&, const EnvelopeEntry&) = default;
};

class EnvelopeMemory {
public:
    explicit EnvelopeMemory(std::size_t capacity = kEnvelopeCapacity);

    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t remaining() const { return capacity_ - entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const EnvelopeEntry& operator[](std::size_t addr) const { return entries_[addr]; }
    const EnvelopeEntry& at(std::size_t addr) const;
    std::span<const EnvelopeEntry> entries() const { return entries_; }

    /// Appends a segment and returns its start address.
    std::size_t append(std::span<const EnvelopeEntry> segment);
    /// Writes one point; addresses past the end extend the memory (gaps are
    /// zero), addresses at or beyond capacity are rejected.
    void write(std::size_t addr, const EnvelopeEntry& entry);

    friend bool operator==(const EnvelopeMemory&, const EnvelopeMemory&) = default;

private:
    std::vector<EnvelopeEntry> entries_;
    std::size_t capacity_;
};

struct EnvelopeRange {
    std::uint32_t start = 0;
    std::uint32_t stop = 0;  // inclusive

    std::size_t length() const { return static_cast<std::size_t>(stop) - start + 1; }
    friend bool operator==(const EnvelopeRange&, const EnvelopeRange&) = default;
};

/// A table entry. A burst plays envelope[start..stop] on the NCO; a
/// phase update is added to the NCO reference phase before the burst, and an
/// instruction without a range takes zero samples.
struct Instruction {
    std::uint8_t nco = 0;
    std::optional<EnvelopeRange> range;
    std::optional<std::uint32_t> phase_update;

    bool has_burst() const { return range.has_value(); }
    std::size_t duration() const { return range ? range->length() : 0; }
    friend bool operator==(const Instruction&, const Instruction&) = default;
};

/// Instruction tables of one bank: up to 8 instructions per NCO.
class InstructionTable {
public:
    /// Appends to the NCO's table and returns the slot; a ninth insertion
    /// throws CapacityError.
    std::size_t add(const Instruction& instruction);
    /// Slot of an identical instruction if one is already stored.
    std::optional<std::size_t> find(const Instruction& instruction) const;
    /// find() or add().
    std::size_t intern(const Instruction& instruction);

    const Instruction& at(std::size_t nco, std::size_t slot) const;
    std::size_t size(std::size_t nco) const { return slots_.at(nco).size(); }
    std::size_t total() const;
    std::span<const Instruction> slots(std::size_t nco) const { return slots_.at(nco); }

    friend bool operator==(const InstructionTable&, const InstructionTable&) = default;

private:
    std::array<std::vector<Instruction>, kNcosPerBank> slots_;
};

/// Entry of the instruction list. `concurrent` starts the entry together with
/// the preceding one (it must address the other bank); this is how the two
/// banks play simultaneous tones.
struct InstructionRef {
    std::uint8_t bank = 0;
    std::uint8_t nco = 0;
    std::uint8_t slot = 0;
    bool concurrent = false;

    friend bool operator==(const InstructionRef&, const InstructionRef&) = default;
};

class InstructionList {
public:
    InstructionList() = default;
    explicit InstructionList(std::vector<InstructionRef> refs);

    void push_back(const InstructionRef& ref);
    std::size_t size() const { return refs_.size(); }
    bool empty() const { return refs_.empty(); }
    const InstructionRef& operator[](std::size_t i) const { return refs_[i]; }
    std::span<const InstructionRef> refs() const { return refs_; }
    auto begin() const { return refs_.begin(); }
    auto end() const { return refs_.end(); }

    friend bool operator==(const InstructionList&, const InstructionList&) = default;

private:
    std::vector<InstructionRef> refs_;
};

struct SpurInjection {
    double offset_hz = 0.0;  // relative to the LO
    double level_dbc = -200.0;
};

struct Impairments {
    std::optional<double> lo_leakage_dbc;
    double iq_gain_mismatch = 1.0;  // Q-path gain relative to I-path
    double iq_phase_error = 0.0;    // radians
    /// Additive diagnostic tones, used to exercise the spur metrics.
    std::vector<SpurInjection> spurs;
};

struct TxConfig {
    double f_clk = 1e9;
    double lo_freq = 13.54e9;
    unsigned dac_bits = 10;
    unsigned amp_bits = 10;
    unsigned phase_mod_bits = 10;
    unsigned pac_addr_bits = 10;
    double gain_db = 0.0;
    bool rf_high = false;
    Impairments impairments;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
    double carrier_hz() const { return rf_high ? 3.0 * lo_freq : lo_freq; }
};

/// DAC codes of one transmitter. The PAC produces i = A sin(phase) and
/// q = A cos(phase), so the complex baseband is q + j*i = A e^{j phase}.
struct BasebandWaveform {
    double sample_rate = 1e9;
    double start_time = 0.0;
    unsigned dac_bits = 10;
    std::vector<std::int32_t> i_samples;
    std::vector<std::int32_t> q_samples;

    std::size_t size() const { return i_samples.size(); }
    bool empty() const { return i_samples.empty(); }
    double duration() const { return static_cast<double>(size()) / sample_rate; }
    double full_scale() const { return static_cast<double>(std::int64_t{1} << (dac_bits - 1)); }
    std::complex<double> analytic(std::size_t n) const {
        const double fs = full_scale();
        return {q_samples[n] / fs, i_samples[n] / fs};
    }
    std::vector<std::complex<double>> analytic() const;
    void append(const BasebandWaveform& other);

    friend bool operator==(const BasebandWaveform&, const BasebandWaveform&) = default;
};

/// Lookup-table phase-to-amplitude converter followed by DAC quantization.
class PhaseToAmplitude {
public:
    explicit PhaseToAmplitude(const TxConfig& cfg);

    /// (i, q) DAC codes for an NCO phase word and envelope point.
    std::pair<std::int32_t, std::int32_t> convert(std::uint32_t phase, const EnvelopeEntry& env) const;
    std::uint32_t table_index(std::uint32_t phase, const EnvelopeEntry& env) const;

private:
    unsigned addr_bits_;
    unsigned amp_bits_;
    unsigned phase_mod_bits_;
    std::int32_t dac_max_;
    std::int32_t dac_min_;
    double dac_scale_;
    std::vector<double> sin_;
    std::vector<double> cos_;
};

std::pair<std::int32_t, std::int32_t> pac_convert(std::uint32_t phase, const EnvelopeEntry& env, const TxConfig& cfg);

/// Quantizes a full-scale fraction to a DAC code, saturating at the rails.
std::int32_t dac_quantize(double fraction, unsigned dac_bits);

/// Upconverted signal as a complex envelope around `carrier_hz`.
struct RfSignal {
    double carrier_hz = 0.0;
    double lo_hz = 0.0;
    double sample_rate = 1e9;
    double start_time = 0.0;
    std::vector<std::complex<double>> envelope;
};

/// I/Q upconversion with gain and the configured mixer impairments.
RfSignal upconvert(const BasebandWaveform& bb, const TxConfig& cfg);

}  // namespace cryoctl
