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

#include "cryoctl/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cryoctl/error.hpp"
#include "cryoctl/numeric.hpp"

namespace cryoctl {

std::uint32_t freq_to_ftw(double f, double f_clk) {
    if (!(f_clk > 0.0)) {
        throw RangeError("clock frequency must be positive");
    }
    if (!(f >= 0.0 && f < f_clk / 2.0)) {
        std::ostringstream msg;
        msg << "frequency " << f << " Hz outside [0, " << f_clk / 2.0 << ") Hz";
        throw RangeError(msg.str());
    }
    const long double word = static_cast<long double>(f) * kPhaseModulus / static_cast<long double>(f_clk);
    return static_cast<std::uint32_t>(round_half_away(word)) & kPhaseMask;
}

std::uint32_t offset_to_ftw(double offset, double f_clk) {
    if (!(f_clk > 0.0)) {
        throw RangeError("clock frequency must be positive");
    }
    if (!(offset >= -f_clk / 2.0 && offset < f_clk / 2.0)) {
        std::ostringstream msg;
        msg << "offset " << offset << " Hz outside [" << -f_clk / 2.0 << ", " << f_clk / 2.0 << ") Hz";
        throw RangeError(msg.str());
    }
    const long double word = static_cast<long double>(offset) * kPhaseModulus / static_cast<long double>(f_clk);
    return static_cast<std::uint32_t>(round_half_away(word)) & kPhaseMask;
}

double ftw_to_offset(std::uint32_t ftw, double f_clk) {
    std::int64_t w = ftw & kPhaseMask;
    if (w >= static_cast<std::int64_t>(kPhaseModulus / 2)) {
        w -= kPhaseModulus;
    }
    return static_cast<double>(w) * f_clk / kPhaseModulus;
}

std::uint32_t radians_to_phase_word(double radians) {
    const long double turns = static_cast<long double>(radians) / (2.0L * std::numbers::pi_v<long double>);
    const std::int64_t word = round_half_away(turns * kPhaseModulus);
    return static_cast<std::uint32_t>(word) & kPhaseMask;
}

double phase_word_to_radians(std::uint32_t word) {
    return kTwoPi * static_cast<double>(word & kPhaseMask) / kPhaseModulus;
}

std::uint32_t nco_step(NcoState& state) {
    state.phase_acc = (state.phase_acc + state.ftw) & kPhaseMask;
    return (state.phase_acc + state.ref_phase) & kPhaseMask;
}

EnvelopeEntry EnvelopeEntry::from_fraction(double amplitude, unsigned amp_bits, std::uint32_t phase_mod) {
    const std::int64_t half = std::int64_t{1} << (amp_bits - 1);
    std::int64_t code = round_half_away(amplitude * static_cast<double>(half));
    code = std::clamp<std::int64_t>(code, -half, half - 1);
    return {static_cast<std::int32_t>(code), phase_mod};
}

double EnvelopeEntry::fraction(unsigned amp_bits) const {
    return static_cast<double>(amplitude) / static_cast<double>(std::int64_t{1} << (amp_bits - 1));
}

EnvelopeMemory::EnvelopeMemory(std::size_t capacity) : capacity_(capacity) {}

const EnvelopeEntry& EnvelopeMemory::at(std::size_t addr) const {
    if (addr >= entries_.size()) {
        throw ValidationError("envelope address " + std::to_string(addr) + " beyond written length " +
                              std::to_string(entries_.size()));
    }
    return entries_[addr];
}

std::size_t EnvelopeMemory::append(std::span<const EnvelopeEntry> segment) {
    if (segment.size() > remaining()) {
        throw CapacityError("envelope", capacity_,
                            "envelope memory overflow: segment of " + std::to_string(segment.size()) +
                                " points does not fit in the " + std::to_string(remaining()) +
                                " remaining (capacity " + std::to_string(capacity_) + ")");
    }
    const std::size_t start = entries_.size();
    entries_.insert(entries_.end(), segment.begin(), segment.end());
    return start;
}

void EnvelopeMemory::write(std::size_t addr, const EnvelopeEntry& entry) {
    if (addr >= capacity_) {
        throw CapacityError("envelope", capacity_,
                            "envelope address " + std::to_string(addr) + " beyond capacity " +
                                std::to_string(capacity_));
    }
    if (addr >= entries_.size()) {
        entries_.resize(addr + 1);
    }
    entries_[addr] = entry;
}

std::size_t InstructionTable::add(const Instruction& instruction) {
    if (instruction.nco >= kNcosPerBank) {
        throw ValidationError("NCO index " + std::to_string(instruction.nco) + " out of range");
    }
    auto& list = slots_[instruction.nco];
    if (list.size() >= kTableCapacity) {
        throw CapacityError("instruction table", kTableCapacity,
                            "instruction table of NCO " + std::to_string(instruction.nco) + " is full (" +
                                std::to_string(kTableCapacity) + " instructions per NCO)");
    }
    list.push_back(instruction);
    return list.size() - 1;
}

std::optional<std::size_t> InstructionTable::find(const Instruction& instruction) const {
    if (instruction.nco >= kNcosPerBank) {
        return std::nullopt;
    }
    const auto& list = slots_[instruction.nco];
    auto it = std::find(list.begin(), list.end(), instruction);
    if (it == list.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - list.begin());
}

std::size_t InstructionTable::intern(const Instruction& instruction) {
    if (auto slot = find(instruction)) {
        return *slot;
    }
    return add(instruction);
}

const Instruction& InstructionTable::at(std::size_t nco, std::size_t slot) const {
    if (nco >= kNcosPerBank || slot >= slots_[nco].size()) {
        throw ValidationError("dangling table slot: NCO " + std::to_string(nco) + " slot " + std::to_string(slot));
    }
    return slots_[nco][slot];
}

std::size_t InstructionTable::total() const {
    std::size_t n = 0;
    for (const auto& s : slots_) {
        n += s.size();
    }
    return n;
}

InstructionList::InstructionList(std::vector<InstructionRef> refs) {
    if (refs.size() > kListCapacity) {
        throw CapacityError("instruction list", kListCapacity,
                            "instruction list of " + std::to_string(refs.size()) + " entries exceeds the limit of " +
                                std::to_string(kListCapacity));
    }
    refs_ = std::move(refs);
}

void InstructionList::push_back(const InstructionRef& ref) {
    if (refs_.size() >= kListCapacity) {
        throw CapacityError("instruction list", kListCapacity,
                            "instruction list is full (" + std::to_string(kListCapacity) + " instructions)");
    }
    refs_.push_back(ref);
}

void TxConfig::validate() const {
    std::vector<std::string> problems;
    if (!(f_clk > 0.0)) {
        problems.push_back("f_clk must be positive");
    }
    if (!(lo_freq >= 2e9 && lo_freq <= 20e9)) {
        problems.push_back("lo_freq must lie in [2, 20] GHz");
    }
    if (!(gain_db >= 0.0 && gain_db <= 40.0)) {
        problems.push_back("gain_db must lie in [0, 40] dB");
    }
    auto check_bits = [&](unsigned bits, unsigned lo, unsigned hi, const char* name) {
        if (bits < lo || bits > hi) {
            problems.push_back(std::string(name) + " must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) +
                               "]");
        }
    };
    check_bits(dac_bits, 2, 24, "dac_bits");
    check_bits(amp_bits, 2, 24, "amp_bits");
    check_bits(phase_mod_bits, 1, kPhaseBits, "phase_mod_bits");
    check_bits(pac_addr_bits, 2, kPhaseBits, "pac_addr_bits");
    if (!(impairments.iq_gain_mismatch > 0.0)) {
        problems.push_back("iq_gain_mismatch must be positive");
    }
    if (!problems.empty()) {
        std::string msg = "invalid transmitter configuration:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        throw ConfigError(msg);
    }
}

std::vector<std::complex<double>> BasebandWaveform::analytic() const {
    std::vector<std::complex<double>> out(size());
    for (std::size_t n = 0; n < size(); ++n) {
        out[n] = analytic(n);
    }
    return out;
}

void BasebandWaveform::append(const BasebandWaveform& other) {
    i_samples.insert(i_samples.end(), other.i_samples.begin(), other.i_samples.end());
    q_samples.insert(q_samples.end(), other.q_samples.begin(), other.q_samples.end());
}

std::int32_t dac_quantize(double fraction, unsigned dac_bits) {
    const std::int64_t half = std::int64_t{1} << (dac_bits - 1);
    const std::int64_t code = round_half_away(fraction * static_cast<double>(half));
    return static_cast<std::int32_t>(std::clamp<std::int64_t>(code, -half, half - 1));
}

namespace {
// Beyond this width the lookup table is evaluated on the fly.
constexpr unsigned kMaxTableBits = 16;
}  // namespace

PhaseToAmplitude::PhaseToAmplitude(const TxConfig& cfg)
    : addr_bits_(cfg.pac_addr_bits),
      amp_bits_(cfg.amp_bits),
      phase_mod_bits_(cfg.phase_mod_bits),
      dac_max_(static_cast<std::int32_t>((std::int64_t{1} << (cfg.dac_bits - 1)) - 1)),
      dac_min_(static_cast<std::int32_t>(-(std::int64_t{1} << (cfg.dac_bits - 1)))),
      dac_scale_(static_cast<double>(std::int64_t{1} << (cfg.dac_bits - 1))) {
    if (addr_bits_ <= kMaxTableBits) {
        const std::size_t n = std::size_t{1} << addr_bits_;
        sin_.resize(n);
        cos_.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            const double angle = kTwoPi * static_cast<double>(k) / static_cast<double>(n);
            sin_[k] = std::sin(angle);
            cos_[k] = std::cos(angle);
        }
    }
}

std::uint32_t PhaseToAmplitude::table_index(std::uint32_t phase, const EnvelopeEntry& env) const {
    const std::uint32_t mod = (env.phase_mod & ((1u << phase_mod_bits_) - 1)) << (kPhaseBits - phase_mod_bits_);
    const std::uint32_t effective = (phase + mod) & kPhaseMask;
    return effective >> (kPhaseBits - addr_bits_);
}

std::pair<std::int32_t, std::int32_t> PhaseToAmplitude::convert(std::uint32_t phase, const EnvelopeEntry& env) const {
    if (env.amplitude == 0) {
        return {0, 0};
    }
    const std::uint32_t idx = table_index(phase, env);
    double s;
    double c;
    if (!sin_.empty()) {
        s = sin_[idx];
        c = cos_[idx];
    } else {
        const double angle = kTwoPi * static_cast<double>(idx) / static_cast<double>(std::uint64_t{1} << addr_bits_);
        s = std::sin(angle);
        c = std::cos(angle);
    }
    const double a = env.fraction(amp_bits_);
    auto quantize = [&](double x) {
        const std::int64_t code = round_half_away(x * dac_scale_);
        return static_cast<std::int32_t>(std::clamp<std::int64_t>(code, dac_min_, dac_max_));
    };
    return {quantize(a * s), quantize(a * c)};
}

std::pair<std::int32_t, std::int32_t> pac_convert(std::uint32_t phase, const EnvelopeEntry& env, const TxConfig& cfg) {
    return PhaseToAmplitude(cfg).convert(phase, env);
}

RfSignal upconvert(const BasebandWaveform& bb, const TxConfig& cfg) {
    cfg.validate();
    RfSignal rf;
    rf.carrier_hz = cfg.carrier_hz();
    rf.lo_hz = cfg.carrier_hz();
    rf.sample_rate = bb.sample_rate;
    rf.start_time = bb.start_time;
    rf.envelope.resize(bb.size());

    // Mixer with Q-path gain g and quadrature error phi:
    //   y = mu z + nu conj(z), mu = (1 + g e^{-j phi})/2, nu = (1 - g e^{j phi})/2.
    const double g = cfg.impairments.iq_gain_mismatch;
    const double phi = cfg.impairments.iq_phase_error;
    const std::complex<double> mu = 0.5 * (1.0 + g * std::polar(1.0, -phi));
    const std::complex<double> nu = 0.5 * (1.0 - g * std::polar(1.0, phi));
    const double gain = std::pow(10.0, cfg.gain_db / 20.0);

    double peak = 0.0;
    for (std::size_t n = 0; n < bb.size(); ++n) {
        const std::complex<double> z = bb.analytic(n);
        peak = std::max(peak, std::abs(z));
        rf.envelope[n] = mu * z + nu * std::conj(z);
    }

    // Leakage and injected spurs are specified relative to the carrier, taken
    // as the peak baseband magnitude.
    const double fs = bb.sample_rate;
    if (cfg.impairments.lo_leakage_dbc) {
        const double leak = peak * std::pow(10.0, *cfg.impairments.lo_leakage_dbc / 20.0);
        for (auto& y : rf.envelope) {
            y += leak;
        }
    }
    for (const auto& spur : cfg.impairments.spurs) {
        const double amp = peak * std::pow(10.0, spur.level_dbc / 20.0);
        const std::uint32_t ftw = offset_to_ftw(spur.offset_hz, fs);
        for (std::size_t n = 0; n < rf.envelope.size(); ++n) {
            const std::uint64_t word = (static_cast<std::uint64_t>(ftw) * n) & kPhaseMask;
            rf.envelope[n] += std::polar(amp, phase_word_to_radians(static_cast<std::uint32_t>(word)));
        }
    }
    for (auto& y : rf.envelope) {
        y *= gain;
    }
    return rf;
}

}  // namespace cryoctl
