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

#include "cryoctl/compiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "cryoctl/error.hpp"
#include "cryoctl/numeric.hpp"

namespace cryoctl {

namespace {

constexpr std::array<std::pair<GateKind, const char*>, 10> kGateNames{{
    {GateKind::I, "I"},
    {GateKind::X, "X"},
    {GateKind::Y, "Y"},
    {GateKind::mX, "mX"},
    {GateKind::mY, "mY"},
    {GateKind::X2, "X2"},
    {GateKind::Y2, "Y2"},
    {GateKind::Z, "Z"},
    {GateKind::CROT_high, "CROT_high"},
    {GateKind::CROT_low, "CROT_low"},
}};

}  // namespace

const char* gate_name(GateKind kind) {
    for (const auto& [k, name] : kGateNames) {
        if (k == kind) {
            return name;
        }
    }
    return "?";
}

std::optional<GateKind> gate_from_name(const std::string& name) {
    for (const auto& [k, n] : kGateNames) {
        if (name == n) {
            return k;
        }
    }
    return std::nullopt;
}

const char* shape_name(EnvelopeShape shape) {
    return shape == EnvelopeShape::Gaussian ? "gaussian" : "rectangular";
}

// ---------------------------------------------------------------------------
// Frequency plan

std::size_t FrequencyPlan::slot_index(int qubit, int condition) const {
    if (qubit < 0 || qubit > 1) {
        throw ValidationError("qubit index " + std::to_string(qubit) + " out of range");
    }
    if (!exchange_on) {
        return static_cast<std::size_t>(qubit);
    }
    if (condition != 0 && condition != 1) {
        throw ValidationError("exchange-on slots need a control condition of 0 or 1");
    }
    return static_cast<std::size_t>(2 * qubit + condition);
}

FrequencyPlan allocate_frequencies(std::array<double, 2> qubit_hz,
                                   double lo_hz,
                                   double f_clk,
                                   bool exchange_on,
                                   double j_hz) {
    FrequencyPlan plan;
    plan.lo_hz = lo_hz;
    plan.f_clk = f_clk;
    plan.exchange_on = exchange_on;
    plan.j_hz = exchange_on ? j_hz : 0.0;
    plan.qubit_hz = qubit_hz;

    auto make = [&](int qubit, int condition, double freq, int bank, int nco) {
        FrequencySlot s;
        s.qubit = qubit;
        s.condition = condition;
        s.freq_hz = freq;
        s.offset_hz = freq - lo_hz;
        s.bank = static_cast<std::uint8_t>(bank);
        s.nco = static_cast<std::uint8_t>(nco);
        try {
            s.ftw = offset_to_ftw(s.offset_hz, f_clk);
        } catch (const RangeError&) {
            std::ostringstream msg;
            msg << "cannot allocate Q" << qubit + 1 << (condition < 0 ? "" : condition ? " (high)" : " (low)")
                << ": offset " << s.offset_hz / 1e6 << " MHz from the LO exceeds the +/-" << f_clk / 2e6
                << " MHz baseband range";
            throw RangeError(msg.str());
        }
        plan.slots.push_back(s);
    };
    if (!exchange_on) {
        make(0, -1, qubit_hz[0], 0, 0);
        make(1, -1, qubit_hz[1], 1, 0);
    } else {
        if (!(j_hz > 0.0)) {
            throw RangeError("exchange-on allocation needs J > 0");
        }
        // Q1 tones on bank 0, Q2 tones on bank 1; two NCOs per qubit.
        make(0, 0, qubit_hz[0] - j_hz / 2.0, 0, 0);
        make(0, 1, qubit_hz[0] + j_hz / 2.0, 0, 1);
        make(1, 0, qubit_hz[1] - j_hz / 2.0, 1, 0);
        make(1, 1, qubit_hz[1] + j_hz / 2.0, 1, 1);
    }
    return plan;
}

// ---------------------------------------------------------------------------
// Calibration

void CalibrationSet::validate(const FrequencyPlan& plan) const {
    std::vector<std::string> problems;
    if (slots.size() != plan.slots.size()) {
        problems.push_back("calibration has " + std::to_string(slots.size()) + " slots, plan has " +
                           std::to_string(plan.slots.size()));
    }
    for (std::size_t s = 0; s < slots.size(); ++s) {
        for (const auto* b : {&slots[s].half, &slots[s].full}) {
            if (b->samples < 2) {
                problems.push_back("slot " + std::to_string(s) + ": burst shorter than 2 samples");
            }
            if (!(b->amplitude >= 0.0 && b->amplitude < 1.0)) {
                problems.push_back("slot " + std::to_string(s) + ": amplitude outside [0, 1)");
            }
            if (!b->frame_corrections.empty() && b->frame_corrections.size() != plan.slots.size()) {
                problems.push_back("slot " + std::to_string(s) + ": frame corrections do not match the plan");
            }
        }
    }
    if (!problems.empty()) {
        std::string msg = "invalid calibration:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        throw ValidationError(msg);
    }
}

CalibrationSet nominal_calibration(const FrequencyPlan& plan,
                                   const std::array<double, 2>& drive_coupling,
                                   const TxConfig& tx,
                                   double rabi_hz) {
    if (!(rabi_hz > 0.0)) {
        throw RangeError("target Rabi frequency must be positive");
    }
    const double dt = 1.0 / tx.f_clk;
    const double half_scale = static_cast<double>(std::int64_t{1} << (tx.amp_bits - 1));

    // With exchange on, choose the pi/2 time so the detuned conditional
    // transition (generalized Rabi rate sqrt(W^2 + J^2)) completes m whole
    // cycles: W = J / sqrt(16 m^2 - 1), with m the smallest giving W <= rabi.
    std::size_t sync_samples = 0;
    if (plan.exchange_on) {
        int m = 1;
        while (plan.j_hz / std::sqrt(16.0 * m * m - 1.0) > rabi_hz) {
            ++m;
        }
        const double t = std::sqrt(16.0 * m * m - 1.0) / (4.0 * plan.j_hz);
        sync_samples = static_cast<std::size_t>(round_half_away(t * tx.f_clk));
    }

    CalibrationSet cal;
    for (const auto& slot : plan.slots) {
        const double c = drive_coupling[slot.qubit] * sinc(slot.offset_hz / tx.f_clk);
        auto needed = [&](std::size_t n) { return 1.0 / (4.0 * c * static_cast<double>(n) * dt); };

        std::size_t best_n = 0;
        double best_a = 0.0;
        double best_err = std::numeric_limits<double>::infinity();
        auto consider = [&](std::size_t n) {
            const double a = needed(n);
            const double code = static_cast<double>(round_half_away(a * half_scale));
            if (code < 1.0 || code >= half_scale) {
                return;
            }
            const double err = std::abs(code / half_scale - a) / a;
            if (err < best_err - 1e-15) {
                best_err = err;
                best_n = n;
                best_a = code / half_scale;
            }
        };
        if (plan.exchange_on) {
            consider(sync_samples);
        } else {
            // Trim the duration a little so the quantized amplitude lands
            // closer to the exact pi/2 area.
            const auto n0 = static_cast<std::int64_t>(round_half_away(tx.f_clk / (4.0 * rabi_hz)));
            for (std::int64_t n = std::max<std::int64_t>(2, n0 - 16); n <= n0 + 16; ++n) {
                consider(static_cast<std::size_t>(n));
            }
        }
        if (best_n == 0) {
            throw RangeError("Q" + std::to_string(slot.qubit + 1) + " cannot reach the requested Rabi frequency");
        }
        SlotCalibration sc;
        // The DAC hold delays each sample by half a clock; at offset f the
        // drive axis leads the transition frame by pi f / f_clk.
        sc.axis_offset = std::numbers::pi * slot.offset_hz / tx.f_clk;
        sc.half = BurstCalibration{best_n, best_a, std::vector<double>(plan.slots.size(), 0.0)};
        sc.full = BurstCalibration{2 * best_n, best_a, std::vector<double>(plan.slots.size(), 0.0)};
        cal.slots.push_back(sc);
    }
    return cal;
}

// ---------------------------------------------------------------------------
// Envelopes

std::vector<double> gaussian_profile(std::size_t samples) {
    std::vector<double> g(samples);
    const double t_total = static_cast<double>(samples);
    const double sigma = t_total / 6.0;
    const double floor = std::exp(-0.5 * 9.0);
    for (std::size_t k = 0; k < samples; ++k) {
        const double x = (static_cast<double>(k) - t_total / 2.0) / sigma;
        g[k] = (std::exp(-0.5 * x * x) - floor) / (1.0 - floor);
    }
    return g;
}

std::vector<EnvelopeEntry> synthesize_envelope(EnvelopeShape shape,
                                               std::size_t samples,
                                               double amplitude,
                                               unsigned amp_bits,
                                               std::uint32_t phase_mod) {
    if (samples < 2) {
        throw RangeError("envelope must span at least 2 samples");
    }
    if (!(amplitude >= 0.0 && amplitude < 1.0)) {
        throw RangeError("envelope amplitude must lie in [0, 1)");
    }
    std::vector<EnvelopeEntry> out(samples);
    if (shape == EnvelopeShape::Rectangular) {
        std::fill(out.begin(), out.end(), EnvelopeEntry::from_fraction(amplitude, amp_bits, phase_mod));
        return out;
    }
    const auto g = gaussian_profile(samples);
    for (std::size_t k = 0; k < samples; ++k) {
        out[k] = EnvelopeEntry::from_fraction(amplitude * g[k], amp_bits, phase_mod);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Compilation

std::string CompileReport::to_json(const FrequencyPlan& plan) const {
    nlohmann::ordered_json j;
    j["schema"] = "cryoctl.compile-report/1";
    j["envelope"] = {{"used", envelope_used}, {"capacity", envelope_capacity}};
    j["instructions"] = instructions;
    j["instruction_capacity"] = kListCapacity;
    j["triggers"] = triggers;
    j["split_across_triggers"] = split;
    j["samples"] = samples;
    nlohmann::ordered_json tables = nlohmann::ordered_json::array();
    for (std::size_t b = 0; b < kBanks; ++b) {
        for (std::size_t k = 0; k < kNcosPerBank; ++k) {
            if (table_usage[b][k] > 0) {
                tables.push_back({{"bank", b}, {"nco", k}, {"used", table_usage[b][k]}, {"capacity", kTableCapacity}});
            }
        }
    }
    j["tables"] = tables;
    nlohmann::ordered_json slots = nlohmann::ordered_json::array();
    for (const auto& s : plan.slots) {
        nlohmann::ordered_json e;
        e["qubit"] = s.qubit + 1;
        if (s.condition >= 0) {
            e["control_state"] = s.condition;
        }
        e["freq_hz"] = s.freq_hz;
        e["offset_hz"] = s.offset_hz;
        e["ftw"] = s.ftw;
        e["bank"] = s.bank;
        e["nco"] = s.nco;
        slots.push_back(e);
    }
    j["frequency_plan"] = {{"lo_hz", plan.lo_hz}, {"exchange_on", plan.exchange_on}, {"j_hz", plan.j_hz}, {"slots", slots}};
    return j.dump(2) + "\n";
}

namespace {

struct BurstSpec {
    std::size_t slot;
    std::size_t samples;
    double amplitude;
    EnvelopeShape shape;
    std::uint32_t phase_mod;
    const std::vector<double>* corrections;  // may be null
    double axis;
    double angle;
};

class Emitter {
public:
    Emitter(const FrequencyPlan& plan, const CalibrationSet& cal, const TxConfig& tx, const CompileOptions& opt)
        : plan_(plan), cal_(cal), tx_(tx), opt_(opt), pending_(plan.slots.size(), 0) {
        image_.amp_bits = tx.amp_bits;
        image_.phase_mod_bits = tx.phase_mod_bits;
        for (std::size_t s = 0; s < plan.slots.size(); ++s) {
            const auto& slot = plan.slots[s];
            image_.ncos[slot.bank][slot.nco].ftw = slot.ftw;
            image_.ncos[slot.bank][slot.nco].ref_phase = radians_to_phase_word(-cal.slots[s].axis_offset);
        }
    }

    void frame_shift(std::size_t slot, std::uint32_t word) { pending_[slot] = (pending_[slot] + word) & kPhaseMask; }

    /// Emits one burst and returns its quantized envelope area.
    double burst(const BurstSpec& b, bool concurrent, std::size_t line) {
        const auto& slot = plan_.slots[b.slot];
        const EnvelopeRange range = envelope(b);
        double area = 0.0;
        for (const auto& e : image_.envelope.entries().subspan(range.start, range.length())) {
            area += e.fraction(tx_.amp_bits);
        }
        Instruction ins;
        ins.nco = slot.nco;
        ins.range = range;
        if (pending_[b.slot] != 0) {
            ins.phase_update = pending_[b.slot];
        }
        std::size_t index;
        try {
            index = image_.tables[slot.bank].intern(ins);
        } catch (const CapacityError& e) {
            throw CapacityError(e.memory(), e.limit(), at_line(line) + e.what());
        }
        pending_[b.slot] = 0;
        refs_.push_back(InstructionRef{slot.bank, slot.nco, static_cast<std::uint8_t>(index), concurrent});
        if (b.corrections && cal_.apply_frame_corrections) {
            for (std::size_t s = 0; s < pending_.size(); ++s) {
                frame_shift(s, radians_to_phase_word((*b.corrections)[s]));
            }
        }
        return area;
    }

    CompiledProgram finish(const GateIR& ir, std::vector<BurstRecord> bursts) {
        // Leftover frame updates become phase-only instructions so that a
        // following trigger sees the intended frames.
        for (std::size_t s = 0; s < pending_.size(); ++s) {
            if (pending_[s] == 0) {
                continue;
            }
            const auto& slot = plan_.slots[s];
            Instruction ins;
            ins.nco = slot.nco;
            ins.phase_update = pending_[s];
            const auto index = image_.tables[slot.bank].intern(ins);
            refs_.push_back(InstructionRef{slot.bank, slot.nco, static_cast<std::uint8_t>(index), false});
            pending_[s] = 0;
        }
        split_lists();

        CompiledProgram out;
        out.report.envelope_used = image_.envelope.size();
        out.report.instructions = refs_.size();
        out.report.triggers = image_.lists.size();
        out.report.split = image_.lists.size() > 1;
        for (std::size_t b = 0; b < kBanks; ++b) {
            for (std::size_t k = 0; k < kNcosPerBank; ++k) {
                out.report.table_usage[b][k] = image_.tables[b].size(k);
            }
        }
        out.report.samples = total_samples();
        validate(image_);
        out.image = std::move(image_);
        out.plan = plan_;
        out.ir = ir;
        out.bursts = std::move(bursts);
        return out;
    }

private:
    static std::string at_line(std::size_t line) { return line ? "line " + std::to_string(line) + ": " : ""; }

    EnvelopeRange envelope(const BurstSpec& b) {
        const auto points = synthesize_envelope(b.shape, b.samples, b.amplitude, tx_.amp_bits, b.phase_mod);
        const auto key = std::make_tuple(points.front().amplitude, points[points.size() / 2].amplitude, b.samples,
                                         b.phase_mod, static_cast<int>(b.shape));
        if (opt_.deduplicate) {
            auto [first, last] = dedup_.equal_range(key);
            for (auto it = first; it != last; ++it) {
                const auto stored = image_.envelope.entries().subspan(it->second.start, it->second.length());
                if (std::equal(stored.begin(), stored.end(), points.begin(), points.end())) {
                    return it->second;
                }
            }
        }
        const std::size_t start = image_.envelope.append(points);
        const EnvelopeRange range{static_cast<std::uint32_t>(start), static_cast<std::uint32_t>(start + b.samples - 1)};
        dedup_.emplace(key, range);
        return range;
    }

    void split_lists() {
        if (refs_.size() > kListCapacity && !opt_.split_long_lists) {
            throw CapacityError("instruction list", kListCapacity,
                                "program needs " + std::to_string(refs_.size()) +
                                    " instructions; the instruction list holds " + std::to_string(kListCapacity));
        }
        InstructionList list;
        std::size_t i = 0;
        while (i < refs_.size()) {
            std::size_t j = i + 1;
            while (j < refs_.size() && refs_[j].concurrent) {
                ++j;
            }
            if (list.size() + (j - i) > kListCapacity) {
                image_.lists.push_back(std::move(list));
                list = InstructionList();
            }
            for (std::size_t k = i; k < j; ++k) {
                list.push_back(refs_[k]);
            }
            i = j;
        }
        if (!list.empty()) {
            image_.lists.push_back(std::move(list));
        }
    }

    std::size_t total_samples() const {
        std::size_t total = 0;
        for (const auto& list : image_.lists) {
            std::size_t i = 0;
            while (i < list.size()) {
                std::size_t j = i + 1;
                std::size_t d = image_.tables[list[i].bank].at(list[i].nco, list[i].slot).duration();
                while (j < list.size() && list[j].concurrent) {
                    d = std::max(d, image_.tables[list[j].bank].at(list[j].nco, list[j].slot).duration());
                    ++j;
                }
                total += d;
                i = j;
            }
        }
        return total;
    }

    const FrequencyPlan& plan_;
    const CalibrationSet& cal_;
    const TxConfig& tx_;
    const CompileOptions& opt_;
    MemoryImage image_;
    std::vector<std::uint32_t> pending_;
    std::vector<InstructionRef> refs_;
    std::multimap<std::tuple<std::int32_t, std::int32_t, std::size_t, std::uint32_t, int>, EnvelopeRange> dedup_;
};

// Axis of each rotation as a fraction of a turn (quarters).
int axis_quarters(GateKind kind) {
    switch (kind) {
        case GateKind::Y:
        case GateKind::Y2:
            return 1;
        case GateKind::mX:
            return 2;
        case GateKind::mY:
            return 3;
        default:
            return 0;
    }
}

bool is_full_rotation(GateKind kind) {
    return kind == GateKind::X2 || kind == GateKind::Y2 || kind == GateKind::CROT_high || kind == GateKind::CROT_low;
}

}  // namespace

CompiledProgram compile(const GateIR& ir,
                        const FrequencyPlan& plan,
                        const CalibrationSet& cal,
                        const TxConfig& tx,
                        const CompileOptions& options) {
    tx.validate();
    cal.validate(plan);
    if (ir.exchange_on != plan.exchange_on) {
        throw ValidationError(std::string("program expects exchange ") + (ir.exchange_on ? "on" : "off") +
                              " but the frequency plan has it " + (plan.exchange_on ? "on" : "off"));
    }
    if (tx.phase_mod_bits < 2) {
        throw ConfigError("phase_mod_bits must be at least 2 to encode quarter-turn axes");
    }
    const std::uint32_t quarter = 1u << (tx.phase_mod_bits - 2);

    Emitter em(plan, cal, tx, options);
    std::vector<BurstRecord> bursts;
    bool previous_emitted = false;

    for (std::size_t gi = 0; gi < ir.gates.size(); ++gi) {
        const Gate& g = ir.gates[gi];
        auto fail = [&](const std::string& what) -> ValidationError {
            return ValidationError((g.line ? "line " + std::to_string(g.line) + ": " : std::string()) + what);
        };
        if (g.target < 0 || g.target > 1) {
            throw fail("gate targets an unknown qubit");
        }
        if (g.concurrent && !previous_emitted) {
            throw fail("a concurrent gate must follow a pulse");
        }

        if (g.kind == GateKind::Z) {
            if (g.concurrent) {
                throw fail("Z is a frame update and cannot be concurrent");
            }
            const std::uint32_t word = radians_to_phase_word(g.angle);
            for (std::size_t s = 0; s < plan.slots.size(); ++s) {
                if (plan.slots[s].qubit == g.target) {
                    em.frame_shift(s, word);
                }
            }
            continue;
        }

        std::vector<std::size_t> slots;
        if (g.kind == GateKind::CROT_high || g.kind == GateKind::CROT_low) {
            if (!plan.exchange_on) {
                throw fail(std::string(gate_name(g.kind)) + " needs exchange on (conditional frequency slots)");
            }
            slots.push_back(plan.slot_index(g.target, g.kind == GateKind::CROT_high ? 1 : 0));
        } else if (plan.exchange_on) {
            slots.push_back(plan.slot_index(g.target, 0));
            if (g.kind != GateKind::I) {
                // Address both conditional frequencies of the qubit in turn.
                slots.push_back(plan.slot_index(g.target, 1));
            }
        } else {
            slots.push_back(plan.slot_index(g.target));
        }

        for (std::size_t k = 0; k < slots.size(); ++k) {
            const std::size_t s = slots[k];
            const SlotCalibration& sc = cal.slots.at(s);
            const bool full = is_full_rotation(g.kind);
            const BurstCalibration& bc = full ? sc.full : sc.half;
            const double nominal_angle = g.kind == GateKind::I ? 0.0 : full ? std::numbers::pi : std::numbers::pi / 2;

            BurstSpec b{};
            b.slot = s;
            b.shape = g.shape.value_or(cal.shape);
            b.samples = bc.samples;
            if (g.duration) {
                const auto n = round_half_away(*g.duration * tx.f_clk);
                if (n < 2) {
                    throw fail("duration shorter than 2 samples");
                }
                b.samples = static_cast<std::size_t>(n);
            }
            // Keep the calibrated rotation angle when only the duration changes.
            double amplitude = bc.amplitude * static_cast<double>(bc.samples) / static_cast<double>(b.samples);
            if (g.amplitude) {
                amplitude = *g.amplitude;
            }
            if (g.kind == GateKind::I) {
                amplitude = 0.0;
            }
            double area = amplitude;
            if (b.shape == EnvelopeShape::Gaussian && amplitude > 0.0 && !g.amplitude) {
                const auto profile = gaussian_profile(b.samples);
                double sum = 0.0;
                for (double v : profile) {
                    sum += v;
                }
                amplitude *= static_cast<double>(b.samples) / sum;
            } else if (b.shape == EnvelopeShape::Gaussian) {
                double sum = 0.0;
                for (double v : gaussian_profile(b.samples)) {
                    sum += v;
                }
                area = amplitude * sum / static_cast<double>(b.samples);
            }
            if (amplitude >= 1.0) {
                throw fail("burst amplitude " + std::to_string(amplitude) + " exceeds full scale");
            }
            b.amplitude = amplitude;
            b.phase_mod = g.kind == GateKind::I ? 0 : quarter * static_cast<std::uint32_t>(axis_quarters(g.kind));
            b.axis = std::numbers::pi / 2.0 * axis_quarters(g.kind);
            const bool calibrated = !g.duration && !g.amplitude && g.kind != GateKind::I;
            b.corrections = calibrated && !bc.frame_corrections.empty() ? &bc.frame_corrections : nullptr;
            b.angle = g.kind == GateKind::I || bc.amplitude == 0.0
                          ? 0.0
                          : nominal_angle * area * static_cast<double>(b.samples) /
                                (bc.amplitude * static_cast<double>(bc.samples));

            const double quantized_area = em.burst(b, g.concurrent && k == 0, g.line);
            bursts.push_back(BurstRecord{gi, s, b.samples, b.amplitude, b.axis, b.angle, quantized_area});
        }
        previous_emitted = true;
    }
    return em.finish(ir, std::move(bursts));
}

// ---------------------------------------------------------------------------
// Program text

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
    throw ParseError("line " + std::to_string(line) + ": " + what, line);
}

double parse_number(std::size_t line, const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        parse_fail(line, "expected a number, got '" + text + "'");
    }
    if (used != text.size()) {
        parse_fail(line, "expected a number, got '" + text + "'");
    }
    return v;
}

// Accepts "1.57", "pi", "-pi/2", "3*pi/4", "pi*0.25".
double parse_angle(std::size_t line, std::string text) {
    double sign = 1.0;
    if (!text.empty() && (text[0] == '-' || text[0] == '+')) {
        sign = text[0] == '-' ? -1.0 : 1.0;
        text = text.substr(1);
    }
    const auto pi_at = text.find("pi");
    if (pi_at == std::string::npos) {
        return sign * parse_number(line, text);
    }
    double value = std::numbers::pi;
    std::string before = text.substr(0, pi_at);
    std::string after = text.substr(pi_at + 2);
    if (!before.empty()) {
        if (before.back() != '*') {
            parse_fail(line, "malformed angle '" + text + "'");
        }
        value *= parse_number(line, before.substr(0, before.size() - 1));
    }
    if (!after.empty()) {
        const char op = after[0];
        const double operand = parse_number(line, after.substr(1));
        if (op == '/') {
            if (operand == 0.0) {
                parse_fail(line, "division by zero in angle");
            }
            value /= operand;
        } else if (op == '*') {
            value *= operand;
        } else {
            parse_fail(line, "malformed angle '" + text + "'");
        }
    }
    return sign * value;
}

double parse_duration(std::size_t line, const std::string& text) {
    static const std::array<std::pair<const char*, double>, 4> units{{{"ns", 1e-9}, {"us", 1e-6}, {"ms", 1e-3}, {"s", 1.0}}};
    for (const auto& [suffix, scale] : units) {
        const std::string s(suffix);
        if (text.size() > s.size() && text.compare(text.size() - s.size(), s.size(), s) == 0) {
            return parse_number(line, text.substr(0, text.size() - s.size())) * scale;
        }
    }
    return parse_number(line, text);
}

EnvelopeShape parse_shape(std::size_t line, const std::string& text) {
    if (text == "rectangular" || text == "rect") {
        return EnvelopeShape::Rectangular;
    }
    if (text == "gaussian" || text == "gauss") {
        return EnvelopeShape::Gaussian;
    }
    parse_fail(line, "unknown envelope shape '" + text + "'");
}

}  // namespace

ParsedProgram parse_program(const std::string& text) {
    ParsedProgram out;
    std::optional<EnvelopeShape> default_shape;
    std::istringstream in(text);
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        std::istringstream words(hash == std::string::npos ? raw : raw.substr(0, hash));
        std::vector<std::string> tok{std::istream_iterator<std::string>(words), {}};
        if (tok.empty()) {
            continue;
        }
        if (tok[0] == ".exchange") {
            if (tok.size() != 2 || (tok[1] != "on" && tok[1] != "off")) {
                parse_fail(line, ".exchange takes 'on' or 'off'");
            }
            if (!out.ir.gates.empty()) {
                parse_fail(line, ".exchange must precede the first gate");
            }
            out.ir.exchange_on = tok[1] == "on";
            continue;
        }
        if (tok[0] == ".shape") {
            if (tok.size() != 2) {
                parse_fail(line, ".shape takes one envelope shape");
            }
            default_shape = parse_shape(line, tok[1]);
            continue;
        }
        if (tok[0] == "oracle") {
            if (tok.size() != 1) {
                parse_fail(line, "oracle takes no operands");
            }
            if (out.oracle_at) {
                parse_fail(line, "only one oracle placeholder is allowed");
            }
            out.oracle_at = out.ir.gates.size();
            continue;
        }

        Gate g;
        g.line = line;
        std::size_t k = 0;
        if (tok[0] == "&") {
            g.concurrent = true;
            k = 1;
        } else if (tok[0].size() > 1 && tok[0][0] == '&') {
            g.concurrent = true;
            tok[0] = tok[0].substr(1);
        }
        if (k >= tok.size()) {
            parse_fail(line, "missing gate after '&'");
        }
        std::string name = tok[k];
        std::optional<double> angle;
        if (const auto paren = name.find('('); paren != std::string::npos) {
            if (name.back() != ')') {
                parse_fail(line, "unbalanced parenthesis in '" + name + "'");
            }
            angle = parse_angle(line, name.substr(paren + 1, name.size() - paren - 2));
            name = name.substr(0, paren);
        }
        const auto kind = gate_from_name(name);
        if (!kind) {
            parse_fail(line, "unknown gate '" + name + "'");
        }
        g.kind = *kind;
        if (k + 1 >= tok.size()) {
            parse_fail(line, "gate '" + name + "' needs a target qubit (q1 or q2)");
        }
        const std::string& target = tok[k + 1];
        if (target != "q1" && target != "q2") {
            parse_fail(line, "unknown target '" + target + "' (expected q1 or q2)");
        }
        g.target = target == "q1" ? 0 : 1;
        for (std::size_t t = k + 2; t < tok.size(); ++t) {
            const auto eq = tok[t].find('=');
            if (eq == std::string::npos) {
                parse_fail(line, "expected key=value, got '" + tok[t] + "'");
            }
            const std::string key = tok[t].substr(0, eq);
            const std::string value = tok[t].substr(eq + 1);
            if (key == "dur") {
                g.duration = parse_duration(line, value);
            } else if (key == "shape") {
                g.shape = parse_shape(line, value);
            } else if (key == "amp") {
                g.amplitude = parse_number(line, value);
            } else if (key == "angle") {
                angle = parse_angle(line, value);
            } else {
                parse_fail(line, "unknown option '" + key + "'");
            }
        }
        if (g.kind == GateKind::Z) {
            if (!angle) {
                parse_fail(line, "Z needs an angle, e.g. Z(pi/2) q1");
            }
            g.angle = *angle;
        } else if (angle) {
            parse_fail(line, "only Z takes an angle");
        }
        if (!g.shape) {
            g.shape = default_shape;
        }
        out.ir.gates.push_back(g);
    }
    return out;
}

std::vector<OracleVariant> dj_oracles() {
    std::vector<OracleVariant> out;
    {
        // CROT_high is a controlled -iX; the Q1 frame shift turns it into CNOT.
        GateIR ir;
        ir.add(GateKind::CROT_high, 1).z(0, -std::numbers::pi / 2);
        out.push_back({"cnot", true, ir});
    }
    {
        GateIR ir;
        ir.add(GateKind::CROT_low, 1).z(0, std::numbers::pi / 2);
        out.push_back({"zcnot", true, ir});
    }
    {
        GateIR ir;
        ir.add(GateKind::I, 1);
        out.push_back({"identity", false, ir});
    }
    {
        GateIR ir;
        ir.add(GateKind::X2, 1);
        out.push_back({"x2", false, ir});
    }
    return out;
}

std::vector<OracleVariant> expand_oracle(const ParsedProgram& program) {
    if (!program.oracle_at) {
        return {OracleVariant{"main", false, program.ir}};
    }
    std::vector<OracleVariant> out;
    const std::size_t at = *program.oracle_at;
    for (auto variant : dj_oracles()) {
        GateIR ir;
        ir.exchange_on = program.ir.exchange_on;
        ir.gates.assign(program.ir.gates.begin(), program.ir.gates.begin() + static_cast<std::ptrdiff_t>(at));
        ir.gates.insert(ir.gates.end(), variant.ir.gates.begin(), variant.ir.gates.end());
        ir.gates.insert(ir.gates.end(), program.ir.gates.begin() + static_cast<std::ptrdiff_t>(at), program.ir.gates.end());
        variant.ir = std::move(ir);
        out.push_back(std::move(variant));
    }
    return out;
}

std::string dj_program_text() {
    return "# Deutsch-Jozsa with exchange on; Q1 carries the answer.\n"
           ".exchange on\n"
           "mY q1\n"
           "mY q2\n"
           "oracle\n"
           "Y q1\n"
           "Y q2\n";
}

}  // namespace cryoctl
