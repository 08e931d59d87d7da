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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Criteria can be selected by number on
// the command line (default: all).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cryoctl/compiler.hpp"
#include "cryoctl/config.hpp"
#include "cryoctl/error.hpp"
#include "cryoctl/experiments.hpp"
#include "cryoctl/memory_image.hpp"
#include "cryoctl/metrics.hpp"
#include "test_support.hpp"

namespace {

using namespace cryoctl;

// ---- Pinned tolerances ----------------------------------------------------------

constexpr double kNcoResolutionHz = 238.4185791015625;  // 1e9 / 2^22, exact in binary
constexpr double kFftPeakBins = 1.0;
constexpr double kSnrToleranceDb = 1.0;
constexpr double kSnrFloorDb = 48.0;
constexpr double kSnrBandHz = 25e6;
constexpr double kSpurLevelDbc = -46.0;
constexpr double kSpurToleranceDb = 0.1;
constexpr double kLoLeakageDbc = -40.0;
constexpr double kRabiMaxError = 1e-6;
constexpr double kRabiPeriods = 10.0;
constexpr std::size_t kAllxyShots = 10000;
constexpr double kSigmas = 5.0;
constexpr std::size_t kQstShots = 1000;
constexpr double kQstTolerance = 0.02;
constexpr std::size_t kRbSequences = 32;
constexpr std::size_t kRbShots = 200;
constexpr double kRbSigmas = 2.0;
constexpr double kRbSigmaDetuneHz = 65e3;
constexpr double kRbFidelityLow = 0.996;
constexpr double kRbFidelityHigh = 0.998;
constexpr double kRbMaxSigma = 0.0005;
constexpr double kSpectroscopyToleranceHz = 15e3;
constexpr std::size_t kDjShots = 10000;
constexpr double kReadoutRoundTrip = 1e-12;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double sinc(double x) {
    return x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
}

// Allowed deviation of a binomial estimate from p at `shots`; the variance
// is floored at one count so that p = 0 or 1 still admits rare flips.
double binomial_band(double p, std::size_t shots) {
    const double n = static_cast<double>(shots);
    const double q = std::clamp(p, 1.0 / n, 1.0 - 1.0 / n);
    return kSigmas * std::sqrt(q * (1.0 - q) / n);
}

// ---- 1. NCO frequency law -----------------------------------------------------------

Outcome nco_frequency_law() {
    Outcome o{true, ""};
    const double resolution = 1e9 / static_cast<double>(kPhaseModulus);
    if (resolution != kNcoResolutionHz || ftw_to_offset(1, 1e9) != kNcoResolutionHz) {
        return {false, fmt("resolution %.13f Hz", resolution)};
    }
    const std::size_t n = 16384;
    TxConfig tx;
    double worst_bins = 0.0;
    for (std::uint32_t ftw : {1u, 100663u, kPhaseModulus - 377487u, 1234567u, kPhaseModulus / 2 - 1, 3000001u}) {
        // Signed frequency: words above half the modulus are negative offsets.
        const double expected = (ftw < kPhaseModulus / 2 ? static_cast<double>(ftw)
                                                         : static_cast<double>(ftw) - kPhaseModulus) *
                                1e9 / static_cast<double>(kPhaseModulus);
        if (ftw_to_offset(ftw, 1e9) != expected) {
            return {false, fmt("ftw %u maps to %.6f Hz, expected %.6f Hz", ftw, ftw_to_offset(ftw, 1e9), expected)};
        }
        const auto bb = execute(testing::cw_image(ftw, n, 0.9, tx.amp_bits), tx);
        const auto s = compute_spectrum(bb.analytic(), 1e9, 0.0, Window::BlackmanHarris);
        // Frequencies are defined modulo the sample rate; a tone just below
        // +fs/2 may peak in the -fs/2 bin.
        const double diff = std::remainder(s.freq_hz[s.tone_bin] - expected, 1e9);
        const double bins = std::abs(diff) / s.rbw_hz;
        worst_bins = std::max(worst_bins, bins);
    }
    o.pass = worst_bins <= kFftPeakBins;
    o.detail = fmt("resolution %.10f Hz; worst FFT peak offset %.3f bins", resolution, worst_bins);
    return o;
}

// ---- 2. Quantization SNR ---------------------------------------------------------

Outcome quantization_snr() {
    // Full-scale tone at a prime number of cycles per record: the samples
    // cover 32768 distinct phases, which decorrelates the quantization error
    // from the signal the way dither does. Amplitude is the top code; the
    // 22-bit phase table and 24-bit envelope leave the DAC as the only
    // quantizer.
    const std::size_t n = 32768;
    const std::uint32_t ftw = 1021u * (kPhaseModulus / n);
    Outcome o{true, ""};
    for (unsigned bits : {8u, 10u, 12u}) {
        TxConfig tx;
        tx.dac_bits = bits;
        tx.amp_bits = 24;
        tx.pac_addr_bits = 22;
        const auto bb = execute(testing::cw_image(ftw, n, testing::max_fraction(bits), 24), tx);
        const auto s = compute_spectrum(bb.analytic(), 1e9, 0.0, Window::Rectangular);
        const double measured = sinad(s, 1e9);
        const double ideal = 6.02 * bits + 1.76;
        const bool ok = std::abs(measured - ideal) <= kSnrToleranceDb;
        o.pass = o.pass && ok;
        o.detail += fmt("N=%u %.2f dB (ideal %.2f); ", bits, measured, ideal);
        if (bits == 10) {
            const double band = sinad(s, kSnrBandHz);
            o.pass = o.pass && band > kSnrFloorDb;
            o.detail += fmt("N=10 in 25 MHz %.2f dB > %.0f; ", band, kSnrFloorDb);
        }
    }
    o.detail.resize(o.detail.size() - 2);
    return o;
}

// ---- 3. Constructed-spur SFDR -----------------------------------------------------

Outcome constructed_spur() {
    // A compiled 32.768 us burst on Q1 (+24 MHz), a -46 dBc spur at +37 MHz
    // and LO leakage stronger than the spur.
    LabConfig cfg;
    cfg.simulated_calibration = false;
    cfg.tx.impairments.spurs = {SpurInjection{37e6, kSpurLevelDbc}};
    cfg.tx.impairments.lo_leakage_dbc = kLoLeakageDbc;
    const Lab lab(cfg);
    GateIR ir;
    Gate g;
    g.kind = GateKind::X2;
    g.target = 0;
    g.duration = 32768e-9;
    g.amplitude = 0.9;
    ir.gates.push_back(g);
    const CompiledProgram prog = lab.compile(ir);
    const auto bb = execute(prog.image, cfg.tx);
    const auto s = compute_spectrum(upconvert(bb, cfg.tx), Window::BlackmanHarris);
    const double lo = cfg.tx.carrier_hz();
    const double with_exclusion = sfdr(s, default_exclusions(s, lo));
    const double without = sfdr(s, {});
    Outcome o;
    o.pass = std::abs(with_exclusion + kSpurLevelDbc) <= kSpurToleranceDb;
    o.detail = fmt("SFDR %.3f dB with LO excluded (injected %.0f dBc); %.3f dB without exclusion", with_exclusion,
                   kSpurLevelDbc, without);
    return o;
}

// ---- 4. Rabi analytic equivalence ---------------------------------------------------

Outcome rabi_equivalence() {
    // 24-bit words keep converter quantization below the tolerance; the
    // oracle includes the sinc roll-off of the DAC sample-and-hold.
    LabConfig cfg;
    cfg.tx.dac_bits = 24;
    cfg.tx.amp_bits = 24;
    cfg.tx.pac_addr_bits = 22;
    cfg.simulated_calibration = false;
    const Lab lab(cfg);
    Outcome o{true, ""};
    for (int q : {0, 1}) {
        const double amp = 0.25;
        const double half = std::ldexp(1.0, 23);
        const double quantized = std::round(amp * half) / half;
        const double offset = (q == 0 ? cfg.model.f1 : cfg.model.f2) - cfg.tx.lo_freq;
        const double f_rabi = cfg.model.drive_coupling[q] * quantized * sinc(offset / cfg.tx.f_clk);
        ExperimentSpec spec;
        spec.kind = ExperimentKind::Rabi;
        spec.target = q;
        spec.shots = 1;
        spec.amplitude = amp;
        spec.sweep = {0.0, kRabiPeriods / f_rabi, 201};
        spec.jobs = 4;
        const auto r = run_rabi(lab, spec, false);
        double worst = 0.0;
        for (std::size_t i = 0; i < r.t.size(); ++i) {
            const double expected = std::pow(std::sin(std::numbers::pi * f_rabi * r.t[i]), 2);
            worst = std::max(worst, std::abs(r.p_exact[q][i] - expected));
        }
        o.pass = o.pass && worst < kRabiMaxError;
        o.detail += fmt("Q%d max |error| %.2e over %.0f periods; ", q + 1, worst, kRabiPeriods);
    }
    o.detail.resize(o.detail.size() - 2);
    return o;
}

// ---- 5. AllXY ------------------------------------------------------------------

Outcome allxy_signature() {
    const Lab lab(LabConfig{});
    ExperimentSpec spec;
    spec.kind = ExperimentKind::AllXY;
    spec.shots = kAllxyShots;
    spec.jobs = 4;
    const auto r = run_allxy(lab, spec);
    std::array<int, 3> counts{};
    double worst = 0.0;
    bool within = true;
    for (std::size_t i = 0; i < 21; ++i) {
        const double p_ideal = (r.ideal[i] + 1.0) / 2.0;
        const double band = 2.0 * binomial_band(p_ideal, kAllxyShots);  // sigma_z = 2 p - 1
        within = within && std::abs(r.sigma_z[i] - r.ideal[i]) <= band;
        worst = std::max(worst, std::abs(r.sigma_z[i] - r.ideal[i]));
        counts[static_cast<std::size_t>(std::clamp<long>(std::lround(r.sigma_z[i]), -1, 1) + 1)]++;
    }
    Outcome o;
    o.pass = within && counts == std::array<int, 3>{5, 12, 4};
    o.detail = fmt("signature %d/%d/%d at -1/0/+1; worst deviation %.4f", counts[0], counts[1], counts[2], worst);
    return o;
}

// ---- 6. QST trajectory ---------------------------------------------------------------

Outcome qst_trajectory() {
    const Lab lab(LabConfig{});
    ExperimentSpec spec;
    spec.kind = ExperimentKind::QstTrajectory;
    spec.shots = kQstShots;
    spec.jobs = 4;
    const auto r = run_qst_trajectory(lab, spec);
    const auto& first = r.points.front().bloch;
    const auto& last = r.points.back().bloch;
    const auto& mid = r.points[r.points.size() / 2].bloch;
    bool physical = true;
    for (const auto& p : r.points) {
        physical = physical && p.eigenvalues[0] >= -1e-12;
    }
    // Endpoints: each Bloch component within the 5-sigma binomial band of
    // its ideal value (component = 2 p - 1 for the basis probability p).
    auto endpoint_ok = [](const std::array<double, 3>& r, const std::array<double, 3>& ideal) {
        for (int k = 0; k < 3; ++k) {
            if (std::abs(r[k] - ideal[k]) > 2.0 * binomial_band((ideal[k] + 1.0) / 2.0, kQstShots)) {
                return false;
            }
        }
        return true;
    };
    const bool ends_ok = endpoint_ok(first, {0.0, 0.0, -1.0}) && endpoint_ok(last, {0.0, 0.0, 1.0});
    // Mid-pulse: on the sphere surface and at the +y end of the y-z meridian.
    const double norm = std::sqrt(mid[0] * mid[0] + mid[1] * mid[1] + mid[2] * mid[2]);
    const bool mid_ok = std::abs(norm - 1.0) <= kQstTolerance && mid[1] >= 1.0 - kQstTolerance;
    Outcome o;
    o.pass = physical && ends_ok && mid_ok;
    o.detail = fmt("start (%.3f, %.3f, %.3f), end (%.3f, %.3f, %.3f), mid (%.3f, %.3f, %.3f) |r|=%.4f, %zu/%zu physical",
                   first[0], first[1], first[2], last[0], last[1], last[2], mid[0], mid[1], mid[2], norm,
                   physical ? r.points.size() : 0, r.points.size());
    return o;
}

// ---- 7. Randomized benchmarking ---------------------------------------------------------

Outcome randomized_benchmarking() {
    Outcome o{true, ""};
    for (double eps : {1e-3, 6e-3}) {
        LabConfig cfg;
        cfg.simulated_calibration = false;
        AnalyticBackend::Options opt;
        opt.depolarizing = eps;
        const Lab lab(cfg, std::make_shared<AnalyticBackend>(cfg.model, cfg.tx, opt));
        ExperimentSpec spec;
        spec.kind = ExperimentKind::RB;
        spec.shots = kRbShots;
        spec.rb_sequences = kRbSequences;
        spec.jobs = 4;
        const auto r = run_rb(lab, spec);
        const double target = 1.0 - eps / 2.0;
        const double sigma = r.fit.sigma_p / 2.0;
        const bool ok = r.fit.converged && std::abs(r.fidelity_clifford - target) <= kRbSigmas * sigma;
        o.pass = o.pass && ok;
        o.detail += fmt("eps=%.0e F=%.5f+-%.5f (target %.5f); ", eps, r.fidelity_clifford, sigma, target);
    }
    // Quasi-static detuning noise on the physics backend.
    LabConfig cfg;
    cfg.model.sigma_detune = kRbSigmaDetuneHz;
    const Lab lab(cfg);
    ExperimentSpec spec;
    spec.kind = ExperimentKind::RB;
    spec.shots = kRbShots;
    spec.rb_sequences = kRbSequences;
    spec.rb_lengths = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512};
    spec.jobs = 4;
    const auto r = run_rb(lab, spec);
    const bool ok = r.fit.converged && r.fidelity_gate >= kRbFidelityLow && r.fidelity_gate <= kRbFidelityHigh &&
                    r.sigma_fidelity_gate <= kRbMaxSigma;
    o.pass = o.pass && ok;
    o.detail += fmt("sigma_detune=%.0f kHz F_gate=%.3f+-%.3f %%", kRbSigmaDetuneHz / 1e3, 100 * r.fidelity_gate,
                    100 * r.sigma_fidelity_gate);
    return o;
}

// ---- 8. Conditional spectroscopy --------------------------------------------------------

Outcome conditional_spectroscopy() {
    const Lab lab(LabConfig{});
    const auto& m = lab.config().model;
    Outcome o{true, ""};
    double worst = 0.0;
    for (int q : {0, 1}) {
        for (int control : {0, 1}) {
            ExperimentSpec spec;
            spec.kind = ExperimentKind::Spectroscopy;
            spec.exchange_on = true;
            spec.target = q;
            spec.control_state = control;
            spec.shots = 100;
            spec.jobs = 4;
            const auto r = run_spectroscopy(lab, spec);
            // The target transition sits J/2 below its bare frequency with the
            // other spin down and J/2 above with it up.
            const double bare = q == 0 ? m.f1 : m.f2;
            const double expected = bare + (control == 1 ? 0.5 : -0.5) * m.j_on;
            const double err = r.center_hz - expected;
            worst = std::max(worst, std::abs(err));
            o.detail += fmt("Q%d|%d %+.1f Hz; ", q + 1, control, err);
        }
    }
    o.pass = worst <= kSpectroscopyToleranceHz;
    o.detail += fmt("worst %.1f Hz", worst);
    return o;
}

// ---- 9. Deutsch-Jozsa ----------------------------------------------------------------

Outcome deutsch_jozsa() {
    const Lab lab(LabConfig{});
    ExperimentSpec spec;
    spec.kind = ExperimentKind::DJ;
    spec.shots = kDjShots;
    spec.jobs = 4;
    const auto r = run_dj(lab, spec);
    Outcome o{true, ""};
    for (const auto& d : r.outcomes) {
        const double target = d.constant ? 1.0 : 0.0;
        o.pass = o.pass && std::abs(d.p1_q1 - target) <= binomial_band(target, kDjShots);
        o.detail += fmt("%s %.4f; ", d.oracle.c_str(), d.p1_q1);
    }
    o.detail.resize(o.detail.size() - 2);
    return o;
}

// ---- 10. Readout correction ------------------------------------------------------------

Outcome readout_correction() {
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> fid(0.55, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double f0 = fid(rng);
        const double f1 = fid(rng);
        const double p = u(rng);
        const std::array<double, 2> measured{1.0 - p, p};
        const auto c = readout_correct(measured, f0, f1);
        // Forward map written out: P_M0 = f0 P0 + (1 - f1) P1.
        const double m0 = f0 * c.unclamped[0] + (1.0 - f1) * c.unclamped[1];
        const double m1 = (1.0 - f0) * c.unclamped[0] + f1 * c.unclamped[1];
        worst = std::max({worst, std::abs(m0 - measured[0]), std::abs(m1 - measured[1])});
    }
    const auto ex = readout_correct({0.83, 0.17}, 0.95, 0.80);
    const double ex_err = std::max(std::abs(ex.p[0] - 0.84), std::abs(ex.p[1] - 0.16));
    Outcome o;
    o.pass = worst <= kReadoutRoundTrip && ex_err <= kReadoutRoundTrip;
    o.detail = fmt("round trip max error %.1e; (0.83, 0.17) -> (%.12f, %.12f)", worst, ex.p[0], ex.p[1]);
    return o;
}

// ---- 11. Capacity enforcement ------------------------------------------------------------

template <class Fn>
bool throws_capacity(Fn&& fn) {
    try {
        fn();
    } catch (const CapacityError&) {
        return true;
    }
    return false;
}

Outcome capacity_enforcement() {
    std::vector<std::string> failures;
    auto check = [&](bool ok, const char* what) {
        if (!ok) {
            failures.push_back(what);
        }
    };
    // Envelope memory: every split of 40960 fits, one more point never does.
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        EnvelopeMemory mem;
        const std::size_t a = rng() % kEnvelopeCapacity;
        mem.append(std::vector<EnvelopeEntry>(a, EnvelopeEntry{1, 0}));
        mem.append(std::vector<EnvelopeEntry>(kEnvelopeCapacity - a, EnvelopeEntry{2, 0}));
        check(mem.size() == kEnvelopeCapacity, "envelope accepts 40960");
        const std::size_t extra = 1 + rng() % 100;
        check(throws_capacity([&] { mem.append(std::vector<EnvelopeEntry>(extra, EnvelopeEntry{3, 0})); }),
              "envelope rejects 40961");
        check(mem.size() == kEnvelopeCapacity, "envelope unchanged after rejection");
    }
    // Instruction tables: eight distinct instructions per NCO.
    for (std::uint8_t nco = 0; nco < kNcosPerBank; ++nco) {
        InstructionTable table;
        for (std::uint32_t k = 0; k < kTableCapacity; ++k) {
            Instruction ins;
            ins.nco = nco;
            ins.phase_update = k + 1;
            table.add(ins);
        }
        Instruction ninth;
        ninth.nco = nco;
        ninth.phase_update = 100;
        check(throws_capacity([&] { table.add(ninth); }), "table rejects the ninth instruction");
        check(table.size(nco) == kTableCapacity, "table unchanged after rejection");
    }
    // Instruction lists: 2048 entries.
    InstructionList list{std::vector<InstructionRef>(kListCapacity)};
    check(list.size() == kListCapacity, "list accepts 2048");
    check(throws_capacity([&] { list.push_back({}); }), "list rejects 2049");
    check(list.size() == kListCapacity, "list unchanged after rejection");
    // The compiler reports the same limits instead of truncating.
    LabConfig cfg;
    cfg.simulated_calibration = false;
    const Lab lab(cfg);
    CompileOptions strict;
    strict.split_long_lists = false;
    GateIR ir;
    for (std::size_t k = 0; k < kListCapacity; ++k) {
        ir.add(GateKind::X, 0);
    }
    check(lab.compile(ir, strict).image.lists.at(0).size() == kListCapacity, "compiler accepts 2048 gates");
    ir.add(GateKind::X, 0);
    check(throws_capacity([&] { lab.compile(ir, strict); }), "compiler rejects 2049 gates");
    GateIR env;
    Gate g;
    g.kind = GateKind::X;
    g.duration = static_cast<double>(kEnvelopeCapacity) * 1e-9;
    g.amplitude = 0.1;
    env.gates.push_back(g);
    check(lab.compile(env).report.envelope_used == kEnvelopeCapacity, "compiler fills the envelope memory");
    env.gates[0].duration = static_cast<double>(kEnvelopeCapacity + 1) * 1e-9;
    check(throws_capacity([&] { lab.compile(env); }), "compiler rejects 40961 envelope points");

    Outcome o;
    o.pass = failures.empty();
    o.detail = failures.empty() ? fmt("envelope %zu, table %zu per NCO, list %zu: accepted at, rejected past the limit",
                                      kEnvelopeCapacity, kTableCapacity, kListCapacity)
                                : "failed: " + failures.front();
    return o;
}

// ---- 12. Determinism -------------------------------------------------------------------

Outcome determinism() {
    LabConfig cfg;
    cfg.model.sigma_detune = 30e3;
    cfg.model.readout = {ReadoutFidelity{0.95, 0.85}, ReadoutFidelity{0.93, 0.88}};
    cfg.model.residual_excitation = 0.01;
    const Lab lab(cfg);
    std::vector<ExperimentSpec> specs;
    auto add = [&](ExperimentKind kind, auto&& tweak) {
        ExperimentSpec s;
        s.kind = kind;
        s.shots = 200;
        s.seed = 2026;
        tweak(s);
        specs.push_back(s);
    };
    add(ExperimentKind::Rabi, [](ExperimentSpec& s) { s.sweep = {0.0, 2e-6, 21}; });
    add(ExperimentKind::RabiSimultaneous, [](ExperimentSpec& s) { s.sweep = {0.0, 2e-6, 21}; });
    add(ExperimentKind::Spectroscopy, [](ExperimentSpec& s) { s.sweep = {-1e6, 1e6, 21}; });
    add(ExperimentKind::AllXY, [](ExperimentSpec&) {});
    add(ExperimentKind::QstTrajectory, [](ExperimentSpec&) {});
    add(ExperimentKind::RB, [](ExperimentSpec& s) {
        s.rb_lengths = {1, 8, 64};
        s.rb_sequences = 4;
    });
    add(ExperimentKind::DJ, [](ExperimentSpec&) {});
    Outcome o{true, ""};
    for (auto spec : specs) {
        spec.jobs = 1;
        const auto a = run_experiment(lab, spec);
        spec.jobs = 4;
        const auto b = run_experiment(lab, spec);
        const bool same = a.csv() == b.csv() && a.summary_json() == b.summary_json();
        o.pass = o.pass && same;
        if (!same) {
            o.detail += std::string(experiment_name(spec.kind)) + " differs; ";
        }
    }
    if (o.pass) {
        o.detail = fmt("%zu experiment kinds rerun (1 and 4 jobs) with byte-identical CSV and JSON", specs.size());
    }
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria{
        {1, "NCO frequency law", 1.0, nco_frequency_law},
        {2, "quantization SNR", 10.0, quantization_snr},
        {3, "constructed-spur SFDR", 10.0, constructed_spur},
        {4, "Rabi analytic equivalence", 30.0, rabi_equivalence},
        {5, "AllXY signature", 120.0, allxy_signature},
        {6, "QST trajectory", 120.0, qst_trajectory},
        {7, "randomized benchmarking", 600.0, randomized_benchmarking},
        {8, "conditional spectroscopy", 300.0, conditional_spectroscopy},
        {9, "Deutsch-Jozsa", 120.0, deutsch_jozsa},
        {10, "readout correction", 1.0, readout_correction},
        {11, "capacity enforcement", 1.0, capacity_enforcement},
        {12, "determinism", 600.0, determinism},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int failed = 0;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (elapsed > c.limit_s) {
            o.pass = false;
            o.detail += fmt(" [over the %.0f s limit]", c.limit_s);
        }
        std::printf("%s %2d %-27s %8.2f s  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, elapsed, o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria failed\n", failed, selected.empty() ? criteria.size() : selected.size());
    return failed == 0 ? 0 : 1;
}
