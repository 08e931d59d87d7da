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

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "cryoctl/error.hpp"
#include "cryoctl/experiments.hpp"
#include "cryoctl/io.hpp"
#include "cryoctl/numeric.hpp"

namespace cryoctl {

namespace {

constexpr const char* kExperimentSchema = "cryoctl.experiment/1";

// Runs fn(0..n-1) on up to `jobs` threads. Results are written by index, so
// the output order never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>(std::max(1u, jobs), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

double binomial_stderr(double p, std::size_t shots) {
    return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(shots));
}

std::uint64_t point_seed(const ExperimentSpec& spec, std::size_t index) {
    return substream_seed(spec.seed, 100 + static_cast<std::uint64_t>(spec.kind), index);
}

nlohmann::ordered_json summary_header(const ExperimentSpec& spec) {
    nlohmann::ordered_json j;
    j["schema"] = kExperimentSchema;
    j["kind"] = experiment_name(spec.kind);
    j["seed"] = spec.seed;
    j["shots"] = spec.shots;
    return j;
}

std::vector<double> default_range(const Sweep& sweep, double start, double stop, std::size_t points) {
    if (sweep.stop > sweep.start || sweep.points > 1) {
        return sweep.values();
    }
    return Sweep{start, stop, points}.values();
}

// Sets every burst of the image and the burst records to `samples` points by
// moving the instruction stop addresses; zero removes the bursts.
void set_burst_length(CompiledProgram& prog, std::size_t samples) {
    if (samples == 0) {
        prog.image.lists.clear();
        prog.bursts.clear();
        return;
    }
    for (auto& table : prog.image.tables) {
        InstructionTable rebuilt;
        for (std::size_t nco = 0; nco < kNcosPerBank; ++nco) {
            for (Instruction ins : table.slots(nco)) {
                if (ins.range) {
                    ins.range->stop = ins.range->start + static_cast<std::uint32_t>(samples) - 1;
                }
                rebuilt.add(ins);
            }
        }
        table = std::move(rebuilt);
    }
    for (auto& b : prog.bursts) {
        const double scale = static_cast<double>(samples) / static_cast<double>(b.samples);
        b.area *= scale;
        b.angle *= scale;
        b.samples = samples;
    }
}

std::size_t to_samples(double t, double f_clk) {
    if (!(t >= 0.0)) {
        throw RangeError("burst duration must be non-negative");
    }
    return static_cast<std::size_t>(round_half_away(t * f_clk));
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec and result plumbing

const char* experiment_name(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Rabi:
            return "rabi";
        case ExperimentKind::RabiSimultaneous:
            return "rabi_simultaneous";
        case ExperimentKind::Spectroscopy:
            return "spectroscopy";
        case ExperimentKind::AllXY:
            return "allxy";
        case ExperimentKind::QstTrajectory:
            return "qst_trajectory";
        case ExperimentKind::RB:
            return "rb";
        case ExperimentKind::DJ:
            return "dj";
    }
    return "?";
}

std::optional<ExperimentKind> experiment_from_name(const std::string& name) {
    for (auto k : {ExperimentKind::Rabi, ExperimentKind::RabiSimultaneous, ExperimentKind::Spectroscopy,
                   ExperimentKind::AllXY, ExperimentKind::QstTrajectory, ExperimentKind::RB, ExperimentKind::DJ}) {
        if (name == experiment_name(k)) {
            return k;
        }
    }
    return std::nullopt;
}

std::vector<double> Sweep::values() const {
    if (points == 0) {
        throw ConfigError("sweep needs at least one point");
    }
    if (points == 1) {
        return {start};
    }
    std::vector<double> out(points);
    for (std::size_t i = 0; i < points; ++i) {
        out[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(points - 1);
    }
    return out;
}

void ExperimentSpec::validate() const {
    std::vector<std::string> problems;
    if (shots < 1) {
        problems.push_back("shots must be at least 1");
    }
    if (sweep.points < 1) {
        problems.push_back("sweep.points must be at least 1");
    }
    if (!std::isfinite(sweep.start) || !std::isfinite(sweep.stop)) {
        problems.push_back("sweep bounds must be finite");
    }
    if (target != 0 && target != 1) {
        problems.push_back("target must be 0 (Q1) or 1 (Q2)");
    }
    if (control_state != 0 && control_state != 1) {
        problems.push_back("control_state must be 0 or 1");
    }
    if (jobs < 1) {
        problems.push_back("jobs must be at least 1");
    }
    if (amplitude && !(*amplitude >= 0.0 && *amplitude < 1.0)) {
        problems.push_back("amplitude must lie in [0, 1)");
    }
    if (rb_lengths.empty()) {
        problems.push_back("rb_lengths must not be empty");
    }
    for (std::size_t m : rb_lengths) {
        if (m < 1) {
            problems.push_back("rb_lengths entries must be at least 1");
            break;
        }
    }
    if (rb_sequences < 1) {
        problems.push_back("rb_sequences must be at least 1");
    }
    if (!problems.empty()) {
        std::string msg = "invalid experiment:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        throw ConfigError(msg);
    }
}

std::string ExperimentResult::csv() const {
    std::string out;
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out += (c ? "," : "") + columns[c];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) {
                out += ',';
            }
            out += format_double(row[c]);
        }
        out += '\n';
    }
    return out;
}

std::string ExperimentResult::summary_json() const {
    return summary.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Spectroscopy

SpectroscopyResult run_spectroscopy(const Lab& lab, const ExperimentSpec& spec) {
    spec.validate();
    const int q = spec.target;
    const int other = 1 - q;
    const bool exchange = spec.exchange_on;
    const auto& plan = lab.plan(exchange);
    const double f_clk = lab.config().tx.f_clk;

    GateIR ir;
    ir.exchange_on = exchange;
    if (spec.control_state == 1) {
        // Flip the control while the target is still in |0>.
        ir.add(exchange ? GateKind::CROT_low : GateKind::X2, other);
    }
    ir.add(exchange ? (spec.control_state == 1 ? GateKind::CROT_high : GateKind::CROT_low) : GateKind::X2, q);
    ir.gates.back().shape = spec.shape;
    const CompiledProgram base = lab.compile(ir);
    const auto& slot = plan.slots.at(base.bursts.back().slot);

    SpectroscopyResult res;
    res.expected_hz = slot.freq_hz;
    const auto detunings = default_range(spec.sweep, -2e6, 2e6, 81);
    std::vector<std::uint32_t> ftws;
    for (double d : detunings) {
        res.freq_hz.push_back(slot.freq_hz + d);
        try {
            ftws.push_back(offset_to_ftw(slot.freq_hz + d - plan.lo_hz, f_clk));
        } catch (const RangeError&) {
            throw RangeError("spectroscopy point " + format_double(slot.freq_hz + d) + " Hz lies beyond Nyquist");
        }
    }

    const std::size_t n = detunings.size();
    std::vector<ShotBatch> batches(n);
    parallel_for(n, spec.jobs, [&](std::size_t i) {
        CompiledProgram prog = base;
        prog.image.ncos[slot.bank][slot.nco].ftw = ftws[i];
        batches[i] = lab.backend().run(prog, spec.shots, point_seed(spec, i));
    });

    res.table.kind = experiment_name(spec.kind);
    res.table.columns = {"freq_hz", "p1_q1", "p1_q2", "stderr", "p_exact"};
    for (std::size_t i = 0; i < n; ++i) {
        const auto p = batches[i].p1_measured();
        res.p1.push_back(p[q]);
        res.p_exact.push_back(batches[i].p1_exact[q]);
        res.table.rows.push_back({res.freq_hz[i], p[0], p[1], binomial_stderr(p[q], spec.shots), res.p_exact.back()});
    }

    // Parabolic interpolation around the largest response.
    const auto peak = static_cast<std::size_t>(std::max_element(res.p_exact.begin(), res.p_exact.end()) - res.p_exact.begin());
    res.center_hz = res.freq_hz[peak];
    if (peak > 0 && peak + 1 < n) {
        const double a = res.p_exact[peak - 1];
        const double b = res.p_exact[peak];
        const double c = res.p_exact[peak + 1];
        const double denom = a - 2.0 * b + c;
        if (denom < 0.0) {
            const double step = res.freq_hz[peak + 1] - res.freq_hz[peak];
            res.center_hz += 0.5 * (a - c) / denom * step;
        }
    }

    auto& s = res.table.summary;
    s = summary_header(spec);
    s["target"] = q;
    s["exchange_on"] = exchange;
    s["control_state"] = spec.control_state;
    s["shape"] = shape_name(spec.shape);
    s["expected_hz"] = res.expected_hz;
    s["center_hz"] = res.center_hz;
    s["offset_hz"] = res.center_hz - res.expected_hz;
    return res;
}

// ---------------------------------------------------------------------------
// Rabi

RabiResult run_rabi(const Lab& lab, const ExperimentSpec& spec, bool simultaneous) {
    spec.validate();
    const auto& plan = lab.plan(false);
    const auto& cal = lab.calibration(false);
    const auto& tx = lab.config().tx;
    const auto& model = lab.config().model;

    std::vector<int> targets = simultaneous ? std::vector<int>{0, 1} : std::vector<int>{spec.target};
    std::array<double, 2> amplitude{};
    std::array<double, 2> expected{};
    const double half_scale = static_cast<double>(std::int64_t{1} << (tx.amp_bits - 1));
    for (int q : targets) {
        const std::size_t s = plan.slot_index(q);
        amplitude[q] = spec.amplitude.value_or(cal.slots[s].half.amplitude);
        const double quantized = static_cast<double>(round_half_away(amplitude[q] * half_scale)) / half_scale;
        expected[q] = model.drive_coupling[q] * sinc(plan.slots[s].offset_hz / tx.f_clk) * quantized;
    }
    const double f_guess = expected[targets.front()] > 0.0 ? expected[targets.front()] : 1e6;
    const auto times = default_range(spec.sweep, 0.0, 10.0 / f_guess, 201);
    std::vector<std::size_t> samples;
    for (double t : times) {
        samples.push_back(to_samples(t, tx.f_clk));
    }
    const std::size_t longest = *std::max_element(samples.begin(), samples.end());
    if (longest > kEnvelopeCapacity) {
        throw CapacityError("envelope memory", kEnvelopeCapacity,
                            "Rabi burst of " + std::to_string(longest) + " samples exceeds the envelope memory (" +
                                std::to_string(kEnvelopeCapacity) + " points)");
    }

    // One program at the longest duration; each point moves the stop address.
    GateIR ir;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        Gate g;
        g.kind = GateKind::X2;
        g.target = targets[k];
        g.shape = EnvelopeShape::Rectangular;
        g.duration = static_cast<double>(std::max<std::size_t>(longest, 2)) / tx.f_clk;
        g.amplitude = amplitude[targets[k]];
        g.concurrent = k > 0;
        ir.gates.push_back(g);
    }
    const CompiledProgram base = lab.compile(ir);

    const std::size_t n = times.size();
    std::vector<ShotBatch> batches(n);
    parallel_for(n, spec.jobs, [&](std::size_t i) {
        CompiledProgram prog = base;
        set_burst_length(prog, samples[i]);
        batches[i] = lab.backend().run(prog, spec.shots, point_seed(spec, i));
    });

    RabiResult res;
    res.t.reserve(n);
    res.table.kind = experiment_name(spec.kind);
    res.table.columns = {"t_s", "p1_q1", "p1_q2", "stderr_q1", "stderr_q2", "p_exact_q1", "p_exact_q2"};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(samples[i]) / tx.f_clk;
        const auto p = batches[i].p1_measured();
        res.t.push_back(t);
        for (int q = 0; q < 2; ++q) {
            res.p1[q].push_back(p[q]);
            res.p_exact[q].push_back(batches[i].p1_exact[q]);
        }
        res.table.rows.push_back({t, p[0], p[1], binomial_stderr(p[0], spec.shots), binomial_stderr(p[1], spec.shots),
                                  batches[i].p1_exact[0], batches[i].p1_exact[1]});
    }

    auto& s = res.table.summary;
    s = summary_header(spec);
    s["simultaneous"] = simultaneous;
    nlohmann::ordered_json fits = nlohmann::ordered_json::array();
    for (int q : targets) {
        nlohmann::ordered_json f;
        f["qubit"] = q;
        f["amplitude"] = amplitude[q];
        f["expected_rabi_hz"] = expected[q];
        if (n >= 4 && expected[q] > 0.0) {
            const auto fit = fit_rabi(res.t, res.p_exact[q], expected[q]);
            res.rabi_hz[q] = fit.rabi_hz;
            f["fitted_rabi_hz"] = fit.rabi_hz;
            f["fitted_amplitude"] = fit.amplitude;
            f["fitted_offset"] = fit.offset;
        }
        fits.push_back(f);
    }
    s["fits"] = fits;
    return res;
}

// ---------------------------------------------------------------------------
// AllXY

std::array<std::pair<GateKind, GateKind>, 21> allxy_pairs() {
    using G = GateKind;
    // Capital letters in the usual notation are pi rotations (X2, Y2 here),
    // lower case are pi/2 rotations (X, Y).
    return {{{G::I, G::I},   {G::X2, G::X2}, {G::Y2, G::Y2}, {G::X2, G::Y2}, {G::Y2, G::X2}, {G::X, G::I},
             {G::Y, G::I},   {G::X, G::Y},   {G::Y, G::X},   {G::X, G::Y2},  {G::Y, G::X2},  {G::X2, G::Y},
             {G::Y2, G::X},  {G::X, G::X2},  {G::X2, G::X},  {G::Y, G::Y2},  {G::Y2, G::Y},  {G::X2, G::I},
             {G::Y2, G::I},  {G::X, G::X},   {G::Y, G::Y}}};
}

double allxy_ideal(GateKind first, GateKind second) {
    const Eigen::Vector2cd psi = primitive_unitary(second) * primitive_unitary(first) * Eigen::Vector2cd(1.0, 0.0);
    return std::norm(psi[1]) - std::norm(psi[0]);
}

AllXYResult run_allxy(const Lab& lab, const ExperimentSpec& spec) {
    spec.validate();
    const int q = spec.target;
    const auto& fid = lab.config().model.readout[q];
    AllXYResult res;
    res.pairs = allxy_pairs();
    std::array<ShotBatch, 21> batches;
    parallel_for(21, spec.jobs, [&](std::size_t i) {
        GateIR ir;
        ir.add(res.pairs[i].first, q).add(res.pairs[i].second, q);
        batches[i] = lab.backend().run(lab.compile(ir), spec.shots, point_seed(spec, i));
    });

    res.table.kind = experiment_name(spec.kind);
    res.table.columns = {"index", "sigma_z", "stderr", "ideal", "p1_raw"};
    std::array<int, 3> signature{};
    double worst = 0.0;
    const double det = fid.f0 + fid.f1 - 1.0;
    for (std::size_t i = 0; i < 21; ++i) {
        const double p1 = batches[i].p1_measured()[q];
        const auto corrected = readout_correct({1.0 - p1, p1}, fid.f0, fid.f1);
        res.sigma_z[i] = corrected.p[1] - corrected.p[0];
        res.stderr_z[i] = 2.0 * binomial_stderr(p1, spec.shots) / det;
        res.ideal[i] = allxy_ideal(res.pairs[i].first, res.pairs[i].second);
        const long level = std::lround(res.sigma_z[i]);
        signature[static_cast<std::size_t>(std::clamp<long>(level, -1, 1) + 1)]++;
        worst = std::max(worst, std::abs(res.sigma_z[i] - res.ideal[i]));
        res.table.rows.push_back({static_cast<double>(i + 1), res.sigma_z[i], res.stderr_z[i], res.ideal[i], p1});
    }
    auto& s = res.table.summary;
    s = summary_header(spec);
    s["target"] = q;
    nlohmann::ordered_json names = nlohmann::ordered_json::array();
    for (const auto& [a, b] : res.pairs) {
        names.push_back(std::string(gate_name(a)) + "," + gate_name(b));
    }
    s["pairs"] = names;
    s["signature"] = signature;
    s["max_deviation"] = worst;
    return res;
}

// ---------------------------------------------------------------------------
// State tomography

TomoResult run_qst_trajectory(const Lab& lab, const ExperimentSpec& spec) {
    spec.validate();
    const int q = spec.target;
    const auto& tx = lab.config().tx;
    const auto& cal = lab.calibration(false).slots[lab.plan(false).slot_index(q)].full;
    const auto& fid = lab.config().model.readout[q];
    const double t_pi = static_cast<double>(cal.samples) / tx.f_clk;
    const auto times = default_range(spec.sweep, 0.0, t_pi, 21);
    const std::array<GateKind, 4> rotations{GateKind::I, GateKind::Y, GateKind::X, GateKind::X2};

    const std::size_t n = times.size();
    std::vector<std::size_t> samples;
    for (double t : times) {
        samples.push_back(to_samples(t, tx.f_clk));
    }
    std::vector<ShotBatch> batches(4 * n);
    parallel_for(4 * n, spec.jobs, [&](std::size_t k) {
        const std::size_t i = k / 4;
        GateIR ir;
        if (samples[i] >= 2) {
            Gate g;
            g.kind = GateKind::X2;
            g.target = q;
            g.duration = static_cast<double>(samples[i]) / tx.f_clk;
            g.amplitude = cal.amplitude;
            g.shape = EnvelopeShape::Rectangular;
            ir.gates.push_back(g);
        }
        ir.add(rotations[k % 4], q);
        batches[k] = lab.backend().run(lab.compile(ir), spec.shots, point_seed(spec, k));
    });

    TomoResult res;
    res.table.kind = experiment_name(spec.kind);
    res.table.columns = {"t_s", "x_lin", "y_lin", "z_lin", "x", "y", "z", "lambda_min"};
    bool physical = true;
    for (std::size_t i = 0; i < n; ++i) {
        TomoPoint pt;
        pt.t = static_cast<double>(samples[i] >= 2 ? samples[i] : 0) / tx.f_clk;
        for (std::size_t b = 0; b < 4; ++b) {
            const double p1 = batches[4 * i + b].p1_measured()[q];
            pt.p0[b] = readout_correct({1.0 - p1, p1}, fid.f0, fid.f1).p[0];
        }
        pt.bloch_linear = {2.0 * pt.p0[1] - 1.0, 1.0 - 2.0 * pt.p0[2],
                           0.5 * ((1.0 - 2.0 * pt.p0[0]) + (2.0 * pt.p0[3] - 1.0))};
        const Eigen::Matrix2cd rho = project_physical(density_from_bloch(pt.bloch_linear));
        pt.bloch = bloch_from_density(rho);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(rho);
        pt.eigenvalues = {eig.eigenvalues()[0], eig.eigenvalues()[1]};
        physical = physical && pt.eigenvalues[0] >= -1e-12;
        res.table.rows.push_back({pt.t, pt.bloch_linear[0], pt.bloch_linear[1], pt.bloch_linear[2], pt.bloch[0],
                                  pt.bloch[1], pt.bloch[2], pt.eigenvalues[0]});
        res.points.push_back(pt);
    }
    auto& s = res.table.summary;
    s = summary_header(spec);
    s["target"] = q;
    s["pi_time_s"] = t_pi;
    s["all_physical"] = physical;
    s["start"] = res.points.front().bloch;
    s["end"] = res.points.back().bloch;
    return res;
}

// ---------------------------------------------------------------------------
// Randomized benchmarking

RbResult run_rb(const Lab& lab, const ExperimentSpec& spec) {
    spec.validate();
    const int q = spec.target;
    const auto& group = clifford_group();
    const std::size_t nl = spec.rb_lengths.size();
    const std::size_t ns = spec.rb_sequences;

    RbResult res;
    res.lengths = spec.rb_lengths;
    res.survival.assign(nl, std::vector<double>(ns, 0.0));
    std::vector<std::size_t> triggers(nl * ns, 1);

    parallel_for(nl * ns, spec.jobs, [&](std::size_t k) {
        const std::size_t li = k / ns;
        const std::size_t si = k % ns;
        const std::size_t m = spec.rb_lengths[li];
        std::mt19937_64 rng(substream_seed(spec.seed, 2, k));
        constexpr std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                        std::numeric_limits<std::uint64_t>::max() % 24;
        GateIR ir;
        Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
        auto append = [&](std::size_t idx) {
            for (GateKind g : group[idx].primitives) {
                ir.add(g, q);
            }
            ir.layer_ends.push_back(ir.gates.size());
            total = group[idx].unitary * total;
        };
        for (std::size_t c = 0; c < m; ++c) {
            std::uint64_t r;
            do {
                r = rng();
            } while (r >= limit);
            append(static_cast<std::size_t>(r % 24));
        }
        append(clifford_index(total.adjoint()));
        if (std::abs(std::abs(total.trace()) - 2.0) > 1e-9) {
            throw Error("RB sequence does not compose to the identity");
        }
        const CompiledProgram prog = lab.compile(ir);
        triggers[k] = prog.report.triggers;
        const ShotBatch batch = lab.backend().run(prog, spec.shots, substream_seed(spec.seed, 3, k));
        std::size_t survived = 0;
        for (const auto& shot : batch.shots) {
            survived += (q == 0 ? shot.q1 : shot.q2) == 0 ? 1 : 0;
        }
        res.survival[li][si] = static_cast<double>(survived) / static_cast<double>(spec.shots);
    });

    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> ws;
    res.table.kind = experiment_name(spec.kind);
    res.table.columns = {"m", "sequence", "survival"};
    // Survival scatter grows with length (shot noise and sequence-to-sequence
    // spread), so each point is weighted by the inverse sample variance of
    // its length. The floor is the binomial variance of one flipped shot.
    const double shots = static_cast<double>(spec.shots);
    const double floor = (1.0 / shots) * (1.0 - 1.0 / shots) / shots;
    for (std::size_t li = 0; li < nl; ++li) {
        double sum = 0.0;
        for (std::size_t si = 0; si < ns; ++si) {
            const double v = res.survival[li][si];
            sum += v;
            xs.push_back(static_cast<double>(res.lengths[li]));
            ys.push_back(v);
            res.table.rows.push_back({static_cast<double>(res.lengths[li]), static_cast<double>(si), v});
        }
        const double mean = sum / static_cast<double>(ns);
        double var = 0.0;
        for (double v : res.survival[li]) {
            var += (v - mean) * (v - mean);
        }
        var = ns > 1 ? var / static_cast<double>(ns - 1) : 0.0;
        ws.insert(ws.end(), ns, 1.0 / std::max(var, floor));
        res.mean_survival.push_back(mean);
    }
    res.max_triggers = *std::max_element(triggers.begin(), triggers.end());

    const double per_clifford = primitives_per_clifford();
    auto& s = res.table.summary;
    s = summary_header(spec);
    s["target"] = q;
    s["lengths"] = res.lengths;
    s["sequences"] = ns;
    s["mean_survival"] = res.mean_survival;
    s["primitives_per_clifford"] = per_clifford;
    s["max_triggers"] = res.max_triggers;
    if (xs.size() >= 3) {
        res.fit = fit_exponential(xs, ys, ws);
        res.fidelity_clifford = 1.0 - (1.0 - res.fit.p) / 2.0;
        res.fidelity_gate = 1.0 - (1.0 - res.fit.p) / (2.0 * per_clifford);
        res.sigma_fidelity_gate = res.fit.sigma_p / (2.0 * per_clifford);
        s["fit"] = {{"a", res.fit.a},         {"b", res.fit.b},         {"p", res.fit.p},
                    {"sigma_a", res.fit.sigma_a}, {"sigma_b", res.fit.sigma_b}, {"sigma_p", res.fit.sigma_p},
                    {"converged", res.fit.converged}};
        s["fidelity_clifford"] = res.fidelity_clifford;
        s["sigma_fidelity_clifford"] = res.fit.sigma_p / 2.0;
        s["fidelity_gate"] = res.fidelity_gate;
        s["sigma_fidelity_gate"] = res.sigma_fidelity_gate;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Deutsch-Jozsa

DjResult run_dj(const Lab& lab, const ExperimentSpec& spec) {
    spec.validate();
    const auto variants = expand_oracle(parse_program(dj_program_text()));
    std::vector<ShotBatch> batches(variants.size());
    parallel_for(variants.size(), spec.jobs, [&](std::size_t i) {
        batches[i] = lab.backend().run(lab.compile(variants[i].ir), spec.shots, point_seed(spec, i));
    });

    DjResult res;
    res.table.kind = experiment_name(spec.kind);
    res.table.columns = {"oracle", "constant", "p1_q1", "p1_q2", "stderr", "p_exact"};
    nlohmann::ordered_json outcomes = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < variants.size(); ++i) {
        const auto p = batches[i].p1_measured();
        DjOutcome o{variants[i].name, variants[i].constant, p[0], p[1], binomial_stderr(p[0], spec.shots),
                    batches[i].p1_exact[0]};
        res.table.rows.push_back({static_cast<double>(i), o.constant ? 1.0 : 0.0, o.p1_q1, o.p1_q2, o.stderr, o.p_exact});
        outcomes.push_back({{"oracle", o.oracle},
                            {"constant", o.constant},
                            {"p1_q1", o.p1_q1},
                            {"p1_q2", o.p1_q2},
                            {"stderr", o.stderr},
                            {"p_exact", o.p_exact},
                            {"classified_constant", o.p1_q1 > 0.5}});
        res.outcomes.push_back(std::move(o));
    }
    auto& s = res.table.summary;
    s = summary_header(spec);
    s["output_qubit"] = 0;
    s["outcomes"] = outcomes;
    return res;
}

ExperimentResult run_experiment(const Lab& lab, const ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::Rabi:
            return run_rabi(lab, spec, false).table;
        case ExperimentKind::RabiSimultaneous:
            return run_rabi(lab, spec, true).table;
        case ExperimentKind::Spectroscopy:
            return run_spectroscopy(lab, spec).table;
        case ExperimentKind::AllXY:
            return run_allxy(lab, spec).table;
        case ExperimentKind::QstTrajectory:
            return run_qst_trajectory(lab, spec).table;
        case ExperimentKind::RB:
            return run_rb(lab, spec).table;
        case ExperimentKind::DJ:
            return run_dj(lab, spec).table;
    }
    throw ConfigError("unknown experiment kind");
}

}  // namespace cryoctl
