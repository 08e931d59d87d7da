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

#include "cryoctl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cryoctl/error.hpp"
#include "cryoctl/numeric.hpp"

namespace cryoctl {

namespace {

constexpr std::complex<double> kI(0.0, 1.0);

double wrap_angle(double a) {
    a = std::remainder(a, kTwoPi);
    return a <= -std::numbers::pi ? a + kTwoPi : a;
}

}  // namespace

// ---------------------------------------------------------------------------
// Readout error removal

ConfusionMatrix ConfusionMatrix::from_fidelities(double f0, double f1) {
    if (!(f0 >= 0.0 && f0 <= 1.0 && f1 >= 0.0 && f1 <= 1.0)) {
        throw RangeError("readout fidelities must lie in [0, 1]");
    }
    ConfusionMatrix c;
    c.m << f0, 1.0 - f1, 1.0 - f0, f1;
    return c;
}

std::array<double, 2> ConfusionMatrix::apply(const std::array<double, 2>& p) const {
    const Eigen::Vector2d v = m * Eigen::Vector2d(p[0], p[1]);
    return {v[0], v[1]};
}

CorrectedProbabilities readout_correct(const std::array<double, 2>& measured, double f0, double f1) {
    ConfusionMatrix::from_fidelities(f0, f1);  // range check
    if (!(f0 + f1 > 1.0)) {
        throw ValidationError("confusion matrix is singular or inverting (F0 + F1 = " + std::to_string(f0 + f1) +
                              ", needs > 1)");
    }
    const double det = f0 + f1 - 1.0;
    CorrectedProbabilities out;
    out.unclamped[0] = (f1 * measured[0] - (1.0 - f1) * measured[1]) / det;
    out.unclamped[1] = (f0 * measured[1] - (1.0 - f0) * measured[0]) / det;
    // Rounding at the endpoints is clamped silently; only a real excursion
    // is reported.
    constexpr double kSlack = 1e-12;
    for (int k = 0; k < 2; ++k) {
        out.p[k] = std::clamp(out.unclamped[k], 0.0, 1.0);
        out.clamped = out.clamped || std::abs(out.p[k] - out.unclamped[k]) > kSlack;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Backends

std::array<double, 2> ShotBatch::p1_measured() const {
    if (shots.empty()) {
        return {0.0, 0.0};
    }
    std::array<std::size_t, 2> ones{};
    for (const auto& s : shots) {
        ones[0] += s.q1;
        ones[1] += s.q2;
    }
    const auto n = static_cast<double>(shots.size());
    return {static_cast<double>(ones[0]) / n, static_cast<double>(ones[1]) / n};
}

PhysicsBackend::PhysicsBackend(DeviceModel model, TxConfig tx) : model_(std::move(model)), tx_(std::move(tx)) {
    model_.validate();
    tx_.validate();
}

QuantumState PhysicsBackend::final_state(const CompiledProgram& program,
                                         const NoiseSample& noise,
                                         const QuantumState& initial) const {
    const BasebandWaveform bb = execute(program.image, tx_);
    const double frame = model_.frame(program.plan.lo_hz);
    return evolve(initial, prepare_drive(bb, program.plan.lo_hz, frame), model_, noise, frame, program.plan.exchange_on);
}

ShotBatch PhysicsBackend::run(const CompiledProgram& program, std::size_t shots, std::uint64_t seed) const {
    const BasebandWaveform bb = execute(program.image, tx_);
    const double frame = model_.frame(program.plan.lo_hz);
    const PreparedDrive drive = prepare_drive(bb, program.plan.lo_hz, frame);
    const bool exchange = program.plan.exchange_on;
    const bool noiseless =
        model_.sigma_detune == 0.0 && model_.sigma_j == 0.0 && model_.residual_excitation == 0.0;

    ShotBatch out;
    out.shots.reserve(shots);
    std::optional<QuantumState> shared;
    for (std::size_t s = 0; s < shots; ++s) {
        std::mt19937_64 rng(substream_seed(seed, 0, s));
        // Every shot consumes the same draws whether or not noise is enabled.
        const QuantumState initial = prepare_initial(model_, rng);
        const NoiseSample noise = sample_noise(model_, rng);
        QuantumState state;
        if (noiseless) {
            if (!shared) {
                shared = evolve(initial, drive, model_, noise, frame, exchange);
            }
            state = *shared;
        } else {
            state = evolve(initial, drive, model_, noise, frame, exchange);
        }
        const auto reported = readout_probabilities(state, model_);
        for (int q = 0; q < 2; ++q) {
            out.p1_exact[q] += state.p1(q);
            out.p1_reported[q] += reported[q];
        }
        out.shots.push_back(measure_once(state, model_, rng));
    }
    if (shots > 0) {
        for (int q = 0; q < 2; ++q) {
            out.p1_exact[q] /= static_cast<double>(shots);
            out.p1_reported[q] /= static_cast<double>(shots);
        }
    }
    return out;
}

namespace {

Eigen::Matrix2cd rotation(double axis, double angle) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    Eigen::Matrix2cd r;
    r << c, -kI * s * std::polar(1.0, axis), -kI * s * std::polar(1.0, -axis), c;
    return r;
}

// Embeds a single-qubit operator on `qubit`; with condition >= 0 it acts only
// where the other qubit is in that state.
Eigen::Matrix4cd lift(const Eigen::Matrix2cd& u, int qubit, int condition) {
    Eigen::Matrix4cd out = Eigen::Matrix4cd::Identity();
    for (int other = 0; other < 2; ++other) {
        if (condition >= 0 && condition != other) {
            continue;
        }
        const int lo = qubit == 1 ? 2 * other : other;
        const int hi = qubit == 1 ? 2 * other + 1 : other + 2;
        out(lo, lo) = u(0, 0);
        out(lo, hi) = u(0, 1);
        out(hi, lo) = u(1, 0);
        out(hi, hi) = u(1, 1);
    }
    return out;
}

// Single-qubit depolarizing channel of strength p on `qubit`.
Eigen::Matrix4cd depolarize(const Eigen::Matrix4cd& rho, int qubit, double p) {
    // (1 - p) rho + p (Tr_q rho) x I/2, written with the Pauli twirl
    // (Tr_q rho) x I/2 = (rho + X rho X + Y rho Y + Z rho Z) / 4.
    Eigen::Matrix2cd x, y, z;
    x << 0, 1, 1, 0;
    y << 0, -kI, kI, 0;
    z << 1, 0, 0, -1;
    Eigen::Matrix4cd out = (1.0 - 0.75 * p) * rho;
    for (const auto& pauli : {x, y, z}) {
        const Eigen::Matrix4cd l = lift(pauli, qubit, -1);
        out += 0.25 * p * l * rho * l.adjoint();
    }
    return out;
}

}  // namespace

AnalyticBackend::AnalyticBackend(DeviceModel model, TxConfig tx, Options options)
    : model_(std::move(model)), tx_(std::move(tx)), options_(options) {
    model_.validate();
    if (!(options_.depolarizing >= 0.0 && options_.depolarizing <= 1.0)) {
        throw RangeError("depolarizing strength must lie in [0, 1]");
    }
}

Eigen::Matrix4cd AnalyticBackend::final_density(const CompiledProgram& program) const {
    const auto& plan = program.plan;
    const auto& gates = program.ir.gates;
    std::vector<std::vector<const BurstRecord*>> by_gate(gates.size());
    for (const auto& b : program.bursts) {
        by_gate.at(b.gate).push_back(&b);
    }
    std::vector<bool> layer_end(gates.size() + 1, false);
    if (program.ir.layer_ends.empty()) {
        std::fill(layer_end.begin(), layer_end.end(), true);
    } else {
        for (std::size_t e : program.ir.layer_ends) {
            layer_end.at(e) = true;
        }
    }

    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    rho(0, 0) = 1.0;
    for (std::size_t gi = 0; gi < gates.size(); ++gi) {
        const Gate& g = gates[gi];
        if (g.kind == GateKind::Z) {
            // A frame advance acts on the state as diag(1, e^{i theta}).
            Eigen::Matrix2cd d = Eigen::Matrix2cd::Identity();
            d(1, 1) = std::polar(1.0, g.angle);
            const Eigen::Matrix4cd u = lift(d, g.target, -1);
            rho = u * rho * u.adjoint();
            continue;
        }
        for (const BurstRecord* b : by_gate[gi]) {
            const auto& slot = plan.slots.at(b->slot);
            double angle = b->angle;
            if (!options_.ideal_gates) {
                const double c = model_.drive_coupling[slot.qubit] * sinc(slot.offset_hz / plan.f_clk);
                angle = kTwoPi * c * b->area / plan.f_clk;
            }
            const Eigen::Matrix4cd u = lift(rotation(b->axis, angle), slot.qubit, slot.condition);
            rho = u * rho * u.adjoint();
        }
        if (options_.depolarizing > 0.0 && layer_end[gi + 1]) {
            rho = depolarize(depolarize(rho, 0, options_.depolarizing), 1, options_.depolarizing);
        }
    }
    return rho;
}

ShotBatch AnalyticBackend::run(const CompiledProgram& program, std::size_t shots, std::uint64_t seed) const {
    const Eigen::Matrix4cd rho = final_density(program);
    std::array<double, 4> p{};
    for (int k = 0; k < 4; ++k) {
        p[k] = std::max(0.0, rho(k, k).real());
    }
    ShotBatch out;
    out.p1_exact = {p[2] + p[3], p[1] + p[3]};
    out.p1_reported = readout_probabilities(p, model_);
    out.shots.reserve(shots);
    for (std::size_t s = 0; s < shots; ++s) {
        std::mt19937_64 rng(substream_seed(seed, 0, s));
        out.shots.push_back(measure_once(p, model_, rng));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Calibration by simulation

namespace {

std::pair<int, int> transition_states(int qubit, int condition) {
    return qubit == 1 ? std::pair{2 * condition, 2 * condition + 1} : std::pair{condition, condition + 2};
}

// Propagator of one isolated burst in the interaction frame of the static
// Hamiltonian.
Eigen::Matrix4cd burst_propagator(const DeviceModel& model,
                                  const TxConfig& tx,
                                  const FrequencyPlan& plan,
                                  std::size_t s,
                                  std::size_t samples,
                                  double amplitude,
                                  double axis_offset) {
    const auto& slot = plan.slots[s];
    MemoryImage img;
    img.amp_bits = tx.amp_bits;
    img.phase_mod_bits = tx.phase_mod_bits;
    img.ncos[slot.bank][slot.nco] = NcoConfig{slot.ftw, radians_to_phase_word(-axis_offset)};
    img.envelope.append(synthesize_envelope(EnvelopeShape::Rectangular, samples, amplitude, tx.amp_bits));
    Instruction ins;
    ins.nco = slot.nco;
    ins.range = EnvelopeRange{0, static_cast<std::uint32_t>(samples - 1)};
    img.tables[slot.bank].add(ins);
    img.lists.push_back(InstructionList({InstructionRef{slot.bank, slot.nco, 0, false}}));

    const BasebandWaveform bb = execute(img, tx);
    const double frame = model.frame(plan.lo_hz);
    const PreparedDrive drive = prepare_drive(bb, plan.lo_hz, frame);
    const double duration = static_cast<double>(samples) / tx.f_clk;
    Eigen::Matrix4cd u;
    for (int k = 0; k < 4; ++k) {
        QuantumState basis;
        basis.amps = Eigen::Vector4cd::Unit(k);
        const QuantumState out = evolve(basis, drive, model, {}, frame, plan.exchange_on);
        // Undo the free precession: U_I = exp(+i 2 pi H0 T) U.
        const QuantumState back = evolve_free(out, -duration, model, {}, frame, plan.exchange_on);
        u.col(k) = back.amps;
    }
    return u;
}

struct BlockAnalysis {
    double rotation = 0.0;  // on the resonant pair
    double axis = 0.0;      // residual axis offset
    std::array<double, 4> phases{};
};

// For a pi burst the axis and the phase split are degenerate (M00 ~ 0), so
// the axis measured on the pi/2 burst of the same slot is passed in.
BlockAnalysis analyze_burst(const Eigen::Matrix4cd& u, int qubit, int condition, std::optional<double> axis = {}) {
    BlockAnalysis out;
    const int resonant = condition < 0 ? 0 : condition;
    {
        const auto [a, b] = transition_states(qubit, resonant);
        out.rotation = 2.0 * std::atan2(std::abs(u(a, b)), std::abs(u(a, a)));
        out.axis = axis ? *axis : 0.5 * std::arg(u(a, b) * u(b, b) / (u(a, a) * u(b, a)));
    }
    for (int other = 0; other < 2; ++other) {
        const auto [a, b] = transition_states(qubit, other);
        if (condition < 0 || condition == other) {
            // M = diag(e^{i ta}, e^{i tb}) R_eps(theta).
            const double c = std::cos(out.rotation / 2.0);
            const double s = std::sin(out.rotation / 2.0);
            out.phases[a] = std::arg(c * u(a, a) + kI * s * std::polar(1.0, -out.axis) * u(a, b));
            out.phases[b] = std::arg(c * u(b, b) + kI * s * std::polar(1.0, out.axis) * u(b, a));
        } else {
            out.phases[a] = std::arg(u(a, a));
            out.phases[b] = std::arg(u(b, b));
        }
    }
    return out;
}

std::vector<double> frame_corrections(const FrequencyPlan& plan, const std::array<double, 4>& phases) {
    std::vector<double> out;
    out.reserve(plan.slots.size());
    for (const auto& slot : plan.slots) {
        const auto [x, y] = transition_states(slot.qubit, std::max(slot.condition, 0));
        out.push_back(wrap_angle(-(phases[y] - phases[x])));
    }
    return out;
}

}  // namespace

CalibrationSet calibrate(const DeviceModel& model, const TxConfig& tx, const FrequencyPlan& plan, double rabi_hz) {
    model.validate();
    CalibrationSet cal = nominal_calibration(plan, model.drive_coupling, tx, rabi_hz);
    const double half_scale = static_cast<double>(std::int64_t{1} << (tx.amp_bits - 1));

    for (std::size_t s = 0; s < plan.slots.size(); ++s) {
        const auto& slot = plan.slots[s];
        SlotCalibration& sc = cal.slots[s];
        const std::size_t n = sc.half.samples;

        // Residual axis offset of the pi/2 burst.
        auto u = burst_propagator(model, tx, plan, s, n, sc.half.amplitude, sc.axis_offset);
        sc.axis_offset = wrap_angle(sc.axis_offset + analyze_burst(u, slot.qubit, slot.condition).axis);

        // Amplitude code giving the rotation closest to pi/2.
        const auto code0 = round_half_away(sc.half.amplitude * half_scale);
        double best_err = std::numeric_limits<double>::infinity();
        for (std::int64_t code = code0 - 2; code <= code0 + 2; ++code) {
            if (code < 1 || static_cast<double>(code) >= half_scale) {
                continue;
            }
            const double a = static_cast<double>(code) / half_scale;
            const auto trial = burst_propagator(model, tx, plan, s, n, a, sc.axis_offset);
            const double err = std::abs(analyze_burst(trial, slot.qubit, slot.condition).rotation - std::numbers::pi / 2);
            if (err < best_err - 1e-15) {
                best_err = err;
                sc.half.amplitude = a;
                u = trial;
            }
        }
        sc.full.amplitude = sc.half.amplitude;

        if (plan.exchange_on) {
            const BlockAnalysis half = analyze_burst(u, slot.qubit, slot.condition);
            sc.half.frame_corrections = frame_corrections(plan, half.phases);
            const auto uf = burst_propagator(model, tx, plan, s, sc.full.samples, sc.full.amplitude, sc.axis_offset);
            sc.full.frame_corrections =
                frame_corrections(plan, analyze_burst(uf, slot.qubit, slot.condition, half.axis).phases);
        }
    }
    // Without exchange the residual phases are small and every correction
    // would cost a table entry, so they are not emitted.
    cal.apply_frame_corrections = plan.exchange_on;
    cal.validate(plan);
    return cal;
}

Lab::Lab(LabConfig cfg, std::shared_ptr<const Backend> backend) : cfg_(std::move(cfg)), backend_(std::move(backend)) {
    cfg_.model.validate();
    cfg_.tx.validate();
    const std::array<double, 2> qubits{cfg_.model.f1, cfg_.model.f2};
    plans_[0] = allocate_frequencies(qubits, cfg_.tx.lo_freq, cfg_.tx.f_clk, false);
    plans_[1] = allocate_frequencies(qubits, cfg_.tx.lo_freq, cfg_.tx.f_clk, true, cfg_.model.j_on);
    if (!backend_) {
        backend_ = std::make_shared<PhysicsBackend>(cfg_.model, cfg_.tx);
    }
}

const FrequencyPlan& Lab::plan(bool exchange_on) const {
    return plans_[exchange_on ? 1 : 0];
}

const CalibrationSet& Lab::calibration(bool exchange_on) const {
    std::lock_guard lock(mutex_);
    auto& slot = cals_[exchange_on ? 1 : 0];
    if (!slot) {
        const auto& p = plan(exchange_on);
        slot = cfg_.simulated_calibration ? calibrate(cfg_.model, cfg_.tx, p, cfg_.rabi_hz)
                                          : nominal_calibration(p, cfg_.model.drive_coupling, cfg_.tx, cfg_.rabi_hz);
    }
    return *slot;
}

CompiledProgram Lab::compile(const GateIR& ir, const CompileOptions& options) const {
    return cryoctl::compile(ir, plan(ir.exchange_on), calibration(ir.exchange_on), cfg_.tx, options);
}

// ---------------------------------------------------------------------------
// Clifford group

Eigen::Matrix2cd primitive_unitary(GateKind kind) {
    const double h = std::numbers::pi / 2;
    switch (kind) {
        case GateKind::I:
            return Eigen::Matrix2cd::Identity();
        case GateKind::X:
            return rotation(0.0, h);
        case GateKind::Y:
            return rotation(h, h);
        case GateKind::mX:
            return rotation(2 * h, h);
        case GateKind::mY:
            return rotation(3 * h, h);
        case GateKind::X2:
            return rotation(0.0, 2 * h);
        case GateKind::Y2:
            return rotation(h, 2 * h);
        default:
            throw ValidationError(std::string("no single-qubit unitary for ") + gate_name(kind));
    }
}

namespace {

bool equal_up_to_phase(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    // |Tr(a^dagger b)| = 2 exactly when a and b differ by a global phase.
    return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-9;
}

std::vector<Clifford> build_clifford_group() {
    const std::array<GateKind, 6> gens{GateKind::X, GateKind::Y, GateKind::mX, GateKind::mY, GateKind::X2, GateKind::Y2};
    std::vector<Clifford> group;
    group.push_back({Eigen::Matrix2cd::Identity(), {GateKind::I}});
    std::vector<Clifford> frontier{{Eigen::Matrix2cd::Identity(), {}}};
    while (group.size() < 24 && !frontier.empty()) {
        std::vector<Clifford> next;
        for (const auto& f : frontier) {
            for (GateKind g : gens) {
                Clifford c{primitive_unitary(g) * f.unitary, f.primitives};
                c.primitives.push_back(g);
                const bool known = std::any_of(group.begin(), group.end(),
                                               [&](const Clifford& e) { return equal_up_to_phase(e.unitary, c.unitary); });
                if (!known) {
                    group.push_back(c);
                    next.push_back(c);
                }
            }
        }
        frontier = std::move(next);
    }
    if (group.size() != 24) {
        throw Error("Clifford enumeration produced " + std::to_string(group.size()) + " elements");
    }
    return group;
}

}  // namespace

const std::vector<Clifford>& clifford_group() {
    static const std::vector<Clifford> group = build_clifford_group();
    return group;
}

double primitives_per_clifford() {
    std::size_t total = 0;
    for (const auto& c : clifford_group()) {
        total += c.primitives.size();
    }
    return static_cast<double>(total) / static_cast<double>(clifford_group().size());
}

std::size_t clifford_index(const Eigen::Matrix2cd& u) {
    const auto& group = clifford_group();
    for (std::size_t k = 0; k < group.size(); ++k) {
        if (equal_up_to_phase(group[k].unitary, u)) {
            return k;
        }
    }
    throw ValidationError("unitary is not a Clifford element");
}

// ---------------------------------------------------------------------------
// Fits

namespace {

// Unweighted Levenberg-Marquardt. `model(params, x, jac_row)` returns f(x)
// and fills the Jacobian row. `project` keeps parameters admissible.
template <class Model, class Project>
bool levenberg_marquardt(Eigen::VectorXd& params,
                         const std::vector<double>& x,
                         const std::vector<double>& y,
                         const std::vector<double>& weights,
                         Model model,
                         Project project,
                         Eigen::MatrixXd& covariance) {
    const auto n = static_cast<Eigen::Index>(x.size());
    // Residuals and Jacobian rows are scaled by sqrt(w), so the normal
    // equations carry J^T W J.
    std::vector<double> scale(x.size(), 1.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
        scale[i] = std::sqrt(weights[i]);
    }
    const Eigen::Index k = params.size();
    Eigen::MatrixXd jac(n, k);
    Eigen::VectorXd r(n);
    Eigen::VectorXd row(k);

    auto evaluate = [&](const Eigen::VectorXd& p, bool with_jac) {
        double rss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto u = static_cast<std::size_t>(i);
            const double f = model(p, x[u], row);
            r[i] = scale[u] * (y[u] - f);
            rss += r[i] * r[i];
            if (with_jac) {
                jac.row(i) = scale[u] * row.transpose();
            }
        }
        return rss;
    };

    double rss = evaluate(params, true);
    double lambda = 1e-3;
    bool converged = false;
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        Eigen::MatrixXd a = jtj;
        for (Eigen::Index d = 0; d < k; ++d) {
            a(d, d) += lambda * std::max(jtj(d, d), 1e-12);
        }
        Eigen::VectorXd trial = params + a.ldlt().solve(g);
        project(trial);
        const double trial_rss = evaluate(trial, false);
        if (trial_rss <= rss) {
            const double change = (trial - params).norm() / (params.norm() + 1e-12);
            params = trial;
            const double previous = rss;
            rss = evaluate(params, true);
            lambda = std::max(lambda / 10.0, 1e-12);
            if (change < 1e-12 || previous - rss <= 1e-15 * std::max(previous, 1e-300)) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                converged = true;
                break;
            }
        }
    }
    evaluate(params, true);
    // Covariance scaled by the reduced chi-square, so that only the relative
    // weights matter.
    const double dof = static_cast<double>(std::max<Eigen::Index>(n - k, 1));
    const double s2 = rss / dof;
    covariance = s2 * (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
    return converged;
}

}  // namespace

ExpFit fit_exponential(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& weights) {
    if (x.size() != y.size() || x.size() < 3) {
        throw ValidationError("exponential fit needs at least 3 points of matching length");
    }
    if (!weights.empty() && weights.size() != x.size()) {
        throw ValidationError("exponential fit weights must match the data length");
    }
    for (double w : weights) {
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ValidationError("exponential fit weights must be positive and finite");
        }
    }
    // Start from B = min(y) - small margin and a log-linear slope.
    const double ymin = *std::min_element(y.begin(), y.end());
    const double ymax = *std::max_element(y.begin(), y.end());
    const double b0 = std::min(0.5, ymin - 1e-3 * std::max(ymax - ymin, 1e-6));
    double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = y[i] - b0;
        if (v > 0) {
            const double ly = std::log(v);
            sx += x[i];
            sy += ly;
            sxx += x[i] * x[i];
            sxy += x[i] * ly;
            m += 1;
        }
    }
    double slope = 0.0;
    double icept = std::log(std::max(ymax - b0, 1e-6));
    if (m >= 2 && m * sxx - sx * sx > 0) {
        slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        icept = (sy - slope * sx) / m;
    }
    Eigen::VectorXd p(3);
    p << std::exp(icept), b0, std::clamp(std::exp(slope), 1e-6, 1.0);

    auto model = [](const Eigen::VectorXd& q, double xv, Eigen::VectorXd& row) {
        const double pw = std::pow(q[2], xv);
        row[0] = pw;
        row[1] = 1.0;
        row[2] = xv == 0.0 ? 0.0 : q[0] * xv * std::pow(q[2], xv - 1.0);
        return q[0] * pw + q[1];
    };
    auto project = [](Eigen::VectorXd& q) { q[2] = std::clamp(q[2], 1e-9, 1.0); };
    Eigen::MatrixXd cov;
    ExpFit fit;
    fit.converged = levenberg_marquardt(p, x, y, weights, model, project, cov);
    fit.a = p[0];
    fit.b = p[1];
    fit.p = p[2];
    fit.sigma_a = std::sqrt(std::max(cov(0, 0), 0.0));
    fit.sigma_b = std::sqrt(std::max(cov(1, 1), 0.0));
    fit.sigma_p = std::sqrt(std::max(cov(2, 2), 0.0));
    return fit;
}

SineFit fit_rabi(const std::vector<double>& t, const std::vector<double>& y, double guess_hz) {
    if (t.size() != y.size() || t.size() < 4) {
        throw ValidationError("Rabi fit needs at least 4 points of matching length");
    }
    Eigen::VectorXd p(3);
    const double ymin = *std::min_element(y.begin(), y.end());
    const double ymax = *std::max_element(y.begin(), y.end());
    p << ymax - ymin, ymin, guess_hz;
    auto model = [](const Eigen::VectorXd& q, double tv, Eigen::VectorXd& row) {
        const double s = std::sin(std::numbers::pi * q[2] * tv);
        row[0] = s * s;
        row[1] = 1.0;
        row[2] = q[0] * std::numbers::pi * tv * std::sin(kTwoPi * q[2] * tv);
        return q[0] * s * s + q[1];
    };
    Eigen::MatrixXd cov;
    levenberg_marquardt(p, t, y, {}, model, [](Eigen::VectorXd&) {}, cov);
    return SineFit{p[0], p[1], p[2], std::sqrt(std::max(cov(2, 2), 0.0))};
}

// ---------------------------------------------------------------------------
// Tomography

Eigen::Matrix2cd density_from_bloch(const std::array<double, 3>& r) {
    // x = 2 Re rho01, y = 2 Im rho01, z = P(1) - P(0).
    Eigen::Matrix2cd rho;
    rho(0, 0) = (1.0 - r[2]) / 2.0;
    rho(1, 1) = (1.0 + r[2]) / 2.0;
    rho(0, 1) = std::complex<double>(r[0], r[1]) / 2.0;
    rho(1, 0) = std::conj(rho(0, 1));
    return rho;
}

std::array<double, 3> bloch_from_density(const Eigen::Matrix2cd& rho) {
    return {2.0 * rho(0, 1).real(), 2.0 * rho(0, 1).imag(), (rho(1, 1) - rho(0, 0)).real()};
}

Eigen::Matrix2cd project_physical(const Eigen::Matrix2cd& rho_in) {
    const Eigen::Matrix2cd herm = 0.5 * (rho_in + rho_in.adjoint());
    const double tr = herm.trace().real();
    if (!(std::abs(tr) > 1e-15)) {
        throw ValidationError("density estimate has zero trace");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(herm / tr);
    // Eigen sorts ascending; truncate from the smallest, spreading the
    // removed weight over the remaining eigenvalues.
    Eigen::Vector2d mu = solver.eigenvalues();
    Eigen::Vector2d lambda = mu;
    double acc = 0.0;
    int kept = 2;
    for (int i = 0; i < 2; ++i) {
        if (mu[i] + acc / kept < 0.0) {
            acc += mu[i];
            lambda[i] = 0.0;
            --kept;
        } else {
            break;
        }
    }
    for (int i = 2 - kept; i < 2; ++i) {
        lambda[i] = mu[i] + acc / kept;
    }
    const auto& v = solver.eigenvectors();
    return v * lambda.cast<std::complex<double>>().asDiagonal() * v.adjoint();
}

}  // namespace cryoctl
