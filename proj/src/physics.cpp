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

#include "cryoctl/physics.hpp"

#include <bit>
#include <cmath>
#include <unordered_map>

#include "cryoctl/error.hpp"
#include "cryoctl/numeric.hpp"

namespace cryoctl {

void DeviceModel::validate() const {
    std::vector<std::string> problems;
    if (!(f1 > 0.0) || !(f2 > 0.0)) {
        problems.push_back("qubit frequencies must be positive");
    }
    if (f1 == f2) {
        problems.push_back("f1 and f2 must differ");
    }
    if (!(j_on > 0.0)) {
        problems.push_back("j_on must be positive");
    }
    if (!(j_off >= 0.0)) {
        problems.push_back("j_off must be non-negative");
    }
    for (int k = 0; k < 2; ++k) {
        if (!(drive_coupling[k] > 0.0)) {
            problems.push_back("drive_coupling of Q" + std::to_string(k + 1) + " must be positive");
        }
        for (double f : {readout[k].f0, readout[k].f1}) {
            if (!(f > 0.5 && f <= 1.0)) {
                problems.push_back("readout fidelities of Q" + std::to_string(k + 1) + " must lie in (0.5, 1]");
                break;
            }
        }
    }
    if (!(sigma_detune >= 0.0) || !(sigma_j >= 0.0)) {
        problems.push_back("noise sigmas must be non-negative");
    }
    if (!(crot_readout_fidelity >= 0.0 && crot_readout_fidelity <= 1.0)) {
        problems.push_back("crot_readout_fidelity must lie in [0, 1]");
    }
    if (!(residual_excitation >= 0.0 && residual_excitation <= 1.0)) {
        problems.push_back("residual_excitation must lie in [0, 1]");
    }
    if (!problems.empty()) {
        std::string msg = "invalid device model:";
        for (const auto& p : problems) {
            msg += "\n  - " + p;
        }
        throw ConfigError(msg);
    }
}

QuantumState QuantumState::basis(int q1, int q2) {
    QuantumState s;
    s.amps = Eigen::Vector4cd::Unit(2 * q1 + q2);
    return s;
}

std::array<double, 4> QuantumState::probabilities() const {
    return {std::norm(amps[0]), std::norm(amps[1]), std::norm(amps[2]), std::norm(amps[3])};
}

double QuantumState::p1(int qubit) const {
    const auto p = probabilities();
    return qubit == 0 ? p[2] + p[3] : p[1] + p[3];
}

std::array<double, 3> QuantumState::bloch(int qubit) const {
    // rho01 = <0|rho|1> of the reduced state; x = 2 Re rho01, y = 2 Im rho01.
    std::complex<double> rho01;
    if (qubit == 0) {
        rho01 = amps[0] * std::conj(amps[2]) + amps[1] * std::conj(amps[3]);
    } else {
        rho01 = amps[0] * std::conj(amps[1]) + amps[2] * std::conj(amps[3]);
    }
    const double up = p1(qubit);
    return {2.0 * rho01.real(), 2.0 * rho01.imag(), up - (1.0 - up)};
}

namespace {

struct CodeKey {
    std::uint64_t re;
    std::uint64_t im;
    bool operator==(const CodeKey&) const = default;
};

struct CodeKeyHash {
    std::size_t operator()(const CodeKey& k) const { return splitmix64(k.re ^ splitmix64(k.im)); }
};

// e^{j 2 pi word / 2^22}, exact on the four quarter turns.
std::complex<double> unit_phasor(std::uint32_t word) {
    switch (word & kPhaseMask) {
        case 0:
            return {1.0, 0.0};
        case kPhaseModulus / 4:
            return {0.0, 1.0};
        case kPhaseModulus / 2:
            return {-1.0, 0.0};
        case 3 * (kPhaseModulus / 4):
            return {0.0, -1.0};
        default:
            return std::polar(1.0, phase_word_to_radians(word));
    }
}

}  // namespace

PreparedDrive prepare_drive(const BasebandWaveform& bb, double lo_hz, double frame_hz) {
    PreparedDrive out;
    out.sample_rate = bb.sample_rate;
    out.index.resize(bb.size());
    std::unordered_map<CodeKey, std::uint32_t, CodeKeyHash> seen;

    const double shift = lo_hz - frame_hz;
    const double word = shift / bb.sample_rate * kPhaseModulus;
    const bool integral = std::floor(word) == word && std::abs(word) < 1e15;
    const std::int64_t n0 = round_half_away(bb.start_time * bb.sample_rate);
    const std::int64_t step = integral ? static_cast<std::int64_t>(word) : 0;

    for (std::size_t n = 0; n < bb.size(); ++n) {
        std::complex<double> z = bb.analytic(n);
        if (shift != 0.0) {
            const std::int64_t idx = n0 + static_cast<std::int64_t>(n);
            if (integral) {
                const std::uint64_t w = static_cast<std::uint64_t>(step * idx) & kPhaseMask;
                z *= unit_phasor(static_cast<std::uint32_t>(w));
            } else {
                z *= std::polar(1.0, kTwoPi * shift * static_cast<double>(idx) / bb.sample_rate);
            }
        }
        const CodeKey key{std::bit_cast<std::uint64_t>(z.real() + 0.0), std::bit_cast<std::uint64_t>(z.imag() + 0.0)};
        auto [it, inserted] = seen.try_emplace(key, static_cast<std::uint32_t>(out.codes.size()));
        if (inserted) {
            out.codes.push_back(z);
        }
        out.index[n] = it->second;
    }
    return out;
}

namespace {

struct Detunings {
    double d1;
    double d2;
    double j;
};

Detunings detunings(const DeviceModel& model, double frame_hz, bool exchange_on, const NoiseSample& noise) {
    // Exchange noise only matters while the barrier is lowered.
    const double j = model.exchange(exchange_on) + (exchange_on ? noise.delta_j : 0.0);
    return {model.f1 - frame_hz + noise.delta1, model.f2 - frame_hz + noise.delta2, j};
}

Eigen::Matrix4cd build_hamiltonian(const DeviceModel& model, std::complex<double> z, const Detunings& d) {
    Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
    h(1, 1) = d.d2 - d.j / 2.0;
    h(2, 2) = d.d1 - d.j / 2.0;
    h(3, 3) = d.d1 + d.d2;
    const std::complex<double> w1 = 0.5 * model.drive_coupling[0] * z;
    const std::complex<double> w2 = 0.5 * model.drive_coupling[1] * z;
    // <0|H|1> = c z / 2 for each spin.
    h(0, 1) = w2;
    h(2, 3) = w2;
    h(0, 2) = w1;
    h(1, 3) = w1;
    h(1, 0) = std::conj(w2);
    h(3, 2) = std::conj(w2);
    h(2, 0) = std::conj(w1);
    h(3, 1) = std::conj(w1);
    return h;
}

// Complex product without the inf/nan recovery path of operator*, which
// dominates the per-sample loops otherwise.
inline std::complex<double> fmul(std::complex<double> a, std::complex<double> b) {
    return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

// (x0, x1) <- u (x0, x1)
inline void apply2(const Eigen::Matrix2cd& u, std::complex<double>& x0, std::complex<double>& x1) {
    const std::complex<double> y0 = fmul(u(0, 0), x0) + fmul(u(0, 1), x1);
    const std::complex<double> y1 = fmul(u(1, 0), x0) + fmul(u(1, 1), x1);
    x0 = y0;
    x1 = y1;
}

// exp(-i 2 pi H dt) for H = [[0, w], [conj(w), delta]] in the (|0>, |1>) basis.
Eigen::Matrix2cd spin_propagator(std::complex<double> w, double delta, double dt) {
    const double theta = kTwoPi * dt;
    const double hz = -delta / 2.0;
    const double hx = w.real();
    const double hy = -w.imag();
    const double n = std::sqrt(hx * hx + hy * hy + hz * hz);
    const std::complex<double> global = std::polar(1.0, -theta * delta / 2.0);
    const double c = std::cos(theta * n);
    const double s = n > 0.0 ? std::sin(theta * n) / n : theta;
    const std::complex<double> i(0.0, 1.0);
    Eigen::Matrix2cd u;
    u(0, 0) = global * (c - i * s * hz);
    u(1, 1) = global * (c + i * s * hz);
    u(0, 1) = global * (-i * s * std::complex<double>(hx, -hy));
    u(1, 0) = global * (-i * s * std::complex<double>(hx, hy));
    return u;
}

}  // namespace

Eigen::Matrix4cd hamiltonian(const DeviceModel& model,
                             std::complex<double> drive,
                             double frame_hz,
                             bool exchange_on,
                             const NoiseSample& noise) {
    return build_hamiltonian(model, drive, detunings(model, frame_hz, exchange_on, noise));
}

Eigen::Matrix4cd propagator(const Eigen::Matrix4cd& h, double dt) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h);
    const Eigen::Vector4d& lambda = solver.eigenvalues();
    Eigen::Vector4cd phases;
    for (int k = 0; k < 4; ++k) {
        phases[k] = std::polar(1.0, -kTwoPi * lambda[k] * dt);
    }
    const Eigen::Matrix4cd& v = solver.eigenvectors();
    return v * phases.asDiagonal() * v.adjoint();
}

QuantumState evolve(const QuantumState& state,
                    const PreparedDrive& drive,
                    const DeviceModel& model,
                    const NoiseSample& noise,
                    double frame_hz,
                    bool exchange_on) {
    const Detunings d = detunings(model, frame_hz, exchange_on, noise);
    const double dt = 1.0 / drive.sample_rate;
    Eigen::Vector4cd psi = state.amps;

    if (d.j == 0.0) {
        std::vector<Eigen::Matrix2cd> u1(drive.codes.size());
        std::vector<Eigen::Matrix2cd> u2(drive.codes.size());
        std::vector<bool> ready(drive.codes.size(), false);
        auto fetch = [&](std::uint32_t code) {
            if (!ready[code]) {
                const std::complex<double> z = drive.codes[code];
                u1[code] = spin_propagator(0.5 * model.drive_coupling[0] * z, d.d1, dt);
                u2[code] = spin_propagator(0.5 * model.drive_coupling[1] * z, d.d2, dt);
                ready[code] = true;
            }
        };
        // A product state stays a product state; evolve the two spins apart.
        int k = 0;
        for (int m = 1; m < 4; ++m) {
            if (std::abs(psi[m]) > std::abs(psi[k])) {
                k = m;
            }
        }
        const double entangled = std::abs(psi[0] * psi[3] - psi[1] * psi[2]);
        if (entangled < 1e-14 && std::abs(psi[k]) > 0.0) {
            const int i = k >> 1;
            const int j = k & 1;
            std::array<std::complex<double>, 2> s1{psi[j], psi[2 + j]};
            std::array<std::complex<double>, 2> s2{psi[2 * i], psi[2 * i + 1]};
            const std::complex<double> pivot = psi[k];
            for (std::uint32_t code : drive.index) {
                fetch(code);
                apply2(u1[code], s1[0], s1[1]);
                apply2(u2[code], s2[0], s2[1]);
            }
            for (int q1 = 0; q1 < 2; ++q1) {
                for (int q2 = 0; q2 < 2; ++q2) {
                    psi[2 * q1 + q2] = s1[q1] * s2[q2] / pivot;
                }
            }
        } else {
            for (std::uint32_t code : drive.index) {
                fetch(code);
                const Eigen::Matrix2cd& a = u1[code];
                const Eigen::Matrix2cd& b = u2[code];
                // Q2 acts within (00, 01) and (10, 11); Q1 within (00, 10) and (01, 11).
                apply2(b, psi[0], psi[1]);
                apply2(b, psi[2], psi[3]);
                apply2(a, psi[0], psi[2]);
                apply2(a, psi[1], psi[3]);
            }
        }
    } else {
        std::vector<Eigen::Matrix4cd> cache(drive.codes.size());
        std::vector<bool> ready(drive.codes.size(), false);
        for (std::uint32_t code : drive.index) {
            if (!ready[code]) {
                cache[code] = propagator(build_hamiltonian(model, drive.codes[code], d), dt);
                ready[code] = true;
            }
            psi = cache[code] * psi;
        }
    }
    QuantumState out;
    out.amps = psi;
    return out;
}

QuantumState evolve(const QuantumState& state,
                    const BasebandWaveform& bb,
                    double lo_hz,
                    const DeviceModel& model,
                    const NoiseSample& noise,
                    bool exchange_on) {
    const double frame = model.frame(lo_hz);
    return evolve(state, prepare_drive(bb, lo_hz, frame), model, noise, frame, exchange_on);
}

QuantumState evolve_free(const QuantumState& state,
                         double duration,
                         const DeviceModel& model,
                         const NoiseSample& noise,
                         double frame_hz,
                         bool exchange_on) {
    const Detunings d = detunings(model, frame_hz, exchange_on, noise);
    const std::array<double, 4> energy{0.0, d.d2 - d.j / 2.0, d.d1 - d.j / 2.0, d.d1 + d.d2};
    QuantumState out = state;
    for (int k = 0; k < 4; ++k) {
        out.amps[k] *= std::polar(1.0, -kTwoPi * energy[k] * duration);
    }
    return out;
}

NoiseSample sample_noise(const DeviceModel& model, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    NoiseSample s;
    // Always draw three values so the stream layout does not depend on which
    // sigmas are zero.
    const double a = normal(rng);
    const double b = normal(rng);
    const double c = normal(rng);
    s.delta1 = model.sigma_detune * a;
    s.delta2 = model.sigma_detune * b;
    s.delta_j = model.sigma_j * c;
    return s;
}

namespace {

double uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint8_t confuse(std::uint8_t bit, const ReadoutFidelity& f, double u) {
    const double p_one = bit ? f.f1 : 1.0 - f.f0;
    return u < p_one ? 1 : 0;
}

}  // namespace

ShotRecord measure_once(const QuantumState& state, const DeviceModel& model, std::mt19937_64& rng) {
    return measure_once(state.probabilities(), model, rng);
}

ShotRecord measure_once(const std::array<double, 4>& p, const DeviceModel& model, std::mt19937_64& rng) {
    const double u_state = uniform(rng);
    const double u_q2 = uniform(rng);
    const double u_crot = uniform(rng);
    const double u_coin = uniform(rng);
    const double u_q1 = uniform(rng);

    const double total = p[0] + p[1] + p[2] + p[3];
    int outcome = 3;
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) {
        acc += p[k] / total;
        if (u_state < acc) {
            outcome = k;
            break;
        }
    }
    const std::uint8_t q1_true = static_cast<std::uint8_t>(outcome >> 1);
    const std::uint8_t q2_true = static_cast<std::uint8_t>(outcome & 1);

    ShotRecord r;
    r.q2 = confuse(q2_true, model.readout[1], u_q2);
    const std::uint8_t mapped = u_crot < model.crot_readout_fidelity ? q1_true : static_cast<std::uint8_t>(u_coin < 0.5);
    r.q1 = confuse(mapped, model.readout[0], u_q1);
    return r;
}

std::vector<ShotRecord> measure(const QuantumState& state,
                                const DeviceModel& model,
                                std::size_t shots,
                                std::mt19937_64& rng) {
    std::vector<ShotRecord> out;
    out.reserve(shots);
    for (std::size_t s = 0; s < shots; ++s) {
        out.push_back(measure_once(state, model, rng));
    }
    return out;
}

std::array<double, 2> readout_probabilities(const QuantumState& state, const DeviceModel& model) {
    return readout_probabilities(state.probabilities(), model);
}

std::array<double, 2> readout_probabilities(const std::array<double, 4>& p, const DeviceModel& model) {
    const double p2 = p[1] + p[3];
    const double m1 = model.crot_readout_fidelity * (p[2] + p[3]) + (1.0 - model.crot_readout_fidelity) * 0.5;
    const auto& r1 = model.readout[0];
    const auto& r2 = model.readout[1];
    return {m1 * r1.f1 + (1.0 - m1) * (1.0 - r1.f0), p2 * r2.f1 + (1.0 - p2) * (1.0 - r2.f0)};
}

QuantumState prepare_initial(const DeviceModel& model, std::mt19937_64& rng) {
    const double u1 = uniform(rng);
    const double u2 = uniform(rng);
    const int q1 = u1 < model.residual_excitation ? 1 : 0;
    const int q2 = u2 < model.residual_excitation ? 1 : 0;
    return QuantumState::basis(q1, q2);
}

}  // namespace cryoctl
