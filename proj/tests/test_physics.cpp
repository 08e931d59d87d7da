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


#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cryoctl/error.hpp"
#include "cryoctl/physics.hpp"
#include "test_support.hpp"

namespace cryoctl {
namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x);
}

/// Constant complex drive held for `samples` clock periods.
PreparedDrive constant_drive(cd z, std::size_t samples) {
    PreparedDrive d;
    d.codes = {z};
    d.index.assign(samples, 0);
    return d;
}

/// exp(-i 2 pi H dt) by scaling and squaring of a Taylor series.
Eigen::Matrix4cd series_exp(const Eigen::Matrix4cd& h, double dt) {
    Eigen::Matrix4cd a = cd(0.0, -2 * kPi * dt) * h;
    int squarings = 0;
    while (a.norm() > 0.01) {
        a /= 2.0;
        ++squarings;
    }
    Eigen::Matrix4cd term = Eigen::Matrix4cd::Identity();
    Eigen::Matrix4cd sum = term;
    for (int k = 1; k < 20; ++k) {
        term = term * a / static_cast<double>(k);
        sum += term;
    }
    for (int k = 0; k < squarings; ++k) {
        sum = sum * sum;
    }
    return sum;
}

TEST(Hamiltonian, DiagonalHoldsFrameRelativeEnergies) {
    DeviceModel m;
    const double frame = 13.5e9;
    const NoiseSample noise{1e3, -2e3, 5e3, 0};
    const auto h = hamiltonian(m, 0.0, frame, true, noise);
    const double d1 = m.f1 - frame + 1e3;
    const double d2 = m.f2 - frame - 2e3;
    const double j = m.j_on + 5e3;
    EXPECT_NEAR(h(0, 0).real(), 0.0, 1e-9);
    EXPECT_NEAR(h(1, 1).real(), d2 - j / 2, 1e-3);
    EXPECT_NEAR(h(2, 2).real(), d1 - j / 2, 1e-3);
    EXPECT_NEAR(h(3, 3).real(), d1 + d2, 1e-3);
    // Exchange noise is ignored while the barrier is up.
    const auto h_off = hamiltonian(m, 0.0, frame, false, noise);
    EXPECT_NEAR(h_off(1, 1).real(), d2, 1e-3);
}

TEST(Hamiltonian, ConditionalTransitionsAreSplitByJ) {
    DeviceModel m;
    const auto h = hamiltonian(m, 0.0, 13.54e9, true);
    // Q2 flips at d2 - J/2 with Q1 down and d2 + J/2 with Q1 up.
    const double low = (h(1, 1) - h(0, 0)).real();
    const double high = (h(3, 3) - h(2, 2)).real();
    EXPECT_NEAR(high - low, m.j_on, 1e-3);
    EXPECT_NEAR((h(2, 2) - h(0, 0)).real(), m.f1 - 13.54e9 - m.j_on / 2, 1e-3);
}

TEST(Hamiltonian, DriveIsHermitianWithHalfRabiCoupling) {
    DeviceModel m;
    const cd z(0.3, -0.4);
    const auto h = hamiltonian(m, z, 13.54e9, false);
    EXPECT_LT((h - h.adjoint()).norm(), 1e-15);
    EXPECT_EQ(h(0, 1), 0.5 * m.drive_coupling[1] * z);
    EXPECT_EQ(h(0, 2), 0.5 * m.drive_coupling[0] * z);
    EXPECT_EQ(h(0, 3), 0.0);
}

TEST(Propagator, MatchesSeriesExponentialAndIsUnitary) {
    DeviceModel m;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const auto h = hamiltonian(m, cd(u(rng), u(rng)), 13.54e9 + 1e7 * u(rng), trial % 2 == 0);
        const double dt = 1e-9 * (1.0 + std::abs(u(rng)));
        const auto p = propagator(h, dt);
        EXPECT_LT((p * p.adjoint() - Eigen::Matrix4cd::Identity()).norm(), 1e-12);
        EXPECT_LT((p - series_exp(h, dt)).norm(), 1e-11);
    }
}

TEST(Evolve, ResonantRabiFollowsSineSquared) {
    DeviceModel m;
    const double amp = 0.25;
    const double omega = m.drive_coupling[1] * amp;
    for (std::size_t n : {1u, 125u, 500u, 1000u, 3333u, 10000u}) {
        const auto s = evolve(QuantumState::ground(), constant_drive(amp, n), m, {}, m.f2, false);
        const double t = static_cast<double>(n) * 1e-9;
        EXPECT_NEAR(s.p1(1), std::pow(std::sin(kPi * omega * t), 2), 1e-12) << n;
        EXPECT_NEAR(s.norm(), 1.0, 1e-11);  // rounding over up to 1e4 steps
    }
}

TEST(Evolve, DetunedRabiFollowsGeneralizedFormula) {
    DeviceModel m;
    const double amp = 0.5;
    const double omega = m.drive_coupling[1] * amp;
    const double delta = 1.5e6;
    const double w = std::hypot(omega, delta);
    for (std::size_t n : {100u, 700u, 2000u}) {
        const auto s = evolve(QuantumState::ground(), constant_drive(amp, n), m, {}, m.f2 - delta, false);
        const double t = static_cast<double>(n) * 1e-9;
        EXPECT_NEAR(s.p1(1), omega * omega / (w * w) * std::pow(std::sin(kPi * w * t), 2), 1e-11) << n;
    }
    // A quasi-static detuning draw is the same as moving the frame.
    const auto a = evolve(QuantumState::ground(), constant_drive(amp, 900), m, {0.0, delta, 0.0, 0}, m.f2, false);
    const auto b = evolve(QuantumState::ground(), constant_drive(amp, 900), m, {}, m.f2 - delta, false);
    EXPECT_NEAR(a.p1(1), b.p1(1), 1e-13);
}

TEST(Evolve, ProductAndGeneralPathsAgreeWithDirectPropagation) {
    DeviceModel m;
    PreparedDrive d;
    d.codes = {cd(0.2, 0.1), cd(-0.3, 0.05), cd(0.0, 0.4)};
    for (int k = 0; k < 300; ++k) {
        d.index.push_back(static_cast<std::uint32_t>((k * 7) % 3));
    }
    const double frame = 13.52e9;
    for (bool exchange : {false, true}) {
        for (const QuantumState& start :
             {QuantumState::ground(), QuantumState{Eigen::Vector4cd(cd(0.5), cd(0.0, 0.5), cd(0.5), cd(0.0, -0.5))},
              QuantumState{Eigen::Vector4cd(cd(std::sqrt(0.5)), cd(0.0), cd(0.0), cd(0.0, std::sqrt(0.5)))}}) {
            Eigen::Vector4cd psi = start.amps;
            for (auto code : d.index) {
                psi = series_exp(hamiltonian(m, d.codes[code], frame, exchange), 1e-9) * psi;
            }
            const auto s = evolve(start, d, m, {}, frame, exchange);
            EXPECT_LT((s.amps - psi).norm(), 1e-10) << exchange;
        }
    }
}

TEST(Evolve, FreeEvolutionAccumulatesDiagonalPhases) {
    DeviceModel m;
    QuantumState plus;
    plus.amps = Eigen::Vector4cd(cd(std::sqrt(0.5)), cd(std::sqrt(0.5)), cd(0.0), cd(0.0));
    const double frame = m.f2 - 2e6;  // Q2 precesses at +2 MHz in this frame
    const auto s = evolve_free(plus, 125e-9, m, {}, frame, false);
    // A quarter period moves the +x vector of Q2 to +y.
    const auto r = s.bloch(1);
    EXPECT_NEAR(r[0], 0.0, 1e-12);
    EXPECT_NEAR(r[1], 1.0, 1e-12);
    const auto idle = evolve(plus, constant_drive(0.0, 125), m, {}, frame, false);
    EXPECT_LT((idle.amps - s.amps).norm(), 1e-12);
}

TEST(Evolve, ControllerOutputRabiIncludesHoldRollOff) {
    // 24-bit words keep the quantization error well below the tolerance.
    TxConfig tx;
    tx.dac_bits = 24;
    tx.amp_bits = 24;
    tx.pac_addr_bits = 22;
    DeviceModel m;
    const auto ftw = offset_to_ftw(m.f2 - tx.lo_freq, tx.f_clk);
    const double offset = ftw_to_offset(ftw, tx.f_clk);
    const double amp = 0.25;
    const double omega = m.drive_coupling[1] * amp * sinc(offset / tx.f_clk);
    for (std::size_t n : {250u, 2500u, 7777u}) {
        const auto bb = execute(testing::cw_image(ftw, n, amp, tx.amp_bits), tx);
        const auto s = evolve(QuantumState::ground(), bb, tx.lo_freq, m, {}, false);
        EXPECT_NEAR(s.p1(1), std::pow(std::sin(kPi * omega * n * 1e-9), 2), 2e-6) << n;
    }
}

TEST(PrepareDrive, FrameShiftAtQuarterClockIsExact) {
    TxConfig tx;
    tx.dac_bits = 16;
    tx.pac_addr_bits = 16;
    // 250 MHz tone viewed from a frame 250 MHz above the LO is constant.
    const auto bb = execute(testing::cw_image(kPhaseModulus / 4, 400, 0.5, tx.amp_bits), tx);
    const auto d = prepare_drive(bb, tx.lo_freq, tx.lo_freq + 250e6);
    EXPECT_EQ(d.size(), 400u);
    EXPECT_EQ(d.codes.size(), 1u);
    const auto same = prepare_drive(bb, tx.lo_freq, tx.lo_freq);
    EXPECT_EQ(same.codes.size(), 4u);
    EXPECT_EQ(same.codes[same.index[7]], bb.analytic(7));
}

TEST(Readout, ProbabilitiesFollowConfusionAndCrot) {
    DeviceModel m;
    m.readout = {ReadoutFidelity{0.9, 0.8}, ReadoutFidelity{0.95, 0.85}};
    m.crot_readout_fidelity = 0.9;
    const std::array<double, 4> p{0.1, 0.2, 0.3, 0.4};
    const auto r = readout_probabilities(p, m);
    const double p2 = 0.6;
    const double p1 = 0.7;
    const double mapped = 0.9 * p1 + 0.1 * 0.5;
    EXPECT_NEAR(r[1], p2 * 0.85 + (1 - p2) * 0.05, 1e-15);
    EXPECT_NEAR(r[0], mapped * 0.8 + (1 - mapped) * 0.1, 1e-15);

    std::mt19937_64 rng(11);
    const std::size_t shots = 200000;
    std::array<double, 2> ones{};
    for (std::size_t k = 0; k < shots; ++k) {
        const auto s = measure_once(p, m, rng);
        ones[0] += s.q1;
        ones[1] += s.q2;
    }
    for (int q = 0; q < 2; ++q) {
        const double sigma = std::sqrt(r[q] * (1 - r[q]) / shots);
        EXPECT_NEAR(ones[q] / shots, r[q], 5 * sigma) << q;
    }
}

TEST(Readout, PerfectChainReportsBasisStates) {
    DeviceModel m;
    std::mt19937_64 rng(2);
    for (int q1 = 0; q1 < 2; ++q1) {
        for (int q2 = 0; q2 < 2; ++q2) {
            for (const auto& s : measure(QuantumState::basis(q1, q2), m, 50, rng)) {
                EXPECT_EQ(s.q1, q1);
                EXPECT_EQ(s.q2, q2);
            }
        }
    }
}

TEST(Noise, DrawsScaleWithSigmaAndKeepStreamLayout) {
    DeviceModel m;
    std::mt19937_64 a(9);
    std::mt19937_64 b(9);
    const auto zero = sample_noise(m, a);
    EXPECT_EQ(zero.delta1, 0.0);
    EXPECT_EQ(zero.delta_j, 0.0);
    m.sigma_detune = 50e3;
    m.sigma_j = 1e3;
    (void)sample_noise(m, b);
    EXPECT_EQ(a(), b());

    std::mt19937_64 rng(1);
    double s1 = 0.0;
    double s2 = 0.0;
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
        const auto x = sample_noise(m, rng);
        s1 += x.delta1;
        s2 += x.delta1 * x.delta1;
    }
    EXPECT_NEAR(s1 / n, 0.0, 5 * 50e3 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(s2 / n), 50e3, 50e3 * 5 / std::sqrt(2.0 * n));
}

TEST(Initialization, ResidualExcitationFraction) {
    DeviceModel m;
    m.residual_excitation = 0.1;
    std::mt19937_64 rng(4);
    const int n = 100000;
    int up = 0;
    for (int k = 0; k < n; ++k) {
        up += static_cast<int>(std::lround(prepare_initial(m, rng).p1(0)));
    }
    EXPECT_NEAR(static_cast<double>(up) / n, 0.1, 5 * std::sqrt(0.09 / n));
}

TEST(State, BlochVectorConventions) {
    // y = 2 Im <0|rho|1>, so (|0> + i|1>)/sqrt2 on Q2 points along -y.
    QuantumState s;
    s.amps = Eigen::Vector4cd(cd(std::sqrt(0.5)), cd(0.0, std::sqrt(0.5)), cd(0.0), cd(0.0));
    const auto r = s.bloch(1);
    EXPECT_NEAR(r[0], 0.0, 1e-15);
    EXPECT_NEAR(r[1], -1.0, 1e-15);
    EXPECT_NEAR(r[2], 0.0, 1e-15);
    EXPECT_NEAR(QuantumState::basis(1, 0).bloch(0)[2], 1.0, 1e-15);
    EXPECT_NEAR(QuantumState::basis(1, 0).bloch(1)[2], -1.0, 1e-15);
}

TEST(DeviceModel, ValidationListsEveryProblem) {
    DeviceModel m;
    m.f2 = m.f1;
    m.j_on = 0.0;
    m.readout[1].f0 = 0.4;
    try {
        m.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("f1 and f2"), std::string::npos);
        EXPECT_NE(msg.find("j_on"), std::string::npos);
        EXPECT_NE(msg.find("Q2"), std::string::npos);
    }
    EXPECT_NO_THROW(DeviceModel{}.validate());
}

}  // namespace
}  // namespace cryoctl
