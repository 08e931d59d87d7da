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
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "cryoctl/error.hpp"
#include "cryoctl/experiments.hpp"

namespace cryoctl {
namespace {

using cd = std::complex<double>;

Lab analytic_lab(double depolarizing = 0.0, DeviceModel model = {}) {
    LabConfig cfg;
    cfg.model = model;
    cfg.simulated_calibration = false;
    AnalyticBackend::Options opt;
    opt.depolarizing = depolarizing;
    return Lab(cfg, std::make_shared<AnalyticBackend>(cfg.model, cfg.tx, opt));
}

// ---- Readout correction ----------------------------------------------------------

TEST(ReadoutCorrect, InvertsTheConfusionMatrix) {
    for (double f0 : {0.6, 0.8, 0.95, 1.0}) {
        for (double f1 : {0.7, 0.9, 0.99}) {
            for (double p1 : {0.0, 0.1, 0.5, 0.93, 1.0}) {
                // Forward model written out by hand: P_M0 = f0 P0 + (1 - f1) P1.
                const std::array<double, 2> measured{f0 * (1 - p1) + (1 - f1) * p1, (1 - f0) * (1 - p1) + f1 * p1};
                const auto c = readout_correct(measured, f0, f1);
                EXPECT_NEAR(c.p[1], p1, 1e-12);
                EXPECT_NEAR(c.p[0], 1 - p1, 1e-12);
                EXPECT_FALSE(c.clamped);
            }
        }
    }
}

TEST(ReadoutCorrect, WorkedExample) {
    const auto c = readout_correct({0.83, 0.17}, 0.95, 0.80);
    EXPECT_NEAR(c.p[0], 0.84, 1e-12);
    EXPECT_NEAR(c.p[1], 0.16, 1e-12);
    const auto f = ConfusionMatrix::from_fidelities(0.95, 0.80).apply({0.84, 0.16});
    EXPECT_NEAR(f[0], 0.83, 1e-15);
}

TEST(ReadoutCorrect, ClampsOutsideThePhysicalRange) {
    const auto c = readout_correct({0.99, 0.01}, 0.95, 0.80);
    EXPECT_TRUE(c.clamped);
    EXPECT_LT(c.unclamped[1], 0.0);
    EXPECT_EQ(c.p[1], 0.0);
    EXPECT_EQ(c.p[0], 1.0);
}

TEST(ReadoutCorrect, SingularMatrixIsRejected) {
    EXPECT_THROW(readout_correct({0.5, 0.5}, 0.5, 0.5), ValidationError);
    EXPECT_THROW(readout_correct({0.5, 0.5}, 0.3, 0.7), ValidationError);
}

// ---- Clifford group ----------------------------------------------------------------

bool same_up_to_phase(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    return std::abs(std::abs((a.adjoint() * b).trace()) - 2.0) < 1e-9;
}

TEST(Clifford, PrimitiveAxesFollowTheSpinUpConvention) {
    // X takes |0> to +y and Y takes |0> to -x, with x = 2 Re rho01, y = 2 Im rho01.
    auto bloch = [](const Eigen::Vector2cd& v) {
        const cd rho01 = v[0] * std::conj(v[1]);
        return std::array<double, 3>{2 * rho01.real(), 2 * rho01.imag(), std::norm(v[1]) - std::norm(v[0])};
    };
    const Eigen::Vector2cd ground(1.0, 0.0);
    const auto x = bloch(primitive_unitary(GateKind::X) * ground);
    EXPECT_NEAR(x[1], 1.0, 1e-12);
    const auto y = bloch(primitive_unitary(GateKind::Y) * ground);
    EXPECT_NEAR(y[0], -1.0, 1e-12);
    const auto mx = bloch(primitive_unitary(GateKind::mX) * ground);
    EXPECT_NEAR(mx[1], -1.0, 1e-12);
    EXPECT_NEAR(bloch(primitive_unitary(GateKind::X2) * ground)[2], 1.0, 1e-12);
    EXPECT_TRUE(same_up_to_phase(primitive_unitary(GateKind::X) * primitive_unitary(GateKind::X),
                                 primitive_unitary(GateKind::X2)));
}

TEST(Clifford, GroupHas24DistinctClosedElements) {
    const auto& g = clifford_group();
    ASSERT_EQ(g.size(), 24u);
    EXPECT_TRUE(same_up_to_phase(g[0].unitary, Eigen::Matrix2cd::Identity()));
    for (std::size_t a = 0; a < g.size(); ++a) {
        Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
        for (GateKind k : g[a].primitives) {
            u = primitive_unitary(k) * u;
        }
        EXPECT_TRUE(same_up_to_phase(u, g[a].unitary)) << a;
        for (std::size_t b = a + 1; b < g.size(); ++b) {
            EXPECT_FALSE(same_up_to_phase(g[a].unitary, g[b].unitary)) << a << " " << b;
        }
    }
    std::set<std::size_t> products;
    for (const auto& a : g) {
        for (const auto& b : g) {
            const std::size_t k = clifford_index(a.unitary * b.unitary);
            EXPECT_TRUE(same_up_to_phase(g[k].unitary, a.unitary * b.unitary));
            products.insert(k);
        }
    }
    EXPECT_EQ(products.size(), 24u);
    EXPECT_DOUBLE_EQ(primitives_per_clifford(), 1.875);
}

// ---- Fits and tomography ------------------------------------------------------------

TEST(Fits, ExponentialRecoversExactDecay) {
    std::vector<double> x;
    std::vector<double> y;
    for (double m : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0}) {
        x.push_back(m);
        y.push_back(0.48 * std::pow(0.985, m) + 0.51);
    }
    const auto f = fit_exponential(x, y);
    EXPECT_TRUE(f.converged);
    EXPECT_NEAR(f.p, 0.985, 1e-9);
    EXPECT_NEAR(f.a, 0.48, 1e-8);
    EXPECT_NEAR(f.b, 0.51, 1e-8);
}

TEST(Fits, ExponentialUncertaintyCoversTheTruth) {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> noise(0.0, 0.01);
    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x;
        std::vector<double> y;
        for (int m = 1; m <= 300; m += 10) {
            for (int rep = 0; rep < 4; ++rep) {
                x.push_back(m);
                y.push_back(0.5 * std::pow(0.99, m) + 0.5 + noise(rng));
            }
        }
        const auto f = fit_exponential(x, y);
        covered += std::abs(f.p - 0.99) < 2 * f.sigma_p ? 1 : 0;
    }
    // About 95% of 2-sigma intervals should contain the true value.
    EXPECT_GT(covered, 180);
}

TEST(Fits, WeightedExponentialCoversTheTruthWithGrowingNoise) {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> unit(0.0, 1.0);
    int covered = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x;
        std::vector<double> y;
        std::vector<double> w;
        for (double m : {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0}) {
            // Scatter grows from 1e-3 at short lengths to about 3e-2.
            const double sigma = 1e-3 + 0.03 * (1.0 - std::pow(0.999, m));
            for (int rep = 0; rep < 8; ++rep) {
                x.push_back(m);
                y.push_back(0.5 * std::pow(0.999, m) + 0.5 + sigma * unit(rng));
                w.push_back(1.0 / (sigma * sigma));
            }
        }
        const auto f = fit_exponential(x, y, w);
        covered += std::abs(f.p - 0.999) < 2 * f.sigma_p ? 1 : 0;
    }
    EXPECT_GT(covered, 180);
}

TEST(Fits, ExponentialRejectsBadWeights) {
    const std::vector<double> x{1, 2, 3, 4};
    const std::vector<double> y{0.9, 0.8, 0.7, 0.65};
    EXPECT_THROW(fit_exponential(x, y, {1.0, 1.0}), cryoctl::ValidationError);
    EXPECT_THROW(fit_exponential(x, y, {1.0, 0.0, 1.0, 1.0}), cryoctl::ValidationError);
}

TEST(Fits, RabiFrequency) {
    std::vector<double> t;
    std::vector<double> y;
    for (int k = 0; k < 100; ++k) {
        t.push_back(k * 50e-9);
        y.push_back(0.9 * std::pow(std::sin(std::numbers::pi * 1.03e6 * t.back()), 2) + 0.05);
    }
    const auto f = fit_rabi(t, y, 1e6);
    EXPECT_NEAR(f.rabi_hz, 1.03e6, 1.0);
    EXPECT_NEAR(f.amplitude, 0.9, 1e-6);
}

TEST(Tomography, ProjectionGivesAPhysicalState) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-1.3, 1.3);
    for (int k = 0; k < 200; ++k) {
        const std::array<double, 3> r{u(rng), u(rng), u(rng)};
        const Eigen::Matrix2cd rho = project_physical(density_from_bloch(r));
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> eig(rho);
        EXPECT_GE(eig.eigenvalues()[0], -1e-12);
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
        EXPECT_LT((rho - rho.adjoint()).norm(), 1e-12);
        const auto back = bloch_from_density(rho);
        const double len = std::sqrt(r[0] * r[0] + r[1] * r[1] + r[2] * r[2]);
        const double out = std::sqrt(back[0] * back[0] + back[1] * back[1] + back[2] * back[2]);
        if (len <= 1.0) {
            // Physical input is left alone.
            for (int i = 0; i < 3; ++i) {
                EXPECT_NEAR(back[i], r[i], 1e-12);
            }
        } else {
            // Eigenvalue truncation keeps the direction and lands on the surface.
            EXPECT_NEAR(out, 1.0, 1e-12);
            EXPECT_NEAR(back[0] * r[0] + back[1] * r[1] + back[2] * r[2], len, 1e-12);
        }
    }
}

// ---- AllXY ------------------------------------------------------------------------

TEST(AllXY, IdealStaircase) {
    std::array<int, 3> counts{};
    for (const auto& [a, b] : allxy_pairs()) {
        counts[static_cast<std::size_t>(std::lround(allxy_ideal(a, b)) + 1)]++;
    }
    EXPECT_EQ(counts, (std::array<int, 3>{5, 12, 4}));
}

TEST(AllXY, AnalyticBackendReproducesTheSignature) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::AllXY;
    spec.shots = 4000;
    const auto r = run_allxy(analytic_lab(), spec);
    for (std::size_t i = 0; i < 21; ++i) {
        EXPECT_NEAR(r.sigma_z[i], r.ideal[i], 5 * std::max(r.stderr_z[i], 2.0 / spec.shots)) << i;
    }
    EXPECT_EQ(r.table.summary["signature"], nlohmann::ordered_json({5, 12, 4}));
}

// ---- Randomized benchmarking ---------------------------------------------------------

TEST(RandomizedBenchmarking, NoiselessSequencesSurvive) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::RB;
    spec.shots = 20;
    spec.rb_lengths = {1, 7, 40};
    spec.rb_sequences = 5;
    const auto r = run_rb(analytic_lab(), spec);
    for (const auto& row : r.survival) {
        for (double v : row) {
            EXPECT_EQ(v, 1.0);
        }
    }
}

TEST(RandomizedBenchmarking, DepolarizingStrengthIsRecovered) {
    const double eps = 6e-3;
    ExperimentSpec spec;
    spec.kind = ExperimentKind::RB;
    spec.shots = 200;
    spec.rb_lengths = {1, 8, 32, 64, 128, 256, 400};
    spec.rb_sequences = 16;
    spec.jobs = 4;
    const auto r = run_rb(analytic_lab(eps), spec);
    EXPECT_TRUE(r.fit.converged);
    EXPECT_NEAR(r.fidelity_clifford, 1 - eps / 2, 3 * r.fit.sigma_p / 2);
    EXPECT_NEAR(r.fidelity_gate, 1 - eps / (2 * 1.875), 3 * r.sigma_fidelity_gate);
}

// ---- Deutsch-Jozsa ----------------------------------------------------------------

TEST(DeutschJozsa, AnalyticOutcomesAreExact) {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::DJ;
    spec.shots = 100;
    const auto r = run_dj(analytic_lab(), spec);
    ASSERT_EQ(r.outcomes.size(), 4u);
    for (const auto& o : r.outcomes) {
        EXPECT_NEAR(o.p_exact, o.constant ? 1.0 : 0.0, 1e-12) << o.oracle;
        EXPECT_EQ(o.p1_q1, o.constant ? 1.0 : 0.0) << o.oracle;
    }
}

TEST(DeutschJozsa, PhysicsBackendSeparatesTheOracles) {
    LabConfig cfg;
    const Lab lab(cfg);
    ExperimentSpec spec;
    spec.kind = ExperimentKind::DJ;
    spec.shots = 200;
    spec.jobs = 4;
    const auto r = run_dj(lab, spec);
    for (const auto& o : r.outcomes) {
        EXPECT_NEAR(o.p_exact, o.constant ? 1.0 : 0.0, 2e-3) << o.oracle;
    }
}

// ---- Physics-backed protocols ----------------------------------------------------------

TEST(Rabi, ExactProbabilitiesFollowTheExpectedFrequency) {
    const Lab lab(LabConfig{});
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Rabi;
    spec.shots = 10;
    spec.sweep = {0.0, 2e-6, 21};
    spec.amplitude = 0.25;
    const auto r = run_rabi(lab, spec, false);
    const double f = r.table.summary["fits"][0]["expected_rabi_hz"];
    EXPECT_NEAR(f, 4e6 * 0.25 * std::sin(std::numbers::pi * 0.09) / (std::numbers::pi * 0.09), 1e3);
    for (std::size_t i = 0; i < r.t.size(); ++i) {
        // 10-bit DAC words leave a few 1e-3 of amplitude error.
        EXPECT_NEAR(r.p_exact[1][i], std::pow(std::sin(std::numbers::pi * f * r.t[i]), 2), 1e-2) << i;
    }
    EXPECT_NEAR(r.rabi_hz[1], f, 0.01 * f);
}

TEST(Spectroscopy, PeakSitsAtTheQubitFrequency) {
    const Lab lab(LabConfig{});
    ExperimentSpec spec;
    spec.kind = ExperimentKind::Spectroscopy;
    spec.shots = 10;
    spec.target = 0;
    spec.sweep = {-1e6, 1e6, 21};
    spec.jobs = 4;
    const auto r = run_spectroscopy(lab, spec);
    EXPECT_DOUBLE_EQ(r.expected_hz, 13.564e9);
    EXPECT_NEAR(r.center_hz, r.expected_hz, 10e3);
}

// ---- Determinism and plumbing --------------------------------------------------------

TEST(Determinism, SameSeedSameTableRegardlessOfJobs) {
    const Lab lab = analytic_lab(2e-3, [] {
        DeviceModel m;
        m.readout = {ReadoutFidelity{0.95, 0.9}, ReadoutFidelity{0.97, 0.85}};
        return m;
    }());
    ExperimentSpec spec;
    spec.kind = ExperimentKind::RB;
    spec.shots = 50;
    spec.rb_lengths = {1, 10, 50};
    spec.rb_sequences = 6;
    spec.seed = 42;
    const auto a = run_experiment(lab, spec);
    spec.jobs = 5;
    const auto b = run_experiment(lab, spec);
    EXPECT_EQ(a.csv(), b.csv());
    EXPECT_EQ(a.summary_json(), b.summary_json());
    spec.seed = 43;
    EXPECT_NE(run_experiment(lab, spec).csv(), a.csv());
}

TEST(Plumbing, SweepValuesIncludeBothEnds) {
    const auto v = Sweep{1.0, 2.0, 5}.values();
    EXPECT_EQ(v, (std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0}));
    EXPECT_EQ(Sweep({3.0, 9.0, 1}).values(), std::vector<double>{3.0});
    EXPECT_THROW(Sweep({0.0, 1.0, 0}).values(), ConfigError);
}

TEST(Plumbing, SpecValidationListsEveryProblem) {
    ExperimentSpec spec;
    spec.shots = 0;
    spec.target = 3;
    spec.rb_lengths.clear();
    try {
        spec.validate();
        FAIL();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("shots"), std::string::npos);
        EXPECT_NE(msg.find("target"), std::string::npos);
        EXPECT_NE(msg.find("rb_lengths"), std::string::npos);
    }
}

TEST(Plumbing, ExperimentNamesRoundTrip) {
    for (auto k : {ExperimentKind::Rabi, ExperimentKind::RabiSimultaneous, ExperimentKind::Spectroscopy,
                   ExperimentKind::AllXY, ExperimentKind::QstTrajectory, ExperimentKind::RB, ExperimentKind::DJ}) {
        EXPECT_EQ(experiment_from_name(experiment_name(k)), k);
    }
    EXPECT_FALSE(experiment_from_name("ramsey"));
}

TEST(Plumbing, CsvUsesRoundTripFormatting) {
    ExperimentResult r;
    r.columns = {"a", "b"};
    r.rows = {{0.1, 1.0 / 3.0}};
    const std::string csv = r.csv();
    EXPECT_EQ(csv.substr(0, 4), "a,b\n");
    const auto comma = csv.find(',', 4);
    EXPECT_EQ(std::stod(csv.substr(4, comma - 4)), 0.1);
    EXPECT_EQ(std::stod(csv.substr(comma + 1)), 1.0 / 3.0);
}

}  // namespace
}  // namespace cryoctl
