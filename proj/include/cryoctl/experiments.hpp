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
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cryoctl/compiler.hpp"
#include "cryoctl/physics.hpp"

namespace cryoctl {

// ---------------------------------------------------------------------------
// Readout error removal

/// Column-stochastic map from true to measured (P0, P1).
struct ConfusionMatrix {
    Eigen::Matrix2d m;

    static ConfusionMatrix from_fidelities(double f0, double f1);
    bool invertible() const { return std::abs(m.determinant()) > 1e-15; }
    std::array<double, 2> apply(const std::array<double, 2>& p) const;
};

struct CorrectedProbabilities {
    std::array<double, 2> p{};          // clamped to [0, 1]
    std::array<double, 2> unclamped{};  // raw F^-1 P_M
    bool clamped = false;
};

/// P = F^-1 P_M. Throws ValidationError when F0 + F1 = 1.
CorrectedProbabilities readout_correct(const std::array<double, 2>& measured, double f0, double f1);

// ---------------------------------------------------------------------------
// Backends

struct ShotBatch {
    std::vector<ShotRecord> shots;
    /// Noise-averaged P(|1>) per qubit before readout.
    std::array<double, 2> p1_exact{};
    /// Noise-averaged probability of reporting 1, readout errors included.
    std::array<double, 2> p1_reported{};

    std::array<double, 2> p1_measured() const;
};

class Backend {
public:
    virtual ~Backend() = default;
    /// Runs `shots` single shots. Results depend only on (program, shots,
    /// seed); shot s draws from substream (seed, 0, s).
    virtual ShotBatch run(const CompiledProgram& program, std::size_t shots, std::uint64_t seed) const = 0;
    virtual const DeviceModel& model() const = 0;
};

/// Controller emulation followed by Hamiltonian evolution.
class PhysicsBackend : public Backend {
public:
    PhysicsBackend(DeviceModel model, TxConfig tx);

    ShotBatch run(const CompiledProgram& program, std::size_t shots, std::uint64_t seed) const override;
    const DeviceModel& model() const override { return model_; }
    const TxConfig& tx() const { return tx_; }

    /// Final state for one noise realization, starting from `initial`.
    QuantumState final_state(const CompiledProgram& program,
                             const NoiseSample& noise = {},
                             const QuantumState& initial = QuantumState::ground()) const;

private:
    DeviceModel model_;
    TxConfig tx_;
};

/// Closed-form gate-level oracle on the 4-level density matrix. Bursts act
/// as ideal rotations (nominal angles) or, with `ideal_gates` off, with the
/// angle implied by the quantized envelope area and the drive coupling.
/// An optional depolarizing channel acts on both qubits after each layer.
class AnalyticBackend : public Backend {
public:
    struct Options {
        bool ideal_gates = true;
        double depolarizing = 0.0;
    };
    AnalyticBackend(DeviceModel model, TxConfig tx, Options options);
    explicit AnalyticBackend(DeviceModel model, TxConfig tx = {}) : AnalyticBackend(std::move(model), std::move(tx), Options{}) {}

    ShotBatch run(const CompiledProgram& program, std::size_t shots, std::uint64_t seed) const override;
    const DeviceModel& model() const override { return model_; }

    Eigen::Matrix4cd final_density(const CompiledProgram& program) const;

private:
    DeviceModel model_;
    TxConfig tx_;
    Options options_;
};

// ---------------------------------------------------------------------------
// Calibration and lab setup

/// Calibration by simulation: starts from the closed-form values, measures
/// the rotation-axis offset and the amplitude of each slot, and with
/// exchange on derives the frame corrections that undo the phases picked up
/// by the other transitions during each burst.
CalibrationSet calibrate(const DeviceModel& model, const TxConfig& tx, const FrequencyPlan& plan, double rabi_hz = 1e6);

struct LabConfig {
    DeviceModel model;
    TxConfig tx;
    double rabi_hz = 1e6;
    bool simulated_calibration = true;
};

/// Frequency plans, calibrations and a backend shared by the protocols.
class Lab {
public:
    explicit Lab(LabConfig cfg, std::shared_ptr<const Backend> backend = nullptr);

    const LabConfig& config() const { return cfg_; }
    const Backend& backend() const { return *backend_; }
    const FrequencyPlan& plan(bool exchange_on) const;
    const CalibrationSet& calibration(bool exchange_on) const;
    CompiledProgram compile(const GateIR& ir, const CompileOptions& options = {}) const;

private:
    LabConfig cfg_;
    std::shared_ptr<const Backend> backend_;
    std::array<FrequencyPlan, 2> plans_;
    mutable std::array<std::optional<CalibrationSet>, 2> cals_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Single-qubit Clifford group

struct Clifford {
    Eigen::Matrix2cd unitary;
    std::vector<GateKind> primitives;  // applied left to right
};

/// The 24 elements, each with a shortest decomposition into
/// {I, X, Y, mX, mY, X2, Y2}; element 0 is the identity.
const std::vector<Clifford>& clifford_group();
double primitives_per_clifford();
/// Index of the element equal to `u` up to global phase.
std::size_t clifford_index(const Eigen::Matrix2cd& u);
/// Ideal single-qubit unitary of a primitive in the spin-up = |1> convention.
Eigen::Matrix2cd primitive_unitary(GateKind kind);

// ---------------------------------------------------------------------------
// Fits and tomography

struct ExpFit {
    double a = 0.0;
    double b = 0.0;
    double p = 0.0;
    double sigma_a = 0.0;
    double sigma_b = 0.0;
    double sigma_p = 0.0;
    bool converged = false;
};

/// Levenberg-Marquardt fit of y = A p^x + B. `weights` are inverse
/// variances (empty for an unweighted fit); uncertainties are
/// chi2_red (J^T W J)^-1.
ExpFit fit_exponential(const std::vector<double>& x,
                       const std::vector<double>& y,
                       const std::vector<double>& weights = {});

struct SineFit {
    double amplitude = 0.0;
    double offset = 0.0;
    double rabi_hz = 0.0;
    double sigma_rabi_hz = 0.0;
};

/// Fit of y = A sin^2(pi f t) + B starting from `guess_hz`.
SineFit fit_rabi(const std::vector<double>& t, const std::vector<double>& y, double guess_hz);

/// Closest density matrix with non-negative spectrum and unit trace
/// (eigenvalue truncation with redistribution).
Eigen::Matrix2cd project_physical(const Eigen::Matrix2cd& rho);
Eigen::Matrix2cd density_from_bloch(const std::array<double, 3>& r);
std::array<double, 3> bloch_from_density(const Eigen::Matrix2cd& rho);

// ---------------------------------------------------------------------------
// Protocols

enum class ExperimentKind { Rabi, RabiSimultaneous, Spectroscopy, AllXY, QstTrajectory, RB, DJ };

const char* experiment_name(ExperimentKind kind);
std::optional<ExperimentKind> experiment_from_name(const std::string& name);

struct Sweep {
    double start = 0.0;
    double stop = 0.0;
    std::size_t points = 1;

    std::vector<double> values() const;
};

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::Rabi;
    Sweep sweep;
    std::size_t shots = 1000;
    std::uint64_t seed = 1;
    unsigned jobs = 1;
    int target = 1;  // 0 = Q1, 1 = Q2
    EnvelopeShape shape = EnvelopeShape::Rectangular;
    bool exchange_on = false;
    int control_state = 0;
    std::optional<double> amplitude;
    std::vector<std::size_t> rb_lengths{2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    std::size_t rb_sequences = 32;

    void validate() const;
};

/// Table plus summary, serialized deterministically.
struct ExperimentResult {
    std::string kind;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    nlohmann::ordered_json summary;

    std::string csv() const;
    std::string summary_json() const;
};

struct SpectroscopyResult {
    std::vector<double> freq_hz;
    std::vector<double> p1;
    std::vector<double> p_exact;
    double expected_hz = 0.0;
    double center_hz = 0.0;  // parabolic peak estimate from p_exact
    ExperimentResult table;
};

struct RabiResult {
    std::vector<double> t;
    std::array<std::vector<double>, 2> p1;
    std::array<std::vector<double>, 2> p_exact;
    std::array<double, 2> rabi_hz{};
    ExperimentResult table;
};

struct AllXYResult {
    std::array<std::pair<GateKind, GateKind>, 21> pairs{};
    std::array<double, 21> sigma_z{};
    std::array<double, 21> stderr_z{};
    std::array<double, 21> ideal{};
    ExperimentResult table;
};

struct TomoPoint {
    double t = 0.0;
    std::array<double, 4> p0{};  // corrected P(0) after I, Y, X, X2
    std::array<double, 3> bloch_linear{};
    std::array<double, 3> bloch{};  // after projection
    std::array<double, 2> eigenvalues{};  // ascending
};

struct TomoResult {
    std::vector<TomoPoint> points;
    ExperimentResult table;
};

struct RbResult {
    std::vector<std::size_t> lengths;
    std::vector<std::vector<double>> survival;  // [length][sequence]
    std::vector<double> mean_survival;
    ExpFit fit;
    double fidelity_clifford = 0.0;
    double fidelity_gate = 0.0;
    double sigma_fidelity_gate = 0.0;
    std::size_t max_triggers = 1;
    ExperimentResult table;
};

struct DjOutcome {
    std::string oracle;
    bool constant = false;
    double p1_q1 = 0.0;
    double p1_q2 = 0.0;
    double stderr = 0.0;
    double p_exact = 0.0;
};

struct DjResult {
    std::vector<DjOutcome> outcomes;
    ExperimentResult table;
};

/// The 21 AllXY pairs in the usual order.
std::array<std::pair<GateKind, GateKind>, 21> allxy_pairs();
/// Ideal <sigma_z> of a gate pair acting on |0>.
double allxy_ideal(GateKind first, GateKind second);

SpectroscopyResult run_spectroscopy(const Lab& lab, const ExperimentSpec& spec);
RabiResult run_rabi(const Lab& lab, const ExperimentSpec& spec, bool simultaneous);
AllXYResult run_allxy(const Lab& lab, const ExperimentSpec& spec);
TomoResult run_qst_trajectory(const Lab& lab, const ExperimentSpec& spec);
RbResult run_rb(const Lab& lab, const ExperimentSpec& spec);
DjResult run_dj(const Lab& lab, const ExperimentSpec& spec);

ExperimentResult run_experiment(const Lab& lab, const ExperimentSpec& spec);

}  // namespace cryoctl
