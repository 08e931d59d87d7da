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
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "cryoctl/controller.hpp"

namespace cryoctl {

struct ReadoutFidelity {
    double f0 = 1.0;  // P(read 0 | state 0)
    double f1 = 1.0;  // P(read 1 | state 1)
};

/// Parameters of the two-spin processor. Frequencies are absolute (Hz).
struct DeviceModel {
    double f1 = 13.564e9;
    double f2 = 13.450e9;
    double j_on = 10e6;
    double j_off = 0.0;
    /// Rabi frequency (Hz) produced by a full-scale drive, per qubit.
    std::array<double, 2> drive_coupling{4e6, 4e6};
    double sigma_detune = 0.0;
    double sigma_j = 0.0;
    std::array<ReadoutFidelity, 2> readout{};
    double crot_readout_fidelity = 1.0;
    /// Probability that initialization leaves a spin excited, per qubit.
    double residual_excitation = 0.0;
    /// Rotating frame of the simulation; the LO when unset.
    std::optional<double> frame_hz;

    void validate() const;
    double frame(double lo_hz) const { return frame_hz.value_or(lo_hz); }
    double exchange(bool on) const { return on ? j_on : j_off; }
};

/// Per-shot quasi-static draws.
struct NoiseSample {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta_j = 0.0;
    std::uint64_t seed = 0;
};

/// Amplitudes over |q1 q2> = |00>, |01>, |10>, |11>. |1> is spin up.
struct QuantumState {
    Eigen::Vector4cd amps = Eigen::Vector4cd::Unit(0);

    static QuantumState ground() { return {}; }
    static QuantumState basis(int q1, int q2);
    double norm() const { return amps.norm(); }
    /// Probability of |1> on qubit 0 (Q1) or 1 (Q2).
    double p1(int qubit) const;
    std::array<double, 4> probabilities() const;
    /// Bloch vector of the reduced state of one qubit.
    std::array<double, 3> bloch(int qubit) const;
};

/// Frame-adjusted drive reduced to a codebook of distinct complex samples.
struct PreparedDrive {
    std::vector<std::complex<double>> codes;
    std::vector<std::uint32_t> index;
    double sample_rate = 1e9;

    std::size_t size() const { return index.size(); }
};

/// Converts controller output at LO `lo_hz` into the simulation frame
/// `frame_hz`: z_F(n) = z(n) exp(j 2 pi (lo - frame) t_n).
PreparedDrive prepare_drive(const BasebandWaveform& bb, double lo_hz, double frame_hz);

/// Generator in Hz for one drive value (RWA, frame-relative energies).
Eigen::Matrix4cd hamiltonian(const DeviceModel& model,
                             std::complex<double> drive,
                             double frame_hz,
                             bool exchange_on,
                             const NoiseSample& noise = {});

/// exp(-i 2 pi H dt) for a Hermitian H given in Hz.
Eigen::Matrix4cd propagator(const Eigen::Matrix4cd& h, double dt);

/// Piecewise-constant evolution, one exact propagator per sample.
QuantumState evolve(const QuantumState& state,
                    const PreparedDrive& drive,
                    const DeviceModel& model,
                    const NoiseSample& noise,
                    double frame_hz,
                    bool exchange_on);

/// Convenience overload that prepares the drive itself.
QuantumState evolve(const QuantumState& state,
                    const BasebandWaveform& bb,
                    double lo_hz,
                    const DeviceModel& model,
                    const NoiseSample& noise,
                    bool exchange_on);

/// Evolution with the drive switched off.
QuantumState evolve_free(const QuantumState& state,
                         double duration,
                         const DeviceModel& model,
                         const NoiseSample& noise,
                         double frame_hz,
                         bool exchange_on);

NoiseSample sample_noise(const DeviceModel& model, std::mt19937_64& rng);

struct ShotRecord {
    std::uint8_t q1 = 0;
    std::uint8_t q2 = 0;
};

/// Two-step readout: Q2 by the Born rule through its confusion channel, then
/// Q1 mapped onto Q2 by a CROT of fidelity crot_readout_fidelity and read the
/// same way. The register is left in |00>.
ShotRecord measure_once(const QuantumState& state, const DeviceModel& model, std::mt19937_64& rng);
/// Same, from basis-state probabilities (|00>, |01>, |10>, |11>).
ShotRecord measure_once(const std::array<double, 4>& probabilities, const DeviceModel& model, std::mt19937_64& rng);
std::vector<ShotRecord> measure(const QuantumState& state,
                                const DeviceModel& model,
                                std::size_t shots,
                                std::mt19937_64& rng);

/// Readout-chain probability of reporting 1 on each qubit.
std::array<double, 2> readout_probabilities(const QuantumState& state, const DeviceModel& model);
std::array<double, 2> readout_probabilities(const std::array<double, 4>& probabilities, const DeviceModel& model);

/// Initial register for one shot, honoring residual_excitation.
QuantumState prepare_initial(const DeviceModel& model, std::mt19937_64& rng);

}  // namespace cryoctl
