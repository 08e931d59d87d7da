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

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cryoctl/controller.hpp"

namespace cryoctl {

enum class Window { Rectangular, Hann, BlackmanHarris };

const char* window_name(Window w);
std::optional<Window> window_from_name(const std::string& name);

/// Reported in place of an infinite ratio when a power is exactly zero.
inline constexpr double kFloorDb = 300.0;

/// Power spectrum of a complex envelope, bins ordered by ascending
/// frequency. Bin powers are normalized so that a tone of amplitude a sums
/// to a^2 over its main lobe and, with the rectangular window, all bins sum
/// to the mean time-domain power.
struct Spectrum {
    std::vector<double> freq_hz;  // absolute, center_hz + offset
    std::vector<double> power;
    double center_hz = 0.0;
    double sample_rate = 0.0;
    double rbw_hz = 0.0;
    Window window = Window::Rectangular;
    std::size_t tone_bin = 0;
    double tone_power = 0.0;

    std::size_t size() const { return power.size(); }
    /// Bins on each side of a tone peak that belong to its main lobe.
    std::size_t lobe_halfwidth() const;
    double dbc(std::size_t bin) const;
    std::vector<double> dbc() const;
    std::size_t bin_of(double freq_hz) const;
    /// Sum over the main lobe centered on the local peak near `bin`.
    double lobe_power(std::size_t bin) const;
    double total_power() const;
};

/// `fft_len` = 0 uses the whole signal; otherwise the first `fft_len`
/// samples are analyzed. Throws ValidationError on an empty signal or a
/// length longer than the signal.
Spectrum compute_spectrum(const std::vector<std::complex<double>>& signal,
                          double sample_rate,
                          double center_hz,
                          Window window = Window::Rectangular,
                          std::size_t fft_len = 0);

Spectrum compute_spectrum(const RfSignal& rf, Window window = Window::Rectangular, std::size_t fft_len = 0);

struct Interval {
    double lo_hz;
    double hi_hz;
};

/// Default exclusion: +/- 2 resolution bandwidths around the LO.
std::vector<Interval> default_exclusions(const Spectrum& s, double lo_hz);

/// Carrier power over the largest spur outside the carrier lobe and the
/// exclusions, optionally limited to a band centered on the carrier.
double sfdr(const Spectrum& s, const std::vector<Interval>& exclusions, std::optional<double> bandwidth_hz = {});

/// Tone power over noise integrated across `integration_bw` centered on the
/// tone. Bins 20 dB above the band median count as spurs and are replaced
/// by the average noise density.
double snr(const Spectrum& s, double integration_bw_hz, std::optional<std::size_t> signal_bin = {});

/// Like snr() but every bin outside the tone lobe counts as noise, spurs and
/// harmonics included (signal to noise and distortion).
double sinad(const Spectrum& s, double integration_bw_hz, std::optional<std::size_t> signal_bin = {});

/// Carrier over LO leakage.
double lo_rejection(const Spectrum& s, double lo_hz);

/// Span between the outermost bins at or above `level_dbc`, contiguous with
/// the tone.
double bandwidth_at(const Spectrum& s, double level_dbc);

struct IntermodProduct {
    int m = 0;
    int n = 0;
    double freq_hz = 0.0;
    double dbc = -kFloorDb;
};

struct TwoToneReport {
    double tone_a_dbfs = 0.0;
    double tone_b_dbfs = 0.0;
    double freq_a_hz = 0.0;
    double freq_b_hz = 0.0;
    std::vector<IntermodProduct> products;  // relative to the weaker tone
    IntermodProduct largest;
    double imd3_dbc = -kFloorDb;
};

/// Tones are given as absolute frequencies. Throws ValidationError when the
/// two tones fall within one main lobe of each other.
TwoToneReport two_tone_report(const Spectrum& s, double freq_a_hz, double freq_b_hz);

struct MetricsReport {
    double tone_hz = 0.0;
    double snr_db = 0.0;
    double sfdr_db = 0.0;
    double lor_db = 0.0;
    std::optional<double> imd3_dbc;
    double snr_bandwidth_hz = 25e6;
    double rbw_hz = 0.0;
    Window window = Window::Rectangular;

    std::string to_json() const;
};

MetricsReport analyze(const Spectrum& s, double lo_hz, double snr_bandwidth_hz = 25e6);

std::string spectrum_csv(const Spectrum& s);

}  // namespace cryoctl
