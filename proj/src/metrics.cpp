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

#include "cryoctl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <sstream>

#include <fftw3.h>
#include <json.hpp>

#include "cryoctl/error.hpp"
#include "cryoctl/io.hpp"
#include "cryoctl/numeric.hpp"

namespace cryoctl {

const char* window_name(Window w) {
    switch (w) {
        case Window::Hann:
            return "hann";
        case Window::BlackmanHarris:
            return "blackman-harris";
        default:
            return "rectangular";
    }
}

std::optional<Window> window_from_name(const std::string& name) {
    if (name == "rectangular" || name == "rect") {
        return Window::Rectangular;
    }
    if (name == "hann") {
        return Window::Hann;
    }
    if (name == "blackman-harris" || name == "bh") {
        return Window::BlackmanHarris;
    }
    return std::nullopt;
}

namespace {

// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<double> window_weights(Window w, std::size_t n) {
    std::vector<double> out(n, 1.0);
    const double N = static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double x = kTwoPi * static_cast<double>(k) / N;
        switch (w) {
            case Window::Hann:
                out[k] = 0.5 - 0.5 * std::cos(x);
                break;
            case Window::BlackmanHarris:
                out[k] = 0.35875 - 0.48829 * std::cos(x) + 0.14128 * std::cos(2 * x) - 0.01168 * std::cos(3 * x);
                break;
            default:
                break;
        }
    }
    return out;
}

double to_db(double ratio) {
    if (!(ratio > 0.0)) {
        return -kFloorDb;
    }
    return std::max(-kFloorDb, std::min(kFloorDb, 10.0 * std::log10(ratio)));
}

double ratio_db(double num, double den) {
    if (den <= 0.0) {
        return kFloorDb;
    }
    return to_db(num / den);
}

}  // namespace

std::size_t Spectrum::lobe_halfwidth() const {
    switch (window) {
        case Window::Hann:
            return 2;
        case Window::BlackmanHarris:
            return 4;
        default:
            return 1;
    }
}

double Spectrum::dbc(std::size_t bin) const {
    return to_db(power[bin] / tone_power);
}

std::vector<double> Spectrum::dbc() const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < size(); ++k) {
        out[k] = dbc(k);
    }
    return out;
}

std::size_t Spectrum::bin_of(double f) const {
    const double offset = f - center_hz;
    const auto n = static_cast<std::int64_t>(size());
    std::int64_t k = round_half_away(offset / rbw_hz) + n / 2;
    return static_cast<std::size_t>(std::clamp<std::int64_t>(k, 0, n - 1));
}

double Spectrum::lobe_power(std::size_t bin) const {
    const std::size_t h = lobe_halfwidth();
    // Snap to the local maximum within the lobe.
    std::size_t peak = bin;
    for (std::size_t k = bin > h ? bin - h : 0; k <= std::min(size() - 1, bin + h); ++k) {
        if (power[k] > power[peak]) {
            peak = k;
        }
    }
    double sum = 0.0;
    for (std::size_t k = peak > h ? peak - h : 0; k <= std::min(size() - 1, peak + h); ++k) {
        sum += power[k];
    }
    return sum;
}

double Spectrum::total_power() const {
    double sum = 0.0;
    for (double p : power) {
        sum += p;
    }
    return sum;
}

Spectrum compute_spectrum(const std::vector<std::complex<double>>& signal,
                          double sample_rate,
                          double center_hz,
                          Window window,
                          std::size_t fft_len) {
    if (signal.empty()) {
        throw ValidationError("cannot compute the spectrum of an empty waveform");
    }
    const std::size_t n = fft_len == 0 ? signal.size() : fft_len;
    if (n > signal.size()) {
        throw ValidationError("FFT length " + std::to_string(n) + " exceeds waveform length " +
                              std::to_string(signal.size()));
    }
    if (!(sample_rate > 0.0)) {
        throw ValidationError("sample rate must be positive");
    }
    const auto w = window_weights(window, n);
    double w2 = 0.0;
    for (double v : w) {
        w2 += v * v;
    }

    fftw_complex* buf = fftw_alloc_complex(n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < n; ++k) {
        buf[k][0] = signal[k].real() * w[k];
        buf[k][1] = signal[k].imag() * w[k];
    }
    fftw_execute(plan);

    Spectrum s;
    s.center_hz = center_hz;
    s.sample_rate = sample_rate;
    s.rbw_hz = sample_rate / static_cast<double>(n);
    s.window = window;
    s.power.resize(n);
    s.freq_hz.resize(n);
    const double norm = 1.0 / (static_cast<double>(n) * w2);
    const std::size_t half = n / 2;
    for (std::size_t k = 0; k < n; ++k) {
        // Output bin k holds offset (k - n/2) after the shift.
        const std::size_t src = (k + n - half) % n;
        s.power[k] = (buf[src][0] * buf[src][0] + buf[src][1] * buf[src][1]) * norm;
        s.freq_hz[k] = center_hz + (static_cast<double>(k) - static_cast<double>(half)) * s.rbw_hz;
    }
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(buf);

    s.tone_bin = static_cast<std::size_t>(std::max_element(s.power.begin(), s.power.end()) - s.power.begin());
    s.tone_power = s.lobe_power(s.tone_bin);
    if (!(s.tone_power > 0.0)) {
        s.tone_power = 1.0;  // all-zero input; dBc then reads the floor
    }
    return s;
}

Spectrum compute_spectrum(const RfSignal& rf, Window window, std::size_t fft_len) {
    return compute_spectrum(rf.envelope, rf.sample_rate, rf.carrier_hz, window, fft_len);
}

std::vector<Interval> default_exclusions(const Spectrum& s, double lo_hz) {
    return {Interval{lo_hz - 2.0 * s.rbw_hz, lo_hz + 2.0 * s.rbw_hz}};
}

namespace {

bool excluded(const Spectrum& s, std::size_t k, const std::vector<Interval>& exclusions) {
    for (const auto& e : exclusions) {
        if (s.freq_hz[k] >= e.lo_hz && s.freq_hz[k] <= e.hi_hz) {
            return true;
        }
    }
    return false;
}

bool in_tone_lobe(const Spectrum& s, std::size_t k) {
    const std::size_t h = s.lobe_halfwidth();
    return k + h >= s.tone_bin && k <= s.tone_bin + h;
}

}  // namespace

double sfdr(const Spectrum& s, const std::vector<Interval>& exclusions, std::optional<double> bandwidth_hz) {
    const double tone_f = s.freq_hz[s.tone_bin];
    std::vector<bool> eligible(s.size(), false);
    bool any = false;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (in_tone_lobe(s, k) || excluded(s, k, exclusions)) {
            continue;
        }
        if (bandwidth_hz && std::abs(s.freq_hz[k] - tone_f) > *bandwidth_hz / 2.0) {
            continue;
        }
        eligible[k] = true;
        any = true;
    }
    if (!any) {
        throw ValidationError("SFDR exclusions cover the whole analysis band");
    }
    std::size_t worst = s.size();
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (eligible[k] && (worst == s.size() || s.power[k] > s.power[worst])) {
            worst = k;
        }
    }
    const std::size_t h = s.lobe_halfwidth();
    double spur = 0.0;
    for (std::size_t k = worst > h ? worst - h : 0; k <= std::min(s.size() - 1, worst + h); ++k) {
        if (eligible[k]) {
            spur += s.power[k];
        }
    }
    return ratio_db(s.tone_power, spur);
}

namespace {

// Offsets of the integration band around the tone. The sampled spectrum is
// periodic, so a band that reaches past either edge wraps around, and a
// band as wide as the sample rate covers every bin exactly once.
std::pair<std::int64_t, std::int64_t> band_offsets(std::size_t n, std::int64_t half_bins) {
    const auto nn = static_cast<std::int64_t>(n);
    if (2 * half_bins + 1 > nn) {
        return {-(nn / 2), nn - 1 - nn / 2};
    }
    return {-half_bins, half_bins};
}

std::size_t wrap_bin(std::size_t n, std::size_t tone, std::int64_t d) {
    const auto nn = static_cast<std::int64_t>(n);
    return static_cast<std::size_t>(((static_cast<std::int64_t>(tone) + d) % nn + nn) % nn);
}

}  // namespace

double snr(const Spectrum& s, double integration_bw_hz, std::optional<std::size_t> signal_bin) {
    if (integration_bw_hz < s.rbw_hz * (1.0 - 1e-9)) {
        throw ValidationError("integration bandwidth is narrower than the resolution bandwidth");
    }
    if (integration_bw_hz > s.sample_rate * (1.0 + 1e-9)) {
        throw ValidationError("integration bandwidth exceeds the Nyquist band");
    }
    const std::size_t tone = signal_bin.value_or(s.tone_bin);
    const double tone_power = s.lobe_power(tone);
    const std::size_t h = s.lobe_halfwidth();
    const auto half_bins = static_cast<std::int64_t>(std::floor(integration_bw_hz / s.rbw_hz / 2.0 + 1e-9));

    std::vector<double> band;
    std::size_t band_bins = 0;
    const auto [d_lo, d_hi] = band_offsets(s.size(), half_bins);
    for (std::int64_t d = d_lo; d <= d_hi; ++d) {
        ++band_bins;
        if (std::abs(d) <= static_cast<std::int64_t>(h)) {
            continue;
        }
        band.push_back(s.power[wrap_bin(s.size(), tone, d)]);
    }
    if (band.empty()) {
        return kFloorDb;
    }
    std::vector<double> sorted = band;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double spur_threshold = median * 100.0;  // 20 dB

    double noise = 0.0;
    std::size_t kept = 0;
    for (double p : band) {
        if (median > 0.0 && p > spur_threshold) {
            continue;
        }
        noise += p;
        ++kept;
    }
    if (kept == 0 || noise <= 0.0) {
        return kFloorDb;
    }
    // Bins under the tone lobe and spur bins still carry noise; credit them
    // with the mean density of the kept bins.
    noise *= static_cast<double>(band_bins) / static_cast<double>(kept);
    return ratio_db(tone_power, noise);
}

double sinad(const Spectrum& s, double integration_bw_hz, std::optional<std::size_t> signal_bin) {
    if (integration_bw_hz < s.rbw_hz * (1.0 - 1e-9) || integration_bw_hz > s.sample_rate * (1.0 + 1e-9)) {
        throw ValidationError("integration bandwidth must lie between the resolution bandwidth and the Nyquist band");
    }
    const std::size_t tone = signal_bin.value_or(s.tone_bin);
    const auto h = static_cast<std::int64_t>(s.lobe_halfwidth());
    const auto half_bins = static_cast<std::int64_t>(std::floor(integration_bw_hz / s.rbw_hz / 2.0 + 1e-9));
    double noise = 0.0;
    std::size_t band_bins = 0;
    std::size_t kept = 0;
    const auto [d_lo, d_hi] = band_offsets(s.size(), half_bins);
    for (std::int64_t d = d_lo; d <= d_hi; ++d) {
        ++band_bins;
        if (std::abs(d) > h) {
            noise += s.power[wrap_bin(s.size(), tone, d)];
            ++kept;
        }
    }
    if (kept == 0 || noise <= 0.0) {
        return kFloorDb;
    }
    noise *= static_cast<double>(band_bins) / static_cast<double>(kept);
    return ratio_db(s.lobe_power(tone), noise);
}

double lo_rejection(const Spectrum& s, double lo_hz) {
    return ratio_db(s.tone_power, s.lobe_power(s.bin_of(lo_hz)));
}

double bandwidth_at(const Spectrum& s, double level_dbc) {
    const double threshold = s.tone_power * std::pow(10.0, level_dbc / 10.0);
    std::size_t lo = s.tone_bin;
    std::size_t hi = s.tone_bin;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.power[k] >= threshold) {
            lo = std::min(lo, k);
            hi = std::max(hi, k);
        }
    }
    return static_cast<double>(hi - lo + 1) * s.rbw_hz;
}

TwoToneReport two_tone_report(const Spectrum& s, double freq_a_hz, double freq_b_hz) {
    const std::size_t a = s.bin_of(freq_a_hz);
    const std::size_t b = s.bin_of(freq_b_hz);
    const std::size_t h = s.lobe_halfwidth();
    if ((a > b ? a - b : b - a) <= 2 * h) {
        throw ValidationError("tones are not resolvable at this FFT length");
    }
    TwoToneReport r;
    r.freq_a_hz = freq_a_hz;
    r.freq_b_hz = freq_b_hz;
    const double pa = s.lobe_power(a);
    const double pb = s.lobe_power(b);
    r.tone_a_dbfs = to_db(pa);
    r.tone_b_dbfs = to_db(pb);
    const double weaker = std::min(pa, pb);

    const double da = freq_a_hz - s.center_hz;
    const double db = freq_b_hz - s.center_hz;
    r.largest.dbc = -kFloorDb;
    for (int m = -3; m <= 3; ++m) {
        for (int n = -3; n <= 3; ++n) {
            const int order = std::abs(m) + std::abs(n);
            if (order < 2 || order > 3) {
                continue;
            }
            double off = m * da + n * db;
            // Fold into the analyzed band.
            off = std::remainder(off, s.sample_rate);
            const std::size_t k = s.bin_of(s.center_hz + off);
            const auto near = [&](std::size_t t) { return (k > t ? k - t : t - k) <= h; };
            if (near(a) || near(b)) {
                continue;
            }
            IntermodProduct p{m, n, s.center_hz + off, weaker > 0.0 ? to_db(s.lobe_power(k) / weaker) : -kFloorDb};
            r.products.push_back(p);
            if (p.dbc > r.largest.dbc) {
                r.largest = p;
            }
            if (order == 3 && m + n == 1) {
                r.imd3_dbc = std::max(r.imd3_dbc, p.dbc);
            }
        }
    }
    return r;
}

MetricsReport analyze(const Spectrum& s, double lo_hz, double snr_bandwidth_hz) {
    MetricsReport m;
    m.tone_hz = s.freq_hz[s.tone_bin];
    m.rbw_hz = s.rbw_hz;
    m.window = s.window;
    m.snr_bandwidth_hz = std::min(snr_bandwidth_hz, s.sample_rate);
    m.snr_db = snr(s, m.snr_bandwidth_hz);
    m.sfdr_db = sfdr(s, default_exclusions(s, lo_hz));
    m.lor_db = lo_rejection(s, lo_hz);
    return m;
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = "cryoctl.metrics/1";
    j["tone_hz"] = tone_hz;
    j["snr_db"] = snr_db;
    j["snr_bandwidth_hz"] = snr_bandwidth_hz;
    j["sfdr_db"] = sfdr_db;
    j["lor_db"] = lor_db;
    j["imd3_dbc"] = imd3_dbc ? nlohmann::ordered_json(*imd3_dbc) : nlohmann::ordered_json(nullptr);
    j["rbw_hz"] = rbw_hz;
    j["window"] = window_name(window);
    return j.dump(2) + "\n";
}

std::string spectrum_csv(const Spectrum& s) {
    std::string out = "freq_hz,dbc\n";
    out.reserve(s.size() * 32);
    for (std::size_t k = 0; k < s.size(); ++k) {
        out += format_double(s.freq_hz[k]);
        out += ',';
        out += format_double(s.dbc(k));
        out += '\n';
    }
    return out;
}

}  // namespace cryoctl
