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

#include "cryoctl/config.hpp"

#include <set>
#include <vector>

#include "cryoctl/error.hpp"
#include "cryoctl/io.hpp"

namespace cryoctl {

namespace {

using json = nlohmann::ordered_json;

// Walks a JSON document, recording every problem instead of stopping at the
// first one.
class Reader {
public:
    std::vector<std::string> problems;

    void fail(const std::string& path, const std::string& what) { problems.push_back(path + ": " + what); }

    const json* section(const json& root, const std::string& key) {
        if (!root.contains(key)) {
            return nullptr;
        }
        const json& s = root.at(key);
        if (!s.is_object()) {
            fail(key, "must be an object");
            return nullptr;
        }
        return &s;
    }

    void known(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : obj.items()) {
            if (!allowed.count(k)) {
                fail(path.empty() ? k : path + "." + k, "unknown key");
            }
        }
    }

    void number(const json& obj, const std::string& path, const char* key, double& out) {
        if (!obj.contains(key)) {
            return;
        }
        const json& v = obj.at(key);
        if (!v.is_number()) {
            fail(path + "." + key, "must be a number");
            return;
        }
        out = v.get<double>();
    }

    void optional_number(const json& obj, const std::string& path, const char* key, std::optional<double>& out) {
        if (!obj.contains(key) || obj.at(key).is_null()) {
            return;
        }
        double v = 0.0;
        number(obj, path, key, v);
        out = v;
    }

    template <class Int>
    void integer(const json& obj, const std::string& path, const char* key, Int& out) {
        if (!obj.contains(key)) {
            return;
        }
        const json& v = obj.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
            fail(path + "." + key, "must be a non-negative integer");
            return;
        }
        out = static_cast<Int>(v.get<std::uint64_t>());
    }

    void boolean(const json& obj, const std::string& path, const char* key, bool& out) {
        if (!obj.contains(key)) {
            return;
        }
        if (!obj.at(key).is_boolean()) {
            fail(path + "." + key, "must be true or false");
            return;
        }
        out = obj.at(key).get<bool>();
    }

    std::optional<std::string> string(const json& obj, const std::string& path, const char* key) {
        if (!obj.contains(key)) {
            return std::nullopt;
        }
        if (!obj.at(key).is_string()) {
            fail(path + "." + key, "must be a string");
            return std::nullopt;
        }
        return obj.at(key).get<std::string>();
    }

    void range(const std::string& path, bool ok, const std::string& what) {
        if (!ok) {
            fail(path, what);
        }
    }
};

void read_device(Reader& r, const json& d, DeviceModel& m) {
    r.known(d, "device", {"f1_hz", "f2_hz", "j_on_hz", "j_off_hz", "drive_coupling_hz", "sigma_detune_hz", "sigma_j_hz",
                          "readout", "crot_readout_fidelity", "residual_excitation", "frame_hz"});
    r.number(d, "device", "f1_hz", m.f1);
    r.number(d, "device", "f2_hz", m.f2);
    r.number(d, "device", "j_on_hz", m.j_on);
    r.number(d, "device", "j_off_hz", m.j_off);
    if (d.contains("drive_coupling_hz")) {
        const json& c = d.at("drive_coupling_hz");
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
            r.fail("device.drive_coupling_hz", "must be an array of two numbers");
        } else {
            m.drive_coupling = {c[0].get<double>(), c[1].get<double>()};
        }
    }
    r.number(d, "device", "sigma_detune_hz", m.sigma_detune);
    r.number(d, "device", "sigma_j_hz", m.sigma_j);
    if (d.contains("readout")) {
        const json& ro = d.at("readout");
        if (!ro.is_array() || ro.size() != 2) {
            r.fail("device.readout", "must be an array of two {f0, f1} objects");
        } else {
            for (std::size_t q = 0; q < 2; ++q) {
                const std::string path = "device.readout[" + std::to_string(q) + "]";
                if (!ro[q].is_object()) {
                    r.fail(path, "must be an object");
                    continue;
                }
                r.known(ro[q], path, {"f0", "f1"});
                r.number(ro[q], path, "f0", m.readout[q].f0);
                r.number(ro[q], path, "f1", m.readout[q].f1);
            }
        }
    }
    r.number(d, "device", "crot_readout_fidelity", m.crot_readout_fidelity);
    r.number(d, "device", "residual_excitation", m.residual_excitation);
    std::optional<double> frame;
    r.optional_number(d, "device", "frame_hz", frame);
    if (frame) {
        m.frame_hz = frame;
    }
}

void read_tx(Reader& r, const json& t, TxConfig& tx) {
    r.known(t, "tx", {"f_clk_hz", "lo_hz", "dac_bits", "amp_bits", "phase_mod_bits", "pac_addr_bits", "gain_db", "rf_high"});
    r.number(t, "tx", "f_clk_hz", tx.f_clk);
    r.number(t, "tx", "lo_hz", tx.lo_freq);
    r.integer(t, "tx", "dac_bits", tx.dac_bits);
    r.integer(t, "tx", "amp_bits", tx.amp_bits);
    r.integer(t, "tx", "phase_mod_bits", tx.phase_mod_bits);
    r.integer(t, "tx", "pac_addr_bits", tx.pac_addr_bits);
    r.number(t, "tx", "gain_db", tx.gain_db);
    r.boolean(t, "tx", "rf_high", tx.rf_high);
}

void read_impairments(Reader& r, const json& s, Impairments& imp) {
    r.known(s, "impairments", {"lo_leakage_dbc", "iq_gain_mismatch", "iq_phase_error_rad", "spurs"});
    r.optional_number(s, "impairments", "lo_leakage_dbc", imp.lo_leakage_dbc);
    r.number(s, "impairments", "iq_gain_mismatch", imp.iq_gain_mismatch);
    r.number(s, "impairments", "iq_phase_error_rad", imp.iq_phase_error);
    if (s.contains("spurs")) {
        const json& spurs = s.at("spurs");
        if (!spurs.is_array()) {
            r.fail("impairments.spurs", "must be an array");
            return;
        }
        for (std::size_t i = 0; i < spurs.size(); ++i) {
            const std::string path = "impairments.spurs[" + std::to_string(i) + "]";
            if (!spurs[i].is_object()) {
                r.fail(path, "must be an object");
                continue;
            }
            r.known(spurs[i], path, {"offset_hz", "level_dbc"});
            SpurInjection sp;
            r.number(spurs[i], path, "offset_hz", sp.offset_hz);
            r.number(spurs[i], path, "level_dbc", sp.level_dbc);
            imp.spurs.push_back(sp);
        }
    }
}

void read_experiment(Reader& r, const json& e, ExperimentSpec& spec) {
    r.known(e, "experiment", {"kind", "sweep", "shots", "seed", "jobs", "target", "shape", "exchange_on", "control_state",
                              "amplitude", "rb_lengths", "rb_sequences"});
    if (auto kind = r.string(e, "experiment", "kind")) {
        if (auto k = experiment_from_name(*kind)) {
            spec.kind = *k;
        } else {
            r.fail("experiment.kind",
                   "unknown kind '" + *kind + "' (rabi, rabi_simultaneous, spectroscopy, allxy, qst_trajectory, rb, dj)");
        }
    } else if (!e.contains("kind")) {
        r.fail("experiment.kind", "is required");
    }
    if (e.contains("sweep")) {
        const json& s = e.at("sweep");
        if (!s.is_object()) {
            r.fail("experiment.sweep", "must be an object");
        } else {
            r.known(s, "experiment.sweep", {"start", "stop", "points"});
            r.number(s, "experiment.sweep", "start", spec.sweep.start);
            r.number(s, "experiment.sweep", "stop", spec.sweep.stop);
            r.integer(s, "experiment.sweep", "points", spec.sweep.points);
        }
    }
    r.integer(e, "experiment", "shots", spec.shots);
    r.integer(e, "experiment", "seed", spec.seed);
    r.integer(e, "experiment", "jobs", spec.jobs);
    if (auto t = r.string(e, "experiment", "target")) {
        if (*t == "q1") {
            spec.target = 0;
        } else if (*t == "q2") {
            spec.target = 1;
        } else {
            r.fail("experiment.target", "must be \"q1\" or \"q2\"");
        }
    }
    if (auto s = r.string(e, "experiment", "shape")) {
        if (*s == "rectangular" || *s == "rect") {
            spec.shape = EnvelopeShape::Rectangular;
        } else if (*s == "gaussian") {
            spec.shape = EnvelopeShape::Gaussian;
        } else {
            r.fail("experiment.shape", "must be \"rectangular\" or \"gaussian\"");
        }
    }
    r.boolean(e, "experiment", "exchange_on", spec.exchange_on);
    r.integer(e, "experiment", "control_state", spec.control_state);
    r.optional_number(e, "experiment", "amplitude", spec.amplitude);
    if (e.contains("rb_lengths")) {
        const json& l = e.at("rb_lengths");
        bool ok = l.is_array();
        std::vector<std::size_t> lengths;
        if (ok) {
            for (const auto& v : l) {
                if (!v.is_number_unsigned()) {
                    ok = false;
                    break;
                }
                lengths.push_back(v.get<std::size_t>());
            }
        }
        if (ok) {
            spec.rb_lengths = lengths;
        } else {
            r.fail("experiment.rb_lengths", "must be an array of non-negative integers");
        }
    }
    r.integer(e, "experiment", "rb_sequences", spec.rb_sequences);
}

// Converts a thrown multi-line validation message into individual problems.
template <class Fn>
void collect(Reader& r, const std::string& prefix, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        std::string msg = e.what();
        const auto first = msg.find('\n');
        if (first == std::string::npos) {
            r.fail(prefix, msg);
            return;
        }
        std::size_t pos = first + 1;
        while (pos < msg.size()) {
            auto end = msg.find('\n', pos);
            if (end == std::string::npos) {
                end = msg.size();
            }
            std::string line = msg.substr(pos, end - pos);
            const auto dash = line.find("- ");
            r.fail(prefix, dash == std::string::npos ? line : line.substr(dash + 2));
            pos = end + 1;
        }
    }
}

}  // namespace

Config parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    // A run manifest carries the configuration it was produced with.
    if (auto it = root.find("schema"); it != root.end() && it->is_string() && *it == kManifestSchema) {
        if (!root.contains("config") || !root["config"].is_object()) {
            throw ConfigError("manifest has no 'config' object");
        }
        root = json(root["config"]);
    }
    Reader r;
    Config cfg;
    r.known(root, "", {"schema", "device", "tx", "impairments", "calibration", "backend", "analysis", "experiment"});
    if (auto schema = r.string(root, "", "schema"); schema && *schema != kConfigSchema) {
        r.fail("schema", "unsupported '" + *schema + "' (expected " + kConfigSchema + ")");
    }
    if (const json* d = r.section(root, "device")) {
        read_device(r, *d, cfg.device);
    }
    if (const json* t = r.section(root, "tx")) {
        read_tx(r, *t, cfg.tx);
    }
    if (const json* i = r.section(root, "impairments")) {
        read_impairments(r, *i, cfg.tx.impairments);
    }
    if (const json* c = r.section(root, "calibration")) {
        r.known(*c, "calibration", {"rabi_hz", "method"});
        r.number(*c, "calibration", "rabi_hz", cfg.rabi_hz);
        r.range("calibration.rabi_hz", cfg.rabi_hz > 0.0, "must be positive");
        if (auto m = r.string(*c, "calibration", "method")) {
            if (*m == "simulated") {
                cfg.simulated_calibration = true;
            } else if (*m == "nominal") {
                cfg.simulated_calibration = false;
            } else {
                r.fail("calibration.method", "must be \"simulated\" or \"nominal\"");
            }
        }
    }
    if (const json* b = r.section(root, "backend")) {
        r.known(*b, "backend", {"kind", "ideal_gates", "depolarizing"});
        if (auto k = r.string(*b, "backend", "kind")) {
            if (*k == "physics") {
                cfg.backend.kind = BackendConfig::Kind::Physics;
            } else if (*k == "analytic") {
                cfg.backend.kind = BackendConfig::Kind::Analytic;
            } else {
                r.fail("backend.kind", "must be \"physics\" or \"analytic\"");
            }
        }
        r.boolean(*b, "backend", "ideal_gates", cfg.backend.ideal_gates);
        r.number(*b, "backend", "depolarizing", cfg.backend.depolarizing);
        r.range("backend.depolarizing", cfg.backend.depolarizing >= 0.0 && cfg.backend.depolarizing <= 1.0,
                "must lie in [0, 1]");
    }
    if (const json* a = r.section(root, "analysis")) {
        r.known(*a, "analysis", {"window", "snr_bandwidth_hz", "fft_len"});
        if (auto w = r.string(*a, "analysis", "window")) {
            if (auto win = window_from_name(*w)) {
                cfg.analysis.window = *win;
            } else {
                r.fail("analysis.window", "must be \"rectangular\", \"hann\" or \"blackman-harris\"");
            }
        }
        r.number(*a, "analysis", "snr_bandwidth_hz", cfg.analysis.snr_bandwidth_hz);
        r.range("analysis.snr_bandwidth_hz", cfg.analysis.snr_bandwidth_hz > 0.0, "must be positive");
        r.integer(*a, "analysis", "fft_len", cfg.analysis.fft_len);
    }
    if (const json* e = r.section(root, "experiment")) {
        ExperimentSpec spec;
        read_experiment(r, *e, spec);
        collect(r, "experiment", [&] { spec.validate(); });
        cfg.experiment = spec;
    }
    collect(r, "device", [&] { cfg.device.validate(); });
    collect(r, "tx", [&] { cfg.tx.validate(); });

    if (!r.problems.empty()) {
        std::string msg = "invalid config (" + std::to_string(r.problems.size()) + " problem" +
                          (r.problems.size() == 1 ? "" : "s") + "):";
        for (const auto& p : r.problems) {
            msg += "\n  - " + p;
        }
        throw ConfigError(msg);
    }
    return cfg;
}

Config load_config(const std::string& path) {
    return parse_config(read_file(path));
}

nlohmann::ordered_json Config::to_json() const {
    json j;
    j["schema"] = kConfigSchema;
    json d;
    d["f1_hz"] = device.f1;
    d["f2_hz"] = device.f2;
    d["j_on_hz"] = device.j_on;
    d["j_off_hz"] = device.j_off;
    d["drive_coupling_hz"] = device.drive_coupling;
    d["sigma_detune_hz"] = device.sigma_detune;
    d["sigma_j_hz"] = device.sigma_j;
    d["readout"] = json::array({{{"f0", device.readout[0].f0}, {"f1", device.readout[0].f1}},
                                {{"f0", device.readout[1].f0}, {"f1", device.readout[1].f1}}});
    d["crot_readout_fidelity"] = device.crot_readout_fidelity;
    d["residual_excitation"] = device.residual_excitation;
    d["frame_hz"] = device.frame_hz ? json(*device.frame_hz) : json(nullptr);
    j["device"] = d;
    j["tx"] = {{"f_clk_hz", tx.f_clk},           {"lo_hz", tx.lo_freq},
               {"dac_bits", tx.dac_bits},         {"amp_bits", tx.amp_bits},
               {"phase_mod_bits", tx.phase_mod_bits}, {"pac_addr_bits", tx.pac_addr_bits},
               {"gain_db", tx.gain_db},           {"rf_high", tx.rf_high}};
    json spurs = json::array();
    for (const auto& s : tx.impairments.spurs) {
        spurs.push_back({{"offset_hz", s.offset_hz}, {"level_dbc", s.level_dbc}});
    }
    j["impairments"] = {
        {"lo_leakage_dbc", tx.impairments.lo_leakage_dbc ? json(*tx.impairments.lo_leakage_dbc) : json(nullptr)},
        {"iq_gain_mismatch", tx.impairments.iq_gain_mismatch},
        {"iq_phase_error_rad", tx.impairments.iq_phase_error},
        {"spurs", spurs}};
    j["calibration"] = {{"rabi_hz", rabi_hz}, {"method", simulated_calibration ? "simulated" : "nominal"}};
    j["backend"] = {{"kind", backend.kind == BackendConfig::Kind::Physics ? "physics" : "analytic"},
                    {"ideal_gates", backend.ideal_gates},
                    {"depolarizing", backend.depolarizing}};
    j["analysis"] = {{"window", window_name(analysis.window)},
                     {"snr_bandwidth_hz", analysis.snr_bandwidth_hz},
                     {"fft_len", analysis.fft_len}};
    if (experiment) {
        const auto& e = *experiment;
        json x;
        x["kind"] = experiment_name(e.kind);
        x["sweep"] = {{"start", e.sweep.start}, {"stop", e.sweep.stop}, {"points", e.sweep.points}};
        x["shots"] = e.shots;
        x["seed"] = e.seed;
        x["jobs"] = e.jobs;
        x["target"] = e.target == 0 ? "q1" : "q2";
        x["shape"] = shape_name(e.shape);
        x["exchange_on"] = e.exchange_on;
        x["control_state"] = e.control_state;
        x["amplitude"] = e.amplitude ? json(*e.amplitude) : json(nullptr);
        x["rb_lengths"] = e.rb_lengths;
        x["rb_sequences"] = e.rb_sequences;
        j["experiment"] = x;
    }
    return j;
}

LabConfig lab_config(const Config& cfg) {
    return LabConfig{cfg.device, cfg.tx, cfg.rabi_hz, cfg.simulated_calibration};
}

std::shared_ptr<const Backend> make_backend(const Config& cfg) {
    if (cfg.backend.kind == BackendConfig::Kind::Analytic) {
        return std::make_shared<AnalyticBackend>(
            cfg.device, cfg.tx, AnalyticBackend::Options{cfg.backend.ideal_gates, cfg.backend.depolarizing});
    }
    return std::make_shared<PhysicsBackend>(cfg.device, cfg.tx);
}

}  // namespace cryoctl
