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


// cryoctl: batch front end for compiling gate programs, rendering waveforms
// and running calibration experiments. Every output directory receives a
// manifest.json from which the run can be repeated.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cryoctl/cryoctl.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCapacity = 3;
constexpr int kExitInvalid = 4;  // validation or parse failure
constexpr int kExitIo = 5;
constexpr int kExitUsage = 64;

constexpr const char* kOutRootEnv = "CRYOCTL_OUT_ROOT";

int exit_code(cryoctl_status st) {
    switch (st) {
        case CRYOCTL_OK: return kExitOk;
        case CRYOCTL_ERR_CONFIG: return kExitConfig;
        case CRYOCTL_ERR_CAPACITY: return kExitCapacity;
        case CRYOCTL_ERR_VALIDATION:
        case CRYOCTL_ERR_PARSE: return kExitInvalid;
        case CRYOCTL_ERR_IO: return kExitIo;
        default: return kExitRuntime;
    }
}

/// Carries a failed status up to main().
struct Failure {
    cryoctl_status status;
    std::string message;
};

void check(cryoctl_status st, const std::string& context) {
    if (st != CRYOCTL_OK) {
        throw Failure{st, context + ": " + cryoctl_last_error()};
    }
}

/// Calls a (buffer, capacity, needed) style getter twice: size, then fill.
template <typename Getter>
std::string fetch_text(Getter&& get, const std::string& context) {
    size_t needed = 0;
    const cryoctl_status st = get(nullptr, 0, &needed);
    if (st != CRYOCTL_OK && st != CRYOCTL_ERR_BUFFER_TOO_SMALL) {
        check(st, context);
    }
    std::string text(needed, '\0');
    check(get(text.data(), text.size(), &needed), context);
    text.resize(needed > 0 ? needed - 1 : 0);
    return text;
}

template <typename T, void (*Free)(T*)>
struct Handle {
    T* ptr = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Free(ptr); }
    T** out() { return &ptr; }
    T* get() const { return ptr; }
};

using ConfigHandle = Handle<cryoctl_config, cryoctl_config_free>;
using ProgramHandle = Handle<cryoctl_program, cryoctl_program_free>;
using ImageHandle = Handle<cryoctl_image, cryoctl_image_free>;
using WaveformHandle = Handle<cryoctl_waveform, cryoctl_waveform_free>;
using ResultHandle = Handle<cryoctl_result, cryoctl_result_free>;

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Failure{CRYOCTL_ERR_IO, "cannot read '" + path + "'"};
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void load_config(ConfigHandle& cfg, const std::string& path) {
    if (path.empty()) {
        check(cryoctl_config_parse("{}", cfg.out()), "default config");
    } else {
        check(cryoctl_config_load(path.c_str(), cfg.out()), path);
    }
}

json config_snapshot(const ConfigHandle& cfg) {
    return json::parse(fetch_text(
        [&](char* b, size_t c, size_t* n) { return cryoctl_config_to_json(cfg.get(), b, c, n); }, "config"));
}

/// Output directory plus the artifact list that ends up in the manifest.
class OutputDir {
public:
    OutputDir(const std::string& explicit_dir, const std::string& default_name) {
        if (!explicit_dir.empty()) {
            dir_ = explicit_dir;
        } else {
            const char* root = std::getenv(kOutRootEnv);
            dir_ = fs::path(root != nullptr && *root != '\0' ? root : "cryoctl-out") / default_name;
        }
        std::error_code ec;
        fs::create_directories(dir_, ec);
        if (ec) {
            throw Failure{CRYOCTL_ERR_IO, "cannot create '" + dir_.string() + "': " + ec.message()};
        }
    }

    void write(const std::string& name, const std::string& contents) { write_bytes(name, contents.data(), contents.size()); }

    void write_bytes(const std::string& name, const void* data, size_t size) {
        const fs::path path = dir_ / name;
        check(cryoctl_write_file(path.string().c_str(), data, size), "write");
        artifacts_.push_back(name);
    }

    /// Writes manifest.json last, so a complete manifest implies complete
    /// artifacts.
    void finish(const std::string& command, json inputs, const json& config, std::optional<std::uint64_t> seed,
                std::chrono::steady_clock::time_point started) {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        json m;
        m["schema"] = "cryoctl.manifest/1";
        m["version"] = cryoctl_version();
        m["command"] = command;
        m["inputs"] = std::move(inputs);
        m["seed"] = seed ? json(*seed) : json(nullptr);
        m["artifacts"] = artifacts_;
        m["wall_clock_s"] = wall;
        m["config"] = config;
        const std::string text = m.dump(2) + "\n";
        const fs::path path = dir_ / "manifest.json";
        check(cryoctl_write_file(path.string().c_str(), text.data(), text.size()), "write");
        std::cout << dir_.string() << "\n";
    }

private:
    fs::path dir_;
    std::vector<std::string> artifacts_;
};

struct Common {
    std::string config;
    std::string out_dir;
    std::string format = "csv";
};

// ---- compile -----------------------------------------------------------------

int cmd_compile(const Common& common, const std::string& program_path) {
    const auto started = std::chrono::steady_clock::now();
    ConfigHandle cfg;
    load_config(cfg, common.config);
    const std::string text = read_text(program_path);
    ProgramHandle program;
    check(cryoctl_compile(cfg.get(), text.c_str(), program.out()), program_path);

    OutputDir out(common.out_dir, "compile-" + fs::path(program_path).stem().string());
    const size_t n = cryoctl_program_variant_count(program.get());
    for (size_t v = 0; v < n; ++v) {
        const std::string name = fetch_text(
            [&](char* b, size_t c, size_t* k) { return cryoctl_program_variant_name(program.get(), v, b, c, k); },
            "variant name");
        ImageHandle image;
        check(cryoctl_program_image(program.get(), v, image.out()), "image");
        size_t size = 0;
        cryoctl_image_serialize(image.get(), nullptr, 0, &size);
        std::vector<uint8_t> bytes(size);
        check(cryoctl_image_serialize(image.get(), bytes.data(), bytes.size(), &size), "serialize");
        out.write_bytes(name + ".img", bytes.data(), bytes.size());
        out.write(name + ".report.json",
                  fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_program_report_json(program.get(), v, b, c, k); },
                             "report"));
        out.write(name + ".lst",
                  fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_image_disassemble(image.get(), cfg.get(), b, c, k); },
                             "disassemble"));
    }
    json inputs;
    inputs["program"] = program_path;
    inputs["program_text"] = text;
    out.finish("compile", std::move(inputs), config_snapshot(cfg), std::nullopt, started);
    return kExitOk;
}

// ---- waveform ------------------------------------------------------------------

int cmd_waveform(const Common& common, const std::string& image_path) {
    const auto started = std::chrono::steady_clock::now();
    ConfigHandle cfg;
    load_config(cfg, common.config);
    ImageHandle image;
    check(cryoctl_image_load(image_path.c_str(), image.out()), image_path);
    WaveformHandle wf;
    check(cryoctl_execute(cfg.get(), image.get(), wf.out()), image_path);

    const size_t n = cryoctl_waveform_length(wf.get());
    std::vector<int32_t> i_codes(n), q_codes(n);
    check(cryoctl_waveform_samples(wf.get(), i_codes.data(), q_codes.data(), n), "samples");
    const double fs_hz = cryoctl_waveform_sample_rate(wf.get());

    OutputDir out(common.out_dir, "waveform-" + fs::path(image_path).stem().string());
    if (common.format == "json") {
        json j;
        j["schema"] = "cryoctl.waveform/1";
        j["sample_rate_hz"] = fs_hz;
        j["i"] = i_codes;
        j["q"] = q_codes;
        out.write("waveform.json", j.dump() + "\n");
    } else {
        std::string csv = "sample,i,q\n";
        csv.reserve(n * 16);
        for (size_t k = 0; k < n; ++k) {
            csv += std::to_string(k) + "," + std::to_string(i_codes[k]) + "," + std::to_string(q_codes[k]) + "\n";
        }
        out.write("waveform.csv", csv);
    }
    if (n > 0) {
        out.write("spectrum.csv",
                  fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_waveform_spectrum_csv(cfg.get(), wf.get(), b, c, k); },
                             "spectrum"));
        out.write("metrics.json",
                  fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_waveform_metrics_json(cfg.get(), wf.get(), b, c, k); },
                             "metrics"));
    }
    json inputs;
    inputs["image"] = image_path;
    out.finish("waveform", std::move(inputs), config_snapshot(cfg), std::nullopt, started);
    return kExitOk;
}

// ---- experiment ----------------------------------------------------------------

int cmd_experiment(const Common& common, std::optional<std::uint64_t> seed, std::optional<unsigned> jobs) {
    const auto started = std::chrono::steady_clock::now();
    if (common.config.empty()) {
        throw Failure{CRYOCTL_ERR_CONFIG, "experiment requires --config"};
    }
    ConfigHandle cfg;
    load_config(cfg, common.config);
    if (seed) {
        check(cryoctl_config_set_seed(cfg.get(), *seed), "seed");
    }
    if (jobs) {
        check(cryoctl_config_set_jobs(cfg.get(), *jobs), "jobs");
    }
    json snapshot = config_snapshot(cfg);
    if (!snapshot.contains("experiment") || snapshot["experiment"].is_null()) {
        throw Failure{CRYOCTL_ERR_CONFIG, common.config + ": no 'experiment' section"};
    }
    ResultHandle result;
    check(cryoctl_experiment_run(cfg.get(), result.out()), "experiment");

    const auto& exp = snapshot["experiment"];
    const std::uint64_t used_seed = exp.value("seed", std::uint64_t{1});
    OutputDir out(common.out_dir, exp.value("kind", std::string("experiment")) + "-seed" + std::to_string(used_seed));
    if (common.format == "json") {
        out.write("result.json",
                  fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_result_table_json(result.get(), b, c, k); },
                             "result"));
    } else {
        out.write("result.csv",
                  fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_result_csv(result.get(), b, c, k); },
                             "result"));
    }
    out.write("summary.json",
              fetch_text([&](char* b, size_t c, size_t* k) { return cryoctl_result_summary_json(result.get(), b, c, k); },
                         "summary"));
    json inputs;
    inputs["config"] = common.config;
    out.finish("experiment", std::move(inputs), snapshot, used_seed, started);
    return kExitOk;
}

// ---- disasm --------------------------------------------------------------------

int cmd_disasm(const Common& common, const std::string& image_path) {
    ConfigHandle cfg;
    load_config(cfg, common.config);
    ImageHandle image;
    check(cryoctl_image_load(image_path.c_str(), image.out()), image_path);
    std::cout << fetch_text(
        [&](char* b, size_t c, size_t* k) { return cryoctl_image_disassemble(image.get(), cfg.get(), b, c, k); },
        "disassemble");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cryoctl: cryogenic qubit-controller model (compile, waveform, experiment, disasm)"};
    app.set_version_flag("--version", std::string(cryoctl_version()));
    app.require_subcommand(1);
    app.footer(std::string("Output directories default to $") + kOutRootEnv +
               "/<name> (or ./cryoctl-out/<name>).\n"
               "Exit codes: 0 ok, 1 runtime error, 2 config error, 3 capacity exceeded,\n"
               "4 validation or parse error, 5 i/o error, 64 usage error.");

    Common common;
    std::string program_path, image_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", common.config, "JSON configuration file (defaults when omitted)")
            ->check(CLI::ExistingFile);
        if (with_out) {
            sub->add_option("--out-dir", common.out_dir, "Output directory");
            sub->add_option("--format", common.format, "Table format")
                ->check(CLI::IsMember({"csv", "json"}))
                ->capture_default_str();
        }
    };

    auto* compile = app.add_subcommand("compile", "Compile a gate program into memory images");
    compile->add_option("program", program_path, "Gate program text file")->required()->check(CLI::ExistingFile);
    add_common(compile, true);

    auto* waveform = app.add_subcommand("waveform", "Execute a memory image; write waveform, spectrum and metrics");
    waveform->add_option("image", image_path, "Binary memory image")->required()->check(CLI::ExistingFile);
    add_common(waveform, true);

    auto* experiment = app.add_subcommand("experiment", "Run the experiment section of a configuration");
    add_common(experiment, true);
    experiment->add_option("--seed", seed, "Override experiment.seed");
    experiment->add_option("--jobs", jobs, "Override experiment.jobs (worker threads)")->check(CLI::PositiveNumber);

    auto* disasm = app.add_subcommand("disasm", "Print the listing of a memory image");
    disasm->add_option("image", image_path, "Binary memory image")->required()->check(CLI::ExistingFile);
    add_common(disasm, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*compile) return cmd_compile(common, program_path);
        if (*waveform) return cmd_waveform(common, image_path);
        if (*experiment) return cmd_experiment(common, seed, jobs);
        if (*disasm) return cmd_disasm(common, image_path);
    } catch (const Failure& f) {
        std::cerr << "cryoctl: " << cryoctl_status_name(f.status) << ": " << f.message << "\n";
        return exit_code(f.status);
    } catch (const std::exception& e) {
        std::cerr << "cryoctl: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
