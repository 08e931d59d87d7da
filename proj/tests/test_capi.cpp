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


// Exercises the shared library through its C interface only.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cryoctl/cryoctl.h"

namespace {

constexpr const char* kNominal = R"({"calibration": {"method": "nominal"}})";

// Reads a (buffer, capacity, needed) accessor into a string.
template <class Fn>
std::string text_of(Fn&& fn) {
    size_t needed = 0;
    EXPECT_EQ(fn(nullptr, 0, &needed), CRYOCTL_ERR_BUFFER_TOO_SMALL);
    std::string out(needed, '\0');
    EXPECT_EQ(fn(out.data(), out.size(), &needed), CRYOCTL_OK);
    out.resize(needed - 1);
    return out;
}

struct Config {
    cryoctl_config* p = nullptr;
    explicit Config(const char* json) { EXPECT_EQ(cryoctl_config_parse(json, &p), CRYOCTL_OK) << cryoctl_last_error(); }
    ~Config() { cryoctl_config_free(p); }
};

struct Program {
    cryoctl_program* p = nullptr;
    ~Program() { cryoctl_program_free(p); }
};

struct Image {
    cryoctl_image* p = nullptr;
    ~Image() { cryoctl_image_free(p); }
};

struct Waveform {
    cryoctl_waveform* p = nullptr;
    ~Waveform() { cryoctl_waveform_free(p); }
};

struct Result {
    cryoctl_result* p = nullptr;
    ~Result() { cryoctl_result_free(p); }
};

std::filesystem::path scratch_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / ("cryoctl_capi_" + std::string(name));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

TEST(CApi, VersionAndStatusNames) {
    EXPECT_STRNE(cryoctl_version(), "");
    EXPECT_STREQ(cryoctl_status_name(CRYOCTL_OK), "ok");
    EXPECT_STREQ(cryoctl_status_name(CRYOCTL_ERR_CAPACITY), "capacity exceeded");
    EXPECT_STREQ(cryoctl_status_name(static_cast<cryoctl_status>(77)), "unknown status");
}

TEST(CApi, NullArgumentsAreRejected) {
    cryoctl_config* cfg = nullptr;
    EXPECT_EQ(cryoctl_config_parse(nullptr, &cfg), CRYOCTL_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(cryoctl_config_parse("{}", nullptr), CRYOCTL_ERR_INVALID_ARGUMENT);
    EXPECT_NE(std::strstr(cryoctl_last_error(), "NULL"), nullptr) << cryoctl_last_error();
    EXPECT_EQ(cryoctl_execute(nullptr, nullptr, nullptr), CRYOCTL_ERR_INVALID_ARGUMENT);
    EXPECT_EQ(cryoctl_program_variant_count(nullptr), 0u);
    EXPECT_EQ(cryoctl_waveform_length(nullptr), 0u);
    // Freeing NULL is a no-op.
    cryoctl_config_free(nullptr);
    cryoctl_image_free(nullptr);
}

TEST(CApi, ConfigErrorsCarryTheProblemList) {
    cryoctl_config* cfg = nullptr;
    EXPECT_EQ(cryoctl_config_parse(R"({"tx": {"bogus": 1}})", &cfg), CRYOCTL_ERR_CONFIG);
    EXPECT_EQ(cfg, nullptr);
    EXPECT_NE(std::strstr(cryoctl_last_error(), "tx.bogus: unknown key"), nullptr);
    EXPECT_EQ(cryoctl_config_load("/nonexistent/cfg.json", &cfg), CRYOCTL_ERR_IO);
}

TEST(CApi, BufferPatternReportsTheRequiredSize) {
    Config cfg("{}");
    size_t needed = 0;
    EXPECT_EQ(cryoctl_config_to_json(cfg.p, nullptr, 0, &needed), CRYOCTL_ERR_BUFFER_TOO_SMALL);
    ASSERT_GT(needed, 1u);
    std::string small(needed - 1, '\0');
    EXPECT_EQ(cryoctl_config_to_json(cfg.p, small.data(), small.size(), &needed), CRYOCTL_ERR_BUFFER_TOO_SMALL);
    const std::string json = text_of([&](char* b, size_t c, size_t* n) { return cryoctl_config_to_json(cfg.p, b, c, n); });
    EXPECT_EQ(json.size() + 1, needed);
    EXPECT_NE(json.find("\"schema\": \"cryoctl.config/1\""), std::string::npos);
    // The snapshot parses back.
    Config again(json.c_str());
}

TEST(CApi, CompileDeutschJozsaGivesFourVariants) {
    Config cfg(kNominal);
    Program prog;
    const char* text = ".exchange on\nmY q1\nmY q2\noracle\nY q1\nY q2\n";
    ASSERT_EQ(cryoctl_compile(cfg.p, text, &prog.p), CRYOCTL_OK) << cryoctl_last_error();
    ASSERT_EQ(cryoctl_program_variant_count(prog.p), 4u);
    std::vector<std::string> names;
    for (size_t v = 0; v < 4; ++v) {
        names.push_back(
            text_of([&](char* b, size_t c, size_t* n) { return cryoctl_program_variant_name(prog.p, v, b, c, n); }));
    }
    EXPECT_EQ(names, (std::vector<std::string>{"cnot", "zcnot", "identity", "x2"}));
    const std::string report =
        text_of([&](char* b, size_t c, size_t* n) { return cryoctl_program_report_json(prog.p, 0, b, c, n); });
    EXPECT_NE(report.find("\"schema\": \"cryoctl.compile-report/1\""), std::string::npos);
    size_t needed = 0;
    EXPECT_EQ(cryoctl_program_variant_name(prog.p, 4, nullptr, 0, &needed), CRYOCTL_ERR_INVALID_ARGUMENT);
}

TEST(CApi, CompileErrorsMapToStatusCodes) {
    Config cfg(kNominal);
    Program prog;
    EXPECT_EQ(cryoctl_compile(cfg.p, "X q1\nWIGGLE q2\n", &prog.p), CRYOCTL_ERR_PARSE);
    EXPECT_NE(std::strstr(cryoctl_last_error(), "line 2"), nullptr) << cryoctl_last_error();
    std::string long_program;
    for (int k = 0; k < 2049; ++k) {
        long_program += "X q1\n";
    }
    EXPECT_EQ(cryoctl_compile(cfg.p, long_program.c_str(), &prog.p), CRYOCTL_ERR_CAPACITY);
    EXPECT_EQ(prog.p, nullptr);
    long_program.resize(long_program.size() - 5);
    EXPECT_EQ(cryoctl_compile(cfg.p, long_program.c_str(), &prog.p), CRYOCTL_OK) << cryoctl_last_error();
    Image img;
    ASSERT_EQ(cryoctl_program_image(prog.p, 0, &img.p), CRYOCTL_OK);
    size_t count = 0;
    EXPECT_EQ(cryoctl_image_instruction_count(img.p, &count), CRYOCTL_OK);
    EXPECT_EQ(count, 2048u);
}

TEST(CApi, ImageRoundTripsThroughBytesFilesAndListings) {
    Config cfg(kNominal);
    Program prog;
    ASSERT_EQ(cryoctl_compile(cfg.p, "X q1\nY2 q2\n", &prog.p), CRYOCTL_OK) << cryoctl_last_error();
    Image img;
    ASSERT_EQ(cryoctl_program_image(prog.p, 0, &img.p), CRYOCTL_OK);
    EXPECT_EQ(cryoctl_image_validate(img.p), CRYOCTL_OK);

    size_t needed = 0;
    EXPECT_EQ(cryoctl_image_serialize(img.p, nullptr, 0, &needed), CRYOCTL_ERR_BUFFER_TOO_SMALL);
    std::vector<uint8_t> bytes(needed);
    ASSERT_EQ(cryoctl_image_serialize(img.p, bytes.data(), bytes.size(), &needed), CRYOCTL_OK);
    Image copy;
    ASSERT_EQ(cryoctl_image_from_bytes(bytes.data(), bytes.size(), &copy.p), CRYOCTL_OK);
    std::vector<uint8_t> again(needed);
    ASSERT_EQ(cryoctl_image_serialize(copy.p, again.data(), again.size(), &needed), CRYOCTL_OK);
    EXPECT_EQ(bytes, again);

    Image broken;
    bytes[20] ^= 0xff;
    EXPECT_EQ(cryoctl_image_from_bytes(bytes.data(), bytes.size(), &broken.p), CRYOCTL_ERR_PARSE);
    EXPECT_EQ(cryoctl_image_from_bytes(bytes.data(), 3, &broken.p), CRYOCTL_ERR_PARSE);

    const auto dir = scratch_dir("image");
    const std::string path = (dir / "x.img").string();
    ASSERT_EQ(cryoctl_image_save(img.p, path.c_str()), CRYOCTL_OK);
    Image loaded;
    ASSERT_EQ(cryoctl_image_load(path.c_str(), &loaded.p), CRYOCTL_OK);
    EXPECT_EQ(cryoctl_image_load((dir / "missing.img").string().c_str(), &broken.p), CRYOCTL_ERR_IO);

    const std::string listing = text_of(
        [&](char* b, size_t c, size_t* n) { return cryoctl_image_disassemble(img.p, nullptr, b, c, n); });
    Image relisted;
    ASSERT_EQ(cryoctl_image_from_listing(listing.c_str(), &relisted.p), CRYOCTL_OK) << cryoctl_last_error();
    std::vector<uint8_t> from_listing(needed);
    ASSERT_EQ(cryoctl_image_serialize(relisted.p, from_listing.data(), from_listing.size(), &needed), CRYOCTL_OK);
    EXPECT_EQ(from_listing, again);
}

TEST(CApi, ExecuteAndMeasure) {
    // 16-bit codes keep the small 4 us burst amplitude well resolved, so the
    // peak magnitude that sets the leakage level equals the tone amplitude.
    Config cfg(R"({"calibration": {"method": "nominal"}, "tx": {"dac_bits": 16},
                   "impairments": {"lo_leakage_dbc": -50}})");
    Program prog;
    ASSERT_EQ(cryoctl_compile(cfg.p, "X2 q1 dur=4us\n", &prog.p), CRYOCTL_OK) << cryoctl_last_error();
    Image img;
    ASSERT_EQ(cryoctl_program_image(prog.p, 0, &img.p), CRYOCTL_OK);
    Waveform wf;
    ASSERT_EQ(cryoctl_execute(cfg.p, img.p, &wf.p), CRYOCTL_OK) << cryoctl_last_error();
    EXPECT_EQ(cryoctl_waveform_length(wf.p), 4000u);
    EXPECT_DOUBLE_EQ(cryoctl_waveform_sample_rate(wf.p), 1e9);
    std::vector<int32_t> i(10);
    std::vector<int32_t> q(10);
    EXPECT_EQ(cryoctl_waveform_samples(wf.p, i.data(), q.data(), i.size()), CRYOCTL_OK);
    EXPECT_EQ(cryoctl_waveform_samples(wf.p, nullptr, q.data(), q.size()), CRYOCTL_OK);
    EXPECT_NE(q[0] | i[0], 0);

    const std::string metrics = text_of(
        [&](char* b, size_t c, size_t* n) { return cryoctl_waveform_metrics_json(cfg.p, wf.p, b, c, n); });
    EXPECT_NE(metrics.find("\"schema\": \"cryoctl.metrics/1\""), std::string::npos);
    const auto lor_at = metrics.find("\"lor_db\": ");
    ASSERT_NE(lor_at, std::string::npos);
    EXPECT_NEAR(std::stod(metrics.substr(lor_at + 10)), 50.0, 0.5);
    const std::string csv = text_of(
        [&](char* b, size_t c, size_t* n) { return cryoctl_waveform_spectrum_csv(cfg.p, wf.p, b, c, n); });
    EXPECT_EQ(csv.rfind("freq_hz,dbc\n", 0), 0u);
}

TEST(CApi, ExperimentRunIsDeterministic) {
    Config cfg(R"({"backend": {"kind": "analytic"}, "calibration": {"method": "nominal"},
                   "experiment": {"kind": "allxy", "shots": 500, "seed": 3}})");
    auto run = [&] {
        Result r;
        EXPECT_EQ(cryoctl_experiment_run(cfg.p, &r.p), CRYOCTL_OK) << cryoctl_last_error();
        return text_of([&](char* b, size_t c, size_t* n) { return cryoctl_result_csv(r.p, b, c, n); }) +
               text_of([&](char* b, size_t c, size_t* n) { return cryoctl_result_summary_json(r.p, b, c, n); }) +
               text_of([&](char* b, size_t c, size_t* n) { return cryoctl_result_table_json(r.p, b, c, n); });
    };
    const std::string a = run();
    ASSERT_EQ(cryoctl_config_set_jobs(cfg.p, 3), CRYOCTL_OK);
    EXPECT_EQ(run(), a);
    ASSERT_EQ(cryoctl_config_set_seed(cfg.p, 4), CRYOCTL_OK);
    EXPECT_NE(run(), a);
    EXPECT_EQ(cryoctl_config_set_jobs(cfg.p, 0), CRYOCTL_ERR_INVALID_ARGUMENT);
    EXPECT_NE(a.find("index,sigma_z,stderr,ideal,p1_raw\n"), std::string::npos);

    Config bare("{}");
    Result r;
    EXPECT_EQ(cryoctl_experiment_run(bare.p, &r.p), CRYOCTL_ERR_CONFIG);
}

TEST(CApi, ReadoutCorrection) {
    const double measured[2] = {0.83, 0.17};
    double corrected[2] = {0, 0};
    int clamped = -1;
    ASSERT_EQ(cryoctl_readout_correct(measured, 0.95, 0.80, corrected, &clamped), CRYOCTL_OK);
    EXPECT_NEAR(corrected[0], 0.84, 1e-12);
    EXPECT_NEAR(corrected[1], 0.16, 1e-12);
    EXPECT_EQ(clamped, 0);
    const double low[2] = {0.99, 0.01};
    ASSERT_EQ(cryoctl_readout_correct(low, 0.95, 0.80, corrected, nullptr), CRYOCTL_OK);
    EXPECT_EQ(corrected[1], 0.0);
    EXPECT_EQ(cryoctl_readout_correct(measured, 0.5, 0.5, corrected, &clamped), CRYOCTL_ERR_VALIDATION);
    EXPECT_EQ(cryoctl_readout_correct(measured, 1.5, 0.5, corrected, &clamped), CRYOCTL_ERR_RANGE);
}

TEST(CApi, WriteFileReplacesAtomically) {
    const auto dir = scratch_dir("write");
    const std::string path = (dir / "out.txt").string();
    ASSERT_EQ(cryoctl_write_file(path.c_str(), "first", 5), CRYOCTL_OK);
    ASSERT_EQ(cryoctl_write_file(path.c_str(), "second", 6), CRYOCTL_OK);
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    EXPECT_EQ(content, "second");
    // No temporaries are left behind.
    EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator()), 1);
    EXPECT_EQ(cryoctl_write_file((dir / "no" / "such" / "dir.txt").string().c_str(), "x", 1), CRYOCTL_ERR_IO);
}

}  // namespace
