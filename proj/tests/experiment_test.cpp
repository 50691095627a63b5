/*
   Copyright 2026 The strata Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <gtest/gtest.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "strata/experiment.hpp"

namespace strata {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("strata_experiment_test_" + name);
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> read_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            row.push_back(cell.empty() || std::isalpha(static_cast<unsigned char>(cell[0]))
                              ? 0.0
                              : std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

ExperimentConfig variance_config(const fs::path& dir) {
    auto cfg = parse_config(
        "experiment = variance\nscheme = alternating\nlaw = twopoint(0.2, 0.8, 0.5)\n"
        "horizons = 64, 128, 256, 512\nreplicas = 4000\nseed = 5\n");
    cfg.output_dir = dir.string();
    cfg.threads = 1;
    return cfg;
}

TEST(RunExperiment, VarianceWritesCurveAndSlope) {
    const auto dir = scratch_dir("variance");
    const RunReport report = run_experiment(variance_config(dir));
    EXPECT_EQ(report.total_replicas, 4000u);
    EXPECT_EQ(slurp(dir / "variance.csv").substr(0, 14), "n,variance,se\n");
    const auto curve = read_rows(dir / "variance.csv");
    ASSERT_EQ(curve.size(), 4u);
    EXPECT_EQ(curve[0][0], 64.0);
    const auto exponent = read_rows(dir / "exponent.csv");
    ASSERT_EQ(exponent.size(), 1u);
    // Random stay probabilities: Var grows like n^{3/2}.
    EXPECT_NEAR(exponent[0][0], 1.5, 0.1);
    EXPECT_FALSE(fs::exists(dir / "checkpoint.json"));
}

TEST(RunExperiment, OutputsIndependentOfThreadCount) {
    const auto d1 = scratch_dir("threads1");
    const auto d8 = scratch_dir("threads8");
    auto cfg = variance_config(d1);
    run_experiment(cfg);
    cfg.output_dir = d8.string();
    cfg.threads = 8;
    run_experiment(cfg);
    EXPECT_EQ(slurp(d1 / "variance.csv"), slurp(d8 / "variance.csv"));
    EXPECT_EQ(slurp(d1 / "exponent.csv"), slurp(d8 / "exponent.csv"));
}

TEST(RunExperiment, ReportKeys) {
    const auto dir = scratch_dir("report");
    auto cfg = variance_config(dir);
    cfg.replicas = 100;
    const RunReport report = run_experiment(cfg);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    for (const char* key : {"config_echo", "files", "wall_seconds", "version", "seed"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_FALSE(j.contains("error"));
    EXPECT_EQ(j["seed"], 5);
    EXPECT_EQ(j["version"], kVersion);
    EXPECT_EQ(j["config_echo"], config_echo(cfg));
    EXPECT_EQ(j["files"].size(), report.files.size());
    for (const auto& f : report.files) EXPECT_TRUE(fs::exists(f)) << f;
}

TEST(RunExperiment, ReturnsOneRowPerHorizon) {
    const auto dir = scratch_dir("returns");
    auto cfg = parse_config(
        "experiment = returns\nscheme = iid\nlaw = constant(0.5)\nhorizons = 10, 100, 1000\n"
        "replicas = 500\nseed = 3\n");
    cfg.output_dir = dir.string();
    run_experiment(cfg);
    EXPECT_EQ(slurp(dir / "returns.csv").substr(0, 16), "horizon,mean,se\n");
    const auto rows = read_rows(dir / "returns.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_LE(rows[0][1], rows[1][1]);
    EXPECT_LE(rows[1][1], rows[2][1]);
}

TEST(RunExperiment, ExponentSpread) {
    const auto dir = scratch_dir("exponent");
    auto cfg = parse_config(
        "experiment = exponent\nscheme = iid\nlaw = twopoint(0.2, 0.8, 0.5)\n"
        "horizons = 256, 1024, 4096\nreplicas = 2000\nseed = 8\n");
    cfg.output_dir = dir.string();
    run_experiment(cfg);
    EXPECT_EQ(read_rows(dir / "spread.csv").size(), 3u);
    EXPECT_NEAR(read_rows(dir / "exponent.csv")[0][0], 0.75, 0.1);
}

TEST(RunExperiment, HeavyTailVarianceRefused) {
    const auto dir = scratch_dir("refused");
    auto cfg = parse_config(
        "experiment = variance\nscheme = iid\nlaw = stabletail(1.5)\nhorizons = 8, 16, 32\n"
        "replicas = 10\nseed = 1\n");
    cfg.output_dir = dir.string();
    EXPECT_THROW(run_experiment(cfg), ConfigError);
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_TRUE(j.contains("error"));
    cfg.force = true;
    EXPECT_NO_THROW(run_experiment(cfg));
}

TEST(RunExperiment, SimulateWritesBothPaths) {
    const auto dir = scratch_dir("simulate");
    auto cfg = parse_config(
        "experiment = simulate\nscheme = alternating\nlaw = beta(2, 3)\nhorizons = 50\nseed = 4\n");
    cfg.output_dir = dir.string();
    run_experiment(cfg);
    EXPECT_EQ(read_rows(dir / "path_direct.csv").size(), 51u);
    EXPECT_EQ(read_rows(dir / "path_embedded.csv").size(), 51u);
    EXPECT_EQ(slurp(dir / "path_embedded.csv").substr(0, 11), "k,S,xi,X,T\n");
}

TEST(RunExperiment, LimitComparison) {
    const auto dir = scratch_dir("limit");
    auto cfg = parse_config(
        "experiment = limit\nscheme = iid\nlaw = twopoint(0.2, 0.8, 0.5)\nhorizons = 4096\n"
        "replicas = 2000\nseed = 6\nlimit_draws = 2000\ndt = 0.001\nbin_width = 0.05\n");
    cfg.output_dir = dir.string();
    run_experiment(cfg);
    for (const char* f : {"walk_samples.csv", "limit_samples.csv", "comparison.csv", "ks.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto ks = read_rows(dir / "ks.csv");
    ASSERT_EQ(ks.size(), 2u);
    // Two-sample KS critical value at 1% for 2000 vs 2000 is about 0.052.
    EXPECT_LT(ks[0][1], 0.052);
    EXPECT_LT(ks[1][1], 0.052);
    EXPECT_EQ(read_rows(dir / "comparison.csv").size(), kReportQuantiles.size());
}

TEST(Checkpoint, ResumesFromSavedPrefix) {
    const auto dir = scratch_dir("checkpoint");
    auto cfg = variance_config(dir);
    cfg.replicas = 300;
    const SamplingPlan plan{cfg.scheme, cfg.law, cfg.horizons, cfg.seed, Observable::JumpX2n,
                            cfg.mode};
    fs::create_directories(dir);
    const ReplicaTable reference = detail::sample_with_checkpoints(cfg, plan, dir);

    // A saved prefix whose values are marked so that reuse is visible.
    const std::size_t done = 128;
    std::vector<double> prefix(reference.values.begin(),
                               reference.values.begin() + done * reference.horizons);
    prefix[0] = 12345.0;
    nlohmann::json j;
    j["key"] = detail::checkpoint_key(cfg, plan);
    j["completed"] = done;
    j["values"] = prefix;
    std::ofstream(dir / "checkpoint.json") << j.dump();

    const ReplicaTable resumed = detail::sample_with_checkpoints(cfg, plan, dir);
    EXPECT_EQ(resumed.values[0], 12345.0);
    EXPECT_TRUE(std::equal(resumed.values.begin() + 1, resumed.values.end(),
                           reference.values.begin() + 1));
    EXPECT_FALSE(fs::exists(dir / "checkpoint.json"));

    // A checkpoint from a different configuration is ignored.
    j["key"] = "something else";
    std::ofstream(dir / "checkpoint.json") << j.dump();
    const ReplicaTable fresh = detail::sample_with_checkpoints(cfg, plan, dir);
    EXPECT_EQ(fresh.values, reference.values);
}

TEST(Checkpoint, UnmarkedResumeIsBitIdentical) {
    const auto dir = scratch_dir("checkpoint_full");
    auto cfg = variance_config(dir);
    cfg.replicas = 1000;
    cfg.checkpoint_seconds = 0.0;  // save after every batch
    const SamplingPlan plan{cfg.scheme, cfg.law, cfg.horizons, cfg.seed, Observable::JumpX2n,
                            cfg.mode};
    fs::create_directories(dir);
    const ReplicaTable straight = detail::sample_with_checkpoints(cfg, plan, dir);

    // State as left behind by a job interrupted after 448 replicas.
    nlohmann::json j;
    j["key"] = detail::checkpoint_key(cfg, plan);
    j["completed"] = 448;
    j["values"] = std::vector<double>(straight.values.begin(),
                                      straight.values.begin() + 448 * straight.horizons);
    std::ofstream(dir / "checkpoint.json") << j.dump();
    EXPECT_EQ(detail::sample_with_checkpoints(cfg, plan, dir).values, straight.values);
}

TEST(Validation, SuitePasses) {
    ValidationOptions opt;
    opt.replicas = 200000;
    opt.threads = 2;
    const ValidationReport report = validate_suite(1, opt);
    EXPECT_GE(report.checks.size(), 6u);
    for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << ": " << c.detail;
}

TEST(Validation, CorruptedSojournSamplerIsCaught) {
    ValidationOptions opt;
    opt.replicas = 200000;
    opt.sojourn = [](double p, Stream& rng) { return sample_sojourn(p, rng) + 1; };
    const ValidationReport report = validate_suite(1, opt);
    EXPECT_FALSE(report.all_passed());
    for (const auto& c : report.checks) {
        if (c.name == "sojourn_moments") {
            EXPECT_FALSE(c.passed);
        }
    }
}

TEST(Validation, SojournMomentsDetectLawChange) {
    const auto ok = sojourn_moments([](double p, Stream& rng) { return sample_sojourn(p, rng); },
                                    0.5, 100000, 2);
    EXPECT_NEAR(ok.mean, 1.0, 3.0 * ok.mean_se);
    EXPECT_NEAR(ok.variance, 2.0, 3.0 * ok.variance_se);
}

}  // namespace
}  // namespace strata
