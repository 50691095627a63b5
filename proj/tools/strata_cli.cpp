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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "strata/strata.hpp"

namespace {

enum ExitCode { kOk = 0, kCheckFailed = 1, kConfigError = 2, kRuntimeError = 3 };

unsigned thread_override(unsigned fallback) {
    if (const char* env = std::getenv("THREADS")) {
        try {
            const int t = std::stoi(env);
            if (t >= 1) return static_cast<unsigned>(t);
        } catch (const std::exception&) {
        }
        std::cerr << "warning: ignoring invalid THREADS=" << env << "\n";
    }
    return fallback;
}

int run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot read config " << path << "\n";
        return kConfigError;
    }
    std::stringstream text;
    text << in.rdbuf();
    strata::ExperimentConfig cfg;
    try {
        cfg = strata::parse_config(text.str());
    } catch (const strata::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    }
    cfg.threads = thread_override(cfg.threads);
    try {
        const strata::RunReport report = strata::run_experiment(cfg);
        for (const auto& f : report.files) std::cout << f << "\n";
        fmt::print("wall_seconds={:.2f}\n", report.wall_seconds);
        return report.passed ? kOk : kCheckFailed;
    } catch (const strata::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

int run_validate(std::uint64_t seed) {
    try {
        strata::ValidationOptions opt;
        opt.threads = thread_override(opt.threads);
        const auto report = strata::validate_suite(seed, opt);
        for (const auto& c : report.checks)
            fmt::print("[{}] {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
        return report.all_passed() ? kOk : kCheckFailed;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random walks on randomly oriented layered lattices"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
    run->add_option("config", config_path, "Path to a key = value config file")->required();

    std::uint64_t seed = 1;
    auto* validate = app.add_subcommand("validate", "Run the fast validation checks");
    validate->add_option("--seed", seed, "Master seed");

    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    if (*run) return run_config(config_path);
    if (*validate) return run_validate(seed);
    if (*version) {
        std::cout << strata::kVersion << "\n";
        return kOk;
    }
    return kConfigError;
}
