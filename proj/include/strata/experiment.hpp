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

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "strata/config.hpp"
#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/estimators.hpp"
#include "strata/limit.hpp"
#include "strata/stats.hpp"
#include "strata/version.hpp"
#include "strata/walk.hpp"

namespace strata {

struct RunReport {
    std::string config_echo;
    std::vector<std::string> files;
    double wall_seconds = 0.0;
    std::size_t total_replicas = 0;
    std::string version = kVersion;
    std::uint64_t seed = 0;
    bool passed = true;  // validate experiment only
    std::string error;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config_echo"] = config_echo;
        j["files"] = files;
        j["wall_seconds"] = wall_seconds;
        j["version"] = version;
        j["seed"] = seed;
        j["total_replicas"] = total_replicas;
        if (!error.empty()) j["error"] = error;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Validation suite
// ---------------------------------------------------------------------------

using SojournSampler = std::function<std::int64_t(double p, Stream& rng)>;

struct ValidationOptions {
    SojournSampler sojourn = [](double p, Stream& rng) { return sample_sojourn(p, rng); };
    std::size_t replicas = 1000000;
    unsigned threads = default_threads();
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<CheckResult> checks;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
};

namespace detail {

using PositionCounts = std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t>;

inline PositionCounts tally(const std::vector<std::pair<std::int64_t, std::int64_t>>& positions) {
    PositionCounts counts;
    for (const auto& p : positions) ++counts[p];
    return counts;
}

}  // namespace detail

/// Empirical law of M_n from the direct simulator over `replicas` walks.
inline detail::PositionCounts direct_endpoint_counts(const Environment& env, std::int64_t n,
                                                     std::size_t replicas, std::uint64_t seed,
                                                     unsigned threads) {
    std::vector<std::pair<std::int64_t, std::int64_t>> end(replicas);
    parallel_for(0, replicas, threads, [&](std::size_t r) {
        Stream rng = make_stream(seed, r, StreamTag::Walk);
        DirectWalker w(env);
        for (std::int64_t i = 0; i < n; ++i) w.step(rng);
        end[r] = {w.state().x, w.state().y};
    });
    return detail::tally(end);
}

/// Empirical law of M_n reconstructed from embedded paths.
inline detail::PositionCounts embedded_endpoint_counts(const Environment& env, std::int64_t n,
                                                       std::size_t replicas, std::uint64_t seed,
                                                       unsigned threads) {
    std::vector<std::pair<std::int64_t, std::int64_t>> end(replicas);
    parallel_for(0, replicas, threads, [&](std::size_t r) {
        Stream rng = make_stream(seed, r, StreamTag::Walk);
        // Each jump takes at least one unit of time, so n + 1 jumps reach past n.
        const EmbeddedPath path = simulate_embedded(env, n + 1, rng);
        end[r] = position_at_time(path, env, n);
    });
    return detail::tally(end);
}

struct MomentCheck {
    double mean = 0.0;
    double mean_se = 0.0;
    double variance = 0.0;
    double variance_se = 0.0;
};

inline MomentCheck sojourn_moments(const SojournSampler& sampler, double p, std::size_t draws,
                                   std::uint64_t seed) {
    Stream rng = make_stream(seed, 0, StreamTag::Auxiliary);
    std::vector<double> xs(draws);
    for (auto& x : xs) x = static_cast<double>(sampler(p, rng));
    MomentCheck m;
    m.mean = mean(xs);
    m.variance = sample_variance(xs);
    m.mean_se = std::sqrt(m.variance / static_cast<double>(draws));
    CompensatedSum m4;
    for (double x : xs) m4 += std::pow(x - m.mean, 4);
    const double mu4 = m4.value() / static_cast<double>(draws);
    m.variance_se = std::sqrt(std::max(0.0, mu4 - m.variance * m.variance) / static_cast<double>(draws));
    return m;
}

/// Maximum |empirical - exact| characteristic function over `thetas`.
inline double char_function_error(const StableSpec& spec, std::span<const double> thetas,
                                  std::size_t draws, std::uint64_t seed) {
    Stream rng = make_stream(seed, 1, StreamTag::Auxiliary);
    std::vector<double> zs(draws);
    for (auto& z : zs) z = sample_stable(spec, 1.0, rng);
    double worst = 0.0;
    for (double th : thetas) {
        CompensatedSum re, im;
        for (double z : zs) {
            re += std::cos(th * z);
            im += std::sin(th * z);
        }
        const double n = static_cast<double>(draws);
        const double exact = std::exp(-spec.a1 * std::pow(std::abs(th), spec.beta));
        worst = std::max(worst, std::hypot(re.value() / n - exact, im.value() / n));
    }
    return worst;
}

/// Fast subset of the acceptance checks.
inline ValidationReport validate_suite(std::uint64_t seed, const ValidationOptions& opt = {}) {
    ValidationReport report;
    auto add = [&](std::string name, bool ok, std::string detail) {
        report.checks.push_back({std::move(name), ok, std::move(detail)});
    };

    // Oracle equivalence at n = 6.
    {
        const Environment env(Alternating{}, Constant{0.5}, seed);
        const std::int64_t n = 6;
        const ExactDistribution exact = exact_distribution(materialize(env, -n, n), n);
        const double tv_direct = total_variation(
            exact, direct_endpoint_counts(env, n, opt.replicas, seed, opt.threads),
            static_cast<std::int64_t>(opt.replicas));
        const double tv_embedded = total_variation(
            exact, embedded_endpoint_counts(env, n, opt.replicas, seed + 1, opt.threads),
            static_cast<std::int64_t>(opt.replicas));
        add("oracle_direct_tv", tv_direct <= 0.01, fmt::format("tv={:.5f} <= 0.01", tv_direct));
        add("oracle_embedded_tv", tv_embedded <= 0.01,
            fmt::format("tv={:.5f} <= 0.01", tv_embedded));
        const ExactDistribution two = exact_distribution(materialize(env, -2, 2), 2);
        const double p00 = two.probability(0, 0);
        const double p20 = two.probability(2, 0);
        add("oracle_spot_masses",
            std::abs(p00 - 0.125) < 1e-12 && std::abs(p20 - 0.25) < 1e-12,
            fmt::format("P(M2=(0,0))={} P(M2=(2,0))={}", p00, p20));
    }

    // Sojourn moments at p = 2/3: mean 2, variance 6.
    {
        const MomentCheck m = sojourn_moments(opt.sojourn, 2.0 / 3.0, opt.replicas, seed);
        const bool ok_mean = std::abs(m.mean - 2.0) <= 3.0 * m.mean_se;
        const bool ok_var = std::abs(m.variance - 6.0) <= 3.0 * m.variance_se;
        add("sojourn_moments", ok_mean && ok_var,
            fmt::format("mean={:.4f}+-{:.4f} (2) var={:.4f}+-{:.4f} (6)", m.mean, m.mean_se,
                        m.variance, m.variance_se));
    }

    // Occupation identity.
    {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < 20; ++i) {
            Stream rng = make_stream(seed, i, StreamTag::Limit);
            const double t = 0.5 + 0.25 * static_cast<double>(i);
            const auto run = simulate_brownian_local_time(t, default_dt(t), default_bin_width(t), rng);
            worst = std::max(worst, std::abs(run.local_time.occupation() - t));
        }
        add("occupation_identity", worst <= 1e-12, fmt::format("max |h sum L - t| = {:.3e}", worst));
    }

    // Gaussian stable sampler.
    {
        const std::array<double, 4> thetas{0.25, 0.5, 1.0, 2.0};
        const double err = char_function_error({2.0, 0.5, Skew::Symmetric}, thetas, opt.replicas, seed);
        add("stable_char_function_beta2", err <= 0.01, fmt::format("max error={:.5f} <= 0.01", err));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

namespace detail {

namespace fs = std::filesystem;

class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::ofstream open(const std::string& name) {
        const fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error(fmt::format("cannot write {}", p.string()));
        files_.push_back(p.string());
        return out;
    }
    const fs::path& dir() const { return dir_; }
    const std::vector<std::string>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<std::string> files_;
};

inline std::string checkpoint_key(const ExperimentConfig& cfg, const SamplingPlan& plan) {
    return config_echo(cfg) + fmt::format("observable_effective = {}\n", to_string(plan.observable));
}

/// Samples all replica rows in index order, persisting the completed prefix
/// to `checkpoint.json` every `checkpoint_seconds` and resuming from it.
inline ReplicaTable sample_with_checkpoints(const ExperimentConfig& cfg, const SamplingPlan& plan,
                                           const fs::path& dir) {
    validate_horizons(plan.horizons);
    ReplicaTable table(cfg.replicas, plan.horizons.size());
    const fs::path ckpt = dir / "checkpoint.json";
    const std::string key = checkpoint_key(cfg, plan);
    std::size_t done = 0;
    if (fs::exists(ckpt)) {
        std::ifstream in(ckpt);
        nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
        if (!j.is_discarded() && j.value("key", "") == key) {
            const auto values = j.at("values").get<std::vector<double>>();
            done = std::min<std::size_t>(j.at("completed").get<std::size_t>(), cfg.replicas);
            std::copy_n(values.begin(), done * table.horizons, table.values.begin());
        }
    }
    auto save = [&] {
        nlohmann::json j;
        j["key"] = key;
        j["completed"] = done;
        j["values"] = std::vector<double>(table.values.begin(),
                                          table.values.begin() + static_cast<std::ptrdiff_t>(done * table.horizons));
        const fs::path tmp = dir / "checkpoint.json.tmp";
        {
            std::ofstream out(tmp);
            out << j.dump();
        }
        fs::rename(tmp, ckpt);
    };
    using clock = std::chrono::steady_clock;
    auto last = clock::now();
    const std::size_t batch = std::max<std::size_t>(64, 16 * cfg.threads);
    try {
        while (done < cfg.replicas) {
            const std::size_t end = std::min(cfg.replicas, done + batch);
            sample_replicas(plan, table, done, end, cfg.threads);
            done = end;
            if (std::chrono::duration<double>(clock::now() - last).count() >= cfg.checkpoint_seconds &&
                done < cfg.replicas) {
                save();
                last = clock::now();
            }
        }
    } catch (...) {
        save();
        throw;
    }
    std::error_code ec;
    fs::remove(ckpt, ec);
    return table;
}

inline void write_exponent(OutputSet& out, const ScalingEstimate& est) {
    auto f = out.open("exponent.csv");
    f << "slope,se,intercept\n";
    fmt::print(f, "{},{},{}\n", est.slope, est.slope_se, est.intercept);
}

}  // namespace detail

inline RunReport run_experiment(const ExperimentConfig& cfg) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    RunReport report;
    report.config_echo = config_echo(cfg);
    report.seed = cfg.seed;

    detail::OutputSet out(cfg.output_dir);
    auto finish = [&] {
        report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
        report.files = out.files();
        const auto report_path = out.dir() / "report.json";
        report.files.push_back(report_path.string());
        std::ofstream j(report_path);
        j << report.to_json().dump(2) << "\n";
    };

    auto plan_for = [&](Observable fallback) {
        return SamplingPlan{cfg.scheme, cfg.law, cfg.horizons, cfg.seed,
                            cfg.observable.value_or(fallback), cfg.mode};
    };

    try {
        switch (cfg.experiment) {
            case ExperimentKind::Simulate: {
                const Environment env(cfg.scheme, cfg.law,
                                      derive_seed(cfg.seed, 0, StreamTag::Environment));
                const std::int64_t n = cfg.horizons.back();
                if (cfg.path != "embedded") {
                    Stream rng = make_stream(cfg.seed, 0, StreamTag::Walk);
                    auto f = out.open("path_direct.csv");
                    write_csv(f, simulate_direct(env, n, rng));
                }
                if (cfg.path != "direct") {
                    Stream rng = make_stream(cfg.seed, 1, StreamTag::Walk);
                    auto f = out.open("path_embedded.csv");
                    write_csv(f, simulate_embedded(env, n, rng));
                }
                report.total_replicas = 1;
                break;
            }
            case ExperimentKind::Variance: {
                if (cfg.replicas < 2) throw ConfigError("variance: replicas must be >= 2");
                if (infinite_variance(cfg.law)) {
                    if (!cfg.force)
                        throw ConfigError("infinite variance regime; use quantile spread (or force = true)");
                    std::cerr << "warning: infinite variance regime; use quantile spread\n";
                }
                const SamplingPlan plan = plan_for(Observable::JumpX2n);
                const auto table = detail::sample_with_checkpoints(cfg, plan, out.dir());
                const auto curve = variance_curve(table, cfg.horizons);
                {
                    auto f = out.open("variance.csv");
                    f << "n,variance,se\n";
                    for (const auto& p : curve) fmt::print(f, "{},{},{}\n", p.n, p.variance, p.se);
                }
                if (curve.size() >= 3) detail::write_exponent(out, fit_variance(curve));
                report.total_replicas = cfg.replicas;
                break;
            }
            case ExperimentKind::Exponent: {
                const SamplingPlan plan = plan_for(Observable::HorizontalAtTime);
                const auto table = detail::sample_with_checkpoints(cfg, plan, out.dir());
                std::vector<ScalingPoint> pts;
                if (cfg.statistic == "sd") {
                    if (infinite_variance(cfg.law) && !cfg.force)
                        throw ConfigError("infinite variance regime; use statistic = spread");
                    auto f = out.open("sd.csv");
                    f << "n,sd,se\n";
                    for (const auto& p : variance_curve(table, cfg.horizons)) {
                        const double sd = std::sqrt(p.variance);
                        const double se = sd > 0.0 ? p.se / (2.0 * sd) : 0.0;
                        fmt::print(f, "{},{},{}\n", p.n, sd, se);
                        pts.push_back({static_cast<double>(p.n), sd, se});
                    }
                } else {
                    auto f = out.open("spread.csv");
                    f << "n,spread,se\n";
                    for (const auto& p : spread_curve(table, cfg.horizons, cfg.quantile, cfg.seed)) {
                        fmt::print(f, "{},{},{}\n", p.n, p.spread, p.se);
                        pts.push_back({static_cast<double>(p.n), p.spread, p.se});
                    }
                }
                if (pts.size() >= 3) detail::write_exponent(out, fit_exponent(std::move(pts)));
                report.total_replicas = cfg.replicas;
                break;
            }
            case ExperimentKind::Returns: {
                SamplingPlan plan = plan_for(Observable::Returns);
                plan.observable = Observable::Returns;
                const auto table = detail::sample_with_checkpoints(cfg, plan, out.dir());
                const ReturnStats stats = return_stats(table, cfg.horizons);
                auto f = out.open("returns.csv");
                f << "horizon,mean,se\n";
                for (std::size_t i = 0; i < stats.horizons.size(); ++i)
                    fmt::print(f, "{},{},{}\n", stats.horizons[i], stats.mean_returns[i],
                               stats.std_error[i]);
                report.total_replicas = cfg.replicas;
                break;
            }
            case ExperimentKind::Limit: {
                const std::int64_t n = cfg.horizons.back();
                const TheoreticalConstants c = theoretical_constants(cfg.law);
                double a1 = cfg.a1.value_or(0.0);
                if (c.beta < 2.0 && !cfg.a1) {
                    const auto* tail = std::get_if<StableTail>(&cfg.law);
                    if (!tail) throw ConfigError("limit: heavy-tailed law needs a1 = <scale>");
                    a1 = calibrate_stable_a1(*tail, 4096, 4000, cfg.seed);
                }
                const StableSpec spec = limit_stable_spec(cfg.law, a1);
                const WalkSample walk = rescaled_walk_sample(cfg.law, cfg.scheme, n, cfg.replicas,
                                                             cfg.seed, cfg.threads, cfg.t);
                const double t = cfg.t;
                const LimitSample lim = simulate_limit_sample(
                    t, spec, cfg.limit_draws, derive_seed(cfg.seed, 0, StreamTag::Limit),
                    cfg.dt.value_or(default_dt(t)), cfg.bin_width.value_or(default_bin_width(t)),
                    cfg.threads);
                {
                    auto f = out.open("walk_samples.csv");
                    f << "x,y\n";
                    for (std::size_t i = 0; i < walk.x.size(); ++i)
                        fmt::print(f, "{},{}\n", walk.x[i], walk.y[i]);
                }
                {
                    auto f = out.open("limit_samples.csv");
                    write_csv(f, lim);
                }
                const Comparison cx = compare_distributions(walk.x, lim.values);
                const Comparison cy = compare_distributions(walk.y, lim.endpoints);
                {
                    auto f = out.open("comparison.csv");
                    write_csv(f, cx);
                }
                {
                    auto f = out.open("ks.csv");
                    f << "component,ks,n_walk,n_limit\n";
                    fmt::print(f, "x,{},{},{}\n", cx.ks, walk.x.size(), lim.values.size());
                    fmt::print(f, "y,{},{},{}\n", cy.ks, walk.y.size(), lim.endpoints.size());
                }
                report.total_replicas = cfg.replicas;
                break;
            }
            case ExperimentKind::Validate: {
                ValidationOptions opt;
                opt.threads = cfg.threads;
                const ValidationReport v = validate_suite(cfg.seed, opt);
                auto f = out.open("validation.csv");
                f << "check,passed,detail\n";
                for (const auto& c : v.checks)
                    fmt::print(f, "{},{},\"{}\"\n", c.name, c.passed ? 1 : 0, c.detail);
                report.passed = v.all_passed();
                report.total_replicas = opt.replicas;
                break;
            }
        }
    } catch (const std::bad_alloc&) {
        report.error = "resource exhaustion (out of memory)";
        finish();
        throw ResourceError(report.error);
    } catch (const std::exception& e) {
        report.error = e.what();
        finish();
        throw;
    }
    finish();
    return report;
}

}  // namespace strata
