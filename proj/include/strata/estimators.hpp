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

#include <cmath>
#include <cstdint>
#include <iostream>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/parallel.hpp"
#include "strata/rng.hpp"
#include "strata/stats.hpp"
#include "strata/walk.hpp"

namespace strata {

/// Per-replica quantity recorded at each horizon.
enum class Observable {
    JumpX2n,          // X_{2n}: horizontal position after 2n vertical jumps
    JumpX,            // X_n
    HorizontalAtTime, // M_n^(1)
    VerticalAtTime,   // M_n^(2)
    Returns,          // #{1 <= k <= n : M_k = (0,0)}
};

inline std::string to_string(Observable o) {
    switch (o) {
        case Observable::JumpX2n: return "jump_x2n";
        case Observable::JumpX: return "jump_x";
        case Observable::HorizontalAtTime: return "horizontal";
        case Observable::VerticalAtTime: return "vertical";
        case Observable::Returns: return "returns";
    }
    return "?";
}

/// Annealed: a fresh environment per replica. Quenched: one environment,
/// independent walks.
enum class SamplingMode { Annealed, Quenched };

struct SamplingPlan {
    OrientationScheme scheme = Alternating{};
    StayProbLaw law = Constant{};
    std::vector<std::int64_t> horizons;
    std::uint64_t seed = 0;
    Observable observable = Observable::JumpX2n;
    SamplingMode mode = SamplingMode::Annealed;
};

/// Row-major replicas x horizons table of per-replica values.
struct ReplicaTable {
    std::size_t replicas = 0;
    std::size_t horizons = 0;
    std::vector<double> values;

    ReplicaTable() = default;
    ReplicaTable(std::size_t r, std::size_t h) : replicas(r), horizons(h), values(r * h, 0.0) {}

    std::span<double> row(std::size_t r) { return {values.data() + r * horizons, horizons}; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * horizons, horizons};
    }
    std::vector<double> column(std::size_t h) const {
        std::vector<double> out(replicas);
        for (std::size_t r = 0; r < replicas; ++r) out[r] = values[r * horizons + h];
        return out;
    }
};

inline void validate_horizons(std::span<const std::int64_t> horizons) {
    if (horizons.empty()) throw ConfigError("horizons must be non-empty");
    for (std::size_t i = 0; i < horizons.size(); ++i) {
        if (horizons[i] < 0) throw ConfigError("horizons must be non-negative");
        if (i > 0 && horizons[i] <= horizons[i - 1])
            throw ConfigError("horizons must be increasing");
    }
}

inline Environment replica_environment(const SamplingPlan& plan, std::uint64_t replica) {
    const std::uint64_t env_index = plan.mode == SamplingMode::Annealed ? replica : 0;
    return Environment(plan.scheme, plan.law,
                       derive_seed(plan.seed, env_index, StreamTag::Environment));
}

/// X after each of the (increasing) jump counts.
inline void record_jump_positions(EmbeddedWalker& walker, std::span<const std::int64_t> jumps,
                                  Stream& rng, std::span<double> out) {
    for (std::size_t h = 0; h < jumps.size(); ++h) {
        while (walker.jumps() < jumps[h]) walker.advance(rng);
        out[h] = static_cast<double>(walker.x());
    }
}

/// M_n at each of the (increasing) times, reconstructed from sojourns.
inline void record_time_positions(EmbeddedWalker& walker, std::span<const std::int64_t> times,
                                  Stream& rng, std::span<double> x_out, std::span<double> y_out) {
    std::size_t h = 0;
    while (h < times.size()) {
        const auto s = walker.advance(rng);
        const std::int64_t last = s.t_start + s.xi;  // final time spent on level s.level
        while (h < times.size() && times[h] <= last) {
            if (!x_out.empty())
                x_out[h] = static_cast<double>(s.x_start + s.epsilon * (times[h] - s.t_start));
            if (!y_out.empty()) y_out[h] = static_cast<double>(s.level);
            ++h;
        }
    }
}

/// Visits of the direct chain to the origin at times 1..horizon.
inline void record_returns(DirectWalker& walker, std::span<const std::int64_t> horizons,
                           Stream& rng, std::span<double> out) {
    std::int64_t visits = 0;
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        while (walker.state().t < horizons[h]) {
            walker.step(rng);
            const auto& s = walker.state();
            visits += (s.x == 0 && s.y == 0);
        }
        out[h] = static_cast<double>(visits);
    }
}

inline void sample_replica(const SamplingPlan& plan, std::uint64_t replica, std::span<double> out) {
    const Environment env = replica_environment(plan, replica);
    Stream rng = make_stream(plan.seed, replica, StreamTag::Walk);
    switch (plan.observable) {
        case Observable::JumpX2n: {
            std::vector<std::int64_t> jumps(plan.horizons.size());
            for (std::size_t h = 0; h < jumps.size(); ++h) jumps[h] = 2 * plan.horizons[h];
            EmbeddedWalker walker(env);
            record_jump_positions(walker, jumps, rng, out);
            break;
        }
        case Observable::JumpX: {
            EmbeddedWalker walker(env);
            record_jump_positions(walker, plan.horizons, rng, out);
            break;
        }
        case Observable::HorizontalAtTime: {
            EmbeddedWalker walker(env);
            record_time_positions(walker, plan.horizons, rng, out, {});
            break;
        }
        case Observable::VerticalAtTime: {
            EmbeddedWalker walker(env);
            record_time_positions(walker, plan.horizons, rng, {}, out);
            break;
        }
        case Observable::Returns: {
            DirectWalker walker(env);
            record_returns(walker, plan.horizons, rng, out);
            break;
        }
    }
}

/// Fills rows [begin, end) of `table`. Row r depends only on (plan, r).
inline void sample_replicas(const SamplingPlan& plan, ReplicaTable& table, std::size_t begin,
                            std::size_t end, unsigned threads) {
    parallel_for(begin, end, threads,
                 [&](std::size_t r) { sample_replica(plan, r, table.row(r)); });
}

inline ReplicaTable sample_replicas(const SamplingPlan& plan, std::size_t replicas,
                                    unsigned threads) {
    validate_horizons(plan.horizons);
    ReplicaTable table(replicas, plan.horizons.size());
    sample_replicas(plan, table, 0, replicas, threads);
    return table;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct VariancePoint {
    std::int64_t n = 0;
    double variance = 0.0;
    double se = 0.0;
};

struct SpreadPoint {
    std::int64_t n = 0;
    double spread = 0.0;
    double se = 0.0;
};

struct ReturnStats {
    std::vector<std::int64_t> horizons;
    std::vector<double> mean_returns;
    std::vector<double> std_error;
};

inline std::vector<VariancePoint> variance_curve(const ReplicaTable& table,
                                                 std::span<const std::int64_t> horizons,
                                                 std::size_t jackknife_blocks = 100) {
    std::vector<VariancePoint> out;
    for (std::size_t h = 0; h < table.horizons; ++h) {
        const auto col = table.column(h);
        out.push_back({horizons[h], sample_variance(col), jackknife_variance_se(col, jackknife_blocks)});
    }
    return out;
}

inline std::vector<SpreadPoint> spread_curve(const ReplicaTable& table,
                                             std::span<const std::int64_t> horizons, double q,
                                             std::uint64_t seed, std::size_t resamples = 1000) {
    std::vector<SpreadPoint> out;
    for (std::size_t h = 0; h < table.horizons; ++h) {
        const auto col = table.column(h);
        out.push_back({horizons[h], spread(col, q),
                       bootstrap_spread_se(col, q, resamples,
                                           make_stream(seed, h, StreamTag::Bootstrap))});
    }
    return out;
}

inline ReturnStats return_stats(const ReplicaTable& table, std::span<const std::int64_t> horizons) {
    ReturnStats out;
    for (std::size_t h = 0; h < table.horizons; ++h) {
        const auto col = table.column(h);
        out.horizons.push_back(horizons[h]);
        out.mean_returns.push_back(mean(col));
        out.std_error.push_back(col.size() > 1 ? standard_error(col) : 0.0);
    }
    return out;
}

inline ScalingEstimate fit_variance(const std::vector<VariancePoint>& curve) {
    std::vector<ScalingPoint> pts;
    for (const auto& p : curve) pts.push_back({static_cast<double>(p.n), p.variance, p.se});
    return fit_exponent(std::move(pts));
}

inline ScalingEstimate fit_spread(const std::vector<SpreadPoint>& curve) {
    std::vector<ScalingPoint> pts;
    for (const auto& p : curve) pts.push_back({static_cast<double>(p.n), p.spread, p.se});
    return fit_exponent(std::move(pts));
}

// ---------------------------------------------------------------------------
// One-call estimators
// ---------------------------------------------------------------------------

struct EstimatorOptions {
    Observable observable = Observable::JumpX2n;
    SamplingMode mode = SamplingMode::Annealed;
    unsigned threads = default_threads();
    bool force = false;  // permit variance estimates in the infinite-variance regime
};

inline bool infinite_variance(const StayProbLaw& law) {
    return theoretical_constants(law).beta < 2.0;
}

/// Sample variance of the observable (X_{2n} by default) at each horizon n,
/// with delete-a-block jackknife standard errors.
inline std::vector<VariancePoint> estimate_variance(const StayProbLaw& law,
                                                    const OrientationScheme& scheme,
                                                    const std::vector<std::int64_t>& horizons,
                                                    std::size_t replicas, std::uint64_t seed,
                                                    const EstimatorOptions& opt = {}) {
    if (replicas < 2) throw ConfigError("estimate_variance: replicas must be >= 2");
    if (infinite_variance(law)) {
        if (!opt.force) throw DomainError("infinite variance regime; use quantile spread");
        std::cerr << "warning: infinite variance regime; use quantile spread\n";
    }
    const SamplingPlan plan{scheme, law, horizons, seed, opt.observable, opt.mode};
    return variance_curve(sample_replicas(plan, replicas, opt.threads), horizons);
}

/// Inter-quantile range [q, 1-q] of the observable (M_n^(1) by default) with
/// bootstrap standard errors.
inline std::vector<SpreadPoint> quantile_spread(const StayProbLaw& law,
                                                const OrientationScheme& scheme,
                                                const std::vector<std::int64_t>& horizons,
                                                std::size_t replicas, std::uint64_t seed, double q,
                                                EstimatorOptions opt = {Observable::HorizontalAtTime}) {
    if (!(q > 0.0 && q < 0.5)) throw ConfigError("quantile_spread: q must be in (0, 0.5)");
    if (replicas < 100) throw ConfigError("quantile_spread: replicas must be >= 100");
    const SamplingPlan plan{scheme, law, horizons, seed, opt.observable, opt.mode};
    return spread_curve(sample_replicas(plan, replicas, opt.threads), horizons, q, seed);
}

/// Mean number of visits to the origin at times 1..horizon, per horizon.
inline ReturnStats count_returns(const StayProbLaw& law, const OrientationScheme& scheme,
                                 const std::vector<std::int64_t>& horizons, std::size_t replicas,
                                 std::uint64_t seed, unsigned threads = default_threads()) {
    const SamplingPlan plan{scheme, law, horizons, seed, Observable::Returns,
                            SamplingMode::Annealed};
    return return_stats(sample_replicas(plan, replicas, threads), horizons);
}

}  // namespace strata
