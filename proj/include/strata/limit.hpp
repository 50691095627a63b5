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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/estimators.hpp"
#include "strata/parallel.hpp"
#include "strata/rng.hpp"
#include "strata/stats.hpp"

namespace strata {

// ---------------------------------------------------------------------------
// Stable increments
// ---------------------------------------------------------------------------

enum class Skew { Symmetric, TotallySkewed };

/// Stable law of index beta. Symmetric: E exp(i theta Z_l) = exp(-a1 l |theta|^beta).
/// Totally skewed (right tail): exp(-a1 l |theta|^beta (1 - i sgn(theta) tan(pi beta / 2))).
/// beta = 2 is the Gaussian with variance 2 a1 per unit length.
struct StableSpec {
    double beta = 2.0;
    double a1 = 0.5;
    Skew skew = Skew::Symmetric;
};

inline void validate(const StableSpec& spec) {
    if (!(spec.beta > 1.0 && spec.beta <= 2.0))
        throw DomainError(fmt::format("stable index beta = {} outside (1,2]", spec.beta));
    if (!(spec.a1 > 0.0)) throw DomainError(fmt::format("stable scale a1 = {} must be > 0", spec.a1));
}

namespace detail {

inline double standard_normal(Stream& rng) {
    // Box-Muller; one variate per call keeps every draw a function of the
    // stream position alone.
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Chambers-Mallows-Stuck with unit scale.
inline double unit_stable(double alpha, Skew skew, Stream& rng) {
    const double v = std::numbers::pi * (rng.uniform() - 0.5);
    const double w = -std::log(rng.uniform());
    if (skew == Skew::Symmetric) {
        return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
               std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
    }
    const double tan_term = std::tan(std::numbers::pi * alpha / 2.0);
    const double b = std::atan(tan_term) / alpha;
    const double s = std::pow(1.0 + tan_term * tan_term, 1.0 / (2.0 * alpha));
    return s * std::sin(alpha * (v + b)) / std::pow(std::cos(v), 1.0 / alpha) *
           std::pow(std::cos(v - alpha * (v + b)) / w, (1.0 - alpha) / alpha);
}

}  // namespace detail

/// One increment of Z over an interval of length `length`.
inline double sample_stable(const StableSpec& spec, double length, Stream& rng) {
    validate(spec);
    if (!(length > 0.0)) throw DomainError("sample_stable: length must be > 0");
    if (spec.beta == 2.0) return std::sqrt(2.0 * spec.a1 * length) * detail::standard_normal(rng);
    return std::pow(spec.a1 * length, 1.0 / spec.beta) *
           detail::unit_stable(spec.beta, spec.skew, rng);
}

// ---------------------------------------------------------------------------
// Brownian local time on a grid
// ---------------------------------------------------------------------------

/// Occupation densities of B over bins [x_i - h/2, x_i + h/2), x_i = i h.
struct GridLocalTime {
    double t = 0.0;
    double bin_width = 0.0;
    std::int64_t first_bin = 0;  // index i of bins[0]
    std::vector<double> bins;

    double center(std::size_t k) const {
        return static_cast<double>(first_bin + static_cast<std::int64_t>(k)) * bin_width;
    }
    double at(std::int64_t i) const {
        const std::int64_t k = i - first_bin;
        return (k < 0 || k >= static_cast<std::int64_t>(bins.size())) ? 0.0
                                                                       : bins[static_cast<std::size_t>(k)];
    }
    /// h * sum_i L_t(x_i); equals t by construction.
    double occupation() const {
        CompensatedSum s;
        for (double b : bins) s += b;
        return s.value() * bin_width;
    }
};

struct BrownianRun {
    double endpoint = 0.0;
    GridLocalTime local_time;
};

inline std::int64_t step_count(double t, double dt) {
    if (!(t >= 0.0)) throw DomainError("time horizon must be >= 0");
    if (!(dt > 0.0)) throw DomainError("dt must be > 0");
    const double ratio = t / dt;
    const double steps = std::round(ratio);
    if (std::abs(ratio - steps) > 1e-9 * std::max(1.0, ratio))
        throw DomainError(fmt::format("t / dt = {} is not an integer", ratio));
    return static_cast<std::int64_t>(steps);
}

/// Euler path of B with N(0, dt) increments; each step credits dt to the bin
/// holding the current position.
inline BrownianRun simulate_brownian_local_time(double t, double dt, double h, Stream& rng) {
    if (!(h > 0.0)) throw DomainError("bin width must be > 0");
    const std::int64_t steps = step_count(t, dt);
    BrownianRun run;
    run.local_time.t = t;
    run.local_time.bin_width = h;
    if (steps == 0) return run;
    dt = t / static_cast<double>(steps);

    const double sd = std::sqrt(dt);
    const double inv_h = 1.0 / h;
    std::int64_t first = -64;
    std::vector<std::int64_t> counts(129, 0);
    double b = 0.0;
    for (std::int64_t k = 0; k < steps; ++k) {
        const auto i = static_cast<std::int64_t>(std::floor(b * inv_h + 0.5));
        if (i < first || i >= first + static_cast<std::int64_t>(counts.size())) {
            const std::int64_t lo = std::min(first, i - 32);
            const std::int64_t hi =
                std::max(first + static_cast<std::int64_t>(counts.size()), i + 33);
            std::vector<std::int64_t> grown(static_cast<std::size_t>(hi - lo), 0);
            std::copy(counts.begin(), counts.end(), grown.begin() + (first - lo));
            counts = std::move(grown);
            first = lo;
        }
        ++counts[static_cast<std::size_t>(i - first)];
        b += sd * detail::standard_normal(rng);
    }
    // Trim to the visited range.
    std::size_t lo = 0, hi = counts.size();
    while (lo < hi && counts[lo] == 0) ++lo;
    while (hi > lo && counts[hi - 1] == 0) --hi;
    run.local_time.first_bin = first + static_cast<std::int64_t>(lo);
    run.local_time.bins.resize(hi - lo);
    for (std::size_t k = lo; k < hi; ++k)
        run.local_time.bins[k - lo] = static_cast<double>(counts[k]) * dt / h;
    run.endpoint = b;
    return run;
}

// ---------------------------------------------------------------------------
// Delta_t = int L_t(x) dZ_x
// ---------------------------------------------------------------------------

/// sum_i L_t(x_i) * dZ_i for given per-bin increments of Z.
inline double integrate_local_time(const GridLocalTime& lt, std::span<const double> dz) {
    if (dz.size() != lt.bins.size()) throw DomainError("increment count must match bin count");
    CompensatedSum s;
    for (std::size_t i = 0; i < dz.size(); ++i) s += lt.bins[i] * dz[i];
    return s.value();
}

struct DeltaDraw {
    double delta = 0.0;
    double endpoint = 0.0;
};

/// One draw of (Delta_t, B_t); Z is sampled independently of B on the bins
/// B visited.
inline DeltaDraw simulate_delta(double t, const StableSpec& spec, double dt, double h, Stream& rng) {
    validate(spec);
    const BrownianRun run = simulate_brownian_local_time(t, dt, h, rng);
    std::vector<double> dz(run.local_time.bins.size());
    for (auto& z : dz) z = sample_stable(spec, h, rng);
    return {integrate_local_time(run.local_time, dz), run.endpoint};
}

struct LimitSample {
    double t = 1.0;
    std::vector<double> values;     // Delta_t
    std::vector<double> endpoints;  // B_t, paired with values
    StableSpec spec;
    double dt = 0.0;
    double bin_width = 0.0;
    std::uint64_t seed = 0;
};

inline double default_dt(double t) { return 1e-4 * t; }
inline double default_bin_width(double t) { return 0.02 * std::sqrt(t); }

inline LimitSample simulate_limit_sample(double t, const StableSpec& spec, std::size_t draws,
                                         std::uint64_t seed, double dt, double h,
                                         unsigned threads = default_threads()) {
    LimitSample out;
    out.t = t;
    out.spec = spec;
    out.dt = dt;
    out.bin_width = h;
    out.seed = seed;
    out.values.resize(draws);
    out.endpoints.resize(draws);
    parallel_for(0, draws, threads, [&](std::size_t i) {
        Stream rng = make_stream(seed, i, StreamTag::Limit);
        const DeltaDraw d = simulate_delta(t, spec, dt, h, rng);
        out.values[i] = d.delta;
        out.endpoints[i] = d.endpoint;
    });
    return out;
}

inline void write_csv(std::ostream& out, const LimitSample& s) {
    fmt::print(out, "# beta={},a1={},t={},dt={},h={},seed={}\n", s.spec.beta, s.spec.a1, s.t, s.dt,
               s.bin_width, s.seed);
    out << "delta,endpoint\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        fmt::print(out, "{},{}\n", s.values[i], s.endpoints[i]);
}

// ---------------------------------------------------------------------------
// Distribution comparison
// ---------------------------------------------------------------------------

inline constexpr std::array<double, 7> kReportQuantiles{0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};

struct QuantileRow {
    double level;
    double a;
    double b;
};

struct Comparison {
    double ks = 0.0;
    std::vector<QuantileRow> quantiles;
};

/// Two-sample Kolmogorov-Smirnov distance sup_x |F_a(x) - F_b(x)|.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw DomainError("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] == x) ++i;
        while (j < b.size() && b[j] == x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

inline Comparison compare_distributions(std::span<const double> a, std::span<const double> b) {
    Comparison out;
    out.ks = ks_statistic({a.begin(), a.end()}, {b.begin(), b.end()});
    for (double q : kReportQuantiles) out.quantiles.push_back({q, quantile(a, q), quantile(b, q)});
    return out;
}

inline void write_csv(std::ostream& out, const Comparison& c) {
    out << "quantile,walk,limit\n";
    for (const auto& r : c.quantiles) fmt::print(out, "{},{},{}\n", r.level, r.a, r.b);
}

// ---------------------------------------------------------------------------
// Rescaled walk samples
// ---------------------------------------------------------------------------

struct WalkSample {
    std::vector<double> x;
    std::vector<double> y;
};

/// Raw (M_n^(1), M_n^(2)) over independent annealed replicas.
inline WalkSample sample_walk_at_time(const StayProbLaw& law, const OrientationScheme& scheme,
                                      std::int64_t n, std::size_t replicas, std::uint64_t seed,
                                      unsigned threads = default_threads()) {
    const SamplingPlan plan{scheme, law, {n}, seed, Observable::HorizontalAtTime,
                            SamplingMode::Annealed};
    WalkSample out;
    out.x.resize(replicas);
    out.y.resize(replicas);
    const std::array<std::int64_t, 1> times{n};
    parallel_for(0, replicas, threads, [&](std::size_t r) {
        const Environment env = replica_environment(plan, r);
        Stream rng = make_stream(seed, r, StreamTag::Walk);
        EmbeddedWalker walker(env);
        record_time_positions(walker, times, rng, {&out.x[r], 1}, {&out.y[r], 1});
    });
    return out;
}

/// The sigma multiplying Delta in the horizontal limit for this scheme.
inline double limit_sigma(const TheoreticalConstants& c, const OrientationScheme& scheme) {
    if (std::holds_alternative<Alternating>(scheme)) return c.sigma_a;
    if (std::holds_alternative<IidRademacher>(scheme)) return c.sigma_b;
    throw ConfigError("limit comparison requires alternating or iid orientations");
}

/// x = n^{-delta} M_m^(1) / (gamma^{-delta} sigma) and y = n^{-1/2} M_m^(2) gamma^{1/2}
/// with m = floor(n t); targets Delta_t and B_t.
inline WalkSample rescaled_walk_sample(const StayProbLaw& law, const OrientationScheme& scheme,
                                       std::int64_t n, std::size_t replicas, std::uint64_t seed,
                                       unsigned threads = default_threads(), double t = 1.0) {
    const TheoreticalConstants c = theoretical_constants(law);
    const double sigma = limit_sigma(c, scheme);
    if (!(sigma > 0.0)) throw DomainError("limit degenerate; x-target is 0");
    if (!(t >= 0.0)) throw DomainError("t must be >= 0");
    const auto time = static_cast<std::int64_t>(std::floor(static_cast<double>(n) * t));
    WalkSample s = sample_walk_at_time(law, scheme, time, replicas, seed, threads);
    const double nd = static_cast<double>(n);
    const double x_scale = 1.0 / (std::pow(nd, c.delta) * std::pow(c.gamma, -c.delta) * sigma);
    const double y_scale = std::sqrt(c.gamma / nd);
    for (auto& x : s.x) x *= x_scale;
    for (auto& y : s.y) y *= y_scale;
    return s;
}

/// Median of |n^{-1/beta} sum_{k<=n} (V_k - E V)| for V = p/(1-p) under `law`.
inline double centred_sum_median(const StableTail& law, std::int64_t n, std::size_t samples,
                                 std::uint64_t seed) {
    const double mean_v = theoretical_constants(law).mean_v;
    const double norm = std::pow(static_cast<double>(n), -1.0 / law.beta);
    std::vector<double> abs_sums(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        Stream rng = make_stream(seed, i, StreamTag::Auxiliary);
        CompensatedSum s;
        for (std::int64_t k = 0; k < n; ++k)
            s += law.scale * (std::pow(rng.uniform(), -1.0 / law.beta) - 1.0) + law.offset - mean_v;
        abs_sums[i] = std::abs(s.value() * norm);
    }
    return quantile_inplace(abs_sums, 0.5);
}

/// Scale a1 of the stable law attracting p/(1-p) - E[p/(1-p)], fitted by
/// matching the median absolute centred sum against a unit-scale skewed
/// stable sample.
inline double calibrate_stable_a1(const StableTail& law, std::int64_t n = 4096,
                                  std::size_t samples = 4000, std::uint64_t seed = 1) {
    validate(StayProbLaw{law});
    const double emp = centred_sum_median(law, n, samples, seed);
    const StableSpec unit{law.beta, 1.0, Skew::TotallySkewed};
    std::vector<double> ref(200000);
    Stream rng = make_stream(seed, 0, StreamTag::Limit);
    for (auto& z : ref) z = std::abs(sample_stable(unit, 1.0, rng));
    const double ref_median = quantile_inplace(ref, 0.5);
    return std::pow(emp / ref_median, law.beta);
}

/// Symmetric stable driving Delta in the horizontal limit, normalised so that
/// the comparison divides walk samples by gamma^{-delta} sigma.
inline StableSpec limit_stable_spec(const StayProbLaw& law, double calibrated_a1 = 0.0) {
    const TheoreticalConstants c = theoretical_constants(law);
    if (c.beta == 2.0) return {2.0, 0.5, Skew::Symmetric};
    if (!(calibrated_a1 > 0.0))
        throw ConfigError("heavy-tailed limit needs a calibrated stable scale a1");
    return {c.beta, calibrated_a1, Skew::Symmetric};
}

}  // namespace strata
