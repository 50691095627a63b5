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
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/rng.hpp"
#include "strata/walk.hpp"

namespace strata {

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    CompensatedSum& operator+=(double v) {
        add(v);
        return *this;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double mean(std::span<const double> xs) {
    CompensatedSum s;
    for (double x : xs) s += x;
    return s.value() / static_cast<double>(xs.size());
}

/// Unbiased sample variance (two-pass).
inline double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw DomainError("sample_variance: need at least 2 values");
    const double m = mean(xs);
    CompensatedSum s;
    for (double x : xs) s += (x - m) * (x - m);
    return s.value() / static_cast<double>(xs.size() - 1);
}

inline double standard_error(std::span<const double> xs) {
    return std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
}

/// Quantile with linear interpolation between order statistics (type 7).
/// Reorders `xs`.
inline double quantile_inplace(std::span<double> xs, double q) {
    if (xs.empty()) throw DomainError("quantile of an empty sample");
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(lo);
    std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(lo), xs.end());
    const double a = xs[lo];
    if (frac == 0.0 || lo + 1 >= xs.size()) return a;
    const double b = *std::min_element(xs.begin() + static_cast<std::ptrdiff_t>(lo) + 1, xs.end());
    return a + frac * (b - a);
}

inline double quantile(std::span<const double> xs, double q) {
    std::vector<double> copy(xs.begin(), xs.end());
    return quantile_inplace(copy, q);
}

/// Width of the central [q, 1-q] mass.
inline double spread(std::span<const double> xs, double q) {
    if (!(q > 0.0 && q < 0.5)) throw DomainError(fmt::format("spread: q = {} outside (0, 0.5)", q));
    std::vector<double> copy(xs.begin(), xs.end());
    const double lo = quantile_inplace(copy, q);
    const double hi = quantile_inplace(copy, 1.0 - q);
    return hi - lo;
}

/// Delete-a-block jackknife standard error of the sample variance.
inline double jackknife_variance_se(std::span<const double> xs, std::size_t blocks = 100) {
    const std::size_t n = xs.size();
    blocks = std::min(blocks, n);
    if (blocks < 2) return 0.0;
    // Per-block power sums around a common shift keep the leave-one-out
    // variances numerically stable.
    const double shift = mean(xs);
    std::vector<CompensatedSum> s1(blocks), s2(blocks);
    std::vector<std::size_t> count(blocks, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t b = i * blocks / n;
        const double d = xs[i] - shift;
        s1[b] += d;
        s2[b] += d * d;
        ++count[b];
    }
    CompensatedSum t1, t2;
    for (std::size_t b = 0; b < blocks; ++b) {
        t1 += s1[b].value();
        t2 += s2[b].value();
    }
    std::vector<double> loo(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const double m = static_cast<double>(n - count[b]);
        const double a1 = t1.value() - s1[b].value();
        const double a2 = t2.value() - s2[b].value();
        loo[b] = (a2 - a1 * a1 / m) / (m - 1.0);
    }
    const double lm = mean(loo);
    CompensatedSum dev;
    for (double v : loo) dev += (v - lm) * (v - lm);
    const double nb = static_cast<double>(blocks);
    return std::sqrt((nb - 1.0) / nb * dev.value());
}

/// Bootstrap standard error of spread(xs, q).
inline double bootstrap_spread_se(std::span<const double> xs, double q, std::size_t resamples,
                                  Stream rng) {
    if (resamples < 2) return 0.0;
    const std::size_t n = xs.size();
    std::vector<double> draws(n);
    std::vector<double> stats(resamples);
    for (std::size_t r = 0; r < resamples; ++r) {
        for (std::size_t i = 0; i < n; ++i) draws[i] = xs[static_cast<std::size_t>(rng.uniform() * n)];
        const double lo = quantile_inplace(draws, q);
        const double hi = quantile_inplace(draws, 1.0 - q);
        stats[r] = hi - lo;
    }
    return std::sqrt(sample_variance(stats));
}

// ---------------------------------------------------------------------------
// Local time and the drift / martingale decomposition
// ---------------------------------------------------------------------------

struct LocalTimeProfile {
    std::int64_t m = 0;
    std::map<Level, std::int64_t> counts;

    std::int64_t at(Level y) const {
        auto it = counts.find(y);
        return it == counts.end() ? 0 : it->second;
    }
    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& [y, c] : counts) t += c;
        return t;
    }
};

/// N_m(y) = #{k < m : S_k = y}.
inline LocalTimeProfile local_time_profile(std::span<const Level> S, std::int64_t m) {
    if (m < 0 || static_cast<std::size_t>(m) > S.size())
        throw RangeError(fmt::format("local_time_profile: m = {} exceeds path length {}", m,
                                     S.size()));
    LocalTimeProfile out;
    out.m = m;
    for (std::int64_t k = 0; k < m; ++k) ++out.counts[S[static_cast<std::size_t>(k)]];
    return out;
}

/// X_m = D_m + S_bar_m, where D_m = sum_y eps_y V_y N_m(y) collects the
/// environment drift and S_bar_m = sum_k eps_{S_k} (xi_k - V_{S_k}) is the
/// centred sojourn noise (V = p / (1 - p)).
struct Decomposition {
    double D = 0.0;
    double S_bar = 0.0;
    std::int64_t X = 0;

    double residual() const { return static_cast<double>(X) - (D + S_bar); }
};

inline Decomposition decompose(const EmbeddedPath& path, const Environment& env, std::int64_t m) {
    if (m < 0 || static_cast<std::size_t>(m) > path.jumps())
        throw RangeError(fmt::format("decompose: m = {} exceeds {} jumps", m, path.jumps()));
    const LocalTimeProfile profile = local_time_profile(path.S, m);
    auto v_of = [](const LevelRecord& r) { return r.p / (1.0 - r.p); };

    CompensatedSum drift;
    for (const auto& [y, count] : profile.counts) {
        const LevelRecord rec = env.level(y);
        drift += rec.epsilon * v_of(rec) * static_cast<double>(count);
    }
    CompensatedSum noise;
    for (std::int64_t k = 0; k < m; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        const LevelRecord rec = env.level(path.S[idx]);
        noise += rec.epsilon * (static_cast<double>(path.xi[idx]) - v_of(rec));
    }
    return {drift.value(), noise.value(), path.X[static_cast<std::size_t>(m)]};
}

// ---------------------------------------------------------------------------
// Power-law fits
// ---------------------------------------------------------------------------

struct ScalingPoint {
    double n = 0.0;
    double statistic = 0.0;
    double std_error = 0.0;
};

struct ScalingEstimate {
    std::vector<ScalingPoint> points;
    double slope = 0.0;
    double slope_se = 0.0;
    double intercept = 0.0;
};

/// Ordinary least squares of log(statistic) on log(n).
inline ScalingEstimate fit_exponent(std::vector<ScalingPoint> points) {
    if (points.size() < 3) throw DomainError("fit_exponent: need at least 3 points");
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].statistic > 0.0))
            throw DomainError(fmt::format("fit_exponent: statistic {} at n = {} is not positive",
                                          points[i].statistic, points[i].n));
        if (!(points[i].n > 0.0) || (i > 0 && !(points[i].n > points[i - 1].n)))
            throw DomainError("fit_exponent: n must be positive and strictly increasing");
    }
    const double k = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : points) {
        mx += std::log(p.n);
        my += std::log(p.statistic);
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : points) {
        const double dx = std::log(p.n) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(p.statistic) - my);
    }
    ScalingEstimate out;
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
    double rss = 0.0;
    for (const auto& p : points) {
        const double r = std::log(p.statistic) - (out.intercept + out.slope * std::log(p.n));
        rss += r * r;
    }
    out.slope_se = std::sqrt(rss / (k - 2.0) / sxx);
    out.points = std::move(points);
    return out;
}

}  // namespace strata
