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
#include <ostream>
#include <utility>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/rng.hpp"

namespace strata {

struct WalkerState {
    std::int64_t x = 0;
    std::int64_t y = 0;
    std::int64_t t = 0;

    friend bool operator==(const WalkerState&, const WalkerState&) = default;
};

/// Outcome of one step of the direct chain.
enum class Decision : std::uint8_t { Stay, Up, Down };

/// Maps one uniform to a decision: horizontal with probability p, then up and
/// down with (1 - p)/2 each.
inline Decision decide(double p, double u) {
    if (u < p) return Decision::Stay;
    return (u - p < 0.5 * (1.0 - p)) ? Decision::Up : Decision::Down;
}

inline WalkerState apply(WalkerState s, Decision d, int epsilon) {
    switch (d) {
        case Decision::Stay: s.x += epsilon; break;
        case Decision::Up: ++s.y; break;
        case Decision::Down: --s.y; break;
    }
    ++s.t;
    return s;
}

inline WalkerState step_direct(const WalkerState& state, const Environment& env, Stream& rng) {
    const LevelRecord rec = env.level(state.y);
    return apply(state, decide(rec.p, rng.uniform()), rec.epsilon);
}

inline WalkerState step_direct(const WalkerState& state, LevelWindow& levels, Stream& rng) {
    const auto& e = levels.at(state.y);
    return apply(state, decide(e.p, rng.uniform()), e.epsilon);
}

/// Path M_0..M_n of the direct chain. If `decisions` is non-null, the
/// decision taken at each step is appended to it.
inline std::vector<WalkerState> simulate_direct(const Environment& env, std::int64_t n, Stream& rng,
                                                std::vector<Decision>* decisions = nullptr) {
    if (n < 0) throw DomainError("simulate_direct: n must be >= 0");
    LevelWindow levels(env);
    std::vector<WalkerState> path;
    path.reserve(static_cast<std::size_t>(n) + 1);
    path.emplace_back();
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& e = levels.at(path.back().y);
        const Decision d = decide(e.p, rng.uniform());
        if (decisions) decisions->push_back(d);
        path.push_back(apply(path.back(), d, e.epsilon));
    }
    return path;
}

/// Streaming direct walker: O(1) state plus the visited-level window.
class DirectWalker {
public:
    explicit DirectWalker(const Environment& env) : levels_(env), current_(levels_.at(0)) {}

    const WalkerState& state() const { return state_; }

    void step(Stream& rng) {
        const Decision d = decide(current_.p, rng.uniform());
        state_ = apply(state_, d, current_.epsilon);
        if (d != Decision::Stay) current_ = levels_.at(state_.y);
    }

private:
    LevelWindow levels_;
    LevelWindow::Entry current_;  // copy: window growth invalidates references
    WalkerState state_{};
};

// ---------------------------------------------------------------------------
// Sojourns and the embedded chain
// ---------------------------------------------------------------------------

/// Below this p the sojourn is drawn by explicit Bernoulli trials.
inline constexpr double kTrialThreshold = 0.1;

namespace detail {

inline std::int64_t sojourn_from_log(double log_p, Stream& rng) {
    return static_cast<std::int64_t>(std::floor(std::log(rng.uniform()) / log_p));
}

inline std::int64_t sojourn_by_trials(double p, Stream& rng) {
    std::int64_t m = 0;
    while (rng.uniform() < p) ++m;
    return m;
}

inline std::int64_t sojourn(double p, double log_p, Stream& rng) {
    return p > kTrialThreshold ? sojourn_from_log(log_p, rng) : sojourn_by_trials(p, rng);
}

}  // namespace detail

/// Geometric sample on {0, 1, ...}: P(xi = m) = (1 - p) p^m.
inline std::int64_t sample_sojourn(double p, Stream& rng) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError(fmt::format("sample_sojourn: p = {} outside (0,1)", p));
    return detail::sojourn(p, std::log(p), rng);
}

/// The walk observed at its vertical-jump times.
struct EmbeddedPath {
    std::vector<Level> S{0};
    std::vector<std::int64_t> xi;
    std::vector<std::int64_t> X{0};
    std::vector<std::int64_t> T{0};

    std::size_t jumps() const { return xi.size(); }
};

inline EmbeddedPath simulate_embedded(const Environment& env, std::int64_t jumps, Stream& rng) {
    if (jumps < 0) throw DomainError("simulate_embedded: jumps must be >= 0");
    LevelWindow levels(env);
    EmbeddedPath path;
    const auto n = static_cast<std::size_t>(jumps);
    path.S.reserve(n + 1);
    path.xi.reserve(n);
    path.X.reserve(n + 1);
    path.T.reserve(n + 1);
    for (std::size_t k = 0; k < n; ++k) {
        const Level s = path.S.back();
        const auto& e = levels.at(s);
        const std::int64_t xi = detail::sojourn(e.p, e.log_p, rng);
        path.xi.push_back(xi);
        path.X.push_back(path.X.back() + e.epsilon * xi);
        path.T.push_back(path.T.back() + xi + 1);
        path.S.push_back(s + ((rng() >> 63) ? 1 : -1));
    }
    return path;
}

/// Replays a decision stream from the direct chain as the embedded chain.
/// Only completed sojourns (those ending in a vertical move) are kept.
inline EmbeddedPath embed_decisions(const Environment& env, const std::vector<Decision>& decisions) {
    LevelWindow levels(env);
    EmbeddedPath path;
    std::int64_t run = 0;
    for (const Decision d : decisions) {
        if (d == Decision::Stay) {
            ++run;
            continue;
        }
        const Level s = path.S.back();
        path.xi.push_back(run);
        path.X.push_back(path.X.back() + levels.at(s).epsilon * run);
        path.T.push_back(path.T.back() + run + 1);
        path.S.push_back(s + (d == Decision::Up ? 1 : -1));
        run = 0;
    }
    return path;
}

/// Position M_n reconstructed from an embedded path: with k = max{k : T_k <= n}
/// the walker is on level S_k, n - T_k steps into its horizontal sojourn.
inline std::pair<std::int64_t, std::int64_t> position_at_time(const EmbeddedPath& path,
                                                              const Environment& env,
                                                              std::int64_t n) {
    if (n < 0 || n > path.T.back())
        throw RangeError(fmt::format("position_at_time: n = {} beyond path horizon {}", n,
                                     path.T.back()));
    const auto it = std::upper_bound(path.T.begin(), path.T.end(), n);
    const auto k = static_cast<std::size_t>(std::distance(path.T.begin(), it) - 1);
    const int eps = env.level(path.S[k]).epsilon;
    return {path.X[k] + eps * (n - path.T[k]), path.S[k]};
}

/// Streaming embedded walker. Retains (S_k, X_k, T_k) only; used by the
/// estimators that consume endpoints.
class EmbeddedWalker {
public:
    explicit EmbeddedWalker(const Environment& env) : levels_(env) {}

    Level level() const { return S_; }
    std::int64_t x() const { return X_; }
    std::int64_t time() const { return T_; }
    std::int64_t jumps() const { return k_; }
    LevelWindow& levels() { return levels_; }

    struct Sojourn {
        Level level;
        int epsilon;
        double v;
        std::int64_t xi;
        std::int64_t x_start;
        std::int64_t t_start;
    };

    /// Performs the sojourn on the current level and the vertical jump that
    /// ends it.
    Sojourn advance(Stream& rng) {
        const auto& e = levels_.at(S_);
        const std::int64_t xi = detail::sojourn(e.p, e.log_p, rng);
        Sojourn out{S_, e.epsilon, e.v, xi, X_, T_};
        X_ += e.epsilon * xi;
        T_ += xi + 1;
        S_ += (rng() >> 63) ? 1 : -1;
        ++k_;
        return out;
    }

private:
    LevelWindow levels_;
    Level S_ = 0;
    std::int64_t X_ = 0;
    std::int64_t T_ = 0;
    std::int64_t k_ = 0;
};

// ---------------------------------------------------------------------------
// Exact distribution by forward dynamic programming
// ---------------------------------------------------------------------------

/// Explicit (eps_y, p_y) for a finite band of levels.
struct FiniteEnvironment {
    std::map<Level, LevelRecord> levels;

    const LevelRecord& at(Level y) const {
        auto it = levels.find(y);
        if (it == levels.end())
            throw DomainError(fmt::format("finite environment has no level {}", y));
        return it->second;
    }
};

inline FiniteEnvironment materialize(const Environment& env, Level lo, Level hi) {
    FiniteEnvironment out;
    for (Level y = lo; y <= hi; ++y) out.levels.emplace(y, env.level(y));
    return out;
}

struct ExactDistribution {
    std::int64_t horizon = 0;
    std::map<std::pair<std::int64_t, std::int64_t>, double> mass;

    double probability(std::int64_t x, std::int64_t y) const {
        auto it = mass.find({x, y});
        return it == mass.end() ? 0.0 : it->second;
    }
};

inline constexpr std::int64_t kExactMaxHorizon = 20;

inline ExactDistribution exact_distribution(const FiniteEnvironment& env, std::int64_t n) {
    if (n < 0) throw DomainError("exact_distribution: n must be >= 0");
    if (n > kExactMaxHorizon)
        throw ResourceError(
            fmt::format("exact_distribution: n = {} exceeds limit {}", n, kExactMaxHorizon));
    const std::int64_t w = 2 * n + 1;
    auto idx = [&](std::int64_t x, std::int64_t y) {
        return static_cast<std::size_t>((y + n) * w + (x + n));
    };
    std::vector<double> cur(static_cast<std::size_t>(w * w), 0.0);
    std::vector<double> next(cur.size(), 0.0);
    cur[idx(0, 0)] = 1.0;
    for (std::int64_t step = 0; step < n; ++step) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::int64_t y = -step; y <= step; ++y) {
            const LevelRecord& rec = env.at(y);
            const double vert = 0.5 * (1.0 - rec.p);
            for (std::int64_t x = -step; x <= step; ++x) {
                const double m = cur[idx(x, y)];
                if (m == 0.0) continue;
                next[idx(x + rec.epsilon, y)] += m * rec.p;
                next[idx(x, y + 1)] += m * vert;
                next[idx(x, y - 1)] += m * vert;
            }
        }
        std::swap(cur, next);
    }
    ExactDistribution out;
    out.horizon = n;
    for (std::int64_t y = -n; y <= n; ++y)
        for (std::int64_t x = -n; x <= n; ++x)
            if (const double m = cur[idx(x, y)]; m > 0.0) out.mass[{x, y}] = m;
    return out;
}

/// Total variation between an exact law and empirical counts over `total`
/// samples.
inline double total_variation(const ExactDistribution& exact,
                              const std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t>& counts,
                              std::int64_t total) {
    double tv = 0.0;
    for (const auto& [key, m] : exact.mass) {
        auto it = counts.find(key);
        const double emp = it == counts.end() ? 0.0 : static_cast<double>(it->second) / total;
        tv += std::abs(m - emp);
    }
    for (const auto& [key, c] : counts)
        if (!exact.mass.contains(key)) tv += static_cast<double>(c) / total;
    return 0.5 * tv;
}

// ---------------------------------------------------------------------------
// Path dumps
// ---------------------------------------------------------------------------

inline void write_csv(std::ostream& out, const std::vector<WalkerState>& path) {
    out << "step,x,y\n";
    for (const auto& s : path) fmt::print(out, "{},{},{}\n", s.t, s.x, s.y);
}

inline void write_csv(std::ostream& out, const EmbeddedPath& path) {
    out << "k,S,xi,X,T\n";
    for (std::size_t k = 0; k < path.S.size(); ++k) {
        if (k < path.xi.size())
            fmt::print(out, "{},{},{},{},{}\n", k, path.S[k], path.xi[k], path.X[k], path.T[k]);
        else
            fmt::print(out, "{},{},,{},{}\n", k, path.S[k], path.X[k], path.T[k]);
    }
}

}  // namespace strata
