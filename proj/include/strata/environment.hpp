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
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "strata/error.hpp"
#include "strata/rng.hpp"

namespace strata {

using Level = std::int64_t;

// ---------------------------------------------------------------------------
// Orientation schemes
// ---------------------------------------------------------------------------

/// eps_y = (-1)^y, so eps_0 = +1.
struct Alternating {};

/// eps_y iid uniform on {-1, +1}, independent of the stay probabilities.
struct IidRademacher {};

/// Explicit signs for a finite set of levels. Other levels are outside the
/// domain of the environment.
struct Fixed {
    std::map<Level, int> signs;
};

using OrientationScheme = std::variant<Alternating, IidRademacher, Fixed>;

// ---------------------------------------------------------------------------
// Stay-probability laws
// ---------------------------------------------------------------------------

struct Constant {
    double p = 0.5;
};

/// p = p_hi with probability w, p_lo otherwise.
struct TwoPoint {
    double p_lo = 1.0 / 3.0;
    double p_hi = 2.0 / 3.0;
    double w = 0.5;
};

struct BetaLaw {
    double a = 1.0;
    double b = 3.0;
};

/// V = p/(1-p) is Pareto-tailed: V = scale * (U^{-1/beta} - 1) + offset.
struct StableTail {
    double beta = 1.5;
    double scale = 1.0;
    double offset = 0.0;
};

using StayProbLaw = std::variant<Constant, TwoPoint, BetaLaw, StableTail>;

/// Distance kept between any sampled p and the endpoints of (0, 1).
inline constexpr double kStayProbClamp = 1e-12;

inline double clamp_stay_prob(double p) {
    return std::clamp(p, kStayProbClamp, 1.0 - kStayProbClamp);
}

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline bool open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace detail

using detail::overloaded;

inline std::string to_string(const StayProbLaw& law) {
    return std::visit(
        overloaded{
            [](const Constant& c) { return fmt::format("constant({})", c.p); },
            [](const TwoPoint& t) {
                return fmt::format("twopoint({},{},{})", t.p_lo, t.p_hi, t.w);
            },
            [](const BetaLaw& b) { return fmt::format("beta({},{})", b.a, b.b); },
            [](const StableTail& s) {
                return fmt::format("stabletail({},{},{})", s.beta, s.scale, s.offset);
            },
        },
        law);
}

inline std::string to_string(const OrientationScheme& scheme) {
    return std::visit(overloaded{
                          [](const Alternating&) { return std::string("alternating"); },
                          [](const IidRademacher&) { return std::string("iid"); },
                          [](const Fixed& f) {
                              std::string out = "fixed(";
                              bool first = true;
                              for (const auto& [y, s] : f.signs) {
                                  out += fmt::format("{}{}:{}", first ? "" : ",", y,
                                                     s > 0 ? "+1" : "-1");
                                  first = false;
                              }
                              return out + ")";
                          },
                      },
                      scheme);
}

/// Throws ConfigError naming the first parameter that violates its family's
/// constraints.
inline void validate(const StayProbLaw& law) {
    std::visit(
        overloaded{
            [](const Constant& c) {
                if (!detail::open_unit(c.p))
                    throw ConfigError(fmt::format("constant: p = {} must satisfy p in (0,1)", c.p));
            },
            [](const TwoPoint& t) {
                if (!detail::open_unit(t.p_lo))
                    throw ConfigError(fmt::format("twopoint: p_lo = {} must be in (0,1)", t.p_lo));
                if (!detail::open_unit(t.p_hi))
                    throw ConfigError(fmt::format("twopoint: p_hi = {} must be in (0,1)", t.p_hi));
                if (!(t.p_lo < t.p_hi))
                    throw ConfigError("twopoint: requires p_lo < p_hi");
                if (!detail::open_unit(t.w))
                    throw ConfigError(fmt::format("twopoint: w = {} must be in (0,1)", t.w));
            },
            [](const BetaLaw& b) {
                if (!(b.a > 0.0)) throw ConfigError(fmt::format("beta: a = {} must be > 0", b.a));
                if (!(b.b > 0.0)) throw ConfigError(fmt::format("beta: b = {} must be > 0", b.b));
            },
            [](const StableTail& s) {
                if (!(s.beta > 1.0 && s.beta < 2.0))
                    throw ConfigError(
                        fmt::format("stabletail: beta = {} must be in (1,2)", s.beta));
                if (!(s.scale > 0.0))
                    throw ConfigError(fmt::format("stabletail: scale = {} must be > 0", s.scale));
                if (!(s.offset >= 0.0) || !std::isfinite(s.offset))
                    throw ConfigError(
                        fmt::format("stabletail: offset = {} must be >= 0", s.offset));
            },
        },
        law);
}

inline void validate(const OrientationScheme& scheme) {
    if (const auto* f = std::get_if<Fixed>(&scheme)) {
        for (const auto& [y, s] : f->signs)
            if (s != 1 && s != -1)
                throw ConfigError(fmt::format("fixed: sign of level {} must be +1 or -1", y));
    }
}

/// Draws p from `law` given a 128-bit block of randomness.
inline double sample_stay_prob(const StayProbLaw& law, std::array<std::uint64_t, 2> bits) {
    const double u = to_open01(bits[0]);
    const double p = std::visit(
        overloaded{
            [&](const Constant& c) { return c.p; },
            [&](const TwoPoint& t) { return u < t.w ? t.p_hi : t.p_lo; },
            [&](const BetaLaw& b) {
                Stream gen(bits[0] ^ std::rotl(bits[1], 17));
                std::gamma_distribution<double> ga(b.a, 1.0);
                std::gamma_distribution<double> gb(b.b, 1.0);
                const double x = ga(gen);
                const double y = gb(gen);
                return x / (x + y);
            },
            [&](const StableTail& s) {
                const double v = s.scale * (std::pow(u, -1.0 / s.beta) - 1.0) + s.offset;
                return v / (1.0 + v);
            },
        },
        law);
    return clamp_stay_prob(p);
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

struct LevelRecord {
    Level y = 0;
    int epsilon = 1;
    double p = 0.5;

    friend bool operator==(const LevelRecord&, const LevelRecord&) = default;
};

/// A random environment over Z. level(y) is a pure function of
/// (scheme, law, master_seed, y); records are memoized in a thread-safe cache.
class Environment {
public:
    Environment(OrientationScheme scheme, StayProbLaw law, std::uint64_t master_seed,
                std::optional<std::size_t> cache_cap = std::nullopt)
        : scheme_(std::move(scheme)),
          law_(law),
          seed_(master_seed),
          cache_cap_(cache_cap),
          cache_(std::make_shared<Cache>()) {
        validate(law_);
        validate(scheme_);
    }

    const OrientationScheme& scheme() const { return scheme_; }
    const StayProbLaw& law() const { return law_; }
    std::uint64_t master_seed() const { return seed_; }

    /// Computes the record without touching the cache.
    LevelRecord generate(Level y) const {
        LevelRecord rec;
        rec.y = y;
        rec.epsilon = orientation(y);
        rec.p = sample_stay_prob(
            law_, keyed_bits(seed_, static_cast<std::uint64_t>(y),
                             static_cast<std::uint64_t>(StreamTag::StayProb)));
        return rec;
    }

    LevelRecord level(Level y) const {
        {
            std::shared_lock lock(cache_->mutex);
            if (auto it = cache_->records.find(y); it != cache_->records.end()) return it->second;
        }
        const LevelRecord rec = generate(y);
        std::unique_lock lock(cache_->mutex);
        if (cache_cap_ && cache_->records.size() >= *cache_cap_) return rec;
        cache_->records.emplace(y, rec);
        return rec;
    }

    std::size_t cached_levels() const {
        std::shared_lock lock(cache_->mutex);
        return cache_->records.size();
    }

private:
    int orientation(Level y) const {
        return std::visit(
            overloaded{
                [&](const Alternating&) { return (y % 2 == 0) ? 1 : -1; },
                [&](const IidRademacher&) {
                    const auto bits = keyed_bits(seed_, static_cast<std::uint64_t>(y),
                                                 static_cast<std::uint64_t>(StreamTag::Orientation));
                    return (bits[0] >> 63) ? 1 : -1;
                },
                [&](const Fixed& f) {
                    auto it = f.signs.find(y);
                    if (it == f.signs.end())
                        throw DomainError(fmt::format("level {} not in fixed scheme", y));
                    return it->second;
                },
            },
            scheme_);
    }

    struct Cache {
        mutable std::shared_mutex mutex;
        std::unordered_map<Level, LevelRecord> records;
    };

    OrientationScheme scheme_;
    StayProbLaw law_;
    std::uint64_t seed_;
    std::optional<std::size_t> cache_cap_;
    std::shared_ptr<Cache> cache_;
};

inline Environment make_environment(OrientationScheme scheme, StayProbLaw law,
                                    std::uint64_t master_seed) {
    return Environment(std::move(scheme), law, master_seed);
}

/// Dense single-threaded view of an environment over a growing window of
/// levels. Simulators use this in their inner loops instead of the shared
/// cache.
class LevelWindow {
public:
    struct Entry {
        double p = 0.0;
        double log_p = 0.0;
        double v = 0.0;  // p / (1 - p)
        int epsilon = 0;
        bool ready = false;
    };

    explicit LevelWindow(const Environment& env, Level half_width = 32)
        : env_(&env), lo_(-half_width), entries_(static_cast<std::size_t>(2 * half_width + 1)) {}

    const Entry& at(Level y) {
        if (y < lo_ || y >= lo_ + static_cast<Level>(entries_.size())) grow(y);
        Entry& e = entries_[static_cast<std::size_t>(y - lo_)];
        if (!e.ready) fill(e, y);
        return e;
    }

    const Environment& environment() const { return *env_; }

private:
    void fill(Entry& e, Level y) {
        const LevelRecord rec = env_->generate(y);
        e.p = rec.p;
        e.log_p = std::log(rec.p);
        e.v = rec.p / (1.0 - rec.p);
        e.epsilon = rec.epsilon;
        e.ready = true;
    }

    void grow(Level y) {
        const Level size = static_cast<Level>(entries_.size());
        Level new_lo = lo_;
        Level new_size = size;
        while (y < new_lo || y >= new_lo + new_size) {
            new_lo -= new_size / 2;
            new_size *= 2;
        }
        std::vector<Entry> next(static_cast<std::size_t>(new_size));
        std::copy(entries_.begin(), entries_.end(), next.begin() + (lo_ - new_lo));
        entries_ = std::move(next);
        lo_ = new_lo;
    }

    const Environment* env_;
    Level lo_;
    std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Theoretical constants of the scaling limit
// ---------------------------------------------------------------------------

struct TheoreticalConstants {
    double beta = 2.0;     // stability index of p/(1-p) - E[p/(1-p)]
    double delta = 0.75;   // horizontal scaling exponent
    double gamma = 2.0;    // 1 + E[p/(1-p)]
    double sigma_a = 0.0;  // alternating orientations
    double sigma_b = 1.0;  // iid centred orientations
    double mean_v = 1.0;   // E[p/(1-p)]
};

constexpr double scaling_exponent(double beta) { return 0.5 + 0.5 / beta; }

inline TheoreticalConstants theoretical_constants(const StayProbLaw& law) {
    validate(law);
    auto finite_variance = [](double mean_v, double second_moment) {
        TheoreticalConstants c;
        c.beta = 2.0;
        c.delta = scaling_exponent(2.0);
        c.mean_v = mean_v;
        c.gamma = 1.0 + mean_v;
        c.sigma_a = std::sqrt(std::max(0.0, second_moment - mean_v * mean_v));
        c.sigma_b = std::sqrt(second_moment);
        return c;
    };
    auto heavy_tail = [](double beta, double mean_v) {
        TheoreticalConstants c;
        c.beta = beta;
        c.delta = scaling_exponent(beta);
        c.mean_v = mean_v;
        c.gamma = 1.0 + mean_v;
        c.sigma_a = 1.0;
        c.sigma_b = 1.0;
        return c;
    };
    return std::visit(
        overloaded{
            [&](const Constant& c) {
                const double v = c.p / (1.0 - c.p);
                return finite_variance(v, v * v);
            },
            [&](const TwoPoint& t) {
                const double vl = t.p_lo / (1.0 - t.p_lo);
                const double vh = t.p_hi / (1.0 - t.p_hi);
                return finite_variance((1.0 - t.w) * vl + t.w * vh,
                                       (1.0 - t.w) * vl * vl + t.w * vh * vh);
            },
            [&](const BetaLaw& b) {
                // p ~ Beta(a,b) makes p/(1-p) beta-prime(a,b): P(V > x) ~ c x^{-b}.
                if (b.b <= 1.0) throw DomainError("gamma undefined for this law");
                const double mean_v = b.a / (b.b - 1.0);
                if (b.b > 2.0)
                    return finite_variance(mean_v,
                                           b.a * (b.a + 1.0) / ((b.b - 1.0) * (b.b - 2.0)));
                if (b.b == 2.0)
                    throw DomainError(
                        "beta(a,2): p/(1-p) is not in a normal domain of attraction");
                return heavy_tail(b.b, mean_v);
            },
            [&](const StableTail& s) {
                return heavy_tail(s.beta, s.scale / (s.beta - 1.0) + s.offset);
            },
        },
        law);
}

}  // namespace strata
