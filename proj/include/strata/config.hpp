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
#include <cctype>
#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "strata/environment.hpp"
#include "strata/error.hpp"
#include "strata/estimators.hpp"
#include "strata/parallel.hpp"

namespace strata {

enum class ExperimentKind { Simulate, Variance, Exponent, Returns, Limit, Validate };

inline std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Simulate: return "simulate";
        case ExperimentKind::Variance: return "variance";
        case ExperimentKind::Exponent: return "exponent";
        case ExperimentKind::Returns: return "returns";
        case ExperimentKind::Limit: return "limit";
        case ExperimentKind::Validate: return "validate";
    }
    return "?";
}

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Validate;
    OrientationScheme scheme = Alternating{};
    StayProbLaw law = Constant{};
    std::vector<std::int64_t> horizons;
    std::size_t replicas = 10000;
    std::uint64_t seed = 0;
    unsigned threads = default_threads();
    std::string output_dir = "out";

    // Estimator options.
    std::optional<Observable> observable;  // experiment-specific default when unset
    SamplingMode mode = SamplingMode::Annealed;
    bool force = false;
    double quantile = 0.25;
    std::string statistic = "spread";  // exponent experiment: spread | sd
    std::string path = "both";         // simulate experiment: direct | embedded | both

    // Limit experiment.
    double t = 1.0;
    std::optional<double> dt;
    std::optional<double> bin_width;
    std::size_t limit_draws = 5000;
    std::optional<double> a1;

    double checkpoint_seconds = 60.0;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <class T>
T parse_number(std::string_view s, std::string_view what) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(fmt::format("{}: '{}' is not a valid number", what, s));
    return value;
}

// Accepts "1000000" as well as "1e6" for integer-valued keys.
inline std::int64_t parse_count(std::string_view s, std::string_view what) {
    s = trim(s);
    if (s.find_first_of("eE.") != std::string_view::npos) {
        const double v = parse_number<double>(s, what);
        if (v != std::floor(v) || std::abs(v) > 9e18)
            throw ConfigError(fmt::format("{}: '{}' is not an integer", what, s));
        return static_cast<std::int64_t>(v);
    }
    return parse_number<std::int64_t>(s, what);
}

// "name(a,b,c)" -> {name, [a,b,c]}
inline std::pair<std::string, std::vector<std::string_view>> parse_call(std::string_view s) {
    s = trim(s);
    const auto open = s.find('(');
    if (open == std::string_view::npos) return {lower(s), {}};
    if (s.back() != ')') throw ConfigError(fmt::format("'{}': missing ')'", s));
    auto args = s.substr(open + 1, s.size() - open - 2);
    return {lower(trim(s.substr(0, open))),
            trim(args).empty() ? std::vector<std::string_view>{} : split(args, ',')};
}

}  // namespace detail

inline StayProbLaw parse_law(std::string_view text) {
    const auto [name, args] = detail::parse_call(text);
    auto arg = [&](std::size_t i) { return detail::parse_number<double>(args[i], name); };
    auto arity = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi)
            throw ConfigError(fmt::format("{}: expected {} argument(s), got {}", name,
                                          lo == hi ? fmt::format("{}", lo)
                                                   : fmt::format("{}-{}", lo, hi),
                                          args.size()));
    };
    StayProbLaw law;
    if (name == "constant") {
        arity(1, 1);
        law = Constant{arg(0)};
    } else if (name == "twopoint") {
        arity(3, 3);
        law = TwoPoint{arg(0), arg(1), arg(2)};
    } else if (name == "beta") {
        arity(2, 2);
        law = BetaLaw{arg(0), arg(1)};
    } else if (name == "stabletail") {
        arity(1, 3);
        law = StableTail{arg(0), args.size() > 1 ? arg(1) : 1.0, args.size() > 2 ? arg(2) : 0.0};
    } else {
        throw ConfigError(fmt::format("unknown law '{}'", name));
    }
    validate(law);
    return law;
}

inline OrientationScheme parse_scheme(std::string_view text) {
    const auto [name, args] = detail::parse_call(text);
    if (name == "alternating") return Alternating{};
    if (name == "iid" || name == "rademacher" || name == "iidrademacher") return IidRademacher{};
    if (name == "fixed") {
        Fixed f;
        for (auto a : args) {
            const auto parts = detail::split(a, ':');
            if (parts.size() != 2) throw ConfigError(fmt::format("fixed: entry '{}' is not level:sign", a));
            const auto y = detail::parse_number<std::int64_t>(parts[0], "fixed level");
            const auto s = detail::parse_number<int>(parts[1], "fixed sign");
            if (!f.signs.emplace(y, s).second)
                throw ConfigError(fmt::format("fixed: level {} listed twice", y));
        }
        validate(OrientationScheme{f});
        return f;
    }
    throw ConfigError(fmt::format("unknown scheme '{}'", name));
}

inline Observable parse_observable(std::string_view text) {
    const std::string s = detail::lower(detail::trim(text));
    for (Observable o : {Observable::JumpX2n, Observable::JumpX, Observable::HorizontalAtTime,
                         Observable::VerticalAtTime, Observable::Returns})
        if (s == to_string(o)) return o;
    throw ConfigError(fmt::format("unknown observable '{}'", s));
}

inline bool parse_bool(std::string_view text) {
    const std::string s = detail::lower(detail::trim(text));
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(fmt::format("'{}' is not a boolean", s));
}

/// Parses flat `key = value` lines. '#' starts a comment.
inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
        const std::string key = detail::lower(detail::trim(line.substr(0, eq)));
        const std::string_view value = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second)
            throw ConfigError(fmt::format("line {}: key '{}' given twice", line_no, key));
        try {
            if (key == "experiment") {
                const std::string v = detail::lower(value);
                bool found = false;
                for (auto k : {ExperimentKind::Simulate, ExperimentKind::Variance,
                               ExperimentKind::Exponent, ExperimentKind::Returns,
                               ExperimentKind::Limit, ExperimentKind::Validate})
                    if (v == to_string(k)) {
                        cfg.experiment = k;
                        found = true;
                    }
                if (!found) throw ConfigError(fmt::format("unknown experiment '{}'", v));
            } else if (key == "scheme") {
                cfg.scheme = parse_scheme(value);
            } else if (key == "law") {
                cfg.law = parse_law(value);
            } else if (key == "horizons") {
                cfg.horizons.clear();
                for (auto h : detail::split(value, ','))
                    cfg.horizons.push_back(detail::parse_count(h, "horizons"));
                validate_horizons(cfg.horizons);
            } else if (key == "replicas") {
                const auto r = detail::parse_count(value, "replicas");
                if (r < 1) throw ConfigError("replicas must be >= 1");
                cfg.replicas = static_cast<std::size_t>(r);
            } else if (key == "seed") {
                cfg.seed = detail::parse_number<std::uint64_t>(value, "seed");
            } else if (key == "threads") {
                const auto t = detail::parse_count(value, "threads");
                if (t < 1) throw ConfigError("threads must be >= 1");
                cfg.threads = static_cast<unsigned>(t);
            } else if (key == "output_dir") {
                if (value.empty()) throw ConfigError("output_dir must be non-empty");
                cfg.output_dir = std::string(value);
            } else if (key == "observable") {
                cfg.observable = parse_observable(value);
            } else if (key == "mode") {
                const std::string v = detail::lower(value);
                if (v == "annealed") cfg.mode = SamplingMode::Annealed;
                else if (v == "quenched") cfg.mode = SamplingMode::Quenched;
                else throw ConfigError(fmt::format("unknown mode '{}'", v));
            } else if (key == "force") {
                cfg.force = parse_bool(value);
            } else if (key == "quantile") {
                cfg.quantile = detail::parse_number<double>(value, "quantile");
                if (!(cfg.quantile > 0.0 && cfg.quantile < 0.5))
                    throw ConfigError("quantile must be in (0, 0.5)");
            } else if (key == "statistic") {
                cfg.statistic = detail::lower(value);
                if (cfg.statistic != "spread" && cfg.statistic != "sd")
                    throw ConfigError("statistic must be 'spread' or 'sd'");
            } else if (key == "path") {
                cfg.path = detail::lower(value);
                if (cfg.path != "direct" && cfg.path != "embedded" && cfg.path != "both")
                    throw ConfigError("path must be 'direct', 'embedded' or 'both'");
            } else if (key == "t") {
                cfg.t = detail::parse_number<double>(value, "t");
                if (!(cfg.t > 0.0)) throw ConfigError("t must be > 0");
            } else if (key == "dt") {
                cfg.dt = detail::parse_number<double>(value, "dt");
                if (!(*cfg.dt > 0.0)) throw ConfigError("dt must be > 0");
            } else if (key == "bin_width") {
                cfg.bin_width = detail::parse_number<double>(value, "bin_width");
                if (!(*cfg.bin_width > 0.0)) throw ConfigError("bin_width must be > 0");
            } else if (key == "limit_draws") {
                const auto d = detail::parse_count(value, "limit_draws");
                if (d < 1) throw ConfigError("limit_draws must be >= 1");
                cfg.limit_draws = static_cast<std::size_t>(d);
            } else if (key == "a1") {
                cfg.a1 = detail::parse_number<double>(value, "a1");
                if (!(*cfg.a1 > 0.0)) throw ConfigError("a1 must be > 0");
            } else if (key == "checkpoint_seconds") {
                cfg.checkpoint_seconds = detail::parse_number<double>(value, "checkpoint_seconds");
            } else {
                throw ConfigError("unknown key");
            }
        } catch (const ConfigError& e) {
            throw ConfigError(fmt::format("line {}: key '{}': {}", line_no, key, e.what()));
        }
    }
    if (!seen.contains("experiment")) throw ConfigError("missing required key 'experiment'");
    if (cfg.experiment != ExperimentKind::Validate) {
        for (const char* required : {"scheme", "law", "horizons", "seed"})
            if (!seen.contains(required))
                throw ConfigError(fmt::format("missing required key '{}'", required));
    }
    return cfg;
}

/// Canonical text of every setting that affects numeric output. Thread count
/// and checkpoint cadence are excluded.
inline std::string config_echo(const ExperimentConfig& c) {
    std::string h;
    for (std::size_t i = 0; i < c.horizons.size(); ++i)
        h += fmt::format("{}{}", i ? "," : "", c.horizons[i]);
    std::string out;
    out += fmt::format("experiment = {}\n", to_string(c.experiment));
    out += fmt::format("scheme = {}\n", to_string(c.scheme));
    out += fmt::format("law = {}\n", to_string(c.law));
    out += fmt::format("horizons = {}\n", h);
    out += fmt::format("replicas = {}\n", c.replicas);
    out += fmt::format("seed = {}\n", c.seed);
    out += fmt::format("output_dir = {}\n", c.output_dir);
    if (c.observable) out += fmt::format("observable = {}\n", to_string(*c.observable));
    out += fmt::format("mode = {}\n", c.mode == SamplingMode::Annealed ? "annealed" : "quenched");
    out += fmt::format("force = {}\n", c.force);
    out += fmt::format("quantile = {}\n", c.quantile);
    out += fmt::format("statistic = {}\n", c.statistic);
    out += fmt::format("path = {}\n", c.path);
    out += fmt::format("t = {}\n", c.t);
    if (c.dt) out += fmt::format("dt = {}\n", *c.dt);
    if (c.bin_width) out += fmt::format("bin_width = {}\n", *c.bin_width);
    out += fmt::format("limit_draws = {}\n", c.limit_draws);
    if (c.a1) out += fmt::format("a1 = {}\n", *c.a1);
    return out;
}

}  // namespace strata
