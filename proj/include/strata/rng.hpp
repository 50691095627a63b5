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

#include <array>
#include <bit>
#include <cstdint>
#include <limits>

namespace strata {

// Philox4x32-10 counter-based generator (Salmon et al., SC 2011). Output is a
// pure function of (key, counter); used wherever a value must not depend on
// the order in which it is requested.
namespace philox {

using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kMulA = 0xD2511F53u;
inline constexpr std::uint32_t kMulB = 0xCD9E8D57u;
inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;

constexpr Counter round(const Counter& c, const Key& k) {
    const std::uint64_t prod_a = std::uint64_t{kMulA} * c[0];
    const std::uint64_t prod_b = std::uint64_t{kMulB} * c[2];
    const auto hi_a = static_cast<std::uint32_t>(prod_a >> 32);
    const auto lo_a = static_cast<std::uint32_t>(prod_a);
    const auto hi_b = static_cast<std::uint32_t>(prod_b >> 32);
    const auto lo_b = static_cast<std::uint32_t>(prod_b);
    return {hi_b ^ c[1] ^ k[0], lo_b, hi_a ^ c[3] ^ k[1], lo_a};
}

constexpr Counter block(Counter c, Key k) {
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            k[0] += kWeylA;
            k[1] += kWeylB;
        }
        c = round(c, k);
    }
    return c;
}

}  // namespace philox

/// Two 64-bit words from Philox keyed by `key`, at counter (a, b).
constexpr std::array<std::uint64_t, 2> keyed_bits(std::uint64_t key, std::uint64_t a,
                                                  std::uint64_t b) {
    const philox::Key k{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)};
    const philox::Counter c{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                            static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    const auto out = philox::block(c, k);
    return {(std::uint64_t{out[1]} << 32) | out[0], (std::uint64_t{out[3]} << 32) | out[2]};
}

/// Maps 64 random bits to a double in the open interval (0, 1).
constexpr double to_open01(std::uint64_t bits) {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

constexpr std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Stream tags: distinct purposes never share a counter.
enum class StreamTag : std::uint64_t {
    Orientation = 1,
    StayProb = 2,
    Walk = 3,
    Environment = 4,
    Limit = 5,
    Bootstrap = 6,
    Auxiliary = 7,
};

/// 64-bit identifier of stream (seed, index, tag).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
    return keyed_bits(seed, index, static_cast<std::uint64_t>(tag))[0];
}

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256pp(std::uint64_t seed = 0) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        const std::uint64_t result = std::rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in (0, 1).
    constexpr double uniform() { return to_open01((*this)()); }

    friend constexpr bool operator==(const Xoshiro256pp&, const Xoshiro256pp&) = default;

private:
    std::array<std::uint64_t, 4> s_{};
};

/// The random stream owned by one replica / task.
using Stream = Xoshiro256pp;

inline Stream make_stream(std::uint64_t seed, std::uint64_t index, StreamTag tag) {
    return Stream(derive_seed(seed, index, tag));
}

}  // namespace strata
