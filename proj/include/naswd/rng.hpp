/*
 * Copyright 2026 The naswd authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NASWD_RNG_HPP
#define NASWD_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace naswd {

/// Deterministic seeded generator (splitmix64) with named sub-streams.
///
/// Every stochastic stage derives its own stream via fork(), so stages are
/// reproducible independently of how many draws earlier stages consumed.
/// All floating-point mappings are hand-rolled to keep sequences identical
/// across standard libraries and platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed), seed_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in (0, 1]; safe as a log() argument.
    double uniform_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n > 0. Lemire-style multiply-shift.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    /// Standard normal via Box-Muller (two uniforms per draw, no caching).
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Child stream identified by name; depends only on (seed, name).
    Rng fork(std::string_view name) const {
        std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
        for (char c : name) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 0x100000001b3ULL;
        }
        return Rng(mix(seed_ ^ h));
    }

    /// Child stream identified by index.
    Rng fork(std::uint64_t index) const {
        return Rng(mix(seed_ + 0x9e3779b97f4a7c15ULL * (index + 1)));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
    std::uint64_t seed_;
};

} // namespace naswd

#endif
