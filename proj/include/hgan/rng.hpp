// Seeded, splittable random number generation.
//
// Every random draw in the project goes through Rng so that experiments are
// reproducible bit for bit. A master seed is split into independent streams
// by hashing a purpose string (e.g. "data", "init.g", "latent") into the
// seed; data sampling, weight init and latent draws therefore do not
// interfere with each other. Doubles are derived from raw engine output
// (53-bit uniforms, Box-Muller normals) instead of std::*_distribution so
// the byte streams do not depend on the standard library implementation.

#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>
#include <random>
#include <string_view>

namespace hgan {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// One round of splitmix64, used to mix a stream hash into the master seed.
inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b | 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Independent child stream; identity depends only on (seed, purpose).
    Rng stream(std::string_view purpose) const {
        return Rng(mix64(seed_, fnv1a64(purpose)));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; one draw consumes two uniforms.
    double normal() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Unbiased integer in [0, n) by rejection.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return static_cast<std::size_t>(x % n);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace hgan
