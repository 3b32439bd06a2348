#pragma once

// Seeding and the few variate generators used by the simulators.
//
// Every trajectory owns one std::mt19937_64. Replicate k of a batch started
// from base seed s uses stream_seed(s, k), so replicates are reproducible
// individually and independent of how a batch is split across threads.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace cascade {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer: a bijective 64-bit avalanche mix.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Seed of replicate k derived from a base seed.
constexpr std::uint64_t stream_seed(std::uint64_t base, std::uint64_t k) {
    return mix64(base ^ mix64(k ^ 0xD1B54A32D192ED03ULL));
}

inline Engine make_engine(std::uint64_t seed) { return Engine(mix64(seed)); }

/// Uniform on (0, 1], 53-bit resolution.
inline double uniform_pos(Engine& eng) {
    return (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;
}

/// Uniform on [0, 1), 53-bit resolution.
inline double uniform01(Engine& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

/// Exp(rate) waiting time; +inf for rate 0.
inline double exponential(Engine& eng, double rate) {
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return -std::log(uniform_pos(eng)) / rate;
}

/// Standard normal by the polar method; caches the second variate.
class NormalSource {
public:
    double operator()(Engine& eng) {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform01(eng) - 1.0;
            v = 2.0 * uniform01(eng) - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cascade
