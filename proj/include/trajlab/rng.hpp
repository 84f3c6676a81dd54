#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace trajlab {

// Seeded random number generation for reproducible simulation.
//
// The generator is xoshiro256++ with its state expanded from a 64-bit seed
// by splitmix64. Uniform doubles take the top 53 bits of the output word and
// normal variates use the Box-Muller transform, so every stream is a pure
// function of its seed and is byte-stable across platforms. Nothing here
// touches <random>: the standard distributions are implementation-defined.

inline uint64_t splitmix64_mix(uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

// k-th output of the splitmix64 stream started at `base`. Random access by
// stream index makes per-trajectory seeding order-independent.
inline uint64_t derive_seed(uint64_t base, uint64_t stream) {
    constexpr uint64_t gamma = 0x9E3779B97F4A7C15ULL;
    return splitmix64_mix(base + (stream + 1) * gamma);
}

class Rng {
public:
    explicit Rng(uint64_t seed) {
        uint64_t s = seed;
        constexpr uint64_t gamma = 0x9E3779B97F4A7C15ULL;
        for (auto& word : state_) {
            s += gamma;
            word = splitmix64_mix(s);
        }
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n) by rejection, bias-free and deterministic.
    uint64_t next_below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            const uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // One Box-Muller pair: two independent N(0, sigma^2) draws from exactly
    // two uniforms. u1 is mapped into (0, 1] so the log stays finite.
    std::pair<double, double> normal_pair(double sigma) {
        const double u1 = 1.0 - uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        return {sigma * r * std::cos(theta), sigma * r * std::sin(theta)};
    }

    // Single N(0, sigma^2) draw; the second half of each Box-Muller pair is
    // cached so consecutive calls consume the stream at a fixed rate.
    double normal(double sigma) {
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        auto [a, b] = normal_pair(1.0);
        spare_ = b;
        have_spare_ = true;
        return a * sigma;
    }

private:
    static uint64_t rotl(uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    uint64_t state_[4];
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace trajlab
