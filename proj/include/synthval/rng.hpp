#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <span>
#include <utility>

namespace synthval {

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based child seed: hashes the parent seed together with a path of
// indices and stage tags. Any cell of an experiment can be regenerated from
// (master seed, path) alone.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = mix64(seed);
    for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632BE59BD9B4E019ULL));
    return h;
}

// Stage tags mixed into derive_seed paths.
namespace seed_tag {
inline constexpr std::uint64_t split = 0x5350;
inline constexpr std::uint64_t generate = 0x47454E;
inline constexpr std::uint64_t impute_real = 0x494D52;
inline constexpr std::uint64_t impute_synth = 0x494D53;
inline constexpr std::uint64_t impute_column = 0x494D43;
inline constexpr std::uint64_t propensity = 0x50524F;
inline constexpr std::uint64_t log_cluster = 0x4C43;
inline constexpr std::uint64_t classifier = 0x434C46;
inline constexpr std::uint64_t datapoint = 0x4450;
inline constexpr std::uint64_t tree = 0x545245;
inline constexpr std::uint64_t mask = 0x4D534B;
}  // namespace seed_tag

// Seeded random source. The engine is std::mt19937_64; the sampling helpers
// are written out here so streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n > 0. Rejection sampling, no modulo bias.
    std::size_t index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::size_t>(x % bound);
    }

    // Standard normal via Box-Muller.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace synthval
