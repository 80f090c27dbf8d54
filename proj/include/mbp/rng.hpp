#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mbp {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed of path `index` in a batch seeded by `base`:
//   derive_seed(base, i) = mix64(mix64(base) ^ mix64(i + 1)).
// Depends only on (base, i), so batch output is independent of scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(mix64(base) ^ mix64(index + 1));
}

// One random stream per trajectory. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; all variates below are derived by hand
// so results do not depend on the standard library's distribution classes.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on the open interval (0, 1): 53-bit grid shifted by half a step.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double exponential() { return -std::log(uniform()); }

    // Standard Gumbel (maximum) with CDF exp(-exp(-x)).
    double gumbel() { return -std::log(-std::log(uniform())); }

    // Standard normal by Box-Muller; the second variate is discarded.
    double normal() {
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        return r * std::cos(2.0 * 3.141592653589793 * uniform());
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace mbp
