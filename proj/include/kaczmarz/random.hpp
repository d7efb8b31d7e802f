#pragma once

#include <cstdint>
#include <random>

namespace kaczmarz {

/// Seedable deterministic generator. Owned by exactly one run; not thread-safe.
class Rng {
public:
    using engine_type = std::mt19937_64;
    using result_type = engine_type::result_type;

    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    /// Uniform on [0, 1).
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
    /// Uniform integer on [0, n).
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    // UniformRandomBitGenerator, so std::shuffle etc. accept an Rng directly.
    static constexpr result_type min() { return engine_type::min(); }
    static constexpr result_type max() { return engine_type::max(); }
    result_type operator()() { return engine_(); }

private:
    std::uint64_t seed_;
    engine_type engine_;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Child seed for trial `trial`, component `component` of a master seed.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t trial,
                                   std::uint64_t component = 0) noexcept {
    return mix64(mix64(mix64(master) ^ trial) ^ (component * 0xd6e8feb86659fd93ULL));
}

} // namespace kaczmarz
