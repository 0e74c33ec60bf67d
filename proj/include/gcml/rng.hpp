#pragma once

#include <cstdint>
#include <random>

namespace gcml {

/// Purposes that get independent random streams per configuration.
enum class StreamKind : std::uint64_t {
    InitialCondition = 1,
    Perturbation = 2,
    Tangent = 3,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Seed for (master_seed, config_index, kind). Adding configurations never
/// changes the stream of an existing index.
constexpr std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t config_index,
                                    StreamKind kind) noexcept {
    std::uint64_t h = detail::splitmix64(master_seed);
    h = detail::splitmix64(h ^ config_index);
    return detail::splitmix64(h ^ static_cast<std::uint64_t>(kind));
}

/// Deterministic per-configuration generator. mt19937_64's output sequence is
/// fixed by the standard; the double conversion is done here rather than via
/// std::uniform_real_distribution, whose algorithm varies between libraries.
class Stream {
public:
    Stream(std::uint64_t master_seed, std::uint64_t config_index, StreamKind kind)
        : engine_(stream_seed(master_seed, config_index, kind)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        const double v = lo + (hi - lo) * uniform01();
        return v < hi ? v : lo;
    }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace gcml
