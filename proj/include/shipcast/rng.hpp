#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace shipcast {

/// SplitMix64 counter-based generator.
///
/// state_{k+1} = state_k + 0x9e3779b97f4a7c15, output = mix(state_{k+1}) with the
/// Stafford variant-13 finalizer. Every derived draw below uses only integer
/// arithmetic and IEEE double operations, so sequences are identical on every
/// platform (the standard library distributions are not).
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    /// Standard normal draw via Box-Muller (one value per call, no caching).
    double normal() noexcept {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by SplitMix64 (std::shuffle is not portable).
template <typename Container>
void deterministic_shuffle(Container& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.index(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

}  // namespace shipcast
