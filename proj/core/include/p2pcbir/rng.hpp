#pragma once

// Seeded pseudo-random generator shared by every simulation.
//
// Algorithm: xoshiro256** (Blackman & Vigna), state expanded from a 64-bit
// seed with SplitMix64. Bounded integers use Lemire's multiply-shift
// rejection method and reals take the top 53 bits, so a given seed yields
// the same stream on every platform. Changing any of this changes
// experiment output; bump kRngName when doing so.

#include <array>
#include <cstdint>
#include <limits>

namespace p2pcbir {

inline constexpr const char* kRngName = "xoshiro256**/splitmix64-v1";

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform integer in [0, bound). bound must be non-zero.
    std::uint64_t below(std::uint64_t bound) noexcept {
        __uint128_t m = static_cast<__uint128_t>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<__uint128_t>((*this)()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Uniform real in [0, 1).
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    /// Derives an independent generator, e.g. one per query or per seed.
    Rng split() noexcept { return Rng((*this)()); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    static constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
        std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Fisher-Yates shuffle driven by Rng::below, so results do not depend on the
/// standard library's std::shuffle implementation.
template <typename Range>
void shuffle(Range& range, Rng& rng) {
    const auto n = static_cast<std::uint64_t>(range.size());
    for (std::uint64_t i = n; i > 1; --i) {
        const auto j = rng.below(i);
        using std::swap;
        swap(range[i - 1], range[j]);
    }
}

}  // namespace p2pcbir
