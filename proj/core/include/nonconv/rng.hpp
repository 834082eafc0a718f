#pragma once

#include <cstdint>
#include <limits>

namespace nonconv {

// Counter-based random streams.
//
// A draw is a pure function of (key, counter): the SplitMix64 output
// function applied to key + (counter + 1) * golden. Replicate j of an
// experiment uses key stream_key(master, j), so results never depend on
// how replicates are distributed across workers.

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t counter_draw(std::uint64_t key, std::uint64_t counter) noexcept {
    return mix64(key + (counter + 1) * golden_gamma);
}

constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t stream) noexcept {
    return mix64(master ^ mix64(stream * golden_gamma + 0x632BE59BD9B4E019ULL));
}

// Uniform on [0, 1) with 53 random bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Sequential view over one counter-based stream. Satisfies
// UniformRandomBitGenerator so it can drive <random> distributions.
class CounterStream {
public:
    using result_type = std::uint64_t;

    constexpr explicit CounterStream(std::uint64_t key, std::uint64_t start = 0) noexcept
        : key_(key), counter_(start) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return counter_draw(key_, counter_++); }
    constexpr double uniform() noexcept { return to_unit((*this)()); }

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t position() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace nonconv
