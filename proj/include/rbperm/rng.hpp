#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rbperm {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by a 64-bit key; its outputs are the Philox
/// block function applied to an incrementing 128-bit counter. `split(id)`
/// derives an independent child stream whose key is a SplitMix64 hash of
/// (parent key, id), so every Monte Carlo replicate and every permutation
/// index can own a reproducible stream without any shared state.
///
/// Variate generation is fixed here rather than delegated to <random>
/// distributions, whose algorithms are implementation-defined:
///   - uniform(): top 53 bits of a 64-bit draw, scaled to [0, 1)
///   - below(n): Lemire's multiply-and-reject method, exactly uniform
///   - normal(): Box-Muller cosine branch, one variate per two uniforms
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(std::uint64_t seed) noexcept;

    [[nodiscard]] Stream split(std::uint64_t id) const noexcept;

    result_type operator()() noexcept;

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    double uniform() noexcept;
    std::uint64_t below(std::uint64_t n) noexcept;
    double normal() noexcept;

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

private:
    void refill() noexcept;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int available_ = 0;
};

/// Philox4x32 with 10 rounds. Exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace rbperm
