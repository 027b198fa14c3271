#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace coxscreen {

/**
 * Philox4x32-10 counter-based generator (Salmon et al., Random123).
 *
 * The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
 * block index and two 32-bit stream words, so every (seed, stream, purpose)
 * triple owns an independent, reproducible substream. Satisfies
 * UniformRandomBitGenerator.
 */
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    Philox4x32(std::uint64_t seed, std::uint32_t stream = 0, std::uint32_t purpose = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()();

    /// Raw bijection: ten rounds applied to `counter` under `key`.
    static Block encrypt(Block counter, Key key);

private:
    Key key_;
    Block counter_;
    Block buffer_{};
    int used_ = 4;
};

/// What a substream is used for; part of the counter so streams never overlap.
enum class StreamPurpose : std::uint32_t {
    covariates = 1,
    event_times = 2,
    censor_times = 3,
    sample_split = 4,
    noise_pick = 5,
    cv_folds = 6,
    coefficients = 7,
};

/// Substream for a repetition and purpose.
Philox4x32 make_stream(std::uint64_t seed, std::uint32_t rep, StreamPurpose purpose);

/// Unbiased integer in [0, bound) by rejection.
std::uint32_t uniform_below(Philox4x32& rng, std::uint32_t bound);

/// Fisher-Yates permutation of 0..n-1.
std::vector<int> random_permutation(Philox4x32& rng, int n);

} // namespace coxscreen
