#pragma once

// Counter-based random numbers. A stream is identified by (seed, stream id);
// the k-th 64-bit word of a stream is a pure function of (seed, stream, k),
// so replicate r of an experiment draws the same numbers no matter which
// worker runs it.

#include <array>
#include <cstdint>
#include <limits>

namespace covx::rng {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key) noexcept;

/// Stream ids with the top bit set are reserved for library-internal
/// samplers so they never collide with replicate indices.
inline constexpr std::uint64_t kReservedStreamBit = std::uint64_t{1} << 63;
inline constexpr std::uint64_t kLimitVectorStream = kReservedStreamBit | 0x1;
inline constexpr std::uint64_t kSpacingLimitStream = kReservedStreamBit | 0x2;
inline constexpr std::uint64_t kRegionCheckStream = kReservedStreamBit | 0x3;

/// The k-th 64-bit word of stream (seed, stream), without any state.
std::uint64_t word_at(std::uint64_t seed, std::uint64_t stream, std::uint64_t k) noexcept;

/// Sequential view of one stream. Satisfies UniformRandomBitGenerator.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 2) refill();
        return buffer_[pos_++];
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

    /// Number of 64-bit words consumed so far.
    std::uint64_t position() const noexcept { return 2 * block_ - (2 - pos_); }

private:
    void refill() noexcept;

    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    unsigned pos_ = 2;
};

}  // namespace covx::rng
