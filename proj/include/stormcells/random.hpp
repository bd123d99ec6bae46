#pragma once

#include <array>
#include <cstdint>
#include <limits>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

namespace stormcells {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// Identifies one reproducible random stream.
///
/// The stream for replicate `replicate` of an experiment seeded with `seed`
/// encrypts the 128-bit counter
///     (block_lo, block_hi, substream, replicate)
/// with Philox4x32-10 under the 64-bit key `seed`. Different substreams of
/// one replicate feed independent parts of the same Monte Carlo draw.
struct StreamId {
    std::uint64_t seed = 0;
    std::uint32_t replicate = 0;
    std::uint32_t substream = 0;
    bool operator==(const StreamId&) const = default;
};

/// Uniform random bit generator over a Philox counter stream.
class RandomStream {
  public:
    using result_type = std::uint64_t;

    explicit RandomStream(StreamId id) noexcept : id_(id) {}
    RandomStream(std::uint64_t seed, std::uint32_t replicate, std::uint32_t substream = 0) noexcept
        : id_{seed, replicate, substream}
    {
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept;
    double normal() { return normal_(*this); }
    double exponential() { return exponential_(*this); }

    /// A sibling stream of the same replicate.
    RandomStream split(std::uint32_t substream) const noexcept
    {
        return RandomStream(StreamId{id_.seed, id_.replicate, substream});
    }

    const StreamId& id() const noexcept { return id_; }

  private:
    void refill() noexcept;

    StreamId id_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int used_ = 4;
    boost::random::normal_distribution<double> normal_;
    boost::random::exponential_distribution<double> exponential_;
};

/// Substreams with this bit set are reserved for indexed draws.
inline constexpr std::uint32_t kIndexedSubstreamBit = 0x80000000u;

/// Two independent standard normals read directly from Philox block `block`
/// of the stream (id.seed, id.replicate, id.substream | kIndexedSubstreamBit),
/// by Box-Muller on the block's two 64-bit halves. Lets a caller draw entry i
/// of a long Gaussian vector without generating entries 0..i-1.
std::array<double, 2> indexed_normal_pair(const StreamId& id, std::uint64_t block) noexcept;

}  // namespace stormcells
