#include "stormcells/random.hpp"

#include <cmath>
#include <numbers>

namespace stormcells {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) noexcept
{
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

void RandomStream::refill() noexcept
{
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block_),
                                           static_cast<std::uint32_t>(block_ >> 32), id_.substream,
                                           id_.replicate};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(id_.seed),
                                           static_cast<std::uint32_t>(id_.seed >> 32)};
    buffer_ = philox4x32(ctr, key);
    ++block_;
    used_ = 0;
}

RandomStream::result_type RandomStream::operator()() noexcept
{
    if (used_ >= 4)
        refill();
    const std::uint64_t lo = buffer_[used_];
    const std::uint64_t hi = buffer_[used_ + 1];
    used_ += 2;
    return (hi << 32) | lo;
}

double RandomStream::uniform() noexcept
{
    // (k + 0.5) / 2^53 never hits 0 or 1.
    const std::uint64_t k = (*this)() >> 11;
    return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

std::array<double, 2> indexed_normal_pair(const StreamId& id, std::uint64_t block) noexcept
{
    const std::array<std::uint32_t, 4> ctr{static_cast<std::uint32_t>(block),
                                           static_cast<std::uint32_t>(block >> 32),
                                           id.substream | kIndexedSubstreamBit, id.replicate};
    const std::array<std::uint32_t, 2> key{static_cast<std::uint32_t>(id.seed),
                                           static_cast<std::uint32_t>(id.seed >> 32)};
    const auto w = philox4x32(ctr, key);
    const std::uint64_t a = ((static_cast<std::uint64_t>(w[1]) << 32) | w[0]) >> 11;
    const std::uint64_t b = ((static_cast<std::uint64_t>(w[3]) << 32) | w[2]) >> 11;
    const double u1 = (static_cast<double>(a) + 0.5) * 0x1.0p-53;
    const double u2 = (static_cast<double>(b) + 0.5) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace stormcells
