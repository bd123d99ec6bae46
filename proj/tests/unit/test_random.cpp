#include <doctest.h>

#include <cmath>
#include <set>

#include "stormcells/random.hpp"

using namespace stormcells;

// Known-answer vectors published with the Random123 library.
TEST_CASE("philox4x32-10 known answers")
{
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are reproducible and distinct")
{
    RandomStream a(42, 3, 1), b(42, 3, 1), c(42, 3, 2), d(42, 4, 1), e(43, 3, 1);
    std::set<std::uint64_t> firsts;
    for (int i = 0; i < 100; ++i)
        CHECK(a() == b());
    for (auto* s : {&c, &d, &e})
        firsts.insert((*s)());
    CHECK(firsts.size() == 3);
    CHECK(RandomStream(42, 3, 1).split(2)() == RandomStream(42, 3, 2)());
}

TEST_CASE("uniform, normal and exponential moments")
{
    RandomStream rng(7, 0, 0);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0, se = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
        se += rng.exponential();
    }
    CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
    CHECK(std::abs(sn / n) < 0.01);
    CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(se / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("indexed normals depend only on the block")
{
    const StreamId id{9, 2, kIndexedSubstreamBit | 1u};
    const auto a = indexed_normal_pair(id, 17);
    const auto b = indexed_normal_pair(id, 17);
    const auto c = indexed_normal_pair(id, 18);
    CHECK(a == b);
    CHECK(a != c);
    double s2 = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        const auto p = indexed_normal_pair(id, static_cast<std::uint64_t>(i));
        s2 += p[0] * p[0] + p[1] * p[1];
    }
    CHECK(s2 / (2 * n) == doctest::Approx(1.0).epsilon(0.02));
}
