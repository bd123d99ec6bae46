#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "stormcells/kernels.hpp"
#include "stormcells/simulator.hpp"

using namespace stormcells;

TEST_CASE("serial and parallel argmax are bit-identical")
{
    const GridWindow w = make_grid(2, 12, 0.7);
    for (const auto& m : {SpectralModel::smith_isotropic(2, 1.2), SpectralModel::exp_kernel(2, 0.8)}) {
        RandomStream rng(4, 0, 0);
        std::vector<StormRecord> storms;
        PoissonStream ps;
        for (int i = 0; i < 300; ++i)
            storms.push_back({i + 1, ps.next(rng), {rng.uniform() * 20 - 10, rng.uniform() * 20 - 10, 0}});
        std::vector<double> e1(w.site_count()), e2(w.site_count());
        std::vector<std::int64_t> l1(w.site_count()), l2(w.site_count());
        storm_argmax_serial(m, w, storms, e1, l1);
        storm_argmax_parallel(m, w, storms, e2, l2);
        CHECK(e1 == e2);
        CHECK(l1 == l2);
    }
}

TEST_CASE("weighted argmin picks the lowest index on ties")
{
    const GridWindow w = make_grid(1, 3, 1.0);
    WeightedDistance d = [](const Point& p, std::size_t i) { return i == 2 ? 0.0 : std::abs(p[0]); };
    std::vector<std::size_t> a(w.site_count()), b(w.site_count());
    weighted_argmin_serial(w, 3, d, a);
    weighted_argmin_parallel(w, 3, d, b);
    CHECK(a == b);
    // Site 0 ties between all three; others go to index 2.
    CHECK(a == std::vector<std::size_t>{2, 2, 2, 0, 2, 2, 2});
}

TEST_CASE("replicate map")
{
    std::vector<int> hits(500, 0);
    for_each_replicate(hits.size(), [&](std::size_t r) { hits[r] += 1; });
    CHECK(std::count(hits.begin(), hits.end(), 1) == 500);

    auto thrower = [](std::size_t r) {
        if (r == 37 || r == 401)
            throw std::runtime_error("bad " + std::to_string(r));
    };
    for (Execution e : {Execution::Serial, Execution::Parallel}) {
        try {
            for_each_replicate(500, thrower, e);
            FAIL("expected a throw");
        } catch (const std::runtime_error& ex) {
            CHECK(std::string(ex.what()) == "bad 37");
        }
    }
    CHECK(worker_count() >= 1);
}
