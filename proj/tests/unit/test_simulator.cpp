#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "stormcells/error.hpp"
#include "stormcells/simulator.hpp"

using namespace stormcells;

namespace {

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

Realization draw(const SpectralModel& m, const GridWindow& w, const GaussianFactor* f, std::size_t r,
                 Backend b = Backend::Auto)
{
    RandomStream rng(2024, static_cast<std::uint32_t>(r), 0);
    return simulate(m, w, f, rng, b);
}

}  // namespace

TEST_CASE("Poisson marks")
{
    PoissonStream ps;
    CHECK(ps.next_with(std::log(2.0)) == doctest::Approx(1.4427).epsilon(1e-4));
    RandomStream rng(3, 0, 0);
    double prev = ps.next(rng);
    for (int i = 0; i < 50; ++i) {
        const double u = ps.next(rng);
        CHECK(u < prev);
        prev = u;
    }
}

TEST_CASE("constant spectral function collapses to one storm")
{
    const auto m = SpectralModel::constant(2);
    const GridWindow w = make_grid(2, 3, 1.0);
    RandomStream rng(1, 0, 0);
    const Realization r = simulate_moving_max(m, w, rng);
    REQUIRE(r.storms.size() == 1);
    for (Site s = 0; s < w.site_count(); ++s) {
        CHECK(r.labels[s] == r.storms[0].id);
        CHECK(r.eta[s] == r.storms[0].u);
    }
    // The first mark is the largest one.
    RandomStream again(1, 0, 0);
    PoissonStream ps;
    CHECK(r.eta[0] == doctest::Approx(ps.next(again)));
}

TEST_CASE("two forced storms split at the bisector")
{
    const auto m = SpectralModel::smith_isotropic(1, 1.0);
    const GridWindow w = make_grid(1, 2, 1.0);
    std::vector<StormRecord> storms = {{1, 2.0, {-1.5, 0, 0}}, {2, 2.0, {1.5, 0, 0}}};
    const Realization r = realize_storms(m, w, storms);
    CHECK(r.labels == std::vector<StormId>{1, 1, 1, 2, 2});
    CHECK(r.storm(2).center[0] == 1.5);
    CHECK_THROWS(r.storm(7));
}

TEST_CASE("backend dispatch")
{
    const GridWindow w = make_grid(2, 2, 1.0);
    CHECK(draw(SpectralModel::smith_isotropic(2, 1.0), w, nullptr, 0).backend == Backend::MovingMax);
    CHECK(draw(SpectralModel::schlather(2, 1.0), w, nullptr, 0).backend == Backend::ExtremalFunctions);
    CHECK(draw(SpectralModel::brown_resnick(2, 1.0, 1.0), w, nullptr, 0).backend ==
          Backend::ExtremalFunctions);
    const auto comp = SpectralModel::composite(SpectralModel::smith_isotropic(2, 1.0),
                                               SpectralModel::schlather(2, 1.0), 0.5);
    CHECK(draw(comp, w, nullptr, 0).backend == Backend::Composite);
    CHECK_THROWS_AS(draw(SpectralModel::brown_resnick(2, 1.0, 1.0), w, nullptr, 0, Backend::MovingMax),
                    IncompatibleBackend);
    CHECK_THROWS_AS(draw(SpectralModel::smith_isotropic(2, 1.0), w, nullptr, 0,
                         Backend::ExtremalFunctions),
                    IncompatibleBackend);
}

TEST_CASE("same stream, same realization")
{
    const GridWindow w = make_grid(2, 4, 1.0);
    for (const auto& m : {SpectralModel::smith_isotropic(2, 1.0), SpectralModel::schlather(2, 2.0),
                          SpectralModel::brown_resnick(2, 1.0, 1.0)}) {
        const Realization a = draw(m, w, nullptr, 5);
        const Realization b = draw(m, w, nullptr, 5);
        CHECK(a.eta == b.eta);
        CHECK(a.labels == b.labels);
        CHECK(a.eta != draw(m, w, nullptr, 6).eta);
    }
}

TEST_CASE("labels point at the storm realizing the maximum")
{
    const GridWindow w = make_grid(2, 4, 1.0);
    const auto m = SpectralModel::smith_isotropic(2, 1.5);
    const Realization r = draw(m, w, nullptr, 1);
    for (Site s = 0; s < w.site_count(); ++s) {
        const StormRecord& st = r.storm(r.labels[s]);
        Point d{};
        for (int a = 0; a < 2; ++a)
            d[static_cast<std::size_t>(a)] = w.position(s)[static_cast<std::size_t>(a)] - st.center[static_cast<std::size_t>(a)];
        CHECK(st.u * std::exp(m.log_kernel(d)) == doctest::Approx(r.eta[s]).epsilon(1e-12));
    }
}

TEST_CASE("single-site extremal functions draw unit Frechet values")
{
    const auto m = SpectralModel::brown_resnick(1, 1.0, 1.0);
    const GridWindow w = GridWindow(1, 0, 1.0);
    const auto f = build_gaussian_factor(m, w);
    const int n = 10000;
    int below = 0;
    for (int i = 0; i < n; ++i)
        below += draw(m, w, &f, static_cast<std::size_t>(i)).eta[0] <= 2.0;
    const double p = std::exp(-0.5);
    const double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(below / double(n) - p) <= 3 * se);
}

TEST_CASE("unit Frechet margins at several sites")
{
    // 1 / eta(x) is Exp(1), so its mean is 1 with stderr 1 / sqrt(n).
    const GridWindow w = make_grid(2, 4, 1.0);
    const std::vector<SpectralModel> models = {
        SpectralModel::smith_isotropic(2, 1.5), SpectralModel::exp_kernel(2, 1.0),
        SpectralModel::schlather(2, 2.0), SpectralModel::brown_resnick(2, 2.0, 1.5),
        SpectralModel::composite(SpectralModel::smith_isotropic(2, 1.0), SpectralModel::schlather(2, 2.0), 0.4)};
    const std::vector<Site> sites = {0, w.origin(), w.site(Coord{3, -2, 0}), w.site_count() - 1};
    const int n = 1500;
    for (const auto& m : models) {
        std::shared_ptr<GaussianFactor> f;
        if (m.needs_gaussian())
            f = std::make_shared<GaussianFactor>(build_gaussian_factor(m, w));
        std::vector<double> sum(sites.size(), 0.0);
        for (int i = 0; i < n; ++i) {
            const Realization r = draw(m, w, f.get(), static_cast<std::size_t>(i));
            for (std::size_t k = 0; k < sites.size(); ++k)
                sum[k] += 1.0 / r.eta[sites[k]];
        }
        for (double s : sum)
            CHECK(std::abs(s / n - 1.0) <= 3.5 / std::sqrt(double(n)));
    }
}

TEST_CASE("Smith and Brown-Resnick with alpha = 2 agree in law")
{
    // Both have theta(h) = 2 G(|h| / 2) and the same cells; the two
    // backends must produce indistinguishable samples.
    const GridWindow w = make_grid(1, 4, 1.0);
    const auto smith = SpectralModel::smith_isotropic(1, 1.0);
    const auto br = SpectralModel::brown_resnick(1, 1.0, 2.0);
    const auto f = build_gaussian_factor(br, w);
    const Site o = w.origin(), y = w.site(Coord{2, 0, 0});
    const int n = 3000;
    std::vector<double> a, b;
    int same_a = 0, same_b = 0;
    for (int i = 0; i < n; ++i) {
        const Realization ra = draw(smith, w, nullptr, static_cast<std::size_t>(i));
        const Realization rb = draw(br, w, &f, static_cast<std::size_t>(i));
        a.push_back(1.0 / std::max(ra.eta[o], ra.eta[y]));
        b.push_back(1.0 / std::max(rb.eta[o], rb.eta[y]));
        same_a += ra.labels[o] == ra.labels[y];
        same_b += rb.labels[o] == rb.labels[y];
    }
    // Critical value of the two-sample KS test at level 0.001.
    CHECK(ks_statistic(a, b) < 1.949 * std::sqrt(2.0 / n));
    const double pa = same_a / double(n), pb = same_b / double(n);
    const double se = std::sqrt(pa * (1 - pa) / n + pb * (1 - pb) / n);
    CHECK(std::abs(pa - pb) <= 3.5 * se);
}

TEST_CASE("composite storms carry their component")
{
    const GridWindow w = make_grid(2, 4, 1.0);
    const auto comp = SpectralModel::composite(SpectralModel::smith_isotropic(2, 1.0),
                                               SpectralModel::schlather(2, 2.0), 0.5);
    const Realization r = draw(comp, w, nullptr, 3);
    for (Site s = 0; s < w.site_count(); ++s)
        CHECK(conservative_wins(r, s) == (r.storm(r.labels[s]).component == Component::Conservative));
}

TEST_CASE("storm budget is enforced")
{
    SimulationOptions opts;
    opts.storm_budget = 3;
    RandomStream rng(1, 0, 0);
    CHECK_THROWS_AS(simulate_moving_max(SpectralModel::smith_isotropic(2, 1.0), make_grid(2, 8, 1.0), rng, opts),
                    SimulationError);
}
