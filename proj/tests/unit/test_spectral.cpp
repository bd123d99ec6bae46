#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "stormcells/gaussian_factor.hpp"
#include "stormcells/spectral.hpp"

using namespace stormcells;

namespace {

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// theta(h) = integral of max(f(x), f(x - h)) for a unit-mass 1-d kernel f,
// split at the kinks so Gauss-Kronrod sees smooth pieces.
template <class F>
double theta_by_quadrature(F f, double h)
{
    using boost::math::quadrature::gauss_kronrod;
    auto g = [&](double x) { return std::max(f(x), f(x - h)); };
    const double pts[] = {-60.0, 0.0, h / 2, h, 60.0 + h};
    double total = 0.0;
    for (int i = 0; i + 1 < 5; ++i)
        total += gauss_kronrod<double, 61>::integrate(g, pts[i], pts[i + 1], 15, 1e-13);
    return total;
}

double mean_of(const std::vector<double>& v, double* se = nullptr)
{
    double s = 0, s2 = 0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    const double n = static_cast<double>(v.size());
    const double m = s / n;
    if (se)
        *se = std::sqrt(std::max(0.0, s2 / n - m * m) / n);
    return m;
}

}  // namespace

TEST_CASE("extremal coefficient closed forms")
{
    const Point zero{0, 0, 0};
    const auto smith = SpectralModel::smith_isotropic(2, 1.5);
    const auto br = SpectralModel::brown_resnick(2, 1.0, 1.0);
    const auto sch = SpectralModel::schlather(2, 1.0);
    const auto ex = SpectralModel::exp_kernel(1, 1.0);
    for (const auto* m : {&smith, &br, &sch, &ex})
        CHECK(*theta_analytic(*m, zero) == doctest::Approx(1.0));

    SUBCASE("Schlather at a decorrelated lag matches 2 T2(sqrt 2)")
    {
        const double x = std::numbers::sqrt2;
        const double t2 = 0.5 + x / (2.0 * std::sqrt(2.0 + x * x));
        CHECK(*theta_analytic(sch, Point{12.0, 0, 0}) == doctest::Approx(2.0 * t2).epsilon(1e-12));
        CHECK(2.0 * t2 == doctest::Approx(1.70711).epsilon(1e-5));
    }
    SUBCASE("Brown-Resnick with gamma = 4")
    {
        // gamma(h) = |h| / s = 4 at h = 4.
        CHECK(*theta_analytic(br, Point{4.0, 0, 0}) == doctest::Approx(2.0 * normal_cdf(1.0)));
        CHECK(2.0 * normal_cdf(1.0) == doctest::Approx(1.68269).epsilon(1e-5));
    }
    SUBCASE("exponential kernel, d = 1, by quadrature")
    {
        const double q = theta_by_quadrature([](double x) { return 0.5 * std::exp(-std::abs(x)); }, 2.0);
        CHECK(*theta_analytic(ex, Point{2.0, 0, 0}) == doctest::Approx(q).epsilon(1e-10));
        CHECK(q == doctest::Approx(1.63212).epsilon(1e-5));
        const auto ex2 = SpectralModel::exp_kernel(1, 2.5);
        const double q2 = theta_by_quadrature(
            [](double x) { return std::exp(-std::abs(x) / 2.5) / 5.0; }, 3.0);
        CHECK(*theta_analytic(ex2, Point{3.0, 0, 0}) == doctest::Approx(q2).epsilon(1e-10));
    }
    SUBCASE("Smith, d = 1, by quadrature")
    {
        const double sigma = 1.3;
        const auto s1 = SpectralModel::smith_isotropic(1, sigma);
        const double q = theta_by_quadrature(
            [&](double x) {
                return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2 * std::numbers::pi));
            },
            2.2);
        CHECK(*theta_analytic(s1, Point{2.2, 0, 0}) == doctest::Approx(q).epsilon(1e-10));
    }
    SUBCASE("Schlather against Monte Carlo of max(Y0, Y1)")
    {
        // E max(Y(0), Y(h)) with Y = sqrt(2 pi) max(W, 0), corr(W(0), W(h)) = rho.
        const double rho = std::exp(-0.5);  // exp(-h^2 / (2 ell^2)) at h = ell = 1
        RandomStream rng(5, 0, 0);
        const int n = 200000;
        std::vector<double> v(n);
        for (int i = 0; i < n; ++i) {
            const double z0 = rng.normal(), z1 = rng.normal();
            const double w0 = z0, w1 = rho * z0 + std::sqrt(1 - rho * rho) * z1;
            v[static_cast<std::size_t>(i)] =
                std::sqrt(2 * std::numbers::pi) * std::max({w0, w1, 0.0});
        }
        double se = 0;
        const double m = mean_of(v, &se);
        CHECK(std::abs(*theta_analytic(sch, Point{1.0, 0, 0}) - m) <= 3.0 * se);
    }
    CHECK_FALSE(theta_analytic(SpectralModel::exp_kernel(2, 1.0), Point{1, 0, 0}).has_value());
}

TEST_CASE("kernel suprema")
{
    CHECK(*sup_bound(SpectralModel::smith_isotropic(2, 1.0)) ==
          doctest::Approx(1.0 / (2 * std::numbers::pi)));
    CHECK(*sup_bound(SpectralModel::exp_kernel(1, 1.0)) == doctest::Approx(0.5));
    CHECK(exp_kernel_constant(1.0, 2) == doctest::Approx(1.0 / (2 * std::numbers::pi)));
    CHECK(exp_kernel_constant(1.0, 3) == doctest::Approx(1.0 / (8 * std::numbers::pi)));
    CHECK_FALSE(sup_bound(SpectralModel::brown_resnick(2, 1.0, 1.0)).has_value());
    CHECK_FALSE(sup_bound(SpectralModel::schlather(2, 1.0)).has_value());
}

TEST_CASE("model parameters are validated")
{
    CHECK_THROWS(SpectralModel::smith_isotropic(2, -1.0));
    CHECK_THROWS(SpectralModel::brown_resnick(2, 1.0, 2.5));
    CHECK_THROWS(SpectralModel::exp_kernel(2, 0.0));
    Eigen::MatrixXd bad(2, 2);
    bad << 1, 2, 2, 1;  // not positive definite
    CHECK_THROWS(SpectralModel::smith(bad));
}

TEST_CASE("gaussian factors")
{
    SUBCASE("single site")
    {
        const auto f = build_gaussian_factor(SpectralModel::schlather(1, 1.0), GridWindow(1, 0, 1.0));
        const Eigen::MatrixXd c = f.reconstruct();
        REQUIRE(c.rows() == 1);
        CHECK(c(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("Brown-Resnick covariances across the origin")
    {
        const GridWindow w = make_grid(1, 1, 1.0);
        const auto br1 = SpectralModel::brown_resnick(1, 1.0, 1.0);
        const auto br2 = SpectralModel::brown_resnick(1, 1.0, 2.0);
        // (gamma(x) + gamma(y) - gamma(x - y)) / 2 at x = 1, y = -1.
        CHECK(gaussian_covariance(br1, w, 2, 0) == doctest::Approx((1.0 + 1.0 - 2.0) / 2));
        CHECK(gaussian_covariance(br2, w, 2, 0) == doctest::Approx((1.0 + 1.0 - 4.0) / 2));
        const auto f = build_gaussian_factor(br2, w);
        CHECK(f.reconstruct()(2, 0) == doctest::Approx(-1.0));
        CHECK(f.rank() == 1);
    }
    SUBCASE("reconstruction")
    {
        const GridWindow w = make_grid(2, 3, 1.0);
        for (const auto& m : {SpectralModel::schlather(2, 2.0),
                              SpectralModel::schlather(2, 1.5, Correlation::Exponential),
                              SpectralModel::brown_resnick(2, 2.0, 1.5),
                              SpectralModel::brown_resnick(2, 1.0, 2.0)}) {
            const auto f = build_gaussian_factor(m, w);
            const Eigen::MatrixXd c = f.reconstruct();
            double worst = 0.0;
            for (Site i = 0; i < w.site_count(); ++i)
                for (Site j = 0; j < w.site_count(); ++j)
                    worst = std::max(worst, std::abs(c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                                                     gaussian_covariance(m, w, i, j)));
            CHECK(worst < 1e-6);
        }
    }
    SUBCASE("apply_row agrees with apply")
    {
        const GridWindow w = make_grid(2, 4, 1.0);
        for (const auto& m : {SpectralModel::schlather(2, 2.0), SpectralModel::brown_resnick(2, 2.0, 1.0)}) {
            const auto f = build_gaussian_factor(m, w);
            RandomStream rng(1, 0, 0);
            std::vector<double> z(f.rank()), out(w.site_count());
            for (double& v : z)
                v = rng.normal();
            f.apply(z, out);
            for (Site j = 0; j < w.site_count(); ++j)
                CHECK(f.apply_row(j, z) == doctest::Approx(out[j]).epsilon(1e-12));
        }
    }
}

TEST_CASE("spectral draws")
{
    SUBCASE("Smith with the center pinned at 0")
    {
        const auto m = SpectralModel::smith_isotropic(1, 1.0);
        const GridWindow w = make_grid(1, 3, 1.0);
        RandomStream rng(1, 0, 0);
        SpectralOverrides o;
        o.center = Point{0, 0, 0};
        const auto Y = sample_spectral(m, w, nullptr, rng, o);
        // The draw carries the center-domain volume so that E Y = 1.
        const double V = center_domain(m, w).volume;
        CHECK(Y[w.origin()] / V == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi)));
        CHECK(Y[w.origin()] / V == doctest::Approx(0.39894).epsilon(1e-5));
    }
    SUBCASE("unit means")
    {
        const GridWindow w = make_grid(1, 2, 1.0);
        for (const auto& m : {SpectralModel::brown_resnick(1, 1.0, 1.0), SpectralModel::schlather(1, 1.0)}) {
            const auto f = build_gaussian_factor(m, w);
            const int n = 40000;
            std::vector<std::vector<double>> cols(w.site_count(), std::vector<double>(n));
            for (int i = 0; i < n; ++i) {
                RandomStream rng(11, static_cast<std::uint32_t>(i), 0);
                const auto Y = sample_spectral(m, w, &f, rng);
                for (Site s = 0; s < w.site_count(); ++s)
                    cols[s][static_cast<std::size_t>(i)] = Y[s];
            }
            for (const auto& c : cols) {
                double se = 0;
                const double mean = mean_of(c, &se);
                CHECK(std::abs(mean - 1.0) <= 3.0 * se);
            }
        }
    }
}
