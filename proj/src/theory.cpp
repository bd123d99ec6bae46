#include "stormcells/theory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stormcells {

double coverage_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                     const SiteSet& K)
{
    double m = Y[x] / eta[x];
    for (Site y : K.members())
        m = std::min(m, Y[y] / eta[y]);
    return m;
}

double containment_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                        const SiteSet& K)
{
    double outside = 0.0;
    for (Site s = 0; s < Y.size(); ++s)
        if (!K.contains(s))
            outside = std::max(outside, Y[s] / eta[s]);
    return std::max(0.0, Y[x] / eta[x] - outside);
}

double volume_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                   double cell_measure)
{
    const double vx = Y[x] / eta[x];
    double sum = 0.0;
    for (Site s = 0; s < Y.size(); ++s)
        sum += std::min(vx, Y[s] / eta[s]);
    return sum * cell_measure;
}

double bounded_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                    const SiteSet& annulus)
{
    double far = 0.0;
    for (Site s : annulus.members())
        far = std::max(far, Y[s] / eta[s]);
    return std::max(0.0, Y[x] / eta[x] - far);
}

SiteSet annulus_sites(const GridWindow& w, Site x, int inner_r)
{
    if (inner_r < 0 || inner_r >= w.half_width())
        throw std::invalid_argument("annulus inner radius must lie in [0, R)");
    const Coord cx = w.coord(x);
    std::vector<Site> out;
    for (Site s = 0; s < w.site_count(); ++s) {
        const Coord c = w.coord(s);
        int dist = 0;
        for (int a = 0; a < w.dim(); ++a)
            dist = std::max(dist, std::abs(c[static_cast<std::size_t>(a)] - cx[static_cast<std::size_t>(a)]));
        if (dist > inner_r)
            out.push_back(s);
    }
    if (out.empty())
        throw std::invalid_argument("annulus is empty on this window");
    return SiteSet(w, std::move(out));
}

namespace {

template <class F>
EstimatorReport formula_estimate(const SimulationPlan& plan, std::size_t n, const std::string& name,
                                 F&& term)
{
    auto values = replicate_values(plan, n, [&](std::size_t r) {
        const std::vector<double> Y = plan.spectral_draw(r);
        const Realization eta = plan.realize_independent(r);
        return term(Y, eta.eta);
    });
    return summarize(name, values);
}

}  // namespace

EstimatorReport formula_coverage(const SimulationPlan& plan, Site x, const SiteSet& K,
                                 std::size_t n)
{
    if (!(K.window() == plan.window))
        throw std::invalid_argument("site set belongs to a different window");
    return formula_estimate(plan, n, "coverage_formula", [&](const auto& Y, const auto& eta) {
        return coverage_term(Y, eta, x, K);
    });
}

EstimatorReport formula_containment(const SimulationPlan& plan, Site x, const SiteSet& K,
                                    std::size_t n)
{
    if (!(K.window() == plan.window))
        throw std::invalid_argument("site set belongs to a different window");
    if (!K.contains(x))
        throw std::invalid_argument("containment needs x in K");
    EstimatorReport rep = formula_estimate(plan, n, "containment_formula",
                                           [&](const auto& Y, const auto& eta) {
                                               return containment_term(Y, eta, x, K);
                                           });
    rep.window_censored = true;
    return rep;
}

EstimatorReport expected_volume_formula(const SimulationPlan& plan, Site x, std::size_t n)
{
    const double cm = plan.window.cell_measure();
    return formula_estimate(plan, n, "volume_formula", [&](const auto& Y, const auto& eta) {
        return volume_term(Y, eta, x, cm);
    });
}

EstimatorReport bounded_prob_formula(const SimulationPlan& plan, Site x, int inner_r,
                                     std::size_t n)
{
    const SiteSet annulus = annulus_sites(plan.window, x, inner_r);
    return formula_estimate(plan, n, "bounded_formula", [&](const auto& Y, const auto& eta) {
        return bounded_term(Y, eta, x, annulus);
    });
}

EstimatorReport theta_from_inverse_max(const std::vector<double>& inv_max)
{
    const MeanAccumulator acc = accumulate(inv_max);
    const double m = acc.mean();
    if (!(m > 0.0))
        throw std::invalid_argument("theta estimator needs positive inverse maxima");
    EstimatorReport rep;
    rep.name = "theta";
    rep.estimate = 1.0 / m;
    rep.std_error = acc.std_error_of_mean() / (m * m);
    rep.replicates = acc.n;
    return rep;
}

EstimatorReport theta_empirical(const SimulationPlan& plan, const Coord& h, std::size_t n)
{
    const Site o = plan.window.origin();
    const Site y = shifted_site(plan.window, o, h);
    auto values = replicate_values(plan, n, [&](std::size_t r) {
        const Realization real = plan.realize(r);
        return inverse_max(real.eta, o, y);
    });
    EstimatorReport rep = theta_from_inverse_max(values);
    if (auto t = theta_analytic(plan.model, physical_lag(plan.window, h))) {
        rep.reference = *t;
        rep.reference_kind = ReferenceKind::Analytic;
    }
    return rep;
}

ComparisonResult comparison_check(const EstimatorReport& pi, const EstimatorReport& theta)
{
    ComparisonResult c;
    c.lower_slack = pi.estimate - (2.0 - theta.estimate) / 2.0;
    c.upper_slack = 2.0 * (2.0 - theta.estimate) - pi.estimate;
    c.lower_margin = 3.0 * std::hypot(pi.std_error, theta.std_error / 2.0);
    c.upper_margin = 3.0 * std::hypot(pi.std_error, 2.0 * theta.std_error);
    // A few ulps of tolerance so exact boundary cases (theta = 2, pi = 0) pass.
    constexpr double eps = 1e-12;
    c.pass = c.lower_slack + c.lower_margin >= -eps && c.upper_slack + c.upper_margin >= -eps;
    return c;
}

ConeClassification cone_classification(const SpectralModel& model)
{
    ConeClassification c;
    c.kind = model.kind();
    switch (model.kind()) {
    case ModelKind::SmithGauss:
    case ModelKind::ExpKernel:
        c.alpha_d = c.alpha_n = 1.0;
        c.provenance = "moving maximum: Y(x) -> 0 as |x| -> inf, mixing";
        break;
    case ModelKind::BrownResnick:
        c.alpha_d = c.alpha_n = 1.0;
        c.provenance = "Brown-Resnick with unbounded variogram: theta -> 2, mixing";
        break;
    case ModelKind::SchlatherGauss:
        c.alpha_c = c.alpha_p = 1.0;
        c.provenance = "stationary spectral process: limsup Y > 0, positive flow";
        break;
    case ModelKind::Composite: {
        const double a = model.conservative_weight();
        c.alpha_c = c.alpha_p = a;
        c.alpha_d = c.alpha_n = 1.0 - a;
        c.provenance = "composite: weight a on the Schlather component";
        break;
    }
    case ModelKind::Constant:
        throw std::invalid_argument("cone classification is not defined for the constant test model");
    }
    return c;
}

}  // namespace stormcells
