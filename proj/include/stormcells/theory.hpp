#pragma once

#include <string>
#include <vector>

#include "stormcells/tessellation.hpp"

namespace stormcells {

// Formula-side estimators. Each replicate pairs a fresh spectral draw Y with
// an independent simulation of eta (SimulationPlan substreams +2 and +1), and
// averages a functional of Y / eta.

/// min over K u {x} of Y / eta; its mean is P[K subset of C(x)].
double coverage_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                     const SiteSet& K);
/// (Y(x)/eta(x) - max over window \ K of Y/eta)^+, the max over an empty set
/// being 0; its mean is the window-censored P[C(x) subset of K].
double containment_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                        const SiteSet& K);
/// sum over sites y of min(Y(x)/eta(x), Y(y)/eta(y)) times the site measure.
double volume_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                   double cell_measure);
/// (Y(x)/eta(x) - max over the annulus of Y/eta)^+.
double bounded_term(const std::vector<double>& Y, const std::vector<double>& eta, Site x,
                    const SiteSet& annulus);
/// 1 / max(eta(x), eta(y)), which is Exp(theta) distributed.
inline double inverse_max(const std::vector<double>& eta, Site x, Site y)
{
    return 1.0 / std::max(eta[x], eta[y]);
}

/// Sites whose sup-norm distance to x exceeds inner_r: the stand-in for
/// "far away" in the boundedness formula.
SiteSet annulus_sites(const GridWindow& w, Site x, int inner_r);

EstimatorReport formula_coverage(const SimulationPlan& plan, Site x, const SiteSet& K,
                                 std::size_t n);
EstimatorReport formula_containment(const SimulationPlan& plan, Site x, const SiteSet& K,
                                    std::size_t n);
EstimatorReport expected_volume_formula(const SimulationPlan& plan, Site x, std::size_t n);
EstimatorReport bounded_prob_formula(const SimulationPlan& plan, Site x, int inner_r,
                                     std::size_t n);

/// theta_hat = 1 / mean(1 / max(eta(0), eta(h))) with the delta-method
/// stderr se_mean / mean^2; the reference is the closed form when known.
EstimatorReport theta_from_inverse_max(const std::vector<double>& inv_max);
EstimatorReport theta_empirical(const SimulationPlan& plan, const Coord& h, std::size_t n);

/// (2 - theta)/2 <= pi <= 2 (2 - theta), each side widened by three combined
/// standard errors. Slacks are the raw (unwidened) gaps; negative means the
/// point estimates violate that side.
struct ComparisonResult {
    bool pass = false;
    double lower_slack = 0.0;   // pi - (2 - theta)/2
    double upper_slack = 0.0;   // 2 (2 - theta) - pi
    double lower_margin = 0.0;  // 3 sqrt(se_pi^2 + (se_theta / 2)^2)
    double upper_margin = 0.0;  // 3 sqrt(se_pi^2 + (2 se_theta)^2)
};
ComparisonResult comparison_check(const EstimatorReport& pi, const EstimatorReport& theta);

/// Weights of the conservative/dissipative and positive/null decompositions.
struct ConeClassification {
    ModelKind kind = ModelKind::SmithGauss;
    double alpha_c = 0.0;
    double alpha_d = 0.0;
    double alpha_p = 0.0;
    double alpha_n = 0.0;
    std::string provenance;
};

/// Assigned from model facts, not estimated. Moving maxima and Brown-Resnick
/// (variogram unbounded) are purely dissipative and null; Schlather (a
/// stationary spectral process) is purely conservative and positive. The
/// composite model carries its weight a as alpha_C = alpha_P = a. Throws for
/// the constant test model.
ConeClassification cone_classification(const SpectralModel& model);

}  // namespace stormcells
