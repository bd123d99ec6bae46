#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stormcells/lattice.hpp"
#include "stormcells/random.hpp"

namespace stormcells {

enum class ModelKind {
    SmithGauss,      ///< moving maximum of a Gaussian density kernel
    ExpKernel,       ///< moving maximum of a normalized exp(-|x|/v) kernel
    SchlatherGauss,  ///< extremal Gaussian process, Y = sqrt(2 pi) max(W, 0)
    BrownResnick,    ///< Y = exp(W - sigma^2 / 2), W with stationary increments
    Constant,        ///< Y == 1; test model with a single cell
    Composite,       ///< (1 - a) * Smith  v  a * Schlather, a = conservative weight
};

enum class Correlation { SquaredExponential, Exponential };

std::string to_string(ModelKind kind);
std::string to_string(Correlation corr);

struct SmithParams {
    Eigen::MatrixXd covariance;  // d x d, symmetric positive definite
};

struct ExpKernelParams {
    double range = 1.0;  // v
};

struct SchlatherParams {
    Correlation correlation = Correlation::SquaredExponential;
    double length = 1.0;  // ell
};

struct BrownResnickParams {
    double scale = 1.0;     // s
    double exponent = 1.0;  // alpha in (0, 2]
};

/// One of the supported spectral laws for Y, together with the lattice
/// dimension it lives in. Constructed through the named factories, which
/// validate parameters.
class SpectralModel {
  public:
    static SpectralModel smith(Eigen::MatrixXd covariance);
    static SpectralModel smith_isotropic(int dim, double sigma);
    static SpectralModel exp_kernel(int dim, double range);
    static SpectralModel schlather(int dim, double length,
                                   Correlation corr = Correlation::SquaredExponential);
    static SpectralModel brown_resnick(int dim, double scale, double exponent);
    static SpectralModel constant(int dim);
    static SpectralModel composite(const SpectralModel& smith, const SpectralModel& schlather,
                                   double conservative_weight);

    ModelKind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    std::string name() const;

    const SmithParams& smith_params() const;
    const Eigen::MatrixXd& smith_precision() const;
    const ExpKernelParams& exp_params() const;
    const SchlatherParams& schlather_params() const;
    const BrownResnickParams& brown_resnick_params() const;
    double conservative_weight() const;

    /// Moving-maximum kernels (Smith, exponential, constant) are bounded.
    bool is_moving_max() const noexcept;
    bool needs_gaussian() const noexcept;

    /// Schlather correlation rho(h) at a physical lag.
    double correlation(const Point& lag) const;
    /// Brown-Resnick variogram gamma(h) = (|h| / s)^alpha.
    double variogram(const Point& lag) const;

    /// log h(x) of a moving-maximum kernel at physical displacement x.
    double log_kernel(const Point& x) const;
    /// Margin added around the window when drawing moving-maximum centers.
    double center_margin() const;

    /// For the composite model: the Smith and Schlather components.
    const SpectralModel& dissipative_part() const;
    const SpectralModel& conservative_part() const;

  private:
    SpectralModel(ModelKind kind, int dim) : kind_(kind), dim_(dim) {}

    ModelKind kind_;
    int dim_;
    SmithParams smith_;
    Eigen::MatrixXd smith_precision_;
    double smith_log_norm_ = 0.0;
    double smith_max_eig_ = 0.0;
    ExpKernelParams exp_;
    double exp_log_norm_ = 0.0;
    SchlatherParams schlather_;
    BrownResnickParams br_;
    double weight_ = 0.0;
    std::vector<SpectralModel> parts_;
};

/// Normalizing constant c with c * integral exp(-|x|/v) dx = 1 over R^d.
double exp_kernel_constant(double range, int dim);

/// Mahalanobis form x^T Sigma^{-1} x of the Smith covariance.
double smith_quadratic(const SpectralModel& model, const Point& x);

/// Enlarged box [-L, L]^d from which moving-maximum centers are drawn.
struct CenterDomain {
    double half_side = 0.0;
    double volume = 0.0;
};
CenterDomain center_domain(const SpectralModel& model, const GridWindow& window);

/// Closed-form extremal coefficient theta(h) at a physical lag, or nullopt
/// where no closed form is implemented (exponential kernel with d >= 2).
std::optional<double> theta_analytic(const SpectralModel& model, const Point& lag);

/// Supremum of a bounded kernel (h(0) or c); nullopt for unbounded laws.
std::optional<double> sup_bound(const SpectralModel& model);

/// Physical lag vector from integer lattice lag.
Point physical_lag(const GridWindow& window, const Coord& lag);

class GaussianFactor;

/// Pins parts of a spectral draw for deterministic unit tests.
struct SpectralOverrides {
    std::optional<Point> center;                 ///< moving-maximum center X
    std::optional<std::vector<double>> gaussian; ///< W on the window, normative order
};

/// One draw of the spectral process Y on the window.
///
/// Moving-maximum kernels return V * h(x - X) with X uniform on the center
/// domain of volume V, so E[Y(x)] = 1 up to the truncated kernel mass.
std::vector<double> sample_spectral(const SpectralModel& model, const GridWindow& window,
                                    const GaussianFactor* factor, RandomStream& rng,
                                    const SpectralOverrides& overrides = {});

}  // namespace stormcells
