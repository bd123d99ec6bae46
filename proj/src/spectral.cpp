#include "stormcells/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stormcells/gaussian_factor.hpp"

namespace stormcells {

namespace {

void require_dim(int dim)
{
    if (dim < 1 || dim > 3)
        throw std::invalid_argument("model dimension must be 1, 2 or 3");
}

void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

double norm2(const Point& p, int dim)
{
    double s = 0.0;
    for (int a = 0; a < dim; ++a)
        s += p[a] * p[a];
    return s;
}

double std_normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

// Smallest t with P[Gamma(dim, 1) > t] < tail.
double gamma_tail_point(int dim, double tail)
{
    auto survival = [dim](double t) {
        double term = 1.0, sum = 1.0;
        for (int k = 1; k < dim; ++k) {
            term *= t / k;
            sum += term;
        }
        return std::exp(-t) * sum;
    };
    double lo = 0.0, hi = 200.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (survival(mid) < tail ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace

std::string to_string(ModelKind kind)
{
    switch (kind) {
    case ModelKind::SmithGauss: return "smith";
    case ModelKind::ExpKernel: return "exp_kernel";
    case ModelKind::SchlatherGauss: return "schlather";
    case ModelKind::BrownResnick: return "brown_resnick";
    case ModelKind::Constant: return "constant";
    case ModelKind::Composite: return "composite";
    }
    return "unknown";
}

std::string to_string(Correlation corr)
{
    return corr == Correlation::SquaredExponential ? "squared_exponential" : "exponential";
}

SpectralModel SpectralModel::smith(Eigen::MatrixXd covariance)
{
    const auto dim = static_cast<int>(covariance.rows());
    require_dim(dim);
    if (covariance.cols() != dim)
        throw std::invalid_argument("Smith covariance must be square");
    if (!covariance.isApprox(covariance.transpose(), 1e-12))
        throw std::invalid_argument("Smith covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("Smith covariance must be positive definite");

    SpectralModel m(ModelKind::SmithGauss, dim);
    m.smith_.covariance = covariance;
    m.smith_precision_ = llt.solve(Eigen::MatrixXd::Identity(dim, dim));
    const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    m.smith_log_norm_ = -0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
    m.smith_max_eig_ = eig.eigenvalues().maxCoeff();
    return m;
}

SpectralModel SpectralModel::smith_isotropic(int dim, double sigma)
{
    require_dim(dim);
    require_positive(sigma, "Smith sigma");
    return smith(Eigen::MatrixXd::Identity(dim, dim) * (sigma * sigma));
}

SpectralModel SpectralModel::exp_kernel(int dim, double range)
{
    require_dim(dim);
    require_positive(range, "exponential kernel range v");
    SpectralModel m(ModelKind::ExpKernel, dim);
    m.exp_.range = range;
    m.exp_log_norm_ = std::log(exp_kernel_constant(range, dim));
    return m;
}

SpectralModel SpectralModel::schlather(int dim, double length, Correlation corr)
{
    require_dim(dim);
    require_positive(length, "Schlather correlation length");
    SpectralModel m(ModelKind::SchlatherGauss, dim);
    m.schlather_ = {corr, length};
    return m;
}

SpectralModel SpectralModel::brown_resnick(int dim, double scale, double exponent)
{
    require_dim(dim);
    require_positive(scale, "Brown-Resnick scale s");
    if (!(exponent > 0.0 && exponent <= 2.0))
        throw std::invalid_argument("Brown-Resnick exponent alpha must lie in (0, 2]");
    SpectralModel m(ModelKind::BrownResnick, dim);
    m.br_ = {scale, exponent};
    return m;
}

SpectralModel SpectralModel::constant(int dim)
{
    require_dim(dim);
    return SpectralModel(ModelKind::Constant, dim);
}

SpectralModel SpectralModel::composite(const SpectralModel& smith, const SpectralModel& schlather,
                                       double conservative_weight)
{
    if (smith.kind() != ModelKind::SmithGauss || schlather.kind() != ModelKind::SchlatherGauss)
        throw std::invalid_argument("composite model needs a Smith and a Schlather component");
    if (smith.dim() != schlather.dim())
        throw std::invalid_argument("composite components must share the dimension");
    if (!(conservative_weight > 0.0 && conservative_weight < 1.0))
        throw std::invalid_argument("composite conservative weight must lie in (0, 1)");
    SpectralModel m(ModelKind::Composite, smith.dim());
    m.weight_ = conservative_weight;
    m.parts_ = {smith, schlather};
    return m;
}

std::string SpectralModel::name() const
{
    return to_string(kind_);
}

const SmithParams& SpectralModel::smith_params() const
{
    if (kind_ != ModelKind::SmithGauss)
        throw std::logic_error("not a Smith model");
    return smith_;
}

const ExpKernelParams& SpectralModel::exp_params() const
{
    if (kind_ != ModelKind::ExpKernel)
        throw std::logic_error("not an exponential-kernel model");
    return exp_;
}

const SchlatherParams& SpectralModel::schlather_params() const
{
    if (kind_ != ModelKind::SchlatherGauss)
        throw std::logic_error("not a Schlather model");
    return schlather_;
}

const BrownResnickParams& SpectralModel::brown_resnick_params() const
{
    if (kind_ != ModelKind::BrownResnick)
        throw std::logic_error("not a Brown-Resnick model");
    return br_;
}

double SpectralModel::conservative_weight() const
{
    if (kind_ != ModelKind::Composite)
        throw std::logic_error("not a composite model");
    return weight_;
}

const SpectralModel& SpectralModel::dissipative_part() const
{
    if (kind_ != ModelKind::Composite)
        throw std::logic_error("not a composite model");
    return parts_[0];
}

const SpectralModel& SpectralModel::conservative_part() const
{
    if (kind_ != ModelKind::Composite)
        throw std::logic_error("not a composite model");
    return parts_[1];
}

bool SpectralModel::is_moving_max() const noexcept
{
    return kind_ == ModelKind::SmithGauss || kind_ == ModelKind::ExpKernel ||
           kind_ == ModelKind::Constant;
}

bool SpectralModel::needs_gaussian() const noexcept
{
    return kind_ == ModelKind::SchlatherGauss || kind_ == ModelKind::BrownResnick ||
           kind_ == ModelKind::Composite;
}

double SpectralModel::correlation(const Point& lag) const
{
    const auto& p = schlather_params();
    const double r2 = norm2(lag, dim_);
    if (p.correlation == Correlation::SquaredExponential)
        return std::exp(-r2 / (2.0 * p.length * p.length));
    return std::exp(-std::sqrt(r2) / p.length);
}

double SpectralModel::variogram(const Point& lag) const
{
    const auto& p = brown_resnick_params();
    const double r = std::sqrt(norm2(lag, dim_));
    if (r == 0.0)
        return 0.0;
    return std::pow(r / p.scale, p.exponent);
}

const Eigen::MatrixXd& SpectralModel::smith_precision() const
{
    (void)smith_params();
    return smith_precision_;
}

double smith_quadratic(const SpectralModel& model, const Point& x)
{
    const Eigen::MatrixXd& prec = model.smith_precision();
    double q = 0.0;
    for (int a = 0; a < model.dim(); ++a)
        for (int b = 0; b < model.dim(); ++b)
            q += x[a] * prec(a, b) * x[b];
    return q;
}

double SpectralModel::log_kernel(const Point& x) const
{
    switch (kind_) {
    case ModelKind::SmithGauss:
        return smith_log_norm_ - 0.5 * smith_quadratic(*this, x);
    case ModelKind::ExpKernel:
        return exp_log_norm_ - std::sqrt(norm2(x, dim_)) / exp_.range;
    case ModelKind::Constant:
        return 0.0;
    default:
        throw std::logic_error("log_kernel needs a moving-maximum model");
    }
}

double SpectralModel::center_margin() const
{
    switch (kind_) {
    case ModelKind::SmithGauss:
        return 6.0 * std::sqrt(smith_max_eig_);
    case ModelKind::ExpKernel:
        // Radial tail of the normalized kernel is Gamma(d, 1) in units of v.
        return exp_.range * gamma_tail_point(dim_, 1e-8);
    case ModelKind::Constant:
        return 0.0;
    default:
        throw std::logic_error("center_margin needs a moving-maximum model");
    }
}

double exp_kernel_constant(double range, int dim)
{
    switch (dim) {
    case 1: return 1.0 / (2.0 * range);
    case 2: return 1.0 / (2.0 * std::numbers::pi * range * range);
    case 3: return 1.0 / (8.0 * std::numbers::pi * range * range * range);
    default: throw std::invalid_argument("exp kernel dimension must be 1, 2 or 3");
    }
}

CenterDomain center_domain(const SpectralModel& model, const GridWindow& window)
{
    if (model.kind() == ModelKind::Constant)
        return {0.0, 1.0};
    const double half = window.half_width() * window.spacing() + model.center_margin();
    return {half, std::pow(2.0 * half, window.dim())};
}

std::optional<double> theta_analytic(const SpectralModel& model, const Point& lag)
{
    const int d = model.dim();
    const double r2 = norm2(lag, d);
    if (r2 == 0.0)
        return 1.0;
    switch (model.kind()) {
    case ModelKind::SmithGauss:
        return 2.0 * std_normal_cdf(0.5 * std::sqrt(smith_quadratic(model, lag)));
    case ModelKind::ExpKernel:
        if (d != 1)
            return std::nullopt;
        return 2.0 - std::exp(-std::sqrt(r2) / (2.0 * model.exp_params().range));
    case ModelKind::SchlatherGauss:
        return 1.0 + std::sqrt((1.0 - model.correlation(lag)) / 2.0);
    case ModelKind::BrownResnick:
        return 2.0 * std_normal_cdf(0.5 * std::sqrt(model.variogram(lag)));
    case ModelKind::Constant:
        return 1.0;
    case ModelKind::Composite: {
        const auto td = theta_analytic(model.dissipative_part(), lag);
        const auto tc = theta_analytic(model.conservative_part(), lag);
        const double a = model.conservative_weight();
        return (1.0 - a) * *td + a * *tc;
    }
    }
    return std::nullopt;
}

std::optional<double> sup_bound(const SpectralModel& model)
{
    if (!model.is_moving_max())
        return std::nullopt;
    return std::exp(model.log_kernel(Point{0.0, 0.0, 0.0}));
}

Point physical_lag(const GridWindow& window, const Coord& lag)
{
    return {lag[0] * window.spacing(), lag[1] * window.spacing(), lag[2] * window.spacing()};
}

std::vector<double> sample_spectral(const SpectralModel& model, const GridWindow& window,
                                    const GaussianFactor* factor, RandomStream& rng,
                                    const SpectralOverrides& overrides)
{
    if (model.dim() != window.dim())
        throw std::invalid_argument("model and window dimensions differ");
    const std::size_t n = window.site_count();
    std::vector<double> y(n);

    if (model.is_moving_max()) {
        if (model.kind() == ModelKind::Constant) {
            std::fill(y.begin(), y.end(), 1.0);
            return y;
        }
        const CenterDomain dom = center_domain(model, window);
        Point center{0.0, 0.0, 0.0};
        if (overrides.center) {
            center = *overrides.center;
        } else {
            for (int a = 0; a < window.dim(); ++a)
                center[a] = (2.0 * rng.uniform() - 1.0) * dom.half_side;
        }
        for (Site s = 0; s < n; ++s) {
            Point p = window.position(s);
            for (int a = 0; a < window.dim(); ++a)
                p[a] -= center[a];
            y[s] = dom.volume * std::exp(model.log_kernel(p));
        }
        return y;
    }

    if (model.kind() == ModelKind::Composite) {
        if (rng.uniform() < model.conservative_weight())
            return sample_spectral(model.conservative_part(), window, factor, rng, overrides);
        return sample_spectral(model.dissipative_part(), window, nullptr, rng, overrides);
    }

    std::vector<double> w;
    if (overrides.gaussian) {
        w = *overrides.gaussian;
        if (w.size() != n)
            throw std::invalid_argument("forced Gaussian vector has the wrong length");
    } else {
        if (factor == nullptr)
            throw std::invalid_argument(model.name() + " sampling needs a Gaussian factor");
        if (!(factor->window() == window))
            throw std::invalid_argument("Gaussian factor was built for a different window");
        w.resize(n);
        factor->sample(rng, w);
    }

    if (model.kind() == ModelKind::SchlatherGauss) {
        const double c = std::sqrt(2.0 * std::numbers::pi);
        for (Site s = 0; s < n; ++s)
            y[s] = c * std::max(w[s], 0.0);
    } else {
        for (Site s = 0; s < n; ++s)
            y[s] = std::exp(w[s] - 0.5 * model.variogram(window.position(s)));
    }
    return y;
}

}  // namespace stormcells
