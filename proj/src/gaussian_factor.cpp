#include "stormcells/gaussian_factor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "stormcells/error.hpp"

namespace stormcells {

namespace {

constexpr int kMaxJitterSteps = 6;
constexpr double kJitterStart = 1e-12;
constexpr double kPivotTolerance = 1e-12;
constexpr double kBandTolerance = 1e-17;
// Dense factors are n x r doubles; beyond this the window is out of scope.
constexpr std::size_t kMaxDenseSites = 6000;

const SpectralModel& gaussian_part(const SpectralModel& model)
{
    if (model.kind() == ModelKind::Composite)
        return model.conservative_part();
    if (model.kind() != ModelKind::SchlatherGauss && model.kind() != ModelKind::BrownResnick)
        throw std::invalid_argument("Gaussian factor needs a Schlather or Brown-Resnick model, got " +
                                    model.name());
    return model;
}

Point difference(const Point& a, const Point& b)
{
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

// Plain Cholesky with jitter escalation; returns the jitter that succeeded.
double escalated_llt(const Eigen::MatrixXd& cov, Eigen::MatrixXd& lower)
{
    const double mean_diag = cov.diagonal().mean();
    double jitter = 0.0;
    for (int step = 0; step <= kMaxJitterSteps; ++step) {
        Eigen::MatrixXd shifted = cov;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            lower = llt.matrixL();
            return jitter;
        }
        jitter = (step == 0) ? kJitterStart * mean_diag : jitter * 10.0;
    }
    throw FactorizationError("Cholesky failed after maximum jitter escalation");
}

}  // namespace

double gaussian_covariance(const SpectralModel& model, const GridWindow& window, Site x, Site y)
{
    const SpectralModel& g = gaussian_part(model);
    const Point px = window.position(x);
    const Point py = window.position(y);
    if (g.kind() == ModelKind::SchlatherGauss)
        return g.correlation(difference(px, py));
    return 0.5 * (g.variogram(px) + g.variogram(py) - g.variogram(difference(px, py)));
}

void GaussianFactor::apply_axis(int axis, std::vector<double>& data) const
{
    const int m = window_.side();
    const int d = window_.dim();
    std::size_t inner = 1;
    for (int a = axis + 1; a < d; ++a)
        inner *= static_cast<std::size_t>(m);
    const std::size_t outer = data.size() / (inner * static_cast<std::size_t>(m));

    for (std::size_t o = 0; o < outer; ++o) {
        double* base = data.data() + o * static_cast<std::size_t>(m) * inner;
        // Descending rows keep the inputs j < i untouched until row i is done.
        for (int i = m - 1; i >= 0; --i) {
            double* row_i = base + static_cast<std::size_t>(i) * inner;
            const double lii = axis_(i, i);
            if (inner == 1) {
                double acc = lii * row_i[0];
                for (int j = axis_row_start_[i]; j < i; ++j)
                    acc += axis_(i, j) * base[j];
                row_i[0] = acc;
            } else {
                for (std::size_t t = 0; t < inner; ++t)
                    row_i[t] *= lii;
                for (int j = axis_row_start_[i]; j < i; ++j) {
                    const double lij = axis_(i, j);
                    const double* row_j = base + static_cast<std::size_t>(j) * inner;
                    for (std::size_t t = 0; t < inner; ++t)
                        row_i[t] += lij * row_j[t];
                }
            }
        }
    }
}

void GaussianFactor::apply(std::span<const double> z, std::span<double> out) const
{
    const std::size_t n = window_.site_count();
    if (z.size() != rank_ || out.size() != n)
        throw std::invalid_argument("Gaussian factor apply: size mismatch");
    if (layout_ == Layout::Dense) {
        // Row by row so apply and apply_row agree bit for bit.
        for (Site j = 0; j < n; ++j)
            out[j] = apply_row(j, z);
        return;
    }
    std::vector<double> data(z.begin(), z.end());
    for (int a = 0; a < window_.dim(); ++a)
        apply_axis(a, data);
    std::copy(data.begin(), data.end(), out.begin());
}

double GaussianFactor::apply_row(Site j, std::span<const double> z) const
{
    return apply_row_with(j, [&](std::size_t i) { return z[i]; });
}

void GaussianFactor::sample(RandomStream& rng, std::span<double> out) const
{
    std::vector<double> z(rank_);
    for (double& v : z)
        v = rng.normal();
    apply(z, out);
}

Eigen::MatrixXd GaussianFactor::dense_factor() const
{
    const std::size_t n = window_.site_count();
    if (layout_ == Layout::Dense)
        return dense_t_.transpose();
    Eigen::MatrixXd l(n, rank_);
    std::vector<double> e(rank_, 0.0), col(n);
    for (std::size_t k = 0; k < rank_; ++k) {
        std::fill(e.begin(), e.end(), 0.0);
        e[k] = 1.0;
        apply(e, col);
        for (std::size_t i = 0; i < n; ++i)
            l(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = col[i];
    }
    return l;
}

Eigen::MatrixXd GaussianFactor::reconstruct() const
{
    const Eigen::MatrixXd l = dense_factor();
    return l * l.transpose();
}

GaussianFactor build_gaussian_factor(const SpectralModel& model, const GridWindow& window)
{
    const SpectralModel& g = gaussian_part(model);
    if (g.dim() != window.dim())
        throw std::invalid_argument("model and window dimensions differ");

    GaussianFactor f(window);
    const std::size_t n = window.site_count();

    if (g.kind() == ModelKind::SchlatherGauss &&
        g.schlather_params().correlation == Correlation::SquaredExponential) {
        // exp(-|h|^2 / 2 l^2) is a product over axes, so C = C1 (x) ... (x) C1.
        const int m = window.side();
        const double ell = g.schlather_params().length;
        Eigen::MatrixXd c1(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double h = (i - j) * window.spacing();
                c1(i, j) = std::exp(-h * h / (2.0 * ell * ell));
            }
        f.jitter_ = escalated_llt(c1, f.axis_);
        f.axis_row_start_.assign(static_cast<std::size_t>(m), 0);
        for (int i = 0; i < m; ++i) {
            const double scale = f.axis_.row(i).cwiseAbs().maxCoeff();
            int start = 0;
            while (start < i && std::abs(f.axis_(i, start)) <= kBandTolerance * scale)
                ++start;
            f.axis_row_start_[static_cast<std::size_t>(i)] = start;
        }
        f.axis_rows_.resize(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                f.axis_rows_[static_cast<std::size_t>(i * m + j)] = f.axis_(i, j);
        f.layout_ = GaussianFactor::Layout::Kronecker;
        f.rank_ = n;
        return f;
    }

    if (n > kMaxDenseSites)
        throw std::invalid_argument("window too large for a dense Gaussian factor (" +
                                    std::to_string(n) + " sites)");

    // Rank-revealing pivoted Cholesky.
    std::vector<Point> pos(n);
    for (Site s = 0; s < n; ++s)
        pos[s] = window.position(s);
    auto cov = [&](Site x, Site y) {
        if (g.kind() == ModelKind::SchlatherGauss)
            return g.correlation(difference(pos[x], pos[y]));
        return 0.5 * (g.variogram(pos[x]) + g.variogram(pos[y]) -
                      g.variogram(difference(pos[x], pos[y])));
    };

    Eigen::VectorXd base_diag(static_cast<Eigen::Index>(n));
    for (Site s = 0; s < n; ++s)
        base_diag(static_cast<Eigen::Index>(s)) = cov(s, s);
    const double max_diag = base_diag.maxCoeff();
    const double mean_diag = base_diag.mean();
    if (max_diag < 0.0 || !std::isfinite(max_diag))
        throw FactorizationError("covariance has a negative or non-finite variance on this window");
    if (max_diag == 0.0) {
        // W is identically zero, e.g. Brown-Resnick on the single site {0}.
        f.dense_t_ = Eigen::MatrixXd::Zero(0, static_cast<Eigen::Index>(n));
        f.rank_ = 0;
        f.layout_ = GaussianFactor::Layout::Dense;
        return f;
    }

    double jitter = 0.0;
    for (int step = 0; step <= kMaxJitterSteps; ++step) {
        const double tol = kPivotTolerance * (max_diag + jitter);
        Eigen::VectorXd resid = base_diag;
        resid.array() += jitter;
        std::vector<char> pivoted(n, 0);
        Eigen::MatrixXd l(static_cast<Eigen::Index>(n), std::min<Eigen::Index>(64, n));
        Eigen::Index rank = 0;
        bool indefinite = false;
        Eigen::VectorXd col(static_cast<Eigen::Index>(n));

        while (rank < static_cast<Eigen::Index>(n)) {
            Eigen::Index p = -1;
            double best = tol;
            for (Site i = 0; i < n; ++i) {
                const double r = resid(static_cast<Eigen::Index>(i));
                if (!pivoted[i] && r > best) {
                    best = r;
                    p = static_cast<Eigen::Index>(i);
                }
            }
            if (p < 0)
                break;
            for (Site i = 0; i < n; ++i)
                col(static_cast<Eigen::Index>(i)) = cov(i, static_cast<Site>(p));
            col(p) += jitter;
            if (rank > 0)
                col.noalias() -= l.leftCols(rank) * l.row(p).head(rank).transpose();
            const double piv = std::sqrt(best);
            col /= piv;
            for (Site i = 0; i < n; ++i)
                if (pivoted[i])
                    col(static_cast<Eigen::Index>(i)) = 0.0;
            col(p) = piv;
            pivoted[static_cast<std::size_t>(p)] = 1;
            for (Site i = 0; i < n; ++i) {
                if (pivoted[i])
                    continue;
                const auto ii = static_cast<Eigen::Index>(i);
                resid(ii) -= col(ii) * col(ii);
                if (resid(ii) < -1e-8 * max_diag)
                    indefinite = true;
            }
            if (indefinite)
                break;
            if (rank == l.cols())
                l.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(2 * rank, n));
            l.col(rank) = col;
            ++rank;
        }
        if (!indefinite) {
            f.dense_t_ = l.leftCols(rank).transpose();
            f.rank_ = static_cast<std::size_t>(rank);
            f.jitter_ = jitter;
            f.layout_ = GaussianFactor::Layout::Dense;
            return f;
        }
        jitter = (step == 0) ? kJitterStart * mean_diag : jitter * 10.0;
    }
    throw FactorizationError("pivoted Cholesky failed after maximum jitter escalation; the " +
                             g.name() + " parameterization is not a valid covariance on this grid");
}

}  // namespace stormcells
