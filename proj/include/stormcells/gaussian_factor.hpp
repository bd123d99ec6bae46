#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stormcells/lattice.hpp"
#include "stormcells/random.hpp"
#include "stormcells/spectral.hpp"

namespace stormcells {

/// Covariance of the Gaussian field behind a spectral model at two sites.
///
/// Schlather: rho(x - y). Brown-Resnick: (gamma(x) + gamma(y) - gamma(x - y)) / 2,
/// the field pinned to W(0) = 0.
double gaussian_covariance(const SpectralModel& model, const GridWindow& window, Site x, Site y);

/// Square-root factor L of a Gaussian covariance on a window, L L^T ~ C.
///
/// Two layouts:
///  - Kronecker: separable correlations (squared exponential) factor as a
///    Kronecker product of per-axis lower-triangular Cholesky factors; the
///    product is itself lower triangular in the normative site order.
///  - Dense: rank-revealing pivoted Cholesky, n x r with rows in site order.
///    It stops once every residual diagonal entry is below 1e-12 * max diag,
///    which bounds every residual entry by the same amount. Rank-deficient
///    covariances (Brown-Resnick with alpha = 2 is rank d) produce small r.
class GaussianFactor {
  public:
    enum class Layout { Dense, Kronecker };

    const GridWindow& window() const noexcept { return window_; }
    Layout layout() const noexcept { return layout_; }
    /// Number of standard normals consumed per sample.
    std::size_t rank() const noexcept { return rank_; }
    double jitter_used() const noexcept { return jitter_; }

    /// W = L z for a vector z of length rank().
    void apply(std::span<const double> z, std::span<double> out) const;
    /// Entry j of L z alone, O(rank) dense or O(band^d) Kronecker. Not
    /// bit-identical to apply() for the Kronecker layout (summation order).
    double apply_row(Site j, std::span<const double> z) const;
    /// apply_row with z read through zat(i), so z can be produced lazily.
    template <class ZAt>
    double apply_row_with(Site j, ZAt&& zat) const;
    /// Draw one centered Gaussian vector with covariance L L^T.
    void sample(RandomStream& rng, std::span<double> out) const;

    /// Dense L L^T; intended for tests on small windows.
    Eigen::MatrixXd reconstruct() const;
    /// Dense L (n x rank) in site order; intended for tests on small windows.
    Eigen::MatrixXd dense_factor() const;

  private:
    friend GaussianFactor build_gaussian_factor(const SpectralModel&, const GridWindow&);

    explicit GaussianFactor(GridWindow window) : window_(window) {}
    void apply_axis(int axis, std::vector<double>& data) const;

    GridWindow window_;
    Layout layout_ = Layout::Dense;
    std::size_t rank_ = 0;
    double jitter_ = 0.0;
    Eigen::MatrixXd dense_t_;          // L^T, rank x n, so rows of L are contiguous
    Eigen::MatrixXd axis_;             // per-axis factor (all axes share it)
    std::vector<int> axis_row_start_;  // first retained column per row of axis_
    std::vector<double> axis_rows_;    // axis_ in row-major order
};

template <class ZAt>
double GaussianFactor::apply_row_with(Site j, ZAt&& zat) const
{
    if (layout_ == Layout::Dense) {
        const double* row = dense_t_.data() + j * rank_;
        double acc = 0.0;
        for (std::size_t t = 0; t < rank_; ++t)
            acc += row[t] * zat(t);
        return acc;
    }
    const auto m = static_cast<std::size_t>(window_.side());
    const int d = window_.dim();
    std::size_t idx[3] = {0, 0, 0};
    for (int a = d - 1; a >= 0; --a) {
        idx[a] = j % m;
        j /= m;
    }
    auto start = [&](int a) { return static_cast<std::size_t>(axis_row_start_[idx[a]]); };
    const double* r0 = axis_rows_.data() + idx[0] * m;
    double acc = 0.0;
    for (std::size_t i0 = start(0); i0 <= idx[0]; ++i0) {
        if (d == 1) {
            acc += r0[i0] * zat(i0);
            continue;
        }
        const double* r1 = axis_rows_.data() + idx[1] * m;
        double acc1 = 0.0;
        for (std::size_t i1 = start(1); i1 <= idx[1]; ++i1) {
            if (d == 2) {
                acc1 += r1[i1] * zat(i0 * m + i1);
                continue;
            }
            const double* r2 = axis_rows_.data() + idx[2] * m;
            double acc2 = 0.0;
            for (std::size_t i2 = start(2); i2 <= idx[2]; ++i2)
                acc2 += r2[i2] * zat((i0 * m + i1) * m + i2);
            acc1 += r1[i1] * acc2;
        }
        acc += r0[i0] * acc1;
    }
    return acc;
}

/// Factor the Gaussian covariance of a Schlather, Brown-Resnick or composite
/// model on `window`. Deterministic for fixed inputs.
///
/// Per-axis Cholesky factors use jitter escalation: start at 1e-12 * mean
/// diagonal, multiply by 10, at most 6 times. The dense path escalates the same
/// way only when a pivot goes clearly negative (an invalid parameterization).
/// Throws FactorizationError when escalation is exhausted.
GaussianFactor build_gaussian_factor(const SpectralModel& model, const GridWindow& window);

}  // namespace stormcells
