#include "stormcells/geometry_oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace stormcells {

WeightedSites::WeightedSites(std::vector<Point> centers, std::vector<double> weights)
    : centers_(std::move(centers)), weights_(std::move(weights))
{
    if (centers_.size() != weights_.size())
        throw std::invalid_argument("weighted sites: centers and weights differ in length");
    for (std::size_t i = 0; i < centers_.size(); ++i) {
        if (!std::isfinite(weights_[i]))
            throw std::invalid_argument("weighted sites: non-finite weight");
        for (double c : centers_[i])
            if (!std::isfinite(c))
                throw std::invalid_argument("weighted sites: non-finite center");
    }
}

namespace {

std::vector<std::int64_t> run_argmin(const GridWindow& window, std::size_t count,
                                     const WeightedDistance& dist, Execution exec)
{
    std::vector<std::size_t> idx(window.site_count());
    if (exec == Execution::Serial)
        weighted_argmin_serial(window, count, dist, idx);
    else
        weighted_argmin_parallel(window, count, dist, idx);
    std::vector<std::int64_t> out(idx.size());
    for (std::size_t s = 0; s < idx.size(); ++s)
        out[s] = static_cast<std::int64_t>(idx[s]) + 1;
    return out;
}

}  // namespace

std::vector<std::int64_t> laguerre_labels(const WeightedSites& sites, const GridWindow& window,
                                          const Eigen::MatrixXd* precision, Execution exec)
{
    const int d = window.dim();
    if (precision && (precision->rows() != d || precision->cols() != d))
        throw std::invalid_argument("Laguerre metric has the wrong dimension");
    const auto& X = sites.centers();
    const auto& w = sites.weights();
    WeightedDistance dist = [&](const Point& p, std::size_t i) {
        double diff[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a)
            diff[a] = p[static_cast<std::size_t>(a)] - X[i][static_cast<std::size_t>(a)];
        double q = 0.0;
        if (precision) {
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    q += diff[a] * (*precision)(a, b) * diff[b];
        } else {
            for (int a = 0; a < d; ++a)
                q += diff[a] * diff[a];
        }
        return q - w[i];
    };
    return run_argmin(window, sites.size(), dist, exec);
}

std::vector<std::int64_t> johnson_mehl_labels(const WeightedSites& sites, double v,
                                              const GridWindow& window, Execution exec)
{
    if (!(v > 0.0))
        throw std::invalid_argument("Johnson-Mehl speed v must be positive");
    const int d = window.dim();
    const auto& X = sites.centers();
    const auto& w = sites.weights();
    WeightedDistance dist = [&](const Point& p, std::size_t i) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) {
            const double t = p[static_cast<std::size_t>(a)] - X[i][static_cast<std::size_t>(a)];
            r2 += t * t;
        }
        return std::sqrt(r2) / v - w[i];
    };
    return run_argmin(window, sites.size(), dist, exec);
}

WeightedSites storm_sites(const SpectralModel& model, std::span<const StormRecord> storms)
{
    std::vector<Point> centers;
    std::vector<double> weights;
    const double factor = model.kind() == ModelKind::SmithGauss ? 2.0 : 1.0;
    if (model.kind() != ModelKind::SmithGauss && model.kind() != ModelKind::ExpKernel)
        throw std::invalid_argument("geometric oracles exist for Smith and exponential kernels only");
    for (const StormRecord& s : storms) {
        centers.push_back(s.center);
        weights.push_back(factor * std::log(s.u));
    }
    return WeightedSites(std::move(centers), std::move(weights));
}

std::vector<std::int64_t> oracle_storm_labels(const SpectralModel& model, const GridWindow& window,
                                              std::span<const StormRecord> storms, Execution exec)
{
    const WeightedSites sites = storm_sites(model, storms);
    std::vector<std::int64_t> idx;
    if (model.kind() == ModelKind::SmithGauss)
        idx = laguerre_labels(sites, window, &model.smith_precision(), exec);
    else
        idx = johnson_mehl_labels(sites, model.exp_params().range, window, exec);
    for (auto& l : idx)
        l = storms[static_cast<std::size_t>(l - 1)].id;
    return idx;
}

LabelAgreement label_agreement(const GridWindow& window, std::span<const std::int64_t> a,
                               std::span<const std::int64_t> b)
{
    if (a.size() != b.size() || a.size() != window.site_count())
        throw std::invalid_argument("label arrays differ in length");
    LabelAgreement out;
    for (Site s = 0; s < a.size(); ++s) {
        if (a[s] == b[s])
            continue;
        if (out.mismatches++ == 0) {
            out.first = s;
            out.first_coord = window.coord(s);
        }
    }
    return out;
}

}  // namespace stormcells
