#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "stormcells/kernels.hpp"
#include "stormcells/lattice.hpp"
#include "stormcells/simulator.hpp"

namespace stormcells {

/// Centers X_i with additive weights w_i.
class WeightedSites {
  public:
    WeightedSites(std::vector<Point> centers, std::vector<double> weights);

    std::size_t size() const noexcept { return centers_.size(); }
    const std::vector<Point>& centers() const noexcept { return centers_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

  private:
    std::vector<Point> centers_;
    std::vector<double> weights_;
};

/// Laguerre (power) diagram on the grid: label = 1 + argmin_i |x - X_i|^2 - w_i,
/// lowest index on ties. With `precision` the squared distance is the
/// Mahalanobis form (x - X)^T P (x - X).
std::vector<std::int64_t> laguerre_labels(const WeightedSites& sites, const GridWindow& window,
                                          const Eigen::MatrixXd* precision = nullptr,
                                          Execution exec = Execution::Parallel);

/// Johnson-Mehl diagram: label = 1 + argmin_i |x - X_i| / v - w_i.
std::vector<std::int64_t> johnson_mehl_labels(const WeightedSites& sites, double v,
                                              const GridWindow& window,
                                              Execution exec = Execution::Parallel);

/// Weighted sites reproducing a moving-maximum realization's storms:
/// Smith gets w_i = 2 ln U_i with the Sigma^-1 metric, the exponential kernel
/// w_i = ln U_i. Site i corresponds to storms[i].
WeightedSites storm_sites(const SpectralModel& model, std::span<const StormRecord> storms);

/// Oracle labels for a moving-maximum model, mapped back to storm ids.
std::vector<std::int64_t> oracle_storm_labels(const SpectralModel& model, const GridWindow& window,
                                              std::span<const StormRecord> storms,
                                              Execution exec = Execution::Parallel);

struct LabelAgreement {
    std::size_t mismatches = 0;
    std::optional<Site> first;
    std::optional<Coord> first_coord;
};

/// Exact elementwise comparison. Both arrays must use the same identity for
/// labels (storm ids); throws on a length mismatch.
LabelAgreement label_agreement(const GridWindow& window, std::span<const std::int64_t> a,
                               std::span<const std::int64_t> b);

}  // namespace stormcells
