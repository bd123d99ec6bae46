#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stormcells/gaussian_factor.hpp"
#include "stormcells/kernels.hpp"
#include "stormcells/lattice.hpp"
#include "stormcells/simulator.hpp"
#include "stormcells/spectral.hpp"

namespace stormcells {

/// The storm tessellation of one realization: cells are label fibers.
struct Tessellation {
    GridWindow window;
    std::vector<StormId> labels;
    std::map<StormId, SiteSet> cells;
    StormId origin_cell = 0;
};

Tessellation extract_tessellation(const Realization& r);

/// The cell containing x; always contains x.
const SiteSet& cell_of(const Tessellation& t, Site x);

struct CellStats {
    double volume = 0.0;            // site count * spacing^d
    bool touches_boundary = false;  // some member has a coordinate equal to +-R
    Coord box_min{0, 0, 0};
    Coord box_max{0, 0, 0};
    std::size_t components = 0;     // face-connected components (informational)
};

/// Throws std::out_of_range for an unknown id.
CellStats cell_stats(const Tessellation& t, StormId id);

struct DensityProfile {
    std::vector<int> radii;
    std::vector<double> values;  // lambda(C(x) n B_r(x)) / lambda(B_r(x))
    double lower = 0.0;          // min over the top half of the radius grid
    double upper = 0.0;          // max over the top half of the radius grid
};

/// Fraction of the box of radius r around x covered by the cell of x. Every
/// box must fit inside the window; radii must be increasing and >= 1.
DensityProfile density_profile(const Tessellation& t, Site x, const std::vector<int>& radii);

enum class ReferenceKind { None, Analytic, Oracle };
std::string to_string(ReferenceKind k);

/// A Monte Carlo estimate with its standard error and optional reference.
struct EstimatorReport {
    std::string name;
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;
    std::optional<double> reference;
    ReferenceKind reference_kind = ReferenceKind::None;
    bool window_censored = false;
    bool degenerate = false;
};

/// Count, sum and sum of squares; merges associatively.
struct MeanAccumulator {
    std::size_t n = 0;
    double sum = 0.0;
    double sumsq = 0.0;

    void add(double v)
    {
        ++n;
        sum += v;
        sumsq += v * v;
    }
    void merge(const MeanAccumulator& o)
    {
        n += o.n;
        sum += o.sum;
        sumsq += o.sumsq;
    }
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
    /// sqrt(population variance / n); for 0/1 data this is the binomial stderr.
    double std_error_of_mean() const;
};

/// Accumulates values in index order, so the result does not depend on how
/// the values were produced.
MeanAccumulator accumulate(const std::vector<double>& values);

/// Everything needed to reproduce the realizations of an experiment.
///
/// Replicate r draws its realization from stream (seed, r, substream); the
/// independent eta and Y used by formula estimators come from substreams
/// substream + 1 and substream + 2.
struct SimulationPlan {
    SpectralModel model;
    GridWindow window;
    std::shared_ptr<const GaussianFactor> factor;
    std::uint64_t seed = 0;
    Backend backend = Backend::Auto;
    std::uint32_t substream = 0;
    Execution execution = Execution::Parallel;
    SimulationOptions options;

    Realization realize(std::size_t replicate) const;
    Realization realize_independent(std::size_t replicate) const;
    std::vector<double> spectral_draw(std::size_t replicate) const;
};

/// Builds the Gaussian factor when the model needs one.
SimulationPlan make_plan(const SpectralModel& model, const GridWindow& window, std::uint64_t seed,
                         Backend backend = Backend::Auto);

/// values[r] = f(r) for r < n, evaluated in parallel per plan.execution.
std::vector<double> replicate_values(const SimulationPlan& plan, std::size_t n,
                                     const std::function<double(std::size_t)>& f);

// Per-replicate events, shared by the estimators and the batch runner.
bool same_cell(const Tessellation& t, Site x, Site y);
bool covers(const Tessellation& t, Site x, const SiteSet& K);
bool contained_in(const Tessellation& t, Site x, const SiteSet& K);
bool links(const Tessellation& t, const SiteSet& S, const SiteSet& far);
bool origin_cell_touches_boundary(const Tessellation& t);

/// Report for a 0/1 or real-valued per-replicate sample.
EstimatorReport summarize(const std::string& name, const std::vector<double>& values);

/// P[x + h in C(x)], h a lattice lag.
EstimatorReport empirical_pi(const SimulationPlan& plan, Site x, const Coord& h, std::size_t n);
/// P[K subset of C(x)].
EstimatorReport empirical_coverage(const SimulationPlan& plan, Site x, const SiteSet& K,
                                   std::size_t n);
/// P[C(x) subset of K], evaluated within the window (window-censored). Needs x in K.
EstimatorReport empirical_containment(const SimulationPlan& plan, Site x, const SiteSet& K,
                                      std::size_t n);
/// 2 P[some cell meeting S also meets the sites at distance >= r from S], an
/// upper bound for the beta-mixing coefficient between S and that set.
EstimatorReport beta_bound(const SimulationPlan& plan, const SiteSet& S, double r, std::size_t n);

/// x + h, throwing std::invalid_argument when it leaves the window.
Site shifted_site(const GridWindow& w, Site x, const Coord& h);

}  // namespace stormcells
