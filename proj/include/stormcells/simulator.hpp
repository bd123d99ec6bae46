#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stormcells/gaussian_factor.hpp"
#include "stormcells/lattice.hpp"
#include "stormcells/random.hpp"
#include "stormcells/spectral.hpp"

namespace stormcells {

using StormId = std::int64_t;

/// Component of a composite model a storm belongs to.
enum class Component : std::uint8_t { Dissipative = 0, Conservative = 1 };

/// One atom U_i Y_i of the spectral representation.
///
/// `u` is the Poisson mark: for moving maxima the storm contributes
/// u * h(x - center); for the extremal-functions backend it contributes
/// u * Y(x) with Y normalized to 1 at `pin_site`.
struct StormRecord {
    StormId id = 0;
    double u = 0.0;
    Point center{0.0, 0.0, 0.0};
    std::int64_t pin_site = -1;
    Component component = Component::Dissipative;
};

enum class Backend { Auto, MovingMax, ExtremalFunctions, Composite };
std::string to_string(Backend b);

/// Exact sample of eta on a window with per-site argmax storm labels.
struct Realization {
    GridWindow window;
    std::vector<double> eta;
    std::vector<StormId> labels;
    std::vector<StormRecord> storms;  // storms winning somewhere, ascending id
    StreamId stream;
    Backend backend = Backend::Auto;
    std::size_t storms_generated = 0;
    /// Every storm generated before the stopping rule fired (debug flag only).
    std::vector<StormRecord> candidate_log;

    const StormRecord& storm(StormId id) const;
};

struct SimulationOptions {
    std::size_t storm_budget = 10'000'000;
    std::size_t candidates_per_site = 100'000;
    bool log_candidates = false;
};

/// Decreasing enumeration U_1 > U_2 > ... of a Poisson process on (0, inf)
/// with intensity scale * u^-2 du, as U_i = scale / Gamma_i.
class PoissonStream {
  public:
    explicit PoissonStream(double scale = 1.0) : scale_(scale) {}
    double next(RandomStream& rng) { return next_with(rng.exponential()); }
    /// Advance with an explicit exponential increment.
    double next_with(double increment)
    {
        gamma_ += increment;
        return scale_ / gamma_;
    }
    double arrival() const noexcept { return gamma_; }

  private:
    double scale_;
    double gamma_ = 0.0;
};

/// Exact moving-maximum simulation for bounded kernels.
///
/// Storms arrive in decreasing u order with centers uniform on the center
/// domain; generation stops once u * sup h is below the smallest running
/// maximum over the window, after which no storm can win anywhere.
Realization simulate_moving_max(const SpectralModel& model, const GridWindow& window,
                                RandomStream& rng, const SimulationOptions& options = {});

/// Realization from an explicit storm list (argmax over all of them).
Realization realize_storms(const SpectralModel& model, const GridWindow& window,
                           std::span<const StormRecord> storms);

/// Exact simulation by the extremal-functions record-breaking construction.
///
/// Sites are visited in normative order. At site k, Poisson marks u = 1/Gamma
/// are drawn in decreasing order while u exceeds the running maximum at k; each
/// comes with a field Y normalized to Y(k) = 1 and drawn from the spectral law
/// size-biased by Y(k). A candidate is kept only if u * Y stays strictly below
/// the running maximum at every earlier site.
///  - Brown-Resnick: Y(x) = exp(W(x) - W(k) - gamma(x - k) / 2).
///  - Schlather: W(k) = sqrt(2 E) with E ~ Exp(1) (the size-biased half
///    normal), the rest of W conditioned on it by kriging, Y = max(W, 0) / W(k).
Realization simulate_extremal_functions(const SpectralModel& model, const GridWindow& window,
                                        const GaussianFactor& factor, RandomStream& rng,
                                        const SimulationOptions& options = {});

/// eta = (1 - a) eta_D v a eta_C for the composite model, with eta_D a Smith
/// and eta_C a Schlather field; storms carry their component tag.
Realization simulate_composite(const SpectralModel& model, const GridWindow& window,
                               const GaussianFactor& factor, RandomStream& rng,
                               const SimulationOptions& options = {});

/// Dispatch. Auto picks moving maxima for bounded kernels, extremal functions
/// for Gaussian-based laws and the composite route for composite models.
/// Throws IncompatibleBackend for an unsupported pairing.
Realization simulate(const SpectralModel& model, const GridWindow& window,
                     const GaussianFactor* factor, RandomStream& rng,
                     Backend backend = Backend::Auto, const SimulationOptions& options = {});

/// True when the storm labelled at `site` belongs to the conservative part.
bool conservative_wins(const Realization& r, Site site);

}  // namespace stormcells
