#pragma once

// Data-parallel inner kernels. Each has a serial reference and an OpenMP
// version; tests require bit-identical output from both.

#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <vector>

#include "stormcells/lattice.hpp"
#include "stormcells/spectral.hpp"

namespace stormcells {

struct StormRecord;

enum class Execution { Serial, Parallel };

/// log(u) + log h(site - center). Every storm scoring path goes through this
/// so incremental and brute-force labelings agree bit for bit.
double storm_log_score(const SpectralModel& model, double log_u, const Point& site_pos,
                       const Point& center);

/// Per site: max over storms of log(u) + log h(x - center), and the id of the
/// first storm attaining it.
void storm_argmax_serial(const SpectralModel& model, const GridWindow& window,
                         std::span<const StormRecord> storms, std::span<double> log_eta,
                         std::span<std::int64_t> labels);
void storm_argmax_parallel(const SpectralModel& model, const GridWindow& window,
                           std::span<const StormRecord> storms, std::span<double> log_eta,
                           std::span<std::int64_t> labels);

/// Per site: index of the weighted site minimizing `distance(x, i) - weight_i`,
/// lowest index on ties. `distance` receives the physical position and the
/// site index.
using WeightedDistance = std::function<double(const Point&, std::size_t)>;
void weighted_argmin_serial(const GridWindow& window, std::size_t count,
                            const WeightedDistance& distance, std::span<std::size_t> out);
void weighted_argmin_parallel(const GridWindow& window, std::size_t count,
                              const WeightedDistance& distance, std::span<std::size_t> out);

/// Runs body(r) for r in [0, n). Exceptions from any replicate are rethrown
/// after the loop; with several failures the lowest replicate index wins.
void for_each_replicate(std::size_t n, const std::function<void(std::size_t)>& body,
                        Execution exec = Execution::Parallel);

/// Number of OpenMP workers (1 without OpenMP).
int worker_count();
void set_worker_count(int workers);

}  // namespace stormcells
