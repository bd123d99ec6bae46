#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stormcells/runner.hpp"

namespace stormcells {

/// Header line of every task table.
inline constexpr const char* kCsvHeader =
    "task,model,estimator,param,value,estimate,stderr,n,reference,reference_kind";

/// Table text for one task, header included. Numbers use %.10g.
std::string format_csv(const std::string& model, const TaskResult& task);

/// splitmix64 finalizer; raster colors are its low three bytes (R, G, B).
std::uint64_t label_hash(std::int64_t storm_id) noexcept;

/// Plain P3 pixmap, one pixel per site in site order. The last coordinate
/// runs along a row; d = 1 gives one row and d = 3 stacks the slices.
std::string format_ppm(const GridWindow& window, const std::vector<StormId>& labels);

/// Flat key = value text; the config echo follows as config.<key> lines.
std::string format_manifest(const RunManifest& manifest);

/// Write tables, reports and rasters into dir, then the manifest last.
/// Filesystem errors name the path.
RunManifest write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const RunResults& results, double wall_seconds);

/// MANIFEST.partial with the failure message.
void write_partial_marker(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const std::string& error);

}  // namespace stormcells
