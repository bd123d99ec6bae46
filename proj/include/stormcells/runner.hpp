#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stormcells/config.hpp"
#include "stormcells/kernels.hpp"
#include "stormcells/tessellation.hpp"

namespace stormcells {

inline constexpr const char* kVersion = "1.0.0";

/// One line of a task table.
struct ResultRow {
    std::string estimator;
    std::string param;  // name of the swept parameter: z, lag, K, r, R, ...
    std::string value;  // its value, written without commas
    double estimate = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::optional<double> reference;
    ReferenceKind reference_kind = ReferenceKind::None;
};

struct TaskResult {
    TaskKind kind = TaskKind::Margins;
    std::size_t replicates = 0;
    std::vector<ResultRow> rows;
    /// Extra plain-text reports (file name, contents), e.g. oracle_check.txt.
    std::vector<std::pair<std::string, std::string>> reports;
};

/// Label rasters of the first replicates on the main window.
struct RasterImage {
    std::size_t replicate = 0;
    GridWindow window;
    std::vector<StormId> labels;
};

struct RunResults {
    std::vector<TaskResult> tasks;
    std::vector<RasterImage> rasters;
};

/// Command-line overrides applied on top of the config.
struct RunOptions {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    int workers = 0;  // 0 keeps the OpenMP default
    bool strict_oracle = false;
};

/// Thrown when a task fails after validation succeeded.
class TaskFailure : public std::runtime_error {
  public:
    TaskFailure(const std::string& task, const std::string& what)
        : std::runtime_error(task + ": " + what), task_(task)
    {
    }
    const std::string& task() const noexcept { return task_; }

  private:
    std::string task_;
};

/// Apply overrides (seed, out, strict oracle) to a parsed config.
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts);

/// Run every task. Replicate r of a window of half-width R reads streams
/// (seed, r, 4R .. 4R+2), and per-replicate observations are merged in
/// replicate order, so results do not depend on the worker count.
RunResults execute_tasks(const ExperimentConfig& cfg, Execution exec = Execution::Parallel);

struct ManifestEntry {
    std::string task;
    std::vector<std::string> files;
    std::size_t replicates = 0;
};

struct RunManifest {
    std::string config_echo;
    std::string version = kVersion;
    std::vector<ManifestEntry> tasks;
    std::vector<std::string> rasters;
    double wall_seconds = 0.0;
    int workers = 1;
};

/// execute_tasks then write_outputs into cfg.out. On a task failure the
/// directory gets MANIFEST.partial instead of manifest.txt and TaskFailure
/// propagates.
RunManifest run_experiment(const ExperimentConfig& cfg);

}  // namespace stormcells
