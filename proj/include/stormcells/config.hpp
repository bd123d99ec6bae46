#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stormcells/lattice.hpp"
#include "stormcells/simulator.hpp"
#include "stormcells/spectral.hpp"

namespace stormcells {

/// Malformed document: carries the 1-based line and column of the problem.
class ConfigParseError : public std::runtime_error {
  public:
    ConfigParseError(const std::string& what, int line, int column);
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

  private:
    int line_;
    int column_;
};

/// Well-formed document with an invalid or unknown key; names the key.
class ConfigValidationError : public std::runtime_error {
  public:
    ConfigValidationError(const std::string& key, const std::string& what);
    const std::string& key() const noexcept { return key_; }

  private:
    std::string key_;
};

enum class TaskKind {
    Margins,
    ThetaGrid,
    PiGrid,
    Coverage,
    Containment,
    Volume,
    Boundedness,
    Density,
    BetaBound,
    OracleCheck,
};
std::string to_string(TaskKind k);

/// One task with every parameter filled in (defaults applied at parse time).
struct TaskSpec {
    TaskKind kind = TaskKind::Margins;
    std::size_t replicates = 0;       // resolved: section override or global
    std::vector<double> z;            // margins
    std::vector<Coord> lags;          // theta_grid, pi_grid
    bool formula = true;              // pi_grid, coverage, containment, volume, boundedness
    Coord x{0, 0, 0};                 // coverage, containment: base site offset
    std::vector<std::vector<Coord>> sets;  // coverage: K as lag lists
    std::vector<int> radii;           // containment boxes, density radii
    std::vector<int> half_widths;     // volume, boundedness sweep
    double inner_fraction = 0.5;      // boundedness annulus inner radius / R
    double floor = 0.02;              // density floor
    std::vector<double> distances;    // beta_bound
    bool strict = false;              // oracle_check
};

struct ModelSpec {
    std::string kind;  // smith, exp_kernel, schlather, brown_resnick, constant, composite
    double sigma = 1.0;
    std::optional<Eigen::MatrixXd> cov;
    double v = 1.0;
    double ell = 1.0;
    Correlation correlation = Correlation::SquaredExponential;
    double alpha = 1.0;
    double s = 1.0;
    double weight = 0.5;
};

struct ExperimentConfig {
    ModelSpec model;
    int dim = 2;
    int half_width = 8;
    double spacing = 1.0;
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    Backend backend = Backend::Auto;
    std::string out = "out";
    std::size_t rasters = 1;
    std::vector<TaskSpec> tasks;
};

/// Parse and validate a flat key = value document with [task] sections.
///
///     # comment
///     model = brown_resnick
///     alpha = 1
///     tasks = margins, theta_grid
///
///     [theta_grid]
///     lags = 0,0; 4,0
///
/// Global keys come before the first section. A section configures a task
/// named in `tasks`; unknown keys are errors with a nearest-key suggestion.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text of a config with all defaults spelled out; parses back to
/// the same config.
std::string echo_config(const ExperimentConfig& cfg);

SpectralModel build_model(const ExperimentConfig& cfg);
GridWindow build_window(const ExperimentConfig& cfg, int half_width);

/// Closest candidate within edit distance 2 (or a third of the word), if any.
std::optional<std::string> suggest_key(const std::string& key,
                                       const std::vector<std::string>& candidates);

}  // namespace stormcells
