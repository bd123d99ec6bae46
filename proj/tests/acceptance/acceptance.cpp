// End-to-end acceptance run: every config under configs/acceptance is run
// once, the ten criteria are evaluated on the results, and the whole set is
// run again with a different worker count to check byte-identical outputs.
//
// Usage: acceptance [config-dir] [output-dir] [--no-rerun]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "stormcells/config.hpp"
#include "stormcells/kernels.hpp"
#include "stormcells/output.hpp"
#include "stormcells/runner.hpp"

using namespace stormcells;
namespace fs = std::filesystem;

namespace {

struct Run {
    ExperimentConfig cfg;
    RunResults results;
};

std::map<std::string, Run> run_all(const fs::path& config_dir, const fs::path& out_dir)
{
    std::map<std::string, Run> runs;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(config_dir))
        if (e.path().extension() == ".ini")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
        const std::string name = f.stem().string();
        ExperimentConfig cfg = load_config(f.string());
        cfg.out = (out_dir / name).string();
        const auto t0 = std::chrono::steady_clock::now();
        RunResults res = execute_tasks(cfg);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_outputs(cfg.out, cfg, res, secs);
        fmt::print("  ran {:<20} {:7.1f} s\n", name, secs);
        std::cout.flush();
        runs.emplace(name, Run{std::move(cfg), std::move(res)});
    }
    return runs;
}

const TaskResult* task_of(const Run& r, TaskKind k)
{
    for (const auto& t : r.results.tasks)
        if (t.kind == k)
            return &t;
    return nullptr;
}

std::vector<const ResultRow*> rows_of(const Run& r, TaskKind k, const std::string& estimator)
{
    std::vector<const ResultRow*> out;
    if (const TaskResult* t = task_of(r, k))
        for (const auto& row : t->rows)
            if (row.estimator == estimator)
                out.push_back(&row);
    return out;
}

const ResultRow& row_of(const Run& r, TaskKind k, const std::string& estimator, const std::string& value)
{
    for (const ResultRow* row : rows_of(r, k, estimator))
        if (row->value == value)
            return *row;
    throw std::runtime_error(fmt::format("missing row {} {} {}", to_string(k), estimator, value));
}

double combined(double a, double b)
{
    return std::hypot(a, b);
}

// Consecutive values must move in the stated direction, or stay within three
// combined standard errors of each other.
bool trend(const std::vector<const ResultRow*>& rows, int sign)
{
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double step = sign * (rows[i]->estimate - rows[i - 1]->estimate);
        if (step < 0.0 && -step > 3.0 * combined(rows[i]->std_error, rows[i - 1]->std_error))
            return false;
    }
    return true;
}

std::string join_estimates(const std::vector<const ResultRow*>& rows)
{
    std::string s;
    for (const ResultRow* r : rows)
        s += fmt::format("{}{}={:.4f}", s.empty() ? "" : " ", r->value, r->estimate);
    return s;
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Manifests record wall-clock and worker count, which legitimately differ.
std::string stable_manifest(const std::string& text)
{
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line))
        if (line.rfind("wall_clock_seconds", 0) != 0 && line.rfind("workers", 0) != 0)
            out += line + "\n";
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    fs::path config_dir = STORMCELLS_ACCEPTANCE_DIR;
    fs::path out_dir = fs::current_path() / "acceptance_out";
    bool rerun = true;
    std::vector<std::string> positional;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--no-rerun")
            rerun = false;
        else
            positional.push_back(a);
    }
    if (positional.size() > 0)
        config_dir = positional[0];
    if (positional.size() > 1)
        out_dir = positional[1];

    const int base_workers = worker_count();
    const int first_workers = 1;
    const int second_workers = std::max(3, base_workers);
    fs::remove_all(out_dir);

    fmt::print("first run, {} worker(s)\n", first_workers);
    set_worker_count(first_workers);
    // Both runs write to the same path so the echoed config matches; each is
    // moved aside afterwards.
    const auto runs = run_all(config_dir, out_dir / "run");
    fs::rename(out_dir / "run", out_dir / "run1");

    std::vector<std::pair<std::string, Outcome>> report;
    auto criterion = [&](const std::string& title, const std::function<void(Outcome&)>& body) {
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail += fmt::format(" error: {}", e.what());
        }
        report.emplace_back(title, o);
    };
    auto fail = [](Outcome& o, const std::string& why) {
        o.pass = false;
        o.detail += " FAIL(" + why + ")";
    };

    const std::vector<std::string> lag_configs = {"smith_lags", "exp_lags", "schlather_lags", "br_lags"};

    criterion("unit Frechet margins inside the DKW 0.999 band", [&](Outcome& o) {
        for (const auto& name : lag_configs) {
            const Run& r = runs.at(name);
            const double eps = row_of(r, TaskKind::Margins, "ecdf_max_deviation", "dkw_0.999").reference.value();
            double worst = 0.0;
            for (const ResultRow* row : rows_of(r, TaskKind::Margins, "ecdf"))
                worst = std::max(worst, std::abs(row->estimate - *row->reference));
            const ResultRow& z1 = row_of(r, TaskKind::Margins, "ecdf", "1");
            o.detail += fmt::format(" {}: F(1)={:.4f} max|dev|={:.4f} band={:.4f};", r.cfg.model.kind,
                                    z1.estimate, worst, eps);
            if (worst > eps || std::abs(z1.estimate - 0.36788) > eps)
                fail(o, name);
        }
    });

    criterion("empirical and formula estimators agree (pi and containment)", [&](Outcome& o) {
        std::size_t checked = 0;
        double worst = 0.0;
        for (const auto& name : lag_configs) {
            const Run& r = runs.at(name);
            const auto pis = rows_of(r, TaskKind::PiGrid, "pi_empirical");
            const auto fs_ = rows_of(r, TaskKind::PiGrid, "pi_formula");
            const auto ce = rows_of(r, TaskKind::Containment, "containment_empirical");
            const auto cf = rows_of(r, TaskKind::Containment, "containment_formula");
            auto compare = [&](const auto& a, const auto& b) {
                for (std::size_t i = 0; i < a.size(); ++i) {
                    const double z = std::abs(a[i]->estimate - b[i]->estimate) /
                                     std::max(1e-300, combined(a[i]->std_error, b[i]->std_error));
                    worst = std::max(worst, z);
                    ++checked;
                    if (std::abs(a[i]->estimate - b[i]->estimate) >
                        3.0 * combined(a[i]->std_error, b[i]->std_error))
                        fail(o, fmt::format("{} {} {}", name, a[i]->estimator, a[i]->value));
                }
            };
            compare(pis, fs_);
            compare(ce, cf);
        }
        o.detail += fmt::format(" {} pairs, largest |diff|/se = {:.2f};", checked, worst);
    });

    criterion("comparison inequalities hold on the lag grid", [&](Outcome& o) {
        std::size_t total = 0, bad = 0;
        for (const auto& [name, r] : runs)
            for (const ResultRow* row : rows_of(r, TaskKind::PiGrid, "comparison_pass")) {
                ++total;
                if (row->estimate != 1.0) {
                    ++bad;
                    fail(o, fmt::format("{} lag {}", name, row->value));
                }
            }
        o.detail += fmt::format(" {} (model, lag) pairs, {} violations;", total, bad);
        if (total == 0)
            fail(o, "empty grid");
    });

    criterion("analytic extremal coefficients", [&](Outcome& o) {
        auto target = [&](const std::string& cfg, TaskKind k, const std::string& lag, double value) {
            const ResultRow& row = row_of(runs.at(cfg), k, "theta_hat", lag);
            o.detail += fmt::format(" {} lag {}: {:.4f}+-{:.4f} vs {:.5f};", cfg, lag, row.estimate,
                                    row.std_error, value);
            if (std::abs(row.estimate - value) > 3.0 * row.std_error)
                fail(o, cfg + " " + lag);
        };
        target("schlather_lags", TaskKind::PiGrid, "8 0", 1.70711);
        target("br_gamma4", TaskKind::ThetaGrid, "4 0", 1.68269);
        target("exp_unit", TaskKind::ThetaGrid, "2", 1.63212);
        std::size_t zeros = 0;
        for (const auto& [name, r] : runs)
            for (TaskKind k : {TaskKind::ThetaGrid, TaskKind::PiGrid})
                for (const ResultRow* row : rows_of(r, k, "theta_hat"))
                    if (row->value == "0" || row->value == "0 0") {
                        ++zeros;
                        if (std::abs(row->estimate - 1.0) > 3.0 * row->std_error)
                            fail(o, name + " lag 0");
                    }
        o.detail += fmt::format(" theta(0) within 3 se of 1 in {} tables;", zeros);
    });

    criterion("simulated labels equal the Laguerre and Johnson-Mehl oracles", [&](Outcome& o) {
        for (const auto& [name, est] : std::vector<std::pair<std::string, std::string>>{
                 {"smith_geometry", "laguerre_mismatches"}, {"exp_geometry", "johnson_mehl_mismatches"}}) {
            for (const ResultRow* row : rows_of(runs.at(name), TaskKind::OracleCheck, est)) {
                o.detail += fmt::format(" {} {} over {} replicates: {};", est, row->value, row->n, row->estimate);
                if (row->estimate != 0.0 || row->n < 200)
                    fail(o, name);
            }
            if (rows_of(runs.at(name), TaskKind::OracleCheck, est).size() != 2)
                fail(o, name + " strict mode missing");
        }
    });

    criterion("boundary contact falls for dissipative, rises for conservative", [&](Outcome& o) {
        for (const auto& [name, sign] : std::vector<std::pair<std::string, int>>{
                 {"smith_geometry", -1}, {"br_sweep", -1}, {"schlather_sweep", +1}}) {
            const auto rows = rows_of(runs.at(name), TaskKind::Boundedness, "touch_fraction");
            o.detail += fmt::format(" {}: {};", name, join_estimates(rows));
            if (rows.size() != 3 || rows.back()->value != "32" || !trend(rows, sign))
                fail(o, name + " trend");
            const double last = rows.back()->estimate;
            if ((sign < 0 && !(last < 0.1)) || (sign > 0 && !(last > 0.9)))
                fail(o, name + " level at R=32");
        }
    });

    criterion("origin-cell density: null for Smith and Brown-Resnick, positive for Schlather",
              [&](Outcome& o) {
                  for (const std::string name : {"smith_geometry", "br_sweep"}) {
                      const auto rows = rows_of(runs.at(name), TaskKind::Density, "density_mean");
                      o.detail += fmt::format(" {} r={}: {:.4f};", name, rows.back()->value,
                                              rows.back()->estimate);
                      if (!(rows.back()->estimate < 0.05))
                          fail(o, name);
                  }
                  const auto ff = rows_of(runs.at("schlather_density"), TaskKind::Density, "floor_fraction");
                  o.detail += fmt::format(" schlather share above {}: {:.4f};", *ff.at(0)->reference,
                                          ff.at(0)->estimate);
                  if (!(ff.at(0)->estimate >= 0.95))
                      fail(o, "schlather_density");
              });

    criterion("beta-mixing bound decreases with distance", [&](Outcome& o) {
        const auto rows = rows_of(runs.at("smith_geometry"), TaskKind::BetaBound, "beta_bound");
        o.detail += " " + join_estimates(rows) + ";";
        if (rows.size() != 4 || !trend(rows, -1))
            fail(o, "trend");
        if (!(rows.back()->estimate < 0.05))
            fail(o, "r=12 level");
    });

    criterion("composite: boundary contact matches the conservative winner", [&](Outcome& o) {
        const ResultRow& sd = row_of(runs.at("composite"), TaskKind::Boundedness, "symmetric_difference", "16");
        const ResultRow& cw = row_of(runs.at("composite"), TaskKind::Boundedness, "conservative_wins", "16");
        o.detail += fmt::format(" P[symmetric difference]={:.4f} (n={}), P[conservative wins]={:.4f};",
                                sd.estimate, sd.n, cw.estimate);
        if (!(sd.estimate <= 0.05))
            fail(o, "symmetric difference");
    });

    criterion("outputs are byte-identical across worker counts", [&](Outcome& o) {
        if (!rerun) {
            fail(o, "rerun skipped");
            return;
        }
        fmt::print("second run, {} worker(s)\n", second_workers);
        set_worker_count(second_workers);
        run_all(config_dir, out_dir / "run");
        fs::rename(out_dir / "run", out_dir / "run2");
        std::size_t files = 0, differ = 0;
        for (const auto& e : fs::recursive_directory_iterator(out_dir / "run1")) {
            if (!e.is_regular_file())
                continue;
            const fs::path rel = fs::relative(e.path(), out_dir / "run1");
            const fs::path other = out_dir / "run2" / rel;
            ++files;
            std::string a = slurp(e.path()), b = fs::exists(other) ? slurp(other) : std::string("\x01");
            if (rel.filename() == "manifest.txt") {
                a = stable_manifest(a);
                b = stable_manifest(b);
            }
            if (a != b) {
                ++differ;
                fail(o, rel.string());
            }
        }
        o.detail += fmt::format(" {} files compared ({} vs {} workers), {} differ;", files, first_workers,
                                second_workers, differ);
    });
    set_worker_count(base_workers);

    bool all = true;
    fmt::print("\n");
    for (std::size_t i = 0; i < report.size(); ++i) {
        const auto& [title, o] = report[i];
        all = all && o.pass;
        fmt::print("criterion {:>2} {}: {} |{}\n", i + 1, o.pass ? "PASS" : "FAIL", title, o.detail);
    }
    fmt::print("\n{} of {} criteria passed\n",
               std::count_if(report.begin(), report.end(), [](const auto& p) { return p.second.pass; }),
               report.size());
    return all ? 0 : 1;
}
