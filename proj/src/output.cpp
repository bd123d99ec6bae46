#include "stormcells/output.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace stormcells {

namespace {

std::string num(double v)
{
    return fmt::format("{:.10g}", v);
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(fmt::format("cannot open '{}' for writing", path.string()));
    out << text;
    out.close();
    if (!out)
        throw std::runtime_error(fmt::format("write to '{}' failed", path.string()));
}

// Echo lines become config.<key> or config.<section>.<key>.
std::string flatten_echo(const std::string& echo)
{
    std::istringstream in(echo);
    std::string line, section, out;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line.front() == '[') {
            section = line.substr(1, line.size() - 2);
            continue;
        }
        out += "config." + (section.empty() ? "" : section + ".") + line + "\n";
    }
    return out;
}

}  // namespace

std::string format_csv(const std::string& model, const TaskResult& task)
{
    std::string out = std::string(kCsvHeader) + "\n";
    for (const ResultRow& r : task.rows) {
        out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", to_string(task.kind), model, r.estimator,
                           r.param, r.value, num(r.estimate), num(r.std_error), r.n,
                           r.reference ? num(*r.reference) : std::string(),
                           to_string(r.reference_kind));
    }
    return out;
}

std::uint64_t label_hash(std::int64_t storm_id) noexcept
{
    std::uint64_t z = static_cast<std::uint64_t>(storm_id) + 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

std::string format_ppm(const GridWindow& window, const std::vector<StormId>& labels)
{
    if (labels.size() != window.site_count())
        throw std::invalid_argument("raster labels do not match the window");
    const std::size_t side = static_cast<std::size_t>(2 * window.half_width() + 1);
    const std::size_t height = labels.size() / side;
    std::string out = fmt::format("P3\n{} {}\n255\n", side, height);
    for (std::size_t row = 0; row < height; ++row) {
        for (std::size_t col = 0; col < side; ++col) {
            const std::uint64_t h = label_hash(labels[row * side + col]);
            out += fmt::format("{}{} {} {}", col ? " " : "", h & 0xff, (h >> 8) & 0xff, (h >> 16) & 0xff);
        }
        out += '\n';
    }
    return out;
}

std::string format_manifest(const RunManifest& m)
{
    std::string out;
    out += fmt::format("version = {}\n", m.version);
    out += "status = complete\n";
    out += fmt::format("workers = {}\n", m.workers);
    out += fmt::format("wall_clock_seconds = {:.3f}\n", m.wall_seconds);
    for (const ManifestEntry& e : m.tasks) {
        std::string files;
        for (const auto& f : e.files)
            files += (files.empty() ? "" : " ") + f;
        out += fmt::format("task.{}.files = {}\n", e.task, files);
        out += fmt::format("task.{}.replicates = {}\n", e.task, e.replicates);
    }
    std::string rasters;
    for (const auto& f : m.rasters)
        rasters += (rasters.empty() ? "" : " ") + f;
    out += fmt::format("rasters = {}\n", rasters);
    out += flatten_echo(m.config_echo);
    return out;
}

RunManifest write_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const RunResults& results, double wall_seconds)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw std::runtime_error(
            fmt::format("cannot create output directory '{}': {}", dir.string(), ec.message()));
    RunManifest m;
    m.config_echo = echo_config(cfg);
    m.wall_seconds = wall_seconds;
    m.workers = worker_count();
    for (const TaskResult& t : results.tasks) {
        ManifestEntry e;
        e.task = to_string(t.kind);
        e.replicates = t.replicates;
        const std::string csv = e.task + ".csv";
        write_file(dir / csv, format_csv(cfg.model.kind, t));
        e.files.push_back(csv);
        for (const auto& [name, text] : t.reports) {
            write_file(dir / name, text);
            e.files.push_back(name);
        }
        m.tasks.push_back(std::move(e));
    }
    for (const RasterImage& img : results.rasters) {
        const std::string name = fmt::format("labels_{:03}.ppm", img.replicate);
        write_file(dir / name, format_ppm(img.window, img.labels));
        m.rasters.push_back(name);
    }
    for (const ManifestEntry& e : m.tasks)
        for (const auto& f : e.files)
            if (!std::filesystem::exists(dir / f))
                throw std::runtime_error(fmt::format("output '{}' is missing", (dir / f).string()));
    write_file(dir / "manifest.txt", format_manifest(m));
    return m;
}

void write_partial_marker(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const std::string& error)
{
    std::string text = fmt::format("version = {}\nstatus = failed\nerror = {}\n", kVersion, error);
    text += flatten_echo(echo_config(cfg));
    try {
        write_file(dir / "MANIFEST.partial", text);
    } catch (const std::exception&) {
        // The original failure is more useful than this one.
    }
}

}  // namespace stormcells
