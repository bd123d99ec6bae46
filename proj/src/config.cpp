#include "stormcells/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "stormcells/error.hpp"

namespace stormcells {

ConfigParseError::ConfigParseError(const std::string& what, int line, int column)
    : std::runtime_error(fmt::format("line {}, column {}: {}", line, column, what)), line_(line),
      column_(column)
{
}

ConfigValidationError::ConfigValidationError(const std::string& key, const std::string& what)
    : std::runtime_error(what), key_(key)
{
}

std::string to_string(TaskKind k)
{
    switch (k) {
    case TaskKind::Margins: return "margins";
    case TaskKind::ThetaGrid: return "theta_grid";
    case TaskKind::PiGrid: return "pi_grid";
    case TaskKind::Coverage: return "coverage";
    case TaskKind::Containment: return "containment";
    case TaskKind::Volume: return "volume";
    case TaskKind::Boundedness: return "boundedness";
    case TaskKind::Density: return "density";
    case TaskKind::BetaBound: return "beta_bound";
    case TaskKind::OracleCheck: return "oracle_check";
    }
    return "unknown";
}

namespace {

const std::vector<TaskKind> kAllTasks = {
    TaskKind::Margins,     TaskKind::ThetaGrid,   TaskKind::PiGrid,  TaskKind::Coverage,
    TaskKind::Containment, TaskKind::Volume,      TaskKind::Boundedness, TaskKind::Density,
    TaskKind::BetaBound,   TaskKind::OracleCheck,
};

const std::vector<std::string> kModelKinds = {"smith",    "exp_kernel", "schlather",
                                              "brown_resnick", "constant", "composite"};

const std::vector<std::string> kGlobalKeys = {"model", "dim", "half_width", "spacing", "replicates",
                                              "seed",  "tasks", "backend",  "out",     "rasters"};

const std::map<std::string, std::vector<std::string>> kModelKeys = {
    {"smith", {"sigma", "cov"}},
    {"exp_kernel", {"v"}},
    {"schlather", {"ell", "correlation"}},
    {"brown_resnick", {"alpha", "s"}},
    {"constant", {}},
    {"composite", {"sigma", "cov", "ell", "correlation", "weight"}},
};

const std::vector<std::string> kAllModelKeys = {"sigma", "cov", "v", "ell", "correlation",
                                                "alpha", "s",   "weight"};

std::vector<std::string> task_keys(TaskKind k)
{
    switch (k) {
    case TaskKind::Margins: return {"replicates", "z"};
    case TaskKind::ThetaGrid: return {"replicates", "lags"};
    case TaskKind::PiGrid: return {"replicates", "lags", "formula"};
    case TaskKind::Coverage: return {"replicates", "x", "sets", "formula"};
    case TaskKind::Containment: return {"replicates", "x", "radii", "formula"};
    case TaskKind::Volume: return {"replicates", "half_widths", "formula"};
    case TaskKind::Boundedness: return {"replicates", "half_widths", "inner_fraction", "formula"};
    case TaskKind::Density: return {"replicates", "radii", "floor"};
    case TaskKind::BetaBound: return {"replicates", "distances"};
    case TaskKind::OracleCheck: return {"replicates", "strict"};
    }
    return {};
}

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
    int key_col = 0;
    int value_col = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

struct Document {
    std::vector<Entry> globals;
    std::vector<Section> sections;
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

int leading_spaces(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t");
    return b == std::string::npos ? 0 : static_cast<int>(b);
}

bool is_ident(char c, bool first)
{
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
           (!first && std::isdigit(static_cast<unsigned char>(c)));
}

Document tokenize(const std::string& text)
{
    Document doc;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    std::set<std::string> section_names;
    std::set<std::string> scope_keys;
    std::vector<Entry>* scope = &doc.globals;

    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const std::string body = trim(line);
        if (body.empty())
            continue;
        const int indent = leading_spaces(line);

        if (body.front() == '[') {
            if (body.back() != ']')
                throw ConfigParseError("section header must end with ']'", lineno,
                                       indent + static_cast<int>(body.size()));
            const std::string name = trim(body.substr(1, body.size() - 2));
            if (name.empty())
                throw ConfigParseError("empty section name", lineno, indent + 2);
            for (std::size_t i = 0; i < name.size(); ++i)
                if (!is_ident(name[i], i == 0))
                    throw ConfigParseError(fmt::format("invalid character '{}' in section name", name[i]),
                                           lineno, indent + 2 + static_cast<int>(i));
            if (!section_names.insert(name).second)
                throw ConfigParseError(fmt::format("duplicate section [{}]", name), lineno, indent + 1);
            doc.sections.push_back(Section{name, lineno, {}});
            scope = &doc.sections.back().entries;
            scope_keys.clear();
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigParseError("expected 'key = value'", lineno, indent + 1);
        const std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigParseError("missing key before '='", lineno, static_cast<int>(eq) + 1);
        for (std::size_t i = 0; i < key.size(); ++i)
            if (!is_ident(key[i], i == 0))
                throw ConfigParseError(fmt::format("invalid character '{}' in key", key[i]), lineno,
                                       indent + 1 + static_cast<int>(i));
        const std::string rest = line.substr(eq + 1);
        const std::string value = trim(rest);
        if (value.empty())
            throw ConfigParseError(fmt::format("missing value for '{}'", key), lineno,
                                   static_cast<int>(eq) + 2);
        if (!scope_keys.insert(key).second)
            throw ConfigParseError(fmt::format("duplicate key '{}'", key), lineno, indent + 1);
        scope->push_back(Entry{key, value, lineno, indent + 1,
                               static_cast<int>(eq) + 2 + leading_spaces(rest)});
    }
    return doc;
}

std::size_t edit_distance(const std::string& a, const std::string& b)
{
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] != b[j - 1])});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

[[noreturn]] void fail(const Entry& e, const std::string& what)
{
    throw ConfigValidationError(e.key, fmt::format("line {}, column {}: {}", e.line, e.value_col, what));
}

[[noreturn]] void unknown_key(const Entry& e, const std::vector<std::string>& allowed,
                              const std::string& where)
{
    std::string msg = fmt::format("line {}, column {}: unknown key '{}' in {}", e.line, e.key_col,
                                  e.key, where);
    if (auto s = suggest_key(e.key, allowed))
        msg += fmt::format(" (did you mean '{}'?)", *s);
    throw ConfigValidationError(e.key, msg);
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

template <class T>
T parse_number(const Entry& e, const std::string& text)
{
    T v{};
    const char* b = text.data();
    const char* end = text.data() + text.size();
    auto [p, ec] = std::from_chars(b, end, v);
    if (ec != std::errc() || p != end)
        fail(e, fmt::format("'{}' expects a number, got '{}'", e.key, text));
    return v;
}

double parse_real(const Entry& e, const std::string& text)
{
    const double v = parse_number<double>(e, text);
    if (!std::isfinite(v))
        fail(e, fmt::format("'{}' must be finite", e.key));
    return v;
}

double parse_positive(const Entry& e)
{
    const double v = parse_real(e, e.value);
    if (!(v > 0.0))
        fail(e, fmt::format("'{}' must be positive", e.key));
    return v;
}

bool parse_bool(const Entry& e)
{
    std::string v = e.value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "yes" || v == "1")
        return true;
    if (v == "false" || v == "no" || v == "0")
        return false;
    fail(e, fmt::format("'{}' expects true or false, got '{}'", e.key, e.value));
}

std::vector<double> parse_reals(const Entry& e)
{
    std::vector<double> out;
    for (const auto& t : split(e.value, ','))
        out.push_back(parse_real(e, t));
    return out;
}

std::vector<int> parse_ints(const Entry& e)
{
    std::vector<int> out;
    for (const auto& t : split(e.value, ','))
        out.push_back(parse_number<int>(e, t));
    return out;
}

Coord parse_coord(const Entry& e, const std::string& text, int dim)
{
    const auto parts = split(text, ',');
    if (static_cast<int>(parts.size()) != dim)
        fail(e, fmt::format("'{}': lattice vector '{}' needs {} components", e.key, text, dim));
    Coord c{0, 0, 0};
    for (int a = 0; a < dim; ++a)
        c[static_cast<std::size_t>(a)] = parse_number<int>(e, parts[static_cast<std::size_t>(a)]);
    return c;
}

std::vector<Coord> parse_coords(const Entry& e, const std::string& text, int dim)
{
    std::vector<Coord> out;
    for (const auto& t : split(text, ';'))
        out.push_back(parse_coord(e, t, dim));
    return out;
}

std::string format_coord(const Coord& c, int dim)
{
    std::vector<int> v(c.begin(), c.begin() + dim);
    return fmt::format("{}", fmt::join(v, ","));
}

std::string format_coords(const std::vector<Coord>& cs, int dim)
{
    std::vector<std::string> parts;
    for (const auto& c : cs)
        parts.push_back(format_coord(c, dim));
    return fmt::format("{}", fmt::join(parts, "; "));
}

Backend parse_backend(const Entry& e)
{
    if (e.value == "auto")
        return Backend::Auto;
    if (e.value == "moving_max")
        return Backend::MovingMax;
    if (e.value == "extremal_fns" || e.value == "extremal_functions")
        return Backend::ExtremalFunctions;
    if (e.value == "composite")
        return Backend::Composite;
    fail(e, fmt::format("unknown backend '{}' (auto, moving_max, extremal_fns, composite)", e.value));
}

std::string backend_name(Backend b)
{
    return b == Backend::ExtremalFunctions ? "extremal_fns" : to_string(b);
}

std::optional<TaskKind> task_from_name(const std::string& s)
{
    for (TaskKind k : kAllTasks)
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

std::vector<std::string> task_names()
{
    std::vector<std::string> out;
    for (TaskKind k : kAllTasks)
        out.push_back(to_string(k));
    return out;
}

Coord axis_lag(int steps)
{
    return Coord{steps, 0, 0};
}

void fill_task_defaults(TaskSpec& t, const ExperimentConfig& cfg)
{
    const int R = cfg.half_width;
    const int d = cfg.dim;
    switch (t.kind) {
    case TaskKind::Margins:
        t.z = {0.5, 1.0, 2.0, 5.0};
        break;
    case TaskKind::ThetaGrid:
    case TaskKind::PiGrid:
        t.lags = {Coord{0, 0, 0}};
        for (int h = 1; h <= R; h *= 2)
            t.lags.push_back(axis_lag(h));
        break;
    case TaskKind::Coverage:
        t.sets = {{axis_lag(1)}};
        if (R >= 2)
            t.sets.push_back({axis_lag(1), axis_lag(2)});
        if (d >= 2)
            t.sets.push_back({axis_lag(1), Coord{0, 1, 0}, Coord{1, 1, 0}});
        break;
    case TaskKind::Containment:
        t.radii = {std::max(1, R / 4)};
        if (R / 2 > t.radii.back())
            t.radii.push_back(R / 2);
        break;
    case TaskKind::Volume:
    case TaskKind::Boundedness:
        t.half_widths = {R};
        break;
    case TaskKind::Density:
        for (int r : {R / 4, R / 2, (3 * R) / 4, R})
            if (r >= 1 && (t.radii.empty() || r > t.radii.back()))
                t.radii.push_back(r);
        break;
    case TaskKind::BetaBound:
        for (double r : {2.0, 4.0, 8.0, 12.0})
            if (r <= R)
                t.distances.push_back(r);
        if (t.distances.empty())
            t.distances.push_back(1.0);
        break;
    case TaskKind::OracleCheck:
        break;
    }
}

void require_in_window(const Entry& e, const Coord& c, int R, const std::string& what)
{
    for (int v : c)
        if (v < -R || v > R)
            fail(e, fmt::format("'{}': {} lies outside the window [-{}, {}]", e.key, what, R, R));
}

void parse_task_entry(TaskSpec& t, const Entry& e, const ExperimentConfig& cfg)
{
    const int d = cfg.dim;
    const int R = cfg.half_width;
    const std::string& k = e.key;
    if (k == "replicates") {
        const auto n = parse_number<long long>(e, e.value);
        if (n < 1)
            fail(e, "'replicates' must be at least 1");
        t.replicates = static_cast<std::size_t>(n);
    } else if (k == "z") {
        t.z = parse_reals(e);
        for (double z : t.z)
            if (!(z > 0.0))
                fail(e, "'z' values must be positive");
    } else if (k == "lags") {
        t.lags = parse_coords(e, e.value, d);
        for (const Coord& c : t.lags)
            require_in_window(e, c, R, "lag " + format_coord(c, d));
    } else if (k == "formula") {
        t.formula = parse_bool(e);
    } else if (k == "x") {
        t.x = parse_coord(e, e.value, d);
        require_in_window(e, t.x, R, "base site");
    } else if (k == "sets") {
        t.sets.clear();
        for (const auto& part : split(e.value, '|')) {
            t.sets.push_back(parse_coords(e, part, d));
            if (t.sets.back().size() > 3)
                fail(e, "'sets': each K holds at most 3 sites");
        }
    } else if (k == "radii") {
        t.radii = parse_ints(e);
        int prev = 0;
        for (int r : t.radii) {
            if (r < 1 || r > R)
                fail(e, fmt::format("'radii' must lie in [1, {}]", R));
            if (r <= prev)
                fail(e, "'radii' must be increasing");
            prev = r;
        }
    } else if (k == "half_widths") {
        t.half_widths = parse_ints(e);
        for (int r : t.half_widths)
            if (r < 1)
                fail(e, "'half_widths' must be at least 1");
    } else if (k == "inner_fraction") {
        t.inner_fraction = parse_real(e, e.value);
        if (!(t.inner_fraction > 0.0 && t.inner_fraction < 1.0))
            fail(e, "'inner_fraction' must lie in (0, 1)");
    } else if (k == "floor") {
        t.floor = parse_real(e, e.value);
        if (!(t.floor >= 0.0 && t.floor < 1.0))
            fail(e, "'floor' must lie in [0, 1)");
    } else if (k == "distances") {
        t.distances = parse_reals(e);
        for (double r : t.distances)
            if (r < 0.0)
                fail(e, "'distances' must be non-negative");
    } else if (k == "strict") {
        t.strict = parse_bool(e);
    }
}

void check_model_key_context(const Entry& e, const std::string& model)
{
    const auto& allowed = kModelKeys.at(model);
    if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
        fail(e, fmt::format("key '{}' does not apply to model '{}'", e.key, model));
}

Eigen::MatrixXd parse_matrix(const Entry& e, int dim)
{
    const auto rows = split(e.value, ';');
    if (static_cast<int>(rows.size()) != dim)
        fail(e, fmt::format("'cov' needs {} rows separated by ';'", dim));
    Eigen::MatrixXd m(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const auto cols = split(rows[static_cast<std::size_t>(i)], ',');
        if (static_cast<int>(cols.size()) != dim)
            fail(e, fmt::format("'cov' row {} needs {} entries", i + 1, dim));
        for (int j = 0; j < dim; ++j)
            m(i, j) = parse_real(e, cols[static_cast<std::size_t>(j)]);
    }
    return m;
}

}  // namespace

std::optional<std::string> suggest_key(const std::string& key,
                                       const std::vector<std::string>& candidates)
{
    std::optional<std::string> best;
    std::size_t best_d = std::max<std::size_t>(2, key.size() / 3) + 1;
    for (const auto& c : candidates) {
        const std::size_t d = edit_distance(key, c);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

ExperimentConfig parse_config(const std::string& text)
{
    const Document doc = tokenize(text);
    ExperimentConfig cfg;

    std::vector<std::string> global_allowed = kGlobalKeys;
    global_allowed.insert(global_allowed.end(), kAllModelKeys.begin(), kAllModelKeys.end());

    std::map<std::string, const Entry*> g;
    for (const Entry& e : doc.globals) {
        if (std::find(global_allowed.begin(), global_allowed.end(), e.key) == global_allowed.end())
            unknown_key(e, global_allowed, "global settings");
        g[e.key] = &e;
    }
    auto require = [&](const std::string& key) -> const Entry& {
        auto it = g.find(key);
        if (it == g.end())
            throw ConfigValidationError(key, fmt::format("missing required key '{}'", key));
        return *it->second;
    };

    // Model kind first: it decides which parameter keys are legal.
    const Entry& model = require("model");
    if (std::find(kModelKinds.begin(), kModelKinds.end(), model.value) == kModelKinds.end()) {
        std::string msg = fmt::format("unknown model '{}'", model.value);
        if (auto s = suggest_key(model.value, kModelKinds))
            msg += fmt::format(" (did you mean '{}'?)", *s);
        fail(model, msg);
    }
    cfg.model.kind = model.value;

    if (auto it = g.find("dim"); it != g.end()) {
        cfg.dim = parse_number<int>(*it->second, it->second->value);
        if (cfg.dim < 1 || cfg.dim > 3)
            fail(*it->second, "'dim' must be 1, 2 or 3");
    }
    if (auto it = g.find("half_width"); it != g.end()) {
        cfg.half_width = parse_number<int>(*it->second, it->second->value);
        if (cfg.half_width < 1)
            fail(*it->second, "'half_width' must be at least 1");
    }
    if (auto it = g.find("spacing"); it != g.end())
        cfg.spacing = parse_positive(*it->second);
    if (auto it = g.find("replicates"); it != g.end()) {
        const auto n = parse_number<long long>(*it->second, it->second->value);
        if (n < 1)
            fail(*it->second, "'replicates' must be at least 1");
        cfg.replicates = static_cast<std::size_t>(n);
    }
    if (auto it = g.find("seed"); it != g.end())
        cfg.seed = parse_number<std::uint64_t>(*it->second, it->second->value);
    if (auto it = g.find("backend"); it != g.end())
        cfg.backend = parse_backend(*it->second);
    if (auto it = g.find("out"); it != g.end())
        cfg.out = it->second->value;
    if (auto it = g.find("rasters"); it != g.end()) {
        const auto n = parse_number<long long>(*it->second, it->second->value);
        if (n < 0)
            fail(*it->second, "'rasters' must be non-negative");
        cfg.rasters = static_cast<std::size_t>(n);
    }

    for (const std::string& key : kAllModelKeys) {
        auto it = g.find(key);
        if (it == g.end())
            continue;
        const Entry& e = *it->second;
        check_model_key_context(e, cfg.model.kind);
        if (key == "sigma")
            cfg.model.sigma = parse_positive(e);
        else if (key == "cov")
            cfg.model.cov = parse_matrix(e, cfg.dim);
        else if (key == "v")
            cfg.model.v = parse_positive(e);
        else if (key == "ell")
            cfg.model.ell = parse_positive(e);
        else if (key == "alpha")
            cfg.model.alpha = parse_positive(e);
        else if (key == "s")
            cfg.model.s = parse_positive(e);
        else if (key == "weight") {
            cfg.model.weight = parse_real(e, e.value);
            if (!(cfg.model.weight > 0.0 && cfg.model.weight < 1.0))
                fail(e, "'weight' must lie in (0, 1)");
        } else if (key == "correlation") {
            if (e.value == "squared_exponential")
                cfg.model.correlation = Correlation::SquaredExponential;
            else if (e.value == "exponential")
                cfg.model.correlation = Correlation::Exponential;
            else
                fail(e, "'correlation' must be squared_exponential or exponential");
        }
    }
    if (g.count("sigma") && g.count("cov"))
        fail(*g["cov"], "give either 'sigma' or 'cov', not both");
    if (cfg.model.kind == "brown_resnick" && cfg.model.alpha > 2.0)
        fail(*g["alpha"], "'alpha' must lie in (0, 2]");

    // Build the model once so parameter problems surface as validation errors.
    try {
        (void)build_model(cfg);
    } catch (const std::invalid_argument& ex) {
        throw ConfigValidationError("model", fmt::format("invalid model parameters: {}", ex.what()));
    }

    const Entry& tasks = require("tasks");
    std::vector<std::string> names = split(tasks.value, ',');
    const auto known = task_names();
    std::set<std::string> seen;
    for (const auto& name : names) {
        auto kind = task_from_name(name);
        if (!kind) {
            std::string msg = fmt::format("unknown task '{}'", name);
            if (auto s = suggest_key(name, known))
                msg += fmt::format(" (did you mean '{}'?)", *s);
            fail(tasks, msg);
        }
        if (!seen.insert(name).second)
            fail(tasks, fmt::format("task '{}' listed twice", name));
        TaskSpec t;
        t.kind = *kind;
        t.replicates = cfg.replicates;
        fill_task_defaults(t, cfg);
        cfg.tasks.push_back(std::move(t));
    }

    for (const Section& sec : doc.sections) {
        auto kind = task_from_name(sec.name);
        auto it = std::find_if(cfg.tasks.begin(), cfg.tasks.end(),
                               [&](const TaskSpec& t) { return kind && t.kind == *kind; });
        if (it == cfg.tasks.end()) {
            std::string msg = fmt::format("line {}: section [{}] does not name a task listed in 'tasks'",
                                          sec.line, sec.name);
            if (!kind)
                if (auto s = suggest_key(sec.name, known))
                    msg += fmt::format(" (did you mean '{}'?)", *s);
            throw ConfigValidationError(sec.name, msg);
        }
        const auto allowed = task_keys(it->kind);
        for (const Entry& e : sec.entries) {
            if (std::find(allowed.begin(), allowed.end(), e.key) == allowed.end())
                unknown_key(e, allowed, fmt::format("section [{}]", sec.name));
            parse_task_entry(*it, e, cfg);
        }
    }

    // Cross-field checks that need the finished task list.
    const GridWindow w = build_window(cfg, cfg.half_width);
    const SpectralModel m = build_model(cfg);
    const bool moving = m.is_moving_max();
    if (cfg.backend == Backend::MovingMax && !moving)
        throw ConfigValidationError("backend", fmt::format("backend moving_max is incompatible with model {}", cfg.model.kind));
    if (cfg.backend == Backend::ExtremalFunctions && m.kind() != ModelKind::SchlatherGauss &&
        m.kind() != ModelKind::BrownResnick)
        throw ConfigValidationError("backend", fmt::format("backend extremal_fns is incompatible with model {}", cfg.model.kind));
    if (cfg.backend == Backend::Composite && m.kind() != ModelKind::Composite)
        throw ConfigValidationError("backend", "backend composite needs model composite");

    for (TaskSpec& t : cfg.tasks) {
        const std::string name = to_string(t.kind);
        auto bad = [&](const std::string& key, const std::string& what) {
            throw ConfigValidationError(key, fmt::format("[{}] {}", name, what));
        };
        const Coord origin{0, 0, 0};
        auto inside = [&](const Coord& base, const Coord& lag) {
            Coord c{base[0] + lag[0], base[1] + lag[1], base[2] + lag[2]};
            return w.contains(c);
        };
        switch (t.kind) {
        case TaskKind::ThetaGrid:
        case TaskKind::PiGrid:
            for (const Coord& h : t.lags)
                if (!inside(origin, h))
                    bad("lags", fmt::format("lag {} leaves the window", format_coord(h, cfg.dim)));
            break;
        case TaskKind::Coverage:
            for (const auto& K : t.sets)
                for (const Coord& h : K)
                    if (!inside(t.x, h))
                        bad("sets", fmt::format("site x + {} leaves the window", format_coord(h, cfg.dim)));
            break;
        case TaskKind::Containment:
            for (int r : t.radii)
                for (int a = 0; a < cfg.dim; ++a)
                    if (std::abs(t.x[static_cast<std::size_t>(a)]) > r)
                        bad("radii", fmt::format("x is outside the box of radius {}", r));
            break;
        case TaskKind::Density:
            if (t.radii.empty())
                bad("radii", "needs at least one radius");
            break;
        case TaskKind::Boundedness:
            for (int r : t.half_widths)
                if (static_cast<int>(t.inner_fraction * r) >= r)
                    bad("inner_fraction", "annulus would be empty");
            break;
        case TaskKind::BetaBound: {
            const SiteSet S(w, {w.origin()});
            for (double r : t.distances)
                if (distant_sites(w, S, r).empty())
                    bad("distances", fmt::format("no sites at distance {} from the origin", r));
            break;
        }
        case TaskKind::OracleCheck:
            if (!moving || m.kind() == ModelKind::Constant)
                bad("model", "oracle_check needs a smith or exp_kernel model");
            break;
        default:
            break;
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string echo_config(const ExperimentConfig& cfg)
{
    std::string out;
    auto line = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };
    const ModelSpec& m = cfg.model;
    line("model", m.kind);
    line("dim", std::to_string(cfg.dim));
    line("half_width", std::to_string(cfg.half_width));
    line("spacing", fmt::format("{}", cfg.spacing));
    line("replicates", std::to_string(cfg.replicates));
    line("seed", std::to_string(cfg.seed));
    line("backend", backend_name(cfg.backend));
    line("out", cfg.out);
    line("rasters", std::to_string(cfg.rasters));
    const auto& keys = kModelKeys.at(m.kind);
    auto has = [&](const char* k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
    if (has("sigma") || has("cov")) {
        if (m.cov) {
            std::vector<std::string> rows;
            for (int i = 0; i < m.cov->rows(); ++i) {
                std::vector<std::string> cols;
                for (int j = 0; j < m.cov->cols(); ++j)
                    cols.push_back(fmt::format("{}", (*m.cov)(i, j)));
                rows.push_back(fmt::format("{}", fmt::join(cols, ",")));
            }
            line("cov", fmt::format("{}", fmt::join(rows, "; ")));
        } else {
            line("sigma", fmt::format("{}", m.sigma));
        }
    }
    if (has("v"))
        line("v", fmt::format("{}", m.v));
    if (has("ell"))
        line("ell", fmt::format("{}", m.ell));
    if (has("correlation"))
        line("correlation", to_string(m.correlation));
    if (has("alpha"))
        line("alpha", fmt::format("{}", m.alpha));
    if (has("s"))
        line("s", fmt::format("{}", m.s));
    if (has("weight"))
        line("weight", fmt::format("{}", m.weight));
    std::vector<std::string> names;
    for (const auto& t : cfg.tasks)
        names.push_back(to_string(t.kind));
    line("tasks", fmt::format("{}", fmt::join(names, ", ")));

    const int d = cfg.dim;
    auto bool_s = [](bool b) { return b ? std::string("true") : std::string("false"); };
    for (const auto& t : cfg.tasks) {
        out += "\n[" + to_string(t.kind) + "]\n";
        line("replicates", std::to_string(t.replicates));
        switch (t.kind) {
        case TaskKind::Margins:
            line("z", fmt::format("{}", fmt::join(t.z, ", ")));
            break;
        case TaskKind::ThetaGrid:
            line("lags", format_coords(t.lags, d));
            break;
        case TaskKind::PiGrid:
            line("lags", format_coords(t.lags, d));
            line("formula", bool_s(t.formula));
            break;
        case TaskKind::Coverage: {
            line("x", format_coord(t.x, d));
            std::vector<std::string> sets;
            for (const auto& K : t.sets)
                sets.push_back(format_coords(K, d));
            line("sets", fmt::format("{}", fmt::join(sets, " | ")));
            line("formula", bool_s(t.formula));
            break;
        }
        case TaskKind::Containment:
            line("x", format_coord(t.x, d));
            line("radii", fmt::format("{}", fmt::join(t.radii, ", ")));
            line("formula", bool_s(t.formula));
            break;
        case TaskKind::Volume:
            line("half_widths", fmt::format("{}", fmt::join(t.half_widths, ", ")));
            line("formula", bool_s(t.formula));
            break;
        case TaskKind::Boundedness:
            line("half_widths", fmt::format("{}", fmt::join(t.half_widths, ", ")));
            line("inner_fraction", fmt::format("{}", t.inner_fraction));
            line("formula", bool_s(t.formula));
            break;
        case TaskKind::Density:
            line("radii", fmt::format("{}", fmt::join(t.radii, ", ")));
            line("floor", fmt::format("{}", t.floor));
            break;
        case TaskKind::BetaBound:
            line("distances", fmt::format("{}", fmt::join(t.distances, ", ")));
            break;
        case TaskKind::OracleCheck:
            line("strict", bool_s(t.strict));
            break;
        }
    }
    return out;
}

SpectralModel build_model(const ExperimentConfig& cfg)
{
    const ModelSpec& m = cfg.model;
    auto smith = [&]() {
        if (m.cov)
            return SpectralModel::smith(*m.cov);
        return SpectralModel::smith_isotropic(cfg.dim, m.sigma);
    };
    if (m.kind == "smith")
        return smith();
    if (m.kind == "exp_kernel")
        return SpectralModel::exp_kernel(cfg.dim, m.v);
    if (m.kind == "schlather")
        return SpectralModel::schlather(cfg.dim, m.ell, m.correlation);
    if (m.kind == "brown_resnick")
        return SpectralModel::brown_resnick(cfg.dim, m.s, m.alpha);
    if (m.kind == "constant")
        return SpectralModel::constant(cfg.dim);
    if (m.kind == "composite")
        return SpectralModel::composite(smith(), SpectralModel::schlather(cfg.dim, m.ell, m.correlation),
                                        m.weight);
    throw std::invalid_argument("unknown model kind '" + m.kind + "'");
}

GridWindow build_window(const ExperimentConfig& cfg, int half_width)
{
    return GridWindow(cfg.dim, half_width, cfg.spacing);
}

}  // namespace stormcells
