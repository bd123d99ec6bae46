#include "stormcells/tessellation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace stormcells {

Tessellation extract_tessellation(const Realization& r)
{
    const std::size_t n = r.window.site_count();
    if (r.labels.size() != n)
        throw std::invalid_argument("realization labels do not cover the window");
    std::map<StormId, std::vector<Site>> members;
    for (Site s = 0; s < n; ++s)
        members[r.labels[s]].push_back(s);  // ascending s keeps each fiber sorted
    Tessellation t{r.window, r.labels, {}, r.labels[r.window.origin()]};
    for (auto& [id, sites] : members)
        t.cells.emplace(id, SiteSet(r.window, std::move(sites)));
    return t;
}

const SiteSet& cell_of(const Tessellation& t, Site x)
{
    return t.cells.at(t.labels.at(x));
}

CellStats cell_stats(const Tessellation& t, StormId id)
{
    auto it = t.cells.find(id);
    if (it == t.cells.end())
        throw std::out_of_range("no cell with storm id " + std::to_string(id));
    const SiteSet& cell = it->second;
    const GridWindow& w = t.window;
    const int d = w.dim();

    CellStats st;
    st.volume = cell.measure();
    st.box_min = {w.half_width(), w.half_width(), w.half_width()};
    st.box_max = {-w.half_width(), -w.half_width(), -w.half_width()};
    for (int a = d; a < 3; ++a)
        st.box_min[static_cast<std::size_t>(a)] = st.box_max[static_cast<std::size_t>(a)] = 0;
    for (Site s : cell.members()) {
        const Coord c = w.coord(s);
        for (int a = 0; a < d; ++a) {
            const auto ua = static_cast<std::size_t>(a);
            st.box_min[ua] = std::min(st.box_min[ua], c[ua]);
            st.box_max[ua] = std::max(st.box_max[ua], c[ua]);
        }
        if (w.on_boundary(s))
            st.touches_boundary = true;
    }

    // Face-connected components by flood fill over the fiber.
    std::vector<char> seen(w.site_count(), 0);
    std::vector<Site> stack;
    for (Site s : cell.members()) {
        if (seen[s])
            continue;
        ++st.components;
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const Site cur = stack.back();
            stack.pop_back();
            const Coord c = w.coord(cur);
            for (int a = 0; a < d; ++a)
                for (int step : {-1, 1}) {
                    Coord nb = c;
                    nb[static_cast<std::size_t>(a)] += step;
                    if (!w.contains(nb))
                        continue;
                    const Site ns = w.site(nb);
                    if (!seen[ns] && t.labels[ns] == id) {
                        seen[ns] = 1;
                        stack.push_back(ns);
                    }
                }
        }
    }
    return st;
}

DensityProfile density_profile(const Tessellation& t, Site x, const std::vector<int>& radii)
{
    const GridWindow& w = t.window;
    const Coord cx = w.coord(x);
    const StormId id = t.labels.at(x);
    DensityProfile p;
    p.radii = radii;
    int prev = 0;
    for (int r : radii) {
        if (r < 1 || r <= prev)
            throw std::invalid_argument("density radii must be increasing and >= 1");
        prev = r;
        Coord lo{0, 0, 0}, hi{0, 0, 0};
        for (int a = 0; a < w.dim(); ++a) {
            const auto ua = static_cast<std::size_t>(a);
            lo[ua] = cx[ua] - r;
            hi[ua] = cx[ua] + r;
        }
        if (!w.contains(lo) || !w.contains(hi))
            throw std::invalid_argument("density box of radius " + std::to_string(r) +
                                        " leaves the window");
        std::size_t hit = 0, total = 0;
        for (int a = lo[0]; a <= hi[0]; ++a)
            for (int b = lo[1]; b <= hi[1]; ++b)
                for (int c = lo[2]; c <= hi[2]; ++c) {
                    ++total;
                    if (t.labels[w.site(Coord{a, b, c})] == id)
                        ++hit;
                }
        p.values.push_back(static_cast<double>(hit) / static_cast<double>(total));
    }
    if (!p.values.empty()) {
        const std::size_t half = p.values.size() / 2;  // top ceil(k/2) radii
        p.lower = *std::min_element(p.values.begin() + static_cast<std::ptrdiff_t>(half), p.values.end());
        p.upper = *std::max_element(p.values.begin() + static_cast<std::ptrdiff_t>(half), p.values.end());
    }
    return p;
}

std::string to_string(ReferenceKind k)
{
    switch (k) {
    case ReferenceKind::None: return "none";
    case ReferenceKind::Analytic: return "analytic";
    case ReferenceKind::Oracle: return "oracle";
    }
    return "none";
}

double MeanAccumulator::std_error_of_mean() const
{
    if (n == 0)
        return 0.0;
    const double m = mean();
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - m * m);
    return std::sqrt(var / static_cast<double>(n));
}

MeanAccumulator accumulate(const std::vector<double>& values)
{
    MeanAccumulator acc;
    for (double v : values)
        acc.add(v);
    return acc;
}

Realization SimulationPlan::realize(std::size_t replicate) const
{
    RandomStream rng(seed, static_cast<std::uint32_t>(replicate), substream);
    return simulate(model, window, factor.get(), rng, backend, options);
}

Realization SimulationPlan::realize_independent(std::size_t replicate) const
{
    RandomStream rng(seed, static_cast<std::uint32_t>(replicate), substream + 1);
    return simulate(model, window, factor.get(), rng, backend, options);
}

std::vector<double> SimulationPlan::spectral_draw(std::size_t replicate) const
{
    RandomStream rng(seed, static_cast<std::uint32_t>(replicate), substream + 2);
    return sample_spectral(model, window, factor.get(), rng);
}

SimulationPlan make_plan(const SpectralModel& model, const GridWindow& window, std::uint64_t seed,
                         Backend backend)
{
    if (model.dim() != window.dim())
        throw std::invalid_argument("model and window dimensions differ");
    std::shared_ptr<const GaussianFactor> factor;
    if (model.needs_gaussian())
        factor = std::make_shared<const GaussianFactor>(build_gaussian_factor(model, window));
    return SimulationPlan{model, window, std::move(factor), seed, backend, 0, Execution::Parallel, {}};
}

std::vector<double> replicate_values(const SimulationPlan& plan, std::size_t n,
                                     const std::function<double(std::size_t)>& f)
{
    if (n == 0)
        throw std::invalid_argument("replicate count must be at least 1");
    std::vector<double> out(n);
    for_each_replicate(n, [&](std::size_t r) { out[r] = f(r); }, plan.execution);
    return out;
}

bool same_cell(const Tessellation& t, Site x, Site y)
{
    return t.labels.at(x) == t.labels.at(y);
}

bool covers(const Tessellation& t, Site x, const SiteSet& K)
{
    const StormId id = t.labels.at(x);
    return std::all_of(K.members().begin(), K.members().end(),
                       [&](Site y) { return t.labels[y] == id; });
}

bool contained_in(const Tessellation& t, Site x, const SiteSet& K)
{
    for (Site s : cell_of(t, x).members())
        if (!K.contains(s))
            return false;
    return true;
}

bool links(const Tessellation& t, const SiteSet& S, const SiteSet& far)
{
    std::vector<StormId> ids;
    for (Site s : S.members())
        ids.push_back(t.labels[s]);
    std::sort(ids.begin(), ids.end());
    for (Site y : far.members())
        if (std::binary_search(ids.begin(), ids.end(), t.labels[y]))
            return true;
    return false;
}

bool origin_cell_touches_boundary(const Tessellation& t)
{
    for (Site s : t.cells.at(t.origin_cell).members())
        if (t.window.on_boundary(s))
            return true;
    return false;
}

EstimatorReport summarize(const std::string& name, const std::vector<double>& values)
{
    const MeanAccumulator acc = accumulate(values);
    EstimatorReport rep;
    rep.name = name;
    rep.estimate = acc.mean();
    rep.std_error = acc.std_error_of_mean();
    rep.replicates = acc.n;
    return rep;
}

Site shifted_site(const GridWindow& w, Site x, const Coord& h)
{
    Coord c = w.coord(x);
    for (int a = 0; a < 3; ++a)
        c[static_cast<std::size_t>(a)] += h[static_cast<std::size_t>(a)];
    if (!w.contains(c))
        throw std::invalid_argument("lag leaves the window");
    return w.site(c);
}

namespace {

void require_window(const SimulationPlan& plan, const SiteSet& K)
{
    if (!(K.window() == plan.window))
        throw std::invalid_argument("site set belongs to a different window");
}

}  // namespace

EstimatorReport empirical_pi(const SimulationPlan& plan, Site x, const Coord& h, std::size_t n)
{
    const Site y = shifted_site(plan.window, x, h);
    auto values = replicate_values(plan, n, [&](std::size_t r) {
        const Realization real = plan.realize(r);
        return real.labels[x] == real.labels[y] ? 1.0 : 0.0;
    });
    return summarize("pi", values);
}

EstimatorReport empirical_coverage(const SimulationPlan& plan, Site x, const SiteSet& K,
                                   std::size_t n)
{
    require_window(plan, K);
    auto values = replicate_values(plan, n, [&](std::size_t r) {
        const Realization real = plan.realize(r);
        const StormId id = real.labels[x];
        for (Site y : K.members())
            if (real.labels[y] != id)
                return 0.0;
        return 1.0;
    });
    return summarize("coverage", values);
}

EstimatorReport empirical_containment(const SimulationPlan& plan, Site x, const SiteSet& K,
                                      std::size_t n)
{
    require_window(plan, K);
    if (!K.contains(x))
        throw std::invalid_argument("containment needs x in K");
    auto values = replicate_values(plan, n, [&](std::size_t r) {
        const Realization real = plan.realize(r);
        const StormId id = real.labels[x];
        for (Site s = 0; s < real.labels.size(); ++s)
            if (real.labels[s] == id && !K.contains(s))
                return 0.0;
        return 1.0;
    });
    EstimatorReport rep = summarize("containment", values);
    rep.window_censored = true;
    return rep;
}

EstimatorReport beta_bound(const SimulationPlan& plan, const SiteSet& S, double r, std::size_t n)
{
    require_window(plan, S);
    if (S.empty())
        throw std::invalid_argument("beta bound needs a non-empty base set");
    const SiteSet far = distant_sites(plan.window, S, r);
    if (far.empty())
        throw std::invalid_argument("no window sites at distance >= r from the base set");
    auto values = replicate_values(plan, n, [&](std::size_t rep) {
        const Tessellation t = extract_tessellation(plan.realize(rep));
        return links(t, S, far) ? 2.0 : 0.0;
    });
    EstimatorReport rep = summarize("beta_bound", values);
    // The far set still contains S itself, so the event is certain.
    rep.degenerate = std::any_of(S.members().begin(), S.members().end(),
                                 [&](Site s) { return far.contains(s); });
    return rep;
}

}  // namespace stormcells
