#include "stormcells/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "stormcells/error.hpp"
#include "stormcells/kernels.hpp"

namespace stormcells {

std::string to_string(Backend b)
{
    switch (b) {
    case Backend::Auto: return "auto";
    case Backend::MovingMax: return "moving_max";
    case Backend::ExtremalFunctions: return "extremal_functions";
    case Backend::Composite: return "composite";
    }
    return "unknown";
}

const StormRecord& Realization::storm(StormId id) const
{
    auto it = std::lower_bound(storms.begin(), storms.end(), id,
                               [](const StormRecord& s, StormId v) { return s.id < v; });
    if (it == storms.end() || it->id != id)
        throw std::out_of_range("no retained storm with id " + std::to_string(id));
    return *it;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Storms between recomputations of the running-maximum floor.
constexpr std::size_t kFloorRefresh = 16;

void require_dims(const SpectralModel& model, const GridWindow& window)
{
    if (model.dim() != window.dim())
        throw std::invalid_argument("model and window dimensions differ");
}

std::vector<StormRecord> retained(const std::vector<StormRecord>& generated,
                                  const std::vector<StormId>& labels)
{
    std::vector<char> wins(generated.size() + 1, 0);
    for (StormId id : labels)
        wins[static_cast<std::size_t>(id)] = 1;
    std::vector<StormRecord> out;
    for (const StormRecord& s : generated)
        if (wins[static_cast<std::size_t>(s.id)])
            out.push_back(s);
    return out;
}

struct Strides {
    std::array<std::size_t, 3> stride{0, 0, 0};
};

Strides site_strides(const GridWindow& w)
{
    Strides s;
    std::size_t acc = 1;
    for (int a = w.dim() - 1; a >= 0; --a) {
        s.stride[static_cast<std::size_t>(a)] = acc;
        acc *= static_cast<std::size_t>(w.side());
    }
    return s;
}

// Calls f(site) for every site with integer coordinates in [lo, hi] per axis.
template <class F>
void for_box(const GridWindow& w, const Strides& st, const Coord& lo, const Coord& hi, F&& f)
{
    const int R = w.half_width();
    const int d = w.dim();
    const int lo1 = d > 1 ? lo[1] : 0, hi1 = d > 1 ? hi[1] : 0;
    const int lo2 = d > 2 ? lo[2] : 0, hi2 = d > 2 ? hi[2] : 0;
    for (int c0 = lo[0]; c0 <= hi[0]; ++c0) {
        const std::size_t b0 = static_cast<std::size_t>(c0 + R) * st.stride[0];
        for (int c1 = lo1; c1 <= hi1; ++c1) {
            const std::size_t b1 = b0 + (d > 1 ? static_cast<std::size_t>(c1 + R) * st.stride[1] : 0);
            for (int c2 = lo2; c2 <= hi2; ++c2)
                f(b1 + (d > 2 ? static_cast<std::size_t>(c2 + R) : 0));
        }
    }
}

// Per-axis physical half-widths of the region where a storm with log mark
// `log_u` can beat the floor. Returns false when it cannot win anywhere.
bool reach(const SpectralModel& model, double log_u, double log_sup, double floor,
           std::array<double, 3>& half)
{
    const double slack = log_u + log_sup - floor;
    if (slack < 0.0)
        return false;
    if (model.kind() == ModelKind::SmithGauss) {
        const Eigen::MatrixXd& cov = model.smith_params().covariance;
        for (int a = 0; a < model.dim(); ++a)
            half[static_cast<std::size_t>(a)] = std::sqrt(2.0 * slack * cov(a, a));
    } else {
        const double r = model.exp_params().range * slack;
        half = {r, r, r};
    }
    for (double& h : half)
        h = h * (1.0 + 1e-9) + 1e-12;
    return true;
}

}  // namespace

Realization simulate_moving_max(const SpectralModel& model, const GridWindow& window,
                                RandomStream& rng, const SimulationOptions& options)
{
    require_dims(model, window);
    if (!model.is_moving_max())
        throw IncompatibleBackend("moving-maximum backend cannot simulate " + model.name());

    const std::size_t n = window.site_count();
    const int d = window.dim();
    const int R = window.half_width();
    const double h = window.spacing();
    std::vector<Point> pos(n);
    for (Site s = 0; s < n; ++s)
        pos[s] = window.position(s);

    const CenterDomain dom = center_domain(model, window);
    const double log_sup = model.log_kernel(Point{0.0, 0.0, 0.0});
    const bool prunable = model.kind() != ModelKind::Constant;
    const Strides strides = site_strides(window);

    std::vector<double> lm(n, kNegInf);
    std::vector<StormId> labels(n, 0);
    std::vector<StormRecord> generated;
    std::size_t unset = n;
    double floor = kNegInf;
    PoissonStream marks(dom.volume);

    for (;;) {
        const double u = marks.next(rng);
        const double log_u = std::log(u);
        // No later storm can reach any running maximum.
        if (unset == 0 && log_u + log_sup <= floor)
            break;
        if (generated.size() >= options.storm_budget)
            throw SimulationError("moving-maximum storm budget of " +
                                  std::to_string(options.storm_budget) + " exhausted");

        StormRecord st;
        st.id = static_cast<StormId>(generated.size() + 1);
        st.u = u;
        for (int a = 0; a < d && prunable; ++a)
            st.center[static_cast<std::size_t>(a)] = (2.0 * rng.uniform() - 1.0) * dom.half_side;
        generated.push_back(st);

        auto visit = [&](Site s) {
            const double score = storm_log_score(model, log_u, pos[s], st.center);
            if (score > lm[s]) {
                if (lm[s] == kNegInf)
                    --unset;
                lm[s] = score;
                labels[s] = st.id;
            }
        };

        Coord lo{-R, -R, -R}, hi{R, R, R};
        bool any = true;
        if (prunable && floor > kNegInf) {
            std::array<double, 3> half{};
            any = reach(model, log_u, log_sup, floor, half);
            for (int a = 0; a < d && any; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                const double l = std::ceil((st.center[ua] - half[ua]) / h);
                const double u2 = std::floor((st.center[ua] + half[ua]) / h);
                lo[ua] = static_cast<int>(std::max<double>(l, -R));
                hi[ua] = static_cast<int>(std::min<double>(u2, R));
                if (lo[ua] > hi[ua])
                    any = false;
            }
        }
        if (any)
            for_box(window, strides, lo, hi, visit);

        if (unset == 0 && (floor == kNegInf || generated.size() % kFloorRefresh == 0))
            floor = *std::min_element(lm.begin(), lm.end());
    }

    Realization r{window, {}, std::move(labels), {}, rng.id(), Backend::MovingMax,
                  generated.size(), {}};
    r.eta.resize(n);
    for (Site s = 0; s < n; ++s)
        r.eta[s] = std::exp(lm[s]);
    r.storms = retained(generated, r.labels);
    if (options.log_candidates)
        r.candidate_log = std::move(generated);
    return r;
}

Realization realize_storms(const SpectralModel& model, const GridWindow& window,
                           std::span<const StormRecord> storms)
{
    require_dims(model, window);
    if (!model.is_moving_max())
        throw IncompatibleBackend("explicit storms need a moving-maximum model");
    if (storms.empty())
        throw std::invalid_argument("explicit storm list is empty");
    const std::size_t n = window.site_count();
    std::vector<double> lm(n);
    Realization r{window, std::vector<double>(n), std::vector<StormId>(n), {}, {},
                  Backend::MovingMax, storms.size(), {}};
    storm_argmax_serial(model, window, storms, lm, r.labels);
    for (Site s = 0; s < n; ++s)
        r.eta[s] = std::exp(lm[s]);
    std::vector<StormRecord> sorted(storms.begin(), storms.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const StormRecord& a, const StormRecord& b) { return a.id < b.id; });
    std::vector<StormId> ids = r.labels;
    std::sort(ids.begin(), ids.end());
    std::vector<StormRecord> keep;
    for (const StormRecord& s : sorted)
        if (std::binary_search(ids.begin(), ids.end(), s.id))
            keep.push_back(s);
    r.storms = std::move(keep);
    return r;
}

namespace {

// Table of rho or gamma over all lattice lags between two window sites.
class LagTable {
  public:
    LagTable(const SpectralModel& model, const GridWindow& w) : dim_(w.dim()), R_(w.half_width())
    {
        const int L = 4 * R_ + 1;
        std::size_t size = 1;
        for (int a = dim_ - 1; a >= 0; --a) {
            stride_[static_cast<std::size_t>(a)] = size;
            size *= static_cast<std::size_t>(L);
        }
        values_.resize(size);
        const bool schlather = model.kind() == ModelKind::SchlatherGauss;
        for (std::size_t idx = 0; idx < size; ++idx) {
            Coord lag{0, 0, 0};
            std::size_t rest = idx;
            for (int a = 0; a < dim_; ++a) {
                const auto ua = static_cast<std::size_t>(a);
                lag[ua] = static_cast<int>(rest / stride_[ua]) - 2 * R_;
                rest %= stride_[ua];
            }
            const Point p = physical_lag(w, lag);
            values_[idx] = schlather ? model.correlation(p) : model.variogram(p);
        }
    }

    double at(const Coord& a, const Coord& b) const
    {
        std::size_t idx = 0;
        for (int i = 0; i < dim_; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            idx += static_cast<std::size_t>(a[ui] - b[ui] + 2 * R_) * stride_[ui];
        }
        return values_[idx];
    }

  private:
    int dim_;
    int R_;
    std::array<std::size_t, 3> stride_{0, 0, 0};
    std::vector<double> values_;
};

// Offsets from a site k to the sites j < k processed before it, nearest
// first. In row-major order j < k exactly when the offset is
// lexicographically negative.
struct Offset {
    Coord delta;
    std::ptrdiff_t linear;
};

std::vector<Offset> earlier_offsets_by_distance(const GridWindow& w)
{
    const int d = w.dim();
    const int M = 2 * w.half_width();
    const auto side = static_cast<std::ptrdiff_t>(w.side());
    std::vector<Offset> out;
    for (int a = -M; a <= M; ++a)
        for (int b = (d > 1 ? -M : 0); b <= (d > 1 ? M : 0); ++b)
            for (int c = (d > 2 ? -M : 0); c <= (d > 2 ? M : 0); ++c) {
                const Coord delta{a, b, c};
                std::ptrdiff_t linear = 0;
                for (int i = 0; i < d; ++i)
                    linear = linear * side + delta[static_cast<std::size_t>(i)];
                if (linear < 0)
                    out.push_back(Offset{delta, linear});
            }
    auto norm = [](const Coord& c) { return c[0] * c[0] + c[1] * c[1] + c[2] * c[2]; };
    std::stable_sort(out.begin(), out.end(), [&](const Offset& x, const Offset& y) {
        return norm(x.delta) < norm(y.delta);
    });
    return out;
}

}  // namespace

Realization simulate_extremal_functions(const SpectralModel& model, const GridWindow& window,
                                        const GaussianFactor& factor, RandomStream& rng,
                                        const SimulationOptions& options)
{
    require_dims(model, window);
    const bool schlather = model.kind() == ModelKind::SchlatherGauss;
    if (!schlather && model.kind() != ModelKind::BrownResnick)
        throw IncompatibleBackend("extremal-functions backend cannot simulate " + model.name());
    if (!(factor.window() == window))
        throw std::invalid_argument("Gaussian factor was built for a different window");

    const std::size_t n = window.site_count();
    std::vector<Coord> coords(n);
    for (Site s = 0; s < n; ++s)
        coords[s] = window.coord(s);
    const LagTable table(model, window);
    const std::vector<Offset> offsets = earlier_offsets_by_distance(window);
    const int R = window.half_width();
    const int d = window.dim();

    std::vector<double> z(factor.rank()), w(n);
    // stamp[j] == current marks w[j] as computed for the current candidate.
    std::vector<std::uint64_t> stamp(n, 0);
    std::vector<std::uint64_t> zstamp(factor.rank(), 0);
    std::uint64_t current = 0;
    const bool dense = factor.layout() == GaussianFactor::Layout::Dense;
    const std::uint64_t pair_blocks = (factor.rank() + 1) / 2;
    std::vector<double> full(dense ? 0 : n);
    // Running maximum; log scale for Brown-Resnick to skip exp on losing sites.
    std::vector<double> Z(n, schlather ? 0.0 : -std::numeric_limits<double>::infinity());
    std::vector<StormId> labels(n, 0);
    std::vector<StormRecord> storms;
    std::vector<StormRecord> log;
    std::size_t total = 0;

    for (Site k = 0; k < n; ++k) {
        PoissonStream marks(1.0);
        std::size_t tries = 0;
        const Coord ck = coords[k];
        for (;;) {
            const double zeta = marks.next(rng);
            // Brown-Resnick levels live in the log domain, Schlather ones are linear.
            const double zlevel = schlather ? zeta : std::log(zeta);
            if (zlevel <= Z[k])
                break;
            if (++tries > options.candidates_per_site)
                throw SimulationError("extremal-functions candidate budget exhausted at site " +
                                      std::to_string(k));
            if (++total > options.storm_budget)
                throw SimulationError("extremal-functions storm budget exhausted");

            ++current;
            // Dense factors consume rank normals in sequence; Kronecker factors
            // read only the entries in the band of the rows evaluated.
            if (dense)
                for (double& v : z)
                    v = rng.normal();
            const std::uint64_t block0 = total * pair_blocks;
            auto zat = [&](std::size_t i) {
                if (dense)
                    return z[i];
                if (zstamp[i] != current) {
                    const std::size_t i0 = i & ~std::size_t{1};
                    const auto pair = indexed_normal_pair(rng.id(), block0 + i / 2);
                    z[i0] = pair[0];
                    zstamp[i0] = current;
                    if (i0 + 1 < z.size()) {
                        z[i0 + 1] = pair[1];
                        zstamp[i0 + 1] = current;
                    }
                }
                return z[i];
            };
            auto field = [&](Site j) {
                if (stamp[j] != current) {
                    w[j] = factor.apply_row_with(j, zat);
                    stamp[j] = current;
                }
                return w[j];
            };
            const double wk = field(k);
            // Schlather: size-biased W(k) is Rayleigh.
            const double lead = schlather ? std::sqrt(2.0 * rng.exponential()) : 0.0;
            auto level = [&](Site j) {
                if (j == k)
                    return zlevel;
                const double t = table.at(coords[j], ck);
                if (schlather)
                    return zeta * (std::max(field(j) + t * (lead - wk), 0.0) / lead);
                return zlevel + (field(j) - wk - 0.5 * t);
            };

            bool accepted = true;
            if (k > 0) {
                for (const Offset& off : offsets) {
                    bool inside = true;
                    for (int a = 0; a < d && inside; ++a) {
                        const int c = ck[static_cast<std::size_t>(a)] + off.delta[static_cast<std::size_t>(a)];
                        inside = c >= -R && c <= R;
                    }
                    if (!inside)
                        continue;
                    const Site j = static_cast<Site>(static_cast<std::ptrdiff_t>(k) + off.linear);
                    if (level(j) >= Z[j]) {
                        accepted = false;
                        break;
                    }
                }
            }
            if (options.log_candidates) {
                StormRecord c;
                c.id = accepted ? static_cast<StormId>(storms.size() + 1) : 0;
                c.u = zeta;
                c.pin_site = static_cast<std::int64_t>(k);
                log.push_back(c);
            }
            if (!accepted)
                continue;

            StormRecord st;
            st.id = static_cast<StormId>(storms.size() + 1);
            st.u = zeta;
            st.pin_site = static_cast<std::int64_t>(k);
            storms.push_back(st);
            if (!dense) {
                // One axis-wise pass beats n banded row evaluations.
                for (std::size_t i = 0; i < z.size(); ++i)
                    zat(i);
                factor.apply(z, full);
                for (Site j = k + 1; j < n; ++j) {
                    w[j] = full[j];
                    stamp[j] = current;
                }
            }
            for (Site j = k; j < n; ++j) {
                const double v = level(j);
                if (v > Z[j]) {
                    Z[j] = v;
                    labels[j] = st.id;
                }
            }
        }
    }

    if (!schlather)
        for (double& v : Z)
            v = std::exp(v);
    Realization r{window, std::move(Z), std::move(labels), {}, rng.id(),
                  Backend::ExtremalFunctions, total, std::move(log)};
    r.storms = retained(storms, r.labels);
    return r;
}

Realization simulate_composite(const SpectralModel& model, const GridWindow& window,
                               const GaussianFactor& factor, RandomStream& rng,
                               const SimulationOptions& options)
{
    if (model.kind() != ModelKind::Composite)
        throw IncompatibleBackend("composite backend needs a composite model, got " + model.name());
    require_dims(model, window);
    Realization rd = simulate_moving_max(model.dissipative_part(), window, rng, options);
    Realization rc =
        simulate_extremal_functions(model.conservative_part(), window, factor, rng, options);

    const double a = model.conservative_weight();
    const StormId offset = static_cast<StormId>(rd.storms_generated);
    const std::size_t n = window.site_count();
    Realization r{window, std::vector<double>(n), std::vector<StormId>(n), {}, rng.id(),
                  Backend::Composite, rd.storms_generated + rc.storms_generated, {}};
    for (Site s = 0; s < n; ++s) {
        const double vd = (1.0 - a) * rd.eta[s];
        const double vc = a * rc.eta[s];
        // Dissipative ids are lower, so they win ties.
        if (vc > vd) {
            r.eta[s] = vc;
            r.labels[s] = rc.labels[s] + offset;
        } else {
            r.eta[s] = vd;
            r.labels[s] = rd.labels[s];
        }
    }
    std::vector<StormRecord> all = rd.storms;
    for (StormRecord st : rc.storms) {
        st.id += offset;
        st.component = Component::Conservative;
        all.push_back(st);
    }
    std::vector<StormRecord> keep;
    std::vector<StormId> ids = r.labels;
    std::sort(ids.begin(), ids.end());
    for (const StormRecord& st : all)
        if (std::binary_search(ids.begin(), ids.end(), st.id))
            keep.push_back(st);
    r.storms = std::move(keep);
    return r;
}

Realization simulate(const SpectralModel& model, const GridWindow& window,
                     const GaussianFactor* factor, RandomStream& rng, Backend backend,
                     const SimulationOptions& options)
{
    if (backend == Backend::Auto) {
        if (model.is_moving_max())
            backend = Backend::MovingMax;
        else if (model.kind() == ModelKind::Composite)
            backend = Backend::Composite;
        else
            backend = Backend::ExtremalFunctions;
    }
    if (backend == Backend::MovingMax)
        return simulate_moving_max(model, window, rng, options);

    // Validate the pairing before paying for a factorization.
    if (backend == Backend::Composite && model.kind() != ModelKind::Composite)
        throw IncompatibleBackend("composite backend cannot simulate " + model.name());
    if (backend == Backend::ExtremalFunctions && model.kind() != ModelKind::SchlatherGauss &&
        model.kind() != ModelKind::BrownResnick)
        throw IncompatibleBackend("extremal-functions backend cannot simulate " + model.name());

    std::optional<GaussianFactor> local;
    if (factor == nullptr) {
        local.emplace(build_gaussian_factor(model, window));
        factor = &*local;
    }
    if (backend == Backend::Composite)
        return simulate_composite(model, window, *factor, rng, options);
    return simulate_extremal_functions(model, window, *factor, rng, options);
}

bool conservative_wins(const Realization& r, Site site)
{
    return r.storm(r.labels.at(site)).component == Component::Conservative;
}

}  // namespace stormcells
