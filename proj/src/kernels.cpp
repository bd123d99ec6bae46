#include "stormcells/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "stormcells/simulator.hpp"

namespace stormcells {

namespace {

void check_sizes(const GridWindow& window, std::size_t a, std::size_t b)
{
    if (a != window.site_count() || b != window.site_count())
        throw std::invalid_argument("kernel output size does not match the window");
}

inline void argmax_site(const SpectralModel& model, const Point& p,
                        std::span<const StormRecord> storms, double& best, std::int64_t& label)
{
    best = -std::numeric_limits<double>::infinity();
    label = 0;
    for (const StormRecord& st : storms) {
        const double score = storm_log_score(model, std::log(st.u), p, st.center);
        if (score > best) {
            best = score;
            label = st.id;
        }
    }
}

}  // namespace

double storm_log_score(const SpectralModel& model, double log_u, const Point& site_pos,
                       const Point& center)
{
    const Point diff{site_pos[0] - center[0], site_pos[1] - center[1], site_pos[2] - center[2]};
    return log_u + model.log_kernel(diff);
}

void storm_argmax_serial(const SpectralModel& model, const GridWindow& window,
                         std::span<const StormRecord> storms, std::span<double> log_eta,
                         std::span<std::int64_t> labels)
{
    check_sizes(window, log_eta.size(), labels.size());
    for (Site s = 0; s < window.site_count(); ++s)
        argmax_site(model, window.position(s), storms, log_eta[s], labels[s]);
}

void storm_argmax_parallel(const SpectralModel& model, const GridWindow& window,
                           std::span<const StormRecord> storms, std::span<double> log_eta,
                           std::span<std::int64_t> labels)
{
    check_sizes(window, log_eta.size(), labels.size());
    const auto n = static_cast<std::int64_t>(window.site_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < n; ++s) {
        const auto site = static_cast<Site>(s);
        argmax_site(model, window.position(site), storms, log_eta[site], labels[site]);
    }
}

namespace {

inline std::size_t argmin_site(const Point& p, std::size_t count, const WeightedDistance& distance)
{
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const double v = distance(p, i);
        if (v < best) {
            best = v;
            arg = i;
        }
    }
    return arg;
}

}  // namespace

void weighted_argmin_serial(const GridWindow& window, std::size_t count,
                            const WeightedDistance& distance, std::span<std::size_t> out)
{
    if (out.size() != window.site_count())
        throw std::invalid_argument("kernel output size does not match the window");
    if (count == 0)
        throw std::invalid_argument("weighted argmin needs at least one site");
    for (Site s = 0; s < window.site_count(); ++s)
        out[s] = argmin_site(window.position(s), count, distance);
}

void weighted_argmin_parallel(const GridWindow& window, std::size_t count,
                              const WeightedDistance& distance, std::span<std::size_t> out)
{
    if (out.size() != window.site_count())
        throw std::invalid_argument("kernel output size does not match the window");
    if (count == 0)
        throw std::invalid_argument("weighted argmin needs at least one site");
    const auto n = static_cast<std::int64_t>(window.site_count());
#pragma omp parallel for schedule(static)
    for (std::int64_t s = 0; s < n; ++s) {
        const auto site = static_cast<Site>(s);
        out[site] = argmin_site(window.position(site), count, distance);
    }
}

void for_each_replicate(std::size_t n, const std::function<void(std::size_t)>& body,
                        Execution exec)
{
    std::vector<std::exception_ptr> errors(n);
    if (exec == Execution::Serial) {
        for (std::size_t r = 0; r < n; ++r) {
            try {
                body(r);
            } catch (...) {
                errors[r] = std::current_exception();
            }
        }
    } else {
        const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t r = 0; r < count; ++r) {
            try {
                body(static_cast<std::size_t>(r));
            } catch (...) {
                errors[static_cast<std::size_t>(r)] = std::current_exception();
            }
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

int worker_count()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_worker_count(int workers)
{
    if (workers < 1)
        throw std::invalid_argument("worker count must be at least 1");
#ifdef _OPENMP
    omp_set_num_threads(workers);
#endif
}

}  // namespace stormcells
