// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <cmath>

#include <benchmark/benchmark.h>

#include "stormcells/kernels.hpp"
#include "stormcells/simulator.hpp"

using namespace stormcells;

namespace {

std::vector<StormRecord> make_storms(int count)
{
    RandomStream rng(7, 0, 0);
    PoissonStream ps;
    std::vector<StormRecord> storms;
    for (int i = 0; i < count; ++i)
        storms.push_back({i + 1, ps.next(rng), {rng.uniform() * 60 - 30, rng.uniform() * 60 - 30, 0}});
    return storms;
}

template <auto Kernel>
void BM_argmax(benchmark::State& state)
{
    const GridWindow w = make_grid(2, static_cast<int>(state.range(0)), 1.0);
    const SpectralModel m = SpectralModel::smith_isotropic(2, 2.0);
    const auto storms = make_storms(500);
    std::vector<double> eta(w.site_count());
    std::vector<std::int64_t> labels(w.site_count());
    for (auto _ : state) {
        Kernel(m, w, storms, eta, labels);
        benchmark::DoNotOptimize(labels.data());
    }
    state.SetItemsProcessed(state.iterations() * w.site_count() * storms.size());
}

template <auto Kernel>
void BM_argmin(benchmark::State& state)
{
    const GridWindow w = make_grid(2, static_cast<int>(state.range(0)), 1.0);
    const std::size_t count = w.site_count() / 8;
    WeightedDistance d = [&](const Point& p, std::size_t i) {
        const Point c = w.position(i * 8);
        return std::hypot(p[0] - c[0], p[1] - c[1]) - 0.01 * static_cast<double>(i % 7);
    };
    std::vector<std::size_t> out(w.site_count());
    for (auto _ : state) {
        Kernel(w, count, d, out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_replicates(benchmark::State& state)
{
    const auto exec = state.range(0) ? Execution::Parallel : Execution::Serial;
    std::vector<double> acc(256);
    for (auto _ : state) {
        for_each_replicate(
            acc.size(),
            [&](std::size_t r) {
                RandomStream rng(3, r, 0);
                double s = 0.0;
                for (int i = 0; i < 20000; ++i)
                    s += rng.normal();
                acc[r] = s;
            },
            exec);
        benchmark::DoNotOptimize(acc.data());
    }
}

}  // namespace

BENCHMARK(BM_argmax<storm_argmax_serial>)->Name("argmax/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_argmax<storm_argmax_parallel>)->Name("argmax/parallel")->Arg(16)->Arg(32);
BENCHMARK(BM_argmin<weighted_argmin_serial>)->Name("weighted_argmin/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_argmin<weighted_argmin_parallel>)->Name("weighted_argmin/parallel")->Arg(16)->Arg(32);
BENCHMARK(BM_replicates)->Name("replicates/serial")->Arg(0);
BENCHMARK(BM_replicates)->Name("replicates/parallel")->Arg(1);

BENCHMARK_MAIN();
