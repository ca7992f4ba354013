// Serial vs OpenMP batch kernel jets over one space grid.

#include <benchmark/benchmark.h>

#include "heatlab/kernels.hpp"
#include "heatlab/manifolds.hpp"

namespace {

using heatlab::Manifold;

const Manifold& manifold_for(int which) {
    static const Manifold flat = Manifold::flat_torus({6.2832, 6.2832});
    static const Manifold sphere = Manifold::sphere2(1.0);
    static const Manifold rev = heatlab::parse_manifold_spec("revtorus:R=2,a=1");
    return which == 0 ? flat : which == 1 ? sphere : rev;
}

template <bool Parallel>
void jets(benchmark::State& state) {
    const Manifold& m = manifold_for(static_cast<int>(state.range(0)));
    const auto grid = heatlab::make_space_grid(m, static_cast<int>(state.range(1)));
    const heatlab::Point y = grid.points.front();
    heatlab::kernel_value(m, y, 0.3, y);  // builds the lazy spectral model outside the timing loop
    for (auto _ : state) {
        auto out = Parallel ? heatlab::kernel_jets_parallel(m, grid.points, 0.3, y)
                            : heatlab::kernel_jets_serial(m, grid.points, 0.3, y);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(grid.points.size()));
    state.SetLabel(m.spec());
}

// range(0): 0 flat torus, 1 sphere, 2 torus of revolution; range(1): resolution
void args(benchmark::internal::Benchmark* b) {
    for (int which : {0, 1, 2}) b->Args({which, 64});
    b->Args({0, 128});
    b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(jets<false>)->Name("kernel_jets_serial")->Apply(args);
BENCHMARK(jets<true>)->Name("kernel_jets_parallel")->Apply(args);

BENCHMARK_MAIN();
