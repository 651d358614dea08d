#include <benchmark/benchmark.h>

#include "p2pcbir/cbir.hpp"

using namespace p2pcbir;

static void BM_Distance(benchmark::State& state) {
    const auto coll = synth_collection(2, 4, 2.0, 1);
    const auto metric = state.range(0) == 0 ? Metric::euclidean : Metric::histogram_intersection;
    for (auto _ : state) benchmark::DoNotOptimize(distance(coll[0].vector, coll[1].vector, metric));
}
BENCHMARK(BM_Distance)->Arg(0)->Arg(1);

static void BM_KnnFullScan(benchmark::State& state) {
    const auto coll = synth_collection(static_cast<std::size_t>(state.range(0)), 4, 2.0, 2);
    const auto query = synth_collection(1, 4, 2.0, 3)[0].vector;
    for (auto _ : state) benchmark::DoNotOptimize(knn_full_scan(query, coll, 20, Metric::euclidean));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnFullScan)->Arg(1000)->Arg(100000);
