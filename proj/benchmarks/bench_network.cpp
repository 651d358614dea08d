#include <benchmark/benchmark.h>

#include "p2pcbir/graph.hpp"
#include "p2pcbir/percolation.hpp"

using namespace p2pcbir;

static void BM_GenerateNetwork(benchmark::State& state) {
    const auto params = PowerLawParams::for_size(static_cast<std::uint32_t>(state.range(0)));
    std::uint64_t seed = 1;
    for (auto _ : state) benchmark::DoNotOptimize(generate_power_law_network(params, seed++));
}
BENCHMARK(BM_GenerateNetwork)->Arg(1 << 14)->Arg(1 << 17)->Unit(benchmark::kMillisecond);

static void BM_PercolateQuery(benchmark::State& state) {
    const auto net = generate_power_law_network(PowerLawParams::for_size(1 << 17), 7);
    const double q = static_cast<double>(state.range(0)) / 1000.0;
    std::uint64_t seed = 1;
    NodeId start = 0;
    while (net.degree(start) == 0) ++start;
    for (auto _ : state) benchmark::DoNotOptimize(percolate_query(net, start, 17, q, seed++));
}
BENCHMARK(BM_PercolateQuery)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);
