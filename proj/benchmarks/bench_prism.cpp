#include <benchmark/benchmark.h>

#include "p2pcbir/prism.hpp"

using namespace p2pcbir;

namespace {

struct Fixture {
    Collection items = synth_collection(20000, 4, 2.0, 11);
    Collection queries = synth_collection(256, 4, 2.0, 12);
    PrismIndex index{Ring::random(1 << 14, 13), choose_references(items, 32, 14)};
    Fixture() { index.insert(items); }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

}  // namespace

static void BM_PrismInsert(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) {
        PrismIndex idx(f.index.ring(), f.index.refs());
        idx.insert(f.items);
        benchmark::DoNotOptimize(idx.stored_entries());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.items.size()));
}
BENCHMARK(BM_PrismInsert)->Unit(benchmark::kMillisecond);

static void BM_PrismQuery(benchmark::State& state) {
    const auto& f = fixture();
    const auto n_pairs = static_cast<std::size_t>(state.range(0));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(f.index.query(f.queries[i].vector, n_pairs, 20));
        i = (i + 1) % f.queries.size();
    }
}
BENCHMARK(BM_PrismQuery)->Arg(1)->Arg(4)->Arg(11)->Unit(benchmark::kMicrosecond);
