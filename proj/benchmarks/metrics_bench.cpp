#include <benchmark/benchmark.h>

#include "bench_data.hpp"
#include "zsclust/metrics.hpp"

using namespace zsclust;

static void BM_Ami(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    const auto u = bench::partition(n, k, 1), v = bench::partition(n, k, 2);
    for (auto _ : state) benchmark::DoNotOptimize(ami(u, v));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Ami)->Args({1000, 10})->Args({10000, 100})->Args({50000, 1000})->Unit(benchmark::kMillisecond);

static void BM_Emi(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto k = static_cast<std::size_t>(state.range(1));
    std::vector<std::int64_t> margins(k, static_cast<std::int64_t>(n / k));
    for (auto _ : state) {
        benchmark::DoNotOptimize(expected_mutual_information(margins, margins, static_cast<std::int64_t>(n)));
    }
}
BENCHMARK(BM_Emi)->Args({1000, 10})->Args({10000, 100})->Unit(benchmark::kMillisecond);

static void BM_Silhouette(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = bench::blobs(n, 50, 10);
    const auto a = ClusterAssignment::from_labels(bench::partition(n, 10, 3));
    for (auto _ : state) benchmark::DoNotOptimize(silhouette(x, a));
}
BENCHMARK(BM_Silhouette)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
