#include <benchmark/benchmark.h>

#include <vector>

#include "nonconv/rng.hpp"

#include "nonconv/cumulants.hpp"
#include "nonconv/martingale.hpp"
#include "nonconv/montecarlo.hpp"
#include "nonconv/presets.hpp"

using namespace nonconv;

static void BM_NonconvSum(benchmark::State& state) {
    const auto model = presets::two_state_chain();
    const auto cf = decompose(Observable::indicator_product(2, 0.5), MarginalLaw::of(model));
    const auto fam = IndexFamily::linear(2);
    const auto N = static_cast<std::uint64_t>(state.range(0));
    std::uint64_t key = 0;
    for (auto _ : state) benchmark::DoNotOptimize(nonconv_sum(model, cf, fam, N, key++));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NonconvSum)->RangeMultiplier(4)->Range(64, 16384);

static void BM_ReplicateSums(benchmark::State& state) {
    auto e = presets::iid_product({1024}, 2000, 1);
    e.workers = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(replicate_sums(e, 1024));
}
BENCHMARK(BM_ReplicateSums)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

static void BM_SampleCumulants(benchmark::State& state) {
    CounterStream rng(3);
    std::vector<double> xs(static_cast<std::size_t>(state.range(0)));
    for (auto& x : xs) x = rng.uniform();
    for (auto _ : state) benchmark::DoNotOptimize(sample_cumulants(xs, 4));
}
BENCHMARK(BM_SampleCumulants)->Range(1 << 10, 1 << 18);

static void BM_MomentsToCumulants(benchmark::State& state) {
    std::vector<double> g(static_cast<std::size_t>(state.range(0)), 0.5);
    const auto m = cumulants_to_moments(g);
    for (auto _ : state) benchmark::DoNotOptimize(moments_to_cumulants(m));
}
BENCHMARK(BM_MomentsToCumulants)->DenseRange(4, 16, 4);

static void BM_MartingaleEvaluate(benchmark::State& state) {
    const auto model = presets::two_state_chain();
    const auto cf = decompose(Observable::indicator_product(2, 0.5), MarginalLaw::of(model));
    const auto N = static_cast<std::uint64_t>(state.range(0));
    const auto d = build_decomposition(model, cf, IndexFamily::linear(2), N);
    const auto path = martingale_path(d, 7);
    for (auto _ : state) benchmark::DoNotOptimize(d.evaluate(path));
}
BENCHMARK(BM_MartingaleEvaluate)->Arg(8)->Arg(64)->Unit(benchmark::kMicrosecond);

static void BM_PhiCoefficient(benchmark::State& state) {
    const auto model = presets::two_state_chain();
    for (auto _ : state) benchmark::DoNotOptimize(phi_coefficient(model, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_PhiCoefficient)->Arg(1)->Arg(64);

BENCHMARK_MAIN();
