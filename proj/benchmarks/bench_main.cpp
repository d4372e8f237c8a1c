#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "geoprune/geometry.hpp"
#include "geoprune/network.hpp"
#include "geoprune/pruning.hpp"
#include "geoprune/stats.hpp"
#include "geoprune/synthetic.hpp"

using namespace geoprune;

namespace {

Network glyph_net(std::size_t width) {
    NetworkSpec spec;
    spec.layer_sizes = {64, width, width, 10};
    spec.seed = 1;
    return Network::initialize(spec);
}

const LabeledDataset& glyph_data() {
    static const LabeledDataset d = synthetic::make_glyphs({.samples = 512, .classes = 10, .side = 8, .seed = 2});
    return d;
}

void BM_Forward(benchmark::State& state) {
    const Network net = glyph_net(static_cast<std::size_t>(state.range(0)));
    const auto& d = glyph_data();
    for (auto _ : state) benchmark::DoNotOptimize(forward(net, d.inputs));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_Forward)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_Backward(benchmark::State& state) {
    const Network net = glyph_net(static_cast<std::size_t>(state.range(0)));
    const auto& d = glyph_data();
    for (auto _ : state) benchmark::DoNotOptimize(backward(net, d));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_Backward)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_GeometrySnapshot(benchmark::State& state) {
    const Network net = glyph_net(256);
    const auto& d = glyph_data();
    for (auto _ : state) benchmark::DoNotOptimize(geometry_snapshot(net, d));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.size()));
}
BENCHMARK(BM_GeometrySnapshot)->Unit(benchmark::kMicrosecond);

void BM_MagnitudePrune(benchmark::State& state) {
    const Network net = glyph_net(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(prune_magnitude(net, 0.5));
}
BENCHMARK(BM_MagnitudePrune)->Arg(64)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_Pearson(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    std::vector<double> x(static_cast<std::size_t>(state.range(0))), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 0.3 * (x[i] = n(rng)) + n(rng);
    for (auto _ : state) benchmark::DoNotOptimize(pearson(x, y));
}
BENCHMARK(BM_Pearson)->Arg(10000)->Arg(1000000);

}  // namespace

BENCHMARK_MAIN();
