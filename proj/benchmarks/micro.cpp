// Copyright 2026 the vexg authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <random>

#include "vexg/bench.h"
#include "vexg/distance.h"
#include "vexg/quantization.h"

namespace {

using namespace vexg;

RawVectors
uniform(std::size_t n, std::size_t dim, std::uint64_t seed) {
    RawVectors raw{n, dim, std::vector<float>(n * dim)};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : raw.values) {
        v = u(rng);
    }
    return raw;
}

struct Fixture {
    VectorDataset data;
    QuerySet queries;
    Index index;
    std::vector<NodeId> ids;

    Fixture() {
        data = build_dataset(uniform(10000, 64, 1), Metric::SquaredL2);
        queries = build_queries(uniform(200, 64, 2), Metric::SquaredL2);
        BuildOptions options;
        options.params.M = 32;
        options.params.K = 32;
        options.params.L_build = 64;
        options.reorder = ReorderKind::Mst;
        options.quantize = QuantizeSpec::parse("sq8");
        index = build_index(data, options);
        std::mt19937 rng(3);
        ids.resize(256);
        for (auto& id : ids) {
            id = static_cast<NodeId>(rng() % data.count());
        }
    }
};

const Fixture&
fixture() {
    static const Fixture f;
    return f;
}

void
BM_DistOne(benchmark::State& state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    const auto raw = uniform(2, dim, 4);
    const auto ds = build_dataset(raw, Metric::SquaredL2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(dist_one(ds.row(0), ds.row(1), Metric::SquaredL2));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_DistOne)->Arg(16)->Arg(64)->Arg(128)->Arg(960);

void
BM_DistBatch(benchmark::State& state) {
    const auto& f = fixture();
    const auto batch = static_cast<std::size_t>(state.range(0));
    std::vector<float> out(batch);
    const std::span<const NodeId> ids(f.ids.data(), batch);
    for (auto _ : state) {
        detail::distance_batch(f.queries.row(0).data(), f.data.data().data(), f.data.padded_dim(), ids,
                               Metric::SquaredL2, out.data());
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}
BENCHMARK(BM_DistBatch)->Arg(1)->Arg(8)->Arg(32)->Arg(128);

void
BM_Search(benchmark::State& state) {
    const auto& f = fixture();
    SearchParams params;
    params.L = static_cast<std::size_t>(state.range(0));
    params.batch = static_cast<std::size_t>(state.range(1));
    SearchContext context(f.data.count());
    std::size_t q = 0;
    std::uint64_t dc = 0;
    for (auto _ : state) {
        auto r = search(f.index.graph, f.index.data, f.queries.row(q), params, context);
        dc += r.stats.distance_computations;
        benchmark::DoNotOptimize(r.ids.data());
        q = (q + 1) % f.queries.count();
    }
    state.counters["dist_comp"] = benchmark::Counter(static_cast<double>(dc), benchmark::Counter::kAvgIterations);
}
BENCHMARK(BM_Search)->Args({50, 1})->Args({50, 0})->Args({100, 1})->Args({100, 0})->Args({200, 0});

void
BM_SearchEarlyTerm(benchmark::State& state) {
    const auto& f = fixture();
    SearchParams params;
    params.L = 200;
    params.early_term = EarlyTermination{100, static_cast<std::size_t>(state.range(0))};
    SearchContext context(f.data.count());
    std::size_t q = 0;
    for (auto _ : state) {
        auto r = search(f.index.graph, f.index.data, f.queries.row(q), params, context);
        benchmark::DoNotOptimize(r.ids.data());
        q = (q + 1) % f.queries.count();
    }
}
BENCHMARK(BM_SearchEarlyTerm)->Arg(50)->Arg(170);

void
BM_AdcSearch(benchmark::State& state) {
    const auto& f = fixture();
    SearchParams params;
    params.L = 100;
    SearchContext context(f.data.count());
    std::size_t q = 0;
    for (auto _ : state) {
        auto r = adc_search(f.index.graph, f.index.data, *f.index.quantized, f.queries.row(q), params,
                            static_cast<std::size_t>(state.range(0)), context);
        benchmark::DoNotOptimize(r.ids.data());
        q = (q + 1) % f.queries.count();
    }
}
BENCHMARK(BM_AdcSearch)->Arg(0)->Arg(100);

void
BM_BuildGraph(benchmark::State& state) {
    const auto ds = build_dataset(uniform(static_cast<std::size_t>(state.range(0)), 32, 5), Metric::SquaredL2);
    BuildParams params;
    params.M = 16;
    params.K = 16;
    params.L_build = 48;
    for (auto _ : state) {
        auto g = build_graph(ds, params);
        benchmark::DoNotOptimize(g.adjacency().data());
    }
}
BENCHMARK(BM_BuildGraph)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
