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


#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "support/fixtures.h"
#include "vexg/bench.h"
#include "vexg/persistence.h"

using namespace vexg;
using nlohmann::json;

namespace {

std::vector<NodeId>
brute_force(const RawVectors& data, std::span<const float> q, std::size_t k, bool inner) {
    std::vector<std::pair<double, NodeId>> scored;
    for (std::size_t i = 0; i < data.count; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < data.dim; ++j) {
            acc += inner ? -static_cast<double>(q[j]) * data.row(i)[j]
                         : (static_cast<double>(q[j]) - data.row(i)[j]) * (static_cast<double>(q[j]) - data.row(i)[j]);
        }
        scored.emplace_back(acc, static_cast<NodeId>(i));
    }
    std::sort(scored.begin(), scored.end());
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(scored[i].second);
    }
    return out;
}

struct Small {
    RawVectors raw = vexg::testing::uniform_vectors(1500, 12, 31);
    VectorDataset data = build_dataset(raw, Metric::SquaredL2);
    QuerySet queries = build_queries(vexg::testing::uniform_vectors(60, 12, 32), Metric::SquaredL2);
    GroundTruth truth = compute_groundtruth(data, queries, 10);

    static BuildOptions
    options(ReorderKind reorder = ReorderKind::None) {
        BuildOptions o;
        o.params.M = 16;
        o.params.K = 16;
        o.params.L_build = 48;
        o.reorder = reorder;
        return o;
    }
};

const Small&
small() {
    static const Small s;
    return s;
}

}  // namespace

TEST(GroundTruth, MatchesBruteForce) {
    for (const Metric metric : {Metric::SquaredL2, Metric::NegativeInnerProduct}) {
        const auto raw = vexg::testing::gaussian_vectors(400, 9, 33);
        const auto qraw = vexg::testing::gaussian_vectors(25, 9, 34);
        const auto data = build_dataset(raw, metric);
        const auto queries = build_queries(qraw, metric);
        const auto gt = compute_groundtruth(data, queries, 7, 1);
        ASSERT_EQ(gt.query_count, 25u);
        for (std::size_t q = 0; q < 25; ++q) {
            EXPECT_EQ(std::vector<NodeId>(gt.row(q).begin(), gt.row(q).end()),
                      brute_force(raw, qraw.row(q), 7, metric == Metric::NegativeInnerProduct));
        }
        EXPECT_EQ(compute_groundtruth(data, queries, 7, 3).ids, gt.ids);
    }
}

TEST(GroundTruth, TiesBreakByLowerId) {
    const auto data = vexg::testing::line_points({5, 1, 5, 1, 9});
    const auto queries = build_queries(RawVectors{1, 1, {1.0f}}, Metric::SquaredL2);
    const auto gt = compute_groundtruth(data, queries, 4);
    EXPECT_EQ(gt.ids, (std::vector<NodeId>{1, 3, 0, 2}));
    EXPECT_THROW(compute_groundtruth(data, queries, 6), UsageError);
    EXPECT_THROW(compute_groundtruth(data, queries, 0), UsageError);
}

TEST(GroundTruth, IvecsRoundtrip) {
    GroundTruth gt{2, 3, {4, 5, 6, 7, 8, 9}};
    const auto raw = groundtruth_to_ivecs(gt);
    EXPECT_EQ(raw.count, 2u);
    EXPECT_EQ(raw.dim, 3u);
    const auto back = groundtruth_from_ivecs(raw);
    EXPECT_EQ(back.ids, gt.ids);
    EXPECT_THROW(groundtruth_from_ivecs(RawIds{1, 2, {0, -1}}), DataError);
}

TEST(Percentile, NearestRank) {
    const std::vector<double> v = {5, 1, 3, 2, 4};
    EXPECT_EQ(percentile(v, 50), 3.0);
    EXPECT_EQ(percentile(v, 99), 5.0);
    EXPECT_EQ(percentile(v, 20), 1.0);
    EXPECT_EQ(percentile(v, 21), 2.0);
    EXPECT_EQ(percentile(v, 0), 1.0);
    EXPECT_EQ(percentile({}, 50), 0.0);
}

TEST(BuildIndex, ReorderedIndexReturnsExternalIds) {
    const auto& s = small();
    BuildReport report;
    const auto plain = build_index(s.data, Small::options());
    const auto mst = build_index(s.data, Small::options(ReorderKind::Mst), &report);
    ASSERT_TRUE(mst.permutation.has_value());
    EXPECT_FALSE(plain.permutation.has_value());
    EXPECT_TRUE(report.check.ok);
    EXPECT_GT(report.bandwidth_before, 0u);
    EXPECT_LT(report.mean_span_after, report.mean_span_before);
    EXPECT_NO_THROW((void)json::parse(report.to_json()));

    QueryOptions options;
    options.params.L = 64;
    const auto a = search_index(plain, s.queries, options);
    const auto b = search_index(mst, s.queries, options);
    EXPECT_GE(mean_recall(a, s.truth, 10), 0.9);
    EXPECT_GE(mean_recall(b, s.truth, 10), 0.9);
    // External ids address the caller's rows.
    for (std::size_t q = 0; q < s.queries.count(); ++q) {
        const NodeId id = b.row(q)[0];
        EXPECT_FLOAT_EQ(b.distances[q * 10], dist_one(s.queries.row(q), s.data.row(id), Metric::SquaredL2));
    }
    options.use_codes = true;
    EXPECT_THROW(search_index(plain, s.queries, options), UsageError);
}

TEST(BuildIndex, QuantizedIndexSearchesOnCodes) {
    const auto& s = small();
    auto opts = Small::options(ReorderKind::Mst);
    opts.quantize = QuantizeSpec::parse("sq8");
    const auto index = build_index(s.data, opts);
    ASSERT_TRUE(index.quantized.has_value());
    QueryOptions options;
    options.params.L = 64;
    options.use_codes = true;
    options.rerank = 64;
    EXPECT_GE(mean_recall(search_index(index, s.queries, options), s.truth, 10), 0.9);
}

TEST(RunBench, RowsAndFormats) {
    const auto& s = small();
    const auto index = build_index(s.data, Small::options());
    const std::size_t efs[] = {10, 20, 80};
    QueryOptions base;
    auto report = run_bench(index, s.queries, s.truth, efs, 10, base);
    report.dataset = "uniform";
    ASSERT_EQ(report.rows.size(), 3u);
    for (const auto& r : report.rows) {
        EXPECT_GE(r.p99_us, r.p50_us);
        EXPECT_GT(r.mean_distance_computations, 0.0);
    }
    EXPECT_LT(report.rows[0].mean_distance_computations, report.rows[2].mean_distance_computations);
    EXPECT_GE(report.rows[2].recall, 0.9);

    const auto j = json::parse(report.to_json());
    EXPECT_EQ(j["rows"].size(), 3u);
    EXPECT_EQ(j["environment"]["dataset"], "uniform");
    EXPECT_EQ(j["rows"][2]["efs"], 80);

    std::istringstream csv(report.to_csv());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(csv, line)) {
        ++lines;
    }
    EXPECT_EQ(lines, 4u);
    EXPECT_NE(report.to_table().find("recall"), std::string::npos);
    EXPECT_THROW(run_bench(index, s.queries, s.truth, {}, 10, base), UsageError);
}

TEST(RunAblation, RowSequence) {
    const auto& s = small();
    auto base_opts = Small::options();
    base_opts.params.F = 0;
    const auto base = build_index(s.data, base_opts);
    const auto refined = build_index(s.data, Small::options(ReorderKind::Mst));
    const std::size_t efs[] = {20, 40, 80, 160};
    const auto report = run_ablation(base, refined, s.queries, s.truth, 10, efs, 0.9, BatchSpec{}, 1);
    ASSERT_EQ(report.rows.size(), 5u);
    const std::vector<std::string> names = {"Base", "+Index", "+Early Term.", "+SIMD(batch)", "+Prefetch"};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_EQ(report.rows[i].name, names[i]);
    }
    EXPECT_EQ(report.rows[0].batch, 1u);
    EXPECT_FALSE(report.rows[0].prefetch);
    EXPECT_TRUE(report.rows[1].met_floor);
    EXPECT_LE(report.rows[2].mean_distance_computations, report.rows[1].mean_distance_computations);
    EXPECT_TRUE(report.rows[2].met_floor);
    // Batching and prefetch do not change what is computed.
    EXPECT_EQ(report.rows[3].recall, report.rows[2].recall);
    EXPECT_EQ(report.rows[4].recall, report.rows[2].recall);
    EXPECT_TRUE(report.rows[4].prefetch);
    EXPECT_EQ(json::parse(report.to_json())["rows"].size(), 5u);
}

TEST(Library, Lifecycle) {
    const auto& s = small();
    Library::Config config;
    config.dim = 12;
    config.build = Small::options(ReorderKind::Mst);
    config.efs = 64;
    Library lib(config);
    EXPECT_EQ(lib.state(), Library::State::Configured);
    EXPECT_THROW(lib.search(1, s.raw.row(0), 1, 1), UsageError);
    EXPECT_THROW(lib.add(10, std::span<const float>(s.raw.values).first(5)), UsageError);
    lib.add(s.raw.count, s.raw.values);
    EXPECT_EQ(lib.state(), Library::State::Ready);
    EXPECT_THROW(lib.add(s.raw.count, s.raw.values), UsageError);

    // Every stored vector finds itself first.
    const auto self = lib.search(50, std::span<const float>(s.raw.values).first(50 * 12), 1, 2);
    for (std::size_t q = 0; q < 50; ++q) {
        EXPECT_EQ(self.row(q)[0], q);
    }

    vexg::testing::TempDir dir;
    lib.save(dir / "lib.vexg");
    const auto loaded = Library::load(dir / "lib.vexg", config);
    EXPECT_EQ(loaded.state(), Library::State::Ready);
    const auto qraw = vexg::testing::uniform_vectors(20, 12, 35);
    EXPECT_EQ(lib.search(20, qraw.values, 10, 1).ids, loaded.search(20, qraw.values, 10, 1).ids);

    auto other = config;
    other.dim = 13;
    EXPECT_THROW(Library::load(dir / "lib.vexg", other), UsageError);
    config.dim = 0;
    EXPECT_THROW(Library{config}, UsageError);
}

TEST(ReorderNames, Parse) {
    for (const auto kind : {ReorderKind::None, ReorderKind::Mst, ReorderKind::Random, ReorderKind::Bfs}) {
        EXPECT_EQ(parse_reorder(reorder_name(kind)), kind);
    }
}

TEST(RunBench, ExhaustiveRegimeAndThroughputConsistency) {
    const auto& s = small();
    const auto index = build_index(s.data, Small::options(ReorderKind::Mst));
    const std::size_t efs[] = {s.data.count()};
    QueryOptions base;
    base.workers = 1;
    const auto report = run_bench(index, s.queries, s.truth, efs, 10, base);
    ASSERT_EQ(report.rows.size(), 1u);
    const auto& row = report.rows[0];
    EXPECT_DOUBLE_EQ(row.recall, 1.0);
    ASSERT_GT(row.qps, 0.0);
    // Single worker: wall clock and summed latencies agree within 20%.
    const double from_latency = static_cast<double>(s.queries.count()) / (row.latency_sum_us * 1e-6);
    EXPECT_NEAR(row.qps / from_latency, 1.0, 0.2);
    EXPECT_NEAR(row.qps, static_cast<double>(s.queries.count()) / row.wall_seconds, 1e-6 * row.qps);
}
