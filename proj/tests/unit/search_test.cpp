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
#include <random>

#include "support/fixtures.h"
#include "vexg/bench.h"
#include "vexg/search.h"

using namespace vexg;
using vexg::testing::uniform_vectors;

namespace {

std::vector<NodeId>
brute_force(const VectorDataset& ds, std::span<const float> q, std::size_t k) {
    std::vector<std::pair<double, NodeId>> all;
    for (std::size_t i = 0; i < ds.count(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            const double d = static_cast<double>(q[j]) - ds.row(i)[j];
            acc += d * d;
        }
        all.emplace_back(acc, static_cast<NodeId>(i));
    }
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    std::vector<NodeId> out;
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(all[i].second);
    }
    return out;
}

SearchParams
params(std::size_t k, std::size_t L) {
    SearchParams p;
    p.k = k;
    p.L = L;
    return p;
}

struct SmallIndex {
    VectorDataset data = build_dataset(uniform_vectors(1000, 16, 21), Metric::SquaredL2);
    QuerySet queries = build_queries(uniform_vectors(100, 16, 22), Metric::SquaredL2);
    ProximityGraph graph;

    SmallIndex() {
        BuildParams p;
        p.M = 16;
        p.K = 16;
        p.L_build = 50;
        graph = build_graph(data, p);
    }
};

const SmallIndex&
small() {
    static SmallIndex s;
    return s;
}

}  // namespace

TEST(CandidateQueue, PositionsAndRejection) {
    CandidateQueue q(3);
    EXPECT_EQ(q.insert(10, 5.0f), 1u);
    EXPECT_EQ(q.insert(11, 3.0f), 1u);
    EXPECT_EQ(q.insert(12, 5.0f), 3u);  // after the equal incumbent
    EXPECT_EQ(q.insert(13, 9.0f), 4u);  // full, ranks past the end
    EXPECT_EQ(q.insert(14, 4.0f), 2u);  // evicts 12
    ASSERT_EQ(q.size(), 3u);
    EXPECT_EQ(q.entries()[2].id, 10u);
    EXPECT_EQ(q.insert(15, 5.0f), 4u);  // ties with the last entry are rejected
}

TEST(CandidateQueue, PopsNearestUnvisited) {
    CandidateQueue q(4);
    q.insert(1, 2.0f);
    q.insert(2, 1.0f);
    EXPECT_EQ(q.peek_nearest_unvisited(), 2u);
    EXPECT_EQ(q.pop_nearest_unvisited(), 2u);
    EXPECT_EQ(q.pop_nearest_unvisited(), 1u);
    EXPECT_FALSE(q.pop_nearest_unvisited().has_value());
    q.insert(3, 0.5f);
    EXPECT_EQ(q.pop_nearest_unvisited(), 3u);
    q.reset(2);
    EXPECT_EQ(q.size(), 0u);
    EXPECT_EQ(q.capacity(), 2u);
}

TEST(EarlyTermination, TruthTable) {
    const std::uint32_t a[] = {7, 8, 9};
    const std::uint32_t b[] = {7, 2, 9};
    const std::uint32_t c[] = {1, 1, 7};
    EXPECT_TRUE(early_term_check(a, 6, 3));
    EXPECT_FALSE(early_term_check(b, 6, 3));
    EXPECT_TRUE(early_term_check(c, 6, 1));
    EXPECT_FALSE(early_term_check(c, 7, 1));
    EXPECT_FALSE(early_term_check(std::span(a).first(2), 6, 3));
}

TEST(EarlyTermination, TrackerAgreesWithCheck) {
    std::mt19937 rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t t = 1 + rng() % 10;
        const std::size_t tau = 1 + rng() % 5;
        EarlyTermTracker tracker({t, tau});
        std::vector<std::uint32_t> seen;
        for (int i = 0; i < 40; ++i) {
            seen.push_back(1 + rng() % 15);
            const bool fired = tracker.observe(seen.back());
            ASSERT_EQ(fired, early_term_check(seen, t, tau));
            if (fired) {
                break;
            }
        }
    }
}

TEST(SearchParams, Validation) {
    EXPECT_THROW(params(11, 10).validate(), UsageError);
    EXPECT_THROW(params(0, 10).validate(), UsageError);
    auto p = params(5, 10);
    p.early_term = EarlyTermination{10, 1};
    EXPECT_THROW(p.validate(), UsageError);
    p.early_term = EarlyTermination{3, 0};
    EXPECT_THROW(p.validate(), UsageError);
    p.early_term = EarlyTermination{9, 1};
    EXPECT_NO_THROW(p.validate());
}

TEST(Search, ExhaustiveQueueMatchesBruteForce) {
    const auto& s = small();
    SearchContext ctx;
    for (std::size_t q = 0; q < s.queries.count(); ++q) {
        const auto r = search(s.graph, s.data, s.queries.row(q), params(10, s.data.count()), ctx);
        EXPECT_EQ(r.ids, brute_force(s.data, s.queries.row(q), 10)) << "query " << q;
        EXPECT_TRUE(std::is_sorted(r.distances.begin(), r.distances.end()));
    }
}

TEST(Search, DatabaseVectorFindsItself) {
    const auto& s = small();
    const auto r = search(s.graph, s.data, s.data.row(123), params(1, 20));
    ASSERT_EQ(r.ids.size(), 1u);
    EXPECT_EQ(r.ids[0], 123u);
    EXPECT_EQ(r.distances[0], 0.0f);
}

TEST(Search, KLargerThanNodeCountIsTruncated) {
    const auto ds = vexg::testing::line_points({0, 1, 2});
    const auto g = vexg::testing::graph_from_rows(2, 0, {{1}, {2}, {0}});
    const auto r = search(g, ds, ds.row(0), params(5, 5));
    EXPECT_EQ(r.ids, (std::vector<NodeId>{0, 1, 2}));
    EXPECT_TRUE(r.stats.truncated);
}

TEST(Search, BatchWidthDoesNotChangeResults) {
    const auto& s = small();
    for (std::size_t q = 0; q < 30; ++q) {
        auto p = params(10, 60);
        p.batch = 1;
        p.prefetch = nullptr;
        const auto scalar = search(s.graph, s.data, s.queries.row(q), p);
        for (const std::size_t b : {2u, 3u, 8u, 16u, 0u}) {
            p.batch = b;
            p.prefetch = b % 2 == 0 ? prefetch_lines : nullptr;
            const auto batched = search(s.graph, s.data, s.queries.row(q), p);
            EXPECT_EQ(batched.ids, scalar.ids);
            EXPECT_EQ(batched.distances, scalar.distances);
            EXPECT_EQ(batched.stats.distance_computations, scalar.stats.distance_computations);
            EXPECT_EQ(batched.stats.hops, scalar.stats.hops);
        }
    }
}

TEST(Search, ResolvedBatchFollowsCacheBudget) {
    auto p = params(10, 60);
    EXPECT_EQ(p.resolved_batch(128, 1000), 64u);
    EXPECT_EQ(p.resolved_batch(128, 32), 32u);
    p.batch = 5;
    EXPECT_EQ(p.resolved_batch(128, 32), 5u);
}

TEST(Search, EarlyTerminationOnlySavesWork) {
    const auto& s = small();
    for (std::size_t q = 0; q < 50; ++q) {
        auto p = params(10, 80);
        p.record_insert_positions = true;
        const auto full = search(s.graph, s.data, s.queries.row(q), p);
        EXPECT_EQ(full.stats.insert_positions.size(), full.stats.insert_attempts);
        EXPECT_FALSE(full.stats.terminated_early);

        p.early_term = EarlyTermination{30, 5};
        const auto cut = search(s.graph, s.data, s.queries.row(q), p);
        EXPECT_LE(cut.stats.distance_computations, full.stats.distance_computations);
        if (!cut.stats.terminated_early) {
            EXPECT_EQ(cut.ids, full.ids);
        }
        // A patience longer than any run never fires.
        p.early_term = EarlyTermination{79, 1000000};
        const auto idle = search(s.graph, s.data, s.queries.row(q), p);
        EXPECT_EQ(idle.ids, full.ids);
        EXPECT_EQ(idle.stats.distance_computations, full.stats.distance_computations);
    }
}

TEST(Search, RecordedPositionsDriveTermination) {
    const auto& s = small();
    auto p = params(10, 40);
    p.record_insert_positions = true;
    p.early_term = EarlyTermination{20, 4};
    const auto r = search(s.graph, s.data, s.queries.row(0), p);
    ASSERT_TRUE(r.stats.terminated_early);
    EXPECT_TRUE(early_term_check(r.stats.insert_positions, 20, 4));
    const auto& pos = r.stats.insert_positions;
    for (const auto v : pos) {
        EXPECT_GE(v, 1u);
        EXPECT_LE(v, 41u);
    }
}

TEST(Search, TargetHopIsRecorded) {
    const auto& s = small();
    auto p = params(10, 50);
    p.target = s.graph.entry();
    EXPECT_EQ(search(s.graph, s.data, s.queries.row(0), p).stats.target_hop, 0);
    p.target = brute_force(s.data, s.queries.row(0), 1)[0];
    EXPECT_GE(search(s.graph, s.data, s.queries.row(0), p).stats.target_hop, 0);
}

TEST(BatchSearch, WorkerCountDoesNotChangeResults) {
    const auto& s = small();
    const auto one = batch_search(s.graph, s.data, s.queries, params(10, 50), 1);
    const auto many = batch_search(s.graph, s.data, s.queries, params(10, 50), 8);
    EXPECT_EQ(one.ids, many.ids);
    EXPECT_EQ(one.distances, many.distances);
    for (std::size_t q = 0; q < one.query_count; ++q) {
        EXPECT_EQ(one.stats[q].distance_computations, many.stats[q].distance_computations);
    }
    EXPECT_GT(one.qps(), 0.0);
    EXPECT_EQ(one.latency_us.size(), s.queries.count());
}

TEST(BatchSearch, EmptyQuerySet) {
    const auto& s = small();
    const QuerySet none = build_queries(RawVectors{0, 16, {}}, Metric::SquaredL2);
    const auto r = batch_search(s.graph, s.data, none, params(10, 50), 4);
    EXPECT_EQ(r.query_count, 0u);
    EXPECT_TRUE(r.ids.empty());
    EXPECT_EQ(r.qps(), 0.0);
    EXPECT_EQ(r.mean_distance_computations(), 0.0);
}

TEST(Recall, HandValues) {
    const std::vector<NodeId> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<NodeId> b{11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
    EXPECT_EQ(recall_at_k(a, a, 10), 1.0);
    EXPECT_EQ(recall_at_k(a, b, 10), 0.0);
    const std::vector<NodeId> half{1, 12, 3, 14, 5, 16, 7, 18, 9, 20};
    EXPECT_EQ(recall_at_k(half, a, 10), 0.5);
    std::vector<NodeId> shuffled = a;
    std::reverse(shuffled.begin(), shuffled.end());
    EXPECT_EQ(recall_at_k(shuffled, a, 10), 1.0);
}

TEST(Recall, MeanUsesExternalIds) {
    BatchResult r;
    r.query_count = 1;
    r.k = 2;
    r.ids = {0, 1};
    GroundTruth truth{1, 2, {5, 6}};
    EXPECT_EQ(mean_recall(r, truth, 2), 0.0);
    const NodeId external[] = {6, 5};
    EXPECT_EQ(mean_recall(r, truth, 2, external), 1.0);
}

TEST(Tune, ZeroFloorPicksCheapestSetting) {
    const auto& s = small();
    const auto truth = compute_groundtruth(s.data, s.queries, 10);
    const auto result = tune_early_term(s.graph, s.data, s.queries, truth, 0.0, params(10, 60));
    ASSERT_TRUE(result.config.has_value());
    EXPECT_EQ(result.config->t, 18u);
    EXPECT_EQ(result.config->tau_max, 1u);
    EXPECT_EQ(result.trials.size(), 4u);
    EXPECT_LE(result.mean_distance_computations, result.baseline_mean_distance_computations);
}

TEST(Tune, PerfectFloorOnEasyInstance) {
    const auto data = build_dataset(uniform_vectors(1000, 4, 31), Metric::SquaredL2);
    const auto queries = build_queries(uniform_vectors(50, 4, 32), Metric::SquaredL2);
    BuildParams bp;
    bp.M = 16;
    bp.K = 16;
    const auto graph = build_graph(data, bp);
    const auto truth = compute_groundtruth(data, queries, 10);
    const auto result = tune_early_term(graph, data, queries, truth, 1.0, params(10, 100));
    ASSERT_EQ(result.baseline_recall, 1.0);
    ASSERT_TRUE(result.config.has_value());
    EXPECT_EQ(result.recall, 1.0);
    EXPECT_LE(result.config->tau_max, 100u);
}

TEST(Tune, UnreachableFloorGivesNothing) {
    const auto& s = small();
    const auto truth = compute_groundtruth(s.data, s.queries, 10);
    auto p = params(10, 10);
    const auto result = tune_early_term(s.graph, s.data, s.queries, truth, 1.01, p);
    EXPECT_FALSE(result.config.has_value());
    EXPECT_TRUE(result.trials.empty());
}

TEST(Search, RecallAtDefaultBuildOnTenThousandPoints) {
    const auto data = build_dataset(uniform_vectors(10000, 64, 41), Metric::SquaredL2);
    const auto queries = build_queries(uniform_vectors(100, 64, 42), Metric::SquaredL2);
    const auto graph = build_graph(data, BuildParams{});
    const auto truth = compute_groundtruth(data, queries, 10);
    const auto r = batch_search(graph, data, queries, params(10, 100), 1);
    EXPECT_GE(mean_recall(r, truth, 10), 0.95);
}
