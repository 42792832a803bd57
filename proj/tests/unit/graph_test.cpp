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
#include <cmath>
#include <random>
#include <set>

#include "support/fixtures.h"
#include "vexg/graph.h"

using namespace vexg;
using vexg::testing::graph_from_rows;
using vexg::testing::line_points;

namespace {

double
sq_l2(const VectorDataset& ds, std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        const double d = static_cast<double>(ds.row(a)[j]) - ds.row(b)[j];
        acc += d * d;
    }
    return acc;
}

std::vector<Neighbor>
sorted_pool(const VectorDataset& ds, NodeId node, std::span<const NodeId> ids) {
    std::vector<Neighbor> pool;
    for (const NodeId id : ids) {
        pool.push_back(Neighbor{id, static_cast<float>(sq_l2(ds, node, id))});
    }
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<NodeId>
ids_of(std::span<const Neighbor> list) {
    std::vector<NodeId> out;
    for (const auto& nb : list) {
        out.push_back(nb.id);
    }
    return out;
}

}  // namespace

TEST(ProximityGraph, RowsArePadded) {
    ProximityGraph g(3, 4, Metric::SquaredL2);
    const NodeId row[] = {2, 1};
    g.set_row(0, row);
    EXPECT_EQ(g.degree(0), 2u);
    EXPECT_EQ(g.row(0)[2], kSentinel);
    EXPECT_EQ(g.row(0)[3], kSentinel);
    EXPECT_EQ(g.edge_count(), 2u);
    const NodeId too_long[] = {0, 1, 2, 0, 1};
    EXPECT_THROW(g.set_row(1, too_long), UsageError);
    EXPECT_THROW(g.set_entry(3), DataError);
    EXPECT_THROW(ProximityGraph::from_adjacency(3, 4, 0, Metric::SquaredL2, std::vector<NodeId>(11)), DataError);
}

TEST(KnnGraph, LineExample) {
    const auto ds = line_points({0, 1, 2, 3, 4});
    const auto knn = build_knn_graph(ds, 2, 1);
    EXPECT_EQ(ids_of(knn.row(2)), (std::vector<NodeId>{1, 3}));
    EXPECT_EQ(knn.row(2)[0].distance, 1.0f);
}

TEST(KnnGraph, CompleteWhenNIsKPlusOne) {
    const auto ds = build_dataset(vexg::testing::uniform_vectors(9, 3, 2), Metric::SquaredL2);
    const auto knn = build_knn_graph(ds, 8, 1);
    for (std::size_t i = 0; i < 9; ++i) {
        std::set<NodeId> ids;
        for (const auto& nb : knn.row(i)) {
            ids.insert(nb.id);
        }
        EXPECT_EQ(ids.size(), 8u);
        EXPECT_FALSE(ids.contains(static_cast<NodeId>(i)));
    }
    EXPECT_THROW(build_knn_graph(ds, 9, 1), UsageError);
}

TEST(KnnGraph, DescentRecallAgainstBruteForce) {
    const std::size_t n = 10000;
    const std::size_t K = 32;
    const auto ds = build_dataset(vexg::testing::uniform_vectors(n, 16, 5), Metric::SquaredL2);
    const auto knn = build_knn_graph(ds, K, 7);
    EXPECT_GT(knn.rounds, 0u);
    std::size_t hits = 0;
    std::size_t checked = 0;
    std::vector<std::pair<double, NodeId>> all(n);
    for (std::size_t i = 0; i < n; i += 10) {
        for (std::size_t j = 0; j < n; ++j) {
            all[j] = {j == i ? INFINITY : sq_l2(ds, i, j), static_cast<NodeId>(j)};
        }
        std::partial_sort(all.begin(), all.begin() + K, all.end());
        std::set<NodeId> truth;
        for (std::size_t j = 0; j < K; ++j) {
            truth.insert(all[j].second);
        }
        const auto row = knn.row(i);
        for (std::size_t j = 0; j < K; ++j) {
            hits += truth.contains(row[j].id) ? 1 : 0;
            if (j > 0) {
                EXPECT_FALSE(row[j] < row[j - 1]);
            }
        }
        checked += K;
    }
    EXPECT_GE(static_cast<double>(hits) / checked, 0.90);
}

TEST(SelectEdges, CollinearHandExamples) {
    const auto ds = line_points({0, 1, 2});
    // Metric distances 1 and 2; stored squared.
    const std::vector<Neighbor> pool{{1, 1.0f}, {2, 4.0f}};
    EXPECT_EQ(ids_of(select_edges(0, pool, EdgeStrategy::distance_prune(1.0), 8, ds)), (std::vector<NodeId>{1}));
    EXPECT_EQ(ids_of(select_edges(0, pool, EdgeStrategy::distance_prune(2.0), 8, ds)),
              (std::vector<NodeId>{1, 2}));
    EXPECT_EQ(ids_of(select_edges(0, std::span(pool).first(1), EdgeStrategy::distance_prune(1.0), 8, ds)),
              (std::vector<NodeId>{1}));
    EXPECT_TRUE(select_edges(0, {}, EdgeStrategy{}, 8, ds).empty());
}

TEST(SelectEdges, InnerProductUsesRawAlpha) {
    const auto ds = line_points({1, 2, 3}, Metric::NegativeInnerProduct);
    // d(0,c) = -x0*xc; candidate order by distance to node 0.
    const std::vector<Neighbor> pool{{2, -3.0f}, {1, -2.0f}};
    // u=2, c=1: d(2,1) = -6; alpha * -6 < -2 prunes.
    EXPECT_EQ(ids_of(select_edges(0, pool, EdgeStrategy::distance_prune(1.0), 4, ds)), (std::vector<NodeId>{2}));
}

TEST(SelectEdges, AnglePrune) {
    const auto ds = vexg::testing::plane_points({{0, 0}, {1, 0}, {1, 0.1f}, {0, 1}, {-1, 0}});
    const NodeId ids[] = {1, 2, 3, 4};
    const auto pool = sorted_pool(ds, 0, ids);
    EXPECT_EQ(ids_of(select_edges(0, pool, EdgeStrategy::angle_prune(60.0), 8, ds)),
              (std::vector<NodeId>{1, 3, 4}));
    EXPECT_EQ(ids_of(select_edges(0, pool, EdgeStrategy::angle_prune(1.0), 8, ds)),
              (std::vector<NodeId>{1, 3, 4, 2}));
    EXPECT_EQ(select_edges(0, pool, EdgeStrategy::angle_prune(1.0), 2, ds).size(), 2u);
}

TEST(SelectEdges, OrderedSubsetAndStrictRngProperty) {
    const auto ds = build_dataset(vexg::testing::uniform_vectors(200, 4, 9), Metric::SquaredL2);
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const auto node = static_cast<NodeId>(rng() % 200);
        std::vector<NodeId> ids;
        for (NodeId i = 0; i < 200; ++i) {
            if (i != node && rng() % 3 == 0) {
                ids.push_back(i);
            }
        }
        const auto pool = sorted_pool(ds, node, ids);
        const std::size_t M = 1 + rng() % 12;
        const auto kept = select_edges(node, pool, EdgeStrategy::distance_prune(1.0), M, ds);
        ASSERT_LE(kept.size(), M);
        auto cursor = pool.begin();
        for (const auto& k : kept) {
            cursor = std::find(cursor, pool.end(), k);
            ASSERT_NE(cursor, pool.end());
        }
        for (std::size_t c = 0; c < kept.size(); ++c) {
            for (std::size_t u = 0; u < c; ++u) {
                EXPECT_GE(sq_l2(ds, kept[u].id, kept[c].id), kept[c].distance * (1 - 1e-6));
            }
        }
    }
}

TEST(ChooseEntry, HandExamples) {
    EXPECT_EQ(choose_entry(vexg::testing::plane_points({{0, 0}, {1, 0}, {0, 1}, {1, 1}})), 0u);
    EXPECT_EQ(choose_entry(line_points({0, 1, 10})), 1u);
}

TEST(ChooseEntry, MatchesCentroidScan) {
    const auto ds = build_dataset(vexg::testing::gaussian_vectors(1000, 12, 4), Metric::SquaredL2);
    std::vector<double> centroid(ds.dim(), 0.0);
    for (std::size_t i = 0; i < ds.count(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            centroid[j] += ds.row(i)[j];
        }
    }
    for (auto& c : centroid) {
        c /= static_cast<double>(ds.count());
    }
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t i = 0; i < ds.count(); ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            d += (ds.row(i)[j] - centroid[j]) * (ds.row(i)[j] - centroid[j]);
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    EXPECT_EQ(choose_entry(ds), best);
}

TEST(Refine, ZeroPassesIsIdentity) {
    const auto ds = build_dataset(vexg::testing::uniform_vectors(300, 6, 1), Metric::SquaredL2);
    BuildParams params;
    params.M = 8;
    params.K = 8;
    const auto g = initial_graph(build_knn_graph(ds, 8, 1), ds, params, choose_entry(ds));
    params.F = 0;
    RefineReport report;
    EXPECT_EQ(refine(g, ds, params, &report), g);
    EXPECT_EQ(report.passes, 0u);
}

TEST(Refine, FindsTwoHopNearestNeighbor) {
    // a=0 -> b=3 -> c=1 with c nearest to a; d=-3 fills a's second slot.
    const auto ds = line_points({0, 3, 1, -3});
    const auto start = graph_from_rows(2, 0, {{1, 3}, {2}, {0}, {0}});
    BuildParams params;
    params.M = 2;
    params.K = 2;
    params.L_build = 4;
    params.F = 1;
    const auto g = refine(start, ds, params);
    const auto row = g.neighbors(0);
    EXPECT_NE(std::find(row.begin(), row.end(), NodeId{2}), row.end());
}

TEST(Refine, SplitPassesMatchSingleCall) {
    const auto ds = build_dataset(vexg::testing::uniform_vectors(400, 8, 2), Metric::SquaredL2);
    BuildParams params;
    params.M = 10;
    params.K = 10;
    params.L_build = 30;
    const auto g = initial_graph(build_knn_graph(ds, 10, 1), ds, params, choose_entry(ds));
    params.F = 2;
    const auto once = refine(g, ds, params);
    params.F = 1;
    const auto twice = refine(refine(g, ds, params), ds, params);
    EXPECT_EQ(once, twice);
}

TEST(Reachability, ConnectedGraphUnchanged) {
    const auto ds = line_points({0, 1, 2});
    auto g = graph_from_rows(2, 0, {{1}, {2}, {0}});
    const auto before = g;
    EXPECT_EQ(ensure_reachability(g, ds), 0u);
    EXPECT_EQ(g, before);
}

TEST(Reachability, TwoCliquesGetOneBridge) {
    const auto ds = line_points({0, 1, 2, 10, 11, 12});
    auto g = graph_from_rows(3, 0, {{1, 2}, {0, 2}, {0, 1}, {4, 5}, {3, 5}, {3, 4}});
    EXPECT_EQ(count_reachable(g), 3u);
    EXPECT_EQ(ensure_reachability(g, ds), 1u);
    EXPECT_EQ(count_reachable(g), 6u);
    // The bridge runs from the nearest reachable node, 2, to node 3.
    const auto row = g.neighbors(2);
    EXPECT_NE(std::find(row.begin(), row.end(), NodeId{3}), row.end());
}

TEST(Reachability, FullRowsEvictNonTreeEdges) {
    const auto ds = line_points({0, 1, 2, 10});
    auto g = graph_from_rows(2, 0, {{1, 2}, {0, 2}, {0, 1}, {2}});
    EXPECT_EQ(ensure_reachability(g, ds), 1u);
    EXPECT_EQ(count_reachable(g), 4u);
}

TEST(CheckGraph, DetectsViolations) {
    EXPECT_TRUE(check_graph(graph_from_rows(2, 0, {{1}, {0}})).ok);
    auto self = ProximityGraph::from_adjacency(2, 2, 0, Metric::SquaredL2, {0, kSentinel, 0, kSentinel});
    EXPECT_FALSE(check_graph(self).ok);
    EXPECT_THROW(validate_graph(self), InvariantError);
    auto dup = ProximityGraph::from_adjacency(3, 2, 0, Metric::SquaredL2, {1, 1, 2, 0, 0, kSentinel});
    EXPECT_FALSE(check_graph(dup).ok);
    auto range = ProximityGraph::from_adjacency(2, 2, 0, Metric::SquaredL2, {1, kSentinel, 5, kSentinel});
    EXPECT_FALSE(check_graph(range).ok);
    auto gap = ProximityGraph::from_adjacency(3, 2, 0, Metric::SquaredL2, {kSentinel, 1, 0, kSentinel, 0, kSentinel});
    EXPECT_FALSE(check_graph(gap).ok);
    auto lonely = graph_from_rows(2, 0, {{}, {0}});
    const auto c = check_graph(lonely);
    EXPECT_FALSE(c.ok);
    EXPECT_EQ(c.reachable, 1u);
}

TEST(BuildGraph, InvariantsAndDeterminism) {
    const auto ds = build_dataset(vexg::testing::uniform_vectors(1000, 10, 6), Metric::SquaredL2);
    BuildParams params;
    params.M = 16;
    params.K = 16;
    params.L_build = 40;
    const auto a = build_graph(ds, params);
    const auto check = check_graph(a);
    EXPECT_TRUE(check.ok) << check.problem;
    EXPECT_EQ(check.reachable, 1000u);
    EXPECT_LE(check.max_degree, 16u);
    EXPECT_EQ(a.entry(), choose_entry(ds));
    EXPECT_EQ(build_graph(ds, params), a);
}

TEST(BuildGraph, AnglePruneAndInnerProduct) {
    const auto ds = build_dataset(vexg::testing::gaussian_vectors(600, 8, 7), Metric::NegativeInnerProduct);
    BuildParams params;
    params.M = 12;
    params.K = 12;
    params.L_build = 30;
    params.strategy = EdgeStrategy::angle_prune(60.0);
    EXPECT_TRUE(check_graph(build_graph(ds, params)).ok);
}

TEST(BuildParams, Validation) {
    BuildParams p;
    p.K = p.M - 1;
    EXPECT_THROW(p.validate(), UsageError);
    p = BuildParams{};
    p.strategy.alpha = 0.9;
    EXPECT_THROW(p.validate(), UsageError);
    p = BuildParams{};
    p.M = 0;
    EXPECT_THROW(p.validate(), UsageError);
}
