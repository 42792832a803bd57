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


#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vexg/common.h"
#include "vexg/dataset.h"

namespace vexg {

struct Neighbor {
    NodeId id = kSentinel;
    float distance = 0.0f;

    friend bool
    operator<(const Neighbor& a, const Neighbor& b) noexcept {
        return a.distance < b.distance || (a.distance == b.distance && a.id < b.id);
    }
    friend bool
    operator==(const Neighbor& a, const Neighbor& b) noexcept = default;
};

/// Fixed out-degree adjacency in CSR form. Each row stores its real
/// neighbors first and is padded with kSentinel up to out_degree.
class ProximityGraph {
public:
    ProximityGraph() = default;
    ProximityGraph(std::size_t node_count, std::size_t out_degree, Metric metric);

    /// Adopts an adjacency buffer as-is. Throws DataError on size mismatch;
    /// row contents are checked separately by validate_graph.
    static ProximityGraph
    from_adjacency(std::size_t node_count,
                   std::size_t out_degree,
                   NodeId entry,
                   Metric metric,
                   std::vector<NodeId> adjacency);

    std::size_t
    node_count() const noexcept {
        return node_count_;
    }
    std::size_t
    out_degree() const noexcept {
        return out_degree_;
    }
    NodeId
    entry() const noexcept {
        return entry_;
    }
    void
    set_entry(NodeId entry);
    Metric
    metric() const noexcept {
        return metric_;
    }

    /// All out_degree slots of row i, sentinels included.
    std::span<const NodeId>
    row(std::size_t i) const noexcept {
        return {adjacency_.data() + i * out_degree_, out_degree_};
    }

    /// Real neighbors of i (the sentinel-free prefix).
    std::span<const NodeId>
    neighbors(std::size_t i) const noexcept;

    std::size_t
    degree(std::size_t i) const noexcept {
        return neighbors(i).size();
    }

    /// Replaces row i; pads with sentinels. Throws UsageError if ids.size() > out_degree.
    void
    set_row(std::size_t i, std::span<const NodeId> ids);

    std::span<const NodeId>
    adjacency() const noexcept {
        return {adjacency_.data(), adjacency_.size()};
    }

    std::size_t
    edge_count() const noexcept;

    friend bool
    operator==(const ProximityGraph& a, const ProximityGraph& b) noexcept;

private:
    std::size_t node_count_ = 0;
    std::size_t out_degree_ = 0;
    NodeId entry_ = 0;
    Metric metric_ = Metric::SquaredL2;
    AlignedVector<NodeId> adjacency_;
};

/// Edge selection rule applied to a node's sorted candidate pool.
struct EdgeStrategy {
    enum class Kind : std::uint8_t { DistancePrune, AnglePrune };

    Kind kind = Kind::DistancePrune;
    /// DistancePrune: c is dropped when some kept u has alpha * d(u, c) < d(node, c),
    /// with d the metric distance (not squared). Must be >= 1.
    double alpha = 1.0;
    /// AnglePrune: c is kept only if the angle at node between c and every
    /// kept u is at least this many degrees.
    double angle_degrees = 60.0;

    static EdgeStrategy
    distance_prune(double alpha) {
        return {Kind::DistancePrune, alpha, 60.0};
    }
    static EdgeStrategy
    angle_prune(double degrees) {
        return {Kind::AnglePrune, 1.0, degrees};
    }
};

struct BuildParams {
    std::size_t M = 32;               ///< out-degree
    std::size_t K = 32;               ///< bootstrap kNN width, K >= M
    std::size_t L_build = 100;        ///< queue size of the per-node self search
    std::size_t F = 2;                ///< refinement passes
    std::size_t max_candidates = 256; ///< pool size handed to edge selection
    EdgeStrategy strategy{};
    std::uint64_t seed = 42;
    double time_budget_seconds = 0.0; ///< 0 disables; checked between refinement passes

    /// Throws UsageError on inconsistent values.
    void
    validate() const;
};

/// n x K neighbor lists, each sorted ascending by (distance, id).
struct KnnGraph {
    std::size_t node_count = 0;
    std::size_t K = 0;
    std::vector<Neighbor> lists;
    std::size_t rounds = 0;  ///< descent rounds executed (0 for the exact path)

    std::span<const Neighbor>
    row(std::size_t i) const noexcept {
        return {lists.data() + i * K, K};
    }
};

/// Approximate kNN graph by neighbor-of-neighbor descent. Small inputs
/// (n <= kExactKnnThreshold) are solved by exhaustive scan instead.
/// Throws UsageError when n <= K.
KnnGraph
build_knn_graph(const VectorDataset& dataset, std::size_t K, std::uint64_t seed);

inline constexpr std::size_t kExactKnnThreshold = 2048;

/// Exhaustive kNN lists, the reference for build_knn_graph.
KnnGraph
exact_knn_graph(const VectorDataset& dataset, std::size_t K);

/// Prunes a candidate pool sorted ascending by distance to `node` (no self,
/// no duplicates). The result is an order-preserving subset of at most M
/// candidates.
std::vector<Neighbor>
select_edges(NodeId node,
             std::span<const Neighbor> candidates,
             const EdgeStrategy& strategy,
             std::size_t M,
             const VectorDataset& dataset);

/// Node nearest to the dataset centroid (squared L2), lowest id on ties.
NodeId
choose_entry(const VectorDataset& dataset);

/// Pruned kNN graph: each row is selected from its kNN list plus the results
/// of searching the kNN graph for the node itself, then reverse edges are
/// merged in.
ProximityGraph
initial_graph(const KnnGraph& knn, const VectorDataset& dataset, const BuildParams& params, NodeId entry);

struct RefineReport {
    std::size_t passes = 0;       ///< passes executed
    std::size_t changed_rows = 0; ///< rows changed by the last pass
    bool stabilized = false;      ///< a pass produced no change
};

/// Iterative 2-hop refinement: for each node, the pool is its row, its
/// neighbors' rows and a self search of queue size L_build; the pool is
/// re-pruned and reverse edges are merged. Runs params.F passes or until a
/// pass changes nothing.
ProximityGraph
refine(ProximityGraph graph, const VectorDataset& dataset, const BuildParams& params, RefineReport* report = nullptr);

/// Adds edges until every node is reachable from the entry. Each unreachable
/// node gets an edge from its nearest reachable node, evicting that node's
/// farthest neighbor when the row is full. Returns the number of edges added.
std::size_t
ensure_reachability(ProximityGraph& graph, const VectorDataset& dataset);

/// Nodes reachable from the entry along directed edges.
std::size_t
count_reachable(const ProximityGraph& graph);

struct GraphCheck {
    bool ok = true;
    std::string problem;
    std::size_t reachable = 0;
    std::size_t edges = 0;
    std::size_t max_degree = 0;
};

/// Row invariants (ids in range, no self loops, no duplicates, sentinel
/// padding) plus reachability from the entry.
GraphCheck
check_graph(const ProximityGraph& graph);

/// check_graph, throwing InvariantError on the first problem.
void
validate_graph(const ProximityGraph& graph);

/// kNN bootstrap, initial selection, refinement and reachability repair.
ProximityGraph
build_graph(const VectorDataset& dataset, const BuildParams& params, RefineReport* report = nullptr);

}  // namespace vexg
