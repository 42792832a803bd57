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
#include <span>
#include <utility>
#include <vector>

#include "vexg/common.h"
#include "vexg/dataset.h"
#include "vexg/graph.h"

namespace vexg {

/// Bijection between node ids and memory positions.
/// forward[old_id] = new position, inverse[new position] = old_id.
class Permutation {
public:
    Permutation() = default;

    static Permutation
    identity(std::size_t n);

    /// Throws DataError unless forward is a bijection on [0, n).
    static Permutation
    from_forward(std::vector<NodeId> forward);

    /// Positions in order of the given sequence: forward[order[j]] = j.
    static Permutation
    from_order(std::span<const NodeId> order);

    std::size_t
    size() const noexcept {
        return forward_.size();
    }
    std::span<const NodeId>
    forward() const noexcept {
        return forward_;
    }
    std::span<const NodeId>
    inverse() const noexcept {
        return inverse_;
    }
    NodeId
    position(NodeId id) const noexcept {
        return forward_[id];
    }
    NodeId
    original(NodeId position) const noexcept {
        return inverse_[position];
    }

    Permutation
    inverted() const;

    /// this applied after `first`: result(x) = this(first(x)).
    Permutation
    after(const Permutation& first) const;

    friend bool
    operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<NodeId> forward_;
    std::vector<NodeId> inverse_;
};

/// Spanning tree rooted at the graph entry. children[v] are ordered by
/// (distance to v, id); met[v] holds subtree sizes once computed.
struct SpanningTree {
    NodeId root = 0;
    std::vector<NodeId> parent;  ///< kSentinel for the root
    std::vector<std::vector<NodeId>> children;
    std::vector<float> parent_distance;  ///< 0 for the root
    std::vector<std::size_t> met;
    double total_weight = 0.0;

    std::size_t
    size() const noexcept {
        return parent.size();
    }
};

/// Minimum spanning tree of the undirected version of the graph, weights
/// being metric distances between endpoints. Ties are broken by the lower id
/// pair. Throws DataError (with the component count) on a disconnected graph.
SpanningTree
build_mst(const ProximityGraph& graph, const VectorDataset& dataset);

/// Roots an explicit undirected weighted edge list at `root`; used for
/// hand-built trees and by build_mst. Throws DataError unless the edges form
/// a spanning tree.
SpanningTree
tree_from_edges(std::size_t n, NodeId root, std::span<const std::pair<NodeId, NodeId>> edges, std::span<const float> weights);

/// Subtree sizes by iterative two-phase DFS; also stored into tree.met.
std::vector<std::size_t>
subtree_sizes(SpanningTree& tree);

/// Priority traversal of the tree: pop the largest met, append it, push its
/// children. Ties go to the smaller parent distance, then the lower id.
std::vector<NodeId>
order_by_subtree_size(const SpanningTree& tree);

/// MST, subtree sizes and priority traversal. forward[S[j]] = j.
Permutation
reorder(const ProximityGraph& graph, const VectorDataset& dataset);

/// max |pi(u) - pi(v)| over real edges.
std::size_t
bandwidth(const ProximityGraph& graph, const Permutation& permutation);

/// Mean |pi(u) - pi(v)| over real edges.
double
mean_edge_span(const ProximityGraph& graph, const Permutation& permutation);

/// Moves vectors and rewrites adjacency ids and the entry so that node
/// `id` becomes node `permutation.position(id)`. Row order is preserved.
std::pair<ProximityGraph, VectorDataset>
apply_permutation(const ProximityGraph& graph, const VectorDataset& dataset, const Permutation& permutation);

}  // namespace vexg
