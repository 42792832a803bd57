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


#include "vexg/reorder.h"

#include <algorithm>
#include <numeric>
#include <queue>
#include <string>
#include <tuple>

#include "vexg/distance.h"

namespace vexg {

Permutation
Permutation::identity(std::size_t n) {
    std::vector<NodeId> forward(n);
    std::iota(forward.begin(), forward.end(), NodeId{0});
    return from_forward(std::move(forward));
}

Permutation
Permutation::from_forward(std::vector<NodeId> forward) {
    const std::size_t n = forward.size();
    std::vector<NodeId> inverse(n, kSentinel);
    for (std::size_t i = 0; i < n; ++i) {
        const NodeId p = forward[i];
        if (p >= n || inverse[p] != kSentinel) {
            throw DataError("permutation is not a bijection at index " + std::to_string(i));
        }
        inverse[p] = static_cast<NodeId>(i);
    }
    Permutation perm;
    perm.forward_ = std::move(forward);
    perm.inverse_ = std::move(inverse);
    return perm;
}

Permutation
Permutation::from_order(std::span<const NodeId> order) {
    std::vector<NodeId> forward(order.size(), kSentinel);
    for (std::size_t j = 0; j < order.size(); ++j) {
        if (order[j] >= order.size() || forward[order[j]] != kSentinel) {
            throw DataError("order is not a permutation at position " + std::to_string(j));
        }
        forward[order[j]] = static_cast<NodeId>(j);
    }
    return from_forward(std::move(forward));
}

Permutation
Permutation::inverted() const {
    return from_forward(inverse_);
}

Permutation
Permutation::after(const Permutation& first) const {
    if (first.size() != size()) {
        throw UsageError("cannot compose permutations of different sizes");
    }
    std::vector<NodeId> forward(size());
    for (std::size_t i = 0; i < size(); ++i) {
        forward[i] = forward_[first.forward_[i]];
    }
    return from_forward(std::move(forward));
}

namespace {

class DisjointSets {
public:
    explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t
    find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool
    unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) {
            return false;
        }
        if (rank_[a] < rank_[b]) {
            std::swap(a, b);
        }
        parent_[b] = a;
        if (rank_[a] == rank_[b]) {
            ++rank_[a];
        }
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::uint8_t> rank_;
};

}  // namespace

SpanningTree
tree_from_edges(std::size_t n,
                NodeId root,
                std::span<const std::pair<NodeId, NodeId>> edges,
                std::span<const float> weights) {
    if (n == 0 || root >= n) {
        throw DataError("tree root out of range");
    }
    if (edges.size() != n - 1 || weights.size() != edges.size()) {
        throw DataError("a spanning tree of " + std::to_string(n) + " nodes needs " + std::to_string(n - 1) +
                        " weighted edges");
    }
    std::vector<std::vector<std::pair<NodeId, float>>> adjacent(n);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const auto [a, b] = edges[e];
        if (a >= n || b >= n || a == b) {
            throw DataError("invalid tree edge " + std::to_string(a) + "-" + std::to_string(b));
        }
        adjacent[a].emplace_back(b, weights[e]);
        adjacent[b].emplace_back(a, weights[e]);
    }
    SpanningTree tree;
    tree.root = root;
    tree.parent.assign(n, kSentinel);
    tree.children.assign(n, {});
    tree.parent_distance.assign(n, 0.0f);
    tree.met.assign(n, 1);
    std::vector<char> seen(n, 0);
    std::vector<NodeId> stack{root};
    seen[root] = 1;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        for (const auto& [v, w] : adjacent[u]) {
            if (seen[v]) {
                continue;
            }
            seen[v] = 1;
            ++visited;
            tree.parent[v] = u;
            tree.parent_distance[v] = w;
            tree.children[u].push_back(v);
            tree.total_weight += w;
            stack.push_back(v);
        }
    }
    if (visited != n) {
        throw DataError("edges do not span all nodes (" + std::to_string(n - visited) + " unreached)");
    }
    for (auto& kids : tree.children) {
        std::sort(kids.begin(), kids.end(), [&](NodeId a, NodeId b) {
            return std::tie(tree.parent_distance[a], a) < std::tie(tree.parent_distance[b], b);
        });
    }
    return tree;
}

SpanningTree
build_mst(const ProximityGraph& graph, const VectorDataset& dataset) {
    const std::size_t n = graph.node_count();
    if (dataset.count() != n) {
        throw UsageError("graph and dataset sizes differ");
    }
    struct WeightedEdge {
        float weight;
        NodeId a;
        NodeId b;
    };
    std::vector<WeightedEdge> edges;
    edges.reserve(graph.edge_count());
    for (std::size_t u = 0; u < n; ++u) {
        for (const NodeId v : graph.neighbors(u)) {
            const auto a = static_cast<NodeId>(std::min<std::size_t>(u, v));
            const auto b = static_cast<NodeId>(std::max<std::size_t>(u, v));
            if (a == b) {
                continue;
            }
            const float w = detail::distance(dataset.row(a).data(), dataset.row(b).data(), dataset.padded_dim(),
                                             dataset.metric());
            edges.push_back({w, a, b});
        }
    }
    // Both directions share the pair key; the lighter copy sorts first and wins.
    std::sort(edges.begin(), edges.end(), [](const WeightedEdge& x, const WeightedEdge& y) {
        return std::tie(x.weight, x.a, x.b) < std::tie(y.weight, y.a, y.b);
    });
    DisjointSets sets(n);
    std::vector<std::pair<NodeId, NodeId>> chosen;
    std::vector<float> weights;
    chosen.reserve(n > 0 ? n - 1 : 0);
    for (const auto& e : edges) {
        if (sets.unite(e.a, e.b)) {
            chosen.emplace_back(e.a, e.b);
            weights.push_back(e.weight);
        }
    }
    if (n > 0 && chosen.size() != n - 1) {
        std::size_t components = 0;
        for (std::size_t i = 0; i < n; ++i) {
            components += sets.find(i) == i ? 1 : 0;
        }
        throw DataError("graph is disconnected: " + std::to_string(components) + " components");
    }
    return tree_from_edges(n, graph.entry(), chosen, weights);
}

std::vector<std::size_t>
subtree_sizes(SpanningTree& tree) {
    const std::size_t n = tree.size();
    std::vector<std::size_t> met(n, 1);
    std::vector<std::pair<NodeId, bool>> stack;
    stack.emplace_back(tree.root, false);
    while (!stack.empty()) {
        const auto [u, processed] = stack.back();
        stack.pop_back();
        if (processed) {
            for (const NodeId v : tree.children[u]) {
                met[u] += met[v];
            }
            continue;
        }
        stack.emplace_back(u, true);
        for (auto it = tree.children[u].rbegin(); it != tree.children[u].rend(); ++it) {
            stack.emplace_back(*it, false);
        }
    }
    tree.met = met;
    return met;
}

std::vector<NodeId>
order_by_subtree_size(const SpanningTree& tree) {
    const std::size_t n = tree.size();
    if (tree.met.size() != n) {
        throw UsageError("subtree sizes not computed");
    }
    // Max-heap on met; ties prefer the nearer child, then the lower id.
    auto lower_priority = [&](NodeId a, NodeId b) {
        if (tree.met[a] != tree.met[b]) {
            return tree.met[a] < tree.met[b];
        }
        if (tree.parent_distance[a] != tree.parent_distance[b]) {
            return tree.parent_distance[a] > tree.parent_distance[b];
        }
        return a > b;
    };
    std::priority_queue<NodeId, std::vector<NodeId>, decltype(lower_priority)> queue(lower_priority);
    std::vector<NodeId> order;
    order.reserve(n);
    queue.push(tree.root);
    while (!queue.empty()) {
        const NodeId u = queue.top();
        queue.pop();
        order.push_back(u);
        for (const NodeId v : tree.children[u]) {
            queue.push(v);
        }
    }
    return order;
}

Permutation
reorder(const ProximityGraph& graph, const VectorDataset& dataset) {
    SpanningTree tree = build_mst(graph, dataset);
    subtree_sizes(tree);
    const auto order = order_by_subtree_size(tree);
    return Permutation::from_order(order);
}

std::size_t
bandwidth(const ProximityGraph& graph, const Permutation& permutation) {
    if (permutation.size() != graph.node_count()) {
        throw UsageError("permutation size differs from graph");
    }
    std::size_t widest = 0;
    for (std::size_t u = 0; u < graph.node_count(); ++u) {
        const auto pu = static_cast<std::int64_t>(permutation.position(static_cast<NodeId>(u)));
        for (const NodeId v : graph.neighbors(u)) {
            const auto pv = static_cast<std::int64_t>(permutation.position(v));
            widest = std::max(widest, static_cast<std::size_t>(pu > pv ? pu - pv : pv - pu));
        }
    }
    return widest;
}

double
mean_edge_span(const ProximityGraph& graph, const Permutation& permutation) {
    if (permutation.size() != graph.node_count()) {
        throw UsageError("permutation size differs from graph");
    }
    double total = 0.0;
    std::size_t edges = 0;
    for (std::size_t u = 0; u < graph.node_count(); ++u) {
        const auto pu = static_cast<double>(permutation.position(static_cast<NodeId>(u)));
        for (const NodeId v : graph.neighbors(u)) {
            total += std::abs(pu - static_cast<double>(permutation.position(v)));
            ++edges;
        }
    }
    return edges == 0 ? 0.0 : total / static_cast<double>(edges);
}

std::pair<ProximityGraph, VectorDataset>
apply_permutation(const ProximityGraph& graph, const VectorDataset& dataset, const Permutation& permutation) {
    const std::size_t n = graph.node_count();
    if (dataset.count() != n || permutation.size() != n) {
        throw UsageError("graph, dataset and permutation sizes differ");
    }
    const std::size_t M = graph.out_degree();
    const std::size_t stride = dataset.padded_dim();
    std::vector<NodeId> adjacency(n * M, kSentinel);
    std::vector<float> vectors(n * stride);
    const auto source = dataset.data();
    for (std::size_t old_id = 0; old_id < n; ++old_id) {
        const std::size_t pos = permutation.position(static_cast<NodeId>(old_id));
        const auto row = graph.row(old_id);
        for (std::size_t j = 0; j < M; ++j) {
            adjacency[pos * M + j] = row[j] == kSentinel ? kSentinel : permutation.position(row[j]);
        }
        std::copy_n(source.begin() + static_cast<std::ptrdiff_t>(old_id * stride), stride,
                    vectors.begin() + static_cast<std::ptrdiff_t>(pos * stride));
    }
    auto moved_graph = ProximityGraph::from_adjacency(n, M, permutation.position(graph.entry()), graph.metric(),
                                                      std::move(adjacency));
    auto moved_data = VectorDataset::from_padded(n, dataset.dim(), dataset.metric(), vectors);
    return {std::move(moved_graph), std::move(moved_data)};
}

}  // namespace vexg
