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


#include "vexg/graph.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <string>

#include "vexg/distance.h"
#include "vexg/search.h"

namespace vexg {

ProximityGraph::ProximityGraph(std::size_t node_count, std::size_t out_degree, Metric metric)
    : node_count_(node_count), out_degree_(out_degree), metric_(metric), adjacency_(node_count * out_degree, kSentinel) {
    if (out_degree == 0) {
        throw UsageError("out-degree must be positive");
    }
}

ProximityGraph
ProximityGraph::from_adjacency(std::size_t node_count,
                               std::size_t out_degree,
                               NodeId entry,
                               Metric metric,
                               std::vector<NodeId> adjacency) {
    if (out_degree == 0 || adjacency.size() != node_count * out_degree) {
        throw DataError("adjacency holds " + std::to_string(adjacency.size()) + " ids, expected " +
                        std::to_string(node_count * out_degree));
    }
    ProximityGraph g;
    g.node_count_ = node_count;
    g.out_degree_ = out_degree;
    g.metric_ = metric;
    g.adjacency_.assign(adjacency.begin(), adjacency.end());
    g.set_entry(entry);
    return g;
}

void
ProximityGraph::set_entry(NodeId entry) {
    if (entry >= node_count_) {
        throw DataError("entry node " + std::to_string(entry) + " out of range");
    }
    entry_ = entry;
}

std::span<const NodeId>
ProximityGraph::neighbors(std::size_t i) const noexcept {
    const auto r = row(i);
    const auto end = std::find(r.begin(), r.end(), kSentinel);
    return r.first(static_cast<std::size_t>(end - r.begin()));
}

void
ProximityGraph::set_row(std::size_t i, std::span<const NodeId> ids) {
    if (ids.size() > out_degree_) {
        throw UsageError("row of " + std::to_string(ids.size()) + " exceeds out-degree " + std::to_string(out_degree_));
    }
    NodeId* dst = adjacency_.data() + i * out_degree_;
    std::copy(ids.begin(), ids.end(), dst);
    std::fill(dst + ids.size(), dst + out_degree_, kSentinel);
}

std::size_t
ProximityGraph::edge_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(adjacency_.begin(), adjacency_.end(), [](NodeId id) { return id != kSentinel; }));
}

bool
operator==(const ProximityGraph& a, const ProximityGraph& b) noexcept {
    return a.node_count_ == b.node_count_ && a.out_degree_ == b.out_degree_ && a.entry_ == b.entry_ &&
           a.metric_ == b.metric_ && a.adjacency_ == b.adjacency_;
}

void
BuildParams::validate() const {
    if (M == 0) {
        throw UsageError("M must be positive");
    }
    if (K < M) {
        throw UsageError("bootstrap width K must be >= M");
    }
    if (L_build == 0) {
        throw UsageError("L_build must be positive");
    }
    if (max_candidates < M) {
        throw UsageError("max_candidates must be >= M");
    }
    if (strategy.kind == EdgeStrategy::Kind::DistancePrune && !(strategy.alpha >= 1.0)) {
        throw UsageError("alpha must be >= 1");
    }
    if (strategy.kind == EdgeStrategy::Kind::AnglePrune &&
        !(strategy.angle_degrees > 0.0 && strategy.angle_degrees < 180.0)) {
        throw UsageError("angle threshold must lie in (0, 180) degrees");
    }
}

namespace {

inline float
pair_distance(const VectorDataset& ds, std::size_t a, std::size_t b) noexcept {
    return detail::distance(ds.row(a).data(), ds.row(b).data(), ds.padded_dim(), ds.metric());
}

// Sorted fixed-capacity neighbor list used by the descent.
struct DescentEntry {
    NodeId id;
    float distance;
    bool fresh;
};

class DescentList {
public:
    explicit DescentList(std::size_t capacity) : capacity_(capacity) {
        items_.reserve(capacity + 1);
    }

    bool
    try_insert(NodeId id, float distance) {
        if (items_.size() == capacity_ && !(Neighbor{id, distance} < Neighbor{items_.back().id, items_.back().distance})) {
            return false;
        }
        for (const auto& e : items_) {
            if (e.id == id) {
                return false;
            }
        }
        const auto it = std::upper_bound(items_.begin(), items_.end(), Neighbor{id, distance},
                                         [](const Neighbor& n, const DescentEntry& e) {
                                             return n < Neighbor{e.id, e.distance};
                                         });
        items_.insert(it, DescentEntry{id, distance, true});
        if (items_.size() > capacity_) {
            items_.pop_back();
        }
        return true;
    }

    std::vector<DescentEntry>&
    items() noexcept {
        return items_;
    }
    const std::vector<DescentEntry>&
    items() const noexcept {
        return items_;
    }

private:
    std::size_t capacity_;
    std::vector<DescentEntry> items_;
};

void
append_unique(std::vector<NodeId>& list, NodeId id) {
    if (std::find(list.begin(), list.end(), id) == list.end()) {
        list.push_back(id);
    }
}

}  // namespace

KnnGraph
exact_knn_graph(const VectorDataset& dataset, std::size_t K) {
    const std::size_t n = dataset.count();
    if (n <= K) {
        throw UsageError("kNN graph needs more than K=" + std::to_string(K) + " points, got " + std::to_string(n));
    }
    KnnGraph out{n, K, std::vector<Neighbor>(n * K), 0};
    std::vector<Neighbor> all(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t w = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) {
                all[w++] = Neighbor{static_cast<NodeId>(j), pair_distance(dataset, i, j)};
            }
        }
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(K), all.end());
        std::copy_n(all.begin(), K, out.lists.begin() + static_cast<std::ptrdiff_t>(i * K));
    }
    return out;
}

KnnGraph
build_knn_graph(const VectorDataset& dataset, std::size_t K, std::uint64_t seed) {
    const std::size_t n = dataset.count();
    if (K == 0) {
        throw UsageError("K must be positive");
    }
    if (n <= K) {
        throw UsageError("kNN graph needs more than K=" + std::to_string(K) + " points, got " + std::to_string(n));
    }
    if (n <= kExactKnnThreshold) {
        return exact_knn_graph(dataset, K);
    }

    constexpr std::size_t kMaxRounds = 30;
    constexpr double kDelta = 0.001;
    const std::size_t sample = std::max<std::size_t>(1, K / 2);

    std::mt19937_64 rng(seed);
    std::vector<DescentList> lists(n, DescentList(K));
    {
        std::uniform_int_distribution<std::size_t> pick(0, n - 2);
        for (std::size_t i = 0; i < n; ++i) {
            while (lists[i].items().size() < K) {
                std::size_t j = pick(rng);
                if (j >= i) {
                    ++j;
                }
                lists[i].try_insert(static_cast<NodeId>(j), pair_distance(dataset, i, j));
            }
        }
    }

    std::vector<std::vector<NodeId>> fresh(n);
    std::vector<std::vector<NodeId>> stale(n);
    std::vector<std::vector<NodeId>> rev_fresh(n);
    std::vector<std::vector<NodeId>> rev_stale(n);
    std::size_t rounds = 0;
    for (; rounds < kMaxRounds;) {
        ++rounds;
        for (std::size_t i = 0; i < n; ++i) {
            fresh[i].clear();
            stale[i].clear();
            rev_fresh[i].clear();
            rev_stale[i].clear();
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t taken = 0;
            for (auto& e : lists[i].items()) {
                if (e.fresh) {
                    if (taken < sample) {
                        fresh[i].push_back(e.id);
                        e.fresh = false;
                        ++taken;
                    }
                } else {
                    stale[i].push_back(e.id);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (const NodeId u : fresh[i]) {
                rev_fresh[u].push_back(static_cast<NodeId>(i));
            }
            for (const NodeId u : stale[i]) {
                rev_stale[u].push_back(static_cast<NodeId>(i));
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (auto* rev : {&rev_fresh[i], &rev_stale[i]}) {
                if (rev->size() > sample) {
                    std::shuffle(rev->begin(), rev->end(), rng);
                    rev->resize(sample);
                }
            }
            for (const NodeId u : rev_fresh[i]) {
                append_unique(fresh[i], u);
            }
            for (const NodeId u : rev_stale[i]) {
                append_unique(stale[i], u);
            }
        }

        std::size_t updates = 0;
        auto join = [&](NodeId a, NodeId b) {
            if (a == b) {
                return;
            }
            const float d = pair_distance(dataset, a, b);
            updates += lists[a].try_insert(b, d) ? 1 : 0;
            updates += lists[b].try_insert(a, d) ? 1 : 0;
        };
        for (std::size_t i = 0; i < n; ++i) {
            const auto& nw = fresh[i];
            const auto& od = stale[i];
            for (std::size_t x = 0; x < nw.size(); ++x) {
                for (std::size_t y = x + 1; y < nw.size(); ++y) {
                    join(nw[x], nw[y]);
                }
                for (const NodeId o : od) {
                    join(nw[x], o);
                }
            }
        }
        if (static_cast<double>(updates) < kDelta * static_cast<double>(n) * static_cast<double>(K)) {
            break;
        }
    }

    KnnGraph out{n, K, std::vector<Neighbor>(n * K), rounds};
    for (std::size_t i = 0; i < n; ++i) {
        const auto& items = lists[i].items();
        for (std::size_t j = 0; j < K; ++j) {
            out.lists[i * K + j] = Neighbor{items[j].id, items[j].distance};
        }
    }
    return out;
}

std::vector<Neighbor>
select_edges(NodeId node,
             std::span<const Neighbor> candidates,
             const EdgeStrategy& strategy,
             std::size_t M,
             const VectorDataset& dataset) {
    std::vector<Neighbor> kept;
    kept.reserve(std::min(M, candidates.size()));
    if (M == 0) {
        return kept;
    }
    if (strategy.kind == EdgeStrategy::Kind::DistancePrune) {
        // Squared-L2 metrics compare squared distances, so alpha is squared too.
        const bool squared = dataset.metric() != Metric::NegativeInnerProduct;
        const double scale = squared ? strategy.alpha * strategy.alpha : strategy.alpha;
        for (const Neighbor& c : candidates) {
            bool pruned = false;
            for (const Neighbor& u : kept) {
                const double d_uc = pair_distance(dataset, u.id, c.id);
                if (scale * d_uc < static_cast<double>(c.distance)) {
                    pruned = true;
                    break;
                }
            }
            if (!pruned) {
                kept.push_back(c);
                if (kept.size() == M) {
                    break;
                }
            }
        }
        return kept;
    }

    const double cos_limit = std::cos(strategy.angle_degrees * std::acos(-1.0) / 180.0);
    const std::size_t dim = dataset.dim();
    const auto origin = dataset.row(node);
    auto offset_dot = [&](NodeId a, NodeId b, double& norm_a, double& norm_b) {
        const auto va = dataset.row(a);
        const auto vb = dataset.row(b);
        double dot = 0.0;
        norm_a = 0.0;
        norm_b = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double x = static_cast<double>(va[j]) - origin[j];
            const double y = static_cast<double>(vb[j]) - origin[j];
            dot += x * y;
            norm_a += x * x;
            norm_b += y * y;
        }
        return dot;
    };
    for (const Neighbor& c : candidates) {
        bool pruned = false;
        for (const Neighbor& u : kept) {
            double nc = 0.0;
            double nu = 0.0;
            const double dot = offset_dot(c.id, u.id, nc, nu);
            // A zero offset has no direction; treat it as colinear with every kept edge.
            const double cosine = (nc == 0.0 || nu == 0.0) ? 1.0 : dot / std::sqrt(nc * nu);
            if (cosine > cos_limit) {
                pruned = true;
                break;
            }
        }
        if (!pruned) {
            kept.push_back(c);
            if (kept.size() == M) {
                break;
            }
        }
    }
    return kept;
}

NodeId
choose_entry(const VectorDataset& dataset) {
    const std::size_t n = dataset.count();
    const std::size_t dim = dataset.dim();
    if (n == 0) {
        throw DataError("cannot choose an entry node of an empty dataset");
    }
    std::vector<double> centroid(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = dataset.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            centroid[j] += r[j];
        }
    }
    for (auto& c : centroid) {
        c /= static_cast<double>(n);
    }
    NodeId best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = dataset.row(i);
        double d = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double diff = r[j] - centroid[j];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = static_cast<NodeId>(i);
        }
    }
    return best;
}

namespace {

// Mutable state for one selection pass over all nodes.
class PassBuilder {
public:
    PassBuilder(ProximityGraph& graph, const VectorDataset& dataset, const BuildParams& params)
        : graph_(graph), dataset_(dataset), params_(params), stamps_(graph.node_count(), 0), context_(graph.node_count()) {
        search_params_.k = params.L_build;
        search_params_.L = params.L_build;
        search_params_.prefetch = nullptr;
    }

    void
    begin_pool() {
        if (++epoch_ == 0) {
            std::fill(stamps_.begin(), stamps_.end(), 0);
            epoch_ = 1;
        }
        pool_.clear();
    }

    void
    add(NodeId node, NodeId id, float distance) {
        if (id == node || id == kSentinel || stamps_[id] == epoch_) {
            return;
        }
        stamps_[id] = epoch_;
        pool_.push_back(Neighbor{id, distance});
    }

    void
    add(NodeId node, NodeId id) {
        if (id == node || id == kSentinel || stamps_[id] == epoch_) {
            return;
        }
        add(node, id, pair_distance(dataset_, node, id));
    }

    void
    add_self_search(NodeId node, const ProximityGraph& search_graph) {
        if (search_graph.node_count() == 0) {
            return;
        }
        const auto found = search(search_graph, dataset_, dataset_.row(node), search_params_, context_);
        for (std::size_t i = 0; i < found.ids.size(); ++i) {
            add(node, found.ids[i], found.distances[i]);
        }
    }

    /// Prunes the pool and installs the row. Returns true when the row changed.
    bool
    commit(NodeId node) {
        std::sort(pool_.begin(), pool_.end());
        if (pool_.size() > params_.max_candidates) {
            pool_.resize(params_.max_candidates);
        }
        const auto kept = select_edges(node, pool_, params_.strategy, params_.M, dataset_);
        ids_.clear();
        for (const auto& nb : kept) {
            ids_.push_back(nb.id);
        }
        const auto before = graph_.neighbors(node);
        const bool changed = !std::equal(before.begin(), before.end(), ids_.begin(), ids_.end());
        if (changed) {
            graph_.set_row(node, ids_);
        }
        return changed;
    }

    /// Adds the edge target -> source, re-pruning target's row when full.
    bool
    add_reverse(NodeId target, NodeId source) {
        const auto row = graph_.neighbors(target);
        if (std::find(row.begin(), row.end(), source) != row.end()) {
            return false;
        }
        reverse_pool_.clear();
        for (const NodeId id : row) {
            reverse_pool_.push_back(Neighbor{id, pair_distance(dataset_, target, id)});
        }
        reverse_pool_.push_back(Neighbor{source, pair_distance(dataset_, target, source)});
        std::sort(reverse_pool_.begin(), reverse_pool_.end());
        std::vector<Neighbor> kept;
        if (reverse_pool_.size() <= params_.M) {
            kept = reverse_pool_;
        } else {
            kept = select_edges(target, reverse_pool_, params_.strategy, params_.M, dataset_);
        }
        ids_.clear();
        for (const auto& nb : kept) {
            ids_.push_back(nb.id);
        }
        if (std::equal(row.begin(), row.end(), ids_.begin(), ids_.end())) {
            return false;
        }
        graph_.set_row(target, ids_);
        return true;
    }

    void
    add_reverse_edges(NodeId node, std::size_t& changed) {
        const auto row = graph_.neighbors(node);
        const std::vector<NodeId> targets(row.begin(), row.end());
        for (const NodeId t : targets) {
            if (add_reverse(t, node)) {
                ++changed;
            }
        }
    }

private:
    ProximityGraph& graph_;
    const VectorDataset& dataset_;
    const BuildParams& params_;
    std::vector<std::uint32_t> stamps_;
    std::uint32_t epoch_ = 0;
    std::vector<Neighbor> pool_;
    std::vector<Neighbor> reverse_pool_;
    std::vector<NodeId> ids_;
    SearchParams search_params_;
    SearchContext context_;
};

ProximityGraph
knn_as_graph(const KnnGraph& knn, Metric metric, NodeId entry) {
    ProximityGraph g(knn.node_count, knn.K, metric);
    std::vector<NodeId> ids(knn.K);
    for (std::size_t i = 0; i < knn.node_count; ++i) {
        const auto r = knn.row(i);
        for (std::size_t j = 0; j < knn.K; ++j) {
            ids[j] = r[j].id;
        }
        g.set_row(i, ids);
    }
    g.set_entry(entry);
    return g;
}

}  // namespace

ProximityGraph
initial_graph(const KnnGraph& knn, const VectorDataset& dataset, const BuildParams& params, NodeId entry) {
    params.validate();
    const std::size_t n = dataset.count();
    if (knn.node_count != n) {
        throw UsageError("kNN graph and dataset sizes differ");
    }
    const ProximityGraph knn_graph = knn_as_graph(knn, dataset.metric(), entry);
    ProximityGraph graph(n, params.M, dataset.metric());
    graph.set_entry(entry);
    PassBuilder builder(graph, dataset, params);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto node = static_cast<NodeId>(i);
        builder.begin_pool();
        for (const Neighbor& nb : knn.row(i)) {
            builder.add(node, nb.id, nb.distance);
        }
        builder.add_self_search(node, knn_graph);
        builder.commit(node);
    }
    for (std::size_t i = 0; i < n; ++i) {
        builder.add_reverse_edges(static_cast<NodeId>(i), changed);
    }
    return graph;
}

ProximityGraph
refine(ProximityGraph graph, const VectorDataset& dataset, const BuildParams& params, RefineReport* report) {
    params.validate();
    const std::size_t n = graph.node_count();
    if (dataset.count() != n) {
        throw UsageError("graph and dataset sizes differ");
    }
    if (graph.out_degree() != params.M) {
        throw UsageError("graph out-degree differs from BuildParams::M");
    }
    RefineReport local;
    const auto start = std::chrono::steady_clock::now();
    PassBuilder builder(graph, dataset, params);
    std::vector<NodeId> first_hop;
    for (std::size_t pass = 0; pass < params.F; ++pass) {
        if (params.time_budget_seconds > 0.0 && pass > 0) {
            const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (elapsed >= params.time_budget_seconds) {
                break;
            }
        }
        std::size_t changed = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto node = static_cast<NodeId>(i);
            builder.begin_pool();
            const auto row = graph.neighbors(i);
            first_hop.assign(row.begin(), row.end());
            for (const NodeId u : first_hop) {
                builder.add(node, u);
            }
            for (const NodeId u : first_hop) {
                for (const NodeId w : graph.neighbors(u)) {
                    builder.add(node, w);
                }
            }
            builder.add_self_search(node, graph);
            if (builder.commit(node)) {
                ++changed;
            }
            builder.add_reverse_edges(node, changed);
        }
        ++local.passes;
        local.changed_rows = changed;
        if (changed == 0) {
            local.stabilized = true;
            break;
        }
    }
    if (report != nullptr) {
        *report = local;
    }
    return graph;
}

namespace {

std::vector<char>
reachable_from_entry(const ProximityGraph& graph) {
    std::vector<char> seen(graph.node_count(), 0);
    if (graph.node_count() == 0) {
        return seen;
    }
    std::deque<NodeId> frontier{graph.entry()};
    seen[graph.entry()] = 1;
    while (!frontier.empty()) {
        const NodeId u = frontier.front();
        frontier.pop_front();
        for (const NodeId v : graph.neighbors(u)) {
            if (v < graph.node_count() && !seen[v]) {
                seen[v] = 1;
                frontier.push_back(v);
            }
        }
    }
    return seen;
}

}  // namespace

std::size_t
count_reachable(const ProximityGraph& graph) {
    const auto seen = reachable_from_entry(graph);
    return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
}

std::size_t
ensure_reachability(ProximityGraph& graph, const VectorDataset& dataset) {
    const std::size_t n = graph.node_count();
    if (dataset.count() != n) {
        throw UsageError("graph and dataset sizes differ");
    }
    std::size_t added = 0;
    std::vector<NodeId> row;
    std::vector<NodeId> parent(n, kSentinel);
    std::vector<char> seen(n, 0);
    auto expand = [&](NodeId root) {
        std::deque<NodeId> frontier{root};
        seen[root] = 1;
        while (!frontier.empty()) {
            const NodeId x = frontier.front();
            frontier.pop_front();
            for (const NodeId v : graph.neighbors(x)) {
                if (!seen[v]) {
                    seen[v] = 1;
                    parent[v] = x;
                    frontier.push_back(v);
                }
            }
        }
    };
    constexpr std::size_t kHostWindow = 16;
    std::vector<Neighbor> hosts;
    std::vector<Neighbor> ranked;
    for (std::size_t round = 0; round <= n; ++round) {
        std::fill(seen.begin(), seen.end(), 0);
        std::fill(parent.begin(), parent.end(), kSentinel);
        expand(graph.entry());
        if (std::find(seen.begin(), seen.end(), 0) == seen.end()) {
            return added;
        }
        for (std::size_t u = 0; u < n; ++u) {
            if (seen[u]) {
                continue;
            }
            hosts.clear();
            for (std::size_t r = 0; r < n; ++r) {
                if (seen[r]) {
                    hosts.push_back(Neighbor{static_cast<NodeId>(r), pair_distance(dataset, r, u)});
                }
            }
            const std::size_t window = std::min(kHostWindow, hosts.size());
            std::partial_sort(hosts.begin(), hosts.begin() + static_cast<std::ptrdiff_t>(window), hosts.end());

            // Prefer a host with a free slot, then one whose farthest
            // non-tree edge can be dropped without losing reachability.
            Neighbor host = hosts.front();
            std::size_t victim = kSentinel;
            bool found = false;
            for (std::size_t i = 0; i < window && !found; ++i) {
                if (graph.degree(hosts[i].id) < graph.out_degree()) {
                    host = hosts[i];
                    found = true;
                }
            }
            for (std::size_t i = 0; i < window && !found; ++i) {
                const NodeId h = hosts[i].id;
                ranked.clear();
                for (const NodeId v : graph.neighbors(h)) {
                    ranked.push_back(Neighbor{v, pair_distance(dataset, h, v)});
                }
                std::sort(ranked.begin(), ranked.end());
                for (std::size_t j = ranked.size(); j-- > 0;) {
                    if (parent[ranked[j].id] != h) {
                        host = hosts[i];
                        victim = ranked[j].id;
                        found = true;
                        break;
                    }
                }
            }
            const NodeId from = host.id;
            ranked.clear();
            for (const NodeId v : graph.neighbors(from)) {
                ranked.push_back(Neighbor{v, pair_distance(dataset, from, v)});
            }
            std::sort(ranked.begin(), ranked.end());
            if (ranked.size() == graph.out_degree()) {
                auto it = ranked.end() - 1;
                if (victim != kSentinel) {
                    it = std::find_if(ranked.begin(), ranked.end(), [&](const Neighbor& nb) { return nb.id == victim; });
                }
                ranked.erase(it);
            }
            ranked.push_back(Neighbor{static_cast<NodeId>(u), host.distance});
            std::stable_sort(ranked.begin(), ranked.end());
            row.clear();
            for (const auto& nb : ranked) {
                row.push_back(nb.id);
            }
            graph.set_row(from, row);
            ++added;
            parent[u] = from;
            expand(static_cast<NodeId>(u));
        }
    }
    if (count_reachable(graph) != n) {
        throw InvariantError("could not make every node reachable from the entry");
    }
    return added;
}

GraphCheck
check_graph(const ProximityGraph& graph) {
    GraphCheck check;
    const std::size_t n = graph.node_count();
    const std::size_t M = graph.out_degree();
    auto fail = [&](std::string message) {
        if (check.ok) {
            check.ok = false;
            check.problem = std::move(message);
        }
    };
    if (n > 0 && graph.entry() >= n) {
        fail("entry node out of range");
        return check;
    }
    std::vector<NodeId> sorted;
    for (std::size_t i = 0; i < n && check.ok; ++i) {
        const auto r = graph.row(i);
        std::size_t real = 0;
        bool padding = false;
        for (std::size_t j = 0; j < M; ++j) {
            const NodeId v = r[j];
            if (v == kSentinel) {
                padding = true;
                continue;
            }
            if (padding) {
                fail("row " + std::to_string(i) + " has a neighbor after sentinel padding");
                break;
            }
            if (v >= n) {
                fail("row " + std::to_string(i) + " references invalid id " + std::to_string(v));
                break;
            }
            if (v == i) {
                fail("row " + std::to_string(i) + " has a self loop");
                break;
            }
            ++real;
        }
        sorted.assign(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(real));
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            fail("row " + std::to_string(i) + " has duplicate neighbors");
        }
        check.edges += real;
        check.max_degree = std::max(check.max_degree, real);
    }
    if (!check.ok) {
        return check;
    }
    check.reachable = count_reachable(graph);
    if (check.reachable != n) {
        fail(std::to_string(n - check.reachable) + " nodes unreachable from entry");
    }
    return check;
}

void
validate_graph(const ProximityGraph& graph) {
    const auto check = check_graph(graph);
    if (!check.ok) {
        throw InvariantError("graph invariant violated: " + check.problem);
    }
}

ProximityGraph
build_graph(const VectorDataset& dataset, const BuildParams& params, RefineReport* report) {
    params.validate();
    if (dataset.count() <= params.K) {
        throw UsageError("dataset needs more than K=" + std::to_string(params.K) + " points");
    }
    const NodeId entry = choose_entry(dataset);
    const KnnGraph knn = build_knn_graph(dataset, params.K, params.seed);
    ProximityGraph graph = initial_graph(knn, dataset, params, entry);
    graph = refine(std::move(graph), dataset, params, report);
    ensure_reachability(graph, dataset);
    validate_graph(graph);
    return graph;
}

}  // namespace vexg
