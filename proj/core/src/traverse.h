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

#include <algorithm>
#include <optional>
#include <span>

#include "vexg/search.h"

namespace vexg::detail {

// Best-first traversal shared by exact and code-based search.
//
// distance(ids, out) fills out[j] for every id; prefetch_rows(ids) issues
// hints for the rows about to be read. Both see ids in ascending neighbor
// order of the expanded node.
template <typename BatchDistance, typename PrefetchRows>
SearchResult
traverse(const ProximityGraph& graph,
         BatchDistance&& distance,
         PrefetchRows&& prefetch_rows,
         const SearchParams& params,
         std::size_t row_floats,
         SearchContext& ctx) {
    params.validate();
    const std::size_t n = graph.node_count();
    const std::size_t batch = params.resolved_batch(row_floats, graph.out_degree());
    ctx.begin(n, params.L);
    CandidateQueue& queue = ctx.queue;

    SearchResult result;
    SearchStats& stats = result.stats;
    std::optional<EarlyTermTracker> tracker;
    if (params.early_term) {
        tracker.emplace(*params.early_term);
    }

    const NodeId entry = graph.entry();
    ctx.mark(entry);
    float entry_distance = 0.0f;
    distance(std::span<const NodeId>(&entry, 1), &entry_distance);
    stats.distance_computations = 1;
    queue.insert(entry, entry_distance);
    if (params.target == entry) {
        stats.target_hop = 0;
    }

    ctx.batch_dists.resize(std::max<std::size_t>(batch, 1));
    auto flush = [&]() -> bool {
        const std::span<const NodeId> ids(ctx.batch_ids);
        if (params.prefetch != nullptr) {
            prefetch_rows(ids);
        }
        distance(ids, ctx.batch_dists.data());
        stats.distance_computations += ids.size();
        for (std::size_t j = 0; j < ids.size(); ++j) {
            const std::size_t position = queue.insert(ids[j], ctx.batch_dists[j]);
            ++stats.insert_attempts;
            if (params.record_insert_positions) {
                stats.insert_positions.push_back(static_cast<std::uint32_t>(position));
            }
            if (ids[j] == params.target && position <= queue.capacity()) {
                stats.target_hop = static_cast<std::int64_t>(stats.hops);
            }
            if (tracker && tracker->observe(position)) {
                stats.terminated_early = true;
                return true;
            }
        }
        ctx.batch_ids.clear();
        return false;
    };

    bool stop = false;
    while (!stop) {
        const auto current = queue.pop_nearest_unvisited();
        if (!current) {
            break;
        }
        ++stats.hops;
        if (params.prefetch != nullptr) {
            if (const auto next = queue.peek_nearest_unvisited()) {
                params.prefetch(graph.row(*next).data(), graph.out_degree() * sizeof(NodeId));
            }
        }
        ctx.batch_ids.clear();
        for (const NodeId u : graph.neighbors(*current)) {
            if (!ctx.mark(u)) {
                continue;
            }
            ctx.batch_ids.push_back(u);
            if (ctx.batch_ids.size() == batch && flush()) {
                stop = true;
                break;
            }
        }
        if (!stop && !ctx.batch_ids.empty()) {
            stop = flush();
        }
    }

    const auto entries = queue.entries();
    const std::size_t found = std::min(params.k, entries.size());
    result.ids.reserve(found);
    result.distances.reserve(found);
    for (std::size_t i = 0; i < found; ++i) {
        result.ids.push_back(entries[i].id);
        result.distances.push_back(entries[i].distance);
    }
    stats.truncated = params.k > n;
    return result;
}

}  // namespace vexg::detail
