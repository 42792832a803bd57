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
#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "vexg/common.h"
#include "vexg/dataset.h"
#include "vexg/distance.h"
#include "vexg/graph.h"

namespace vexg {

/// Bounded best-first queue of (id, distance, visited), ascending by
/// distance. A newcomer with the same distance as an incumbent goes after it.
/// Callers guarantee an id is inserted at most once.
class CandidateQueue {
public:
    struct Entry {
        NodeId id;
        float distance;
        bool visited;
    };

    explicit CandidateQueue(std::size_t capacity = 0) {
        reset(capacity);
    }

    void
    reset(std::size_t capacity);

    /// Returns the 1-based rank the entry now holds, or capacity() + 1 when
    /// the queue is full and the entry ranks past the end (rejected).
    std::size_t
    insert(NodeId id, float distance);

    /// Marks the best unvisited entry visited and returns it.
    std::optional<NodeId>
    pop_nearest_unvisited() noexcept;

    /// Best unvisited entry without marking it.
    std::optional<NodeId>
    peek_nearest_unvisited() const noexcept;

    std::size_t
    size() const noexcept {
        return entries_.size();
    }
    std::size_t
    capacity() const noexcept {
        return capacity_;
    }
    std::span<const Entry>
    entries() const noexcept {
        return entries_;
    }

private:
    std::size_t capacity_ = 0;
    std::size_t cursor_ = 0;  // no unvisited entry before this index
    std::vector<Entry> entries_;
};

/// Early termination: stop once tau_max consecutive insertion attempts rank
/// beyond position t.
struct EarlyTermination {
    std::size_t t = 0;
    std::size_t tau_max = 1;

    friend bool
    operator==(const EarlyTermination&, const EarlyTermination&) = default;
};

/// True iff the last tau_max positions are all > t.
bool
early_term_check(std::span<const std::uint32_t> positions, std::size_t t, std::size_t tau_max);

/// Streaming form of early_term_check.
class EarlyTermTracker {
public:
    explicit EarlyTermTracker(EarlyTermination config) : config_(config) {
    }

    /// Feeds one insertion position; returns true when the search should stop.
    bool
    observe(std::size_t position) noexcept {
        run_ = position > config_.t ? run_ + 1 : 0;
        return run_ >= config_.tau_max;
    }

private:
    EarlyTermination config_;
    std::size_t run_ = 0;
};

struct SearchParams {
    std::size_t k = 10;
    std::size_t L = 100;
    /// Distance batch width; 0 derives it from batch_spec and the row width.
    std::size_t batch = 0;
    BatchSpec batch_spec{};
    std::optional<EarlyTermination> early_term;
    /// nullptr disables prefetch hints.
    PrefetchFn prefetch = prefetch_lines;
    bool record_insert_positions = false;
    /// When set, stats.target_hop records the hop at which this node entered the queue.
    NodeId target = kSentinel;

    /// Throws UsageError unless k <= L, 1 <= L and early-term t < L, tau_max >= 1.
    void
    validate() const;

    std::size_t
    resolved_batch(std::size_t row_floats, std::size_t out_degree) const;
};

struct SearchStats {
    std::uint64_t distance_computations = 0;
    std::uint64_t hops = 0;
    std::uint64_t insert_attempts = 0;
    std::vector<std::uint32_t> insert_positions;
    bool terminated_early = false;
    bool truncated = false;  ///< k exceeded the node count
    std::int64_t target_hop = -1;
};

struct SearchResult {
    std::vector<NodeId> ids;
    std::vector<float> distances;
    SearchStats stats;
};

/// Per-search scratch: queue, epoch-stamped "distance computed" table and
/// batch buffers. Reuse across queries of one worker.
class SearchContext {
public:
    explicit SearchContext(std::size_t node_count = 0);

    void
    begin(std::size_t node_count, std::size_t capacity);

    /// Returns true the first time id is seen in the current search.
    bool
    mark(NodeId id) noexcept {
        if (stamps_[id] == epoch_) {
            return false;
        }
        stamps_[id] = epoch_;
        return true;
    }

    CandidateQueue queue;
    std::vector<NodeId> batch_ids;
    std::vector<float> batch_dists;

private:
    std::vector<std::uint32_t> stamps_;
    std::uint32_t epoch_ = 0;
};

/// Best-first graph traversal with batched distance evaluation.
SearchResult
search(const ProximityGraph& graph,
       const VectorDataset& dataset,
       std::span<const float> query,
       const SearchParams& params,
       SearchContext& context);

SearchResult
search(const ProximityGraph& graph,
       const VectorDataset& dataset,
       std::span<const float> query,
       const SearchParams& params);

/// Row-major nq x k result matrix; missing slots hold kSentinel / +inf.
struct BatchResult {
    std::size_t query_count = 0;
    std::size_t k = 0;
    std::vector<NodeId> ids;
    std::vector<float> distances;
    std::vector<SearchStats> stats;
    std::vector<double> latency_us;
    double wall_seconds = 0.0;

    std::span<const NodeId>
    row(std::size_t q) const noexcept {
        return {ids.data() + q * k, k};
    }
    /// Queries per second; 0 when nothing ran.
    double
    qps() const noexcept {
        return (query_count == 0 || wall_seconds <= 0.0) ? 0.0 : static_cast<double>(query_count) / wall_seconds;
    }
    double
    mean_distance_computations() const noexcept;
    double
    mean_hops() const noexcept;
};

/// Runs fn(context, query_index, result) for every query on `workers`
/// threads pulling from a shared counter; fills timing fields.
template <typename Fn>
BatchResult
run_queries(std::size_t query_count, std::size_t k, std::size_t node_count, std::size_t workers, Fn&& fn) {
    BatchResult out;
    out.query_count = query_count;
    out.k = k;
    out.ids.assign(query_count * k, kSentinel);
    out.distances.assign(query_count * k, std::numeric_limits<float>::infinity());
    out.stats.resize(query_count);
    out.latency_us.resize(query_count);
    if (query_count == 0) {
        return out;
    }
    workers = std::max<std::size_t>(1, std::min(workers, query_count));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        SearchContext context(node_count);
        for (std::size_t q = next.fetch_add(1); q < query_count; q = next.fetch_add(1)) {
            const auto start = std::chrono::steady_clock::now();
            SearchResult result = fn(context, q);
            const auto stop = std::chrono::steady_clock::now();
            out.latency_us[q] = std::chrono::duration<double, std::micro>(stop - start).count();
            const std::size_t found = std::min(k, result.ids.size());
            std::copy_n(result.ids.begin(), found, out.ids.begin() + static_cast<std::ptrdiff_t>(q * k));
            std::copy_n(result.distances.begin(), found, out.distances.begin() + static_cast<std::ptrdiff_t>(q * k));
            out.stats[q] = std::move(result.stats);
        }
    };
    const auto start = std::chrono::steady_clock::now();
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

/// search() for every query; results are identical for any worker count.
BatchResult
batch_search(const ProximityGraph& graph,
             const VectorDataset& dataset,
             const QuerySet& queries,
             const SearchParams& params,
             std::size_t workers);

/// Ground truth in external ids (row-major nq x k).
struct GroundTruth {
    std::size_t query_count = 0;
    std::size_t k = 0;
    std::vector<NodeId> ids;

    std::span<const NodeId>
    row(std::size_t q) const noexcept {
        return {ids.data() + q * k, k};
    }
};

/// |first k of result ∩ first k of truth| / k.
double
recall_at_k(std::span<const NodeId> result, std::span<const NodeId> truth, std::size_t k);

/// Mean recall over queries. `external_ids` maps internal result ids to the
/// ids used by the ground truth; empty means identity.
double
mean_recall(const BatchResult& results,
            const GroundTruth& truth,
            std::size_t k,
            std::span<const NodeId> external_ids = {});

struct TuneTrial {
    EarlyTermination config;
    double recall = 0.0;
    double mean_distance_computations = 0.0;
};

struct TuneResult {
    std::optional<EarlyTermination> config;  ///< nullopt: no setting met the floor
    double recall = 0.0;
    double mean_distance_computations = 0.0;
    double baseline_recall = 0.0;
    double baseline_mean_distance_computations = 0.0;
    std::vector<TuneTrial> trials;  ///< best tau_max found for each t
};

/// Two-stage tuning with dry-run queries: t starts at 60% of L and tau_max
/// is binary searched for the smallest value meeting recall_floor; t is then
/// swept down to 30% of L and the cheapest qualifying setting is kept.
TuneResult
tune_early_term(const ProximityGraph& graph,
                const VectorDataset& dataset,
                const QuerySet& queries,
                const GroundTruth& truth,
                double recall_floor,
                const SearchParams& base,
                std::size_t workers = 1,
                std::span<const NodeId> external_ids = {});

}  // namespace vexg
