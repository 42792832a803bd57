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


#include "vexg/search.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_set>

#include "traverse.h"

namespace vexg {

void
CandidateQueue::reset(std::size_t capacity) {
    capacity_ = capacity;
    cursor_ = 0;
    entries_.clear();
    entries_.reserve(capacity + 1);
}

std::size_t
CandidateQueue::insert(NodeId id, float distance) {
    const auto it = std::upper_bound(entries_.begin(), entries_.end(), distance,
                                     [](float d, const Entry& e) { return d < e.distance; });
    const auto index = static_cast<std::size_t>(it - entries_.begin());
    if (index >= capacity_) {
        return capacity_ + 1;
    }
    entries_.insert(it, Entry{id, distance, false});
    if (entries_.size() > capacity_) {
        entries_.pop_back();
    }
    cursor_ = std::min(cursor_, index);
    return index + 1;
}

std::optional<NodeId>
CandidateQueue::pop_nearest_unvisited() noexcept {
    while (cursor_ < entries_.size() && entries_[cursor_].visited) {
        ++cursor_;
    }
    if (cursor_ == entries_.size()) {
        return std::nullopt;
    }
    entries_[cursor_].visited = true;
    return entries_[cursor_++].id;
}

std::optional<NodeId>
CandidateQueue::peek_nearest_unvisited() const noexcept {
    for (std::size_t i = cursor_; i < entries_.size(); ++i) {
        if (!entries_[i].visited) {
            return entries_[i].id;
        }
    }
    return std::nullopt;
}

bool
early_term_check(std::span<const std::uint32_t> positions, std::size_t t, std::size_t tau_max) {
    if (tau_max == 0 || positions.size() < tau_max) {
        return false;
    }
    return std::all_of(positions.end() - static_cast<std::ptrdiff_t>(tau_max), positions.end(),
                       [t](std::uint32_t p) { return p > t; });
}

void
SearchParams::validate() const {
    if (L == 0) {
        throw UsageError("queue size L must be positive");
    }
    if (k == 0 || k > L) {
        throw UsageError("k must satisfy 1 <= k <= L (k=" + std::to_string(k) + ", L=" + std::to_string(L) + ")");
    }
    if (early_term) {
        if (early_term->t >= L) {
            throw UsageError("early termination threshold t must be < L");
        }
        if (early_term->tau_max == 0) {
            throw UsageError("early termination patience tau_max must be >= 1");
        }
    }
}

std::size_t
SearchParams::resolved_batch(std::size_t row_floats, std::size_t out_degree) const {
    const std::size_t cap = std::max<std::size_t>(out_degree, 1);
    if (batch != 0) {
        return std::min(batch, cap);
    }
    return compute_batch_size(batch_spec, row_floats, cap);
}

SearchContext::SearchContext(std::size_t node_count) : stamps_(node_count, 0) {
}

void
SearchContext::begin(std::size_t node_count, std::size_t capacity) {
    if (stamps_.size() < node_count) {
        stamps_.assign(node_count, 0);
        epoch_ = 0;
    }
    if (++epoch_ == 0) {
        std::fill(stamps_.begin(), stamps_.end(), 0);
        epoch_ = 1;
    }
    queue.reset(capacity);
    batch_ids.clear();
}

SearchResult
search(const ProximityGraph& graph,
       const VectorDataset& dataset,
       std::span<const float> query,
       const SearchParams& params,
       SearchContext& context) {
    if (graph.node_count() != dataset.count()) {
        throw UsageError("graph and dataset sizes differ");
    }
    if (query.size() != dataset.padded_dim()) {
        throw UsageError("query must be padded to " + std::to_string(dataset.padded_dim()) + " lanes, got " +
                         std::to_string(query.size()));
    }
    const float* base = dataset.data().data();
    const std::size_t stride = dataset.padded_dim();
    const Metric metric = dataset.metric();
    return detail::traverse(
        graph,
        [&](std::span<const NodeId> ids, float* out) {
            detail::distance_batch(query.data(), base, stride, ids, metric, out);
        },
        [&](std::span<const NodeId> ids) {
            for (const NodeId id : ids) {
                params.prefetch(base + static_cast<std::size_t>(id) * stride, stride * sizeof(float));
            }
        },
        params, stride, context);
}

SearchResult
search(const ProximityGraph& graph,
       const VectorDataset& dataset,
       std::span<const float> query,
       const SearchParams& params) {
    SearchContext context(graph.node_count());
    return search(graph, dataset, query, params, context);
}

double
BatchResult::mean_distance_computations() const noexcept {
    if (stats.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : stats) {
        total += static_cast<double>(s.distance_computations);
    }
    return total / static_cast<double>(stats.size());
}

double
BatchResult::mean_hops() const noexcept {
    if (stats.empty()) {
        return 0.0;
    }
    double total = 0.0;
    for (const auto& s : stats) {
        total += static_cast<double>(s.hops);
    }
    return total / static_cast<double>(stats.size());
}

BatchResult
batch_search(const ProximityGraph& graph,
             const VectorDataset& dataset,
             const QuerySet& queries,
             const SearchParams& params,
             std::size_t workers) {
    params.validate();
    if (queries.count() > 0 && queries.padded_dim() != dataset.padded_dim()) {
        throw UsageError("query dimension does not match the dataset");
    }
    return run_queries(queries.count(), params.k, graph.node_count(), workers,
                       [&](SearchContext& context, std::size_t q) {
                           return search(graph, dataset, queries.row(q), params, context);
                       });
}

double
recall_at_k(std::span<const NodeId> result, std::span<const NodeId> truth, std::size_t k) {
    if (k == 0) {
        throw UsageError("recall@k needs k >= 1");
    }
    const auto r = result.first(std::min(k, result.size()));
    const auto t = truth.first(std::min(k, truth.size()));
    std::unordered_set<NodeId> truth_set(t.begin(), t.end());
    std::unordered_set<NodeId> seen;
    std::size_t hits = 0;
    for (const NodeId id : r) {
        if (id != kSentinel && truth_set.count(id) != 0 && seen.insert(id).second) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(k);
}

double
mean_recall(const BatchResult& results, const GroundTruth& truth, std::size_t k, std::span<const NodeId> external_ids) {
    if (results.query_count != truth.query_count) {
        throw UsageError("result and ground truth query counts differ");
    }
    if (k > results.k || k > truth.k) {
        throw UsageError("recall@" + std::to_string(k) + " needs at least k results and k ground-truth ids");
    }
    if (results.query_count == 0) {
        return 0.0;
    }
    std::vector<NodeId> mapped(k);
    double total = 0.0;
    for (std::size_t q = 0; q < results.query_count; ++q) {
        const auto row = results.row(q);
        for (std::size_t i = 0; i < k; ++i) {
            const NodeId id = row[i];
            mapped[i] = (external_ids.empty() || id == kSentinel) ? id : external_ids[id];
        }
        total += recall_at_k(mapped, truth.row(q), k);
    }
    return total / static_cast<double>(results.query_count);
}

TuneResult
tune_early_term(const ProximityGraph& graph,
                const VectorDataset& dataset,
                const QuerySet& queries,
                const GroundTruth& truth,
                double recall_floor,
                const SearchParams& base,
                std::size_t workers,
                std::span<const NodeId> external_ids) {
    base.validate();
    if (queries.count() == 0) {
        throw UsageError("tuning needs at least one dry-run query");
    }
    const std::size_t L = base.L;
    SearchParams params = base;
    params.record_insert_positions = false;

    TuneResult out;
    params.early_term.reset();
    {
        const auto baseline = batch_search(graph, dataset, queries, params, workers);
        out.baseline_recall = mean_recall(baseline, truth, base.k, external_ids);
        out.baseline_mean_distance_computations = baseline.mean_distance_computations();
    }

    std::map<std::pair<std::size_t, std::size_t>, TuneTrial> cache;
    auto evaluate = [&](std::size_t t, std::size_t tau) -> const TuneTrial& {
        const auto key = std::make_pair(t, tau);
        if (auto it = cache.find(key); it != cache.end()) {
            return it->second;
        }
        params.early_term = EarlyTermination{t, tau};
        const auto run = batch_search(graph, dataset, queries, params, workers);
        TuneTrial trial{*params.early_term, mean_recall(run, truth, base.k, external_ids),
                        run.mean_distance_computations()};
        return cache.emplace(key, trial).first->second;
    };

    // Smallest tau_max meeting the floor at threshold t, assuming recall grows with patience.
    auto smallest_tau = [&](std::size_t t) -> std::optional<TuneTrial> {
        if (evaluate(t, L).recall < recall_floor) {
            return std::nullopt;
        }
        std::size_t lo = 1;
        std::size_t hi = L;
        while (lo < hi) {
            const std::size_t mid = lo + (hi - lo) / 2;
            if (evaluate(t, mid).recall >= recall_floor) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return evaluate(t, hi);
    };

    auto threshold = [L](double fraction) {
        const auto t = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(L)));
        return std::min(t, L - 1);
    };

    std::optional<TuneTrial> best;
    for (const double fraction : {0.6, 0.5, 0.4, 0.3}) {
        const std::size_t t = threshold(fraction);
        if (const auto trial = smallest_tau(t)) {
            out.trials.push_back(*trial);
            if (!best || trial->mean_distance_computations <= best->mean_distance_computations) {
                best = trial;
            }
        }
    }
    if (best) {
        out.config = best->config;
        out.recall = best->recall;
        out.mean_distance_computations = best->mean_distance_computations;
    }
    return out;
}

}  // namespace vexg
