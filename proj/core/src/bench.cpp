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


#include "vexg/bench.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "vexg/persistence.h"

namespace vexg {

using nlohmann::json;

GroundTruth
compute_groundtruth(const VectorDataset& data, const QuerySet& queries, std::size_t k, std::size_t workers) {
    const std::size_t n = data.count();
    if (k == 0 || k > n) {
        throw UsageError("ground truth k must lie in [1, " + std::to_string(n) + "]");
    }
    if (queries.count() > 0 && queries.padded_dim() != data.padded_dim()) {
        throw UsageError("query dimension does not match the dataset");
    }
    GroundTruth truth;
    truth.query_count = queries.count();
    truth.k = k;
    truth.ids.assign(queries.count() * k, kSentinel);
    const bool inner = data.metric() == Metric::NegativeInnerProduct;
    const std::size_t dim = data.dim();

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        std::vector<std::pair<double, NodeId>> scored(n);
        for (std::size_t q = next.fetch_add(1); q < queries.count(); q = next.fetch_add(1)) {
            const auto qv = queries.row(q);
            for (std::size_t i = 0; i < n; ++i) {
                const auto x = data.row(i);
                double acc = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    if (inner) {
                        acc += static_cast<double>(qv[j]) * x[j];
                    } else {
                        const double d = static_cast<double>(qv[j]) - x[j];
                        acc += d * d;
                    }
                }
                scored[i] = {inner ? -acc : acc, static_cast<NodeId>(i)};
            }
            std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
            for (std::size_t j = 0; j < k; ++j) {
                truth.ids[q * k + j] = scored[j].second;
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, queries.count()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    return truth;
}

GroundTruth
groundtruth_from_ivecs(const RawIds& ids) {
    GroundTruth truth;
    truth.query_count = ids.count;
    truth.k = ids.dim;
    truth.ids.reserve(ids.values.size());
    for (const auto v : ids.values) {
        if (v < 0) {
            throw DataError("negative id in ground truth");
        }
        truth.ids.push_back(static_cast<NodeId>(v));
    }
    return truth;
}

RawIds
groundtruth_to_ivecs(const GroundTruth& truth) {
    RawIds ids;
    ids.count = truth.query_count;
    ids.dim = truth.k;
    ids.values.reserve(truth.ids.size());
    for (const auto v : truth.ids) {
        ids.values.push_back(v == kSentinel ? -1 : static_cast<std::int32_t>(v));
    }
    return ids;
}

ReorderKind
parse_reorder(std::string_view name) {
    if (name == "none") {
        return ReorderKind::None;
    }
    if (name == "mst") {
        return ReorderKind::Mst;
    }
    if (name == "random") {
        return ReorderKind::Random;
    }
    if (name == "bfs") {
        return ReorderKind::Bfs;
    }
    throw UsageError("unknown reorder '" + std::string(name) + "' (expected none, mst, random or bfs)");
}

std::string_view
reorder_name(ReorderKind kind) noexcept {
    switch (kind) {
        case ReorderKind::None:
            return "none";
        case ReorderKind::Mst:
            return "mst";
        case ReorderKind::Random:
            return "random";
        case ReorderKind::Bfs:
            return "bfs";
    }
    return "none";
}

Permutation
random_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return Permutation::from_order(order);
}

Permutation
bfs_permutation(const ProximityGraph& graph) {
    const std::size_t n = graph.node_count();
    std::vector<std::vector<NodeId>> undirected(n);
    for (std::size_t u = 0; u < n; ++u) {
        for (const NodeId v : graph.neighbors(u)) {
            undirected[u].push_back(v);
            undirected[v].push_back(static_cast<NodeId>(u));
        }
    }
    for (auto& adj : undirected) {
        std::sort(adj.begin(), adj.end());
        adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
    }
    for (auto& adj : undirected) {
        std::stable_sort(adj.begin(), adj.end(),
                         [&](NodeId a, NodeId b) { return undirected[a].size() < undirected[b].size(); });
    }
    std::vector<char> seen(n, 0);
    std::vector<NodeId> order;
    order.reserve(n);
    for (std::size_t start = 0; order.size() < n; ++start) {
        const NodeId root = start == 0 ? graph.entry() : static_cast<NodeId>(start - 1);
        if (seen[root]) {
            continue;
        }
        std::deque<NodeId> frontier{root};
        seen[root] = 1;
        while (!frontier.empty()) {
            const NodeId u = frontier.front();
            frontier.pop_front();
            order.push_back(u);
            for (const NodeId v : undirected[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    frontier.push_back(v);
                }
            }
        }
    }
    return Permutation::from_order(order);
}

std::string
BuildReport::to_json() const {
    json j;
    j["ok"] = check.ok;
    if (!check.ok) {
        j["problem"] = check.problem;
    }
    j["reachable"] = check.reachable;
    j["edges"] = check.edges;
    j["max_degree"] = check.max_degree;
    j["refine_passes"] = refine.passes;
    j["refine_stabilized"] = refine.stabilized;
    j["bandwidth_before"] = bandwidth_before;
    j["bandwidth_after"] = bandwidth_after;
    j["mean_span_before"] = mean_span_before;
    j["mean_span_after"] = mean_span_after;
    j["seconds"] = seconds;
    return j.dump();
}

Index
build_index(const VectorDataset& data, const BuildOptions& options, BuildReport* report) {
    const auto start = std::chrono::steady_clock::now();
    BuildReport local;
    Index index;
    index.graph = build_graph(data, options.params, &local.refine);
    const auto identity = Permutation::identity(data.count());
    local.bandwidth_before = bandwidth(index.graph, identity);
    local.mean_span_before = mean_edge_span(index.graph, identity);

    std::optional<Permutation> perm;
    switch (options.reorder) {
        case ReorderKind::None:
            break;
        case ReorderKind::Mst:
            perm = reorder(index.graph, data);
            break;
        case ReorderKind::Random:
            perm = random_permutation(data.count(), options.params.seed);
            break;
        case ReorderKind::Bfs:
            perm = bfs_permutation(index.graph);
            break;
    }
    if (perm) {
        local.bandwidth_after = bandwidth(index.graph, *perm);
        local.mean_span_after = mean_edge_span(index.graph, *perm);
        auto [graph, moved] = apply_permutation(index.graph, data, *perm);
        index.graph = std::move(graph);
        index.data = std::move(moved);
        index.permutation = std::move(perm);
    } else {
        local.bandwidth_after = local.bandwidth_before;
        local.mean_span_after = local.mean_span_before;
        index.data = data;
    }
    if (options.quantize.kind != CodecKind::None) {
        index.quantized = QuantizedVectors::train(index.data, options.quantize);
    }
    local.check = check_graph(index.graph);
    local.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (report != nullptr) {
        *report = local;
    }
    if (!local.check.ok) {
        throw InvariantError("built graph violates invariants: " + local.check.problem);
    }
    return index;
}

BatchResult
search_index(const Index& index, const QuerySet& queries, const QueryOptions& options) {
    BatchResult result;
    if (options.use_codes) {
        if (!index.quantized) {
            throw UsageError("index has no codec; rebuild with --quantize");
        }
        result = adc_batch_search(index.graph, index.data, *index.quantized, queries, options.params, options.rerank,
                                  options.workers);
    } else {
        result = batch_search(index.graph, index.data, queries, options.params, options.workers);
    }
    map_to_external(index, result);
    return result;
}

double
percentile(std::vector<double> values, double p) {
    if (values.empty()) {
        return 0.0;
    }
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size()));
    const auto index = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
    return values[std::min(index, values.size() - 1)];
}

BenchReport
run_bench(const Index& index,
          const QuerySet& queries,
          const GroundTruth& truth,
          std::span<const std::size_t> efs_list,
          std::size_t k,
          const QueryOptions& base) {
    if (efs_list.empty()) {
        throw UsageError("bench needs at least one efs value");
    }
    BenchReport report;
    report.k = k;
    report.workers = base.workers;
    report.query_count = queries.count();
    for (const std::size_t efs : efs_list) {
        QueryOptions options = base;
        options.params.k = k;
        options.params.L = efs;
        const auto result = search_index(index, queries, options);
        BenchRow row;
        row.efs = efs;
        row.recall = queries.count() == 0 ? 0.0 : mean_recall(result, truth, k);
        row.qps = result.qps();
        row.mean_distance_computations = result.mean_distance_computations();
        row.mean_hops = result.mean_hops();
        row.p50_us = percentile(result.latency_us, 50.0);
        row.p99_us = percentile(result.latency_us, 99.0);
        row.latency_sum_us = std::accumulate(result.latency_us.begin(), result.latency_us.end(), 0.0);
        row.wall_seconds = result.wall_seconds;
        if (!report.rows.empty() && row.recall + 1e-12 < report.rows.back().recall && efs > report.rows.back().efs) {
            std::ostringstream msg;
            msg << "recall dropped from " << report.rows.back().recall << " at efs=" << report.rows.back().efs << " to "
                << row.recall << " at efs=" << efs;
            report.warnings.push_back(msg.str());
        }
        report.rows.push_back(row);
    }
    return report;
}

std::string
BenchReport::to_json() const {
    json j;
    j["environment"] = {{"dataset", dataset}, {"k", k},       {"workers", workers},
                        {"queries", query_count}, {"params", params}};
    j["rows"] = json::array();
    for (const auto& r : rows) {
        j["rows"].push_back({{"efs", r.efs},
                             {"recall", r.recall},
                             {"qps", r.qps},
                             {"mean_distance_computations", r.mean_distance_computations},
                             {"mean_hops", r.mean_hops},
                             {"p50_us", r.p50_us},
                             {"p99_us", r.p99_us}});
    }
    j["warnings"] = warnings;
    return j.dump();
}

std::string
BenchReport::to_csv() const {
    std::ostringstream out;
    out << "efs,recall,qps,mean_distance_computations,mean_hops,p50_us,p99_us\n";
    for (const auto& r : rows) {
        out << r.efs << ',' << r.recall << ',' << r.qps << ',' << r.mean_distance_computations << ',' << r.mean_hops
            << ',' << r.p50_us << ',' << r.p99_us << '\n';
    }
    return out.str();
}

std::string
BenchReport::to_table() const {
    std::ostringstream out;
    out << "# dataset=" << dataset << " queries=" << query_count << " k=" << k << " workers=" << workers;
    if (!params.empty()) {
        out << " " << params;
    }
    out << "\n# distances are squared for l2/angular\n";
    out << std::setw(8) << "efs" << std::setw(10) << "recall" << std::setw(12) << "qps" << std::setw(12) << "dist_comp"
        << std::setw(10) << "hops" << std::setw(10) << "p50_us" << std::setw(10) << "p99_us" << '\n';
    out << std::fixed;
    for (const auto& r : rows) {
        out << std::setw(8) << r.efs << std::setw(10) << std::setprecision(4) << r.recall << std::setw(12)
            << std::setprecision(1) << r.qps << std::setw(12) << r.mean_distance_computations << std::setw(10)
            << r.mean_hops << std::setw(10) << r.p50_us << std::setw(10) << r.p99_us << '\n';
    }
    for (const auto& w : warnings) {
        out << "warning: " << w << '\n';
    }
    return out.str();
}

namespace {

AblationRow
measure(const std::string& name,
        const Index& index,
        const QuerySet& queries,
        const GroundTruth& truth,
        const SearchParams& params,
        std::size_t workers,
        double floor) {
    QueryOptions options;
    options.params = params;
    options.workers = workers;
    const auto result = search_index(index, queries, options);
    AblationRow row;
    row.name = name;
    row.efs = params.L;
    row.early_term = params.early_term;
    row.batch = params.resolved_batch(index.data.padded_dim(), index.graph.out_degree());
    row.prefetch = params.prefetch != nullptr;
    row.recall = mean_recall(result, truth, params.k);
    row.qps = result.qps();
    row.mean_distance_computations = result.mean_distance_computations();
    row.mean_hops = result.mean_hops();
    row.met_floor = row.recall >= floor;
    return row;
}

}  // namespace

AblationReport
run_ablation(const Index& base_index,
             const Index& refined_index,
             const QuerySet& queries,
             const GroundTruth& truth,
             std::size_t k,
             std::span<const std::size_t> efs_list,
             double recall_floor,
             const BatchSpec& batch_spec,
             std::size_t workers) {
    if (efs_list.empty()) {
        throw UsageError("ablation needs at least one efs value");
    }
    std::vector<std::size_t> efs(efs_list.begin(), efs_list.end());
    std::sort(efs.begin(), efs.end());

    SearchParams scalar;
    scalar.k = k;
    scalar.batch = 1;
    scalar.prefetch = nullptr;
    scalar.batch_spec = batch_spec;

    AblationReport report;
    report.recall_floor = recall_floor;
    report.k = k;

    // Cheapest efs meeting the floor, or the largest efs when none does.
    auto sweep = [&](const std::string& name, const Index& index) {
        std::vector<AblationRow> rows;
        for (const std::size_t L : efs) {
            SearchParams p = scalar;
            p.L = L;
            rows.push_back(measure(name, index, queries, truth, p, workers, recall_floor));
            if (rows.back().met_floor) {
                break;
            }
        }
        return rows.back();
    };

    report.rows.push_back(sweep("Base", base_index));
    const auto index_row = sweep("+Index", refined_index);
    report.rows.push_back(index_row);

    // Tune early termination at every efs whose plain recall meets the floor.
    SearchParams best = scalar;
    best.L = index_row.efs;
    double best_cost = index_row.mean_distance_computations;
    for (const std::size_t L : efs) {
        if (L < index_row.efs) {
            continue;
        }
        SearchParams p = scalar;
        p.L = L;
        const auto tuned = tune_early_term(refined_index.graph, refined_index.data, queries, truth, recall_floor, p,
                                           workers, refined_index.external_ids());
        if (tuned.config && tuned.mean_distance_computations < best_cost) {
            best_cost = tuned.mean_distance_computations;
            best = p;
            best.early_term = tuned.config;
        }
    }
    report.rows.push_back(measure("+Early Term.", refined_index, queries, truth, best, workers, recall_floor));

    SearchParams batched = best;
    batched.batch = 0;
    report.rows.push_back(measure("+SIMD(batch)", refined_index, queries, truth, batched, workers, recall_floor));

    SearchParams prefetched = batched;
    prefetched.prefetch = prefetch_lines;
    report.rows.push_back(measure("+Prefetch", refined_index, queries, truth, prefetched, workers, recall_floor));
    return report;
}

std::string
AblationReport::to_json() const {
    json j;
    j["recall_floor"] = recall_floor;
    j["k"] = k;
    j["rows"] = json::array();
    for (const auto& r : rows) {
        json row = {{"name", r.name},
                    {"efs", r.efs},
                    {"batch", r.batch},
                    {"prefetch", r.prefetch},
                    {"recall", r.recall},
                    {"qps", r.qps},
                    {"mean_distance_computations", r.mean_distance_computations},
                    {"mean_hops", r.mean_hops},
                    {"met_floor", r.met_floor}};
        if (r.early_term) {
            row["early_term"] = {{"t", r.early_term->t}, {"tau_max", r.early_term->tau_max}};
        }
        j["rows"].push_back(row);
    }
    return j.dump();
}

std::string
AblationReport::to_table() const {
    std::ostringstream out;
    out << "# recall floor " << recall_floor << " at k=" << k << "\n";
    out << std::left << std::setw(14) << "config" << std::right << std::setw(6) << "efs" << std::setw(10) << "t,tau"
        << std::setw(7) << "B" << std::setw(10) << "recall" << std::setw(12) << "qps" << std::setw(12) << "dist_comp"
        << std::setw(10) << "hops" << std::setw(12) << "d_qps%" << std::setw(12) << "d_dist%" << '\n';
    out << std::fixed;
    const AblationRow* base = rows.empty() ? nullptr : &rows.front();
    for (const auto& r : rows) {
        std::string et = r.early_term ? std::to_string(r.early_term->t) + "," + std::to_string(r.early_term->tau_max)
                                      : "-";
        const double dq = base && base->qps > 0 ? 100.0 * (r.qps / base->qps - 1.0) : 0.0;
        const double dd = base && base->mean_distance_computations > 0
                              ? 100.0 * (r.mean_distance_computations / base->mean_distance_computations - 1.0)
                              : 0.0;
        out << std::left << std::setw(14) << r.name << std::right << std::setw(6) << r.efs << std::setw(10) << et
            << std::setw(7) << r.batch << std::setw(10) << std::setprecision(4) << r.recall << std::setw(12)
            << std::setprecision(1) << r.qps << std::setw(12) << r.mean_distance_computations << std::setw(10)
            << r.mean_hops << std::setw(12) << dq << std::setw(12) << dd << (r.met_floor ? "" : "  (below floor)")
            << '\n';
    }
    return out.str();
}

Library::Library(Config config) : config_(std::move(config)) {
    if (config_.dim == 0) {
        throw UsageError("library dimension must be positive");
    }
    config_.build.params.validate();
}

void
Library::add(std::size_t n, std::span<const float> vectors) {
    if (state_ != State::Configured) {
        throw UsageError("Add is only allowed once, on a freshly configured handle");
    }
    if (vectors.size() != n * config_.dim) {
        throw UsageError("Add expects n * dim floats");
    }
    RawVectors raw{n, config_.dim, std::vector<float>(vectors.begin(), vectors.end())};
    const auto data = build_dataset(raw, config_.metric);
    index_ = build_index(data, config_.build, &report_);
    state_ = State::Built;
    index_.tuned = config_.early_term;
    state_ = State::Ready;
}

BatchResult
Library::search(std::size_t nq, std::span<const float> queries, std::size_t k, std::size_t nt) const {
    if (state_ != State::Ready) {
        throw UsageError("Search requires a built index");
    }
    if (queries.size() != nq * config_.dim) {
        throw UsageError("Search expects nq * dim floats");
    }
    RawVectors raw{nq, config_.dim, std::vector<float>(queries.begin(), queries.end())};
    const auto qs = build_queries(raw, config_.metric);
    QueryOptions options;
    options.params.k = k;
    options.params.L = std::max(config_.efs, k);
    options.params.batch_spec = config_.batch_spec;
    options.params.early_term = index_.tuned;
    if (options.params.early_term && options.params.early_term->t >= options.params.L) {
        options.params.early_term.reset();
    }
    options.workers = std::max<std::size_t>(1, nt);
    return search_index(index_, qs, options);
}

void
Library::save(const std::filesystem::path& path) const {
    if (state_ != State::Ready) {
        throw UsageError("nothing to save before Add");
    }
    save_index(index_, path);
}

Library
Library::load(const std::filesystem::path& path, Config config) {
    Library lib(std::move(config));
    lib.index_ = load_index(path);
    if (lib.index_.data.dim() != lib.config_.dim || lib.index_.data.metric() != lib.config_.metric) {
        throw UsageError("loaded index does not match the configured dimension or metric");
    }
    if (!lib.config_.early_term) {
        lib.config_.early_term = lib.index_.tuned;
    }
    lib.state_ = State::Ready;
    return lib;
}

const Index&
Library::index() const {
    if (state_ == State::Configured) {
        throw UsageError("no index before Add");
    }
    return index_;
}

}  // namespace vexg
