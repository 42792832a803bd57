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
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vexg/dataset.h"
#include "vexg/graph.h"
#include "vexg/index.h"
#include "vexg/quantization.h"
#include "vexg/reorder.h"
#include "vexg/search.h"

namespace vexg {

/// Exact top-k by full scan with double accumulation; ties by lower id.
/// Throws UsageError when k exceeds the dataset size.
GroundTruth
compute_groundtruth(const VectorDataset& data, const QuerySet& queries, std::size_t k, std::size_t workers = 1);

GroundTruth
groundtruth_from_ivecs(const RawIds& ids);
RawIds
groundtruth_to_ivecs(const GroundTruth& truth);

enum class ReorderKind : std::uint8_t { None, Mst, Random, Bfs };

ReorderKind
parse_reorder(std::string_view name);
std::string_view
reorder_name(ReorderKind kind) noexcept;

/// Uniformly random order (baseline).
Permutation
random_permutation(std::size_t n, std::uint64_t seed);

/// Breadth-first order from the entry over the undirected graph, visiting
/// neighbors by ascending degree (Cuthill-McKee style baseline).
Permutation
bfs_permutation(const ProximityGraph& graph);

struct BuildOptions {
    BuildParams params{};
    ReorderKind reorder = ReorderKind::None;
    QuantizeSpec quantize{};
};

struct BuildReport {
    GraphCheck check;
    RefineReport refine;
    std::size_t bandwidth_before = 0;
    std::size_t bandwidth_after = 0;
    double mean_span_before = 0.0;
    double mean_span_after = 0.0;
    double seconds = 0.0;

    std::string
    to_json() const;
};

/// Graph build, optional reorder, optional codec. Throws InvariantError when
/// the result fails check_graph.
Index
build_index(const VectorDataset& data, const BuildOptions& options, BuildReport* report = nullptr);

/// Which vectors drive the traversal.
struct QueryOptions {
    SearchParams params{};
    std::size_t workers = 1;
    bool use_codes = false;  ///< traverse on the index codec (requires one)
    std::size_t rerank = 0;  ///< exact re-scoring depth for code traversal
};

/// batch_search / adc_batch_search on the index, result ids mapped to external ids.
BatchResult
search_index(const Index& index, const QuerySet& queries, const QueryOptions& options);

struct BenchRow {
    std::size_t efs = 0;
    double recall = 0.0;
    double qps = 0.0;
    double mean_distance_computations = 0.0;
    double mean_hops = 0.0;
    double p50_us = 0.0;
    double p99_us = 0.0;
    double latency_sum_us = 0.0;
    double wall_seconds = 0.0;
};

struct BenchReport {
    std::string dataset;
    std::size_t k = 0;
    std::size_t workers = 1;
    std::size_t query_count = 0;
    std::string params;  ///< free-form description of the search setup
    std::vector<BenchRow> rows;
    std::vector<std::string> warnings;

    std::string
    to_json() const;
    std::string
    to_csv() const;
    std::string
    to_table() const;
};

/// Latency percentile by nearest rank, p in [0, 100].
double
percentile(std::vector<double> values, double p);

/// One row per efs. A drop in recall between ascending efs values is
/// recorded as a warning. Throws UsageError on an empty efs list.
BenchReport
run_bench(const Index& index,
          const QuerySet& queries,
          const GroundTruth& truth,
          std::span<const std::size_t> efs_list,
          std::size_t k,
          const QueryOptions& base);

struct AblationRow {
    std::string name;
    std::size_t efs = 0;
    std::optional<EarlyTermination> early_term;
    std::size_t batch = 1;
    bool prefetch = false;
    double recall = 0.0;
    double qps = 0.0;
    double mean_distance_computations = 0.0;
    double mean_hops = 0.0;
    bool met_floor = false;
};

struct AblationReport {
    double recall_floor = 0.0;
    std::size_t k = 0;
    std::vector<AblationRow> rows;

    std::string
    to_json() const;
    std::string
    to_table() const;
};

/// Progressive configurations at matched recall: Base (unrefined graph),
/// +Index (refined graph), +Early Term. (tuned), +SIMD (batched kernel),
/// +Prefetch. Each of the first three picks its cheapest efs from the list
/// that meets recall_floor; the last two reuse the +Early Term. setting.
AblationReport
run_ablation(const Index& base_index,
             const Index& refined_index,
             const QuerySet& queries,
             const GroundTruth& truth,
             std::size_t k,
             std::span<const std::size_t> efs_list,
             double recall_floor,
             const BatchSpec& batch_spec,
             std::size_t workers);

/// Three-stage handle: configure, Add(n, x) to build, Search(nq, q, k, nt).
class Library {
public:
    enum class State : std::uint8_t { Configured, Built, Ready };

    struct Config {
        std::size_t dim = 0;
        Metric metric = Metric::SquaredL2;
        BuildOptions build{};
        std::size_t efs = 100;
        std::optional<EarlyTermination> early_term;
        BatchSpec batch_spec{};
    };

    explicit Library(Config config);

    /// Builds the index from n row-major vectors of config.dim floats.
    void
    add(std::size_t n, std::span<const float> vectors);

    /// Top-k of nq row-major queries on nt threads; ids are the positions
    /// passed to add().
    BatchResult
    search(std::size_t nq, std::span<const float> queries, std::size_t k, std::size_t nt) const;

    void
    save(const std::filesystem::path& path) const;
    static Library
    load(const std::filesystem::path& path, Config config);

    State
    state() const noexcept {
        return state_;
    }
    const Index&
    index() const;
    const BuildReport&
    build_report() const noexcept {
        return report_;
    }

private:
    Config config_;
    State state_ = State::Configured;
    Index index_;
    BuildReport report_;
};

}  // namespace vexg
