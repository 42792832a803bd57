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


#include <iostream>

#include "CLI11.hpp"
#include "commands.h"

using namespace vexg;
using namespace vexg::cli;

namespace {

void
add_query_flags(CLI::App* cmd, QueryArgs& q) {
    cmd->add_option("--index", q.index, "index file")->required();
    cmd->add_option("--queries", q.queries, "query vectors (fvecs/bvecs)")->required();
    cmd->add_option("--k", q.k, "neighbors per query")->capture_default_str();
    cmd->add_option("--efs", q.efs, "search queue size L")->capture_default_str();
    cmd->add_option("--early-term", q.early_term, "t,tau or 'tuned'");
    cmd->add_option("--workers", q.workers, "worker threads (default $VEXG_WORKERS)")->capture_default_str();
    cmd->add_option("--l1d-bytes", q.l1d_bytes, "L1 data cache per worker")->capture_default_str();
    cmd->add_option("--alpha", q.alpha, "share of L1d used by one distance batch")->capture_default_str();
    cmd->add_option("--batch", q.batch, "fixed batch size, 0 derives it from the cache model")->capture_default_str();
    cmd->add_flag("--no-prefetch", q.no_prefetch, "disable software prefetch");
    cmd->add_flag("--use-codes", q.use_codes, "traverse on quantized codes");
    cmd->add_option("--rerank", q.rerank, "exact re-scoring depth with --use-codes")->capture_default_str();
}

void
add_build_flags(CLI::App* cmd, BuildArgs& b) {
    cmd->add_option("--data", b.data, "base vectors (fvecs/bvecs)")->required();
    cmd->add_option("--metric", b.metric, "l2, ip or angular")->capture_default_str();
    cmd->add_option("--M", b.params.M, "out-degree")->capture_default_str();
    cmd->add_option("--K", b.params.K, "bootstrap kNN width")->capture_default_str();
    cmd->add_option("--L-build", b.params.L_build, "queue size during construction")->capture_default_str();
    cmd->add_option("--F", b.params.F, "refinement passes")->capture_default_str();
    cmd->add_option("--seed", b.params.seed, "random seed")->capture_default_str();
    cmd->add_option("--strategy", b.strategy, "edge selection: distance or angle")->capture_default_str();
    cmd->add_option("--prune-alpha", b.prune_alpha, "distance pruning factor (>= 1)")->capture_default_str();
    cmd->add_option("--angle", b.angle, "minimum angle in degrees for angle pruning")->capture_default_str();
    cmd->add_option("--time-budget", b.params.time_budget_seconds, "seconds allowed for refinement, 0 = no limit")
        ->capture_default_str();
    cmd->add_option("--reorder", b.reorder, "none, mst, random or bfs")->capture_default_str();
}

}  // namespace

int
main(int argc, char** argv) {
    CLI::App app{"vexg: graph-based approximate nearest neighbor search"};
    app.require_subcommand(1);

    std::size_t workers = 1;
    IngestArgs ingest;
    GroundtruthArgs gt;
    BuildArgs build;
    SearchArgs search;
    BenchArgs bench;
    TuneArgs tune;
    AblateArgs ablate;

    try {
        workers = default_workers();
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    gt.workers = search.query.workers = bench.query.workers = tune.query.workers = ablate.workers = workers;

    auto* c_ingest = app.add_subcommand("ingest", "convert or generate a vector file");
    c_ingest->add_option("--input", ingest.input, "fvecs or bvecs file");
    c_ingest->add_option("--synthetic", ingest.synthetic, "uniform or gaussian");
    c_ingest->add_option("--n", ingest.n, "vector count (truncates --input)");
    c_ingest->add_option("--dim", ingest.dim, "dimension for synthetic data");
    c_ingest->add_option("--seed", ingest.seed, "random seed")->capture_default_str();
    c_ingest->add_option("--out", ingest.out, "output fvecs")->required();

    auto* c_gt = app.add_subcommand("groundtruth", "exact top-k by full scan");
    c_gt->add_option("--data", gt.data)->required();
    c_gt->add_option("--queries", gt.queries)->required();
    c_gt->add_option("--k", gt.k)->capture_default_str();
    c_gt->add_option("--metric", gt.metric)->capture_default_str();
    c_gt->add_option("--out", gt.out, "output ivecs")->required();
    c_gt->add_option("--workers", gt.workers);

    auto* c_build = app.add_subcommand("build", "build and save an index");
    add_build_flags(c_build, build);
    c_build->add_option("--quantize", build.quantize, "none, sq8 or pq:m")->capture_default_str();
    c_build->add_option("--pq-iterations", build.pq_iterations)->capture_default_str();
    c_build->add_option("--out", build.out, "index file")->required();

    auto* c_search = app.add_subcommand("search", "answer queries");
    add_query_flags(c_search, search.query);
    c_search->add_option("--out", search.out, "result ivecs")->required();
    c_search->add_option("--stats", search.stats, "per-query JSON lines ('-' for stdout)");

    auto* c_bench = app.add_subcommand("bench", "recall / QPS sweep over efs");
    add_query_flags(c_bench, bench.query);
    c_bench->add_option("--gt", bench.groundtruth, "ground truth ivecs")->required();
    c_bench->add_option("--efs-list", bench.efs_list, "comma separated efs values")->delimiter(',')->required();
    c_bench->add_option("--format", bench.format, "table, json or csv")->capture_default_str();
    c_bench->add_option("--out", bench.out, "report file (default stdout)");
    c_bench->add_option("--name", bench.name, "dataset name for the report");

    auto* c_tune = app.add_subcommand("tune", "pick early-termination t,tau from dry-run queries");
    add_query_flags(c_tune, tune.query);
    c_tune->add_option("--gt", tune.groundtruth, "ground truth ivecs")->required();
    c_tune->add_option("--recall-floor", tune.recall_floor)->capture_default_str();
    c_tune->add_flag("--write", tune.write, "store the setting in the index");

    auto* c_ablate = app.add_subcommand("ablate", "Base / +Index / +Early Term. / +SIMD(batch) / +Prefetch");
    add_build_flags(c_ablate, ablate.build);
    c_ablate->add_option("--queries", ablate.queries)->required();
    c_ablate->add_option("--gt", ablate.groundtruth)->required();
    c_ablate->add_option("--k", ablate.k)->capture_default_str();
    c_ablate->add_option("--efs-list", ablate.efs_list)->delimiter(',')->required();
    c_ablate->add_option("--recall-floor", ablate.recall_floor)->capture_default_str();
    c_ablate->add_option("--workers", ablate.workers);
    c_ablate->add_option("--l1d-bytes", ablate.l1d_bytes)->capture_default_str();
    c_ablate->add_option("--alpha", ablate.alpha)->capture_default_str();
    c_ablate->add_option("--format", ablate.format, "table or json")->capture_default_str();
    ablate.build.reorder = "mst";

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*c_ingest) {
            return run_ingest(ingest);
        }
        if (*c_gt) {
            return run_groundtruth(gt);
        }
        if (*c_build) {
            return run_build(build);
        }
        if (*c_search) {
            return run_search(search);
        }
        if (*c_bench) {
            return run_bench(bench);
        }
        if (*c_tune) {
            return run_tune(tune);
        }
        if (*c_ablate) {
            return run_ablate(ablate);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
