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


#include "commands.h"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "json.hpp"
#include "vexg/persistence.h"

namespace vexg::cli {

using nlohmann::json;

namespace {

std::size_t
parse_count(std::string_view text, const char* what) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw UsageError(std::string("bad ") + what + " '" + std::string(text) + "'");
    }
    return value;
}

RawVectors
synthetic(const std::string& kind, std::size_t n, std::size_t dim, std::uint64_t seed) {
    if (n == 0 || dim == 0) {
        throw UsageError("--n and --dim must be positive for synthetic data");
    }
    RawVectors raw{n, dim, std::vector<float>(n * dim)};
    std::mt19937_64 rng(seed);
    if (kind == "uniform") {
        std::uniform_real_distribution<float> u(0.0f, 1.0f);
        for (auto& v : raw.values) {
            v = u(rng);
        }
    } else if (kind == "gaussian") {
        std::normal_distribution<float> g(0.0f, 1.0f);
        for (auto& v : raw.values) {
            v = g(rng);
        }
    } else {
        throw UsageError("unknown synthetic distribution '" + kind + "' (expected uniform or gaussian)");
    }
    return raw;
}

QuerySet
load_queries(const std::string& path, Metric metric, std::size_t dim) {
    const auto raw = load_vectors(path);
    if (raw.count > 0 && raw.dim != dim) {
        throw DataError("queries have dimension " + std::to_string(raw.dim) + ", index has " + std::to_string(dim));
    }
    return build_queries(raw, metric);
}

GroundTruth
load_truth(const std::string& path, std::size_t query_count, std::size_t k) {
    auto truth = groundtruth_from_ivecs(load_ivecs(path));
    if (truth.query_count != query_count) {
        throw DataError("ground truth has " + std::to_string(truth.query_count) + " rows for " +
                        std::to_string(query_count) + " queries");
    }
    if (truth.k < k) {
        throw UsageError("ground truth holds " + std::to_string(truth.k) + " ids per query, k=" + std::to_string(k));
    }
    return truth;
}

BuildOptions
build_options(const BuildArgs& args) {
    BuildOptions options;
    options.params = args.params;
    if (args.strategy == "distance") {
        options.params.strategy = EdgeStrategy::distance_prune(args.prune_alpha);
    } else if (args.strategy == "angle") {
        options.params.strategy = EdgeStrategy::angle_prune(args.angle);
    } else {
        throw UsageError("unknown edge strategy '" + args.strategy + "' (expected distance or angle)");
    }
    options.reorder = parse_reorder(args.reorder);
    options.quantize = QuantizeSpec::parse(args.quantize);
    options.quantize.iterations = args.pq_iterations;
    options.quantize.seed = args.params.seed;
    return options;
}

QueryOptions
query_options(const QueryArgs& args, const Index& index) {
    QueryOptions options;
    options.params.k = args.k;
    options.params.L = args.efs;
    options.params.batch = args.batch;
    options.params.batch_spec.l1d_bytes = args.l1d_bytes;
    options.params.batch_spec.alpha = args.alpha;
    if (args.no_prefetch) {
        options.params.prefetch = nullptr;
    }
    if (args.early_term == "tuned") {
        if (!index.tuned) {
            throw UsageError("index carries no tuned early-termination setting; run tune --write first");
        }
        options.params.early_term = index.tuned;
    } else if (!args.early_term.empty()) {
        options.params.early_term = parse_early_term(args.early_term);
    }
    options.workers = args.workers;
    options.use_codes = args.use_codes;
    options.rerank = args.rerank;
    options.params.validate();
    return options;
}

std::string
describe(const QueryOptions& options) {
    std::string s;
    if (options.params.early_term) {
        s += "early_term=" + std::to_string(options.params.early_term->t) + "," +
             std::to_string(options.params.early_term->tau_max);
    }
    s += (s.empty() ? "batch=" : " batch=") + (options.params.batch == 0 ? std::string("auto") : std::to_string(options.params.batch));
    s += options.params.prefetch ? " prefetch=on" : " prefetch=off";
    if (options.use_codes) {
        s += " codes=on rerank=" + std::to_string(options.rerank);
    }
    return s;
}

void
write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') {
            std::cout << '\n';
        }
        return;
    }
    std::ofstream out(path);
    if (!out || !(out << text)) {
        throw DataError("cannot write " + path);
    }
}

}  // namespace

std::size_t
default_workers() {
    if (const char* env = std::getenv("VEXG_WORKERS"); env != nullptr && *env != '\0') {
        const auto n = parse_count(env, "VEXG_WORKERS");
        if (n == 0) {
            throw UsageError("VEXG_WORKERS must be positive");
        }
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

EarlyTermination
parse_early_term(const std::string& text) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) {
        throw UsageError("--early-term expects t,tau (got '" + text + "')");
    }
    EarlyTermination et;
    et.t = parse_count(std::string_view(text).substr(0, comma), "early-term t");
    et.tau_max = parse_count(std::string_view(text).substr(comma + 1), "early-term tau");
    if (et.tau_max == 0) {
        throw UsageError("early-term tau must be >= 1");
    }
    return et;
}

int
run_ingest(const IngestArgs& args) {
    RawVectors raw;
    if (!args.synthetic.empty()) {
        if (!args.input.empty()) {
            throw UsageError("give either --input or --synthetic, not both");
        }
        raw = synthetic(args.synthetic, args.n, args.dim, args.seed);
    } else if (!args.input.empty()) {
        raw = load_vectors(args.input);
        if (args.n > 0 && args.n < raw.count) {
            raw.values.resize(args.n * raw.dim);
            raw.count = args.n;
        }
    } else {
        throw UsageError("ingest needs --input or --synthetic");
    }
    save_fvecs(args.out, raw);
    std::cout << json{{"out", args.out}, {"count", raw.count}, {"dim", raw.dim}}.dump() << '\n';
    return 0;
}

int
run_groundtruth(const GroundtruthArgs& args) {
    const Metric metric = parse_metric(args.metric);
    const auto data = build_dataset(load_vectors(args.data), metric);
    const auto queries = load_queries(args.queries, metric, data.dim());
    const auto truth = compute_groundtruth(data, queries, args.k, args.workers);
    save_ivecs(args.out, groundtruth_to_ivecs(truth));
    std::cout << json{{"out", args.out}, {"queries", truth.query_count}, {"k", truth.k}}.dump() << '\n';
    return 0;
}

int
run_build(const BuildArgs& args) {
    const Metric metric = parse_metric(args.metric);
    const auto options = build_options(args);
    options.params.validate();
    const auto data = build_dataset(load_vectors(args.data), metric);
    BuildReport report;
    const auto index = build_index(data, options, &report);
    save_index(index, args.out);
    std::cerr << "graph: " << data.count() << " nodes, " << report.check.edges << " edges, max degree "
              << report.check.max_degree << "/" << index.graph.out_degree() << ", reachable " << report.check.reachable
              << "/" << data.count() << "\n"
              << "bandwidth: " << report.bandwidth_before << " -> " << report.bandwidth_after
              << " (reorder=" << reorder_name(options.reorder) << ")\n";
    std::cout << report.to_json() << '\n';
    return 0;
}

int
run_search(const SearchArgs& args) {
    const auto index = load_index(args.query.index);
    const auto queries = load_queries(args.query.queries, index.data.metric(), index.data.dim());
    const auto options = query_options(args.query, index);
    const auto result = search_index(index, queries, options);

    RawIds ids{result.query_count, result.k, std::vector<std::int32_t>(result.ids.size())};
    for (std::size_t i = 0; i < result.ids.size(); ++i) {
        ids.values[i] = result.ids[i] == kSentinel ? -1 : static_cast<std::int32_t>(result.ids[i]);
    }
    save_ivecs(args.out, ids);

    std::string lines;
    for (std::size_t q = 0; q < result.query_count; ++q) {
        const auto& s = result.stats[q];
        lines += json{{"query", q},
                      {"distance_computations", s.distance_computations},
                      {"hops", s.hops},
                      {"latency_us", result.latency_us[q]},
                      {"terminated_early", s.terminated_early}}
                     .dump();
        lines += '\n';
    }
    if (!args.stats.empty()) {
        write_output(args.stats, lines);
    }
    std::cout << json{{"queries", result.query_count},
                      {"qps", result.qps()},
                      {"mean_distance_computations", result.mean_distance_computations()},
                      {"mean_hops", result.mean_hops()},
                      {"distances", "squared for l2 and angular"}}
                     .dump()
              << '\n';
    return 0;
}

int
run_bench(const BenchArgs& args) {
    const auto index = load_index(args.query.index);
    const auto queries = load_queries(args.query.queries, index.data.metric(), index.data.dim());
    const auto truth = load_truth(args.groundtruth, queries.count(), args.query.k);
    const auto options = query_options(args.query, index);
    auto report = vexg::run_bench(index, queries, truth, args.efs_list, args.query.k, options);
    report.dataset = args.name.empty() ? std::filesystem::path(args.query.index).stem().string() : args.name;
    report.params = describe(options);
    for (const auto& w : report.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    if (args.format == "json") {
        write_output(args.out, report.to_json());
    } else if (args.format == "csv") {
        write_output(args.out, report.to_csv());
    } else if (args.format == "table") {
        write_output(args.out, report.to_table());
    } else {
        throw UsageError("unknown format '" + args.format + "' (expected table, json or csv)");
    }
    return 0;
}

int
run_tune(const TuneArgs& args) {
    auto index = load_index(args.query.index);
    const auto queries = load_queries(args.query.queries, index.data.metric(), index.data.dim());
    const auto truth = load_truth(args.groundtruth, queries.count(), args.query.k);
    QueryArgs plain = args.query;
    plain.early_term.clear();
    const auto options = query_options(plain, index);
    const auto tuned = tune_early_term(index.graph, index.data, queries, truth, args.recall_floor, options.params,
                                       options.workers, index.external_ids());
    json out = {{"efs", options.params.L},
                {"recall_floor", args.recall_floor},
                {"baseline_recall", tuned.baseline_recall},
                {"baseline_mean_distance_computations", tuned.baseline_mean_distance_computations}};
    if (tuned.config) {
        out["t"] = tuned.config->t;
        out["tau_max"] = tuned.config->tau_max;
        out["recall"] = tuned.recall;
        out["mean_distance_computations"] = tuned.mean_distance_computations;
    } else {
        out["t"] = nullptr;
        std::cerr << "warning: no early-termination setting reaches recall " << args.recall_floor << " at efs "
                  << options.params.L << '\n';
    }
    std::cout << out.dump() << '\n';
    if (args.write && tuned.config) {
        index.tuned = tuned.config;
        save_index(index, args.query.index);
    }
    return 0;
}

int
run_ablate(const AblateArgs& args) {
    const Metric metric = parse_metric(args.build.metric);
    const auto data = build_dataset(load_vectors(args.build.data), metric);
    const auto queries = load_queries(args.queries, metric, data.dim());
    const auto truth = load_truth(args.groundtruth, queries.count(), args.k);

    auto refined_options = build_options(args.build);
    refined_options.quantize = QuantizeSpec{};
    auto base_options = refined_options;
    base_options.params.F = 0;
    base_options.reorder = ReorderKind::None;
    const auto base = build_index(data, base_options);
    const auto refined = build_index(data, refined_options);

    BatchSpec spec;
    spec.l1d_bytes = args.l1d_bytes;
    spec.alpha = args.alpha;
    const auto report =
        run_ablation(base, refined, queries, truth, args.k, args.efs_list, args.recall_floor, spec, args.workers);
    if (args.format == "json") {
        write_output("", report.to_json());
    } else if (args.format == "table") {
        write_output("", report.to_table());
    } else {
        throw UsageError("unknown format '" + args.format + "' (expected table or json)");
    }
    return 0;
}

}  // namespace vexg::cli
