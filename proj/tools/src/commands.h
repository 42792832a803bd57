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
#include <optional>
#include <string>
#include <vector>

#include "vexg/bench.h"

namespace vexg::cli {

/// Worker count from VEXG_WORKERS, else the hardware thread count.
std::size_t
default_workers();

/// "t,tau" -> EarlyTermination; throws UsageError.
EarlyTermination
parse_early_term(const std::string& text);

struct IngestArgs {
    std::string input;
    std::string synthetic;  ///< uniform | gaussian
    std::size_t n = 0;
    std::size_t dim = 0;
    std::uint64_t seed = 1;
    std::string out;
};

struct GroundtruthArgs {
    std::string data;
    std::string queries;
    std::size_t k = 10;
    std::string metric = "l2";
    std::string out;
    std::size_t workers = 1;
};

struct BuildArgs {
    std::string data;
    std::string metric = "l2";
    std::string out;
    BuildParams params{};
    std::string strategy = "distance";
    double prune_alpha = 1.0;
    double angle = 60.0;
    std::string reorder = "none";
    std::string quantize = "none";
    std::size_t pq_iterations = 25;
};

struct QueryArgs {
    std::string index;
    std::string queries;
    std::size_t k = 10;
    std::size_t efs = 100;
    std::string early_term;  ///< "t,tau", "tuned" or empty
    std::size_t workers = 1;
    std::size_t l1d_bytes = 64 * 1024;
    double alpha = 0.5;
    std::size_t batch = 0;
    bool no_prefetch = false;
    bool use_codes = false;
    std::size_t rerank = 0;
};

struct SearchArgs {
    QueryArgs query;
    std::string out;
    std::string stats;
};

struct BenchArgs {
    QueryArgs query;
    std::string groundtruth;
    std::vector<std::size_t> efs_list;
    std::string format = "table";
    std::string out;
    std::string name;
};

struct TuneArgs {
    QueryArgs query;
    std::string groundtruth;
    double recall_floor = 0.95;
    bool write = false;
};

struct AblateArgs {
    BuildArgs build;
    std::string queries;
    std::string groundtruth;
    std::size_t k = 10;
    std::vector<std::size_t> efs_list;
    double recall_floor = 0.95;
    std::size_t workers = 1;
    std::size_t l1d_bytes = 64 * 1024;
    double alpha = 0.5;
    std::string format = "table";
};

int
run_ingest(const IngestArgs& args);
int
run_groundtruth(const GroundtruthArgs& args);
int
run_build(const BuildArgs& args);
int
run_search(const SearchArgs& args);
int
run_bench(const BenchArgs& args);
int
run_tune(const TuneArgs& args);
int
run_ablate(const AblateArgs& args);

}  // namespace vexg::cli
