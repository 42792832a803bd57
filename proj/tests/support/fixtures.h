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
#include <random>
#include <string>
#include <vector>

#include "vexg/dataset.h"
#include "vexg/graph.h"

namespace vexg::testing {

/// Uniform [0, 1) vectors from a fixed-seed generator.
inline RawVectors
uniform_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    RawVectors raw{n, dim, std::vector<float>(n * dim)};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (auto& v : raw.values) {
        v = u(rng);
    }
    return raw;
}

inline RawVectors
gaussian_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    RawVectors raw{n, dim, std::vector<float>(n * dim)};
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    for (auto& v : raw.values) {
        v = g(rng);
    }
    return raw;
}

/// 1-D points as a dataset.
inline VectorDataset
line_points(std::initializer_list<float> xs, Metric metric = Metric::SquaredL2) {
    RawVectors raw{xs.size(), 1, std::vector<float>(xs)};
    return build_dataset(raw, metric);
}

inline VectorDataset
plane_points(std::initializer_list<std::pair<float, float>> xs) {
    RawVectors raw{xs.size(), 2, {}};
    for (const auto& [x, y] : xs) {
        raw.values.push_back(x);
        raw.values.push_back(y);
    }
    return build_dataset(raw, Metric::SquaredL2);
}

/// Graph from explicit rows.
inline ProximityGraph
graph_from_rows(std::size_t M, NodeId entry, const std::vector<std::vector<NodeId>>& rows) {
    ProximityGraph g(rows.size(), M, Metric::SquaredL2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        g.set_row(i, rows[i]);
    }
    g.set_entry(entry);
    return g;
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("vexg-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir&
    operator=(const TempDir&) = delete;

    std::filesystem::path
    operator/(const std::string& name) const {
        return path_ / name;
    }
    const std::filesystem::path&
    path() const noexcept {
        return path_;
    }

private:
    std::filesystem::path path_;
};

}  // namespace vexg::testing
