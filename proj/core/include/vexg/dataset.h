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
#include <span>
#include <string_view>
#include <vector>

#include "vexg/common.h"

namespace vexg {

/// Every metric is "smaller is more similar". Angular is stored as unit
/// vectors and evaluated as squared L2.
enum class Metric : std::uint8_t {
    SquaredL2 = 0,
    NegativeInnerProduct = 1,
    Angular = 2,
};

std::string_view
metric_name(Metric metric) noexcept;

/// Accepts "l2", "ip", "angular" (and the long enum spellings).
Metric
parse_metric(std::string_view name);

/// Vectors as they appear in a file: row-major, unpadded.
struct RawVectors {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<float> values;

    std::span<const float>
    row(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }
};

/// Ground-truth style integer rows (ivecs).
struct RawIds {
    std::size_t count = 0;
    std::size_t dim = 0;
    std::vector<std::int32_t> values;

    std::span<const std::int32_t>
    row(std::size_t i) const {
        return {values.data() + i * dim, dim};
    }
};

RawVectors
load_fvecs(const std::filesystem::path& path);
RawVectors
load_bvecs(const std::filesystem::path& path);
RawIds
load_ivecs(const std::filesystem::path& path);

/// Chooses fvecs or bvecs from the file extension.
RawVectors
load_vectors(const std::filesystem::path& path);

void
save_fvecs(const std::filesystem::path& path, const RawVectors& vectors);
/// Values must be integers in [0, 255].
void
save_bvecs(const std::filesystem::path& path, const RawVectors& vectors);
void
save_ivecs(const std::filesystem::path& path, const RawIds& ids);

/// Contiguous, 64-byte aligned, dimension-padded vector storage.
///
/// Vector i lives at [i * padded_dim, (i + 1) * padded_dim); lanes
/// [dim, padded_dim) are zero. Immutable after construction.
class VectorDataset {
public:
    VectorDataset() = default;

    std::size_t
    count() const noexcept {
        return count_;
    }
    std::size_t
    dim() const noexcept {
        return dim_;
    }
    std::size_t
    padded_dim() const noexcept {
        return padded_dim_;
    }
    Metric
    metric() const noexcept {
        return metric_;
    }
    bool
    empty() const noexcept {
        return count_ == 0;
    }

    /// Full padded row.
    std::span<const float>
    row(std::size_t i) const noexcept {
        return {data_.data() + i * padded_dim_, padded_dim_};
    }

    std::span<const float>
    data() const noexcept {
        return {data_.data(), data_.size()};
    }

    /// Copies the unpadded vectors back out.
    RawVectors
    to_raw() const;

    /// Adopts an already padded buffer verbatim (no normalization). Used by
    /// deserialization and permutation. Throws DataError when the buffer size
    /// or pad lanes are inconsistent.
    static VectorDataset
    from_padded(std::size_t count, std::size_t dim, Metric metric, std::span<const float> padded);

    friend VectorDataset
    build_dataset(const RawVectors& raw, Metric metric);
    friend VectorDataset
    build_queries(const RawVectors& raw, Metric metric);

private:
    static VectorDataset
    build(const RawVectors& raw, Metric metric);

    std::size_t count_ = 0;
    std::size_t dim_ = 0;
    std::size_t padded_dim_ = 0;
    Metric metric_ = Metric::SquaredL2;
    AlignedVector<float> data_;
};

/// Query vectors share the dataset layout; an empty set is allowed.
using QuerySet = VectorDataset;

/// Pads and (for Angular) unit-normalizes. Rejects empty input and zero
/// vectors under Angular.
VectorDataset
build_dataset(const RawVectors& raw, Metric metric);

/// Same transformation as build_dataset but accepts count = 0.
QuerySet
build_queries(const RawVectors& raw, Metric metric);

}  // namespace vexg
