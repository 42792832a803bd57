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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vexg/dataset.h"
#include "vexg/graph.h"
#include "vexg/search.h"

namespace vexg {

inline constexpr std::size_t kCodebookSize = 256;

/// Query-specific lookup table: one row of 256 partial distances per code
/// byte. distance(code) = sum_j table[j][code[j]].
class ADCTable {
public:
    ADCTable() = default;
    explicit ADCTable(std::size_t code_size) : code_size_(code_size), table_(code_size * kCodebookSize, 0.0f) {
    }

    std::size_t
    code_size() const noexcept {
        return code_size_;
    }
    float*
    row(std::size_t j) noexcept {
        return table_.data() + j * kCodebookSize;
    }
    const float*
    row(std::size_t j) const noexcept {
        return table_.data() + j * kCodebookSize;
    }

    float
    distance(const std::uint8_t* code) const noexcept {
        float sum = 0.0f;
        for (std::size_t j = 0; j < code_size_; ++j) {
            sum += table_[j * kCodebookSize + code[j]];
        }
        return sum;
    }
    float
    distance(std::span<const std::uint8_t> code) const noexcept {
        return distance(code.data());
    }

private:
    std::size_t code_size_ = 0;
    std::vector<float> table_;
};

/// 8-bit per-dimension range quantizer over [lo, hi].
class SQCodec {
public:
    SQCodec() = default;

    /// Throws DataError when sizes differ or some hi < lo.
    static SQCodec
    from_bounds(std::vector<float> lo, std::vector<float> hi);

    std::size_t
    dim() const noexcept {
        return lo_.size();
    }
    std::size_t
    code_size() const noexcept {
        return lo_.size();
    }
    std::span<const float>
    lo() const noexcept {
        return lo_;
    }
    std::span<const float>
    hi() const noexcept {
        return hi_;
    }

    void
    encode(std::span<const float> x, std::span<std::uint8_t> code) const;
    void
    decode(std::span<const std::uint8_t> code, std::span<float> x) const;

    ADCTable
    adc_table(std::span<const float> query, Metric metric) const;

    friend bool
    operator==(const SQCodec&, const SQCodec&) = default;

private:
    std::vector<float> lo_;
    std::vector<float> hi_;
};

/// Per-dimension min/max over the dataset (padded lanes included).
SQCodec
train_sq(const VectorDataset& dataset);

/// Product quantizer: m subspaces of sub_dim lanes, 256 centroids each.
/// Input vectors of `dim` lanes are zero-extended to m * sub_dim.
class PQCodec {
public:
    PQCodec() = default;

    /// Throws DataError on inconsistent sizes.
    static PQCodec
    from_codebooks(std::size_t dim, std::size_t m, std::size_t sub_dim, std::vector<float> centroids);

    std::size_t
    dim() const noexcept {
        return dim_;
    }
    std::size_t
    m() const noexcept {
        return m_;
    }
    std::size_t
    sub_dim() const noexcept {
        return sub_dim_;
    }
    std::size_t
    code_size() const noexcept {
        return m_;
    }
    std::span<const float>
    centroids() const noexcept {
        return centroids_;
    }
    std::span<const float>
    centroid(std::size_t subspace, std::size_t c) const noexcept {
        return {centroids_.data() + (subspace * kCodebookSize + c) * sub_dim_, sub_dim_};
    }

    void
    encode(std::span<const float> x, std::span<std::uint8_t> code) const;
    void
    decode(std::span<const std::uint8_t> code, std::span<float> x) const;

    ADCTable
    adc_table(std::span<const float> query, Metric metric) const;

    friend bool
    operator==(const PQCodec&, const PQCodec&) = default;

private:
    std::size_t dim_ = 0;
    std::size_t m_ = 0;
    std::size_t sub_dim_ = 0;
    std::vector<float> centroids_;
};

struct PQTrainReport {
    /// Total squared quantization error after each assignment step.
    std::vector<double> objective;
};

/// Per-subspace k-means (k = 256, k-means++ seeding, `iterations` Lloyd
/// rounds, empty clusters reseeded from the farthest points).
/// Throws DataError when the dataset has fewer than 256 vectors.
PQCodec
train_pq(const VectorDataset& dataset,
         std::size_t m,
         std::size_t iterations,
         std::uint64_t seed,
         PQTrainReport* report = nullptr);

enum class CodecKind : std::uint8_t { None = 0, SQ8 = 1, PQ = 2 };

/// Parsed form of "none", "sq8" or "pq:<m>".
struct QuantizeSpec {
    CodecKind kind = CodecKind::None;
    std::size_t m = 0;  ///< PQ subspaces; 0 picks padded_dim / 4
    std::size_t iterations = 25;
    std::uint64_t seed = 42;

    static QuantizeSpec
    parse(std::string_view text);
    std::string
    to_string() const;
};

/// A trained codec plus the codes of every indexed vector.
class QuantizedVectors {
public:
    using Codec = std::variant<SQCodec, PQCodec>;

    QuantizedVectors() = default;
    QuantizedVectors(Codec codec, std::vector<std::uint8_t> codes, std::size_t count);

    /// Trains per `spec` on the dataset and encodes all rows.
    static QuantizedVectors
    train(const VectorDataset& dataset, const QuantizeSpec& spec);

    CodecKind
    kind() const noexcept {
        return std::holds_alternative<SQCodec>(codec_) ? CodecKind::SQ8 : CodecKind::PQ;
    }
    const Codec&
    codec() const noexcept {
        return codec_;
    }
    std::size_t
    count() const noexcept {
        return count_;
    }
    std::size_t
    code_size() const noexcept {
        return code_size_;
    }
    std::span<const std::uint8_t>
    code(std::size_t i) const noexcept {
        return {codes_.data() + i * code_size_, code_size_};
    }
    std::span<const std::uint8_t>
    codes() const noexcept {
        return codes_;
    }

    ADCTable
    adc_table(std::span<const float> query, Metric metric) const;
    void
    decode(std::size_t i, std::span<float> out) const;

    friend bool
    operator==(const QuantizedVectors&, const QuantizedVectors&) = default;

private:
    Codec codec_;
    std::vector<std::uint8_t> codes_;
    std::size_t count_ = 0;
    std::size_t code_size_ = 0;
};

/// Traversal on code distances; the best max(rerank, k) candidates are then
/// re-scored exactly and the top k returned. rerank = 0 returns code
/// distances unchanged. rerank is clamped to L.
SearchResult
adc_search(const ProximityGraph& graph,
           const VectorDataset& dataset,
           const QuantizedVectors& codes,
           std::span<const float> query,
           const SearchParams& params,
           std::size_t rerank,
           SearchContext& context);

SearchResult
adc_search(const ProximityGraph& graph,
           const VectorDataset& dataset,
           const QuantizedVectors& codes,
           std::span<const float> query,
           const SearchParams& params,
           std::size_t rerank);

BatchResult
adc_batch_search(const ProximityGraph& graph,
                 const VectorDataset& dataset,
                 const QuantizedVectors& codes,
                 const QuerySet& queries,
                 const SearchParams& params,
                 std::size_t rerank,
                 std::size_t workers);

}  // namespace vexg
