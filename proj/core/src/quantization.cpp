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


#include "vexg/quantization.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "traverse.h"
#include "vexg/distance.h"

namespace vexg {

SQCodec
SQCodec::from_bounds(std::vector<float> lo, std::vector<float> hi) {
    if (lo.size() != hi.size() || lo.empty()) {
        throw DataError("scalar quantizer bounds must be non-empty and of equal length");
    }
    for (std::size_t j = 0; j < lo.size(); ++j) {
        if (!(hi[j] >= lo[j]) || !std::isfinite(lo[j]) || !std::isfinite(hi[j])) {
            throw DataError("scalar quantizer bound hi < lo in dimension " + std::to_string(j));
        }
    }
    SQCodec codec;
    codec.lo_ = std::move(lo);
    codec.hi_ = std::move(hi);
    return codec;
}

namespace {

inline double
sq_level(const SQCodec& codec, std::size_t j, std::uint8_t c) noexcept {
    const double lo = codec.lo()[j];
    const double range = static_cast<double>(codec.hi()[j]) - lo;
    return lo + range * static_cast<double>(c) / 255.0;
}

}  // namespace

void
SQCodec::encode(std::span<const float> x, std::span<std::uint8_t> code) const {
    if (x.size() != dim() || code.size() != code_size()) {
        throw UsageError("scalar quantizer encode: size mismatch");
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double range = static_cast<double>(hi_[j]) - lo_[j];
        if (range <= 0.0) {
            code[j] = 0;
            continue;
        }
        const double level = std::nearbyint((static_cast<double>(x[j]) - lo_[j]) / range * 255.0);
        code[j] = static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0));
    }
}

void
SQCodec::decode(std::span<const std::uint8_t> code, std::span<float> x) const {
    if (x.size() != dim() || code.size() != code_size()) {
        throw UsageError("scalar quantizer decode: size mismatch");
    }
    for (std::size_t j = 0; j < x.size(); ++j) {
        x[j] = static_cast<float>(sq_level(*this, j, code[j]));
    }
}

ADCTable
SQCodec::adc_table(std::span<const float> query, Metric metric) const {
    if (query.size() != dim()) {
        throw UsageError("scalar quantizer table: query size mismatch");
    }
    ADCTable table(dim());
    const bool inner = metric == Metric::NegativeInnerProduct;
    for (std::size_t j = 0; j < dim(); ++j) {
        float* row = table.row(j);
        for (std::size_t c = 0; c < kCodebookSize; ++c) {
            const auto v = static_cast<float>(sq_level(*this, j, static_cast<std::uint8_t>(c)));
            if (inner) {
                row[c] = -(query[j] * v);
            } else {
                const float d = query[j] - v;
                row[c] = d * d;
            }
        }
    }
    return table;
}

SQCodec
train_sq(const VectorDataset& dataset) {
    if (dataset.empty()) {
        throw DataError("cannot train a scalar quantizer on an empty dataset");
    }
    const std::size_t dim = dataset.padded_dim();
    std::vector<float> lo(dim, std::numeric_limits<float>::infinity());
    std::vector<float> hi(dim, -std::numeric_limits<float>::infinity());
    for (std::size_t i = 0; i < dataset.count(); ++i) {
        const auto r = dataset.row(i);
        for (std::size_t j = 0; j < dim; ++j) {
            lo[j] = std::min(lo[j], r[j]);
            hi[j] = std::max(hi[j], r[j]);
        }
    }
    return SQCodec::from_bounds(std::move(lo), std::move(hi));
}

PQCodec
PQCodec::from_codebooks(std::size_t dim, std::size_t m, std::size_t sub_dim, std::vector<float> centroids) {
    if (dim == 0 || m == 0 || sub_dim == 0 || m * sub_dim < dim || (m - 1) * sub_dim >= dim) {
        throw DataError("product quantizer geometry is inconsistent (dim=" + std::to_string(dim) +
                        ", m=" + std::to_string(m) + ", sub_dim=" + std::to_string(sub_dim) + ")");
    }
    if (centroids.size() != m * kCodebookSize * sub_dim) {
        throw DataError("product quantizer codebook size mismatch");
    }
    PQCodec codec;
    codec.dim_ = dim;
    codec.m_ = m;
    codec.sub_dim_ = sub_dim;
    codec.centroids_ = std::move(centroids);
    return codec;
}

namespace {

// Copies subspace `s` of x into out, zero-extending past the input width.
inline void
gather_subspace(std::span<const float> x, std::size_t s, std::size_t sub_dim, float* out) noexcept {
    const std::size_t begin = s * sub_dim;
    for (std::size_t l = 0; l < sub_dim; ++l) {
        out[l] = begin + l < x.size() ? x[begin + l] : 0.0f;
    }
}

inline float
squared_l2(const float* a, const float* b, std::size_t d) noexcept {
    return detail::distance(a, b, d, Metric::SquaredL2);
}

}  // namespace

void
PQCodec::encode(std::span<const float> x, std::span<std::uint8_t> code) const {
    if (x.size() != dim_ || code.size() != m_) {
        throw UsageError("product quantizer encode: size mismatch");
    }
    std::vector<float> sub(sub_dim_);
    for (std::size_t s = 0; s < m_; ++s) {
        gather_subspace(x, s, sub_dim_, sub.data());
        std::size_t best = 0;
        float best_d = std::numeric_limits<float>::infinity();
        for (std::size_t c = 0; c < kCodebookSize; ++c) {
            const float d = squared_l2(sub.data(), centroid(s, c).data(), sub_dim_);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        code[s] = static_cast<std::uint8_t>(best);
    }
}

void
PQCodec::decode(std::span<const std::uint8_t> code, std::span<float> x) const {
    if (x.size() != dim_ || code.size() != m_) {
        throw UsageError("product quantizer decode: size mismatch");
    }
    for (std::size_t s = 0; s < m_; ++s) {
        const auto c = centroid(s, code[s]);
        for (std::size_t l = 0; l < sub_dim_ && s * sub_dim_ + l < dim_; ++l) {
            x[s * sub_dim_ + l] = c[l];
        }
    }
}

ADCTable
PQCodec::adc_table(std::span<const float> query, Metric metric) const {
    if (query.size() != dim_) {
        throw UsageError("product quantizer table: query size mismatch");
    }
    ADCTable table(m_);
    std::vector<float> sub(sub_dim_);
    for (std::size_t s = 0; s < m_; ++s) {
        gather_subspace(query, s, sub_dim_, sub.data());
        float* row = table.row(s);
        for (std::size_t c = 0; c < kCodebookSize; ++c) {
            row[c] = detail::distance(sub.data(), centroid(s, c).data(), sub_dim_, metric);
        }
    }
    return table;
}

namespace {

// k-means over n points of width d stored contiguously. Returns the objective
// after every assignment step, the last one belonging to the final centroids.
std::vector<double>
kmeans(const std::vector<float>& points,
       std::size_t n,
       std::size_t d,
       std::size_t k,
       std::size_t iterations,
       std::mt19937_64& rng,
       std::vector<float>& centroids) {
    centroids.assign(k * d, 0.0f);
    auto point = [&](std::size_t i) { return points.data() + i * d; };
    auto center = [&](std::size_t c) { return centroids.data() + c * d; };

    // k-means++ seeding.
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t chosen = first(rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(point(chosen), d, center(c));
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = std::min(nearest[i], static_cast<double>(squared_l2(point(i), center(c), d)));
            total += nearest[i];
        }
        if (c + 1 == k) {
            break;
        }
        if (total <= 0.0) {
            // Every point coincides with a centroid; duplicate the first one.
            chosen = 0;
            continue;
        }
        const double target = unit(rng) * total;
        double acc = 0.0;
        chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += nearest[i];
            if (acc > target && nearest[i] > 0.0) {
                chosen = i;
                break;
            }
        }
        while (nearest[chosen] <= 0.0 && chosen > 0) {
            --chosen;
        }
    }

    std::vector<std::size_t> assign(n, 0);
    std::vector<double> error(n, 0.0);
    auto assign_all = [&]() {
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            float best_d = std::numeric_limits<float>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const float dist = squared_l2(point(i), center(c), d);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            assign[i] = best;
            error[i] = best_d;
            objective += best_d;
        }
        return objective;
    };

    std::vector<double> history;
    history.push_back(assign_all());
    std::vector<double> sums(k * d);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 0; it < iterations; ++it) {
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = assign[i];
            ++counts[c];
            for (std::size_t l = 0; l < d; ++l) {
                sums[c * d + l] += point(i)[l];
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            for (std::size_t l = 0; l < d; ++l) {
                center(c)[l] = static_cast<float>(sums[c * d + l] / static_cast<double>(counts[c]));
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            const auto far = static_cast<std::size_t>(std::max_element(error.begin(), error.end()) - error.begin());
            if (error[far] <= 0.0) {
                break;
            }
            std::copy_n(point(far), d, center(c));
            error[far] = 0.0;
        }
        const double objective = assign_all();
        history.push_back(objective);
        if (objective == 0.0) {
            break;
        }
    }
    return history;
}

}  // namespace

PQCodec
train_pq(const VectorDataset& dataset, std::size_t m, std::size_t iterations, std::uint64_t seed, PQTrainReport* report) {
    const std::size_t n = dataset.count();
    if (n < kCodebookSize) {
        throw DataError("product quantizer training needs at least 256 vectors, got " + std::to_string(n));
    }
    const std::size_t dim = dataset.padded_dim();
    if (m == 0 || m > dim) {
        throw UsageError("product quantizer needs 1 <= m <= " + std::to_string(dim));
    }
    const std::size_t sub_dim = (dim + m - 1) / m;
    if ((m - 1) * sub_dim >= dim) {
        throw UsageError("m=" + std::to_string(m) + " leaves an empty subspace for dimension " + std::to_string(dim));
    }
    std::mt19937_64 rng(seed);
    std::vector<float> codebooks(m * kCodebookSize * sub_dim);
    std::vector<float> points(n * sub_dim);
    std::vector<float> centers;
    std::vector<double> total;
    for (std::size_t s = 0; s < m; ++s) {
        for (std::size_t i = 0; i < n; ++i) {
            gather_subspace(dataset.row(i), s, sub_dim, points.data() + i * sub_dim);
        }
        const auto history = kmeans(points, n, sub_dim, kCodebookSize, iterations, rng, centers);
        if (total.size() < history.size()) {
            total.resize(history.size(), 0.0);
        }
        // Converged subspaces contribute their final objective to later steps.
        for (std::size_t i = 0; i < total.size(); ++i) {
            total[i] += history[std::min(i, history.size() - 1)];
        }
        std::copy(centers.begin(), centers.end(), codebooks.begin() + static_cast<std::ptrdiff_t>(s * kCodebookSize * sub_dim));
    }
    if (report != nullptr) {
        report->objective = std::move(total);
    }
    return PQCodec::from_codebooks(dim, m, sub_dim, std::move(codebooks));
}

QuantizeSpec
QuantizeSpec::parse(std::string_view text) {
    QuantizeSpec spec;
    if (text == "none" || text.empty()) {
        return spec;
    }
    if (text == "sq8") {
        spec.kind = CodecKind::SQ8;
        return spec;
    }
    if (text == "pq") {
        spec.kind = CodecKind::PQ;
        return spec;
    }
    if (text.starts_with("pq:")) {
        const auto digits = text.substr(3);
        std::size_t m = 0;
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), m);
        if (ec != std::errc{} || ptr != digits.data() + digits.size() || m == 0) {
            throw UsageError("bad PQ subspace count in '" + std::string(text) + "'");
        }
        spec.kind = CodecKind::PQ;
        spec.m = m;
        return spec;
    }
    throw UsageError("unknown quantizer '" + std::string(text) + "' (expected none, sq8 or pq:<m>)");
}

std::string
QuantizeSpec::to_string() const {
    switch (kind) {
        case CodecKind::None:
            return "none";
        case CodecKind::SQ8:
            return "sq8";
        case CodecKind::PQ:
            return "pq:" + std::to_string(m);
    }
    return "none";
}

QuantizedVectors::QuantizedVectors(Codec codec, std::vector<std::uint8_t> codes, std::size_t count)
    : codec_(std::move(codec)), codes_(std::move(codes)), count_(count) {
    code_size_ = std::visit([](const auto& c) { return c.code_size(); }, codec_);
    if (codes_.size() != count_ * code_size_) {
        throw DataError("code buffer holds " + std::to_string(codes_.size()) + " bytes, expected " +
                        std::to_string(count_ * code_size_));
    }
}

QuantizedVectors
QuantizedVectors::train(const VectorDataset& dataset, const QuantizeSpec& spec) {
    Codec codec;
    switch (spec.kind) {
        case CodecKind::None:
            throw UsageError("no quantizer requested");
        case CodecKind::SQ8:
            codec = train_sq(dataset);
            break;
        case CodecKind::PQ: {
            const std::size_t m = spec.m == 0 ? std::max<std::size_t>(1, dataset.padded_dim() / 4) : spec.m;
            codec = train_pq(dataset, m, spec.iterations, spec.seed);
            break;
        }
    }
    const std::size_t size = std::visit([](const auto& c) { return c.code_size(); }, codec);
    std::vector<std::uint8_t> codes(dataset.count() * size);
    std::visit(
        [&](const auto& c) {
            for (std::size_t i = 0; i < dataset.count(); ++i) {
                c.encode(dataset.row(i), std::span<std::uint8_t>(codes.data() + i * size, size));
            }
        },
        codec);
    return QuantizedVectors(std::move(codec), std::move(codes), dataset.count());
}

ADCTable
QuantizedVectors::adc_table(std::span<const float> query, Metric metric) const {
    return std::visit([&](const auto& c) { return c.adc_table(query, metric); }, codec_);
}

void
QuantizedVectors::decode(std::size_t i, std::span<float> out) const {
    std::visit([&](const auto& c) { c.decode(code(i), out); }, codec_);
}

SearchResult
adc_search(const ProximityGraph& graph,
           const VectorDataset& dataset,
           const QuantizedVectors& codes,
           std::span<const float> query,
           const SearchParams& params,
           std::size_t rerank,
           SearchContext& context) {
    params.validate();
    if (graph.node_count() != dataset.count() || codes.count() != dataset.count()) {
        throw UsageError("graph, dataset and codes sizes differ");
    }
    if (query.size() != dataset.padded_dim()) {
        throw UsageError("query must be padded to " + std::to_string(dataset.padded_dim()) + " lanes");
    }
    if (rerank != 0 && rerank < params.k) {
        throw UsageError("rerank depth must be 0 or >= k");
    }
    rerank = std::min(rerank, params.L);
    const ADCTable table = codes.adc_table(query, dataset.metric());
    const std::uint8_t* code_base = codes.codes().data();
    const std::size_t code_size = codes.code_size();

    SearchParams traversal = params;
    traversal.k = std::max(params.k, rerank);
    SearchResult result = detail::traverse(
        graph,
        [&](std::span<const NodeId> ids, float* out) {
            for (std::size_t j = 0; j < ids.size(); ++j) {
                out[j] = table.distance(code_base + static_cast<std::size_t>(ids[j]) * code_size);
            }
        },
        [&](std::span<const NodeId> ids) {
            for (const NodeId id : ids) {
                params.prefetch(code_base + static_cast<std::size_t>(id) * code_size, code_size);
            }
        },
        traversal, std::max<std::size_t>(1, code_size / sizeof(float)), context);

    if (rerank > 0) {
        const std::size_t depth = std::min(rerank, result.ids.size());
        std::vector<Neighbor> rescored(depth);
        for (std::size_t i = 0; i < depth; ++i) {
            const NodeId id = result.ids[i];
            rescored[i] = Neighbor{id, detail::distance(query.data(), dataset.row(id).data(), dataset.padded_dim(),
                                                        dataset.metric())};
        }
        std::stable_sort(rescored.begin(), rescored.end(),
                         [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
        result.ids.clear();
        result.distances.clear();
        for (std::size_t i = 0; i < depth; ++i) {
            result.ids.push_back(rescored[i].id);
            result.distances.push_back(rescored[i].distance);
        }
        result.stats.distance_computations += depth;
    }
    if (result.ids.size() > params.k) {
        result.ids.resize(params.k);
        result.distances.resize(params.k);
    }
    return result;
}

SearchResult
adc_search(const ProximityGraph& graph,
           const VectorDataset& dataset,
           const QuantizedVectors& codes,
           std::span<const float> query,
           const SearchParams& params,
           std::size_t rerank) {
    SearchContext context(graph.node_count());
    return adc_search(graph, dataset, codes, query, params, rerank, context);
}

BatchResult
adc_batch_search(const ProximityGraph& graph,
                 const VectorDataset& dataset,
                 const QuantizedVectors& codes,
                 const QuerySet& queries,
                 const SearchParams& params,
                 std::size_t rerank,
                 std::size_t workers) {
    params.validate();
    if (queries.count() > 0 && queries.padded_dim() != dataset.padded_dim()) {
        throw UsageError("query dimension does not match the dataset");
    }
    return run_queries(queries.count(), params.k, graph.node_count(), workers,
                       [&](SearchContext& context, std::size_t q) {
                           return adc_search(graph, dataset, codes, queries.row(q), params, rerank, context);
                       });
}

}  // namespace vexg
