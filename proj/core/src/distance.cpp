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


#include "vexg/distance.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace vexg {

namespace {

constexpr std::size_t kLanes = kAlignFloats;
constexpr std::size_t kRowsPerBlock = 4;

inline float
madd(float a, float b, float acc) noexcept {
#if defined(__FMA__) || defined(__ARM_FEATURE_FMA)
    return std::fma(a, b, acc);
#else
    return a * b + acc;
#endif
}

inline float
reduce(std::array<float, kLanes>& acc) noexcept {
    for (std::size_t width = kLanes / 2; width > 0; width /= 2) {
        for (std::size_t l = 0; l < width; ++l) {
            acc[l] += acc[l + width];
        }
    }
    return acc[0];
}

// R rows against one query; each row keeps its own lane accumulators so the
// per-row arithmetic is exactly the single-row sequence.
template <std::size_t R, bool kInnerProduct>
inline void
kernel_rows(const float* q, const float* const* rows, std::size_t dim, float* out) noexcept {
    std::array<std::array<float, kLanes>, R> acc{};
    std::size_t i = 0;
    for (; i + kLanes <= dim; i += kLanes) {
        for (std::size_t r = 0; r < R; ++r) {
            const float* x = rows[r] + i;
            for (std::size_t l = 0; l < kLanes; ++l) {
                if constexpr (kInnerProduct) {
                    acc[r][l] = madd(q[i + l], x[l], acc[r][l]);
                } else {
                    const float d = q[i + l] - x[l];
                    acc[r][l] = madd(d, d, acc[r][l]);
                }
            }
        }
    }
    for (std::size_t l = 0; i + l < dim; ++l) {
        for (std::size_t r = 0; r < R; ++r) {
            if constexpr (kInnerProduct) {
                acc[r][l] = madd(q[i + l], rows[r][i + l], acc[r][l]);
            } else {
                const float d = q[i + l] - rows[r][i + l];
                acc[r][l] = madd(d, d, acc[r][l]);
            }
        }
    }
    for (std::size_t r = 0; r < R; ++r) {
        const float sum = reduce(acc[r]);
        out[r] = kInnerProduct ? -sum : sum;
    }
}

template <std::size_t R>
inline void
dispatch_rows(const float* q, const float* const* rows, std::size_t dim, Metric metric, float* out) noexcept {
    if (metric == Metric::NegativeInnerProduct) {
        kernel_rows<R, true>(q, rows, dim, out);
    } else {
        kernel_rows<R, false>(q, rows, dim, out);
    }
}

}  // namespace

namespace detail {

float
distance(const float* q, const float* x, std::size_t dim, Metric metric) noexcept {
    float out;
    dispatch_rows<1>(q, &x, dim, metric, &out);
    return out;
}

void
distance_batch(const float* q,
               const float* base,
               std::size_t stride,
               std::span<const NodeId> ids,
               Metric metric,
               float* out) noexcept {
    std::size_t j = 0;
    for (; j + kRowsPerBlock <= ids.size(); j += kRowsPerBlock) {
        const float* rows[kRowsPerBlock];
        for (std::size_t r = 0; r < kRowsPerBlock; ++r) {
            rows[r] = base + static_cast<std::size_t>(ids[j + r]) * stride;
        }
        dispatch_rows<kRowsPerBlock>(q, rows, stride, metric, out + j);
    }
    for (; j < ids.size(); ++j) {
        const float* row = base + static_cast<std::size_t>(ids[j]) * stride;
        dispatch_rows<1>(q, &row, stride, metric, out + j);
    }
}

}  // namespace detail

float
dist_one(std::span<const float> q, std::span<const float> x, Metric metric) {
    if (q.size() != x.size()) {
        throw UsageError("dimension mismatch: " + std::to_string(q.size()) + " vs " + std::to_string(x.size()));
    }
    return detail::distance(q.data(), x.data(), q.size(), metric);
}

void
dist_batch(std::span<const float> q,
           const VectorDataset& dataset,
           std::span<const NodeId> ids,
           std::span<float> out) {
    if (q.size() != dataset.padded_dim()) {
        throw UsageError("query has " + std::to_string(q.size()) + " lanes, dataset rows have " +
                         std::to_string(dataset.padded_dim()));
    }
    if (out.size() < ids.size()) {
        throw UsageError("output span shorter than id list");
    }
    for (const NodeId id : ids) {
        if (id >= dataset.count()) {
            throw UsageError("invalid vector id " + std::to_string(id));
        }
    }
    detail::distance_batch(q.data(), dataset.data().data(), dataset.padded_dim(), ids, dataset.metric(),
                           out.data());
}

std::size_t
compute_batch_size(std::size_t l1d_bytes,
                   std::size_t dim,
                   std::size_t elem_bytes,
                   double alpha,
                   std::size_t max_batch) {
    if (l1d_bytes == 0 || dim == 0 || elem_bytes == 0) {
        throw UsageError("batch size inputs must be positive");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw UsageError("cache allocation ratio must lie in (0, 1]");
    }
    const double raw = std::floor(alpha * static_cast<double>(l1d_bytes) /
                                  (static_cast<double>(dim) * static_cast<double>(elem_bytes)));
    std::size_t batch = raw < 1.0 ? 1 : static_cast<std::size_t>(raw);
    if (max_batch == 0) {
        max_batch = 1;
    }
    return std::min(batch, max_batch);
}

void
prefetch_lines(const void* addr, std::size_t bytes) noexcept {
    const auto* p = static_cast<const char*>(addr);
    for (std::size_t off = 0; off < bytes; off += 64) {
        __builtin_prefetch(p + off, 0, 3);
    }
}

}  // namespace vexg
