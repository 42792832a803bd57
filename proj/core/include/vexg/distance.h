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
#include <limits>
#include <span>

#include "vexg/common.h"
#include "vexg/dataset.h"

namespace vexg {

/// Exact distance between two equally sized (padded) vectors.
///
/// SquaredL2 and Angular: sum of squared differences. NegativeInnerProduct:
/// minus the dot product. Accumulation uses kAlignFloats partial sums reduced
/// pairwise, so the result is deterministic and identical to the value
/// dist_batch produces for the same pair.
float
dist_one(std::span<const float> q, std::span<const float> x, Metric metric);

/// 1-to-B distances: out[j] = dist_one(q, dataset.row(ids[j])) bit-exactly.
/// Throws UsageError on an id outside the dataset or a size mismatch.
void
dist_batch(std::span<const float> q,
           const VectorDataset& dataset,
           std::span<const NodeId> ids,
           std::span<float> out);

namespace detail {

// Unchecked kernels used by the traversal hot path.
float
distance(const float* q, const float* x, std::size_t dim, Metric metric) noexcept;

void
distance_batch(const float* q,
               const float* base,
               std::size_t stride,
               std::span<const NodeId> ids,
               Metric metric,
               float* out) noexcept;

}  // namespace detail

/// Cache budget used to size distance batches.
struct BatchSpec {
    std::size_t l1d_bytes = 64 * 1024;  // per-worker L1 data cache
    std::size_t elem_bytes = sizeof(float);
    double alpha = 0.5;                 // share of L1d reserved for prefetched rows
};

/// floor(alpha * l1d_bytes / (dim * elem_bytes)), clamped to [1, max_batch].
/// Throws UsageError when an argument is zero or alpha is outside (0, 1].
std::size_t
compute_batch_size(std::size_t l1d_bytes,
                   std::size_t dim,
                   std::size_t elem_bytes,
                   double alpha,
                   std::size_t max_batch = std::numeric_limits<std::size_t>::max());

inline std::size_t
compute_batch_size(const BatchSpec& spec, std::size_t dim, std::size_t max_batch) {
    return compute_batch_size(spec.l1d_bytes, dim, spec.elem_bytes, spec.alpha, max_batch);
}

/// Memory hint hook. Must not have observable effects.
using PrefetchFn = void (*)(const void* addr, std::size_t bytes) noexcept;

/// Issues a read prefetch for every cache line of [addr, addr + bytes).
void
prefetch_lines(const void* addr, std::size_t bytes) noexcept;

}  // namespace vexg
