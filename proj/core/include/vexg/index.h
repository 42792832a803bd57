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

#include <optional>
#include <span>

#include "vexg/dataset.h"
#include "vexg/graph.h"
#include "vexg/quantization.h"
#include "vexg/reorder.h"
#include "vexg/search.h"

namespace vexg {

/// A searchable index: vectors, graph and optional extras. When a
/// permutation is present, internal node i holds the vector with external
/// id permutation->original(i).
struct Index {
    VectorDataset data;
    ProximityGraph graph;
    std::optional<Permutation> permutation;
    std::optional<QuantizedVectors> quantized;
    std::optional<EarlyTermination> tuned;

    /// Internal -> external id table; empty when ids are unchanged.
    std::span<const NodeId>
    external_ids() const noexcept {
        return permutation ? permutation->inverse() : std::span<const NodeId>{};
    }

    NodeId
    external_id(NodeId internal) const noexcept {
        return (permutation && internal != kSentinel) ? permutation->original(internal) : internal;
    }
};

/// Rewrites result ids in place from internal to external numbering.
void
map_to_external(const Index& index, BatchResult& results);

}  // namespace vexg
