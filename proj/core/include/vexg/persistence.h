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

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vexg/index.h"

namespace vexg {

/// Index file layout (all integers little-endian):
///
///   magic    8 bytes  "VEXGIDX\0"
///   version  u32
///   header   u64 n, u32 dim, u32 padded_dim, u32 M, u32 entry,
///            u8 metric, 3 zero bytes, u32 flags, then u32 CRC32 of those 32 bytes
///   sections in this order, each u64 payload length, payload, u32 CRC32(payload):
///     adjacency    n * M u32 (sentinel 0xFFFFFFFF pads rows)
///     vectors      n * padded_dim f32
///     permutation  n u32 forward map             (flag kHasPermutation)
///     codec        codec parameters and codes     (flag kHasCodec)
///     tuned        u32 t, u32 tau_max             (flag kHasTunedEarlyTerm)
namespace index_format {

inline constexpr std::uint8_t kMagic[8] = {'V', 'E', 'X', 'G', 'I', 'D', 'X', '\0'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 32;

inline constexpr std::uint32_t kHasPermutation = 1u << 0;
inline constexpr std::uint32_t kHasCodec = 1u << 1;
inline constexpr std::uint32_t kHasTunedEarlyTerm = 1u << 2;
/// Reserved: vectors stored outside the index file. Not supported yet.
inline constexpr std::uint32_t kExternalVectors = 1u << 3;
inline constexpr std::uint32_t kKnownFlags = kHasPermutation | kHasCodec | kHasTunedEarlyTerm;

}  // namespace index_format

std::vector<std::uint8_t>
serialize_index(const Index& index);

/// Throws FormatError naming the failing section ("magic", "version",
/// "header", "adjacency", "vectors", "permutation", "codec", "tuned",
/// "trailer"). Never allocates more than the input size implies.
Index
deserialize_index(std::span<const std::uint8_t> bytes);

void
save_index(const Index& index, const std::filesystem::path& path);

Index
load_index(const std::filesystem::path& path);

}  // namespace vexg
