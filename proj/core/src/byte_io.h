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

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace vexg::detail {

template <typename T>
T
byteswap_if_big(T value) noexcept {
    static_assert(std::is_trivially_copyable_v<T>);
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return value;
}

/// Little-endian load of a trivially copyable scalar.
template <typename T>
T
load_le(const unsigned char* p) noexcept {
    T value;
    std::memcpy(&value, p, sizeof(T));
    return byteswap_if_big(value);
}

template <typename T>
void
append_le(std::vector<unsigned char>& out, T value) {
    value = byteswap_if_big(value);
    const auto* p = reinterpret_cast<const unsigned char*>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
void
append_le_array(std::vector<unsigned char>& out, std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        const auto* p = reinterpret_cast<const unsigned char*>(values.data());
        out.insert(out.end(), p, p + values.size_bytes());
    } else {
        for (const T& v : values) {
            append_le(out, v);
        }
    }
}

template <typename T>
void
load_le_array(const unsigned char* p, std::span<T> out) noexcept {
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
        std::memcpy(out.data(), p, out.size_bytes());
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = load_le<T>(p + i * sizeof(T));
        }
    }
}

std::vector<unsigned char>
read_file(const std::filesystem::path& path);

void
write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes);

}  // namespace vexg::detail
