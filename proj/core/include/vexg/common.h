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
#include <cstdlib>
#include <limits>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

namespace vexg {

using NodeId = std::uint32_t;

/// Padding value for unused adjacency slots.
inline constexpr NodeId kSentinel = std::numeric_limits<NodeId>::max();

#ifndef VEXG_ALIGN_FLOATS
#define VEXG_ALIGN_FLOATS 16
#endif

/// Number of float lanes per alignment quantum (16 lanes = one 64-byte cache line).
inline constexpr std::size_t kAlignFloats = VEXG_ALIGN_FLOATS;
inline constexpr std::size_t kAlignBytes = kAlignFloats * sizeof(float);

static_assert(kAlignFloats > 0 && (kAlignFloats & (kAlignFloats - 1)) == 0,
              "alignment quantum must be a power of two");

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameters or API misuse.
class UsageError : public Error {
public:
    using Error::Error;
};

/// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

/// A structural invariant of an index was found broken.
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Index file could not be decoded; `section()` names the failing part.
class FormatError : public DataError {
public:
    FormatError(std::string section, const std::string& what)
        : DataError(section + ": " + what), section_(std::move(section)) {
    }

    const std::string&
    section() const noexcept {
        return section_;
    }

private:
    std::string section_;
};

template <typename T, std::size_t Alignment = kAlignBytes>
struct AlignedAllocator {
    using value_type = T;

    template <typename U>
    struct rebind {
        using other = AlignedAllocator<U, Alignment>;
    };

    AlignedAllocator() noexcept = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {
    }

    T*
    allocate(std::size_t n) {
        if (n == 0) {
            return nullptr;
        }
        if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) {
            throw std::bad_array_new_length();
        }
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{Alignment}));
    }

    void
    deallocate(T* p, std::size_t) noexcept {
        ::operator delete(p, std::align_val_t{Alignment});
    }

    template <typename U>
    bool
    operator==(const AlignedAllocator<U, Alignment>&) const noexcept {
        return true;
    }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Smallest multiple of the alignment quantum that is >= dim.
constexpr std::size_t
padded_dimension(std::size_t dim) noexcept {
    return (dim + kAlignFloats - 1) / kAlignFloats * kAlignFloats;
}

}  // namespace vexg
