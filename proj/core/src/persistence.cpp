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


#include "vexg/persistence.h"

#include <zlib.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <limits>
#include <optional>
#include <string>

#include "byte_io.h"

namespace vexg {

namespace layout = index_format;

namespace {

std::uint32_t
crc32_of(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in chunks.
    std::size_t offset = 0;
    while (offset < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
        crc = ::crc32(crc, bytes.data() + offset, chunk);
        offset += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

void
append_section(std::vector<std::uint8_t>& out, const std::vector<std::uint8_t>& payload) {
    detail::append_le<std::uint64_t>(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    detail::append_le<std::uint32_t>(out, crc32_of(payload));
}

std::vector<std::uint8_t>
encode_codec(const QuantizedVectors& q) {
    std::vector<std::uint8_t> out;
    out.push_back(static_cast<std::uint8_t>(q.kind()));
    out.insert(out.end(), {0, 0, 0});
    detail::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(q.code_size()));
    if (const auto* sq = std::get_if<SQCodec>(&q.codec())) {
        detail::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(sq->dim()));
        detail::append_le_array(out, sq->lo());
        detail::append_le_array(out, sq->hi());
    } else {
        const auto& pq = std::get<PQCodec>(q.codec());
        detail::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(pq.dim()));
        detail::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(pq.m()));
        detail::append_le<std::uint32_t>(out, static_cast<std::uint32_t>(pq.sub_dim()));
        detail::append_le_array(out, pq.centroids());
    }
    detail::append_le<std::uint64_t>(out, q.count());
    detail::append_le_array(out, q.codes());
    return out;
}

// Bounds-checked cursor over one section payload.
class Reader {
public:
    Reader(std::span<const std::uint8_t> bytes, std::string section) : bytes_(bytes), section_(std::move(section)) {
    }

    template <typename T>
    T
    get() {
        require(sizeof(T));
        const T value = detail::load_le<T>(bytes_.data() + offset_);
        offset_ += sizeof(T);
        return value;
    }

    template <typename T>
    std::vector<T>
    get_array(std::uint64_t count) {
        if (count > remaining() / sizeof(T)) {
            fail("array of " + std::to_string(count) + " elements exceeds remaining " + std::to_string(remaining()) +
                 " bytes");
        }
        std::vector<T> values(static_cast<std::size_t>(count));
        detail::load_le_array<T>(bytes_.data() + offset_, std::span<T>(values));
        offset_ += values.size() * sizeof(T);
        return values;
    }

    std::span<const std::uint8_t>
    take(std::size_t n) {
        require(n);
        const auto out = bytes_.subspan(offset_, n);
        offset_ += n;
        return out;
    }

    std::size_t
    remaining() const noexcept {
        return bytes_.size() - offset_;
    }
    std::size_t
    offset() const noexcept {
        return offset_;
    }

    [[noreturn]] void
    fail(const std::string& what) const {
        throw FormatError(section_, what);
    }

private:
    void
    require(std::size_t n) const {
        if (remaining() < n) {
            fail("truncated (need " + std::to_string(n) + " bytes at offset " + std::to_string(offset_) + ", have " +
                 std::to_string(remaining()) + ")");
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::string section_;
    std::size_t offset_ = 0;
};

// Reads one length-prefixed, checksummed section from the file cursor.
std::span<const std::uint8_t>
read_section(Reader& file, const std::string& name, std::optional<std::uint64_t> expected_length) {
    if (file.remaining() < sizeof(std::uint64_t)) {
        throw FormatError(name, "truncated before length prefix");
    }
    const auto length = file.get<std::uint64_t>();
    if (expected_length && length != *expected_length) {
        throw FormatError(name, "length " + std::to_string(length) + " does not match header (expected " +
                                    std::to_string(*expected_length) + ")");
    }
    if (length > file.remaining() || file.remaining() - length < sizeof(std::uint32_t)) {
        throw FormatError(name, "truncated payload (" + std::to_string(length) + " bytes declared, " +
                                    std::to_string(file.remaining()) + " available)");
    }
    const auto payload = file.take(static_cast<std::size_t>(length));
    const auto stored = file.get<std::uint32_t>();
    if (stored != crc32_of(payload)) {
        throw FormatError(name, "checksum mismatch");
    }
    return payload;
}

QuantizedVectors
decode_codec(std::span<const std::uint8_t> payload, std::size_t n, std::size_t padded_dim) {
    Reader r(payload, "codec");
    const auto kind = static_cast<CodecKind>(r.get<std::uint8_t>());
    for (int i = 0; i < 3; ++i) {
        if (r.get<std::uint8_t>() != 0) {
            r.fail("non-zero reserved byte");
        }
    }
    const auto code_size = r.get<std::uint32_t>();
    QuantizedVectors::Codec codec;
    try {
        if (kind == CodecKind::SQ8) {
            const auto dim = r.get<std::uint32_t>();
            if (dim != padded_dim || code_size != dim) {
                r.fail("scalar quantizer width does not match the vectors");
            }
            auto lo = r.get_array<float>(dim);
            auto hi = r.get_array<float>(dim);
            codec = SQCodec::from_bounds(std::move(lo), std::move(hi));
        } else if (kind == CodecKind::PQ) {
            const auto dim = r.get<std::uint32_t>();
            const auto m = r.get<std::uint32_t>();
            const auto sub_dim = r.get<std::uint32_t>();
            if (dim != padded_dim || code_size != m || m == 0 || sub_dim == 0) {
                r.fail("product quantizer geometry does not match the vectors");
            }
            const std::uint64_t floats = static_cast<std::uint64_t>(m) * kCodebookSize * sub_dim;
            auto centroids = r.get_array<float>(floats);
            codec = PQCodec::from_codebooks(dim, m, sub_dim, std::move(centroids));
        } else {
            r.fail("unknown codec kind " + std::to_string(static_cast<int>(kind)));
        }
        const auto count = r.get<std::uint64_t>();
        if (count != n) {
            r.fail("code count " + std::to_string(count) + " differs from vector count " + std::to_string(n));
        }
        auto codes = r.get_array<std::uint8_t>(count * code_size);
        if (r.remaining() != 0) {
            r.fail(std::to_string(r.remaining()) + " unexpected trailing bytes");
        }
        return QuantizedVectors(std::move(codec), std::move(codes), n);
    } catch (const FormatError&) {
        throw;
    } catch (const DataError& e) {
        throw FormatError("codec", e.what());
    }
}

}  // namespace

std::vector<std::uint8_t>
serialize_index(const Index& index) {
    const auto& g = index.graph;
    const auto& d = index.data;
    if (g.node_count() != d.count()) {
        throw UsageError("index graph and vectors disagree on node count");
    }
    std::uint32_t flags = 0;
    if (index.permutation) {
        flags |= layout::kHasPermutation;
    }
    if (index.quantized) {
        flags |= layout::kHasCodec;
    }
    if (index.tuned) {
        flags |= layout::kHasTunedEarlyTerm;
    }

    std::vector<std::uint8_t> out(std::begin(layout::kMagic), std::end(layout::kMagic));
    detail::append_le<std::uint32_t>(out, layout::kVersion);

    std::vector<std::uint8_t> header;
    detail::append_le<std::uint64_t>(header, d.count());
    detail::append_le<std::uint32_t>(header, static_cast<std::uint32_t>(d.dim()));
    detail::append_le<std::uint32_t>(header, static_cast<std::uint32_t>(d.padded_dim()));
    detail::append_le<std::uint32_t>(header, static_cast<std::uint32_t>(g.out_degree()));
    detail::append_le<std::uint32_t>(header, g.entry());
    header.push_back(static_cast<std::uint8_t>(d.metric()));
    header.insert(header.end(), {0, 0, 0});
    detail::append_le<std::uint32_t>(header, flags);
    out.insert(out.end(), header.begin(), header.end());
    detail::append_le<std::uint32_t>(out, crc32_of(header));

    std::vector<std::uint8_t> payload;
    detail::append_le_array(payload, g.adjacency());
    append_section(out, payload);

    payload.clear();
    detail::append_le_array(payload, d.data());
    append_section(out, payload);

    if (index.permutation) {
        payload.clear();
        detail::append_le_array(payload, index.permutation->forward());
        append_section(out, payload);
    }
    if (index.quantized) {
        append_section(out, encode_codec(*index.quantized));
    }
    if (index.tuned) {
        payload.clear();
        detail::append_le<std::uint32_t>(payload, static_cast<std::uint32_t>(index.tuned->t));
        detail::append_le<std::uint32_t>(payload, static_cast<std::uint32_t>(index.tuned->tau_max));
        append_section(out, payload);
    }
    return out;
}

Index
deserialize_index(std::span<const std::uint8_t> bytes) {
    Reader file(bytes, "file");
    if (bytes.size() < sizeof(layout::kMagic) ||
        !std::equal(std::begin(layout::kMagic), std::end(layout::kMagic), bytes.begin())) {
        throw FormatError("magic", "not a vexg index file");
    }
    file.take(sizeof(layout::kMagic));
    if (file.remaining() < sizeof(std::uint32_t)) {
        throw FormatError("version", "truncated");
    }
    const auto version = file.get<std::uint32_t>();
    if (version == 0 || version > layout::kVersion) {
        throw FormatError("version", "unsupported version " + std::to_string(version) + " (this build reads up to " +
                                         std::to_string(layout::kVersion) + ")");
    }
    if (file.remaining() < layout::kHeaderBytes + sizeof(std::uint32_t)) {
        throw FormatError("header", "truncated");
    }
    const auto header_bytes = file.take(layout::kHeaderBytes);
    if (file.get<std::uint32_t>() != crc32_of(header_bytes)) {
        throw FormatError("header", "checksum mismatch");
    }
    Reader header(header_bytes, "header");
    const auto n = header.get<std::uint64_t>();
    const auto dim = header.get<std::uint32_t>();
    const auto padded_dim = header.get<std::uint32_t>();
    const auto M = header.get<std::uint32_t>();
    const auto entry = header.get<std::uint32_t>();
    const auto metric_code = header.get<std::uint8_t>();
    for (int i = 0; i < 3; ++i) {
        if (header.get<std::uint8_t>() != 0) {
            header.fail("non-zero reserved byte");
        }
    }
    const auto flags = header.get<std::uint32_t>();
    if (n == 0 || n > kSentinel) {
        header.fail("invalid node count " + std::to_string(n));
    }
    if (dim == 0 || padded_dim != padded_dimension(dim)) {
        header.fail("dimension " + std::to_string(dim) + " / padded " + std::to_string(padded_dim) + " inconsistent");
    }
    if (M == 0) {
        header.fail("out-degree must be positive");
    }
    constexpr std::uint64_t kMaxElements = std::numeric_limits<std::uint64_t>::max() / 8;
    if (M > kMaxElements / n || padded_dim > kMaxElements / n) {
        header.fail("section sizes overflow");
    }
    if (entry >= n) {
        header.fail("entry node out of range");
    }
    if (metric_code > static_cast<std::uint8_t>(Metric::Angular)) {
        header.fail("unknown metric code " + std::to_string(metric_code));
    }
    if (flags & layout::kExternalVectors) {
        header.fail("external vector storage is not supported");
    }
    if (flags & ~layout::kKnownFlags) {
        header.fail("unknown flags 0x" + [&] {
            char buf[16];
            std::snprintf(buf, sizeof(buf), "%x", flags & ~layout::kKnownFlags);
            return std::string(buf);
        }());
    }
    const auto metric = static_cast<Metric>(metric_code);

    // Lengths are validated against the file before any allocation.
    const std::uint64_t adjacency_len = n * M * sizeof(NodeId);
    const auto adjacency_bytes = read_section(file, "adjacency", adjacency_len);
    std::vector<NodeId> adjacency(static_cast<std::size_t>(n * M));
    detail::load_le_array<NodeId>(adjacency_bytes.data(), std::span<NodeId>(adjacency));

    const std::uint64_t vectors_len = n * padded_dim * sizeof(float);
    const auto vector_bytes = read_section(file, "vectors", vectors_len);

    Index index;
    try {
        index.graph = ProximityGraph::from_adjacency(n, M, entry, metric, std::move(adjacency));
    } catch (const DataError& e) {
        throw FormatError("adjacency", e.what());
    }
    if (const auto check = check_graph(index.graph); !check.ok) {
        throw FormatError("adjacency", check.problem);
    }
    {
        std::vector<float> values(static_cast<std::size_t>(n * padded_dim));
        detail::load_le_array<float>(vector_bytes.data(), std::span<float>(values));
        try {
            index.data = VectorDataset::from_padded(n, dim, metric, values);
        } catch (const DataError& e) {
            throw FormatError("vectors", e.what());
        }
    }
    if (flags & layout::kHasPermutation) {
        const auto perm_bytes = read_section(file, "permutation", n * sizeof(NodeId));
        std::vector<NodeId> forward(static_cast<std::size_t>(n));
        detail::load_le_array<NodeId>(perm_bytes.data(), std::span<NodeId>(forward));
        try {
            index.permutation = Permutation::from_forward(std::move(forward));
        } catch (const DataError& e) {
            throw FormatError("permutation", e.what());
        }
    }
    if (flags & layout::kHasCodec) {
        const auto codec_bytes = read_section(file, "codec", std::nullopt);
        index.quantized = decode_codec(codec_bytes, static_cast<std::size_t>(n), padded_dim);
    }
    if (flags & layout::kHasTunedEarlyTerm) {
        const auto tuned_bytes = read_section(file, "tuned", 2 * sizeof(std::uint32_t));
        Reader r(tuned_bytes, "tuned");
        EarlyTermination tuned{r.get<std::uint32_t>(), r.get<std::uint32_t>()};
        if (tuned.tau_max == 0) {
            r.fail("tau_max must be >= 1");
        }
        index.tuned = tuned;
    }
    if (file.remaining() != 0) {
        throw FormatError("trailer", std::to_string(file.remaining()) + " unexpected bytes after the last section");
    }
    return index;
}

void
save_index(const Index& index, const std::filesystem::path& path) {
    const auto bytes = serialize_index(index);
    detail::write_file(path, bytes);
}

Index
load_index(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    return deserialize_index(bytes);
}

void
map_to_external(const Index& index, BatchResult& results) {
    if (!index.permutation) {
        return;
    }
    for (auto& id : results.ids) {
        id = index.external_id(id);
    }
}

}  // namespace vexg
