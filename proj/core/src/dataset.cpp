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


#include "vexg/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "byte_io.h"

namespace vexg {

namespace detail {

std::vector<unsigned char>
read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    in.seekg(0, std::ios::end);
    const auto size = static_cast<std::size_t>(in.tellg());
    in.seekg(0, std::ios::beg);
    std::vector<unsigned char> bytes(size);
    if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size))) {
        throw DataError("read failed: " + path.string());
    }
    return bytes;
}

void
write_file(const std::filesystem::path& path, std::span<const unsigned char> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open for writing " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

}  // namespace detail

namespace {

// Shared record walker for the *vecs family: int32 d, then d elements of
// ElemT. Calls sink(record_index, element_pointer, d) per record.
template <typename ElemT, typename Sink>
std::pair<std::size_t, std::size_t>
parse_vecs(const std::vector<unsigned char>& bytes, const std::string& name, Sink&& sink) {
    if (bytes.empty()) {
        throw DataError(name + ": empty file");
    }
    std::size_t offset = 0;
    std::size_t dim = 0;
    std::size_t count = 0;
    while (offset < bytes.size()) {
        if (bytes.size() - offset < sizeof(std::int32_t)) {
            throw DataError(name + ": truncated record header at byte offset " + std::to_string(offset));
        }
        const auto d = detail::load_le<std::int32_t>(bytes.data() + offset);
        if (d <= 0) {
            throw DataError(name + ": non-positive dimension " + std::to_string(d) + " at byte offset " +
                            std::to_string(offset));
        }
        if (count == 0) {
            dim = static_cast<std::size_t>(d);
        } else if (static_cast<std::size_t>(d) != dim) {
            throw DataError(name + ": dimension mismatch at byte offset " + std::to_string(offset) + " (" +
                            std::to_string(d) + " vs " + std::to_string(dim) + ")");
        }
        const std::size_t payload = dim * sizeof(ElemT);
        if (bytes.size() - offset - sizeof(std::int32_t) < payload) {
            throw DataError(name + ": truncated record at byte offset " + std::to_string(offset));
        }
        offset += sizeof(std::int32_t);
        sink(count, bytes.data() + offset, dim);
        offset += payload;
        ++count;
    }
    return {count, dim};
}

}  // namespace

std::string_view
metric_name(Metric metric) noexcept {
    switch (metric) {
        case Metric::SquaredL2:
            return "l2";
        case Metric::NegativeInnerProduct:
            return "ip";
        case Metric::Angular:
            return "angular";
    }
    return "unknown";
}

Metric
parse_metric(std::string_view name) {
    if (name == "l2" || name == "L2" || name == "squared_l2" || name == "SquaredL2") {
        return Metric::SquaredL2;
    }
    if (name == "ip" || name == "IP" || name == "negative_inner_product" || name == "NegativeInnerProduct") {
        return Metric::NegativeInnerProduct;
    }
    if (name == "angular" || name == "cosine" || name == "Angular") {
        return Metric::Angular;
    }
    throw UsageError("unknown metric '" + std::string(name) + "' (expected l2, ip or angular)");
}

RawVectors
load_fvecs(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    RawVectors out;
    out.values.reserve(bytes.size() / sizeof(float));
    const auto [count, dim] = parse_vecs<float>(bytes, path.string(), [&](std::size_t, const unsigned char* p, std::size_t d) {
        const std::size_t base = out.values.size();
        out.values.resize(base + d);
        detail::load_le_array<float>(p, std::span<float>(out.values.data() + base, d));
    });
    out.count = count;
    out.dim = dim;
    return out;
}

RawVectors
load_bvecs(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    RawVectors out;
    const auto [count, dim] = parse_vecs<std::uint8_t>(bytes, path.string(), [&](std::size_t, const unsigned char* p, std::size_t d) {
        for (std::size_t j = 0; j < d; ++j) {
            out.values.push_back(static_cast<float>(p[j]));
        }
    });
    out.count = count;
    out.dim = dim;
    return out;
}

RawIds
load_ivecs(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    RawIds out;
    const auto [count, dim] = parse_vecs<std::int32_t>(bytes, path.string(), [&](std::size_t, const unsigned char* p, std::size_t d) {
        const std::size_t base = out.values.size();
        out.values.resize(base + d);
        detail::load_le_array<std::int32_t>(p, std::span<std::int32_t>(out.values.data() + base, d));
    });
    out.count = count;
    out.dim = dim;
    return out;
}

RawVectors
load_vectors(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".bvecs") {
        return load_bvecs(path);
    }
    if (ext == ".fvecs") {
        return load_fvecs(path);
    }
    throw UsageError("unsupported vector file extension '" + ext + "' (expected .fvecs or .bvecs)");
}

namespace {

void
check_shape(std::size_t count, std::size_t dim, std::size_t values, const char* what) {
    if (dim == 0 && count > 0) {
        throw DataError(std::string(what) + ": dimension must be positive");
    }
    if (dim > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
        throw DataError(std::string(what) + ": dimension too large for *vecs format");
    }
    if (values != count * dim) {
        throw DataError(std::string(what) + ": value count does not match count x dim");
    }
}

}  // namespace

void
save_fvecs(const std::filesystem::path& path, const RawVectors& vectors) {
    check_shape(vectors.count, vectors.dim, vectors.values.size(), "save_fvecs");
    std::vector<unsigned char> bytes;
    bytes.reserve(vectors.count * (4 + 4 * vectors.dim));
    for (std::size_t i = 0; i < vectors.count; ++i) {
        detail::append_le(bytes, static_cast<std::int32_t>(vectors.dim));
        detail::append_le_array(bytes, vectors.row(i));
    }
    detail::write_file(path, bytes);
}

void
save_bvecs(const std::filesystem::path& path, const RawVectors& vectors) {
    check_shape(vectors.count, vectors.dim, vectors.values.size(), "save_bvecs");
    std::vector<unsigned char> bytes;
    bytes.reserve(vectors.count * (4 + vectors.dim));
    for (std::size_t i = 0; i < vectors.count; ++i) {
        detail::append_le(bytes, static_cast<std::int32_t>(vectors.dim));
        for (const float v : vectors.row(i)) {
            if (!(v >= 0.0f && v <= 255.0f) || std::nearbyint(v) != v) {
                throw DataError("save_bvecs: value " + std::to_string(v) + " is not a byte");
            }
            bytes.push_back(static_cast<unsigned char>(v));
        }
    }
    detail::write_file(path, bytes);
}

void
save_ivecs(const std::filesystem::path& path, const RawIds& ids) {
    check_shape(ids.count, ids.dim, ids.values.size(), "save_ivecs");
    std::vector<unsigned char> bytes;
    bytes.reserve(ids.count * (4 + 4 * ids.dim));
    for (std::size_t i = 0; i < ids.count; ++i) {
        detail::append_le(bytes, static_cast<std::int32_t>(ids.dim));
        detail::append_le_array(bytes, ids.row(i));
    }
    detail::write_file(path, bytes);
}

RawVectors
VectorDataset::to_raw() const {
    RawVectors raw;
    raw.count = count_;
    raw.dim = dim_;
    raw.values.resize(count_ * dim_);
    for (std::size_t i = 0; i < count_; ++i) {
        std::copy_n(data_.data() + i * padded_dim_, dim_, raw.values.data() + i * dim_);
    }
    return raw;
}

VectorDataset
VectorDataset::from_padded(std::size_t count, std::size_t dim, Metric metric, std::span<const float> padded) {
    if (dim == 0) {
        throw DataError("dataset dimension must be positive");
    }
    VectorDataset ds;
    ds.count_ = count;
    ds.dim_ = dim;
    ds.padded_dim_ = padded_dimension(dim);
    ds.metric_ = metric;
    if (padded.size() != count * ds.padded_dim_) {
        throw DataError("padded buffer holds " + std::to_string(padded.size()) + " floats, expected " +
                        std::to_string(count * ds.padded_dim_));
    }
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = dim; j < ds.padded_dim_; ++j) {
            if (padded[i * ds.padded_dim_ + j] != 0.0f) {
                throw DataError("non-zero pad lane in vector " + std::to_string(i));
            }
        }
    }
    ds.data_.assign(padded.begin(), padded.end());
    return ds;
}

VectorDataset
VectorDataset::build(const RawVectors& raw, Metric metric) {
    if (raw.count > 0 && raw.dim == 0) {
        throw DataError("vectors must have positive dimension");
    }
    if (raw.values.size() != raw.count * raw.dim) {
        throw DataError("value count does not match count x dim");
    }
    if (raw.count > static_cast<std::size_t>(kSentinel)) {
        throw DataError("too many vectors for 32-bit node ids");
    }
    VectorDataset ds;
    ds.count_ = raw.count;
    ds.dim_ = raw.dim;
    ds.padded_dim_ = padded_dimension(raw.dim);
    ds.metric_ = metric;
    ds.data_.assign(ds.count_ * ds.padded_dim_, 0.0f);
    for (std::size_t i = 0; i < raw.count; ++i) {
        const auto src = raw.row(i);
        float* dst = ds.data_.data() + i * ds.padded_dim_;
        if (metric != Metric::Angular) {
            std::copy(src.begin(), src.end(), dst);
            continue;
        }
        double norm_sq = 0.0;
        for (const float v : src) {
            norm_sq += static_cast<double>(v) * v;
        }
        if (norm_sq == 0.0) {
            throw DataError("zero vector " + std::to_string(i) + " cannot be normalized under the angular metric");
        }
        // Near-unit rows are kept verbatim so that normalization is idempotent.
        if (std::abs(norm_sq - 1.0) <= 1e-4) {
            std::copy(src.begin(), src.end(), dst);
            continue;
        }
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (std::size_t j = 0; j < src.size(); ++j) {
            dst[j] = static_cast<float>(src[j] * inv);
        }
    }
    return ds;
}

VectorDataset
build_dataset(const RawVectors& raw, Metric metric) {
    if (raw.count == 0) {
        throw DataError("dataset is empty");
    }
    return VectorDataset::build(raw, metric);
}

QuerySet
build_queries(const RawVectors& raw, Metric metric) {
    if (raw.count == 0) {
        VectorDataset ds;
        ds.dim_ = raw.dim;
        ds.padded_dim_ = padded_dimension(raw.dim);
        ds.metric_ = metric;
        return ds;
    }
    return VectorDataset::build(raw, metric);
}

}  // namespace vexg
