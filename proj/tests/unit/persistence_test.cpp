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


#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <random>

#include "support/fixtures.h"
#include "vexg/persistence.h"

using namespace vexg;

namespace {

// Bitwise reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t
crc32_ref(const std::uint8_t* p, std::size_t n) {
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < n; ++i) {
        crc ^= p[i];
        for (int b = 0; b < 8; ++b) {
            crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
        }
    }
    return ~crc;
}

template <typename T>
T
read_le(const std::vector<std::uint8_t>& b, std::size_t at) {
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        v |= static_cast<T>(static_cast<T>(b[at + i]) << (8 * i));
    }
    return v;
}

template <typename T>
void
write_le(std::vector<std::uint8_t>& b, std::size_t at, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        b[at + i] = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
    }
}

constexpr std::size_t kHeaderAt = 12;
constexpr std::size_t kHeaderCrcAt = 44;
constexpr std::size_t kFirstSectionAt = 48;

void
fix_header_crc(std::vector<std::uint8_t>& b) {
    write_le<std::uint32_t>(b, kHeaderCrcAt, crc32_ref(b.data() + kHeaderAt, 32));
}

// Offset of the length prefix of section `index` (0 = adjacency).
std::size_t
section_at(const std::vector<std::uint8_t>& b, std::size_t index) {
    std::size_t at = kFirstSectionAt;
    for (std::size_t i = 0; i < index; ++i) {
        at += 8 + read_le<std::uint64_t>(b, at) + 4;
    }
    return at;
}

void
fix_section_crc(std::vector<std::uint8_t>& b, std::size_t index) {
    const std::size_t at = section_at(b, index);
    const auto len = read_le<std::uint64_t>(b, at);
    write_le<std::uint32_t>(b, at + 8 + len, crc32_ref(b.data() + at + 8, len));
}

std::string
failing_section(const std::vector<std::uint8_t>& b) {
    try {
        deserialize_index(b);
    } catch (const FormatError& e) {
        return e.section();
    }
    return "<accepted>";
}

Index
sample_index(bool with_extras, CodecKind codec = CodecKind::SQ8) {
    const auto ds = build_dataset(vexg::testing::uniform_vectors(300, 10, 21), Metric::SquaredL2);
    BuildParams p;
    p.M = 8;
    p.K = 8;
    p.L_build = 24;
    Index index;
    index.graph = build_graph(ds, p);
    index.data = ds;
    if (with_extras) {
        const auto perm = reorder(index.graph, index.data);
        auto [g, d] = apply_permutation(index.graph, index.data, perm);
        index.graph = std::move(g);
        index.data = std::move(d);
        index.permutation = perm;
        QuantizeSpec spec;
        spec.kind = codec;
        spec.m = 4;
        index.quantized = QuantizedVectors::train(index.data, spec);
        index.tuned = EarlyTermination{7, 3};
    }
    return index;
}

void
expect_same(const Index& a, const Index& b) {
    EXPECT_EQ(a.graph, b.graph);
    EXPECT_EQ(a.data.to_raw().values, b.data.to_raw().values);
    EXPECT_EQ(a.data.metric(), b.data.metric());
    EXPECT_EQ(a.permutation, b.permutation);
    EXPECT_EQ(a.quantized, b.quantized);
    EXPECT_EQ(a.tuned, b.tuned);
}

}  // namespace

TEST(Persistence, MinimalRoundtrip) {
    const auto index = sample_index(false);
    const auto bytes = serialize_index(index);
    const auto back = deserialize_index(bytes);
    expect_same(index, back);
    EXPECT_EQ(serialize_index(back), bytes);
}

TEST(Persistence, RoundtripWithAllSections) {
    for (const auto codec : {CodecKind::SQ8, CodecKind::PQ}) {
        const auto index = sample_index(true, codec);
        vexg::testing::TempDir dir;
        save_index(index, dir / "a.vexg");
        const auto back = load_index(dir / "a.vexg");
        expect_same(index, back);
        EXPECT_EQ(serialize_index(back), serialize_index(index));
    }
}

TEST(Persistence, LoadedIndexSearchesIdentically) {
    const auto index = sample_index(true);
    const auto back = deserialize_index(serialize_index(index));
    const auto queries = build_queries(vexg::testing::uniform_vectors(20, 10, 22), Metric::SquaredL2);
    SearchParams sp;
    sp.L = 30;
    auto r1 = batch_search(index.graph, index.data, queries, sp, 1);
    auto r2 = batch_search(back.graph, back.data, queries, sp, 1);
    map_to_external(index, r1);
    map_to_external(back, r2);
    EXPECT_EQ(r1.ids, r2.ids);
    EXPECT_EQ(r1.distances, r2.distances);
}

TEST(Persistence, HeaderLayout) {
    const auto index = sample_index(true);
    const auto b = serialize_index(index);
    EXPECT_EQ(std::memcmp(b.data(), "VEXGIDX\0", 8), 0);
    EXPECT_EQ(read_le<std::uint32_t>(b, 8), 1u);
    EXPECT_EQ(read_le<std::uint64_t>(b, 12), 300u);
    EXPECT_EQ(read_le<std::uint32_t>(b, 20), 10u);
    EXPECT_EQ(read_le<std::uint32_t>(b, 24), 16u);
    EXPECT_EQ(read_le<std::uint32_t>(b, 28), 8u);
    EXPECT_EQ(read_le<std::uint32_t>(b, 32), index.graph.entry());
    EXPECT_EQ(b[36], static_cast<std::uint8_t>(Metric::SquaredL2));
    EXPECT_EQ(read_le<std::uint32_t>(b, 40), 7u);
    EXPECT_EQ(read_le<std::uint32_t>(b, kHeaderCrcAt), crc32_ref(b.data() + kHeaderAt, 32));
    EXPECT_EQ(read_le<std::uint64_t>(b, section_at(b, 0)), 300u * 8 * 4);
    EXPECT_EQ(read_le<std::uint64_t>(b, section_at(b, 1)), 300u * 16 * 4);
    EXPECT_EQ(read_le<std::uint64_t>(b, section_at(b, 2)), 300u * 4);
    const std::size_t tuned = section_at(b, 4);
    EXPECT_EQ(read_le<std::uint64_t>(b, tuned), 8u);
    EXPECT_EQ(read_le<std::uint32_t>(b, tuned + 8), 7u);
    EXPECT_EQ(read_le<std::uint32_t>(b, tuned + 12), 3u);
    EXPECT_EQ(tuned + 8 + 8 + 4, b.size());
    for (std::size_t s = 0; s < 5; ++s) {
        const std::size_t at = section_at(b, s);
        const auto len = read_le<std::uint64_t>(b, at);
        EXPECT_EQ(read_le<std::uint32_t>(b, at + 8 + len), crc32_ref(b.data() + at + 8, len)) << s;
    }
}

TEST(Persistence, CorruptionNamesTheSection) {
    const auto good = serialize_index(sample_index(true));
    {
        auto b = good;
        b[0] = 'X';
        EXPECT_EQ(failing_section(b), "magic");
    }
    {
        auto b = good;
        write_le<std::uint32_t>(b, 8, 2);
        EXPECT_EQ(failing_section(b), "version");
    }
    {
        auto b = good;
        b[kHeaderAt + 3] ^= 0x10;
        EXPECT_EQ(failing_section(b), "header");
    }
    {
        auto b = good;
        write_le<std::uint32_t>(b, 32, 300);
        fix_header_crc(b);
        EXPECT_EQ(failing_section(b), "header");
    }
    {
        auto b = good;
        write_le<std::uint32_t>(b, 40, 7u | (1u << 9));
        fix_header_crc(b);
        EXPECT_EQ(failing_section(b), "header");
    }
    {
        auto b = good;
        b[section_at(b, 0) + 20] ^= 1;
        EXPECT_EQ(failing_section(b), "adjacency");
    }
    {
        auto b = good;
        write_le<std::uint32_t>(b, section_at(b, 0) + 8, 5000);
        fix_section_crc(b, 0);
        EXPECT_EQ(failing_section(b), "adjacency");
    }
    {
        auto b = good;
        b[section_at(b, 1) + 100] ^= 4;
        EXPECT_EQ(failing_section(b), "vectors");
    }
    {
        auto b = good;
        const std::size_t at = section_at(b, 2) + 8;
        write_le<std::uint32_t>(b, at, read_le<std::uint32_t>(b, at + 4));
        fix_section_crc(b, 2);
        EXPECT_EQ(failing_section(b), "permutation");
    }
    {
        auto b = good;
        b[section_at(b, 3) + 8] = 9;
        fix_section_crc(b, 3);
        EXPECT_EQ(failing_section(b), "codec");
    }
    {
        auto b = good;
        write_le<std::uint32_t>(b, section_at(b, 4) + 12, 0);
        fix_section_crc(b, 4);
        EXPECT_EQ(failing_section(b), "tuned");
    }
    {
        auto b = good;
        b.push_back(0);
        EXPECT_EQ(failing_section(b), "trailer");
    }
}

TEST(Persistence, EveryTruncationIsRejected) {
    const auto good = serialize_index(sample_index(true));
    std::size_t rejected = 0;
    std::size_t tried = 0;
    for (std::size_t len = 0; len < good.size(); len += (len < 200 ? 1 : 97)) {
        const std::vector<std::uint8_t> cut(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
        ++tried;
        try {
            deserialize_index(cut);
        } catch (const FormatError&) {
            ++rejected;
        }
    }
    EXPECT_EQ(rejected, tried);
}

TEST(Persistence, RandomBitFlipsAreRejected) {
    const auto good = serialize_index(sample_index(true));
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        auto b = good;
        const std::size_t at = rng() % b.size();
        b[at] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        EXPECT_THROW(deserialize_index(b), DataError) << "offset " << at;
    }
}

TEST(Persistence, FileErrors) {
    vexg::testing::TempDir dir;
    EXPECT_THROW(load_index(dir / "missing.vexg"), DataError);
    EXPECT_THROW(save_index(sample_index(false), dir / "no" / "such" / "dir.vexg"), DataError);
    {
        std::ofstream(dir / "junk.vexg") << "not an index";
    }
    EXPECT_THROW(load_index(dir / "junk.vexg"), FormatError);
}
