/*
   Copyright 2026 The upbw Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cstdint>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "upbw/wire.hpp"

namespace upbw::wire {
namespace {

using Bytes = std::vector<std::uint8_t>;

std::vector<Frame> frames_of(const std::vector<DecodedItem>& items) {
    std::vector<Frame> out;
    for (const auto& it : items) {
        if (const auto* f = std::get_if<Frame>(&it)) out.push_back(*f);
    }
    return out;
}

std::size_t skipped_of(const std::vector<DecodedItem>& items) {
    std::size_t n = 0;
    for (const auto& it : items) {
        if (const auto* f = std::get_if<DecodeFault>(&it)) n += f->skipped_bytes;
    }
    return n;
}

Frame random_frame(std::mt19937_64& rng) {
    switch (rng() % 3) {
        case 0: return ProbeFrame{rng(), static_cast<std::uint32_t>(rng() % 3000)};
        case 1: return CompletionFrame{rng()};
        default: return ReportFrame{rng(), static_cast<std::uint32_t>(rng())};
    }
}

// Decodes `stream` through a StreamDecoder fed in random-size chunks.
std::vector<DecodedItem> decode_chunked(const Bytes& stream, std::mt19937_64& rng, std::size_t& residual) {
    StreamDecoder dec;
    std::vector<DecodedItem> items;
    std::size_t pos = 0;
    while (pos < stream.size()) {
        const std::size_t len = std::min<std::size_t>(stream.size() - pos, 1 + rng() % 40);
        auto got = dec.feed(std::span(stream).subspan(pos, len));
        items.insert(items.end(), got.begin(), got.end());
        pos += len;
    }
    residual = dec.buffered();
    return items;
}

TEST(Wire, ProbeGoldenBytes) {
    const Bytes bytes = encode_frame(ProbeFrame{12288, 1024});
    const Bytes header{0x55, 0x42, 0x45, 0x31, 0x00, 0x00, 0x00, 0x00, 0x00,
                       0x00, 0x00, 0x30, 0x00, 0x00, 0x00, 0x04, 0x00};
    ASSERT_EQ(bytes.size(), header.size() + 1024);
    EXPECT_TRUE(std::equal(header.begin(), header.end(), bytes.begin()));
    EXPECT_TRUE(std::all_of(bytes.begin() + 17, bytes.end(), [](std::uint8_t b) { return b == 0; }));
}

TEST(Wire, CompletionGoldenBytes) {
    const Bytes expected{0x55, 0x42, 0x45, 0x31, 0x01, 0, 0, 0, 0, 0, 0, 0, 0};
    EXPECT_EQ(encode_frame(CompletionFrame{0}), expected);
}

TEST(Wire, ReportLayout) {
    const Bytes expected{0x55, 0x42, 0x45, 0x31, 0x02, 0, 0, 0, 0, 0, 0x03, 0xa9, 0x80, 0, 0, 0, 0x07};
    EXPECT_EQ(encode_frame(ReportFrame{240000, 7}), expected);
}

TEST(Wire, PayloadLimit) {
    EXPECT_NO_THROW(encode_frame(ProbeFrame{kProbeHeaderSize + kMaxPayload, kMaxPayload}));
    EXPECT_THROW(encode_frame(ProbeFrame{0, kMaxPayload + 1}), std::invalid_argument);
    EXPECT_THROW(probe_of_size(0, kProbeHeaderSize - 1), std::invalid_argument);
    EXPECT_EQ(probe_of_size(8192, 8192).wire_size(), 8192u);
}

TEST(Wire, EmptyBuffer) {
    const auto r = decode_stream({});
    EXPECT_TRUE(r.items.empty());
    EXPECT_TRUE(r.residual.empty());
}

TEST(Wire, TwoCompletionFrames) {
    Bytes buf;
    encode_frame(CompletionFrame{5}, buf);
    encode_frame(CompletionFrame{9}, buf);
    const auto r = decode_stream(buf);
    ASSERT_EQ(r.items.size(), 2u);
    EXPECT_EQ(std::get<Frame>(r.items[0]), Frame{CompletionFrame{5}});
    EXPECT_EQ(std::get<Frame>(r.items[1]), Frame{CompletionFrame{9}});
    EXPECT_TRUE(r.residual.empty());
}

TEST(Wire, SplitAtByteSeven) {
    const Bytes buf = encode_frame(ProbeFrame{4096, 100});
    StreamDecoder dec;
    EXPECT_TRUE(dec.feed(std::span(buf).first(7)).empty());
    EXPECT_EQ(dec.buffered(), 7u);
    const auto items = dec.feed(std::span(buf).subspan(7));
    ASSERT_EQ(items.size(), 1u);
    EXPECT_EQ(std::get<Frame>(items[0]), (Frame{ProbeFrame{4096, 100}}));
    EXPECT_EQ(dec.buffered(), 0u);
}

TEST(Wire, RoundTripRandomized) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        const Frame f = random_frame(rng);
        const Bytes buf = encode_frame(f);
        EXPECT_EQ(buf.size(), wire_size(f));
        const auto r = decode_stream(buf);
        ASSERT_EQ(r.items.size(), 1u);
        EXPECT_EQ(std::get<Frame>(r.items[0]), f);
        EXPECT_TRUE(r.residual.empty());
        EXPECT_EQ(std::get<Frame>(decode_datagram(buf)), f);
    }
}

TEST(Wire, ChunkInvarianceOnValidStreams) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        Bytes stream;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) encode_frame(random_frame(rng), stream);
        // Leave a partial frame at the end half of the time.
        if (rng() % 2) {
            const Bytes extra = encode_frame(random_frame(rng));
            stream.insert(stream.end(), extra.begin(), extra.begin() + static_cast<std::ptrdiff_t>(rng() % extra.size()));
        }
        const auto whole = decode_stream(stream);
        std::size_t residual = 0;
        const auto chunked = decode_chunked(stream, rng, residual);
        EXPECT_EQ(chunked, whole.items);
        EXPECT_EQ(residual, whole.residual.size());
    }
}

TEST(Wire, ChunkInvarianceWithGarbage) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 1000; ++trial) {
        Bytes stream;
        const int n = 1 + static_cast<int>(rng() % 8);
        for (int i = 0; i < n; ++i) {
            if (rng() % 3 == 0) {
                const std::size_t k = 1 + rng() % 20;
                for (std::size_t b = 0; b < k; ++b) stream.push_back(static_cast<std::uint8_t>(rng()));
            }
            encode_frame(random_frame(rng), stream);
        }
        const auto whole = decode_stream(stream);
        std::size_t residual = 0;
        const auto chunked = decode_chunked(stream, rng, residual);
        EXPECT_EQ(frames_of(chunked), frames_of(whole.items));
        EXPECT_EQ(skipped_of(chunked), skipped_of(whole.items));
        EXPECT_EQ(residual, whole.residual.size());
    }
}

TEST(Wire, ResyncAfterLeadingGarbage) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<Frame> frames;
        Bytes stream;
        const std::size_t k = 1 + rng() % 64;
        for (std::size_t b = 0; b < k; ++b) stream.push_back(static_cast<std::uint8_t>(rng() % 0x50));
        for (int i = 0; i < 4; ++i) {
            frames.push_back(random_frame(rng));
            encode_frame(frames.back(), stream);
        }
        const auto r = decode_stream(stream);
        EXPECT_EQ(frames_of(r.items), frames);
        EXPECT_EQ(skipped_of(r.items), k);
    }
}

TEST(Wire, CorruptedFrameLosesOnlyItself) {
    Bytes stream;
    encode_frame(CompletionFrame{1}, stream);
    encode_frame(CompletionFrame{2}, stream);
    encode_frame(ReportFrame{3, 1}, stream);
    stream[13 + 4] = 0x7f;  // type byte of the second frame
    const auto r = decode_stream(stream);
    const std::vector<Frame> expected{CompletionFrame{1}, ReportFrame{3, 1}};
    EXPECT_EQ(frames_of(r.items), expected);
    ASSERT_EQ(r.items.size(), 3u);
    EXPECT_EQ(std::get<DecodeFault>(r.items[1]).error, DecodeError::unknown_type);
}

TEST(Wire, OversizedLengthIsReported) {
    Bytes stream = encode_frame(ProbeFrame{100, 10});
    stream[13] = 0xff;
    encode_frame(CompletionFrame{4}, stream);
    const auto r = decode_stream(stream);
    ASSERT_FALSE(r.items.empty());
    EXPECT_EQ(std::get<DecodeFault>(r.items[0]).error, DecodeError::bad_length);
    EXPECT_EQ(frames_of(r.items), std::vector<Frame>{CompletionFrame{4}});
}

TEST(Wire, DatagramRules) {
    Bytes two = encode_frame(CompletionFrame{1});
    encode_frame(CompletionFrame{2}, two);
    EXPECT_EQ(std::get<DecodeFault>(decode_datagram(two)).error, DecodeError::trailing);

    const Bytes probe = encode_frame(ProbeFrame{64, 40});
    EXPECT_EQ(std::get<DecodeFault>(decode_datagram(std::span(probe).first(30))).error, DecodeError::truncated);

    const Bytes junk{1, 2, 3};
    EXPECT_EQ(std::get<DecodeFault>(decode_datagram(junk)).error, DecodeError::bad_magic);
}

}  // namespace
}  // namespace upbw::wire
