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

#ifndef UPBW_WIRE_HPP_
#define UPBW_WIRE_HPP_

// Wire format shared by the sender and the helpers.
//
//   offset  size  field
//   0       4     magic "UBE1" (55 42 45 31)
//   4       1     type: 0x00 probe, 0x01 completion, 0x02 report
//   5       ...   body, all integers big-endian
//
//   probe:      u64 tab_total_bytes, u32 payload_len, payload_len bytes padding
//   completion: u64 tab_total_bytes
//   report:     u64 uavg_bps, u32 sample_count
//
// Over datagram transports every datagram carries exactly one frame. Over
// stream transports frames are concatenated and recovered by StreamDecoder.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace upbw::wire {

inline constexpr std::array<std::uint8_t, 4> kMagic{0x55, 0x42, 0x45, 0x31};
inline constexpr std::uint32_t kMaxPayload = 1u << 20;

enum class FrameType : std::uint8_t {
    probe = 0x00,
    completion = 0x01,
    report = 0x02,
};

inline constexpr std::size_t kPreambleSize = 5;
inline constexpr std::size_t kProbeHeaderSize = kPreambleSize + 8 + 4;
inline constexpr std::size_t kCompletionSize = kPreambleSize + 8;
inline constexpr std::size_t kReportSize = kPreambleSize + 8 + 4;

// The padding is opaque; it is written as zeros and skipped on decode, so only
// its length is part of the frame value.
struct ProbeFrame {
    std::uint64_t tab_total_bytes{0};
    std::uint32_t payload_len{0};

    std::size_t wire_size() const { return kProbeHeaderSize + payload_len; }
    friend bool operator==(const ProbeFrame&, const ProbeFrame&) = default;
};

struct CompletionFrame {
    std::uint64_t tab_total_bytes{0};
    friend bool operator==(const CompletionFrame&, const CompletionFrame&) = default;
};

struct ReportFrame {
    std::uint64_t uavg_bps{0};
    std::uint32_t sample_count{0};
    friend bool operator==(const ReportFrame&, const ReportFrame&) = default;
};

using Frame = std::variant<ProbeFrame, CompletionFrame, ReportFrame>;

inline std::size_t wire_size(const Frame& frame) {
    struct {
        std::size_t operator()(const ProbeFrame& f) const { return f.wire_size(); }
        std::size_t operator()(const CompletionFrame&) const { return kCompletionSize; }
        std::size_t operator()(const ReportFrame&) const { return kReportSize; }
    } visitor;
    return std::visit(visitor, frame);
}

/// Probe frame whose full wire length is exactly `frame_bytes`.
inline ProbeFrame probe_of_size(std::uint64_t tab, std::size_t frame_bytes) {
    if (frame_bytes < kProbeHeaderSize || frame_bytes - kProbeHeaderSize > kMaxPayload) {
        throw std::invalid_argument("probe frame size out of range");
    }
    return ProbeFrame{tab, static_cast<std::uint32_t>(frame_bytes - kProbeHeaderSize)};
}

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int shift = 24; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int shift = 56; shift >= 0; shift -= 8) {
        out.push_back(static_cast<std::uint8_t>(v >> shift));
    }
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < 4; ++i) v = (v << 8) | in[i];
    return v;
}

inline std::uint64_t get_u64(std::span<const std::uint8_t> in) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | in[i];
    return v;
}

inline void put_preamble(std::vector<std::uint8_t>& out, FrameType type) {
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    out.push_back(static_cast<std::uint8_t>(type));
}

}  // namespace detail

/// Appends the encoding of `frame` to `out`.
inline void encode_frame(const Frame& frame, std::vector<std::uint8_t>& out) {
    if (const auto* probe = std::get_if<ProbeFrame>(&frame)) {
        if (probe->payload_len > kMaxPayload) {
            throw std::invalid_argument("probe payload exceeds 2^20 bytes");
        }
        out.reserve(out.size() + probe->wire_size());
        detail::put_preamble(out, FrameType::probe);
        detail::put_u64(out, probe->tab_total_bytes);
        detail::put_u32(out, probe->payload_len);
        out.insert(out.end(), probe->payload_len, std::uint8_t{0});
    } else if (const auto* done = std::get_if<CompletionFrame>(&frame)) {
        detail::put_preamble(out, FrameType::completion);
        detail::put_u64(out, done->tab_total_bytes);
    } else {
        const auto& report = std::get<ReportFrame>(frame);
        detail::put_preamble(out, FrameType::report);
        detail::put_u64(out, report.uavg_bps);
        detail::put_u32(out, report.sample_count);
    }
}

inline std::vector<std::uint8_t> encode_frame(const Frame& frame) {
    std::vector<std::uint8_t> out;
    encode_frame(frame, out);
    return out;
}

enum class DecodeError {
    bad_magic,     // bytes skipped while searching for the next magic
    unknown_type,  // magic followed by a type byte outside 0x00..0x02
    bad_length,    // probe payload_len above the 2^20 limit
    truncated,     // datagram shorter than its declared frame
    trailing,      // datagram longer than its declared frame
};

struct DecodeFault {
    DecodeError error;
    std::size_t skipped_bytes;
    friend bool operator==(const DecodeFault&, const DecodeFault&) = default;
};

using DecodedItem = std::variant<Frame, DecodeFault>;

struct DecodeResult {
    std::vector<DecodedItem> items;
    std::vector<std::uint8_t> residual;
};

namespace detail {

inline bool magic_at(std::span<const std::uint8_t> buf, std::size_t pos) {
    return buf.size() - pos >= kMagic.size() &&
           std::equal(kMagic.begin(), kMagic.end(), buf.begin() + static_cast<std::ptrdiff_t>(pos));
}

// Length of the longest suffix of `buf` that is a proper prefix of the magic.
inline std::size_t magic_prefix_suffix(std::span<const std::uint8_t> buf) {
    for (std::size_t len = std::min<std::size_t>(kMagic.size() - 1, buf.size()); len > 0; --len) {
        if (std::equal(buf.end() - static_cast<std::ptrdiff_t>(len), buf.end(), kMagic.begin())) {
            return len;
        }
    }
    return 0;
}

// Next position at or after `from` holding the magic, or a position from which
// only a possible magic prefix remains.
inline std::size_t scan_for_magic(std::span<const std::uint8_t> buf, std::size_t from) {
    for (std::size_t pos = from; pos + kMagic.size() <= buf.size(); ++pos) {
        if (magic_at(buf, pos)) return pos;
    }
    const std::size_t tail = magic_prefix_suffix(buf.subspan(std::min(from, buf.size())));
    return buf.size() - tail;
}

}  // namespace detail

/// Greedily decodes complete frames from the front of `buffer`. Frames that
/// are cut off at the end are returned untouched in `residual`; malformed data
/// is reported as a DecodeFault and skipped by scanning for the next magic.
inline DecodeResult decode_stream(std::span<const std::uint8_t> buffer) {
    DecodeResult result;
    std::size_t pos = 0;
    const std::size_t size = buffer.size();

    while (pos < size) {
        if (!detail::magic_at(buffer, pos)) {
            // A short tail that could still grow into the magic waits for more bytes.
            if (size - pos < kMagic.size() &&
                std::equal(buffer.begin() + static_cast<std::ptrdiff_t>(pos), buffer.end(), kMagic.begin())) {
                break;
            }
            const std::size_t next = detail::scan_for_magic(buffer, pos + 1);
            result.items.emplace_back(DecodeFault{DecodeError::bad_magic, next - pos});
            pos = next;
            continue;
        }
        if (size - pos < kPreambleSize) break;

        const auto rest = buffer.subspan(pos);
        const std::uint8_t type = rest[4];
        if (type == static_cast<std::uint8_t>(FrameType::probe)) {
            if (rest.size() < kProbeHeaderSize) break;
            const std::uint32_t payload_len = detail::get_u32(rest.subspan(13));
            if (payload_len > kMaxPayload) {
                const std::size_t next = detail::scan_for_magic(buffer, pos + 1);
                result.items.emplace_back(DecodeFault{DecodeError::bad_length, next - pos});
                pos = next;
                continue;
            }
            if (rest.size() < kProbeHeaderSize + payload_len) break;
            result.items.emplace_back(Frame{ProbeFrame{detail::get_u64(rest.subspan(5)), payload_len}});
            pos += kProbeHeaderSize + payload_len;
        } else if (type == static_cast<std::uint8_t>(FrameType::completion)) {
            if (rest.size() < kCompletionSize) break;
            result.items.emplace_back(Frame{CompletionFrame{detail::get_u64(rest.subspan(5))}});
            pos += kCompletionSize;
        } else if (type == static_cast<std::uint8_t>(FrameType::report)) {
            if (rest.size() < kReportSize) break;
            result.items.emplace_back(
                Frame{ReportFrame{detail::get_u64(rest.subspan(5)), detail::get_u32(rest.subspan(13))}});
            pos += kReportSize;
        } else {
            const std::size_t next = detail::scan_for_magic(buffer, pos + 1);
            result.items.emplace_back(DecodeFault{DecodeError::unknown_type, next - pos});
            pos = next;
        }
    }

    result.residual.assign(buffer.begin() + static_cast<std::ptrdiff_t>(pos), buffer.end());
    return result;
}

/// Incremental decoder for stream transports; keeps the residual between feeds.
class StreamDecoder {
  public:
    std::vector<DecodedItem> feed(std::span<const std::uint8_t> chunk) {
        pending_.insert(pending_.end(), chunk.begin(), chunk.end());
        DecodeResult r = decode_stream(pending_);
        pending_ = std::move(r.residual);
        return std::move(r.items);
    }

    std::size_t buffered() const { return pending_.size(); }

  private:
    std::vector<std::uint8_t> pending_;
};

/// Decodes a datagram that must hold exactly one frame.
inline DecodedItem decode_datagram(std::span<const std::uint8_t> datagram) {
    if (!detail::magic_at(datagram, 0)) {
        return DecodeFault{DecodeError::bad_magic, datagram.size()};
    }
    DecodeResult r = decode_stream(datagram);
    if (r.items.empty()) {
        return DecodeFault{DecodeError::truncated, datagram.size()};
    }
    if (r.items.size() > 1 || !r.residual.empty()) {
        if (std::holds_alternative<DecodeFault>(r.items.front())) return r.items.front();
        return DecodeFault{DecodeError::trailing, datagram.size()};
    }
    return r.items.front();
}

}  // namespace upbw::wire

#endif  // UPBW_WIRE_HPP_
