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

#ifndef UPBW_TRANSPORT_HPP_
#define UPBW_TRANSPORT_HPP_

// POSIX UDP/TCP adapters that drive the sender and helper engines over real
// sockets. Every session is single-threaded: one poll() loop feeds the engine
// timestamped events.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

#include "upbw/aub.hpp"
#include "upbw/helper.hpp"
#include "upbw/sender.hpp"
#include "upbw/wire.hpp"

namespace upbw::transport {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline void sleep_until_offset(Clock::time_point t0, double at) {
    const double wait = at - seconds_since(t0);
    if (wait > 0) std::this_thread::sleep_for(std::chrono::duration<double>(wait));
}

enum class Kind { udp, tcp };

/// Largest probe frame that fits in one UDP datagram.
inline constexpr std::size_t kMaxDatagram = 65507;

struct Endpoint {
    sockaddr_in addr{};
    std::string text;

    friend bool operator==(const Endpoint& a, const Endpoint& b) {
        return a.addr.sin_addr.s_addr == b.addr.sin_addr.s_addr && a.addr.sin_port == b.addr.sin_port;
    }
};

inline bool same_address(const sockaddr_in& a, const sockaddr_in& b) {
    return a.sin_addr.s_addr == b.sin_addr.s_addr && a.sin_port == b.sin_port;
}

/// "host:port" with an IPv4 address or a resolvable name; port may be 0 for binding.
inline Endpoint parse_endpoint(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("expected host:port, got '" + text + "'");
    const std::string host = text.substr(0, colon);
    const std::string port = text.substr(colon + 1);
    if (port.empty() || port.find_first_not_of("0123456789") != std::string::npos || std::stoul(port) > 65535) {
        throw std::invalid_argument("bad port in '" + text + "'");
    }
    Endpoint ep;
    ep.text = text;
    ep.addr.sin_family = AF_INET;
    ep.addr.sin_port = htons(static_cast<std::uint16_t>(std::stoul(port)));
    if (host.empty() || host == "*") {
        ep.addr.sin_addr.s_addr = htonl(INADDR_ANY);
        return ep;
    }
    if (inet_pton(AF_INET, host.c_str(), &ep.addr.sin_addr) == 1) return ep;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    addrinfo* res = nullptr;
    if (getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || res == nullptr) {
        throw std::invalid_argument("cannot resolve host '" + host + "'");
    }
    ep.addr.sin_addr = reinterpret_cast<sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return ep;
}

[[noreturn]] inline void throw_errno(const std::string& what) {
    throw std::system_error(errno, std::generic_category(), what);
}

class Fd {
  public:
    Fd() = default;
    explicit Fd(int fd) : fd_(fd) {}
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        if (this != &o) {
            reset();
            fd_ = std::exchange(o.fd_, -1);
        }
        return *this;
    }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    ~Fd() { reset(); }

    int get() const { return fd_; }
    bool valid() const { return fd_ >= 0; }
    void reset() {
        if (fd_ >= 0) ::close(fd_);
        fd_ = -1;
    }

  private:
    int fd_{-1};
};

// Waits up to `timeout` seconds for `fd` to become readable.
inline bool wait_readable(int fd, double timeout) {
    pollfd p{fd, POLLIN, 0};
    const int ms = timeout <= 0 ? 0 : static_cast<int>(std::ceil(timeout * 1000.0));
    for (;;) {
        const int rc = ::poll(&p, 1, ms);
        if (rc >= 0) return rc > 0;
        if (errno != EINTR) throw_errno("poll");
    }
}

inline std::uint16_t local_port_of(int fd) {
    sockaddr_in a{};
    socklen_t len = sizeof(a);
    if (::getsockname(fd, reinterpret_cast<sockaddr*>(&a), &len) != 0) throw_errno("getsockname");
    return ntohs(a.sin_port);
}

struct Datagram {
    std::vector<std::uint8_t> bytes;
    sockaddr_in from{};
};

class UdpSocket {
  public:
    static UdpSocket open() {
        UdpSocket s;
        s.fd_ = Fd(::socket(AF_INET, SOCK_DGRAM, 0));
        if (!s.fd_.valid()) throw_errno("socket");
        const int buf = 4 << 20;
        ::setsockopt(s.fd_.get(), SOL_SOCKET, SO_RCVBUF, &buf, sizeof(buf));
        ::setsockopt(s.fd_.get(), SOL_SOCKET, SO_SNDBUF, &buf, sizeof(buf));
        return s;
    }

    static UdpSocket bind(const Endpoint& at) {
        UdpSocket s = open();
        if (::bind(s.fd_.get(), reinterpret_cast<const sockaddr*>(&at.addr), sizeof(at.addr)) != 0) {
            throw_errno("bind " + at.text);
        }
        return s;
    }

    std::uint16_t local_port() const { return local_port_of(fd_.get()); }

    /// False when the datagram was dropped locally.
    bool send_to(std::span<const std::uint8_t> bytes, const sockaddr_in& to) {
        for (;;) {
            const auto rc = ::sendto(fd_.get(), bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to),
                                     sizeof(to));
            if (rc >= 0) return true;
            if (errno == EINTR) continue;
            if (errno == ENOBUFS || errno == EAGAIN || errno == ECONNREFUSED) return false;
            throw_errno("sendto");
        }
    }

    std::optional<Datagram> receive(double timeout) {
        if (!wait_readable(fd_.get(), timeout)) return std::nullopt;
        Datagram d;
        d.bytes.resize(kMaxDatagram + 64);
        socklen_t len = sizeof(d.from);
        const auto rc =
            ::recvfrom(fd_.get(), d.bytes.data(), d.bytes.size(), 0, reinterpret_cast<sockaddr*>(&d.from), &len);
        if (rc < 0) {
            if (errno == EINTR || errno == EAGAIN || errno == ECONNREFUSED) return std::nullopt;
            throw_errno("recvfrom");
        }
        d.bytes.resize(static_cast<std::size_t>(rc));
        return d;
    }

    int fd() const { return fd_.get(); }

  private:
    Fd fd_;
};

class TcpStream {
  public:
    TcpStream() = default;
    explicit TcpStream(Fd fd) : fd_(std::move(fd)) {
        const int one = 1;
        ::setsockopt(fd_.get(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    }

    /// nullopt when the peer cannot be reached within `timeout` seconds.
    static std::optional<TcpStream> connect(const Endpoint& to, double timeout) {
        Fd fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (!fd.valid()) throw_errno("socket");
        const int flags = ::fcntl(fd.get(), F_GETFL, 0);
        ::fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
        int rc = ::connect(fd.get(), reinterpret_cast<const sockaddr*>(&to.addr), sizeof(to.addr));
        if (rc != 0 && errno != EINPROGRESS) return std::nullopt;
        if (rc != 0) {
            pollfd p{fd.get(), POLLOUT, 0};
            if (::poll(&p, 1, static_cast<int>(timeout * 1000.0)) <= 0) return std::nullopt;
            int err = 0;
            socklen_t len = sizeof(err);
            ::getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
            if (err != 0) return std::nullopt;
        }
        ::fcntl(fd.get(), F_SETFL, flags);
        return TcpStream(std::move(fd));
    }

    bool write_all(std::span<const std::uint8_t> bytes) {
        std::size_t done = 0;
        while (done < bytes.size()) {
            const auto rc = ::send(fd_.get(), bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
            if (rc < 0) {
                if (errno == EINTR) continue;
                return false;
            }
            done += static_cast<std::size_t>(rc);
        }
        return true;
    }

    /// nullopt on timeout; an empty vector at end of stream.
    std::optional<std::vector<std::uint8_t>> read_some(double timeout) {
        if (!wait_readable(fd_.get(), timeout)) return std::nullopt;
        std::vector<std::uint8_t> buf(64 * 1024);
        for (;;) {
            const auto rc = ::recv(fd_.get(), buf.data(), buf.size(), 0);
            if (rc < 0 && errno == EINTR) continue;
            buf.resize(rc < 0 ? 0 : static_cast<std::size_t>(rc));
            return buf;
        }
    }

    int fd() const { return fd_.get(); }
    bool valid() const { return fd_.valid(); }

  private:
    Fd fd_;
};

class TcpListener {
  public:
    static TcpListener bind(const Endpoint& at) {
        TcpListener l;
        l.fd_ = Fd(::socket(AF_INET, SOCK_STREAM, 0));
        if (!l.fd_.valid()) throw_errno("socket");
        const int one = 1;
        ::setsockopt(l.fd_.get(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
        if (::bind(l.fd_.get(), reinterpret_cast<const sockaddr*>(&at.addr), sizeof(at.addr)) != 0) {
            throw_errno("bind " + at.text);
        }
        if (::listen(l.fd_.get(), 4) != 0) throw_errno("listen");
        return l;
    }

    std::uint16_t local_port() const { return local_port_of(fd_.get()); }

    std::optional<TcpStream> accept(double timeout) {
        if (!wait_readable(fd_.get(), timeout)) return std::nullopt;
        Fd fd(::accept(fd_.get(), nullptr, nullptr));
        if (!fd.valid()) return std::nullopt;
        return TcpStream(std::move(fd));
    }

  private:
    Fd fd_;
};

// ---------------------------------------------------------------- helper side

struct HelperSessionResult {
    std::optional<HelperReport> report;
    bool completed{false};
    std::size_t accepted{0};
    std::size_t discarded{0};
    std::size_t samples{0};
    std::size_t decode_faults{0};
};

/// One UDP helper session. Completion frames seen before the first probe are
/// leftovers of an earlier session and are ignored.
inline HelperSessionResult run_udp_helper(UdpSocket& sock, const FilterParams& params) {
    const auto t0 = Clock::now();
    HelperEngine engine(params, 0.0);
    HelperSessionResult out;
    std::optional<sockaddr_in> source;
    for (;;) {
        const double now = seconds_since(t0);
        if (engine.on_tick(now)) break;
        const auto dg = sock.receive(engine.idle_deadline() - now);
        if (!dg) continue;
        const double t = seconds_since(t0);
        const auto item = wire::decode_datagram(dg->bytes);
        const auto* frame = std::get_if<wire::Frame>(&item);
        if (!frame) {
            ++out.decode_faults;
            continue;
        }
        if (const auto* probe = std::get_if<wire::ProbeFrame>(frame)) {
            engine.accept_frame(probe->tab_total_bytes, t);
            source = dg->from;
        } else if (std::holds_alternative<wire::CompletionFrame>(*frame) && !engine.accepted().empty()) {
            engine.on_completion();
            out.completed = true;
            source = dg->from;
            break;
        }
    }
    out.report = engine.report();
    out.accepted = engine.accepted().size();
    out.discarded = engine.discarded();
    out.samples = engine.samples().size();
    if (out.report && source) {
        const auto bytes = wire::encode_frame(wire::Frame{out.report->to_frame()});
        for (int i = 0; i < 3; ++i) sock.send_to(bytes, *source);
    }
    return out;
}

/// One TCP helper session on an accepted connection; the report goes back on
/// the same stream.
inline HelperSessionResult run_tcp_helper(TcpStream& stream, const FilterParams& params) {
    const auto t0 = Clock::now();
    HelperEngine engine(params, 0.0);
    HelperSessionResult out;
    wire::StreamDecoder decoder;
    bool open = true;
    while (open) {
        const double now = seconds_since(t0);
        if (engine.on_tick(now)) break;
        const auto chunk = stream.read_some(engine.idle_deadline() - now);
        if (!chunk) continue;
        if (chunk->empty()) open = false;
        const double t = seconds_since(t0);
        for (const auto& item : decoder.feed(*chunk)) {
            const auto* frame = std::get_if<wire::Frame>(&item);
            if (!frame) {
                ++out.decode_faults;
                continue;
            }
            if (const auto* probe = std::get_if<wire::ProbeFrame>(frame)) {
                engine.accept_frame(probe->tab_total_bytes, t);
            } else if (std::holds_alternative<wire::CompletionFrame>(*frame)) {
                engine.on_completion();
                out.completed = true;
                open = false;
                break;
            }
        }
    }
    out.report = engine.report();
    out.accepted = engine.accepted().size();
    out.discarded = engine.discarded();
    out.samples = engine.samples().size();
    if (out.report) stream.write_all(wire::encode_frame(wire::Frame{out.report->to_frame()}));
    return out;
}

// ---------------------------------------------------------------- sender side

struct RealSenderOptions {
    SenderConfig sender;
    AggregationParams aggregation;
    Kind transport{Kind::udp};
    double connect_timeout{2.0};
    // Wait for reports after the completion frames, seconds.
    double report_timeout{10.0};
};

struct RealSenderResult {
    CapacityEstimate estimate;
    std::vector<std::optional<wire::ReportFrame>> reports;
    std::vector<bool> reachable;
    std::uint64_t bytes_sent{0};
    std::size_t probes_sent{0};
    double probe_phase_s{0.0};
    double total_s{0.0};
};

namespace detail {

class ProbeBuffer {
  public:
    std::span<const std::uint8_t> encode(const wire::ProbeFrame& f) {
        buf_.clear();
        wire::encode_frame(wire::Frame{f}, buf_);
        return buf_;
    }

  private:
    std::vector<std::uint8_t> buf_;
};

}  // namespace detail

/// Capacity test against real helpers. Peers that cannot be connected (TCP)
/// are left out of the schedule; the PB threshold still counts them.
inline RealSenderResult run_real_sender(const std::vector<Endpoint>& peers, const RealSenderOptions& opts) {
    if (peers.empty()) throw std::invalid_argument("at least one helper address is required");
    RealSenderResult out;
    out.reports.resize(peers.size());
    out.reachable.assign(peers.size(), opts.transport == Kind::udp);

    std::vector<TcpStream> streams(peers.size());
    if (opts.transport == Kind::tcp) {
        for (std::size_t i = 0; i < peers.size(); ++i) {
            if (auto s = TcpStream::connect(peers[i], opts.connect_timeout)) {
                streams[i] = std::move(*s);
                out.reachable[i] = true;
            }
        }
    }
    std::vector<std::size_t> live;
    for (std::size_t i = 0; i < peers.size(); ++i) {
        if (out.reachable[i]) live.push_back(i);
    }
    if (live.empty()) {
        out.estimate = aggregate_reports({}, opts.aggregation, peers.size());
        return out;
    }

    SenderConfig cfg = opts.sender;
    auto pick = [&](const std::vector<std::size_t>& v) {
        if (v.size() <= 1) return v;
        std::vector<std::size_t> r;
        for (std::size_t i : live) r.push_back(v.at(i));
        return r;
    };
    cfg.packets_per_helper = pick(cfg.packets_per_helper);
    cfg.packet_size = pick(cfg.packet_size);
    cfg.n_helpers = live.size();
    cfg.send_order.clear();
    if (opts.transport == Kind::udp) {
        for (std::size_t i = 0; i < cfg.n_helpers; ++i) {
            if (cfg.size_for(i) > kMaxDatagram) throw std::invalid_argument("UDP probe frames must fit in one datagram");
        }
    }

    UdpSocket udp = UdpSocket::open();
    detail::ProbeBuffer buffer;
    const auto t0 = Clock::now();
    SenderEngine engine(cfg, 0.0);
    for (;;) {
        const double now = seconds_since(t0);
        const SendDecision d = engine.schedule_next(now, 0);
        if (d.kind == SendDecision::Kind::done) break;
        if (d.kind == SendDecision::Kind::defer) {
            sleep_until_offset(t0, d.retry_at);
            continue;
        }
        const std::size_t peer = live[d.probe->helper];
        const auto bytes = buffer.encode(d.probe->frame);
        if (opts.transport == Kind::udp) {
            udp.send_to(bytes, peers[peer].addr);
        } else if (!streams[peer].write_all(bytes)) {
            out.reachable[peer] = false;
        }
        out.bytes_sent += bytes.size();
        ++out.probes_sent;
    }
    out.probe_phase_s = seconds_since(t0);

    const auto done = wire::encode_frame(wire::Frame{engine.completion_frame()});
    if (opts.transport == Kind::udp) {
        for (int rep = 0; rep < 3; ++rep) {
            for (std::size_t i : live) udp.send_to(done, peers[i].addr);
        }
    } else {
        for (std::size_t i : live) streams[i].write_all(done);
    }

    const double deadline = seconds_since(t0) + opts.report_timeout;
    std::size_t got = 0;
    auto take = [&](std::size_t peer, const wire::Frame& frame) {
        if (const auto* rep = std::get_if<wire::ReportFrame>(&frame)) {
            if (!out.reports[peer]) ++got;
            out.reports[peer] = *rep;
        }
    };
    if (opts.transport == Kind::udp) {
        while (got < live.size()) {
            const double left = deadline - seconds_since(t0);
            if (left <= 0) break;
            const auto dg = udp.receive(left);
            if (!dg) continue;
            const auto item = wire::decode_datagram(dg->bytes);
            const auto* frame = std::get_if<wire::Frame>(&item);
            if (!frame) continue;
            for (std::size_t i : live) {
                if (same_address(peers[i].addr, dg->from)) take(i, *frame);
            }
        }
    } else {
        for (std::size_t i : live) {
            wire::StreamDecoder dec;
            while (!out.reports[i]) {
                const double left = deadline - seconds_since(t0);
                if (left <= 0) break;
                const auto chunk = streams[i].read_some(left);
                if (!chunk) continue;
                if (chunk->empty()) break;
                for (const auto& item : dec.feed(*chunk)) {
                    if (const auto* frame = std::get_if<wire::Frame>(&item)) take(i, *frame);
                }
            }
        }
    }
    out.total_s = seconds_since(t0);

    std::vector<double> values;
    for (const auto& r : out.reports) {
        if (r) values.push_back(static_cast<double>(r->uavg_bps));
    }
    out.estimate = aggregate_reports(values, opts.aggregation, peers.size());
    return out;
}

// ------------------------------------------------------------------ echo/ping

inline constexpr std::array<std::uint8_t, 4> kEchoMagic{'U', 'B', 'E', 'P'};

/// Answers every datagram with its own bytes until `duration` elapses
/// (forever when duration <= 0).
inline std::size_t run_echo_server(UdpSocket& sock, double duration) {
    const auto t0 = Clock::now();
    std::size_t answered = 0;
    for (;;) {
        double wait = 1.0;
        if (duration > 0) {
            wait = duration - seconds_since(t0);
            if (wait <= 0) break;
        }
        if (auto dg = sock.receive(wait)) {
            sock.send_to(dg->bytes, dg->from);
            ++answered;
        }
    }
    return answered;
}

struct RealPingOptions {
    std::vector<Endpoint> helpers;
    std::vector<Endpoint> landmarks;
    std::size_t frame_bytes{512};
    std::uint32_t request_bytes{64};
};

/// Uploads probe frames to the helpers at params.rate while sending a UDP
/// echo request to the landmarks (round-robin) every ping_interval.
inline PingStats run_real_ping_probe(const PingProbeParams& params, const RealPingOptions& opts) {
    params.validate();
    if (opts.landmarks.empty()) throw std::invalid_argument("at least one landmark is required");
    if (params.rate > 0 && opts.helpers.empty()) throw std::invalid_argument("uploading needs at least one helper");

    UdpSocket upload = UdpSocket::open();
    UdpSocket pinger = UdpSocket::open();
    detail::ProbeBuffer buffer;
    std::optional<SenderEngine> engine;
    if (params.rate > 0) {
        SenderConfig cfg;
        cfg.n_helpers = opts.helpers.size();
        cfg.packet_size = {opts.frame_bytes};
        const auto total = static_cast<std::size_t>(std::ceil(params.rate * params.duration / static_cast<double>(opts.frame_bytes)));
        cfg.packets_per_helper = {total / cfg.n_helpers + 2};
        cfg.rate_limit = params.rate;
        engine.emplace(cfg, 0.0);
    }

    const auto n_pings = static_cast<std::size_t>(std::ceil(params.duration / params.ping_interval));
    std::vector<std::optional<double>> rtts(n_pings);
    std::vector<double> sent_at(n_pings, 0.0);
    std::size_t next_ping = 0;
    std::uint64_t probe_bytes = 0;
    double next_probe = 0.0;

    const auto t0 = Clock::now();
    auto drain = [&](double timeout) {
        while (auto dg = pinger.receive(timeout)) {
            timeout = 0;
            const double now = seconds_since(t0);
            if (dg->bytes.size() < 8 || !std::equal(kEchoMagic.begin(), kEchoMagic.end(), dg->bytes.begin())) continue;
            std::uint32_t seq = 0;
            for (int i = 0; i < 4; ++i) seq = (seq << 8) | dg->bytes[4 + static_cast<std::size_t>(i)];
            if (seq >= n_pings || rtts[seq]) continue;
            const double rtt = now - sent_at[seq];
            if (rtt <= params.ping_timeout) rtts[seq] = rtt;
        }
    };

    for (;;) {
        const double now = seconds_since(t0);
        if (now >= params.duration && next_ping >= n_pings) break;
        if (next_ping < n_pings && now >= static_cast<double>(next_ping) * params.ping_interval) {
            std::vector<std::uint8_t> req(std::max<std::size_t>(opts.request_bytes, 8), 0);
            std::copy(kEchoMagic.begin(), kEchoMagic.end(), req.begin());
            for (int i = 0; i < 4; ++i) req[4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(next_ping >> (24 - 8 * i));
            sent_at[next_ping] = now;
            pinger.send_to(req, opts.landmarks[next_ping % opts.landmarks.size()].addr);
            ++next_ping;
            continue;
        }
        if (engine && now < params.duration && now >= next_probe) {
            const SendDecision d = engine->schedule_next(now, 0);
            if (d.kind == SendDecision::Kind::emit) {
                const auto bytes = buffer.encode(d.probe->frame);
                upload.send_to(bytes, opts.helpers[d.probe->helper].addr);
                probe_bytes += bytes.size();
                continue;
            }
            next_probe = d.kind == SendDecision::Kind::defer ? d.retry_at : params.duration;
        }
        double wake = params.duration;
        if (next_ping < n_pings) wake = std::min(wake, static_cast<double>(next_ping) * params.ping_interval);
        if (engine) wake = std::min(wake, next_probe);
        drain(std::max(0.0, wake - seconds_since(t0)));
    }

    // Late replies may still arrive until the last request times out.
    const double last_deadline = (n_pings ? sent_at[n_pings - 1] : 0.0) + params.ping_timeout;
    while (std::any_of(rtts.begin(), rtts.end(), [](const auto& r) { return !r; })) {
        const double left = last_deadline - seconds_since(t0);
        if (left <= 0) break;
        drain(std::min(left, 0.05));
    }

    PingStats stats = summarize_pings(std::move(rtts), params);
    stats.send_rate_bps = static_cast<double>(probe_bytes) / params.duration;
    return stats;
}

}  // namespace upbw::transport

#endif  // UPBW_TRANSPORT_HPP_
