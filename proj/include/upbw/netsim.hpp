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

#ifndef UPBW_NETSIM_HPP_
#define UPBW_NETSIM_HPP_

// Deterministic discrete-event model of a source's upload path.
//
// Every packet the source sends (probes, completions, background chunks, ping
// requests) enters one FIFO queue drained at sub_bps. Packets addressed to a
// helper then cross that helper's path: an optional shared bottleneck group
// followed by the path's own serialization at ab_bps, a fixed latency and a
// uniform jitter draw. Loss is a Bernoulli draw per frame. Echo RTTs grow
// with the bytes waiting in the FIFO.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "upbw/wire.hpp"

namespace upbw::netsim {

struct PathConfig {
    double ab_bps{1e6};
    double base_latency{0.0};
    double jitter{0.0};
    double loss_prob{0.0};
    std::optional<std::size_t> shared_bottleneck_group;
};

struct BottleneckGroup {
    double capacity_bps{1e6};
};

struct BackgroundFlow {
    double rate_bps{0.0};
    double start{0.0};
    double end{std::numeric_limits<double>::infinity()};
    // Traffic of the application hosting the estimator; its bytes are
    // reported to the sender and advance TAB.
    bool accounted{false};
    std::uint32_t chunk_bytes{4096};
};

struct PingConfig {
    std::vector<double> landmark_base_rtt{0.03};
    double timeout{20.0};
    std::uint32_t request_bytes{64};
};

struct SimConfig {
    double sub_bps{240000.0};
    std::vector<PathConfig> paths;
    std::vector<BottleneckGroup> groups;
    std::vector<BackgroundFlow> background_flows;
    PingConfig ping;
    // Extra link-layer bytes charged per packet on the upload link.
    std::uint32_t per_packet_overhead{0};
    std::uint64_t seed{1};
    std::size_t max_events{50'000'000};
    bool record_trace{false};

    void validate() const {
        if (!(sub_bps > 0.0)) throw std::invalid_argument("sub_bps must be > 0");
        for (const auto& p : paths) {
            if (!(p.ab_bps > 0.0)) throw std::invalid_argument("path ab_bps must be > 0");
            if (!(p.loss_prob >= 0.0 && p.loss_prob <= 1.0)) throw std::invalid_argument("loss_prob must lie in [0, 1]");
            if (p.base_latency < 0.0 || p.jitter < 0.0) throw std::invalid_argument("negative latency or jitter");
            if (p.shared_bottleneck_group && *p.shared_bottleneck_group >= groups.size()) {
                throw std::invalid_argument("unknown shared bottleneck group");
            }
        }
        for (const auto& g : groups) {
            if (!(g.capacity_bps > 0.0)) throw std::invalid_argument("bottleneck capacity must be > 0");
        }
        for (const auto& f : background_flows) {
            if (!(f.rate_bps > 0.0) || f.chunk_bytes == 0) throw std::invalid_argument("background flow needs a positive rate");
        }
        if (ping.landmark_base_rtt.empty()) throw std::invalid_argument("at least one ping landmark is required");
    }
};

enum class EventKind { enqueue, link_done, path_delivery, upstream, ping, flow_tick, timer };

inline std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::enqueue: return "enqueue";
        case EventKind::link_done: return "link-done";
        case EventKind::path_delivery: return "path-delivery";
        case EventKind::upstream: return "upstream";
        case EventKind::ping: return "ping";
        case EventKind::flow_tick: return "flow-tick";
        case EventKind::timer: return "timer";
    }
    return "?";
}

struct TraceRecord {
    double time{0.0};
    EventKind kind{EventKind::timer};
    int helper{-1};
    std::uint64_t bytes{0};
    double rtt{std::numeric_limits<double>::quiet_NaN()};

    bool operator==(const TraceRecord& o) const {
        const bool same_rtt = (std::isnan(rtt) && std::isnan(o.rtt)) || rtt == o.rtt;
        return time == o.time && kind == o.kind && helper == o.helper && bytes == o.bytes && same_rtt;
    }
};

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRecord>& trace) {
    os << "time_s,event,helper,bytes,rtt_s\n";
    const auto old_precision = os.precision(12);
    for (const auto& r : trace) {
        os << r.time << ',' << to_string(r.kind) << ',' << r.helper << ',' << r.bytes << ',';
        if (!std::isnan(r.rtt)) os << r.rtt;
        os << '\n';
    }
    os.precision(old_precision);
}

/// Destination of a packet on the upload link.
struct Destination {
    enum class Kind { helper, background, ping };
    Kind kind{Kind::helper};
    std::size_t index{0};

    static Destination helper(std::size_t i) { return {Kind::helper, i}; }
    static Destination background(std::size_t flow) { return {Kind::background, flow}; }
    static Destination ping() { return {Kind::ping, 0}; }
};

struct Packet {
    std::uint64_t id{0};
    Destination dest;
    std::uint64_t wire_bytes{0};
    std::optional<wire::Frame> frame;
    bool app{false};
    double enqueued_at{0.0};
    double link_done_at{0.0};
};

struct Counters {
    std::uint64_t enqueued{0};
    std::uint64_t delivered{0};
    std::uint64_t lost{0};
    std::uint64_t in_queue{0};
    std::uint64_t in_path{0};

    bool conserved() const { return enqueued == delivered + lost + in_queue + in_path; }
};

class Simulator {
  public:
    using FrameHandler = std::function<void(std::size_t helper, const wire::Frame&, double now)>;
    using LinkDoneHandler = std::function<void(const Packet&, double now)>;
    using AppTrafficHandler = std::function<void(std::uint64_t bytes, double now)>;
    using Action = std::function<void()>;

    explicit Simulator(SimConfig config) : config_(std::move(config)), rng_(config_.seed) {
        config_.validate();
        path_busy_.assign(config_.paths.size(), 0.0);
        group_busy_.assign(config_.groups.size(), 0.0);
        for (std::size_t f = 0; f < config_.background_flows.size(); ++f) {
            schedule(config_.background_flows[f].start, EventKind::flow_tick, [this, f] { flow_tick(f); });
        }
    }

    double now() const { return now_; }
    const SimConfig& config() const { return config_; }
    const Counters& counters() const { return counters_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }
    std::size_t events_processed() const { return events_processed_; }

    void on_helper_frame(FrameHandler h) { helper_frame_ = std::move(h); }
    void on_source_frame(FrameHandler h) { source_frame_ = std::move(h); }
    void on_link_done(LinkDoneHandler h) { link_done_ = std::move(h); }
    void on_app_traffic(AppTrafficHandler h) { app_traffic_ = std::move(h); }
    // Invoked after every processed event; used to check invariants.
    void after_event(Action h) { after_event_ = std::move(h); }

    void schedule(double at, EventKind kind, Action action) {
        if (at < now_) at = now_;
        events_.push(Event{at, next_seq_++, kind, std::move(action)});
    }

    void stop() { stopped_ = true; }

    /// Appends a packet to the FIFO upload queue at the current time.
    std::uint64_t enqueue_send(Destination dest, std::uint64_t bytes, std::optional<wire::Frame> frame = std::nullopt,
                               bool app = false) {
        if (bytes == 0) throw std::invalid_argument("cannot enqueue an empty packet");
        if (dest.kind == Destination::Kind::helper && dest.index >= config_.paths.size()) {
            throw std::out_of_range("no path to that helper");
        }
        Packet pkt;
        pkt.id = next_packet_++;
        pkt.dest = dest;
        pkt.wire_bytes = bytes + config_.per_packet_overhead;
        pkt.frame = std::move(frame);
        pkt.app = app;
        pkt.enqueued_at = now_;
        pkt.link_done_at = std::max(now_, link_free_at_) + static_cast<double>(pkt.wire_bytes) / config_.sub_bps;
        link_free_at_ = pkt.link_done_at;

        counters_.enqueued += pkt.wire_bytes;
        counters_.in_queue += pkt.wire_bytes;
        if (app) app_queue_bytes_ += pkt.wire_bytes;
        record(EventKind::enqueue, helper_id(dest), pkt.wire_bytes);

        const double done = pkt.link_done_at;
        schedule(done, EventKind::link_done, [this, p = std::move(pkt)]() mutable { link_done(std::move(p)); });
        return next_packet_ - 1;
    }

    std::uint64_t enqueue_frame(std::size_t helper, const wire::Frame& frame) {
        return enqueue_send(Destination::helper(helper), wire::wire_size(frame), frame);
    }

    /// Helper-to-source message over the reverse direction of a path.
    void send_upstream(std::size_t helper, const wire::Frame& frame) {
        const auto& path = config_.paths.at(helper);
        if (draw_loss(path.loss_prob)) return;
        const double arrival = now_ + path.base_latency + draw_jitter(path.jitter);
        schedule(arrival, EventKind::upstream, [this, helper, frame] {
            record(EventKind::upstream, static_cast<int>(helper), wire::wire_size(frame));
            if (source_frame_) source_frame_(helper, frame, now_);
        });
    }

    /// Bytes still waiting in (or being serialized by) the upload FIFO.
    double queued_bytes() const { return std::max(0.0, link_free_at_ - now_) * config_.sub_bps; }
    std::uint64_t app_queue_bytes() const { return app_queue_bytes_; }

    /// Echo probe sent now: RTT = base + queued/SUB, nullopt on timeout. The
    /// request itself joins the FIFO.
    std::optional<double> ping(std::size_t landmark = 0, std::optional<double> timeout = std::nullopt) {
        const auto& rtts = config_.ping.landmark_base_rtt;
        const double rtt = rtts[landmark % rtts.size()] + queued_bytes() / config_.sub_bps;
        const double limit = timeout.value_or(config_.ping.timeout);
        const bool timed_out = rtt > limit;
        record(EventKind::ping, -1, config_.ping.request_bytes,
               timed_out ? std::numeric_limits<double>::infinity() : rtt);
        if (config_.ping.request_bytes > 0) enqueue_send(Destination::ping(), config_.ping.request_bytes);
        if (timed_out) return std::nullopt;
        return rtt;
    }

    /// Runs until the event queue drains, stop() is called, or `until`.
    void run(double until = std::numeric_limits<double>::infinity()) {
        while (!stopped_ && !events_.empty()) {
            if (events_.top().time > until) break;
            Event ev = events_.top();
            events_.pop();
            now_ = ev.time;
            if (++events_processed_ > config_.max_events) {
                throw std::runtime_error("simulation exceeded the event limit");
            }
            ev.action();
            if (after_event_) after_event_();
        }
        if (!stopped_ && until != std::numeric_limits<double>::infinity() && now_ < until && events_.empty()) {
            now_ = until;
        }
    }

    bool stopped() const { return stopped_; }

  private:
    struct Event {
        double time;
        std::uint64_t seq;
        EventKind kind;
        Action action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };

    static int helper_id(const Destination& d) {
        return d.kind == Destination::Kind::helper ? static_cast<int>(d.index) : -1;
    }

    void record(EventKind kind, int helper, std::uint64_t bytes, double rtt = std::numeric_limits<double>::quiet_NaN()) {
        if (config_.record_trace) trace_.push_back(TraceRecord{now_, kind, helper, bytes, rtt});
    }

    bool draw_loss(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return std::bernoulli_distribution(p)(rng_);
    }

    double draw_jitter(double jitter) {
        if (jitter <= 0.0) return 0.0;
        return std::uniform_real_distribution<double>(0.0, jitter)(rng_);
    }

    void link_done(Packet pkt) {
        counters_.in_queue -= pkt.wire_bytes;
        if (pkt.app) app_queue_bytes_ -= pkt.wire_bytes;
        record(EventKind::link_done, helper_id(pkt.dest), pkt.wire_bytes);

        if (pkt.dest.kind == Destination::Kind::helper) {
            const std::size_t h = pkt.dest.index;
            const auto& path = config_.paths[h];
            double t = now_;
            if (path.shared_bottleneck_group) {
                const std::size_t g = *path.shared_bottleneck_group;
                t = std::max(t, group_busy_[g]) + static_cast<double>(pkt.wire_bytes) / config_.groups[g].capacity_bps;
                group_busy_[g] = t;
            }
            t = std::max(t, path_busy_[h]) + static_cast<double>(pkt.wire_bytes) / path.ab_bps;
            path_busy_[h] = t;
            // Loss is drawn after path serialization.
            if (draw_loss(path.loss_prob)) {
                counters_.lost += pkt.wire_bytes;
            } else {
                const double arrival = t + path.base_latency + draw_jitter(path.jitter);
                counters_.in_path += pkt.wire_bytes;
                const std::uint64_t bytes = pkt.wire_bytes;
                schedule(arrival, EventKind::path_delivery, [this, h, bytes, f = pkt.frame] {
                    counters_.in_path -= bytes;
                    counters_.delivered += bytes;
                    record(EventKind::path_delivery, static_cast<int>(h), bytes);
                    if (f && helper_frame_) helper_frame_(h, *f, now_);
                });
            }
        } else {
            counters_.delivered += pkt.wire_bytes;
        }
        if (link_done_) link_done_(pkt, now_);
    }

    void flow_tick(std::size_t f) {
        const auto& flow = config_.background_flows[f];
        if (now_ >= flow.end) return;
        record(EventKind::flow_tick, -1, flow.chunk_bytes);
        enqueue_send(Destination::background(f), flow.chunk_bytes, std::nullopt, flow.accounted);
        if (flow.accounted && app_traffic_) app_traffic_(flow.chunk_bytes, now_);
        const double next = now_ + static_cast<double>(flow.chunk_bytes) / flow.rate_bps;
        if (next < flow.end) schedule(next, EventKind::flow_tick, [this, f] { flow_tick(f); });
    }

    SimConfig config_;
    std::mt19937_64 rng_;
    double now_{0.0};
    double link_free_at_{0.0};
    std::vector<double> path_busy_;
    std::vector<double> group_busy_;
    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::uint64_t next_seq_{0};
    std::uint64_t next_packet_{0};
    std::uint64_t app_queue_bytes_{0};
    std::size_t events_processed_{0};
    bool stopped_{false};
    Counters counters_;
    std::vector<TraceRecord> trace_;
    FrameHandler helper_frame_;
    FrameHandler source_frame_;
    LinkDoneHandler link_done_;
    AppTrafficHandler app_traffic_;
    Action after_event_;
};

}  // namespace upbw::netsim

#endif  // UPBW_NETSIM_HPP_
