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

#ifndef UPBW_SCENARIO_HPP_
#define UPBW_SCENARIO_HPP_

// Glue between the engines and the simulator: a complete capacity test, a
// rate-limited run, the AUB search and the ping procedure, all in simulated
// time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "upbw/aub.hpp"
#include "upbw/helper.hpp"
#include "upbw/netsim.hpp"
#include "upbw/sender.hpp"
#include "upbw/wire.hpp"

namespace upbw::netsim {

struct CapacityTestOptions {
    SenderConfig sender;
    FilterParams filter;
    AggregationParams aggregation;
    // Probe frames the sender keeps queued on the upload link. Two is enough
    // to keep the link busy without flooding it.
    std::size_t queue_depth{2};
    // Report deadline after completion, in units of the idle timeout.
    double report_deadline_factor{2.0};
    // Hard bound on simulated time.
    double time_limit{1e6};
};

struct EmittedProbe {
    double time{0.0};
    std::size_t helper{0};
    std::uint64_t tab{0};
    std::uint64_t bytes{0};
};

struct HelperOutcome {
    std::vector<ArrivalRecord> accepted;
    std::vector<double> samples;
    std::optional<HelperReport> report;
    std::optional<wire::ReportFrame> received_by_sender;
    std::size_t discarded{0};
    std::size_t clock_anomalies{0};
};

struct CapacityTestResult {
    CapacityEstimate estimate;
    std::vector<HelperOutcome> helpers;
    std::vector<EmittedProbe> emitted;
    std::optional<double> completion_time;
    double end_time{0.0};
    std::uint64_t final_tab{0};
    std::uint64_t app_bytes{0};
    Counters counters;
    bool conservation_held{true};
    std::vector<TraceRecord> trace;
};

/// Runs one capacity test to completion: probes until every helper got its
/// M(i) frames, completion frames, then reports until all helpers answered
/// or the report deadline passed.
inline CapacityTestResult run_capacity_test(const SimConfig& sim_config, const CapacityTestOptions& opts,
                                            bool check_conservation = false) {
    if (opts.sender.n_helpers != sim_config.paths.size()) {
        throw std::invalid_argument("sender helper count must match the simulated paths");
    }
    if (opts.queue_depth < 1) throw std::invalid_argument("queue depth must be >= 1");

    Simulator sim(sim_config);
    SenderEngine sender(opts.sender, 0.0);
    const std::size_t n = opts.sender.n_helpers;
    std::vector<HelperEngine> helpers;
    helpers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) helpers.emplace_back(opts.filter, 0.0);

    CapacityTestResult result;
    result.helpers.resize(n);
    std::vector<bool> reported(n, false);
    std::size_t outstanding = 0;
    bool completion_sent = false;
    std::optional<double> retry_pending;

    auto finalize_helper = [&](std::size_t i) {
        if (reported[i]) return;
        reported[i] = true;
        if (auto rep = helpers[i].report()) sim.send_upstream(i, wire::Frame{rep->to_frame()});
    };

    std::function<void()> try_send = [&]() {
        while (!completion_sent && outstanding < opts.queue_depth) {
            const double now = sim.now();
            const SendDecision d = sender.schedule_next(now, sim.app_queue_bytes());
            if (d.kind == SendDecision::Kind::emit) {
                const auto& probe = *d.probe;
                sim.enqueue_frame(probe.helper, wire::Frame{probe.frame});
                ++outstanding;
                result.emitted.push_back(EmittedProbe{now, probe.helper, probe.frame.tab_total_bytes,
                                                      probe.frame.wire_size()});
            } else if (d.kind == SendDecision::Kind::defer) {
                if (!retry_pending || *retry_pending > d.retry_at) {
                    retry_pending = d.retry_at;
                    sim.schedule(d.retry_at, EventKind::timer, [&, at = d.retry_at] {
                        if (retry_pending && *retry_pending == at) retry_pending.reset();
                        try_send();
                    });
                }
                return;
            } else {
                completion_sent = true;
                result.completion_time = now;
                const auto done = wire::Frame{sender.completion_frame()};
                for (std::size_t i = 0; i < n; ++i) sim.enqueue_frame(i, done);
                const double deadline = now + opts.report_deadline_factor * opts.filter.idle_timeout;
                sim.schedule(deadline, EventKind::timer, [&] { sim.stop(); });
                return;
            }
        }
    };

    sim.on_link_done([&](const Packet& pkt, double) {
        if (pkt.frame && std::holds_alternative<wire::ProbeFrame>(*pkt.frame)) --outstanding;
        try_send();
    });
    sim.on_app_traffic([&](std::uint64_t bytes, double) { sender.account_app_traffic(bytes); });
    sim.on_helper_frame([&](std::size_t i, const wire::Frame& frame, double now) {
        if (const auto* probe = std::get_if<wire::ProbeFrame>(&frame)) {
            helpers[i].accept_frame(probe->tab_total_bytes, now);
            if (!helpers[i].finalized()) {
                sim.schedule(helpers[i].idle_deadline(), EventKind::timer, [&, i] {
                    if (helpers[i].on_tick(sim.now())) finalize_helper(i);
                });
            }
        } else if (std::holds_alternative<wire::CompletionFrame>(frame)) {
            helpers[i].on_completion();
            finalize_helper(i);
        }
    });
    sim.on_source_frame([&](std::size_t i, const wire::Frame& frame, double) {
        if (const auto* rep = std::get_if<wire::ReportFrame>(&frame)) {
            sender.on_report(i, *rep);
            result.helpers[i].received_by_sender = *rep;
            if (sender.all_reports_in()) sim.stop();
        }
    });
    if (check_conservation) {
        sim.after_event([&] {
            if (!sim.counters().conserved()) result.conservation_held = false;
        });
    }
    for (std::size_t i = 0; i < n; ++i) {
        sim.schedule(helpers[i].idle_deadline(), EventKind::timer, [&, i] {
            if (helpers[i].on_tick(sim.now())) finalize_helper(i);
        });
    }

    sim.schedule(0.0, EventKind::timer, [&] { try_send(); });
    sim.run(opts.time_limit);

    result.estimate = sender.finish(opts.aggregation);
    result.end_time = sim.now();
    result.final_tab = sender.tab();
    result.app_bytes = sender.app_bytes();
    result.counters = sim.counters();
    result.trace = sim.trace();
    for (std::size_t i = 0; i < n; ++i) {
        auto& out = result.helpers[i];
        out.accepted = helpers[i].accepted();
        out.samples = helpers[i].samples();
        out.report = helpers[i].report();
        out.discarded = helpers[i].discarded();
        out.clock_anomalies = helpers[i].clock_anomalies();
    }
    return result;
}

/// Probes per helper needed to keep a rate-limited test running for roughly
/// `duration` seconds; never fewer than `min_per_helper`.
inline std::size_t probes_per_helper_for(double rate, double duration, std::size_t frame_bytes, std::size_t n_helpers,
                                         std::size_t min_per_helper = 5) {
    const double total = std::ceil(rate * duration / static_cast<double>(frame_bytes));
    const auto per = static_cast<std::size_t>(std::ceil(total / static_cast<double>(n_helpers)));
    return std::max(per, min_per_helper);
}

/// U(R): capacity-test estimate with probe emission throttled to `rate`.
inline std::optional<double> rate_limited_run(const SimConfig& sim_config, CapacityTestOptions opts, double rate,
                                              double duration) {
    if (!(rate > 0.0)) throw std::invalid_argument("rate limit must be > 0");
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    opts.sender.rate_limit = rate;
    std::size_t frame = 0;
    for (std::size_t i = 0; i < opts.sender.n_helpers; ++i) frame = std::max(frame, opts.sender.size_for(i));
    opts.sender.packets_per_helper = {probes_per_helper_for(rate, duration, frame, opts.sender.n_helpers)};
    return run_capacity_test(sim_config, opts).estimate.value_bps;
}

/// AUB search where every U(R) is a fresh rate-limited simulation.
inline AubResult simulated_aub_search(const SimConfig& sim_config, const CapacityTestOptions& opts,
                                      const AubSearchParams& params) {
    return aub_search(params, [&](double rate) {
        return rate_limited_run(sim_config, opts, rate, params.per_rate_duration).value_or(0.0);
    });
}

struct PingRunOptions {
    // Probe frame size used for the rate-limited upload.
    std::size_t frame_bytes{512};
    double limiter_granularity{RateLimiter::kDefaultGranularity};
};

/// Uploads at params.rate to the configured helpers for params.duration while
/// sending an echo request every ping_interval. The upload is open-loop: the
/// rate limiter is the only throttle, so a rate above what the link can carry
/// builds a standing queue in the FIFO.
inline PingStats run_ping_probe(const SimConfig& sim_config, const PingProbeParams& params,
                                const PingRunOptions& opts = {}) {
    params.validate();
    if (params.rate > 0.0 && sim_config.paths.empty()) throw std::invalid_argument("ping probing needs a helper path");
    Simulator sim(sim_config);
    std::vector<std::optional<double>> rtts;
    std::uint64_t probe_bytes = 0;

    std::optional<SenderEngine> sender;
    if (params.rate > 0.0) {
        SenderConfig cfg;
        cfg.n_helpers = sim_config.paths.size();
        cfg.packet_size = {opts.frame_bytes};
        cfg.packets_per_helper = {probes_per_helper_for(params.rate, params.duration, opts.frame_bytes, cfg.n_helpers) + 1};
        cfg.rate_limit = params.rate;
        cfg.limiter_granularity = opts.limiter_granularity;
        cfg.app_buffer_threshold = UINT64_MAX;
        sender.emplace(cfg, 0.0);
    }

    std::function<void()> pump = [&]() {
        if (!sender) return;
        for (;;) {
            const double now = sim.now();
            if (now >= params.duration) return;
            const SendDecision d = sender->schedule_next(now, 0);
            if (d.kind == SendDecision::Kind::emit) {
                sim.enqueue_frame(d.probe->helper, wire::Frame{d.probe->frame});
                probe_bytes += d.probe->frame.wire_size();
            } else if (d.kind == SendDecision::Kind::defer) {
                sim.schedule(d.retry_at, EventKind::timer, pump);
                return;
            } else {
                return;
            }
        }
    };
    sim.on_app_traffic([&](std::uint64_t bytes, double) {
        if (sender) sender->account_app_traffic(bytes);
    });

    const auto n_pings = static_cast<std::size_t>(std::ceil(params.duration / params.ping_interval));
    const std::size_t landmarks = sim_config.ping.landmark_base_rtt.size();
    for (std::size_t k = 0; k < n_pings; ++k) {
        const double at = static_cast<double>(k) * params.ping_interval;
        sim.schedule(at, EventKind::ping, [&, k] { rtts.push_back(sim.ping(k % landmarks, params.ping_timeout)); });
    }
    sim.schedule(0.0, EventKind::timer, pump);
    sim.run(params.duration);

    PingStats stats = summarize_pings(std::move(rtts), params);
    stats.send_rate_bps = static_cast<double>(probe_bytes) / params.duration;
    return stats;
}

/// Runner for IncrementalAubProber: the application uploads at app_rate as an
/// accounted background flow and the probe adds extra_rate on top.
inline auto simulated_ping_runner(SimConfig base, PingProbeParams params, PingRunOptions opts = {}) {
    return [base = std::move(base), params, opts](double app_rate, double extra_rate) {
        SimConfig cfg = base;
        if (app_rate > 0.0) {
            BackgroundFlow app;
            app.rate_bps = app_rate;
            app.accounted = true;
            cfg.background_flows.push_back(app);
        }
        PingProbeParams p = params;
        p.rate = extra_rate;
        return run_ping_probe(cfg, p, opts);
    };
}

}  // namespace upbw::netsim

#endif  // UPBW_SCENARIO_HPP_
