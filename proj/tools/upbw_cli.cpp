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

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "upbw/aub.hpp"
#include "upbw/helper.hpp"
#include "upbw/netsim.hpp"
#include "upbw/ring_alloc.hpp"
#include "upbw/ring_io.hpp"
#include "upbw/scenario.hpp"
#include "upbw/sender.hpp"
#include "upbw/transport.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace upbw;

enum ExitCode : int { kOk = 0, kUsage = 1, kNoEstimate = 2, kMismatch = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <typename T>
std::vector<T> per_helper(const std::vector<T>& v, std::size_t n, const std::string& flag) {
    if (v.size() == n) return v;
    if (v.size() == 1) return std::vector<T>(n, v.front());
    throw UsageError(flag + " needs 1 or " + std::to_string(n) + " values");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot open '" + path + "' for writing");
    body(out);
}

void print(const json& report) { std::cout << report.dump(2) << std::endl; }

// ------------------------------------------------------------------- flags

struct SimFlags {
    double sub{240000.0};
    std::vector<double> ab{100000.0};
    std::vector<double> latency{0.02};
    double jitter{0.0};
    std::vector<double> loss{0.0};
    std::optional<double> bottleneck;
    std::vector<double> background;
    std::optional<double> app_rate;
    std::uint32_t overhead{0};
    std::vector<double> base_rtt{0.03};
    std::uint64_t seed{1};

    void add(CLI::App* app) {
        app->add_option("--sub", sub, "Upload capacity of the simulated link (bytes/s)")->capture_default_str();
        app->add_option("--ab", ab, "Available bandwidth per helper path (bytes/s), 1 or N values")
            ->delimiter(',')
            ->capture_default_str();
        app->add_option("--latency", latency, "One-way latency per helper path (s), 1 or N values")
            ->delimiter(',')
            ->capture_default_str();
        app->add_option("--jitter", jitter, "Uniform extra delay bound on every path (s)")->capture_default_str();
        app->add_option("--loss", loss, "Loss probability per helper path, 1 or N values")
            ->delimiter(',')
            ->capture_default_str();
        app->add_option("--bottleneck", bottleneck, "Put every path behind one shared bottleneck (bytes/s)");
        app->add_option("--background", background, "Constant-rate background flows on the link (bytes/s)")
            ->delimiter(',');
        app->add_option("--app-rate", app_rate, "Application upload whose bytes the sender accounts for (bytes/s)");
        app->add_option("--overhead", overhead, "Extra link bytes charged per packet")->capture_default_str();
        app->add_option("--base-rtt", base_rtt, "Idle-link echo RTT per landmark (s)")
            ->delimiter(',')
            ->capture_default_str();
        app->add_option("--seed", seed, "Simulator seed")->capture_default_str();
    }

    netsim::SimConfig build(std::size_t n) const {
        netsim::SimConfig c;
        c.sub_bps = sub;
        c.seed = seed;
        c.per_packet_overhead = overhead;
        c.ping.landmark_base_rtt = base_rtt;
        const auto abs = per_helper(ab, n, "--ab");
        const auto lats = per_helper(latency, n, "--latency");
        const auto losses = per_helper(loss, n, "--loss");
        if (bottleneck) c.groups.push_back(netsim::BottleneckGroup{*bottleneck});
        for (std::size_t i = 0; i < n; ++i) {
            netsim::PathConfig p{abs[i], lats[i], jitter, losses[i], std::nullopt};
            if (bottleneck) p.shared_bottleneck_group = 0;
            c.paths.push_back(p);
        }
        for (double r : background) c.background_flows.push_back(netsim::BackgroundFlow{r});
        if (app_rate) {
            netsim::BackgroundFlow app{*app_rate};
            app.accounted = true;
            c.background_flows.push_back(app);
        }
        c.validate();
        return c;
    }

    json to_json(std::size_t n) const {
        return json{{"sub_bps", sub},
                    {"ab_bps", per_helper(ab, n, "--ab")},
                    {"latency_s", per_helper(latency, n, "--latency")},
                    {"jitter_s", jitter},
                    {"loss_prob", per_helper(loss, n, "--loss")},
                    {"bottleneck_bps", optional_number(bottleneck)},
                    {"background_bps", background},
                    {"app_rate_bps", optional_number(app_rate)},
                    {"overhead_bytes", overhead},
                    {"seed", seed}};
    }
};

struct ProbeFlags {
    std::size_t helpers{3};
    std::vector<std::size_t> packets{20};
    std::vector<std::size_t> size{8192};

    void add(CLI::App* app, bool with_helpers) {
        if (with_helpers) app->add_option("--helpers", helpers, "Number of helpers N")->capture_default_str();
        app->add_option("--packets", packets, "Probe frames per helper M(i), 1 or N values")
            ->delimiter(',')
            ->capture_default_str();
        app->add_option("--size", size, "Probe frame size on the wire (bytes), 1 or N values")
            ->delimiter(',')
            ->capture_default_str();
    }

    SenderConfig sender(std::size_t n) const {
        SenderConfig c;
        c.n_helpers = n;
        c.packets_per_helper = packets;
        c.packet_size = size;
        c.validate();
        return c;
    }
};

struct FilterFlags {
    FilterParams p;

    void add(CLI::App* app) {
        app->add_option("--p1", p.p1, "Lower median factor")->capture_default_str();
        app->add_option("--p2", p.p2, "Upper median factor")->capture_default_str();
        app->add_option("--q", p.q, "Standard-deviation band factor")->capture_default_str();
        app->add_option("--k", p.k, "Trimming stops at this many samples")->capture_default_str();
        app->add_option("--idle-timeout", p.idle_timeout, "Helper silence treated as completion (s)")
            ->capture_default_str();
    }

    json to_json() const {
        return json{{"p1", p.p1}, {"p2", p.p2}, {"q", p.q}, {"k", p.k}, {"idle_timeout_s", p.idle_timeout}};
    }
};

struct AggregationFlags {
    AggregationParams p;

    void add(CLI::App* app) {
        app->add_option("--p3", p.p3, "Lower closeness factor around the median report")->capture_default_str();
        app->add_option("--p4", p.p4, "Upper closeness factor around the median report")->capture_default_str();
        app->add_option("--pa", p.pa, "Required fraction of close reports")->capture_default_str();
        app->add_option("--pb", p.pb, "Required fraction of helpers that report")->capture_default_str();
    }

    json to_json() const { return json{{"p3", p.p3}, {"p4", p.p4}, {"pa", p.pa}, {"pb", p.pb}}; }
};

json estimate_json(const CapacityEstimate& e) {
    return json{{"value_bps", optional_number(e.value_bps)},
                {"confident", e.confident},
                {"median_bps", optional_number(e.median_bps)},
                {"reports_received", e.reports_received},
                {"reports_used_bps", e.reports_used}};
}

int estimate_exit(const CapacityEstimate& e) { return e.value_bps && e.confident ? kOk : kNoEstimate; }

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
    SimFlags sim;
    ProbeFlags probe;
    FilterFlags filter;
    AggregationFlags agg;
    std::size_t queue_depth{2};
    std::string trace_path;
    std::string csv_path;

    void add(CLI::App& parent) {
        auto* app = parent.add_subcommand("simulate", "Run one capacity test in the network simulator");
        sim.add(app);
        probe.add(app, true);
        filter.add(app);
        agg.add(app);
        app->add_option("--queue-depth", queue_depth, "Probe frames kept queued on the link")->capture_default_str();
        app->add_option("--trace", trace_path, "Write the event trace CSV here");
        app->add_option("--csv", csv_path, "Write the per-helper CSV here");
        app->footer(
            "Exit codes: 0 confident estimate, 1 usage error, 2 low confidence or no estimate.\n"
            "Trace CSV columns: time_s,event,helper,bytes,rtt_s\n"
            "Per-helper CSV columns: helper,uavg_bps,sample_count,accepted_frames,discarded_frames,"
            "report_received");
        app->callback([this] { run_ = true; });
    }

    bool run_{false};

    int run(const std::string& echo) {
        const std::size_t n = probe.helpers;
        if (n == 0) throw UsageError("--helpers must be at least 1");
        netsim::SimConfig cfg = sim.build(n);
        cfg.record_trace = !trace_path.empty();
        netsim::CapacityTestOptions opts;
        opts.sender = probe.sender(n);
        opts.filter = filter.p;
        opts.aggregation = agg.p;
        opts.queue_depth = queue_depth;
        opts.filter.validate();
        opts.aggregation.validate();
        const auto r = netsim::run_capacity_test(cfg, opts, true);

        json helpers = json::array();
        for (std::size_t i = 0; i < n; ++i) {
            const auto& h = r.helpers[i];
            helpers.push_back(json{{"helper", i},
                                   {"uavg_bps", h.report ? json(h.report->uavg_bps) : json(nullptr)},
                                   {"sample_count", h.report ? h.report->sample_count : 0u},
                                   {"accepted_frames", h.accepted.size()},
                                   {"discarded_frames", h.discarded},
                                   {"report_received", h.received_by_sender.has_value()}});
        }
        json outputs = json::object();
        if (!trace_path.empty()) {
            write_file(trace_path, [&](std::ostream& os) { netsim::write_trace_csv(os, r.trace); });
            outputs["trace_csv"] = trace_path;
        }
        if (!csv_path.empty()) {
            write_file(csv_path, [&](std::ostream& os) {
                os << "helper,uavg_bps,sample_count,accepted_frames,discarded_frames,report_received\n";
                for (const auto& h : helpers) {
                    os << h["helper"].get<std::size_t>() << ',';
                    if (!h["uavg_bps"].is_null()) os << h["uavg_bps"].get<double>();
                    os << ',' << h["sample_count"].get<std::uint32_t>() << ','
                       << h["accepted_frames"].get<std::size_t>() << ',' << h["discarded_frames"].get<std::size_t>()
                       << ',' << (h["report_received"].get<bool>() ? 1 : 0) << '\n';
                }
            });
            outputs["helpers_csv"] = csv_path;
        }

        json result = estimate_json(r.estimate);
        result["probes_sent"] = r.emitted.size();
        result["final_tab_bytes"] = r.final_tab;
        result["app_bytes"] = r.app_bytes;
        result["completion_time_s"] = optional_number(r.completion_time);
        result["end_time_s"] = r.end_time;
        result["conservation_held"] = r.conservation_held;

        json params = sim.to_json(n);
        params["helpers"] = n;
        params["packets"] = per_helper(probe.packets, n, "--packets");
        params["size_bytes"] = per_helper(probe.size, n, "--size");
        params["queue_depth"] = queue_depth;
        params["filter"] = filter.to_json();
        params["aggregation"] = agg.to_json();
        print(json{{"command", echo}, {"parameters", params}, {"result", result}, {"helpers", helpers},
                   {"outputs", outputs}});
        return estimate_exit(r.estimate);
    }
};

// ---------------------------------------------------------------- estimate

struct EstimateCmd {
    std::string role;
    std::string transport_name{"udp"};
    std::string bind{"0.0.0.0:0"};
    std::vector<std::string> peers;
    ProbeFlags probe;
    FilterFlags filter;
    AggregationFlags agg;
    std::optional<double> rate_limit;
    double pacing{RateLimiter::kDefaultGranularity};
    double report_timeout{10.0};
    double connect_timeout{2.0};
    std::size_t sessions{1};
    std::string csv_path;
    bool run_{false};

    void add(CLI::App& parent) {
        auto* app = parent.add_subcommand("estimate", "Capacity test over real sockets (sender or helper role)");
        app->add_option("--role", role, "sender or helper")->required()->check(CLI::IsMember({"sender", "helper"}));
        app->add_option("--transport", transport_name, "udp or tcp")
            ->check(CLI::IsMember({"udp", "tcp"}))
            ->capture_default_str();
        app->add_option("--bind", bind, "Helper listen address host:port (port 0 picks one)")->capture_default_str();
        app->add_option("--peer", peers, "Helper address host:port (sender; repeat per helper)")->delimiter(',');
        probe.add(app, false);
        filter.add(app);
        agg.add(app);
        app->add_option("--rate-limit", rate_limit, "Cap the probe rate (bytes/s)");
        app->add_option("--pacing", pacing, "Burst window of the rate limiter (s)")->capture_default_str();
        app->add_option("--report-timeout", report_timeout, "Wait for reports after completion (s)")
            ->capture_default_str();
        app->add_option("--connect-timeout", connect_timeout, "TCP connect timeout per helper (s)")
            ->capture_default_str();
        app->add_option("--sessions", sessions, "Helper: sessions to serve before exiting (0 = forever)")
            ->capture_default_str();
        app->add_option("--csv", csv_path, "Sender: write the per-helper CSV here");
        app->footer(
            "The helper prints 'listening <port>' on its first stdout line, then a JSON report per session.\n"
            "Exit codes: 0 confident estimate (sender) or report sent (helper), 1 usage or socket error,\n"
            "2 low confidence, no estimate, or no samples.\n"
            "Per-helper CSV columns: helper,peer,reachable,uavg_bps,sample_count");
        app->callback([this] { run_ = true; });
    }

    transport::Kind kind() const { return transport_name == "tcp" ? transport::Kind::tcp : transport::Kind::udp; }

    int run_helper(const std::string& echo) {
        filter.p.validate();
        const auto at = transport::parse_endpoint(bind);
        std::optional<transport::UdpSocket> udp;
        std::optional<transport::TcpListener> tcp;
        std::uint16_t port = 0;
        if (kind() == transport::Kind::udp) {
            udp.emplace(transport::UdpSocket::bind(at));
            port = udp->local_port();
        } else {
            tcp.emplace(transport::TcpListener::bind(at));
            port = tcp->local_port();
        }
        std::cout << "listening " << port << std::endl;

        int code = kNoEstimate;
        for (std::size_t done = 0; sessions == 0 || done < sessions;) {
            transport::HelperSessionResult r;
            if (udp) {
                r = transport::run_udp_helper(*udp, filter.p);
                // With several sessions, a silent period is just the gap between senders.
                if (sessions != 1 && r.accepted == 0) continue;
            } else {
                auto stream = tcp->accept(sessions == 1 ? filter.p.idle_timeout : 3600.0);
                if (!stream) {
                    if (sessions == 1) break;
                    continue;
                }
                r = transport::run_tcp_helper(*stream, filter.p);
            }
            ++done;
            if (r.report) code = kOk;
            print(json{{"command", echo},
                       {"parameters", json{{"transport", transport_name}, {"port", port}, {"filter", filter.to_json()}}},
                       {"result", json{{"uavg_bps", r.report ? json(r.report->uavg_bps) : json(nullptr)},
                                       {"sample_count", r.report ? r.report->sample_count : 0u},
                                       {"accepted_frames", r.accepted},
                                       {"discarded_frames", r.discarded},
                                       {"decode_faults", r.decode_faults},
                                       {"completed_by_sender", r.completed}}},
                       {"session", done}});
            if (udp && sessions == 1 && r.accepted == 0) break;
        }
        return code;
    }

    int run_sender(const std::string& echo) {
        if (peers.empty()) throw UsageError("--peer is required in sender role");
        std::vector<transport::Endpoint> eps;
        for (const auto& p : peers) eps.push_back(transport::parse_endpoint(p));
        transport::RealSenderOptions opts;
        opts.sender = probe.sender(eps.size());
        opts.sender.rate_limit = rate_limit;
        opts.sender.limiter_granularity = pacing;
        opts.aggregation = agg.p;
        opts.aggregation.validate();
        opts.transport = kind();
        opts.report_timeout = report_timeout;
        opts.connect_timeout = connect_timeout;
        opts.sender.validate();
        const auto r = transport::run_real_sender(eps, opts);

        json helpers = json::array();
        for (std::size_t i = 0; i < eps.size(); ++i) {
            const auto& rep = r.reports[i];
            helpers.push_back(json{{"helper", i},
                                   {"peer", eps[i].text},
                                   {"reachable", static_cast<bool>(r.reachable[i])},
                                   {"uavg_bps", rep ? json(rep->uavg_bps) : json(nullptr)},
                                   {"sample_count", rep ? rep->sample_count : 0u}});
        }
        json outputs = json::object();
        if (!csv_path.empty()) {
            write_file(csv_path, [&](std::ostream& os) {
                os << "helper,peer,reachable,uavg_bps,sample_count\n";
                for (const auto& h : helpers) {
                    os << h["helper"].get<std::size_t>() << ',' << h["peer"].get<std::string>() << ','
                       << (h["reachable"].get<bool>() ? 1 : 0) << ',';
                    if (!h["uavg_bps"].is_null()) os << h["uavg_bps"].get<std::uint64_t>();
                    os << ',' << h["sample_count"].get<std::uint32_t>() << '\n';
                }
            });
            outputs["helpers_csv"] = csv_path;
        }
        json result = estimate_json(r.estimate);
        result["probes_sent"] = r.probes_sent;
        result["bytes_sent"] = r.bytes_sent;
        result["probe_phase_s"] = r.probe_phase_s;
        result["total_s"] = r.total_s;
        json params{{"transport", transport_name},
                    {"peers", peers},
                    {"packets", per_helper(probe.packets, eps.size(), "--packets")},
                    {"size_bytes", per_helper(probe.size, eps.size(), "--size")},
                    {"rate_limit_bps", optional_number(rate_limit)},
                    {"aggregation", agg.to_json()}};
        print(json{{"command", echo}, {"parameters", params}, {"result", result}, {"helpers", helpers},
                   {"outputs", outputs}});
        return estimate_exit(r.estimate);
    }

    int run(const std::string& echo) { return role == "helper" ? run_helper(echo) : run_sender(echo); }
};

// --------------------------------------------------------------------- aub

struct AubCmd {
    std::string mode{"search"};
    SimFlags sim;
    ProbeFlags probe;
    FilterFlags filter;
    AggregationFlags agg;
    AubSearchParams search;
    PingProbeParams ping;
    std::size_t frame_size{512};
    std::uint32_t request_bytes{64};
    bool real{false};
    std::vector<std::string> peers;
    std::vector<std::string> landmarks;
    std::string csv_path;
    bool run_{false};

    void add(CLI::App& parent) {
        auto* app = parent.add_subcommand("aub", "Available upload bandwidth: rate search or ping probing");
        app->add_option("--mode", mode, "search or ping")->check(CLI::IsMember({"search", "ping"}))->capture_default_str();
        sim.add(app);
        probe.add(app, true);
        filter.add(app);
        agg.add(app);
        app->add_option("--cr", search.cr, "Pass rule U(R) >= cr * R")->capture_default_str();
        app->add_option("--r0", search.r0, "Initial rate (bytes/s)")->capture_default_str();
        app->add_option("--resolution", search.resolution, "Search stops at this rate gap (bytes/s)")
            ->capture_default_str();
        app->add_option("--per-rate-duration", search.per_rate_duration, "Test length per probed rate (s)")
            ->capture_default_str();
        app->add_option("--rate", ping.rate, "Ping mode: upload rate (bytes/s)")->capture_default_str();
        app->add_option("--duration", ping.duration, "Ping mode: upload duration (s)")->capture_default_str();
        app->add_option("--ping-interval", ping.ping_interval, "Ping mode: seconds between echo requests")
            ->capture_default_str();
        app->add_option("--rtt-threshold", ping.rtt_threshold, "Ping mode: RTT counted as good below this (s)")
            ->capture_default_str();
        app->add_option("--ping-timeout", ping.ping_timeout, "Ping mode: echo timeout (s)")->capture_default_str();
        app->add_option("--quality-fraction", ping.quality_fraction, "Ping mode: required fraction of good RTTs")
            ->capture_default_str();
        app->add_option("--max-timeout-run", ping.max_timeout_run, "Ping mode: longest tolerated timeout run")
            ->capture_default_str();
        app->add_option("--frame-size", frame_size, "Ping mode: upload frame size (bytes)")->capture_default_str();
        app->add_option("--request-bytes", request_bytes, "Ping mode: echo request size (bytes)")->capture_default_str();
        app->add_flag("--real", real, "Use real sockets instead of the simulator");
        app->add_option("--peer", peers, "Real mode: helper address host:port")->delimiter(',');
        app->add_option("--landmark", landmarks, "Real ping mode: UDP echo landmark host:port")->delimiter(',');
        app->add_option("--csv", csv_path, "Write the ladder (search) or the RTT series (ping) here");
        app->footer(
            "Exit codes: 0 rate found (search) or quality met (ping), 1 usage error, 2 nothing passed or quality\n"
            "not met.\n"
            "Search CSV columns: step,rate_bps,measured_bps,passed\n"
            "Ping CSV columns: ping,send_time_s,rtt_s (rtt_s empty on timeout)");
        app->callback([this] { run_ = true; });
    }

    int run(const std::string& echo) {
        search.validate();
        ping.validate();
        json params{{"mode", mode}, {"real", real}};
        json result;
        int code = kOk;
        if (mode == "search") {
            AubResult r;
            if (real) {
                if (peers.empty()) throw UsageError("--peer is required with --real");
                std::vector<transport::Endpoint> eps;
                for (const auto& p : peers) eps.push_back(transport::parse_endpoint(p));
                transport::RealSenderOptions opts;
                opts.sender = probe.sender(eps.size());
                opts.aggregation = agg.p;
                const std::size_t frame = opts.sender.size_for(0);
                r = aub_search(search, [&](double rate) {
                    auto o = opts;
                    o.sender.rate_limit = rate;
                    o.sender.packets_per_helper = {
                        netsim::probes_per_helper_for(rate, search.per_rate_duration, frame, eps.size())};
                    return transport::run_real_sender(eps, o).estimate.value_bps.value_or(0.0);
                });
                params["peers"] = peers;
            } else {
                const std::size_t n = probe.helpers;
                if (n == 0) throw UsageError("--helpers must be at least 1");
                netsim::CapacityTestOptions opts;
                opts.sender = probe.sender(n);
                opts.filter = filter.p;
                opts.aggregation = agg.p;
                r = netsim::simulated_aub_search(sim.build(n), opts, search);
                params["simulation"] = sim.to_json(n);
                params["helpers"] = n;
            }
            params["cr"] = search.cr;
            params["r0_bps"] = search.r0;
            params["resolution_bps"] = search.resolution;
            params["per_rate_duration_s"] = search.per_rate_duration;
            params["size_bytes"] = probe.size;
            json ladder = json::array();
            for (const auto& step : r.ladder) {
                ladder.push_back(json{{"rate_bps", step.rate_bps}, {"measured_bps", step.measured_bps}, {"passed", step.passed}});
            }
            result = json{{"aub_bps", r.aub_bps}, {"first_failing_bps", optional_number(r.first_failing_bps)}, {"ladder", ladder}};
            if (!csv_path.empty()) {
                write_file(csv_path, [&](std::ostream& os) {
                    os << "step,rate_bps,measured_bps,passed\n";
                    for (std::size_t i = 0; i < r.ladder.size(); ++i) {
                        os << i << ',' << r.ladder[i].rate_bps << ',' << r.ladder[i].measured_bps << ','
                           << (r.ladder[i].passed ? 1 : 0) << '\n';
                    }
                });
            }
            code = r.aub_bps > 0 ? kOk : kNoEstimate;
        } else {
            PingStats s;
            if (real) {
                if (landmarks.empty()) throw UsageError("--landmark is required with --real in ping mode");
                transport::RealPingOptions opts;
                for (const auto& p : peers) opts.helpers.push_back(transport::parse_endpoint(p));
                for (const auto& l : landmarks) opts.landmarks.push_back(transport::parse_endpoint(l));
                opts.frame_bytes = frame_size;
                opts.request_bytes = request_bytes;
                s = transport::run_real_ping_probe(ping, opts);
                params["peers"] = peers;
                params["landmarks"] = landmarks;
            } else {
                const std::size_t n = std::max<std::size_t>(probe.helpers, 1);
                auto cfg = sim.build(n);
                cfg.ping.timeout = ping.ping_timeout;
                cfg.ping.request_bytes = request_bytes;
                netsim::PingRunOptions opts;
                opts.frame_bytes = frame_size;
                s = netsim::run_ping_probe(cfg, ping, opts);
                params["simulation"] = sim.to_json(n);
            }
            params["rate_bps"] = ping.rate;
            params["duration_s"] = ping.duration;
            params["ping_interval_s"] = ping.ping_interval;
            params["rtt_threshold_s"] = ping.rtt_threshold;
            params["ping_timeout_s"] = ping.ping_timeout;
            params["quality_fraction"] = ping.quality_fraction;
            params["max_timeout_run"] = ping.max_timeout_run;
            params["frame_size_bytes"] = frame_size;
            result = json{{"quality", s.quality},
                          {"pings", s.rtts.size()},
                          {"timeouts", s.timeouts},
                          {"longest_timeout_run", s.longest_timeout_run},
                          {"below_threshold_fraction", s.below_threshold_fraction},
                          {"median_rtt_s", optional_number(s.median_rtt)},
                          {"mean_rtt_s", optional_number(s.mean_rtt)},
                          {"rtt_trend_s_per_ping", rtt_trend(s)},
                          {"send_rate_bps", s.send_rate_bps}};
            if (!csv_path.empty()) {
                write_file(csv_path, [&](std::ostream& os) {
                    os << "ping,send_time_s,rtt_s\n";
                    for (std::size_t i = 0; i < s.rtts.size(); ++i) {
                        os << i << ',' << static_cast<double>(i) * ping.ping_interval << ',';
                        if (s.rtts[i]) os << *s.rtts[i];
                        os << '\n';
                    }
                });
            }
            code = s.quality ? kOk : kNoEstimate;
        }
        json outputs = json::object();
        if (!csv_path.empty()) outputs["csv"] = csv_path;
        print(json{{"command", echo}, {"parameters", params}, {"result", result}, {"outputs", outputs}});
        return code;
    }
};

// ------------------------------------------------------------------- alloc

struct AllocCmd {
    std::string instance_path;
    std::string s_list;
    std::string p_list;
    std::string algorithm{"closed"};
    std::optional<ring::Units> x;
    std::string csv_path;
    bool run_{false};

    void add(CLI::App& parent) {
        auto* app = parent.add_subcommand("alloc", "Ring-constrained allocation: greedy totals and the rsum profile");
        app->add_option("--instance", instance_path, "Instance file with 'S: ...' and 'P: ...' lines")
            ->check(CLI::ExistingFile);
        app->add_option("--s", s_list, "Inline provider capacities, e.g. \"2 0 2\"");
        app->add_option("--p", p_list, "Inline consumer capacities, e.g. \"2 2 0\"");
        app->add_option("--algorithm", algorithm, "naive, sweep, closed or all")
            ->check(CLI::IsMember({"naive", "sweep", "closed", "all"}))
            ->capture_default_str();
        app->add_option("--x", x, "Evaluate the greedy allocation at this ralloc(0,0)");
        app->add_option("--csv", csv_path, "Write the rsum table here");
        app->footer(
            "Exit codes: 0 success, 1 malformed instance or usage error, 3 algorithms disagree.\n"
            "CSV columns: x_units,rsum_units");
        app->callback([this] { run_ = true; });
    }

    ring::AllocationInstance load() const {
        if (!instance_path.empty()) {
            if (!s_list.empty() || !p_list.empty()) throw UsageError("use either --instance or --s/--p");
            std::ifstream in(instance_path);
            if (!in) throw UsageError("cannot read '" + instance_path + "'");
            return ring::parse_instance(in);
        }
        if (s_list.empty() || p_list.empty()) throw UsageError("give --instance or both --s and --p");
        return ring::parse_instance("S: " + s_list + "\nP: " + p_list + "\n");
    }

    int run(const std::string& echo) {
        const auto inst = load();
        json params{{"s_units", inst.s}, {"p_units", inst.p}, {"xmax_units", inst.xmax()}, {"algorithm", algorithm}};
        if (x) {
            params["x_units"] = *x;
            const auto r = ring::greedy_algo(inst, *x);
            print(json{{"command", echo},
                       {"parameters", params},
                       {"result", json{{"total_units", r.total}, {"own_units", r.own}, {"next_units", r.next},
                                       {"feasible", ring::is_feasible(inst, r)}}},
                       {"outputs", json::object()}});
            return kOk;
        }

        std::vector<ring::Units> table;
        json result = json::object();
        bool agree = true;
        std::optional<std::vector<ring::Units>> naive, sweep, closed;
        std::optional<ring::RsumProfile> profile;
        if (algorithm == "naive" || algorithm == "all") naive = ring::rsum_naive(inst);
        if (algorithm == "sweep" || algorithm == "all") {
            try {
                sweep = ring::rsum_sweep(inst);
            } catch (const std::logic_error& e) {
                std::cerr << "sweep: " << e.what() << '\n';
                agree = false;
            }
        }
        if (algorithm == "closed" || algorithm == "all") {
            profile = ring::rsum_closed_form(inst);
            closed = profile->expand();
        }
        for (const auto* t : {&naive, &sweep, &closed}) {
            if (!*t) continue;
            if (table.empty()) {
                table = **t;
            } else if (**t != table) {
                agree = false;
            }
        }
        if (algorithm == "all" && !sweep) agree = false;
        if (naive) result["naive_units"] = *naive;
        if (sweep) result["sweep_units"] = *sweep;
        if (closed) result["closed_units"] = *closed;
        result["rsum_units"] = table;
        if (profile) {
            result["profile"] = json{{"y1_units", profile->y1},        {"y2_units", profile->y2},
                                     {"x1_units", profile->x1},        {"x2_units", profile->x2},
                                     {"yx1_units", profile->yx1},      {"yx2_units", profile->yx2},
                                     {"d1_units", profile->d1},        {"d2_units", profile->d2},
                                     {"rise_end_units", profile->rise_end()},
                                     {"plateau_end_units", profile->plateau_end()}};
            const auto best = ring::rsum_max(inst);
            result["max"] = json{{"x_units", best.x}, {"total_units", best.total}};
        }
        result["algorithms_agree"] = agree;
        json outputs = json::object();
        if (!csv_path.empty()) {
            write_file(csv_path, [&](std::ostream& os) { ring::write_rsum_csv(os, table); });
            outputs["csv"] = csv_path;
        }
        print(json{{"command", echo}, {"parameters", params}, {"result", result}, {"outputs", outputs}});
        return agree ? kOk : kMismatch;
    }
};

// -------------------------------------------------------------------- echo

struct EchoCmd {
    std::string bind{"0.0.0.0:0"};
    double duration{0.0};
    bool run_{false};

    void add(CLI::App& parent) {
        auto* app = parent.add_subcommand("echo", "UDP echo landmark for real ping probing");
        app->add_option("--bind", bind, "Listen address host:port (port 0 picks one)")->capture_default_str();
        app->add_option("--duration", duration, "Exit after this many seconds (0 = run until killed)")
            ->capture_default_str();
        app->footer("Prints 'listening <port>' on its first stdout line.");
        app->callback([this] { run_ = true; });
    }

    int run(const std::string& echo) {
        auto sock = transport::UdpSocket::bind(transport::parse_endpoint(bind));
        std::cout << "listening " << sock.local_port() << std::endl;
        const auto answered = transport::run_echo_server(sock, duration);
        print(json{{"command", echo}, {"result", json{{"answered", answered}}}});
        return kOk;
    }
};

std::string command_echo(int argc, char** argv) {
    std::ostringstream os;
    for (int i = 0; i < argc; ++i) os << (i ? " " : "") << argv[i];
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"upbw: cooperative upload bandwidth estimation and ring allocation toolkit"};
    app.require_subcommand(1);
    SimulateCmd simulate;
    EstimateCmd estimate;
    AubCmd aub;
    AllocCmd alloc;
    EchoCmd echo;
    simulate.add(app);
    estimate.add(app);
    aub.add(app);
    alloc.add(app);
    echo.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    const std::string line = command_echo(argc, argv);
    try {
        if (simulate.run_) return simulate.run(line);
        if (estimate.run_) return estimate.run(line);
        if (aub.run_) return aub.run(line);
        if (alloc.run_) return alloc.run(line);
        if (echo.run_) return echo.run(line);
    } catch (const std::system_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::logic_error& e) {
        std::cerr << "internal check failed: " << e.what() << '\n';
        return kMismatch;
    }
    return kUsage;
}
