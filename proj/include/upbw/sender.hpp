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

#ifndef UPBW_SENDER_HPP_
#define UPBW_SENDER_HPP_

// Source side of a capacity test: probe scheduling across helpers, the global
// TAB counter, and aggregation of the helpers' reports.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "upbw/rate_limiter.hpp"
#include "upbw/stats.hpp"
#include "upbw/wire.hpp"

namespace upbw {

struct SenderConfig {
    std::size_t n_helpers{1};
    // One entry per helper, or a single entry applied to every helper.
    std::vector<std::size_t> packets_per_helper{20};
    // Full frame length on the wire (header + padding), bytes.
    std::vector<std::size_t> packet_size{8192};
    // Cyclic helper order; empty means 0, 1, ..., N-1.
    std::vector<std::size_t> send_order;
    std::uint64_t app_buffer_threshold{64 * 1024};
    double max_probe_gap{0.5};
    std::optional<double> rate_limit;
    double limiter_granularity{RateLimiter::kDefaultGranularity};

    std::size_t packets_for(std::size_t helper) const {
        return packets_per_helper.size() == 1 ? packets_per_helper.front() : packets_per_helper.at(helper);
    }
    std::size_t size_for(std::size_t helper) const {
        return packet_size.size() == 1 ? packet_size.front() : packet_size.at(helper);
    }

    void validate() const {
        if (n_helpers < 1) throw std::invalid_argument("at least one helper is required");
        if (packets_per_helper.size() != 1 && packets_per_helper.size() != n_helpers) {
            throw std::invalid_argument("packets_per_helper needs 1 or N entries");
        }
        if (packet_size.size() != 1 && packet_size.size() != n_helpers) {
            throw std::invalid_argument("packet_size needs 1 or N entries");
        }
        for (std::size_t i = 0; i < n_helpers; ++i) {
            if (packets_for(i) < 1) throw std::invalid_argument("M(i) must be positive");
            const std::size_t s = size_for(i);
            if (s < wire::kProbeHeaderSize || s - wire::kProbeHeaderSize > wire::kMaxPayload) {
                throw std::invalid_argument("packet size must cover the probe header and stay under the payload limit");
            }
        }
        if (!send_order.empty()) {
            std::vector<std::size_t> sorted = send_order;
            std::sort(sorted.begin(), sorted.end());
            for (std::size_t i = 0; i < sorted.size(); ++i) {
                if (sorted.size() != n_helpers || sorted[i] != i) {
                    throw std::invalid_argument("send_order must be a permutation of the helpers");
                }
            }
        }
        if (!(max_probe_gap > 0.0)) throw std::invalid_argument("max_probe_gap must be > 0");
        if (rate_limit && !(*rate_limit > 0.0)) throw std::invalid_argument("rate limit must be > 0");
    }
};

struct AggregationParams {
    double p3{0.8};
    double p4{1.2};
    double pa{0.6};
    double pb{0.6};

    void validate() const {
        if (!(p3 >= 0.0 && p3 <= 1.0)) throw std::invalid_argument("p3 must lie in [0, 1]");
        if (!(p4 >= 1.0)) throw std::invalid_argument("p4 must be >= 1");
        if (!(pa > 0.0 && pa <= 1.0)) throw std::invalid_argument("PA must lie in (0, 1]");
        if (!(pb > 0.0 && pb <= 1.0)) throw std::invalid_argument("PB must lie in (0, 1]");
    }
};

struct CapacityEstimate {
    // Absent when no report was received.
    std::optional<double> value_bps;
    bool confident{false};
    std::vector<double> reports_used;
    std::size_t reports_received{0};
    std::optional<double> median_bps;
};

/// ceil(pb * n), computed so that exact products are not pushed up by
/// floating-point noise.
inline std::size_t required_reports(double pb, std::size_t n) {
    const double raw = pb * static_cast<double>(n);
    const double rounded = std::round(raw);
    if (std::abs(raw - rounded) < 1e-9) return static_cast<std::size_t>(rounded);
    return static_cast<std::size_t>(std::ceil(raw));
}

inline CapacityEstimate aggregate_reports(std::span<const double> reports, const AggregationParams& params,
                                          std::size_t n_helpers) {
    params.validate();
    CapacityEstimate est;
    est.reports_received = reports.size();
    if (reports.empty()) return est;

    const double umd = stats::median(reports);
    est.median_bps = umd;
    if (reports.size() < required_reports(params.pb, n_helpers)) {
        est.value_bps = umd;
        est.reports_used.assign(reports.begin(), reports.end());
        return est;
    }

    const double lo = params.p3 * umd;
    const double hi = params.p4 * umd;
    std::copy_if(reports.begin(), reports.end(), std::back_inserter(est.reports_used),
                 [&](double v) { return v >= lo && v <= hi; });
    // The median lies in the band unless every report is zero-width around it.
    if (est.reports_used.empty()) est.reports_used.push_back(umd);
    std::sort(est.reports_used.begin(), est.reports_used.end());
    est.value_bps = stats::mean(est.reports_used);
    const double close_fraction =
        static_cast<double>(est.reports_used.size()) / static_cast<double>(reports.size());
    est.confident = close_fraction + 1e-12 >= params.pa;
    return est;
}

struct ProbeSend {
    std::size_t helper{0};
    wire::ProbeFrame frame;
};

struct SendDecision {
    enum class Kind { emit, defer, done };
    Kind kind{Kind::done};
    std::optional<ProbeSend> probe;
    // For defer: earliest time at which a retry can succeed.
    double retry_at{0.0};
};

/// Event-driven probe scheduler. Never blocks; the caller feeds it time and
/// the application's buffered byte count and acts on the returned decision.
class SenderEngine {
  public:
    SenderEngine(SenderConfig config, double start_time)
        : config_(std::move(config)), last_probe_send_(start_time) {
        config_.validate();
        if (config_.send_order.empty()) {
            order_.resize(config_.n_helpers);
            std::iota(order_.begin(), order_.end(), std::size_t{0});
        } else {
            order_ = config_.send_order;
        }
        remaining_.resize(config_.n_helpers);
        for (std::size_t i = 0; i < config_.n_helpers; ++i) remaining_[i] = config_.packets_for(i);
        if (config_.rate_limit) {
            std::size_t largest = 0;
            for (std::size_t i = 0; i < config_.n_helpers; ++i) largest = std::max(largest, config_.size_for(i));
            limiter_.emplace(*config_.rate_limit, largest, start_time, config_.limiter_granularity);
        }
    }

    SendDecision schedule_next(double now, std::uint64_t app_buffer_bytes) {
        SendDecision decision;
        const auto helper = peek_next();
        if (!helper) return decision;

        if (app_buffer_bytes > config_.app_buffer_threshold && now - last_probe_send_ < config_.max_probe_gap) {
            decision.kind = SendDecision::Kind::defer;
            decision.retry_at = last_probe_send_ + config_.max_probe_gap;
            return decision;
        }
        const std::size_t size = config_.size_for(*helper);
        if (limiter_ && !limiter_->try_consume(now, size)) {
            decision.kind = SendDecision::Kind::defer;
            decision.retry_at = limiter_->next_available(now, size);
            return decision;
        }

        tab_ += size;
        --remaining_[*helper];
        cursor_ = (cursor_ + 1) % order_.size();
        last_probe_send_ = now;
        last_target_ = *helper;
        ++probes_sent_;
        decision.kind = SendDecision::Kind::emit;
        decision.probe = ProbeSend{*helper, wire::probe_of_size(tab_, size)};
        return decision;
    }

    /// Application bytes sent to the virtual helper: they advance TAB but are
    /// never scheduled and never report.
    std::uint64_t account_app_traffic(std::uint64_t bytes) {
        tab_ += bytes;
        app_bytes_ += bytes;
        return tab_;
    }

    bool all_probes_sent() const {
        return std::all_of(remaining_.begin(), remaining_.end(), [](std::size_t r) { return r == 0; });
    }

    wire::CompletionFrame completion_frame() const { return wire::CompletionFrame{tab_}; }

    void on_report(std::size_t helper, const wire::ReportFrame& report) {
        if (helper >= config_.n_helpers) throw std::out_of_range("report from unknown helper");
        if (reports_.size() < config_.n_helpers) reports_.resize(config_.n_helpers);
        if (!reports_[helper]) ++reports_received_;
        reports_[helper] = report;
    }

    std::size_t reports_received() const { return reports_received_; }
    bool all_reports_in() const { return reports_received_ == config_.n_helpers; }

    std::vector<std::optional<wire::ReportFrame>> reports() const {
        auto out = reports_;
        out.resize(config_.n_helpers);
        return out;
    }

    CapacityEstimate finish(const AggregationParams& params) const {
        std::vector<double> values;
        for (const auto& r : reports_) {
            if (r) values.push_back(static_cast<double>(r->uavg_bps));
        }
        return aggregate_reports(values, params, config_.n_helpers);
    }

    std::uint64_t tab() const { return tab_; }
    std::uint64_t app_bytes() const { return app_bytes_; }
    std::size_t probes_sent() const { return probes_sent_; }
    std::optional<std::size_t> last_target() const { return last_target_; }
    const SenderConfig& config() const { return config_; }

  private:
    // Next helper in cyclic order that still has probes left.
    std::optional<std::size_t> peek_next() {
        for (std::size_t step = 0; step < order_.size(); ++step) {
            const std::size_t helper = order_[cursor_];
            if (remaining_[helper] > 0) return helper;
            cursor_ = (cursor_ + 1) % order_.size();
        }
        return std::nullopt;
    }

    SenderConfig config_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> remaining_;
    std::size_t cursor_{0};
    std::uint64_t tab_{0};
    std::uint64_t app_bytes_{0};
    std::size_t probes_sent_{0};
    double last_probe_send_;
    std::optional<std::size_t> last_target_;
    std::optional<RateLimiter> limiter_;
    std::vector<std::optional<wire::ReportFrame>> reports_;
    std::size_t reports_received_{0};
};

}  // namespace upbw

#endif  // UPBW_SENDER_HPP_
