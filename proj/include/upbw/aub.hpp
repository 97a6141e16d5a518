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

#ifndef UPBW_AUB_HPP_
#define UPBW_AUB_HPP_

// Available upload bandwidth procedures. Both are written against callables so
// the same logic drives the simulator and real sockets:
//
//  * aub_search: largest rate limit R with U(R) >= cr * R, found by doubling
//    from r0 and then bisecting down to `resolution`.
//  * ping probing: upload at a fixed rate while timing echo requests, then
//    judge the RTT distribution against a quality condition.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "upbw/stats.hpp"

namespace upbw {

struct AubSearchParams {
    double cr{0.9};
    double r0{16384.0};
    double resolution{2000.0};
    double per_rate_duration{5.0};
    // Upper bound on doublings; keeps a predicate that never fails finite.
    std::size_t max_doublings{40};

    void validate() const {
        if (!(cr > 0.0 && cr <= 1.0)) throw std::invalid_argument("cr must lie in (0, 1]");
        if (!(r0 > 0.0)) throw std::invalid_argument("r0 must be > 0");
        if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be > 0");
        if (!(per_rate_duration > 0.0)) throw std::invalid_argument("per-rate duration must be > 0");
    }
};

struct RateProbe {
    double rate_bps{0.0};
    double measured_bps{0.0};
    bool passed{false};
};

struct AubResult {
    // Largest passing rate; 0 when no probed rate passed.
    double aub_bps{0.0};
    // Smallest rate observed to fail, when one was probed.
    std::optional<double> first_failing_bps;
    std::vector<RateProbe> ladder;
};

template <typename F>
concept RateMeasurement = std::invocable<F&, double> && std::convertible_to<std::invoke_result_t<F&, double>, double>;

template <RateMeasurement Measure>
AubResult aub_search(const AubSearchParams& params, Measure&& measure) {
    params.validate();
    AubResult result;
    auto passes = [&](double rate) {
        const double u = measure(rate);
        const bool ok = u >= params.cr * rate;
        result.ladder.push_back(RateProbe{rate, u, ok});
        return ok;
    };

    double lo = 0.0;
    double hi = params.r0;
    if (passes(params.r0)) {
        lo = params.r0;
        bool failed = false;
        for (std::size_t i = 0; i < params.max_doublings; ++i) {
            const double next = lo * 2.0;
            if (passes(next)) {
                lo = next;
            } else {
                hi = next;
                failed = true;
                break;
            }
        }
        if (!failed) {
            result.aub_bps = lo;
            return result;
        }
    }
    while (hi - lo > params.resolution) {
        const double mid = lo + (hi - lo) / 2.0;
        if (passes(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    result.aub_bps = lo;
    result.first_failing_bps = hi;
    return result;
}

struct PingProbeParams {
    double rate{25600.0};
    double duration{60.0};
    double ping_interval{0.5};
    double rtt_threshold{0.5};
    double ping_timeout{20.0};
    double quality_fraction{0.9};
    double rate_step{4096.0};
    // Longest tolerated run of consecutive timeouts.
    std::size_t max_timeout_run{3};

    void validate() const {
        if (!(rate >= 0.0)) throw std::invalid_argument("rate must be >= 0");
        if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
        if (!(ping_interval > 0.0)) throw std::invalid_argument("ping interval must be > 0");
        if (!(quality_fraction > 0.0 && quality_fraction <= 1.0)) {
            throw std::invalid_argument("quality fraction must lie in (0, 1]");
        }
        if (!(ping_timeout >= rtt_threshold)) throw std::invalid_argument("ping timeout must be >= rtt threshold");
        if (!(rate_step > 0.0)) throw std::invalid_argument("rate step must be > 0");
    }
};

struct PingStats {
    // One entry per echo request in send order; nullopt marks a timeout.
    std::vector<std::optional<double>> rtts;
    double send_rate_bps{0.0};
    std::size_t timeouts{0};
    std::size_t longest_timeout_run{0};
    double below_threshold_fraction{0.0};
    std::optional<double> median_rtt;
    std::optional<double> mean_rtt;
    bool quality{false};
};

/// Reduces raw echo results to the statistics and the quality verdict.
inline PingStats summarize_pings(std::vector<std::optional<double>> rtts, const PingProbeParams& params) {
    PingStats s;
    s.rtts = std::move(rtts);
    std::vector<double> answered;
    std::size_t run = 0;
    std::size_t below = 0;
    for (const auto& r : s.rtts) {
        if (!r) {
            ++s.timeouts;
            s.longest_timeout_run = std::max(s.longest_timeout_run, ++run);
            continue;
        }
        run = 0;
        answered.push_back(*r);
        if (*r <= params.rtt_threshold) ++below;
    }
    if (!s.rtts.empty()) {
        s.below_threshold_fraction = static_cast<double>(below) / static_cast<double>(s.rtts.size());
    }
    if (!answered.empty()) {
        s.median_rtt = stats::median(answered);
        s.mean_rtt = stats::mean(answered);
    }
    s.quality = !answered.empty() && s.below_threshold_fraction >= params.quality_fraction &&
                s.longest_timeout_run <= params.max_timeout_run;
    return s;
}

/// Least-squares slope of answered RTTs against their send index (seconds per
/// ping); a steadily growing queue shows up as a clearly positive slope.
inline double rtt_trend(const PingStats& stats) {
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < stats.rtts.size(); ++i) {
        if (!stats.rtts[i]) continue;
        const double x = static_cast<double>(i);
        const double y = *stats.rtts[i];
        n += 1;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = n * sxx - sx * sx;
    if (n < 2 || denom == 0.0) return 0.0;
    return (n * sxy - sx * sy) / denom;
}

template <typename F>
concept PingRunner = std::invocable<F&, double, double> &&
                     std::convertible_to<std::invoke_result_t<F&, double, double>, PingStats>;

/// Gate for the application-driven use of ping probing: a step that finds
/// headroom for R extra bytes/second at app rate U is not repeated until the
/// application's own rate reaches U + R.
class IncrementalAubProber {
  public:
    enum class Verdict { headroom, no_headroom, refused };

    struct StepResult {
        Verdict verdict{Verdict::refused};
        std::optional<PingStats> stats;
        double next_permitted_rate{0.0};
    };

    explicit IncrementalAubProber(PingProbeParams params) : params_(params) { params_.validate(); }

    /// `runner(app_rate, extra_rate)` uploads `extra_rate` on top of the
    /// application's `app_rate` and returns the echo statistics.
    template <PingRunner Runner>
    StepResult step(double current_app_rate, double step_rate, Runner&& runner) {
        if (!(step_rate > 0.0)) throw std::invalid_argument("step must be > 0");
        StepResult out;
        if (current_app_rate < gate_) {
            out.next_permitted_rate = gate_;
            return out;
        }
        out.stats = runner(current_app_rate, step_rate);
        if (out.stats->quality) {
            out.verdict = Verdict::headroom;
            gate_ = current_app_rate + step_rate;
        } else {
            out.verdict = Verdict::no_headroom;
        }
        out.next_permitted_rate = gate_;
        return out;
    }

    double next_permitted_rate() const { return gate_; }
    const PingProbeParams& params() const { return params_; }

  private:
    PingProbeParams params_;
    double gate_{0.0};
};

}  // namespace upbw

#endif  // UPBW_AUB_HPP_
