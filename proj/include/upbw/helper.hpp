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

#ifndef UPBW_HELPER_HPP_
#define UPBW_HELPER_HPP_

// Receiver side of a capacity test. A helper timestamps probe arrivals, turns
// every pair of consecutive accepted probes into a throughput sample
// (delta TAB / delta arrival time), and at the end of the test reports the
// filtered average of its samples back to the source.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "upbw/stats.hpp"
#include "upbw/wire.hpp"

namespace upbw {

struct FilterParams {
    double p1{0.2};
    double p2{5.0};
    double q{1.0};
    std::size_t k{3};
    std::size_t min_p{20};
    double idle_timeout{5.0};

    void validate() const {
        if (!(p1 >= 0.0 && p1 <= 1.0)) throw std::invalid_argument("p1 must lie in [0, 1]");
        if (!(p2 >= 1.0)) throw std::invalid_argument("p2 must be >= 1");
        if (!(q > 0.0)) throw std::invalid_argument("q must be > 0");
        if (k < 1) throw std::invalid_argument("K must be >= 1");
        if (min_p < 2) throw std::invalid_argument("MinP must be >= 2");
        if (!(idle_timeout > 0.0)) throw std::invalid_argument("idle timeout must be > 0");
    }

    stats::FilterSettings filter_settings() const { return {p1, p2, q, k}; }
};

struct ArrivalRecord {
    std::uint64_t tab{0};
    double t{0.0};
};

struct EstimationSample {
    double u_bps{0.0};
};

struct AcceptResult {
    enum class Outcome { accepted, discarded };
    Outcome outcome{Outcome::discarded};
    std::optional<EstimationSample> sample;

    bool accepted() const { return outcome == Outcome::accepted; }
};

struct HelperReport {
    double uavg_bps{0.0};
    std::uint32_t sample_count{0};

    wire::ReportFrame to_frame() const {
        return wire::ReportFrame{static_cast<std::uint64_t>(std::llround(uavg_bps)), sample_count};
    }
};

/// Averaged report for an explicit sample list; nullopt when there are no samples.
inline std::optional<HelperReport> report_from_samples(std::span<const double> samples, const FilterParams& params) {
    if (samples.empty()) return std::nullopt;
    const auto avg = stats::filtered_average(samples, params.filter_settings());
    return HelperReport{avg.value, static_cast<std::uint32_t>(avg.survivors.size())};
}

/// Window size used by sliding_estimate after each accepted frame. The default
/// policy is the fixed MinP; callers may adapt it to the observed
/// (delta TAB, delta T) of the latest pair.
using WindowPolicy = std::function<std::size_t(const ArrivalRecord& prev, const ArrivalRecord& cur)>;

/// Single-threaded helper state machine. All inputs are explicit events
/// carrying the local clock.
class HelperEngine {
  public:
    HelperEngine(FilterParams params, double start_time, bool continuous = false)
        : params_(params), continuous_(continuous), last_activity_(start_time), window_(params.min_p) {
        params_.validate();
    }

    void set_window_policy(WindowPolicy policy) { policy_ = std::move(policy); }

    AcceptResult accept_frame(std::uint64_t tab, double now) {
        AcceptResult result;
        if (finalized_) {
            ++late_frames_;
            return result;
        }
        if (last_ && tab <= last_->tab) {
            ++discarded_;
            return result;
        }
        result.outcome = AcceptResult::Outcome::accepted;
        const ArrivalRecord cur{tab, now};
        if (last_) {
            if (now > last_->t) {
                const double u = static_cast<double>(tab - last_->tab) / (now - last_->t);
                samples_.push_back(u);
                result.sample = EstimationSample{u};
            } else {
                ++clock_anomalies_;
            }
            if (policy_) window_ = std::max<std::size_t>(2, policy_(*last_, cur));
        }
        accepted_.push_back(cur);
        last_ = cur;
        last_activity_ = now;
        return result;
    }

    /// Completion notification from the source.
    void on_completion() { finalized_ = true; }

    /// Timer input; finalizes once the idle timeout has elapsed since the
    /// last accepted frame (or since start when nothing arrived).
    bool on_tick(double now) {
        if (!finalized_ && now - last_activity_ >= params_.idle_timeout) finalized_ = true;
        return finalized_;
    }

    double idle_deadline() const { return last_activity_ + params_.idle_timeout; }

    /// Filtered average over every sample; nullopt when no sample exists.
    std::optional<HelperReport> report() const { return report_from_samples(samples_, params_); }

    /// Continuous mode: filtered average over the most recent window of samples.
    std::optional<double> sliding_estimate() const {
        if (!continuous_) throw std::logic_error("sliding_estimate requires continuous mode");
        if (samples_.size() < window_) return std::nullopt;
        const std::span<const double> all(samples_);
        const auto tail = all.subspan(all.size() - window_);
        return stats::filtered_average(tail, params_.filter_settings()).value;
    }

    bool finalized() const { return finalized_; }
    bool continuous() const { return continuous_; }
    const std::vector<double>& samples() const { return samples_; }
    const std::vector<ArrivalRecord>& accepted() const { return accepted_; }
    std::size_t discarded() const { return discarded_; }
    std::size_t late_frames() const { return late_frames_; }
    std::size_t clock_anomalies() const { return clock_anomalies_; }
    const FilterParams& params() const { return params_; }

  private:
    FilterParams params_;
    bool continuous_;
    bool finalized_{false};
    double last_activity_;
    std::size_t window_;
    WindowPolicy policy_;
    std::optional<ArrivalRecord> last_;
    std::vector<ArrivalRecord> accepted_;
    std::vector<double> samples_;
    std::size_t discarded_{0};
    std::size_t late_frames_{0};
    std::size_t clock_anomalies_{0};
};

}  // namespace upbw

#endif  // UPBW_HELPER_HPP_
