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

#ifndef UPBW_RATE_LIMITER_HPP_
#define UPBW_RATE_LIMITER_HPP_

#include <algorithm>
#include <cstddef>
#include <stdexcept>

namespace upbw {

/// Token bucket for probe emission. Credit accrues continuously at `rate`
/// and is capped at X = max(frame, rate * granularity), the largest burst the
/// sender may put on the link at once. While the sender is backlogged every
/// byte of credit is used, so the long-run rate is exactly `rate`.
class RateLimiter {
  public:
    static constexpr double kDefaultGranularity = 0.05;

    RateLimiter(double rate_bps, std::size_t frame_bytes, double start_time,
                double granularity = kDefaultGranularity)
        : rate_(rate_bps), granularity_(granularity), last_(start_time) {
        if (!(rate_bps > 0.0)) throw std::invalid_argument("rate limit must be > 0");
        if (!(granularity > 0.0)) throw std::invalid_argument("granularity must be > 0");
        burst_ = std::max(static_cast<double>(frame_bytes), rate_ * granularity_);
        tokens_ = static_cast<double>(frame_bytes);
    }

    bool try_consume(double now, std::size_t bytes) {
        refill(now);
        if (tokens_ + kEps < static_cast<double>(bytes)) return false;
        tokens_ -= static_cast<double>(bytes);
        return true;
    }

    /// Earliest time at which `bytes` of credit will be available.
    double next_available(double now, std::size_t bytes) {
        refill(now);
        const double missing = static_cast<double>(bytes) - tokens_;
        if (missing <= kEps) return now;
        return now + missing / rate_;
    }

    double rate() const { return rate_; }
    double burst() const { return burst_; }
    double granularity() const { return granularity_; }

  private:
    static constexpr double kEps = 1e-6;

    void refill(double now) {
        if (now > last_) {
            tokens_ = std::min(burst_, tokens_ + (now - last_) * rate_);
            last_ = now;
        }
    }

    double rate_;
    double granularity_;
    double last_;
    double burst_;
    double tokens_;
};

}  // namespace upbw

#endif  // UPBW_RATE_LIMITER_HPP_
