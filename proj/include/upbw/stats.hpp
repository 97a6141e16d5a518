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

#ifndef UPBW_STATS_HPP_
#define UPBW_STATS_HPP_

// Outlier filters applied to throughput samples before averaging.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace upbw::stats {

/// Middle element for odd sizes, mean of the two middle elements otherwise.
inline double median(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty sample");
    std::vector<double> sorted(values.begin(), values.end());
    const std::size_t mid = sorted.size() / 2;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid), sorted.end());
    const double upper = sorted[mid];
    if (sorted.size() % 2 == 1) return upper;
    const double lower = *std::max_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lower + upper) / 2.0;
}

inline double mean(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

/// Population standard deviation (divides by n).
inline double population_stddev(std::span<const double> values, double mu) {
    double acc = 0.0;
    for (double v : values) acc += (v - mu) * (v - mu);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

/// Drops values strictly below lower_factor*median or strictly above
/// upper_factor*median. The median itself always survives.
inline std::vector<double> median_band_filter(std::span<const double> samples, double lower_factor,
                                              double upper_factor) {
    const double med = median(samples);
    const double lo = lower_factor * med;
    const double hi = upper_factor * med;
    std::vector<double> kept;
    kept.reserve(samples.size());
    std::copy_if(samples.begin(), samples.end(), std::back_inserter(kept),
                 [&](double v) { return v >= lo && v <= hi; });
    return kept;
}

/// Repeated mean +- q*sigma trimming. The round runs only while more than
/// `min_keep` values remain, so the last round may leave fewer than that.
inline std::vector<double> iterated_trim(std::span<const double> samples, double q, std::size_t min_keep) {
    if (samples.empty()) throw std::invalid_argument("iterated_trim of an empty sample");
    std::vector<double> kept(samples.begin(), samples.end());
    while (kept.size() > min_keep) {
        const double mu = mean(kept);
        const double sigma = population_stddev(kept, mu);
        const double lo = mu - q * sigma;
        const double hi = mu + q * sigma;
        const auto outside = [&](double v) { return v < lo || v > hi; };
        const auto n_out = static_cast<std::size_t>(std::count_if(kept.begin(), kept.end(), outside));
        // q < 1 can put every value outside the band; keep the last non-empty set.
        if (n_out == 0 || n_out == kept.size()) break;
        std::erase_if(kept, outside);
    }
    return kept;
}

struct FilterSettings {
    double p1{0.2};
    double p2{5.0};
    double q{1.0};
    std::size_t k{3};
};

struct FilteredAverage {
    double value{0.0};
    std::vector<double> survivors;
};

/// median_band_filter, then iterated_trim, then the arithmetic mean.
inline FilteredAverage filtered_average(std::span<const double> samples, const FilterSettings& s) {
    const auto banded = median_band_filter(samples, s.p1, s.p2);
    FilteredAverage out;
    out.survivors = iterated_trim(banded, s.q, s.k);
    out.value = mean(out.survivors);
    return out;
}

}  // namespace upbw::stats

#endif  // UPBW_STATS_HPP_
