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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "upbw/aub.hpp"
#include "upbw/scenario.hpp"

namespace upbw {
namespace {

using netsim::BackgroundFlow;
using netsim::CapacityTestOptions;
using netsim::PathConfig;
using netsim::SimConfig;

SimConfig three_paths(double sub = 240000.0) {
    SimConfig c;
    c.sub_bps = sub;
    for (double lat : {0.020, 0.035, 0.050}) c.paths.push_back(PathConfig{100000.0, lat, 0.0, 0.0, std::nullopt});
    return c;
}

CapacityTestOptions three_helpers() {
    CapacityTestOptions o;
    o.sender.n_helpers = 3;
    return o;
}

SimConfig ping_link(double sub = 61440.0) {
    SimConfig c;
    c.sub_bps = sub;
    c.per_packet_overhead = 28;
    c.paths.push_back(PathConfig{1e6, 0.02, 0.0, 0.0, std::nullopt});
    return c;
}

TEST(AubSearch, SaturatingMeasure) {
    for (double aub : {5000.0, 100000.0, 240000.0, 1.3e6}) {
        AubSearchParams p;
        p.cr = 1.0;
        const auto r = aub_search(p, [&](double rate) { return std::min(rate, aub); });
        EXPECT_LE(r.aub_bps, aub);
        EXPECT_GT(r.aub_bps, aub - p.resolution);
        ASSERT_TRUE(r.first_failing_bps);
        EXPECT_LE(*r.first_failing_bps - r.aub_bps, p.resolution);
    }
}

TEST(AubSearch, LadderStartsWithDoubling) {
    AubSearchParams p;
    p.cr = 1.0;
    const auto r = aub_search(p, [](double rate) { return std::min(rate, 100000.0); });
    ASSERT_GE(r.ladder.size(), 4u);
    EXPECT_EQ(r.ladder[0].rate_bps, 16384.0);
    EXPECT_EQ(r.ladder[1].rate_bps, 32768.0);
    EXPECT_EQ(r.ladder[2].rate_bps, 65536.0);
    EXPECT_EQ(r.ladder[3].rate_bps, 131072.0);
    EXPECT_FALSE(r.ladder[3].passed);
}

TEST(AubSearch, FailingStartBisectsBelow) {
    AubSearchParams p;
    p.cr = 1.0;
    p.resolution = 100.0;
    const auto r = aub_search(p, [](double rate) { return std::min(rate, 3000.0); });
    EXPECT_LE(r.aub_bps, 3000.0);
    EXPECT_GT(r.aub_bps, 2900.0);
}

TEST(AubSearch, NothingPasses) {
    const auto r = aub_search(AubSearchParams{}, [](double) { return 0.0; });
    EXPECT_EQ(r.aub_bps, 0.0);
}

TEST(AubSearch, DoublingIsBounded) {
    AubSearchParams p;
    p.max_doublings = 5;
    const auto r = aub_search(p, [](double rate) { return rate; });
    EXPECT_EQ(r.aub_bps, 16384.0 * 32);
    EXPECT_FALSE(r.first_failing_bps);
}

TEST(AubSearch, RejectsBadParams) {
    AubSearchParams p;
    p.cr = 0.0;
    EXPECT_THROW(aub_search(p, [](double r) { return r; }), std::invalid_argument);
    p = AubSearchParams{};
    p.r0 = 0.0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(RateLimitedRun, FarBelowCapacity) {
    const auto c = three_paths();
    for (double rate : {20000.0, 50000.0}) {
        const auto u = netsim::rate_limited_run(c, three_helpers(), rate, 5.0);
        ASSERT_TRUE(u);
        EXPECT_NEAR(*u, rate, 0.05 * rate);
    }
}

TEST(RateLimitedRun, FarAboveCapacity) {
    const auto u = netsim::rate_limited_run(three_paths(), three_helpers(), 2e6, 5.0);
    ASSERT_TRUE(u);
    EXPECT_NEAR(*u, 240000.0, 0.02 * 240000.0);
}

TEST(RateLimitedRun, RejectsZeroRate) {
    EXPECT_THROW(netsim::rate_limited_run(three_paths(), three_helpers(), 0.0, 5.0), std::invalid_argument);
}

TEST(SimulatedAub, NoBackgroundFindsCapacity) {
    AubSearchParams p;
    p.cr = 0.995;
    const auto r = netsim::simulated_aub_search(three_paths(), three_helpers(), p);
    EXPECT_NEAR(r.aub_bps, 240000.0, p.resolution);
}

TEST(SimulatedAub, ResultSatisfiesSearchPostcondition) {
    auto c = three_paths();
    c.background_flows.push_back(BackgroundFlow{140000.0});
    for (double cr : {0.9, 0.95}) {
        AubSearchParams p;
        p.cr = cr;
        const auto r = netsim::simulated_aub_search(c, three_helpers(), p);
        auto u = [&](double rate) { return netsim::rate_limited_run(c, three_helpers(), rate, p.per_rate_duration).value_or(0); };
        EXPECT_GE(u(r.aub_bps), cr * r.aub_bps);
        EXPECT_LT(u(r.aub_bps + p.resolution), cr * (r.aub_bps + p.resolution));
        // Above the available bandwidth U(R) flattens, so the threshold sits
        // near AUB / cr.
        EXPECT_GE(r.aub_bps, 100000.0 - p.resolution);
        EXPECT_LE(r.aub_bps, 100000.0 / cr * 1.06);
    }
}

TEST(SimulatedAub, PredicateMonotoneAcrossSeeds) {
    auto c = three_paths();
    c.background_flows.push_back(BackgroundFlow{140000.0});
    for (auto& p : c.paths) p.jitter = 0.002;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        c.seed = seed;
        for (double rate = 16384.0; rate < 300000.0; rate *= 1.3) {
            const auto u = netsim::rate_limited_run(c, three_helpers(), rate, 5.0).value_or(0);
            const auto half = netsim::rate_limited_run(c, three_helpers(), rate / 2, 5.0).value_or(0);
            if (u >= 0.9 * rate) {
                EXPECT_GE(half, 0.9 * rate / 2) << "seed " << seed << " rate " << rate;
            }
        }
    }
}

TEST(PingSummary, QualityAndRuns) {
    PingProbeParams p;
    std::vector<std::optional<double>> rtts(20, 0.1);
    rtts[3] = std::nullopt;
    auto s = summarize_pings(rtts, p);
    EXPECT_TRUE(s.quality);
    EXPECT_EQ(s.timeouts, 1u);
    EXPECT_DOUBLE_EQ(s.below_threshold_fraction, 19.0 / 20.0);
    EXPECT_DOUBLE_EQ(*s.median_rtt, 0.1);

    for (int i = 5; i < 9; ++i) rtts[i] = std::nullopt;
    s = summarize_pings(rtts, p);
    EXPECT_EQ(s.longest_timeout_run, 4u);
    EXPECT_FALSE(s.quality);

    s = summarize_pings(std::vector<std::optional<double>>(10), p);
    EXPECT_FALSE(s.quality);
    EXPECT_FALSE(s.median_rtt);
}

TEST(PingSummary, Trend) {
    PingStats s;
    for (int i = 0; i < 10; ++i) s.rtts.push_back(0.05 + 0.01 * i);
    s.rtts.push_back(std::nullopt);
    EXPECT_NEAR(rtt_trend(s), 0.01, 1e-12);
}

TEST(PingProbe, BelowCapacityPasses) {
    PingProbeParams p;
    p.rate = 25600.0;
    p.duration = 120.0;
    const auto s = netsim::run_ping_probe(ping_link(), p);
    EXPECT_TRUE(s.quality);
    EXPECT_EQ(s.timeouts, 0u);
    EXPECT_NEAR(*s.median_rtt, 0.03, 0.01);
    EXPECT_NEAR(s.send_rate_bps, 25600.0, 0.02 * 25600.0);
}

TEST(PingProbe, AboveCapacityTimesOut) {
    PingProbeParams p;
    p.rate = 80000.0;
    p.duration = 300.0;
    const auto s = netsim::run_ping_probe(ping_link(), p);
    EXPECT_FALSE(s.quality);
    EXPECT_GT(s.timeouts, 0u);
    EXPECT_GT(rtt_trend(s), 0.0);
}

TEST(PingProbe, IdleRateGivesBaseRtt) {
    PingProbeParams p;
    p.rate = 0.0;
    p.duration = 30.0;
    auto c = ping_link();
    c.ping.landmark_base_rtt = {0.03, 0.045};
    const auto s = netsim::run_ping_probe(c, p);
    ASSERT_EQ(s.rtts.size(), 60u);
    for (std::size_t k = 0; k < s.rtts.size(); ++k) EXPECT_DOUBLE_EQ(*s.rtts[k], k % 2 ? 0.045 : 0.03);
    EXPECT_TRUE(s.quality);
}

TEST(IncrementalAub, HeadroomVerdicts) {
    PingProbeParams p;
    p.duration = 60.0;
    const double app = 30000.0;
    const double aub = 61440.0;
    IncrementalAubProber prober(p);
    auto runner = netsim::simulated_ping_runner(ping_link(), p);

    const double step = (aub - app) / 2;
    const auto ok = prober.step(app, step, runner);
    EXPECT_EQ(ok.verdict, IncrementalAubProber::Verdict::headroom);
    EXPECT_DOUBLE_EQ(ok.next_permitted_rate, app + step);

    const auto refused = prober.step(app + step / 2, step, runner);
    EXPECT_EQ(refused.verdict, IncrementalAubProber::Verdict::refused);
    EXPECT_FALSE(refused.stats);

    IncrementalAubProber fresh(p);
    const auto none = fresh.step(app, 2 * (aub - app), runner);
    EXPECT_EQ(none.verdict, IncrementalAubProber::Verdict::no_headroom);
    EXPECT_DOUBLE_EQ(fresh.next_permitted_rate(), 0.0);
}

}  // namespace
}  // namespace upbw
