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
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "upbw/netsim.hpp"
#include "upbw/scenario.hpp"

namespace upbw::netsim {
namespace {

SimConfig three_paths(double sub = 240000.0) {
    SimConfig c;
    c.sub_bps = sub;
    for (double lat : {0.020, 0.035, 0.050}) c.paths.push_back(PathConfig{100000.0, lat, 0.0, 0.0, std::nullopt});
    return c;
}

CapacityTestOptions options(std::size_t n, std::size_t m = 20, std::size_t size = 8192) {
    CapacityTestOptions o;
    o.sender.n_helpers = n;
    o.sender.packets_per_helper = {m};
    o.sender.packet_size = {size};
    return o;
}

TEST(Link, SinglePacketServiceTime) {
    SimConfig c = three_paths(1000.0);
    Simulator sim(c);
    std::vector<double> done;
    sim.on_link_done([&](const Packet&, double now) { done.push_back(now); });
    sim.schedule(2.0, EventKind::timer, [&] { sim.enqueue_send(Destination::helper(0), 500); });
    sim.run();
    ASSERT_EQ(done.size(), 1u);
    EXPECT_DOUBLE_EQ(done[0], 2.5);
}

TEST(Link, FifoServiceLaw) {
    SimConfig c = three_paths(1000.0);
    Simulator sim(c);
    std::vector<double> done;
    std::vector<std::uint64_t> ids;
    sim.on_link_done([&](const Packet& p, double now) {
        done.push_back(now);
        ids.push_back(p.id);
    });
    sim.schedule(1.0, EventKind::timer, [&] {
        sim.enqueue_send(Destination::helper(0), 200);
        sim.enqueue_send(Destination::helper(1), 300);
        sim.enqueue_send(Destination::background(0), 100);
    });
    sim.run();
    ASSERT_EQ(done.size(), 3u);
    EXPECT_DOUBLE_EQ(done[0], 1.2);
    EXPECT_DOUBLE_EQ(done[1], done[0] + 0.3);
    EXPECT_DOUBLE_EQ(done[2], done[1] + 0.1);
    EXPECT_EQ(ids, (std::vector<std::uint64_t>{0, 1, 2}));
}

TEST(Link, BackgroundInterleavesInEnqueueOrder) {
    SimConfig c = three_paths();
    c.background_flows.push_back(BackgroundFlow{140000.0});
    Simulator sim(c);
    std::vector<std::uint64_t> done;
    std::vector<Destination::Kind> kinds;
    sim.on_link_done([&](const Packet& p, double) {
        done.push_back(p.id);
        kinds.push_back(p.dest.kind);
    });
    for (int k = 0; k < 200; ++k) {
        sim.schedule(k * 0.013, EventKind::timer,
                     [&, k] { sim.enqueue_send(Destination::helper(k % 3), 1000 + 37 * k); });
    }
    sim.run(5.0);
    ASSERT_GT(done.size(), 200u);
    EXPECT_TRUE(std::is_sorted(done.begin(), done.end()));
    EXPECT_EQ(std::adjacent_find(done.begin(), done.end()), done.end());
    EXPECT_NE(std::find(kinds.begin(), kinds.end(), Destination::Kind::background), kinds.end());
    EXPECT_NE(std::find(kinds.begin(), kinds.end(), Destination::Kind::helper), kinds.end());
}

TEST(Path, SerializationAndLatency) {
    SimConfig c;
    c.sub_bps = 1000.0;
    c.paths.push_back(PathConfig{250.0, 0.5, 0.0, 0.0, std::nullopt});
    Simulator sim(c);
    std::vector<double> arrivals;
    sim.on_helper_frame([&](std::size_t, const wire::Frame&, double now) { arrivals.push_back(now); });
    sim.schedule(0.0, EventKind::timer, [&] {
        sim.enqueue_frame(0, wire::Frame{wire::probe_of_size(100, 100)});
        sim.enqueue_frame(0, wire::Frame{wire::probe_of_size(200, 100)});
    });
    sim.run();
    ASSERT_EQ(arrivals.size(), 2u);
    // link 0.1, path 0.4, latency 0.5; the second waits for the path.
    EXPECT_DOUBLE_EQ(arrivals[0], 1.0);
    EXPECT_DOUBLE_EQ(arrivals[1], 1.4);
}

// max(dTAB/SUB, PSize/AB) for every accepted pair at every helper.
void expect_interarrival_law(const SimConfig& c, const CapacityTestResult& r, std::size_t size) {
    for (std::size_t h = 0; h < r.helpers.size(); ++h) {
        const auto& acc = r.helpers[h].accepted;
        ASSERT_GE(acc.size(), 2u);
        for (std::size_t k = 1; k < acc.size(); ++k) {
            const double dtab = static_cast<double>(acc[k].tab - acc[k - 1].tab);
            const double expected = std::max(dtab / c.sub_bps, static_cast<double>(size) / c.paths[h].ab_bps);
            EXPECT_NEAR(acc[k].t - acc[k - 1].t, expected, 1e-9) << "helper " << h << " pair " << k;
        }
    }
}

TEST(Path, InterArrivalLaw) {
    for (std::size_t size : {1024u, 2048u, 8192u, 16384u}) {
        const SimConfig c = three_paths();
        expect_interarrival_law(c, run_capacity_test(c, options(3, 20, size)), size);
    }
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 50; ++trial) {
        SimConfig c;
        c.sub_bps = 50000.0 + static_cast<double>(rng() % 500000);
        const std::size_t n = 1 + rng() % 5;
        for (std::size_t i = 0; i < n; ++i) {
            c.paths.push_back(PathConfig{10000.0 + static_cast<double>(rng() % 300000),
                                         static_cast<double>(rng() % 100) * 1e-3, 0.0, 0.0, std::nullopt});
        }
        const std::size_t size = 512 + rng() % 8000;
        expect_interarrival_law(c, run_capacity_test(c, options(n, 10, size)), size);
    }
}

TEST(Path, SinglePathBoundedByAb) {
    SimConfig c;
    c.sub_bps = 240000.0;
    c.paths.push_back(PathConfig{50000.0, 0.03, 0.0, 0.0, std::nullopt});
    const auto r = run_capacity_test(c, options(1));
    ASSERT_TRUE(r.estimate.value_bps);
    EXPECT_NEAR(*r.estimate.value_bps, 50000.0, 1.0);
}

TEST(Path, SharedBottleneckUnderestimates) {
    SimConfig c = three_paths();
    c.groups.push_back(BottleneckGroup{120000.0});
    for (auto& p : c.paths) p.shared_bottleneck_group = 0;
    const auto r = run_capacity_test(c, options(3));
    ASSERT_TRUE(r.estimate.value_bps);
    EXPECT_NEAR(*r.estimate.value_bps, 120000.0, 0.05 * 120000.0);
}

TEST(Capacity, CleanScenario) {
    const SimConfig c = three_paths();
    const auto r = run_capacity_test(c, options(3), true);
    EXPECT_TRUE(r.estimate.confident);
    EXPECT_NEAR(*r.estimate.value_bps, 240000.0, 0.02 * 240000.0);
    EXPECT_TRUE(r.conservation_held);
    EXPECT_TRUE(r.counters.conserved());
    EXPECT_EQ(r.counters.in_queue + r.counters.in_path, 0u);
}

TEST(Capacity, LossOnOnePathStillConfident) {
    SimConfig c = three_paths();
    c.paths[1].loss_prob = 0.2;
    c.seed = 4;
    const auto r = run_capacity_test(c, options(3), true);
    EXPECT_TRUE(r.estimate.confident);
    EXPECT_NEAR(*r.estimate.value_bps, 240000.0, 0.05 * 240000.0);
    EXPECT_TRUE(r.conservation_held);
    EXPECT_GT(r.counters.lost, 0u);
}

TEST(Capacity, TotalLossGivesNoEstimate) {
    SimConfig c = three_paths();
    for (auto& p : c.paths) p.loss_prob = 1.0;
    const auto r = run_capacity_test(c, options(3), true);
    EXPECT_FALSE(r.estimate.value_bps);
    EXPECT_FALSE(r.estimate.confident);
    EXPECT_TRUE(r.conservation_held);
}

TEST(Capacity, SampleCeiling) {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 60; ++trial) {
        SimConfig c;
        c.sub_bps = 20000.0 + static_cast<double>(rng() % 500000);
        const std::size_t n = 1 + rng() % 5;
        for (std::size_t i = 0; i < n; ++i) {
            c.paths.push_back(PathConfig{5000.0 + static_cast<double>(rng() % 400000),
                                         static_cast<double>(rng() % 80) * 1e-3, 0.0,
                                         (rng() % 3 == 0) ? 0.1 : 0.0, std::nullopt});
        }
        c.seed = rng();
        if (rng() % 3 == 0) c.background_flows.push_back(BackgroundFlow{c.sub_bps * 0.3});
        const auto r = run_capacity_test(c, options(n, 15, 256 + rng() % 8000));
        for (const auto& h : r.helpers) {
            for (double u : h.samples) EXPECT_LE(u, c.sub_bps * (1 + 1e-9));
        }
    }
}

TEST(Capacity, AccountedAppTrafficInflatesTab) {
    SimConfig c = three_paths();
    const auto plain = run_capacity_test(c, options(3));
    c.background_flows.push_back(BackgroundFlow{100000.0, 0.0, 1e9, true});
    const auto with_app = run_capacity_test(c, options(3));

    EXPECT_EQ(plain.app_bytes, 0u);
    EXPECT_GT(with_app.app_bytes, 0u);
    std::uint64_t probe_bytes = 0;
    for (const auto& e : with_app.emitted) probe_bytes += e.bytes;
    EXPECT_EQ(with_app.final_tab, probe_bytes + with_app.app_bytes);

    auto mean_dtab = [](const CapacityTestResult& r) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& h : r.helpers) {
            for (std::size_t k = 1; k < h.accepted.size(); ++k) {
                sum += static_cast<double>(h.accepted[k].tab - h.accepted[k - 1].tab);
                ++n;
            }
        }
        return sum / static_cast<double>(n);
    };
    EXPECT_DOUBLE_EQ(mean_dtab(plain), 3 * 8192.0);
    EXPECT_GT(mean_dtab(with_app), 3 * 8192.0 * 1.2);

    // Counting the application's bytes keeps the estimate at the link capacity.
    ASSERT_TRUE(with_app.estimate.value_bps);
    EXPECT_NEAR(*with_app.estimate.value_bps, 240000.0, 0.05 * 240000.0);
}

TEST(Capacity, UnaccountedTrafficLowersEstimate) {
    SimConfig c = three_paths();
    c.background_flows.push_back(BackgroundFlow{140000.0});
    const auto r = run_capacity_test(c, options(3));
    ASSERT_TRUE(r.estimate.value_bps);
    EXPECT_LT(*r.estimate.value_bps, 0.8 * 240000.0);
}

TEST(Determinism, SameSeedSameTrace) {
    SimConfig c = three_paths();
    for (auto& p : c.paths) {
        p.jitter = 0.01;
        p.loss_prob = 0.05;
    }
    c.background_flows.push_back(BackgroundFlow{50000.0});
    c.record_trace = true;
    c.seed = 99;
    const auto a = run_capacity_test(c, options(3));
    const auto b = run_capacity_test(c, options(3));
    ASSERT_FALSE(a.trace.empty());
    EXPECT_EQ(a.trace, b.trace);
    std::ostringstream sa, sb;
    write_trace_csv(sa, a.trace);
    write_trace_csv(sb, b.trace);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str().substr(0, sa.str().find('\n')), "time_s,event,helper,bytes,rtt_s");

    c.seed = 100;
    const auto d = run_capacity_test(c, options(3));
    EXPECT_NE(a.trace, d.trace);
}

TEST(Determinism, EmptyScenario) {
    SimConfig c;
    c.record_trace = true;
    Simulator sim(c);
    sim.run();
    EXPECT_TRUE(sim.trace().empty());
    EXPECT_EQ(sim.events_processed(), 0u);
}

TEST(Simulator, EventGuard) {
    SimConfig c = three_paths();
    c.background_flows.push_back(BackgroundFlow{1e6, 0.0, 1e9, false, 10});
    c.max_events = 1000;
    Simulator sim(c);
    EXPECT_THROW(sim.run(100.0), std::runtime_error);
}

TEST(Simulator, ConfigValidation) {
    SimConfig c = three_paths();
    c.paths[0].loss_prob = 1.5;
    EXPECT_THROW(Simulator{c}, std::invalid_argument);
    c = three_paths();
    c.sub_bps = 0;
    EXPECT_THROW(Simulator{c}, std::invalid_argument);
    c = three_paths();
    c.paths[0].shared_bottleneck_group = 2;
    EXPECT_THROW(Simulator{c}, std::invalid_argument);
}

TEST(Ping, IdleLinkReturnsBase) {
    SimConfig c = three_paths();
    c.ping.landmark_base_rtt = {0.03, 0.05};
    Simulator sim(c);
    EXPECT_DOUBLE_EQ(*sim.ping(0), 0.03);
    EXPECT_DOUBLE_EQ(*sim.ping(1), 0.05 + 64.0 / c.sub_bps);
}

TEST(Ping, QueueGrowthIsLinearThenTimesOut) {
    SimConfig c;
    c.sub_bps = 10000.0;
    c.ping.request_bytes = 0;
    c.ping.timeout = 5.0;
    c.background_flows.push_back(BackgroundFlow{12000.0, 0.0, 1e9, false, 100});
    Simulator sim(c);
    std::vector<std::optional<double>> rtts;
    for (int k = 1; k <= 40; ++k) {
        sim.schedule(k * 1.0, EventKind::ping, [&] { rtts.push_back(sim.ping()); });
    }
    sim.run(41.0);
    ASSERT_EQ(rtts.size(), 40u);
    // Excess 2000 B/s over 10000 B/s adds 0.2 s of queueing per second.
    for (int k = 1; k <= 20; ++k) {
        ASSERT_TRUE(rtts[k - 1]);
        EXPECT_NEAR(*rtts[k - 1], 0.03 + 0.2 * k, 0.02);
    }
    for (int k = 26; k <= 40; ++k) EXPECT_FALSE(rtts[k - 1]);
}

TEST(Ping, BoundedBelowCapacity) {
    SimConfig c = three_paths();
    c.background_flows.push_back(BackgroundFlow{200000.0});
    Simulator sim(c);
    double worst = 0;
    for (int k = 1; k <= 100; ++k) {
        sim.schedule(k * 0.5, EventKind::ping, [&] { worst = std::max(worst, *sim.ping()); });
    }
    sim.run(60.0);
    EXPECT_LT(worst, 0.03 + 2 * 4096.0 / c.sub_bps);
}

}  // namespace
}  // namespace upbw::netsim
