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

#ifndef UPBW_RING_ALLOC_HPP_
#define UPBW_RING_ALLOC_HPP_

// Resource allocation on a ring: provider i may serve only consumers i and
// (i+1) mod N, under supply caps S(i) and demand caps P(i). With x units fixed
// on the (provider 0, consumer 0) edge, rsum(x) is the largest total
// allocation. Four ways of getting rsum are provided:
//
//   greedy_algo      one x in O(N)
//   rsum_naive       every x, O(N * XMAX)
//   rsum_sweep       every x from the breakpoints of the per-edge functions
//   rsum_closed_form every x from three or four greedy evaluations
//
// plus brute_force_oracle, an exhaustive enumeration for small instances.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace upbw::ring {

using Units = std::int64_t;

struct AllocationInstance {
    std::vector<Units> s;
    std::vector<Units> p;

    std::size_t size() const { return s.size(); }
    Units xmax() const { return std::min(s.at(0), p.at(0)); }

    void validate() const {
        if (s.size() != p.size()) throw std::invalid_argument("S and P must have the same length");
        if (s.size() < 2) throw std::invalid_argument("ring allocation needs N >= 2");
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < 0 || p[i] < 0) throw std::invalid_argument("capacities must be non-negative");
        }
    }
};

struct AllocationResult {
    std::vector<Units> own;   // ralloc(i, i)
    std::vector<Units> next;  // ralloc(i, (i+1) mod N)
    Units total{0};

    Units supplied_by(std::size_t i) const { return own[i] + next[i]; }
    Units consumed_by(std::size_t i) const { return own[i] + next[(i + own.size() - 1) % own.size()]; }
};

inline bool is_feasible(const AllocationInstance& inst, const AllocationResult& r) {
    const std::size_t n = inst.size();
    if (r.own.size() != n || r.next.size() != n) return false;
    Units total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (r.own[i] < 0 || r.next[i] < 0) return false;
        if (r.supplied_by(i) > inst.s[i]) return false;
        if (r.consumed_by(i) > inst.p[i]) return false;
        total += r.own[i] + r.next[i];
    }
    return total == r.total;
}

inline void check_x(const AllocationInstance& inst, Units x) {
    if (x < 0 || x > inst.xmax()) throw std::out_of_range("x must lie in [0, min(S(0), P(0))]");
}

/// Fixes ralloc(0,0) = x, then walks the providers in order: provider i first
/// fills consumer i (i > 0), then gives what is left to consumer i+1.
inline AllocationResult greedy_algo(const AllocationInstance& inst, Units x) {
    inst.validate();
    check_x(inst, x);
    const std::size_t n = inst.size();
    std::vector<Units> salloc(n, 0);
    std::vector<Units> palloc(n, 0);
    AllocationResult r;
    r.own.assign(n, 0);
    r.next.assign(n, 0);
    salloc[0] = palloc[0] = r.own[0] = x;

    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            const Units q = std::min(inst.s[i] - salloc[i], inst.p[i] - palloc[i]);
            salloc[i] += q;
            palloc[i] += q;
            r.own[i] = q;
        }
        const std::size_t j = (i + 1) % n;
        const Units q = std::min(inst.s[i] - salloc[i], inst.p[j] - palloc[j]);
        salloc[i] += q;
        palloc[j] += q;
        r.next[i] = q;
    }
    for (std::size_t i = 0; i < n; ++i) r.total += r.own[i] + r.next[i];
    return r;
}

inline constexpr std::uint64_t kOracleGuard = 10'000'000;

/// Product of (S(i)+1)^2, saturating at just above the guard.
inline std::uint64_t oracle_combinations(const AllocationInstance& inst) {
    std::uint64_t combos = 1;
    for (Units v : inst.s) {
        const auto f = static_cast<std::uint64_t>(v + 1) * static_cast<std::uint64_t>(v + 1);
        if (combos > (kOracleGuard + 1) / f) return kOracleGuard + 1;
        combos *= f;
    }
    return combos;
}

/// Exhaustive maximum over every integer allocation with ralloc(0,0) = x that
/// satisfies both constraint families.
inline Units brute_force_oracle(const AllocationInstance& inst, Units x) {
    inst.validate();
    check_x(inst, x);
    if (oracle_combinations(inst) > kOracleGuard) {
        throw std::length_error("instance too large for exhaustive enumeration");
    }
    const std::size_t n = inst.size();
    std::vector<Units> own(n, 0);
    std::vector<Units> next(n, 0);
    own[0] = x;
    Units best = 0;

    // Provider i chooses (own(i), next(i)); consumer i's cap involves next(i-1),
    // which is already fixed when provider i is reached. Consumer 0's cap
    // involves next(N-1) and is checked at the leaf.
    auto recurse = [&](auto&& self, std::size_t i) -> void {
        if (i == n) {
            if (own[0] + next[n - 1] > inst.p[0]) return;
            Units total = 0;
            for (std::size_t k = 0; k < n; ++k) total += own[k] + next[k];
            best = std::max(best, total);
            return;
        }
        const Units incoming = i == 0 ? 0 : next[i - 1];
        const Units own_lo = i == 0 ? x : 0;
        const Units own_hi = i == 0 ? x : inst.p[i] - incoming;
        for (Units o = own_lo; o <= own_hi && o <= inst.s[i]; ++o) {
            if (i > 0 && o + incoming > inst.p[i]) break;
            own[i] = o;
            for (Units nx = 0; o + nx <= inst.s[i]; ++nx) {
                next[i] = nx;
                self(self, i + 1);
            }
        }
    };
    recurse(recurse, 0);
    return best;
}

inline std::vector<Units> rsum_naive(const AllocationInstance& inst) {
    inst.validate();
    std::vector<Units> out;
    const Units xmax = inst.xmax();
    out.reserve(static_cast<std::size_t>(xmax + 1));
    for (Units x = 0; x <= xmax; ++x) out.push_back(greedy_algo(inst, x).total);
    return out;
}

/// Integer function on [0, xmax] that is linear between consecutive knots.
/// Knot abscissae are strictly increasing, start at 0 and end at xmax; the
/// slope on every segment is an integer.
class PiecewiseUnitFn {
  public:
    struct Knot {
        Units x;
        Units v;
        friend bool operator==(const Knot&, const Knot&) = default;
    };
    struct Segment {
        Units begin;
        Units end;
        Units slope;
    };

    PiecewiseUnitFn() = default;

    static PiecewiseUnitFn constant(Units xmax, Units c) { return from_knots(xmax, {{0, c}, {xmax, c}}); }
    static PiecewiseUnitFn identity(Units xmax) { return from_knots(xmax, {{0, 0}, {xmax, xmax}}); }
    static PiecewiseUnitFn from_knots(Units xmax, std::vector<Knot> knots) {
        PiecewiseUnitFn f;
        f.xmax_ = xmax;
        f.knots_ = std::move(knots);
        if (xmax == 0) f.knots_.resize(1);
        f.normalize();
        return f;
    }

    Units xmax() const { return xmax_; }
    Units value_at_zero() const { return knots_.front().v; }
    const std::vector<Knot>& knots() const { return knots_; }

    Units operator()(Units x) const {
        if (x < 0 || x > xmax_) throw std::out_of_range("x outside the function domain");
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x, [](Units a, const Knot& k) { return a < k.x; });
        if (it == knots_.end()) return knots_.back().v;
        const Knot& right = *it;
        const Knot& left = *(it - 1);
        return left.v + (right.v - left.v) / (right.x - left.x) * (x - left.x);
    }

    std::vector<Segment> segments() const {
        std::vector<Segment> out;
        for (std::size_t k = 0; k + 1 < knots_.size(); ++k) {
            const Knot& a = knots_[k];
            const Knot& b = knots_[k + 1];
            out.push_back(Segment{a.x, b.x, (b.v - a.v) / (b.x - a.x)});
        }
        return out;
    }

    /// x-coordinates where the slope changes, excluding 0 and xmax.
    std::vector<Units> breakpoints() const {
        std::vector<Units> out;
        for (std::size_t k = 1; k + 1 < knots_.size(); ++k) out.push_back(knots_[k].x);
        return out;
    }

    /// Slopes of consecutive segments with equal neighbours merged.
    std::vector<Units> slope_pattern() const {
        std::vector<Units> out;
        for (const auto& seg : segments()) {
            if (out.empty() || out.back() != seg.slope) out.push_back(seg.slope);
        }
        return out;
    }

    /// c - f(x)
    PiecewiseUnitFn subtracted_from(Units c) const {
        std::vector<Knot> k = knots_;
        for (auto& knot : k) knot.v = c - knot.v;
        return from_knots(xmax_, std::move(k));
    }

    /// Pointwise minimum over the integers of the domain.
    static PiecewiseUnitFn min(const PiecewiseUnitFn& a, const PiecewiseUnitFn& b) {
        if (a.xmax_ != b.xmax_) throw std::invalid_argument("domains differ");
        const Units xmax = a.xmax_;
        if (xmax == 0) return constant(0, std::min(a(0), b(0)));

        std::vector<Units> xs;
        for (const auto& k : a.knots_) xs.push_back(k.x);
        for (const auto& k : b.knots_) xs.push_back(k.x);
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

        std::vector<Knot> out;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const Units x0 = xs[k];
            out.push_back({x0, std::min(a(x0), b(x0))});
            if (k + 1 == xs.size()) break;
            const Units x1 = xs[k + 1];
            // Both functions are linear on [x0, x1]; add knots where they cross.
            const Units d0 = a(x0) - b(x0);
            const Units d1 = a(x1) - b(x1);
            if ((d0 < 0 && d1 > 0) || (d0 > 0 && d1 < 0)) {
                const Units dslope = (d1 - d0) / (x1 - x0);
                // d(x) = d0 + dslope * (x - x0) vanishes at x0 - d0 / dslope.
                const Units num = -d0;
                const Units lo = x0 + floor_div(num, dslope);
                if (lo > x0) out.push_back({lo, std::min(a(lo), b(lo))});
                if (lo + 1 < x1 && (num % dslope) != 0) out.push_back({lo + 1, std::min(a(lo + 1), b(lo + 1))});
            }
        }
        return from_knots(xmax, std::move(out));
    }

  private:
    static Units floor_div(Units a, Units b) {
        Units q = a / b;
        if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
        return q;
    }

    // Drops knots where the slope does not change.
    void normalize() {
        std::vector<Knot> out;
        for (const auto& k : knots_) {
            if (!out.empty() && out.back().x == k.x) continue;
            while (out.size() >= 2) {
                const Knot& a = out[out.size() - 2];
                const Knot& b = out.back();
                if ((b.v - a.v) * (k.x - b.x) == (k.v - b.v) * (b.x - a.x)) {
                    out.pop_back();
                } else {
                    break;
                }
            }
            out.push_back(k);
        }
        knots_ = std::move(out);
    }

    Units xmax_{0};
    std::vector<Knot> knots_{{0, 0}};
};

struct EdgeFunctions {
    // own[i] = f(i, .), the allocation on edge (i, i).
    std::vector<PiecewiseUnitFn> f;
    // g[j] = g(j, .), the allocation on edge ((j-1) mod N, j).
    std::vector<PiecewiseUnitFn> g;
};

namespace detail {

// True when `pattern` is a subsequence of `allowed`.
inline bool pattern_within(const std::vector<Units>& pattern, const std::vector<Units>& allowed) {
    std::size_t j = 0;
    for (Units s : pattern) {
        while (j < allowed.size() && allowed[j] != s) ++j;
        if (j == allowed.size()) return false;
        ++j;
    }
    return true;
}

}  // namespace detail

/// Builds f(i, .) and g(i, .) in dependency order g(1), f(1), g(2), ...,
/// g(0), and checks each against its expected shape: f made of constant,
/// rising, constant parts; g(i), i >= 1, of constant, falling, constant parts;
/// g(0) may end with one more falling part. Throws std::logic_error if an
/// instance ever breaks the shape.
inline EdgeFunctions compute_fg(const AllocationInstance& inst) {
    inst.validate();
    const std::size_t n = inst.size();
    const Units xmax = inst.xmax();
    EdgeFunctions fg;
    fg.f.resize(n);
    fg.g.resize(n);

    fg.f[0] = PiecewiseUnitFn::identity(xmax);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        // g(i+1) = min(S(i) - f(i), P(i+1))
        fg.g[i + 1] = PiecewiseUnitFn::min(fg.f[i].subtracted_from(inst.s[i]),
                                           PiecewiseUnitFn::constant(xmax, inst.p[i + 1]));
        // f(i+1) = min(P(i+1) - g(i+1), S(i+1))
        fg.f[i + 1] = PiecewiseUnitFn::min(fg.g[i + 1].subtracted_from(inst.p[i + 1]),
                                           PiecewiseUnitFn::constant(xmax, inst.s[i + 1]));
    }
    // g(0) = min(S(N-1) - f(N-1), P(0) - x)
    fg.g[0] = PiecewiseUnitFn::min(fg.f[n - 1].subtracted_from(inst.s[n - 1]),
                                   PiecewiseUnitFn::identity(xmax).subtracted_from(inst.p[0]));

    for (std::size_t i = 0; i < n; ++i) {
        if (!detail::pattern_within(fg.f[i].slope_pattern(), {0, 1, 0})) {
            throw std::logic_error("f(" + std::to_string(i) + ") does not have the constant/rising/constant shape");
        }
        const std::vector<Units> g_shape = i == 0 ? std::vector<Units>{0, -1, 0, -1} : std::vector<Units>{0, -1, 0};
        if (!detail::pattern_within(fg.g[i].slope_pattern(), g_shape)) {
            throw std::logic_error("g(" + std::to_string(i) + ") does not have the expected falling shape");
        }
    }
    return fg;
}

/// rsum for every x by sweeping the breakpoints of all f and g in ascending
/// order while maintaining the running sum and the total slope.
inline std::vector<Units> rsum_sweep(const AllocationInstance& inst) {
    const EdgeFunctions fg = compute_fg(inst);
    const std::size_t n = inst.size();
    const Units xmax = inst.xmax();

    struct Event {
        std::size_t fn;  // 0..n-1 for f, n..2n-1 for g
        Units slope;
    };
    // Events keyed by x; events sharing a coordinate form one group.
    std::map<Units, std::vector<Event>> events;
    Units sum = 0;
    auto add_events = [&](const PiecewiseUnitFn& fn, std::size_t id) {
        sum += fn.value_at_zero();
        for (const auto& seg : fn.segments()) events[seg.begin].push_back(Event{id, seg.slope});
    };
    for (std::size_t i = 0; i < n; ++i) add_events(fg.f[i], i);
    for (std::size_t i = 0; i < n; ++i) add_events(fg.g[i], n + i);
    events[xmax];

    std::vector<Units> slope(2 * n, 0);
    Units dif = 0;
    Units prev = 0;
    std::vector<Units> out(static_cast<std::size_t>(xmax + 1), 0);
    out[0] = sum;
    for (const auto& [e, group] : events) {
        for (Units x = prev + 1; x <= e; ++x) out[static_cast<std::size_t>(x)] = sum + dif * (x - prev);
        sum += dif * (e - prev);
        prev = e;
        for (const Event& ev : group) {
            dif -= slope[ev.fn];
            dif += ev.slope;
            slope[ev.fn] = ev.slope;
        }
    }
    return out;
}

struct RsumProfile {
    Units xmax{0};
    Units y1{0};
    Units y2{0};
    Units x1{0};
    Units x2{0};
    Units yx1{0};
    Units yx2{0};
    Units d1{0};
    Units d2{0};

    Units rise_end() const { return x1 - d1; }
    Units plateau_end() const { return x2 + d2; }
    Units plateau_value() const { return yx1; }

    Units operator()(Units x) const {
        if (x < 0 || x > xmax) throw std::out_of_range("x outside [0, XMAX]");
        if (x <= rise_end()) return y1 + x;
        if (x <= plateau_end()) return yx1;
        return y2 + (xmax - x);
    }

    std::vector<Units> expand() const {
        std::vector<Units> out;
        out.reserve(static_cast<std::size_t>(xmax + 1));
        for (Units x = 0; x <= xmax; ++x) out.push_back((*this)(x));
        return out;
    }
};

/// The whole rsum profile from greedy evaluations at 0, XMAX, and the one or
/// two abscissae in the middle of the plateau.
inline RsumProfile rsum_closed_form(const AllocationInstance& inst) {
    inst.validate();
    RsumProfile r;
    r.xmax = inst.xmax();
    r.y1 = greedy_algo(inst, 0).total;
    r.y2 = greedy_algo(inst, r.xmax).total;
    const Units twice = r.y2 - r.y1 + r.xmax;
    if (twice < 0) throw std::logic_error("rsum falls faster than one unit per step");
    r.x1 = twice / 2;
    r.yx1 = greedy_algo(inst, r.x1).total;
    if (twice % 2 == 1) {
        r.x2 = r.x1 + 1;
        r.yx2 = greedy_algo(inst, r.x2).total;
    } else {
        r.x2 = r.x1;
        r.yx2 = r.yx1;
    }
    r.d1 = r.y1 + r.x1 - r.yx1;
    r.d2 = r.y2 + (r.xmax - r.x2) - r.yx2;
    return r;
}

struct RsumMax {
    Units x{0};
    Units total{0};
};

/// Largest total over all x, with the smallest x reaching it.
inline RsumMax rsum_max(const AllocationInstance& inst) {
    const RsumProfile prof = rsum_closed_form(inst);
    return RsumMax{std::max<Units>(0, prof.rise_end()), prof.plateau_value()};
}

}  // namespace upbw::ring

#endif  // UPBW_RING_ALLOC_HPP_
