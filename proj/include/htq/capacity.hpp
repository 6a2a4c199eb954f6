#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "htq/dist.hpp"
#include "htq/errors.hpp"
#include "htq/vecutil.hpp"

namespace htq {

// One half-space <c, x> <= b of the capacity region, c a unit vector with
// nonnegative components and b > 0. Nonnegativity constraints (b = 0) stay
// implicit.
struct Facet {
    DVec c;
    double b = 0.0;
};

// Law of the maximum c-weighted service rate across channel states.
struct BDistribution {
    DVec values;  // b^(t) per channel state, in channel order
    DVec probs;
    double mean = 0.0;
    double variance = 0.0;
};

// Per-channel-state finite schedule sets.
struct ScheduleSet {
    std::vector<std::vector<IVec>> per_state;

    long long s_max() const {
        long long m = 0;
        for (const auto& st : per_state)
            for (const auto& v : st)
                for (long long x : v) m = std::max(m, x);
        return m;
    }

    // Required closure: zero vector present and every schedule's axis
    // projections present, so the hull is coordinate convex.
    void validate(int n) const {
        if (per_state.empty()) throw config_error("schedule set: no channel states");
        for (std::size_t t = 0; t < per_state.size(); ++t) {
            const auto& st = per_state[t];
            if (st.empty()) throw config_error("schedule set: empty set for state " + std::to_string(t));
            std::set<IVec> have(st.begin(), st.end());
            for (const auto& v : st) {
                if (static_cast<int>(v.size()) != n)
                    throw config_error("schedule set: dimension mismatch in state " + std::to_string(t));
                for (long long x : v)
                    if (x < 0) throw config_error("schedule set: negative rate in state " + std::to_string(t));
                for (int i = 0; i < n; ++i) {
                    IVec proj(n, 0);
                    proj[i] = v[i];
                    if (!have.count(proj))
                        throw config_error("schedule set: state " + std::to_string(t) +
                                           " missing axis projection " + vec_str(proj) + " of " + vec_str(v));
                }
            }
            if (!have.count(IVec(n, 0)))
                throw config_error("schedule set: state " + std::to_string(t) + " missing the zero vector");
        }
    }
};

namespace geom {

constexpr double kCoplanarTol = 1e-9;
constexpr double kAngularTol = 1e-8;

inline double det2(double a, double b, double c, double d) { return a * d - b * c; }

inline double det3(const DVec& r0, const DVec& r1, const DVec& r2) {
    return r0[0] * det2(r1[1], r1[2], r2[1], r2[2]) - r0[1] * det2(r1[0], r1[2], r2[0], r2[2]) +
           r0[2] * det2(r1[0], r1[1], r2[0], r2[1]);
}

// Normal of the hyperplane spanned by n-1 difference vectors in R^n
// (generalized cross product via cofactor expansion), n in {2,3,4}.
inline DVec hyperplane_normal(const std::vector<DVec>& d, int n) {
    DVec c(n, 0.0);
    if (n == 2) {
        c[0] = -d[0][1];
        c[1] = d[0][0];
    } else if (n == 3) {
        c[0] = det2(d[0][1], d[0][2], d[1][1], d[1][2]);
        c[1] = -det2(d[0][0], d[0][2], d[1][0], d[1][2]);
        c[2] = det2(d[0][0], d[0][1], d[1][0], d[1][1]);
    } else {
        for (int i = 0; i < 4; ++i) {
            std::vector<DVec> m(3, DVec(3, 0.0));
            for (int r = 0; r < 3; ++r) {
                int cc = 0;
                for (int col = 0; col < 4; ++col) {
                    if (col == i) continue;
                    m[r][cc++] = d[r][col];
                }
            }
            c[i] = ((i % 2) ? -1.0 : 1.0) * det3(m[0], m[1], m[2]);
        }
    }
    return c;
}

// Vertex candidates of sum_t psi_t ConvexHull{S^(t)}: one schedule per state,
// weighted by psi. All hull vertices are among these points.
inline std::vector<DVec> minkowski_points(const ScheduleSet& sched, const ChannelDist& channel) {
    std::size_t combos = 1;
    for (const auto& st : sched.per_state) {
        combos *= st.size();
        if (combos > 200000) throw unsupported_scale_error("capacity: too many schedule combinations");
    }
    const int n = static_cast<int>(sched.per_state[0][0].size());
    std::vector<DVec> pts(1, DVec(n, 0.0));
    for (std::size_t t = 0; t < sched.per_state.size(); ++t) {
        std::vector<DVec> next;
        next.reserve(pts.size() * sched.per_state[t].size());
        for (const auto& base : pts)
            for (const auto& v : sched.per_state[t]) {
                DVec p = base;
                for (int i = 0; i < n; ++i) p[i] += channel.probs[t] * static_cast<double>(v[i]);
                next.push_back(std::move(p));
            }
        pts = std::move(next);
    }
    std::sort(pts.begin(), pts.end());
    std::vector<DVec> dedup;
    for (const auto& p : pts) {
        if (!dedup.empty()) {
            double dist = 0.0;
            for (int i = 0; i < n; ++i) dist = std::max(dist, std::abs(p[i] - dedup.back()[i]));
            if (dist < kCoplanarTol) continue;
        }
        dedup.push_back(p);
    }
    return dedup;
}

}  // namespace geom

// Facets of the capacity region, from vertex enumeration of each hull, a
// weighted Minkowski combination, and brute-force facet extraction: every
// n-subset of candidate points that spans a supporting hyperplane with n
// affinely independent touch points is a facet. Restricted to n <= 4.
inline std::vector<Facet> capacity_region(const ScheduleSet& sched, const ChannelDist& channel) {
    channel.validate();
    if (sched.per_state.size() != channel.probs.size())
        throw config_error("capacity: schedule states and channel probabilities disagree");
    const int n = static_cast<int>(sched.per_state[0][0].size());
    sched.validate(n);
    if (n > 4) throw unsupported_scale_error("capacity: facet enumeration supports n <= 4, got n = " + std::to_string(n));

    const std::vector<DVec> pts = geom::minkowski_points(sched, channel);

    if (n == 1) {
        double hi = 0.0;
        for (const auto& p : pts) hi = std::max(hi, p[0]);
        if (hi <= geom::kCoplanarTol) throw config_error("capacity: region degenerate at the origin");
        return {Facet{{1.0}, hi}};
    }

    const std::size_t m = pts.size();
    double binom = 1.0;
    for (int k = 0; k < n; ++k) binom = binom * static_cast<double>(m - k) / (k + 1);
    if (binom * static_cast<double>(m) > 5e7)
        throw unsupported_scale_error("capacity: too many candidate vertices for facet enumeration");

    std::vector<Facet> facets;
    std::vector<std::size_t> idx(n);
    std::vector<DVec> diffs(n - 1, DVec(n, 0.0));

    // iterate over all n-subsets of points
    for (int k = 0; k < n; ++k) idx[k] = static_cast<std::size_t>(k);
    if (m < static_cast<std::size_t>(n)) throw config_error("capacity: too few distinct schedule points");
    while (true) {
        for (int k = 0; k < n - 1; ++k)
            for (int i = 0; i < n; ++i) diffs[k][i] = pts[idx[k + 1]][i] - pts[idx[0]][i];
        DVec c = geom::hyperplane_normal(diffs, n);
        const double len = norm2(c);
        if (len > geom::kCoplanarTol) {
            for (double& x : c) x /= len;
            double b = dot(c, pts[idx[0]]);
            // orient outward: all points on or below the plane
            double above = 0.0, below = 0.0;
            for (const auto& p : pts) {
                const double d = dot(c, p) - b;
                above = std::max(above, d);
                below = std::min(below, d);
            }
            bool supporting = false;
            if (above <= geom::kCoplanarTol) supporting = true;
            else if (-below <= geom::kCoplanarTol) {
                for (double& x : c) x = -x;
                b = -b;
                supporting = true;
            }
            if (supporting && b > geom::kCoplanarTol) {
                bool dup = false;
                for (const auto& f : facets) {
                    double dc = 0.0;
                    for (int i = 0; i < n; ++i) dc = std::max(dc, std::abs(f.c[i] - c[i]));
                    if (dc < geom::kAngularTol && std::abs(f.b - b) < geom::kAngularTol) { dup = true; break; }
                }
                if (!dup) {
                    for (int i = 0; i < n; ++i) {
                        if (c[i] < -geom::kCoplanarTol)
                            throw config_error("capacity: facet with negative normal component " + vec_str(c) +
                                               "; schedule sets are not coordinate convex");
                        if (c[i] < 0.0) c[i] = 0.0;
                    }
                    facets.push_back(Facet{std::move(c), b});
                }
            }
        }
        // next combination
        int pos = n - 1;
        while (pos >= 0 && idx[pos] == m - n + pos) --pos;
        if (pos < 0) break;
        ++idx[pos];
        for (int k = pos + 1; k < n; ++k) idx[k] = idx[k - 1] + 1;
    }

    if (facets.empty())
        throw config_error("capacity: no nontrivial facet found; region is degenerate (some queue can never be served)");
    std::sort(facets.begin(), facets.end(), [](const Facet& a, const Facet& b) { return a.c < b.c; });
    return facets;
}

// Per-state maxima b^(t) = max_{s in S^(t)} <c, s> and their mean/variance
// under the channel law. The mean reproduces the facet offset b exactly.
inline BDistribution b_distribution(const DVec& c, const ScheduleSet& sched, const ChannelDist& channel) {
    BDistribution bd;
    bd.probs = channel.probs;
    for (const auto& st : sched.per_state) {
        double best = 0.0;
        for (const auto& v : st) best = std::max(best, dot(c, v));
        bd.values.push_back(best);
    }
    for (std::size_t t = 0; t < bd.values.size(); ++t) bd.mean += bd.probs[t] * bd.values[t];
    for (std::size_t t = 0; t < bd.values.size(); ++t) {
        const double d = bd.values[t] - bd.mean;
        bd.variance += bd.probs[t] * d * d;
    }
    return bd;
}

// Heavy-traffic arrival mean r - eps * c for a point r on the facet.
inline DVec ht_arrival_mean(const DVec& r, const Facet& facet, double eps) {
    if (std::abs(dot(facet.c, r) - facet.b) > 1e-9)
        throw config_error("ht_arrival_mean: r is not on the facet hyperplane");
    DVec lam(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        lam[i] = r[i] - eps * facet.c[i];
        if (lam[i] < 0.0)
            throw config_error("ht_arrival_mean: epsilon " + std::to_string(eps) +
                               " pushes arrival mean below zero at queue " + std::to_string(i));
    }
    return lam;
}

struct CrpReport {
    bool holds = false;
    std::vector<int> tight_facets;  // indices into the facet list
};

// CRP holds iff r lies on exactly one facet hyperplane (unique outer normal
// among the b > 0 facets; nonnegativity planes are ignored by convention).
inline CrpReport check_crp(const DVec& r, const std::vector<Facet>& facets) {
    CrpReport rep;
    bool outside = false;
    for (std::size_t l = 0; l < facets.size(); ++l) {
        const double d = dot(facets[l].c, r) - facets[l].b;
        if (d > 1e-9) outside = true;
        else if (d > -1e-9) rep.tight_facets.push_back(static_cast<int>(l));
    }
    if (outside) throw config_error("check_crp: r lies outside the capacity region");
    if (rep.tight_facets.empty()) throw config_error("check_crp: r lies strictly inside the capacity region");
    rep.holds = rep.tight_facets.size() == 1;
    return rep;
}

}  // namespace htq
