#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "htq/dynamics.hpp"
#include "htq/errors.hpp"
#include "htq/rng.hpp"
#include "htq/vecutil.hpp"

namespace htq {

enum class PolicyKind { none, jsq, po2, random_uniform, maxweight, switch_maxweight };

inline PolicyKind policy_from_name(const std::string& name) {
    if (name == "jsq") return PolicyKind::jsq;
    if (name == "po2") return PolicyKind::po2;
    if (name == "random-uniform") return PolicyKind::random_uniform;
    if (name == "maxweight") return PolicyKind::maxweight;
    if (name == "switch-maxweight") return PolicyKind::switch_maxweight;
    if (name == "none" || name.empty()) return PolicyKind::none;
    throw config_error("unknown policy '" + name + "'");
}

inline const char* policy_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::jsq: return "jsq";
        case PolicyKind::po2: return "po2";
        case PolicyKind::random_uniform: return "random-uniform";
        case PolicyKind::maxweight: return "maxweight";
        case PolicyKind::switch_maxweight: return "switch-maxweight";
        default: return "none";
    }
}

// ---- routing ---------------------------------------------------------------

// Exact destination law of a routing policy at state q. Randomized tie-breaks
// appear as probabilities, so the same code backs both the sampling path and
// the truncated-chain kernel.
inline std::vector<std::pair<int, double>> routing_mixture(PolicyKind policy, const QueueState& q) {
    const int n = static_cast<int>(q.size());
    std::vector<std::pair<int, double>> mix;
    switch (policy) {
        case PolicyKind::jsq: {
            long long best = *std::min_element(q.begin(), q.end());
            std::vector<int> arg;
            for (int i = 0; i < n; ++i)
                if (q[i] == best) arg.push_back(i);
            for (int i : arg) mix.emplace_back(i, 1.0 / arg.size());
            return mix;
        }
        case PolicyKind::po2: {
            if (n < 2) throw config_error("po2: needs at least two queues");
            const double pair_p = 2.0 / (static_cast<double>(n) * (n - 1));
            DVec prob(n, 0.0);
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    if (q[i] < q[j]) prob[i] += pair_p;
                    else if (q[j] < q[i]) prob[j] += pair_p;
                    else { prob[i] += pair_p / 2; prob[j] += pair_p / 2; }
                }
            for (int i = 0; i < n; ++i)
                if (prob[i] > 0) mix.emplace_back(i, prob[i]);
            return mix;
        }
        case PolicyKind::random_uniform: {
            for (int i = 0; i < n; ++i) mix.emplace_back(i, 1.0 / n);
            return mix;
        }
        default:
            throw config_error("routing_mixture: not a routing policy");
    }
}

inline int sample_mixture(const std::vector<std::pair<int, double>>& mix, Rng& rng) {
    const double u = rng.u01();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < mix.size(); ++k) {
        acc += mix[k].second;
        if (u < acc) return mix[k].first;
    }
    return mix.back().first;
}

inline IVec route_arrivals(PolicyKind policy, const QueueState& q, long long total, Rng& rng) {
    IVec a(q.size(), 0);
    if (total < 0) throw config_error("route: negative arrival count");
    const int dest = sample_mixture(routing_mixture(policy, q), rng);
    a[dest] = total;
    return a;
}

// All arrivals to a uniformly chosen shortest queue.
inline IVec route_jsq(const QueueState& q, long long total, Rng& rng) {
    return route_arrivals(PolicyKind::jsq, q, total, rng);
}

// Two distinct queues sampled uniformly; all arrivals to the shorter one.
inline IVec route_po2(const QueueState& q, long long total, Rng& rng) {
    return route_arrivals(PolicyKind::po2, q, total, rng);
}

inline IVec route_random(const QueueState& q, long long total, Rng& rng) {
    return route_arrivals(PolicyKind::random_uniform, q, total, rng);
}

// ---- scheduling ------------------------------------------------------------

// Indices of the q-weight maximizers of a finite schedule set.
inline std::vector<int> maxweight_argmax(const QueueState& q, const std::vector<IVec>& schedules) {
    if (schedules.empty()) throw config_error("maxweight: empty schedule set");
    long long best = std::numeric_limits<long long>::min();
    std::vector<int> arg;
    for (std::size_t k = 0; k < schedules.size(); ++k) {
        if (schedules[k].size() != q.size()) throw config_error("maxweight: schedule dimension mismatch");
        const long long w = idot(q, schedules[k]);
        if (w > best) { best = w; arg.assign(1, static_cast<int>(k)); }
        else if (w == best) arg.push_back(static_cast<int>(k));
    }
    return arg;
}

// MaxWeight over the channel state's schedule set, ties uniform. Weights are
// exact integers, so ties are detected without tolerance.
inline const IVec& schedule_maxweight(const QueueState& q, const std::vector<IVec>& schedules, Rng& rng) {
    const std::vector<int> arg = maxweight_argmax(q, schedules);
    return schedules[arg[rng.pick(arg.size())]];
}

namespace detail {

inline void perms_rec(int n, std::vector<int>& cur, std::vector<bool>& used,
                      std::vector<std::vector<int>>& out) {
    if (static_cast<int>(cur.size()) == n) { out.push_back(cur); return; }
    for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        used[j] = true;
        cur.push_back(j);
        perms_rec(n, cur, used, out);
        cur.pop_back();
        used[j] = false;
    }
}

inline std::vector<std::vector<int>> all_permutations(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur;
    std::vector<bool> used(n, false);
    perms_rec(n, cur, used, out);
    return out;
}

// O(N^3) Hungarian algorithm, maximization form, double weights.
inline std::vector<int> hungarian_max(const std::vector<DVec>& w) {
    const int n = static_cast<int>(w.size());
    const double inf = std::numeric_limits<double>::infinity();
    DVec u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        DVec minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = -w[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) { minv[j] = cur; way[j] = j0; }
                if (minv[j] < delta) { delta = minv[j]; j1 = j; }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) { u[p[j]] += delta; v[j] -= delta; }
                else minv[j] -= delta;
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> match(n);
    for (int j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
    return match;
}

}  // namespace detail

// Maximum-weight permutation matchings of an NxN weight matrix (row-major q).
// Full enumeration; intended for N <= 4.
inline std::vector<std::vector<int>> switch_argmax_perms(const QueueState& q, int N) {
    long long best = std::numeric_limits<long long>::min();
    std::vector<std::vector<int>> arg;
    for (const auto& perm : detail::all_permutations(N)) {
        long long w = 0;
        for (int i = 0; i < N; ++i) w += q[i * N + perm[i]];
        if (w > best) { best = w; arg.assign(1, perm); }
        else if (w == best) arg.push_back(perm);
    }
    return arg;
}

// Max-weight perfect matching on the N x N queue matrix; the service matrix is
// always a full permutation. Ties uniform for N <= 4 (enumeration); above that
// a random sub-unit perturbation picks among maximizers: integer weights differ
// by at least 1, and the total perturbation stays below 1/2, so the perturbed
// optimum is always a true optimum.
inline IVec schedule_switch(const QueueState& q, Rng& rng) {
    const int n = static_cast<int>(q.size());
    int N = static_cast<int>(std::llround(std::sqrt(static_cast<double>(n))));
    if (N * N != n) throw config_error("switch: state dimension " + std::to_string(n) + " is not a perfect square");
    std::vector<int> perm;
    if (N <= 4) {
        const auto arg = switch_argmax_perms(q, N);
        perm = arg[rng.pick(arg.size())];
    } else {
        std::vector<DVec> w(N, DVec(N, 0.0));
        const double scale = 0.4 / N;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) w[i][j] = static_cast<double>(q[i * N + j]) + scale * rng.u01();
        perm = detail::hungarian_max(w);
    }
    IVec s(n, 0);
    for (int i = 0; i < N; ++i) s[i * N + perm[i]] = 1;
    return s;
}

}  // namespace htq
