#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "htq/analysis.hpp"
#include "htq/dynamics.hpp"
#include "htq/errors.hpp"
#include "htq/rng.hpp"
#include "htq/stats.hpp"
#include "htq/system.hpp"
#include "htq/vecutil.hpp"

namespace htq {

struct SimConfig {
    long long warmup_slots = 0;   // 0 = auto, ceil(50 / eps^2)
    long long measure_slots = 1000000;
    int batches = 20;
    std::uint64_t seed = 1;
    DVec theta_grid = {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0};
    int replication_id = 0;
    int hist_bins = 120;
    double hist_max = 0.0;        // 0 = auto, 12 * predicted limit mean
    long long thin_cap = 200000;  // at most this many thinned samples kept
    double perp_theta = 0.0;      // optional E[exp(theta |q_perp|)] diagnostic

    long long effective_warmup(double eps) const {
        if (warmup_slots > 0) return warmup_slots;
        return static_cast<long long>(std::ceil(50.0 / (eps * eps)));
    }

    void validate(double eps, int n, long long a_max, long long s_max) const {
        if (measure_slots < batches || batches < 2)
            throw config_error("sim: measure_slots must cover at least 2 batches");
        if (measure_slots % batches != 0)
            throw config_error("sim: measure_slots (" + std::to_string(measure_slots) +
                               ") not divisible by batches (" + std::to_string(batches) + ")");
        const double inc = static_cast<double>(n) * static_cast<double>(std::max(a_max, s_max));
        for (double th : theta_grid)
            if (std::abs(th) * eps * inc >= 30.0)
                throw config_error("sim: theta " + std::to_string(th) +
                                   " fails the overflow guard theta*eps*n*max(A,S) < 30");
    }
};

struct ThetaEstimate {
    double theta = 0.0;
    Estimate est;
    bool valid = true;  // false when the accumulation overflowed
};

// Steady-state statistics from one run, all with batch-means intervals.
struct SimEstimates {
    double epsilon = 0.0;
    double eps_eff = 0.0;
    long long slots = 0;
    Estimate scaled_parallel_mean;          // eps_eff * y(q),  y = collapse_scale * <c,q>
    std::vector<ThetaEstimate> mgf;         // E[exp(theta * eps_eff * y)]
    Estimate perp_sq;                       // E[|q_perp|^2]
    Estimate unused_sum;                    // E[sum_i u_i]
    Estimate unused_weighted;               // E[<c, u>]
    Estimate weighted_service;              // E[<c, s>]
    Estimate identity_residual;             // system's drift identity minus eps_eff
    std::vector<ThetaEstimate> residual;    // transform-identity residual per theta
    Estimate unused_sum_sq;                 // E[(sum_i u_i)^2]
    Estimate perp_exp;                      // optional diagnostic
    Histogram hist;
    DVec thinned;                           // thinned samples of eps_eff * y
    long long checked_slots = 0;            // slots that passed the exact invariants
};

// Orthogonal decomposition against a unit direction: q = parallel * c + perp.
inline std::pair<double, DVec> project(const QueueState& q, const DVec& c) {
    if (q.size() != c.size()) throw config_error("project: dimension mismatch");
    const double par = dot(c, q);
    DVec perp(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) perp[i] = static_cast<double>(q[i]) - par * c[i];
    return {par, std::move(perp)};
}

namespace detail {

// Per-series batch accumulator with fixed layout, so results are reproducible
// bit for bit for a given seed.
class BatchMatrix {
  public:
    BatchMatrix(int series, int batches, long long per_batch)
        : per_batch_(per_batch), sums_(series, DVec(batches, 0.0)) {}

    void add(int series, int batch, double v) { sums_[series][batch] += v; }

    Estimate estimate(int series) const {
        DVec means = sums_[series];
        for (double& m : means) m /= static_cast<double>(per_batch_);
        return estimate_from_batches(means);
    }

  private:
    long long per_batch_;
    std::vector<DVec> sums_;
};

}  // namespace detail

// Drives the Markov chain for one (system, epsilon) pair. Deterministic given
// (seed, replication_id): identical inputs give bitwise-identical estimates.
// Every slot is checked against the exact pathwise invariants; a violation
// aborts the run naming the slot.
inline SimEstimates run(const SystemModel& sys, double eps, const SimConfig& cfg) {
    if (eps <= 0.0 || eps >= sys.eps_max())
        throw config_error("epsilon " + std::to_string(eps) + " outside the admissible interval (0, " +
                           std::to_string(sys.eps_max()) + ")");
    cfg.validate(eps, sys.n, sys.a_max, sys.s_max);
    const FiniteJointDist arrivals = sys.arrival_dist(eps);
    const long long a_max = arrivals.bound();

    Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(sys.kind),
                                   static_cast<std::uint64_t>(std::llround(eps * 1e12)),
                                   static_cast<std::uint64_t>(cfg.replication_id)}));

    SimEstimates out;
    out.epsilon = eps;
    out.eps_eff = sys.eps_eff(eps);
    const double ee = out.eps_eff;
    const double kappa = sys.collapse_scale;

    const long long warmup = cfg.effective_warmup(eps);
    const long long measure = cfg.measure_slots;
    const int B = cfg.batches;
    const long long per_batch = measure / B;

    // series layout
    enum {
        S_SCALED, S_PERP, S_USUM, S_CU, S_CS, S_IDENT, S_USUMSQ, S_PERPEXP, S_FIXED
    };
    const int T = static_cast<int>(cfg.theta_grid.size());
    const int n_series = S_FIXED + 2 * T;  // mgf_t..., residual_t...
    detail::BatchMatrix bm(n_series, B, per_batch);
    std::vector<bool> theta_valid(T, true);

    const double hist_max = cfg.hist_max > 0.0
                                ? cfg.hist_max
                                : std::max(1e-6, 12.0 * sys.prediction.limit_mean);
    out.hist = Histogram(0.0, hist_max, cfg.hist_bins);
    const long long thin_stride = std::max<long long>(1, std::llround(1.0 / ee));

    QueueState q(sys.n, 0);
    IVec a(sys.n, 0);
    const double ident_offset = (sys.kind == SystemKind::gs || sys.kind == SystemKind::iq_switch) ? sys.b : 0.0;

    for (long long slot = 0; slot < warmup + measure; ++slot) {
        // observe queues, then solve the control problem
        int channel_state = -1;
        const IVec* s_ptr = nullptr;
        IVec s_local;
        switch (sys.kind) {
            case SystemKind::gs:
                channel_state = sys.channel.sample(rng);
                s_ptr = &schedule_maxweight(q, sys.schedules.per_state[channel_state], rng);
                break;
            case SystemKind::iq_switch:
                s_local = schedule_switch(q, rng);
                s_ptr = &s_local;
                break;
            default:
                break;
        }
        // arrivals
        const IVec& adraw = arrivals.sample(rng);
        if (sys.kind == SystemKind::single) {
            a[0] = adraw[0];
        } else if (sys.kind == SystemKind::lb) {
            std::fill(a.begin(), a.end(), 0);
            const int dest = sample_mixture(routing_mixture(sys.policy, q), rng);
            a[dest] = adraw[0];
        } else {
            a = adraw;
        }
        // service
        if (!s_ptr) {
            s_local = sys.service.sample(rng);
            s_ptr = &s_local;
        }

        SlotRecord rec = step(q, a, *s_ptr);
        rec.channel_state = channel_state;
        check_slot(rec, a_max, sys.s_max, slot);
        ++out.checked_slots;

        if (slot >= warmup) {
            const long long k = slot - warmup;
            const int batch = static_cast<int>(k / per_batch);
            auto [par, perp] = project(q, sys.c);
            const double y = kappa * par;
            const double scaled = ee * y;
            bm.add(S_SCALED, batch, scaled);
            bm.add(S_PERP, batch, dot(perp, perp));
            const long long usum = isum(rec.u);
            const double cu = kappa * dot(sys.c, rec.u);
            const double cs = dot(sys.c, rec.s);
            bm.add(S_USUM, batch, static_cast<double>(usum));
            bm.add(S_CU, batch, dot(sys.c, rec.u));
            bm.add(S_CS, batch, cs);
            bm.add(S_USUMSQ, batch, static_cast<double>(usum * usum));
            // drift identity: single/lb use E[sum u] = eps; gs/switch use
            // E[<c,u>] + b - E[<c,s>] = eps_eff
            double ident;
            if (ident_offset > 0.0)
                ident = dot(sys.c, rec.u) + ident_offset - cs;
            else
                ident = static_cast<double>(usum);
            bm.add(S_IDENT, batch, ident - ee);
            if (cfg.perp_theta != 0.0) bm.add(S_PERPEXP, batch, std::exp(cfg.perp_theta * norm2(perp)));

            const double ca_s = kappa * (dot(sys.c, rec.a) - dot(sys.c, rec.s));
            for (int t = 0; t < T; ++t) {
                const double th = cfg.theta_grid[t];
                const double expo = th * scaled;
                if (expo > 700.0) { theta_valid[t] = false; continue; }
                const double eq = std::exp(expo);
                bm.add(S_FIXED + t, batch, eq);
                // transform identity, left minus right:
                //   E[e^{th e y}(1 - e^{th e <c, a-s>})] - (1 - E[e^{-th e <c,u>}])
                const double left = eq * (1.0 - std::exp(th * ee * ca_s));
                const double right = 1.0 - std::exp(-th * ee * cu);
                bm.add(S_FIXED + T + t, batch, left - right);
            }
            out.hist.add(scaled);
            if (k % thin_stride == 0 && static_cast<long long>(out.thinned.size()) < cfg.thin_cap)
                out.thinned.push_back(scaled);
        }
        q = rec.q_next;
    }

    out.slots = measure;
    out.scaled_parallel_mean = bm.estimate(S_SCALED);
    out.perp_sq = bm.estimate(S_PERP);
    out.unused_sum = bm.estimate(S_USUM);
    out.unused_weighted = bm.estimate(S_CU);
    out.weighted_service = bm.estimate(S_CS);
    out.identity_residual = bm.estimate(S_IDENT);
    out.unused_sum_sq = bm.estimate(S_USUMSQ);
    if (cfg.perp_theta != 0.0) out.perp_exp = bm.estimate(S_PERPEXP);
    for (int t = 0; t < T; ++t) {
        ThetaEstimate m{cfg.theta_grid[t], {}, theta_valid[t]};
        ThetaEstimate r{cfg.theta_grid[t], {}, theta_valid[t]};
        if (theta_valid[t]) {
            m.est = bm.estimate(S_FIXED + t);
            r.est = bm.estimate(S_FIXED + T + t);
        }
        out.mgf.push_back(m);
        out.residual.push_back(r);
    }
    return out;
}

// Residual of the system's transform identity, estimated on one sample path.
// At theta = 0 both sides vanish identically.
inline std::vector<ThetaEstimate> empirical_mgf_equation_residual(const SystemModel& sys, double eps,
                                                                  const SimConfig& cfg) {
    return run(sys, eps, cfg).residual;
}

}  // namespace htq
