#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "htq/analysis.hpp"
#include "htq/dynamics.hpp"
#include "htq/errors.hpp"
#include "htq/policies.hpp"
#include "htq/stats.hpp"
#include "htq/system.hpp"
#include "htq/vecutil.hpp"

namespace htq {

struct OracleOptions {
    long long q_cap = 200;
    double solve_tol = 1e-10;        // sup-norm residual of pi = pi P
    long long max_iterations = 2000000;
    double boundary_threshold = 1e-8;
};

// Exact stationary distribution of the queueing chain restricted to
// {0..q_cap}^n. Transitions that would leave the box saturate at the cap; the
// induced bias is quantified by the boundary-mass diagnostic. Randomized
// policy tie-breaks enter the kernel as exact probability mixtures, so the
// oracle is faithful to the simulated policy without sampling noise.
class TruncatedChain {
  public:
    TruncatedChain(const SystemModel& sys, double eps, const OracleOptions& opts)
        : sys_(sys), eps_(eps), cap_(opts.q_cap), opts_(opts) {
        build();
        solve();
        diagnose();
    }

    const DVec& pi() const { return pi_; }
    double residual() const { return residual_; }
    long long iterations() const { return iters_; }
    double boundary_mass() const { return boundary_mass_; }
    double saturation_mass() const { return saturation_mass_; }
    bool truncation_warning() const { return boundary_mass_ > opts_.boundary_threshold; }
    double pi_at(const QueueState& q) const { return pi_[index(q)]; }
    std::size_t states() const { return pi_.size(); }

    double mean_queue(int i) const {
        double s = 0.0;
        QueueState q(sys_.n);
        for (std::size_t st = 0; st < pi_.size(); ++st) {
            decode(st, q);
            s += pi_[st] * static_cast<double>(q[i]);
        }
        return s;
    }

    // Exact analogue of the simulator's estimates: stationary expectations of
    // the collapse scalar, the perpendicular norm, the unused service, the MGF
    // grid, and the drift identity, all summed against pi.
    struct Moments {
        double scaled_mean = 0.0;        // eps_eff * E[y]
        double perp_sq = 0.0;            // E[|q_perp|^2]
        double unused_sum = 0.0;         // E[sum u]
        double unused_weighted = 0.0;    // E[<c,u>]
        double weighted_service = 0.0;   // E[<c,s>]
        double identity_residual = 0.0;  // identity minus eps_eff
        DVec mgf_theta;
        DVec mgf;
        double pi_zero = 0.0;
        double ks_vs_exponential = 0.0;  // exact law vs the predicted limit
    };

    Moments exact_moments(const DVec& theta_grid) const {
        Moments m;
        const double ee = sys_.eps_eff(eps_);
        QueueState q(sys_.n);
        m.mgf_theta = theta_grid;
        m.mgf.assign(theta_grid.size(), 0.0);
        std::vector<std::pair<double, double>> atoms;
        atoms.reserve(pi_.size());
        for (std::size_t st = 0; st < pi_.size(); ++st) {
            decode(st, q);
            const double par = dot(sys_.c, q);
            const double y = sys_.collapse_scale * par;
            double p2 = 0.0;
            for (int i = 0; i < sys_.n; ++i) {
                const double d = static_cast<double>(q[i]) - par * sys_.c[i];
                p2 += d * d;
            }
            m.scaled_mean += pi_[st] * ee * y;
            m.perp_sq += pi_[st] * p2;
            for (std::size_t t = 0; t < theta_grid.size(); ++t)
                m.mgf[t] += pi_[st] * std::exp(theta_grid[t] * ee * y);
            atoms.emplace_back(ee * y, pi_[st]);
        }
        m.unused_sum = expect(exp_usum_);
        m.unused_weighted = expect(exp_cu_);
        m.weighted_service = expect(exp_cs_);
        if (sys_.kind == SystemKind::gs || sys_.kind == SystemKind::iq_switch)
            m.identity_residual = m.unused_weighted + sys_.b - m.weighted_service - ee;
        else
            m.identity_residual = m.unused_sum - ee;
        m.pi_zero = pi_[0];
        if (sys_.prediction.limit_mean > 0.0)
            m.ks_vs_exponential = ks_mid_weighted(
                atoms, [&](double x) { return exponential_cdf(sys_.prediction.limit_mean, x); });
        return m;
    }

  private:
    std::size_t index(const QueueState& q) const {
        std::size_t idx = 0;
        for (int i = 0; i < sys_.n; ++i) idx = idx * (cap_ + 1) + static_cast<std::size_t>(q[i]);
        return idx;
    }

    void decode(std::size_t idx, QueueState& q) const {
        for (int i = sys_.n - 1; i >= 0; --i) {
            q[i] = static_cast<long long>(idx % (cap_ + 1));
            idx /= (cap_ + 1);
        }
    }

    double expect(const DVec& per_state) const {
        double s = 0.0;
        for (std::size_t st = 0; st < pi_.size(); ++st) s += pi_[st] * per_state[st];
        return s;
    }

    // Exact control law at q: list of (arrival vector, service vector, prob).
    void control_mixture(const QueueState& q, const FiniteJointDist& arrivals,
                         std::vector<std::pair<SlotRecord, double>>& out) const {
        out.clear();
        switch (sys_.kind) {
            case SystemKind::single: {
                for (std::size_t ak = 0; ak < arrivals.support().size(); ++ak)
                    for (std::size_t sk = 0; sk < sys_.service.support().size(); ++sk)
                        out.emplace_back(step(q, arrivals.support()[ak], sys_.service.support()[sk]),
                                         arrivals.probs()[ak] * sys_.service.probs()[sk]);
                return;
            }
            case SystemKind::lb: {
                const auto mix = routing_mixture(sys_.policy, q);
                IVec a(sys_.n, 0);
                for (const auto& [dest, pr] : mix)
                    for (std::size_t ak = 0; ak < arrivals.support().size(); ++ak) {
                        std::fill(a.begin(), a.end(), 0);
                        a[dest] = arrivals.support()[ak][0];
                        for (std::size_t sk = 0; sk < sys_.service.support().size(); ++sk)
                            out.emplace_back(step(q, a, sys_.service.support()[sk]),
                                             pr * arrivals.probs()[ak] * sys_.service.probs()[sk]);
                    }
                return;
            }
            case SystemKind::gs: {
                for (std::size_t t = 0; t < sys_.channel.probs.size(); ++t) {
                    const auto& scheds = sys_.schedules.per_state[t];
                    const auto arg = maxweight_argmax(q, scheds);
                    const double tie = 1.0 / static_cast<double>(arg.size());
                    for (int si : arg)
                        for (std::size_t ak = 0; ak < arrivals.support().size(); ++ak)
                            out.emplace_back(step(q, arrivals.support()[ak], scheds[si]),
                                             sys_.channel.probs[t] * tie * arrivals.probs()[ak]);
                }
                return;
            }
            case SystemKind::iq_switch: {
                const auto arg = switch_argmax_perms(q, sys_.N);
                const double tie = 1.0 / static_cast<double>(arg.size());
                IVec s(sys_.n, 0);
                for (const auto& perm : arg) {
                    std::fill(s.begin(), s.end(), 0);
                    for (int i = 0; i < sys_.N; ++i) s[i * sys_.N + perm[i]] = 1;
                    for (std::size_t ak = 0; ak < arrivals.support().size(); ++ak)
                        out.emplace_back(step(q, arrivals.support()[ak], s), tie * arrivals.probs()[ak]);
                }
                return;
            }
        }
    }

    void build() {
        double states_d = 1.0;
        for (int i = 0; i < sys_.n; ++i) states_d *= static_cast<double>(cap_ + 1);
        if (states_d > 1e7)
            throw unsupported_scale_error("oracle: state count " + std::to_string(states_d) + " exceeds 1e7");
        const std::size_t S = static_cast<std::size_t>(states_d);
        const FiniteJointDist arrivals = sys_.arrival_dist(eps_);

        row_start_.assign(S + 1, 0);
        exp_usum_.assign(S, 0.0);
        exp_cu_.assign(S, 0.0);
        exp_cs_.assign(S, 0.0);
        sat_prob_.assign(S, 0.0);

        std::vector<std::pair<SlotRecord, double>> mix;
        std::map<std::size_t, double> row;
        QueueState q(sys_.n);
        for (std::size_t st = 0; st < S; ++st) {
            decode(st, q);
            control_mixture(q, arrivals, mix);
            row.clear();
            double check = 0.0;
            for (auto& [rec, pr] : mix) {
                bool clipped = false;
                for (int i = 0; i < sys_.n; ++i)
                    if (rec.q_next[i] > cap_) { rec.q_next[i] = cap_; clipped = true; }
                row[index(rec.q_next)] += pr;
                if (clipped) sat_prob_[st] += pr;
                exp_usum_[st] += pr * static_cast<double>(isum(rec.u));
                exp_cu_[st] += pr * dot(sys_.c, rec.u);
                exp_cs_[st] += pr * dot(sys_.c, rec.s);
                check += pr;
            }
            if (std::abs(check - 1.0) > 1e-12)
                throw config_error("oracle: kernel row at " + vec_str(q) + " sums to " + std::to_string(check));
            row_start_[st + 1] = row_start_[st] + row.size();
            for (const auto& [to, pr] : row) {
                col_.push_back(static_cast<std::uint32_t>(to));
                val_.push_back(pr);
            }
        }
    }

    void solve() {
        const std::size_t S = exp_usum_.size();
        pi_.assign(S, 0.0);
        pi_[0] = 1.0;  // start at the empty system
        DVec next(S, 0.0);
        residual_ = 1.0;
        for (iters_ = 0; iters_ < opts_.max_iterations; ++iters_) {
            std::fill(next.begin(), next.end(), 0.0);
            for (std::size_t st = 0; st < S; ++st) {
                const double p = pi_[st];
                if (p == 0.0) continue;
                for (std::size_t k = row_start_[st]; k < row_start_[st + 1]; ++k) next[col_[k]] += p * val_[k];
            }
            residual_ = 0.0;
            double total = 0.0;
            for (std::size_t st = 0; st < S; ++st) {
                residual_ = std::max(residual_, std::abs(next[st] - pi_[st]));
                total += next[st];
            }
            for (std::size_t st = 0; st < S; ++st) pi_[st] = next[st] / total;
            if (residual_ < opts_.solve_tol) return;
        }
        throw config_error("oracle: power iteration did not reach residual " +
                           std::to_string(opts_.solve_tol) + " in " + std::to_string(opts_.max_iterations) +
                           " iterations (residual " + std::to_string(residual_) + ")");
    }

    void diagnose() {
        const long long band = cap_ - std::max(sys_.a_max, sys_.s_max);
        QueueState q(sys_.n);
        boundary_mass_ = saturation_mass_ = 0.0;
        for (std::size_t st = 0; st < pi_.size(); ++st) {
            decode(st, q);
            for (int i = 0; i < sys_.n; ++i)
                if (q[i] >= band) { boundary_mass_ += pi_[st]; break; }
            saturation_mass_ += pi_[st] * sat_prob_[st];
        }
    }

    const SystemModel& sys_;
    double eps_;
    long long cap_;
    OracleOptions opts_;

    std::vector<std::size_t> row_start_;
    std::vector<std::uint32_t> col_;
    DVec val_;
    DVec pi_;
    DVec exp_usum_, exp_cu_, exp_cs_, sat_prob_;
    double residual_ = 0.0;
    long long iters_ = 0;
    double boundary_mass_ = 0.0;
    double saturation_mass_ = 0.0;
};

inline TruncatedChain build_and_solve(const SystemModel& sys, double eps, const OracleOptions& opts) {
    return TruncatedChain(sys, eps, opts);
}

}  // namespace htq
