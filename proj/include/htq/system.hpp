#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "htq/analysis.hpp"
#include "htq/capacity.hpp"
#include "htq/dist.hpp"
#include "htq/errors.hpp"
#include "htq/policies.hpp"
#include "htq/vecutil.hpp"

namespace htq {

enum class SystemKind { single, lb, gs, iq_switch };

inline SystemKind kind_from_name(const std::string& s) {
    if (s == "single") return SystemKind::single;
    if (s == "lb") return SystemKind::lb;
    if (s == "gs") return SystemKind::gs;
    if (s == "switch") return SystemKind::iq_switch;
    throw config_error("unknown system kind '" + s + "'");
}

inline const char* kind_name(SystemKind k) {
    switch (k) {
        case SystemKind::single: return "single";
        case SystemKind::lb: return "lb";
        case SystemKind::gs: return "gs";
        default: return "switch";
    }
}

// Complete description of one parametrized queueing system. finalize() derives
// the collapse direction, the facet data, and the heavy-traffic prediction;
// after that the model is immutable and shared read-only by workers.
class SystemModel {
  public:
    SystemKind kind = SystemKind::single;
    int n = 1;                    // number of queues (N*N for the switch)
    int N = 0;                    // switch port count
    PolicyKind policy = PolicyKind::none;
    FamilySpec arrival_family;    // mean set per epsilon by the parametrization
    std::optional<FiniteJointDist> arrival_override;  // explicit user pmf, used as-is
    FiniteJointDist service;      // single/lb: fixed joint service law
    ScheduleSet schedules;        // gs
    ChannelDist channel;          // gs
    DVec r;                       // gs: point on the chosen facet

    // derived
    DVec c;                       // unit collapse direction
    double b = 0.0;               // facet offset (gs/switch)
    double collapse_scale = 1.0;  // y(q) = collapse_scale * <c, q>
    std::vector<Facet> facets;    // gs: full facet list
    int facet_index = -1;
    BDistribution bdist;
    HTPrediction prediction;
    double mu_sigma = 0.0;        // single/lb: total service rate
    long long a_max = 0;
    long long s_max = 0;
    std::vector<std::string> warnings;

    void finalize() {
        switch (kind) {
            case SystemKind::single: finalize_single(); break;
            case SystemKind::lb: finalize_lb(); break;
            case SystemKind::gs: finalize_gs(); break;
            case SystemKind::iq_switch: finalize_switch(); break;
        }
        a_max = arrival_dist(0.0).bound();
    }

    // Largest admissible epsilon (exclusive).
    double eps_max() const {
        switch (kind) {
            case SystemKind::single:
            case SystemKind::lb:
                return mu_sigma;
            case SystemKind::gs: {
                double lim = 1.0;
                for (std::size_t i = 0; i < r.size(); ++i)
                    if (c[i] > 1e-12) lim = std::min(lim, r[i] / c[i]);
                return lim;
            }
            default:
                return 1.0;
        }
    }

    // Distance from the arrival mean to the binding facet along c. This is the
    // scale under which the collapse scalar has the predicted exponential
    // limit. It equals epsilon except for the switch, whose saturation
    // parametrization lambda = (1 - eps) r walks toward the facet at speed b.
    double eps_eff(double eps) const {
        return kind == SystemKind::iq_switch ? eps * b : eps;
    }

    DVec arrival_target(double eps) const {
        switch (kind) {
            case SystemKind::single:
                return {mu_sigma - eps};
            case SystemKind::lb:
                return {mu_sigma - eps};
            case SystemKind::gs:
                return ht_arrival_mean(r, facets[facet_index], eps);
            default: {
                DVec lam(n, 0.0);
                for (int j = 0; j < N; ++j) lam[j] = (1.0 - eps) / N;
                return lam;
            }
        }
    }

    FiniteJointDist arrival_dist(double eps) const {
        if (arrival_override) return *arrival_override;
        if (eps < 0.0 || (eps > 0.0 && eps >= eps_max()))
            throw config_error("epsilon " + std::to_string(eps) + " outside the admissible interval (0, " +
                               std::to_string(eps_max()) + ")");
        return build_arrival_family(arrival_family, arrival_target(eps));
    }

    bool validate_policy() const {
        switch (kind) {
            case SystemKind::single: return policy == PolicyKind::none;
            case SystemKind::lb:
                return policy == PolicyKind::jsq || policy == PolicyKind::po2 ||
                       policy == PolicyKind::random_uniform;
            case SystemKind::gs: return policy == PolicyKind::maxweight;
            default: return policy == PolicyKind::switch_maxweight;
        }
    }

  private:
    void finalize_single() {
        n = 1;
        if (service.dim() != 1) throw config_error("single: service pmf must be scalar");
        mu_sigma = service.moments().mean[0];
        if (mu_sigma <= 0.0) throw config_error("single: service rate must be positive");
        c = {1.0};
        collapse_scale = 1.0;
        s_max = service.bound();
        if (!validate_policy()) throw config_error("single: no routing/scheduling policy applies");
        MomentSummary am = limit_arrival_moments();
        prediction = predict_single(am.cov[0][0], service.moments().cov[0][0]);
    }

    void finalize_lb() {
        if (n < 2) throw config_error("lb: needs n >= 2 queues");
        if (service.dim() != n) throw config_error("lb: service pmf dimension != n");
        if (!validate_policy()) throw config_error("lb: policy must be jsq, po2 or random-uniform");
        MomentSummary sm = service.moments();
        mu_sigma = 0.0;
        for (double m : sm.mean) mu_sigma += m;
        c.assign(n, 1.0 / std::sqrt(static_cast<double>(n)));
        collapse_scale = 1.0 / std::sqrt(static_cast<double>(n));  // y = mean queue length
        s_max = service.bound();
        if (policy == PolicyKind::po2 && !identical_server_marginals())
            warnings.push_back("po2 with non-identical servers: throughput optimality is not guaranteed");
        MomentSummary am = limit_arrival_moments();
        prediction = predict_lb(n, am.cov[0][0], sm.cov);
    }

    void finalize_gs() {
        if (!validate_policy()) throw config_error("gs: policy must be maxweight");
        if (static_cast<int>(r.size()) != n) throw config_error("gs: r dimension != n");
        facets = capacity_region(schedules, channel);
        CrpReport crp = check_crp(r, facets);
        if (!crp.holds)
            throw config_error("gs: CRP fails at r, " + std::to_string(crp.tight_facets.size()) +
                               " facets are tight");
        facet_index = crp.tight_facets[0];
        c = facets[facet_index].c;
        b = facets[facet_index].b;
        collapse_scale = 1.0;
        bdist = b_distribution(c, schedules, channel);
        s_max = schedules.s_max();
        MomentSummary am = limit_arrival_moments();
        prediction = predict_gs(c, am.cov, bdist.variance);
    }

    void finalize_switch() {
        if (N < 2) throw config_error("switch: needs N >= 2 ports");
        n = N * N;
        if (!validate_policy()) throw config_error("switch: policy must be switch-maxweight");
        c.assign(n, 0.0);
        for (int j = 0; j < N; ++j) c[j] = 1.0 / std::sqrt(static_cast<double>(N));
        b = 1.0 / std::sqrt(static_cast<double>(N));  // row-sum facet of the matching polytope
        collapse_scale = 1.0;
        s_max = 1;
        MomentSummary am = limit_arrival_moments();
        prediction = predict_switch(N, am.cov);
    }

    MomentSummary limit_arrival_moments() const {
        if (arrival_override) return arrival_override->moments();
        return build_arrival_family(arrival_family, arrival_target(0.0)).moments();
    }

    bool identical_server_marginals() const {
        MomentSummary sm = service.moments();
        for (int i = 1; i < n; ++i)
            if (std::abs(sm.mean[i] - sm.mean[0]) > 1e-12 || std::abs(sm.cov[i][i] - sm.cov[0][0]) > 1e-12)
                return false;
        return true;
    }
};

}  // namespace htq
