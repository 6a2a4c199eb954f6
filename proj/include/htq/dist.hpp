#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "htq/errors.hpp"
#include "htq/rng.hpp"
#include "htq/vecutil.hpp"

namespace htq {

struct MomentSummary {
    DVec mean;
    std::vector<DVec> cov;

    double cov_sum() const {
        double s = 0.0;
        for (const auto& row : cov)
            for (double v : row) s += v;
        return s;
    }
};

// Symmetric PSD check via pivoted outer-product elimination with tolerance.
inline bool is_psd(std::vector<DVec> m, double tol) {
    const std::size_t n = m.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(m[i][j] - m[j][i]) > tol) return false;
    for (std::size_t k = 0; k < n; ++k) {
        if (m[k][k] < -tol) return false;
        if (m[k][k] <= tol) continue;
        for (std::size_t i = k + 1; i < n; ++i)
            for (std::size_t j = k + 1; j < n; ++j)
                m[i][j] -= m[i][k] * m[k][j] / m[k][k];
    }
    return true;
}

// Bounded finite-support joint law of a nonnegative integer vector.
// Immutable after construction; shared freely across simulation workers.
class FiniteJointDist {
  public:
    FiniteJointDist() = default;
    FiniteJointDist(std::vector<IVec> support, DVec probs) : support_(std::move(support)), probs_(std::move(probs)) {
        validate();
    }

    int dim() const { return support_.empty() ? 0 : static_cast<int>(support_[0].size()); }
    const std::vector<IVec>& support() const { return support_; }
    const DVec& probs() const { return probs_; }
    long long bound() const { return bound_; }

    MomentSummary moments() const {
        const int n = dim();
        MomentSummary m;
        m.mean.assign(n, 0.0);
        m.cov.assign(n, DVec(n, 0.0));
        for (std::size_t k = 0; k < support_.size(); ++k)
            for (int i = 0; i < n; ++i) m.mean[i] += probs_[k] * static_cast<double>(support_[k][i]);
        for (std::size_t k = 0; k < support_.size(); ++k)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    m.cov[i][j] += probs_[k] * (static_cast<double>(support_[k][i]) - m.mean[i]) *
                                   (static_cast<double>(support_[k][j]) - m.mean[j]);
        if (!is_psd(m.cov, 1e-9)) throw config_error("moments: covariance not PSD within 1e-9");
        return m;
    }

    const IVec& sample(Rng& rng) const {
        const double u = rng.u01();
        std::size_t k = 0;
        while (k + 1 < cum_.size() && u >= cum_[k]) ++k;
        return support_[k];
    }

  private:
    void validate() {
        if (support_.empty() || support_.size() != probs_.size())
            throw config_error("pmf: support/probs size mismatch or empty");
        const std::size_t n = support_[0].size();
        double total = 0.0;
        std::set<IVec> seen;
        for (std::size_t k = 0; k < support_.size(); ++k) {
            if (support_[k].size() != n) throw config_error("pmf: ragged support vectors");
            for (long long v : support_[k]) {
                if (v < 0) throw config_error("pmf: negative support component");
                bound_ = std::max(bound_, v);
            }
            if (probs_[k] < 0.0) throw config_error("pmf: negative probability");
            if (!seen.insert(support_[k]).second)
                throw config_error("pmf: duplicate support point " + vec_str(support_[k]));
            total += probs_[k];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw config_error("pmf: probabilities sum to " + std::to_string(total) + ", expected 1 within 1e-12");
        cum_.resize(probs_.size());
        double acc = 0.0;
        for (std::size_t k = 0; k < probs_.size(); ++k) {
            acc += probs_[k];
            cum_[k] = acc;
        }
        cum_.back() = 1.0;
    }

    std::vector<IVec> support_;
    DVec probs_;
    DVec cum_;
    long long bound_ = 0;
};

// Finite channel-state law.
struct ChannelDist {
    std::vector<std::string> labels;
    DVec probs;

    void validate() const {
        if (labels.empty() || labels.size() != probs.size())
            throw config_error("channel: empty or mismatched labels/probs");
        double total = 0.0;
        for (double p : probs) {
            if (p < 0.0) throw config_error("channel: negative probability");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-12) throw config_error("channel: probabilities must sum to 1");
    }

    int sample(Rng& rng) const {
        const double u = rng.u01();
        double acc = 0.0;
        for (std::size_t t = 0; t + 1 < probs.size(); ++t) {
            acc += probs[t];
            if (u < acc) return static_cast<int>(t);
        }
        return static_cast<int>(probs.size()) - 1;
    }
};

namespace detail {

inline void cartesian_product(const std::vector<FiniteJointDist>& parts, std::vector<IVec>& support, DVec& probs) {
    support.assign(1, IVec{});
    probs.assign(1, 1.0);
    for (const auto& d : parts) {
        std::vector<IVec> ns;
        DVec np;
        ns.reserve(support.size() * d.support().size());
        for (std::size_t a = 0; a < support.size(); ++a) {
            for (std::size_t b = 0; b < d.support().size(); ++b) {
                IVec v = support[a];
                v.insert(v.end(), d.support()[b].begin(), d.support()[b].end());
                ns.push_back(std::move(v));
                np.push_back(probs[a] * d.probs()[b]);
            }
        }
        support = std::move(ns);
        probs = std::move(np);
    }
}

// Merge duplicate support points (needed after convolutions).
inline FiniteJointDist collapse(const std::vector<IVec>& support, const DVec& probs) {
    std::map<IVec, double> acc;
    for (std::size_t k = 0; k < support.size(); ++k) acc[support[k]] += probs[k];
    std::vector<IVec> s;
    DVec p;
    for (auto& [v, pr] : acc) {
        if (pr <= 0.0) continue;
        s.push_back(v);
        p.push_back(pr);
    }
    double total = 0.0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
    return FiniteJointDist(std::move(s), std::move(p));
}

}  // namespace detail

// ---- family constructors -------------------------------------------------

inline FiniteJointDist make_point_mass(const IVec& v) { return FiniteJointDist({v}, {1.0}); }

inline FiniteJointDist make_bernoulli_scalar(double p) {
    if (p < 0.0 || p > 1.0) throw config_error("bernoulli: mean " + std::to_string(p) + " outside [0,1]");
    if (p == 0.0) return make_point_mass({0});
    if (p == 1.0) return make_point_mass({1});
    return FiniteJointDist({{0}, {1}}, {1.0 - p, p});
}

inline FiniteJointDist make_binomial_scalar(int trials, double mean) {
    if (trials < 1) throw config_error("binomial: trials must be >= 1");
    const double p = mean / trials;
    if (p < 0.0 || p > 1.0)
        throw config_error("binomial: mean " + std::to_string(mean) + " infeasible with " +
                           std::to_string(trials) + " trials");
    std::vector<IVec> support;
    DVec probs;
    double coeff = 1.0;
    for (int k = 0; k <= trials; ++k) {
        support.push_back({k});
        probs.push_back(coeff * std::pow(p, k) * std::pow(1.0 - p, trials - k));
        coeff = coeff * (trials - k) / (k + 1);
    }
    return detail::collapse(support, probs);
}

// Independent product of per-coordinate laws.
inline FiniteJointDist make_independent(const std::vector<FiniteJointDist>& parts) {
    std::vector<IVec> support;
    DVec probs;
    detail::cartesian_product(parts, support, probs);
    return detail::collapse(support, probs);
}

inline FiniteJointDist make_bernoulli_vec(const DVec& means) {
    std::vector<FiniteJointDist> parts;
    for (double m : means) parts.push_back(make_bernoulli_scalar(m));
    return make_independent(parts);
}

// Common-shock vector: X_i = Y_i + Z with Y_i ~ Bernoulli(mean - shock_p)
// independent and Z ~ Bernoulli(shock_p) shared; off-diagonal covariance is
// Var[Z] = shock_p (1 - shock_p) exactly.
inline FiniteJointDist make_common_shock(int n, double mean_per_queue, double shock_p) {
    if (n < 2) throw config_error("common-shock: needs n >= 2");
    const double py = mean_per_queue - shock_p;
    if (py < 0.0 || py > 1.0 || shock_p < 0.0 || shock_p > 1.0)
        throw config_error("common-shock: infeasible split, Y-mean " + std::to_string(py));
    std::vector<FiniteJointDist> parts(n, make_bernoulli_scalar(py));
    FiniteJointDist ys = make_independent(parts);
    std::vector<IVec> support;
    DVec probs;
    for (std::size_t k = 0; k < ys.support().size(); ++k) {
        for (int z = 0; z <= 1; ++z) {
            const double pz = z ? shock_p : 1.0 - shock_p;
            if (pz == 0.0) continue;
            IVec v = ys.support()[k];
            for (auto& c : v) c += z;
            support.push_back(std::move(v));
            probs.push_back(ys.probs()[k] * pz);
        }
    }
    return detail::collapse(support, probs);
}

// Scalar law on {0,1,2} pinned to a given mean and variance.
inline FiniteJointDist make_trinomial(double mean, double var) {
    const double p2 = (var + mean * mean - mean) / 2.0;
    const double p1 = mean - 2.0 * p2;
    const double p0 = 1.0 - p1 - p2;
    if (p0 < -1e-12 || p1 < -1e-12 || p2 < -1e-12)
        throw config_error("trinomial: no pmf on {0,1,2} with mean " + std::to_string(mean) + " var " +
                           std::to_string(var));
    std::vector<IVec> support;
    DVec probs;
    if (p0 > 0) { support.push_back({0}); probs.push_back(p0); }
    if (p1 > 0) { support.push_back({1}); probs.push_back(p1); }
    if (p2 > 0) { support.push_back({2}); probs.push_back(p2); }
    return detail::collapse(support, probs);
}

// Two-queue joint law with support {(1,1),(1,0),(0,1)} (plus (0,0) when
// needed): the minimum-variance law for <1,1>-weighted arrivals at equal
// per-queue means, used for nearly-deterministic correlated inputs.
inline FiniteJointDist make_minvar_pair(double mean_per_queue) {
    const double m = mean_per_queue;
    if (m < 0.0 || m > 1.0) throw config_error("minvar-pair: per-queue mean outside [0,1]");
    std::vector<IVec> support;
    DVec probs;
    if (m >= 0.5) {
        const double t = 2.0 * m - 1.0;
        const double p = 1.0 - m;
        if (t > 0) { support.push_back({1, 1}); probs.push_back(t); }
        if (p > 0) { support.push_back({1, 0}); probs.push_back(p); support.push_back({0, 1}); probs.push_back(p); }
    } else {
        const double z = 1.0 - 2.0 * m;
        if (z > 0) { support.push_back({0, 0}); probs.push_back(z); }
        if (m > 0) { support.push_back({1, 0}); probs.push_back(m); support.push_back({0, 1}); probs.push_back(m); }
    }
    return detail::collapse(support, probs);
}

// Bernoulli thinning of a base law to a smaller mean vector (componentwise
// common thinning factor). Variance is continuous in the factor, so thinned
// families keep their limiting moments as the factor tends to 1.
inline FiniteJointDist thin(const FiniteJointDist& base, double factor) {
    if (factor < 0.0 || factor > 1.0) throw config_error("thin: factor outside [0,1]");
    if (factor == 1.0) return base;
    std::vector<IVec> support;
    DVec probs;
    const IVec zero(base.dim(), 0);
    for (std::size_t k = 0; k < base.support().size(); ++k) {
        support.push_back(base.support()[k]);
        probs.push_back(base.probs()[k] * factor);
        support.push_back(zero);
        probs.push_back(base.probs()[k] * (1.0 - factor));
    }
    return detail::collapse(support, probs);
}

// ---- named families (config surface) ---------------------------------------

// Family constructors selected by name with a parameter map; target means are
// supplied by the system parametrization at each epsilon.
struct FamilySpec {
    std::string kind;                       // bernoulli|binomial|trinomial|common-shock|minvar-pair|pmf
    std::map<std::string, double> params;   // family-specific scalars
    std::vector<IVec> support;              // kind == pmf
    DVec probs;                             // kind == pmf
};

inline FiniteJointDist build_family(const FamilySpec& spec, const DVec& target_mean) {
    const int n = static_cast<int>(target_mean.size());
    for (double m : target_mean)
        if (m < 0.0) throw config_error("family: negative target mean " + vec_str(target_mean));
    if (spec.kind == "bernoulli") {
        return make_bernoulli_vec(target_mean);
    }
    if (spec.kind == "binomial") {
        auto it = spec.params.find("trials");
        const int trials = it == spec.params.end() ? 4 : static_cast<int>(it->second);
        std::vector<FiniteJointDist> parts;
        for (double m : target_mean) parts.push_back(make_binomial_scalar(trials, m));
        return make_independent(parts);
    }
    if (spec.kind == "trinomial") {
        if (n != 1) throw config_error("trinomial: scalar family used with n > 1");
        auto itm = spec.params.find("mean");
        auto itv = spec.params.find("var");
        if (itm == spec.params.end() || itv == spec.params.end())
            throw config_error("trinomial: needs params mean and var");
        FiniteJointDist base = make_trinomial(itm->second, itv->second);
        if (itm->second <= 0.0) throw config_error("trinomial: base mean must be positive");
        const double f = target_mean[0] / itm->second;
        if (f > 1.0 + 1e-9)
            throw config_error("trinomial: target mean " + std::to_string(target_mean[0]) +
                               " exceeds the base mean");
        return thin(base, std::min(f, 1.0));
    }
    if (spec.kind == "common-shock") {
        auto it = spec.params.find("shock_p");
        if (it == spec.params.end()) throw config_error("common-shock: needs param shock_p");
        for (double m : target_mean)
            if (std::abs(m - target_mean[0]) > 1e-12)
                throw config_error("common-shock: target means must be equal across queues");
        return make_common_shock(n, target_mean[0], it->second);
    }
    if (spec.kind == "minvar-pair") {
        if (n != 2) throw config_error("minvar-pair: only defined for n = 2");
        if (std::abs(target_mean[0] - target_mean[1]) > 1e-12)
            throw config_error("minvar-pair: target means must be equal");
        return make_minvar_pair(target_mean[0]);
    }
    if (spec.kind == "pmf") {
        FiniteJointDist base(spec.support, spec.probs);
        MomentSummary m = base.moments();
        double factor = 1.0;
        for (int i = 0; i < n; ++i) {
            if (m.mean[i] <= 0.0 && target_mean[i] > 0.0)
                throw config_error("pmf: cannot thin zero-mean coordinate up");
            if (m.mean[i] > 0.0) {
                const double f = target_mean[i] / m.mean[i];
                if (i == 0 || std::abs(factor - 1.0) < 1e-15) factor = f;
                if (std::abs(f - factor) > 1e-9)
                    throw config_error("pmf: target mean not a common thinning of the base pmf");
            }
        }
        if (factor > 1.0 + 1e-9)
            throw config_error("pmf: target mean exceeds base pmf mean, cannot thin up");
        return thin(base, std::min(factor, 1.0));
    }
    throw config_error("unknown family kind '" + spec.kind + "'");
}

// Arrival law of the epsilon-parametrized system. The returned pmf mean must
// equal the target exactly (checked to 1e-12 by callers' tests).
inline FiniteJointDist build_arrival_family(const FamilySpec& spec, const DVec& target_mean) {
    return build_family(spec, target_mean);
}

}  // namespace htq
