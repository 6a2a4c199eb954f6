#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "htq/errors.hpp"
#include "htq/vecutil.hpp"

namespace htq {

// Two-sided 95% Student-t quantile. Exact table through 30 degrees of freedom,
// Cornish-Fisher tail correction beyond.
inline double t_quantile_975(int df) {
    static const double table[] = {0,     12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365,
                                   2.306, 2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131,
                                   2.120, 2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069,
                                   2.064, 2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) throw config_error("t quantile: df < 1");
    if (df <= 30) return table[df];
    const double z = 1.959963984540054;
    return z + (z * z * z + z) / (4.0 * df) + (5 * std::pow(z, 5) + 16 * z * z * z + 3 * z) / (96.0 * df * df);
}

// Point estimate with a batch-means confidence interval.
struct Estimate {
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double batch_var = 0.0;  // sample variance of the batch means
    int batches = 0;

    bool covers(double x) const { return ci_lo <= x && x <= ci_hi; }
    double half_width() const { return (ci_hi - ci_lo) / 2.0; }
};

inline Estimate estimate_from_batches(const DVec& batch_means) {
    Estimate e;
    e.batches = static_cast<int>(batch_means.size());
    if (e.batches < 2) throw config_error("batch means: need at least 2 batches");
    for (double b : batch_means) e.mean += b;
    e.mean /= e.batches;
    for (double b : batch_means) e.batch_var += (b - e.mean) * (b - e.mean);
    e.batch_var /= (e.batches - 1);
    const double half = t_quantile_975(e.batches - 1) * std::sqrt(e.batch_var / e.batches);
    e.ci_lo = e.mean - half;
    e.ci_hi = e.mean + half;
    return e;
}

// Pool estimates from independent replications: batch means are combined at
// the level of their first two moments (equal batch counts assumed).
inline Estimate pool_estimates(const std::vector<Estimate>& parts) {
    if (parts.empty()) throw config_error("pool: no estimates");
    if (parts.size() == 1) return parts[0];
    Estimate e;
    int total_batches = 0;
    for (const auto& p : parts) total_batches += p.batches;
    for (const auto& p : parts) e.mean += p.mean * p.batches;
    e.mean /= total_batches;
    double ss = 0.0;
    for (const auto& p : parts) ss += (p.batches - 1) * p.batch_var + p.batches * (p.mean - e.mean) * (p.mean - e.mean);
    e.batch_var = ss / (total_batches - 1);
    e.batches = total_batches;
    const double half = t_quantile_975(e.batches - 1) * std::sqrt(e.batch_var / e.batches);
    e.ci_lo = e.mean - half;
    e.ci_hi = e.mean + half;
    return e;
}

struct Histogram {
    double lo = 0.0;
    double hi = 1.0;
    std::vector<long long> counts;  // last bucket holds overflow
    long long total = 0;

    Histogram() = default;
    Histogram(double lo_, double hi_, int bins) : lo(lo_), hi(hi_), counts(bins + 1, 0) {}

    void add(double x) {
        ++total;
        if (x >= hi) { ++counts.back(); return; }
        const int b = static_cast<int>((x - lo) / (hi - lo) * (counts.size() - 1));
        ++counts[std::clamp<int>(b, 0, static_cast<int>(counts.size()) - 2)];
    }
};

// Kolmogorov-Smirnov distance of a sample against a continuous CDF, using the
// mid-distribution convention at atoms: queue lengths live on a lattice, so
// the empirical CDF is compared at (F(x-) + F(x))/2. Plain sup-KS carries an
// irreducible half-atom offset on lattice data that says nothing about fit.
inline double ks_mid(DVec samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw config_error("ks: no samples");
    std::sort(samples.begin(), samples.end());
    const double m = static_cast<double>(samples.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < samples.size()) {
        std::size_t j = i;
        while (j < samples.size() && samples[j] == samples[i]) ++j;
        const double f_mid = (static_cast<double>(i) + static_cast<double>(j)) / (2.0 * m);
        d = std::max(d, std::abs(f_mid - cdf(samples[i])));
        i = j;
    }
    return d;
}

// Same statistic for an exact discrete law given as (value, probability).
inline double ks_mid_weighted(std::vector<std::pair<double, double>> atoms,
                              const std::function<double(double)>& cdf) {
    std::sort(atoms.begin(), atoms.end());
    double d = 0.0, acc = 0.0;
    std::size_t i = 0;
    while (i < atoms.size()) {
        std::size_t j = i;
        double w = 0.0;
        while (j < atoms.size() && atoms[j].first == atoms[i].first) w += atoms[j++].second;
        const double f_mid = acc + w / 2.0;
        d = std::max(d, std::abs(f_mid - cdf(atoms[i].first)));
        acc += w;
        i = j;
    }
    return d;
}

}  // namespace htq
