#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "htq/errors.hpp"
#include "htq/stats.hpp"
#include "htq/vecutil.hpp"

namespace htq {

// Closed-form heavy-traffic limit: the scaled collapse scalar converges to an
// exponential law with this mean, in the given direction.
struct HTPrediction {
    double limit_mean = 0.0;
    DVec direction;
    std::string source;
};

inline HTPrediction predict_single(double sigma_a_sq, double sigma_s_sq) {
    if (sigma_a_sq < 0 || sigma_s_sq < 0) throw config_error("predict: negative variance");
    return {(sigma_a_sq + sigma_s_sq) / 2.0, {1.0}, "single-server"};
}

// Load balancing: per-coordinate limit mean, direction the all-ones vector.
inline HTPrediction predict_lb(int n, double sigma_a_sq, const std::vector<DVec>& cov_s) {
    double cs = 0.0;
    for (const auto& row : cov_s)
        for (double v : row) cs += v;
    HTPrediction p;
    p.limit_mean = (sigma_a_sq + cs) / (2.0 * n);
    p.direction.assign(n, 1.0);
    p.source = "load-balancing";
    return p;
}

// Generalized switch under CRP: direction is the facet normal.
inline HTPrediction predict_gs(const DVec& c, const std::vector<DVec>& cov_a, double sigma_b_sq) {
    if (std::abs(norm2(c) - 1.0) > 1e-9) throw config_error("predict_gs: direction not unit length");
    if (sigma_b_sq < 0) throw config_error("predict_gs: negative sigma_B^2");
    double s = 0.0;
    const std::size_t n = c.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) s += c[i] * c[j] * cov_a[i][j];
    return {(s + sigma_b_sq) / 2.0, c, "generalized-switch"};
}

// Input-queued switch with input port 1 saturated: direction is the normalized
// row-1 indicator, components 1/sqrt(N) on row 1 and zero elsewhere.
inline HTPrediction predict_switch(int N, const std::vector<DVec>& cov_a) {
    const int n = N * N;
    if (static_cast<int>(cov_a.size()) != n) throw config_error("predict_switch: covariance is not N^2 x N^2");
    DVec chi(n, 0.0);
    for (int j = 0; j < N; ++j) chi[j] = 1.0 / std::sqrt(static_cast<double>(N));
    double s = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s += chi[i] * chi[j] * cov_a[i][j];
    return {s / 2.0, chi, "input-queued-switch"};
}

// MGF of an exponential with the given mean, 1 / (1 - theta * mean).
inline double exponential_reference(double mean, double theta) {
    if (theta * mean >= 1.0)
        throw config_error("exponential_reference: theta*mean = " + std::to_string(theta * mean) + " >= 1 (pole)");
    return 1.0 / (1.0 - theta * mean);
}

inline double exponential_cdf(double mean, double x) {
    if (mean <= 0.0) return x >= 0.0 ? 1.0 : 0.0;
    return x <= 0.0 ? 0.0 : 1.0 - std::exp(-x / mean);
}

// ---- sweep-level reports ---------------------------------------------------

// Minimal per-run inputs the reports need, one per swept epsilon.
struct RunSummary {
    double epsilon = 0.0;
    double eps_eff = 0.0;           // facet-distance scale used for the collapse scalar
    Estimate scaled_mean;           // eps_eff * E[collapse scalar]
    Estimate perp_sq;               // E[|q_perp|^2], unscaled
    DVec mgf_theta;                 // grid
    std::vector<Estimate> mgf;      // per theta
    DVec thinned;                   // thinned samples of the scaled scalar
};

struct SscRow {
    double epsilon;
    double eps2_perp_sq;  // eps^2 E[|q_perp|^2]
};

struct SscReport {
    std::vector<SscRow> rows;
    bool strictly_decreasing = false;
    double final_over_initial = 0.0;
    bool pass = false;
};

// Scaling table for state-space collapse: eps^2 E[|q_perp|^2] must vanish.
inline SscReport ssc_report(const std::vector<RunSummary>& runs) {
    if (runs.size() < 3) throw config_error("ssc_report: need at least 3 epsilon points");
    SscReport rep;
    for (const auto& r : runs) rep.rows.push_back({r.epsilon, r.epsilon * r.epsilon * r.perp_sq.mean});
    rep.strictly_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].eps2_perp_sq >= rep.rows[i - 1].eps2_perp_sq) rep.strictly_decreasing = false;
    rep.final_over_initial =
        rep.rows.front().eps2_perp_sq > 0 ? rep.rows.back().eps2_perp_sq / rep.rows.front().eps2_perp_sq : 0.0;
    rep.pass = rep.strictly_decreasing && rep.final_over_initial < 0.5;
    return rep;
}

struct FitRow {
    double epsilon;
    double scaled_mean;
    double rel_gap;       // |scaled_mean - limit| / limit
    double ks;            // lattice-corrected KS vs the limiting exponential
    DVec mgf_gap;         // per theta, |mgf - reference|
};

struct ConvergenceReport {
    std::vector<FitRow> rows;
    bool degenerate = false;
    bool gap_strictly_decreasing = false;
    bool ks_strictly_decreasing = false;
    double final_gap = 0.0;
    double final_ks = 0.0;
};

// Per-epsilon fit against the predicted exponential limit. Rows are ordered by
// decreasing epsilon, so "decreasing" means improving toward heavy traffic.
inline ConvergenceReport convergence_report(std::vector<RunSummary> runs, const HTPrediction& pred) {
    if (runs.size() < 3) throw config_error("convergence_report: need at least 3 epsilon points");
    std::sort(runs.begin(), runs.end(), [](const RunSummary& a, const RunSummary& b) { return a.epsilon > b.epsilon; });
    ConvergenceReport rep;
    if (pred.limit_mean <= 0.0) {
        rep.degenerate = true;
        for (const auto& r : runs) rep.rows.push_back({r.epsilon, r.scaled_mean.mean, 0.0, 0.0, {}});
        return rep;
    }
    for (const auto& r : runs) {
        FitRow row;
        row.epsilon = r.epsilon;
        row.scaled_mean = r.scaled_mean.mean;
        row.rel_gap = std::abs(r.scaled_mean.mean - pred.limit_mean) / pred.limit_mean;
        row.ks = r.thinned.empty()
                     ? 0.0
                     : ks_mid(r.thinned, [&](double x) { return exponential_cdf(pred.limit_mean, x); });
        for (std::size_t k = 0; k < r.mgf_theta.size(); ++k) {
            double ref;
            try {
                ref = exponential_reference(pred.limit_mean, r.mgf_theta[k]);
            } catch (const config_error&) {
                row.mgf_gap.push_back(std::nan(""));
                continue;
            }
            row.mgf_gap.push_back(std::abs(r.mgf[k].mean - ref));
        }
        rep.rows.push_back(std::move(row));
    }
    rep.gap_strictly_decreasing = rep.ks_strictly_decreasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        if (rep.rows[i].rel_gap >= rep.rows[i - 1].rel_gap) rep.gap_strictly_decreasing = false;
        if (rep.rows[i].ks >= rep.rows[i - 1].ks) rep.ks_strictly_decreasing = false;
    }
    rep.final_gap = rep.rows.back().rel_gap;
    rep.final_ks = rep.rows.back().ks;
    return rep;
}

}  // namespace htq
