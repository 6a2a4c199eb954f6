#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "htq/analysis.hpp"
#include "htq/config.hpp"
#include "htq/csv.hpp"
#include "htq/oracle.hpp"
#include "htq/simulate.hpp"

namespace htq {

struct PointResult {
    double epsilon = 0.0;
    int replication = 0;
    SimEstimates est;
    double ks = 0.0;
    std::string error;  // nonempty when this point failed
};

inline double ks_against_limit(const SimEstimates& est, const HTPrediction& pred) {
    if (pred.limit_mean <= 0.0 || est.thinned.empty()) return 0.0;
    DVec s = est.thinned;
    return ks_mid(s, [&](double x) { return exponential_cdf(pred.limit_mean, x); });
}

inline CsvRow to_csv_row(const SystemModel& sys, const SimConfig& sim, const PointResult& p) {
    CsvRow r;
    r.system = kind_name(sys.kind);
    r.policy = policy_name(sys.policy);
    r.epsilon = p.epsilon;
    r.source = "sim";
    r.replication = p.replication;
    r.slots = p.est.slots;
    r.scaled_mean = p.est.scaled_parallel_mean.mean;
    r.scaled_mean_ci_lo = p.est.scaled_parallel_mean.ci_lo;
    r.scaled_mean_ci_hi = p.est.scaled_parallel_mean.ci_hi;
    r.predicted_mean = sys.prediction.limit_mean;
    r.perp_sq_scaled = p.epsilon * p.epsilon * p.est.perp_sq.mean;
    r.unused_mean = (sys.kind == SystemKind::gs || sys.kind == SystemKind::iq_switch)
                        ? p.est.unused_weighted.mean
                        : p.est.unused_sum.mean;
    r.unused_identity_residual = p.est.identity_residual.mean;
    r.ks_stat = p.ks;
    r.seed = sim.seed;
    for (const auto& m : p.est.mgf) r.mgf.push_back(m.valid ? m.est.mean : std::nan(""));
    for (const auto& m : p.est.mgf) {
        double ref = std::nan("");
        if (sys.prediction.limit_mean * m.theta < 1.0)
            ref = exponential_reference(sys.prediction.limit_mean, m.theta);
        r.mgf_ref.push_back(ref);
    }
    return r;
}

inline CsvRow oracle_csv_row(const SystemModel& sys, const DVec& theta_grid, double eps,
                             const TruncatedChain& chain) {
    const auto m = chain.exact_moments(theta_grid);
    CsvRow r;
    r.system = kind_name(sys.kind);
    r.policy = policy_name(sys.policy);
    r.epsilon = eps;
    r.source = "oracle";
    r.replication = 0;
    r.slots = 0;
    r.scaled_mean = r.scaled_mean_ci_lo = r.scaled_mean_ci_hi = m.scaled_mean;
    r.predicted_mean = sys.prediction.limit_mean;
    r.perp_sq_scaled = eps * eps * m.perp_sq;
    r.unused_mean = (sys.kind == SystemKind::gs || sys.kind == SystemKind::iq_switch) ? m.unused_weighted
                                                                                      : m.unused_sum;
    r.unused_identity_residual = m.identity_residual;
    r.ks_stat = m.ks_vs_exponential;
    r.seed = 0;
    r.mgf = m.mgf;
    for (double th : theta_grid) {
        double ref = std::nan("");
        if (sys.prediction.limit_mean * th < 1.0) ref = exponential_reference(sys.prediction.limit_mean, th);
        r.mgf_ref.push_back(ref);
    }
    return r;
}

// Fan the (epsilon, replication) grid out to a bounded worker pool. Results
// come back in a deterministic order regardless of scheduling.
inline std::vector<PointResult> run_grid(const SystemModel& sys, const SimConfig& sim, const DVec& eps_list,
                                         int replications, int workers) {
    struct Job {
        double eps;
        int rep;
    };
    std::vector<Job> jobs;
    for (double e : eps_list)
        for (int r = 0; r < replications; ++r) jobs.push_back({e, r});
    std::vector<PointResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    const int nw = std::max(1, workers == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : workers);
    auto worker = [&]() {
        while (true) {
            const std::size_t k = next.fetch_add(1);
            if (k >= jobs.size()) return;
            PointResult& pr = results[k];
            pr.epsilon = jobs[k].eps;
            pr.replication = jobs[k].rep;
            try {
                SimConfig local = sim;
                local.replication_id = jobs[k].rep;
                pr.est = run(sys, jobs[k].eps, local);
                pr.ks = ks_against_limit(pr.est, sys.prediction);
            } catch (const std::exception& e) {
                pr.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    return results;
}

inline RunSummary to_summary(const PointResult& p) {
    RunSummary s;
    s.epsilon = p.epsilon;
    s.eps_eff = p.est.eps_eff;
    s.scaled_mean = p.est.scaled_parallel_mean;
    s.perp_sq = p.est.perp_sq;
    for (const auto& m : p.est.mgf) {
        s.mgf_theta.push_back(m.theta);
        s.mgf.push_back(m.est);
    }
    s.thinned = p.est.thinned;
    return s;
}

// Pool replications of one epsilon point into a single summary row.
inline RunSummary pooled_summary(const std::vector<const PointResult*>& reps) {
    RunSummary s = to_summary(*reps[0]);
    if (reps.size() == 1) return s;
    std::vector<Estimate> scaled, perp;
    for (const auto* p : reps) {
        scaled.push_back(p->est.scaled_parallel_mean);
        perp.push_back(p->est.perp_sq);
    }
    s.scaled_mean = pool_estimates(scaled);
    s.perp_sq = pool_estimates(perp);
    for (std::size_t t = 0; t < s.mgf.size(); ++t) {
        std::vector<Estimate> es;
        for (const auto* p : reps)
            if (p->est.mgf[t].valid) es.push_back(p->est.mgf[t].est);
        if (!es.empty()) s.mgf[t] = pool_estimates(es);
    }
    s.thinned.clear();
    for (const auto* p : reps) s.thinned.insert(s.thinned.end(), p->est.thinned.begin(), p->est.thinned.end());
    return s;
}

inline std::string timestamp_comment(const std::string& what) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return what + " generated " + buf;
}

// ---- commands ---------------------------------------------------------------

struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int workers = 0;
};

inline void apply_overrides(ExperimentConfig& cfg, const CliOverrides& ov) {
    if (ov.seed) cfg.sim.seed = *ov.seed;
    if (ov.out_dir) cfg.output.dir = *ov.out_dir;
    if (const char* env = std::getenv("HTQ_SEED")) cfg.sim.seed = std::strtoull(env, nullptr, 10);
}

inline std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
    std::filesystem::create_directories(cfg.output.dir);
    return (std::filesystem::path(cfg.output.dir) / file).string();
}

// Single (system, epsilon) execution: appends rows for every epsilon in the
// config. Exit status is nonzero only for hard pathwise-invariant failures or
// unusable configs.
inline int cmd_run(ExperimentConfig cfg, const CliOverrides& ov, std::ostream& log = std::cout) {
    apply_overrides(cfg, ov);
    for (const auto& w : cfg.system.warnings) log << "warning: " << w << "\n";
    std::vector<CsvRow> rows;
    for (double eps : cfg.epsilon_list)
        for (int rep = 0; rep < cfg.replications; ++rep) {
            SimConfig local = cfg.sim;
            local.replication_id = rep;
            PointResult pr;
            pr.epsilon = eps;
            pr.replication = rep;
            try {
                pr.est = run(cfg.system, eps, local);
            } catch (const invariant_violation& e) {
                log << "invariant violation: " << e.what() << "\n";
                return 2;
            }
            pr.ks = ks_against_limit(pr.est, cfg.system.prediction);
            rows.push_back(to_csv_row(cfg.system, cfg.sim, pr));
            log << "ran " << kind_name(cfg.system.kind) << " eps=" << eps << " rep=" << rep
                << " scaled_mean=" << pr.est.scaled_parallel_mean.mean << "\n";
        }
    const std::string csv = out_path(cfg, cfg.output.csv);
    write_csv(csv, timestamp_comment("run"), cfg.sim.theta_grid, rows);
    log << "wrote " << csv << "\n";
    return 0;
}

inline void write_summary_file(const ExperimentConfig& cfg, const std::vector<PointResult>& results,
                               const std::string& text) {
    (void)results;
    std::ofstream out(out_path(cfg, cfg.output.summary));
    out << text;
}

inline std::string render_sweep_summary(const ExperimentConfig& cfg, const std::vector<PointResult>& results,
                                        const ConvergenceReport& conv, const SscReport& ssc) {
    std::ostringstream os;
    const SystemModel& sys = cfg.system;
    os << "system " << kind_name(sys.kind) << " policy " << policy_name(sys.policy) << "\n";
    os << "predicted limit mean: " << fmt_g(sys.prediction.limit_mean) << " (" << sys.prediction.source << ")\n\n";
    os << "eps        scaled_mean  [95% CI]                rel_gap   ks        eps^2*E|q_perp|^2  identity_resid\n";
    for (const auto& row : conv.rows) {
        const PointResult* p = nullptr;
        for (const auto& r : results)
            if (r.epsilon == row.epsilon && r.error.empty()) { p = &r; break; }
        os << fmt_g(row.epsilon) << "\t" << fmt_g(row.scaled_mean);
        if (p)
            os << "  [" << fmt_g(p->est.scaled_parallel_mean.ci_lo) << ", "
               << fmt_g(p->est.scaled_parallel_mean.ci_hi) << "]";
        os << "\t" << fmt_g(row.rel_gap) << "\t" << fmt_g(row.ks);
        if (p) os << "\t" << fmt_g(row.epsilon * row.epsilon * p->est.perp_sq.mean)
                  << "\t" << fmt_g(p->est.identity_residual.mean);
        os << "\n";
    }
    os << "\nchecks (raw numbers above; thresholds are reported, not silently applied):\n";
    os << "  mean-gap strictly decreasing: " << (conv.gap_strictly_decreasing ? "PASS" : "FAIL") << "\n";
    os << "  ks strictly decreasing:       " << (conv.ks_strictly_decreasing ? "PASS" : "FAIL") << "\n";
    os << "  final gap:                    " << fmt_g(conv.final_gap) << "\n";
    os << "  final ks:                     " << fmt_g(conv.final_ks) << "\n";
    os << "  ssc eps^2 E|q_perp|^2 decreasing and final/initial < 0.5: " << (ssc.pass ? "PASS" : "FAIL")
       << " (ratio " << fmt_g(ssc.final_over_initial) << ")\n";
    for (const auto& r : results)
        if (!r.error.empty()) os << "  point eps=" << fmt_g(r.epsilon) << " FAILED: " << r.error << "\n";
    return os.str();
}

// Epsilon sweep with replication fan-out, convergence and SSC reports, and a
// plain-text summary. Partial failures are reported per point.
inline int cmd_sweep(ExperimentConfig cfg, const CliOverrides& ov, std::ostream& log = std::cout) {
    apply_overrides(cfg, ov);
    if (cfg.epsilon_list.size() < 3)
        throw config_error("sweep: needs at least 3 epsilon points for trend checks");
    for (const auto& w : cfg.system.warnings) log << "warning: " << w << "\n";

    auto results = run_grid(cfg.system, cfg.sim, cfg.epsilon_list, cfg.replications, ov.workers);

    std::vector<CsvRow> rows;
    std::vector<RunSummary> summaries;
    for (double eps : cfg.epsilon_list) {
        std::vector<const PointResult*> reps;
        for (const auto& r : results) {
            if (r.epsilon != eps) continue;
            if (r.error.empty()) {
                rows.push_back(to_csv_row(cfg.system, cfg.sim, r));
                reps.push_back(&r);
            } else {
                log << "point eps=" << eps << " rep=" << r.replication << " failed: " << r.error << "\n";
            }
        }
        if (!reps.empty()) summaries.push_back(pooled_summary(reps));
    }

    if (cfg.oracle.enabled) {
        for (double eps : cfg.epsilon_list) {
            TruncatedChain chain = build_and_solve(cfg.system, eps, cfg.oracle.options);
            rows.push_back(oracle_csv_row(cfg.system, cfg.sim.theta_grid, eps, chain));
            if (chain.truncation_warning())
                log << "warning: oracle boundary mass " << chain.boundary_mass() << " at eps=" << eps
                    << " exceeds " << cfg.oracle.options.boundary_threshold << "\n";
        }
    }

    std::stable_sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) {
        return std::tie(a.source, a.epsilon, a.replication) < std::tie(b.source, b.epsilon, b.replication);
    });
    const std::string csv = out_path(cfg, cfg.output.csv);
    write_csv(csv, timestamp_comment("sweep"), cfg.sim.theta_grid, rows);

    int status = 0;
    std::string text;
    if (summaries.size() >= 3) {
        const auto conv = convergence_report(summaries, cfg.system.prediction);
        const auto ssc = ssc_report(summaries);
        text = render_sweep_summary(cfg, results, conv, ssc);
    } else {
        text = "sweep failed: fewer than 3 epsilon points succeeded\n";
        for (const auto& r : results)
            if (!r.error.empty()) text += "  eps=" + fmt_g(r.epsilon) + ": " + r.error + "\n";
        status = 1;
    }
    write_summary_file(cfg, results, text);
    log << text;
    log << "wrote " << csv << "\n";
    return status;
}

// Capacity/CRP report for a generalized-switch config: facets, the b^(t)
// table, sigma_B^2, the CRP verdict at r, and the arrival means per epsilon.
inline int cmd_validate(ExperimentConfig cfg, const CliOverrides& ov, std::ostream& log = std::cout) {
    apply_overrides(cfg, ov);
    const SystemModel& sys = cfg.system;
    if (sys.kind != SystemKind::gs)
        throw config_error("validate: only generalized-switch configs have capacity geometry");
    log << "facets (c; b):\n";
    for (std::size_t l = 0; l < sys.facets.size(); ++l)
        log << "  facet " << l << ": c=" << vec_str(sys.facets[l].c) << " b=" << fmt_g(sys.facets[l].b) << "\n";
    log << "binding facet at r=" << vec_str(sys.r) << ": " << sys.facet_index << "\n";
    log << "b^(t) per channel state:\n";
    for (std::size_t t = 0; t < sys.bdist.values.size(); ++t)
        log << "  " << sys.channel.labels[t] << ": b=" << fmt_g(sys.bdist.values[t]) << " psi="
            << fmt_g(sys.bdist.probs[t]) << "\n";
    log << "E[B]=" << fmt_g(sys.bdist.mean) << " sigma_B^2=" << fmt_g(sys.bdist.variance) << "\n";
    log << "CRP: holds (unique binding facet)\n";
    for (double eps : cfg.epsilon_list)
        log << "eps=" << fmt_g(eps) << " arrival mean " << vec_str(sys.arrival_target(eps)) << "\n";

    const std::string path = out_path(cfg, "facets.csv");
    std::ofstream out(path, std::ios::binary);
    out << "facet_id";
    for (int i = 0; i < sys.n; ++i) out << ",c_" << i;
    out << ",b,sigma_B_sq\n";
    for (std::size_t l = 0; l < sys.facets.size(); ++l) {
        const auto bd = b_distribution(sys.facets[l].c, sys.schedules, sys.channel);
        out << l;
        for (double ci : sys.facets[l].c) out << "," << fmt_g(ci);
        out << "," << fmt_g(sys.facets[l].b) << "," << fmt_g(bd.variance) << "\n";
    }
    log << "wrote " << path << "\n";
    return 0;
}

struct CoverageLine {
    double eps;
    std::string what;
    double oracle_value;
    double ci_lo, ci_hi;
    bool covered;
};

// Paired simulator/oracle rows plus a CI-coverage table.
inline int cmd_oracle_compare(ExperimentConfig cfg, const CliOverrides& ov, std::ostream& log = std::cout,
                              std::vector<CoverageLine>* out_lines = nullptr) {
    apply_overrides(cfg, ov);
    std::vector<CsvRow> rows;
    std::vector<CoverageLine> lines;
    for (double eps : cfg.epsilon_list) {
        SimConfig local = cfg.sim;
        PointResult pr;
        pr.epsilon = eps;
        pr.est = run(cfg.system, eps, local);
        pr.ks = ks_against_limit(pr.est, cfg.system.prediction);
        rows.push_back(to_csv_row(cfg.system, cfg.sim, pr));

        TruncatedChain chain = build_and_solve(cfg.system, eps, cfg.oracle.options);
        rows.push_back(oracle_csv_row(cfg.system, cfg.sim.theta_grid, eps, chain));
        const auto om = chain.exact_moments(cfg.sim.theta_grid);
        log << "eps=" << eps << " oracle boundary mass " << chain.boundary_mass() << " ("
            << chain.iterations() << " iterations, residual " << chain.residual() << ")\n";

        const auto& se = pr.est;
        lines.push_back({eps, "scaled_mean", om.scaled_mean, se.scaled_parallel_mean.ci_lo,
                         se.scaled_parallel_mean.ci_hi, se.scaled_parallel_mean.covers(om.scaled_mean)});
        const bool weighted = cfg.system.kind == SystemKind::gs || cfg.system.kind == SystemKind::iq_switch;
        const Estimate& ue = weighted ? se.unused_weighted : se.unused_sum;
        const double uo = weighted ? om.unused_weighted : om.unused_sum;
        lines.push_back({eps, "unused_mean", uo, ue.ci_lo, ue.ci_hi, ue.covers(uo)});
        for (std::size_t t = 0; t < se.mgf.size(); ++t) {
            if (!se.mgf[t].valid) continue;
            lines.push_back({eps, "mgf_theta_" + fmt_g(se.mgf[t].theta), om.mgf[t], se.mgf[t].est.ci_lo,
                             se.mgf[t].est.ci_hi, se.mgf[t].est.covers(om.mgf[t])});
        }
    }
    std::stable_sort(rows.begin(), rows.end(), [](const CsvRow& a, const CsvRow& b) {
        return std::tie(a.source, a.epsilon, a.replication) < std::tie(b.source, b.epsilon, b.replication);
    });
    write_csv(out_path(cfg, cfg.output.csv), timestamp_comment("oracle-compare"), cfg.sim.theta_grid, rows);
    int misses = 0;
    for (const auto& l : lines) {
        log << "eps=" << fmt_g(l.eps) << " " << l.what << ": oracle=" << fmt_g(l.oracle_value) << " CI=["
            << fmt_g(l.ci_lo) << ", " << fmt_g(l.ci_hi) << "] " << (l.covered ? "covered" : "MISSED") << "\n";
        misses += l.covered ? 0 : 1;
    }
    log << (misses == 0 ? "all oracle values covered by simulator CIs\n"
                        : std::to_string(misses) + " coverage misses\n");
    if (out_lines) *out_lines = std::move(lines);
    return 0;
}

// Rebuild the summary tables from an existing sweep CSV.
inline int cmd_report(const std::string& csv_path, std::ostream& log = std::cout) {
    std::ifstream in(csv_path);
    if (!in) throw config_error("cannot read CSV '" + csv_path + "'");
    std::string line;
    std::vector<std::string> header;
    struct Row {
        double eps, scaled, pred, perp, ks;
        std::string source;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            continue;
        }
        auto col = [&](const std::string& name) -> std::string {
            for (std::size_t i = 0; i < header.size(); ++i)
                if (header[i] == name) return cells[i];
            throw config_error("report: CSV misses column '" + name + "'");
        };
        rows.push_back({std::stod(col("epsilon")), std::stod(col("scaled_mean")), std::stod(col("predicted_mean")),
                        std::stod(col("perp_sq_scaled")), std::stod(col("ks_stat")), col("source")});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.eps > b.eps; });
    log << "eps        source  scaled_mean  rel_gap    ks        eps^2*E|q_perp|^2\n";
    for (const auto& r : rows) {
        const double gap = r.pred > 0 ? std::abs(r.scaled - r.pred) / r.pred : 0.0;
        log << fmt_g(r.eps) << "\t" << r.source << "\t" << fmt_g(r.scaled) << "\t" << fmt_g(gap) << "\t"
            << fmt_g(r.ks) << "\t" << fmt_g(r.perp) << "\n";
    }
    return 0;
}

}  // namespace htq
