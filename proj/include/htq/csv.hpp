#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "htq/errors.hpp"
#include "htq/vecutil.hpp"

namespace htq {

inline std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

// One line of the stable sweep schema. Column order is fixed; per-theta MGF
// columns are appended as mgf_theta_<v>, mgf_ref_theta_<v> in grid order.
struct CsvRow {
    std::string system;
    std::string policy;
    double epsilon = 0.0;
    std::string source;  // sim | oracle
    int replication = 0;
    long long slots = 0;
    double scaled_mean = 0.0;
    double scaled_mean_ci_lo = 0.0;
    double scaled_mean_ci_hi = 0.0;
    double predicted_mean = 0.0;
    double perp_sq_scaled = 0.0;
    double unused_mean = 0.0;
    double unused_identity_residual = 0.0;
    double ks_stat = 0.0;
    std::uint64_t seed = 0;
    DVec mgf;      // aligned with the theta grid
    DVec mgf_ref;  // exponential reference at the same grid
};

inline std::string csv_header(const DVec& theta_grid) {
    std::string h =
        "system,policy,epsilon,source,replication,slots,scaled_mean,scaled_mean_ci_lo,"
        "scaled_mean_ci_hi,predicted_mean,perp_sq_scaled,unused_mean,unused_identity_residual,"
        "ks_stat,seed";
    for (double th : theta_grid) h += ",mgf_theta_" + fmt_g(th);
    for (double th : theta_grid) h += ",mgf_ref_theta_" + fmt_g(th);
    return h;
}

inline std::string csv_line(const CsvRow& r) {
    std::string s = r.system + "," + r.policy + "," + fmt_g(r.epsilon) + "," + r.source + "," +
                    std::to_string(r.replication) + "," + std::to_string(r.slots) + "," + fmt_g(r.scaled_mean) +
                    "," + fmt_g(r.scaled_mean_ci_lo) + "," + fmt_g(r.scaled_mean_ci_hi) + "," +
                    fmt_g(r.predicted_mean) + "," + fmt_g(r.perp_sq_scaled) + "," + fmt_g(r.unused_mean) + "," +
                    fmt_g(r.unused_identity_residual) + "," + fmt_g(r.ks_stat) + "," + std::to_string(r.seed);
    for (double v : r.mgf) s += "," + fmt_g(v);
    for (double v : r.mgf_ref) s += "," + fmt_g(v);
    return s;
}

// Timestamps and other volatile details live in "#" comment lines only; the
// body below them is byte-identical across reruns with the same seed.
inline void write_csv(const std::string& path, const std::string& comment, const DVec& theta_grid,
                      const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("cannot write CSV '" + path + "'");
    if (!comment.empty()) out << "# " << comment << "\n";
    out << csv_header(theta_grid) << "\n";
    for (const auto& r : rows) out << csv_line(r) << "\n";
}

inline std::string csv_body(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot read CSV '" + path + "'");
    std::string body, line;
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '#') continue;
        body += line;
        body += "\n";
    }
    return body;
}

}  // namespace htq
