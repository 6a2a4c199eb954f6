#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "htq/errors.hpp"
#include "htq/oracle.hpp"
#include "htq/simulate.hpp"
#include "htq/system.hpp"

namespace htq {

using json = nlohmann::json;

struct OutputConfig {
    std::string dir = "out";
    std::string csv = "results.csv";
    std::string summary = "summary.txt";
};

struct OracleConfig {
    bool enabled = false;
    OracleOptions options;
};

struct ExperimentConfig {
    SystemModel system;
    SimConfig sim;
    int replications = 1;
    DVec epsilon_list;
    OracleConfig oracle;
    OutputConfig output;
};

namespace cfgdetail {

class Validator {
  public:
    void fail(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

    void finish() const {
        if (errors_.empty()) return;
        std::string all = "config schema violations:";
        for (const auto& e : errors_) all += "\n  - " + e;
        throw config_error(all);
    }

    bool ok() const { return errors_.empty(); }

  private:
    std::vector<std::string> errors_;
};

inline double get_num(const json& j, const std::string& key, const std::string& path, Validator& v,
                      std::optional<double> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        v.fail(path + "." + key, "missing required number");
        return 0.0;
    }
    if (!j[key].is_number()) {
        v.fail(path + "." + key, "expected a number");
        return 0.0;
    }
    return j[key].get<double>();
}

inline std::string get_str(const json& j, const std::string& key, const std::string& path, Validator& v,
                           std::optional<std::string> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        v.fail(path + "." + key, "missing required string");
        return "";
    }
    if (!j[key].is_string()) {
        v.fail(path + "." + key, "expected a string");
        return "";
    }
    return j[key].get<std::string>();
}

inline DVec get_dvec(const json& j, const std::string& key, const std::string& path, Validator& v,
                     bool required = true) {
    DVec out;
    if (!j.contains(key)) {
        if (required) v.fail(path + "." + key, "missing required array");
        return out;
    }
    if (!j[key].is_array()) {
        v.fail(path + "." + key, "expected an array of numbers");
        return out;
    }
    for (const auto& x : j[key]) {
        if (!x.is_number()) {
            v.fail(path + "." + key, "expected numbers only");
            return {};
        }
        out.push_back(x.get<double>());
    }
    return out;
}

inline std::vector<IVec> get_ivecs(const json& j, const std::string& key, const std::string& path, Validator& v) {
    std::vector<IVec> out;
    if (!j.contains(key) || !j[key].is_array()) {
        v.fail(path + "." + key, "missing array of integer vectors");
        return out;
    }
    for (const auto& row : j[key]) {
        IVec r;
        if (!row.is_array()) {
            v.fail(path + "." + key, "expected arrays of integers");
            return {};
        }
        for (const auto& x : row) {
            if (!x.is_number_integer()) {
                v.fail(path + "." + key, "support entries must be integers");
                return {};
            }
            r.push_back(x.get<long long>());
        }
        out.push_back(std::move(r));
    }
    return out;
}

inline FamilySpec parse_family(const json& j, const std::string& path, Validator& v) {
    FamilySpec spec;
    spec.kind = get_str(j, "family", path, v);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (it.key() == "family" || it.key() == "support" || it.key() == "probs" || it.key() == "mean") continue;
        if (it.value().is_number()) spec.params[it.key()] = it.value().get<double>();
    }
    if (spec.kind == "pmf") {
        spec.support = get_ivecs(j, "support", path, v);
        spec.probs = get_dvec(j, "probs", path, v);
    }
    if (spec.kind == "trinomial") {
        if (!j.contains("mean") || !j.contains("var")) v.fail(path, "trinomial family needs mean and var");
        else if (j["mean"].is_number()) spec.params["mean"] = j["mean"].get<double>();
    }
    return spec;
}

// A fixed (non-parametrized) law, used for services.
inline FiniteJointDist parse_fixed_dist(const json& j, const std::string& path, Validator& v) {
    const std::string kind = get_str(j, "family", path, v);
    try {
        if (kind == "pmf") {
            return FiniteJointDist(get_ivecs(j, "support", path, v), get_dvec(j, "probs", path, v));
        }
        FamilySpec spec = parse_family(j, path, v);
        DVec mean = get_dvec(j, "mean", path, v);
        if (!v.ok()) throw config_error("invalid family block");
        return build_family(spec, mean);
    } catch (const config_error& e) {
        v.fail(path, e.what());
        return FiniteJointDist({{0}}, {1.0});
    }
}

}  // namespace cfgdetail

inline ExperimentConfig parse_config(const json& root) {
    using namespace cfgdetail;
    Validator v;
    ExperimentConfig cfg;

    const double version = get_num(root, "config_version", "$", v, 0.0);
    if (version != 1.0) v.fail("$.config_version", "unsupported version, expected 1");

    if (!root.contains("system") || !root["system"].is_object()) {
        v.fail("$.system", "missing system block");
        v.finish();
    }
    const json& js = root["system"];
    SystemModel& sys = cfg.system;
    const std::string kind = get_str(js, "kind", "$.system", v);
    if (!v.ok()) v.finish();
    try {
        sys.kind = kind_from_name(kind);
    } catch (const config_error& e) {
        v.fail("$.system.kind", e.what());
        v.finish();
    }
    sys.policy = PolicyKind::none;
    if (js.contains("policy")) {
        try {
            sys.policy = policy_from_name(get_str(js, "policy", "$.system", v));
        } catch (const config_error& e) {
            v.fail("$.system.policy", e.what());
        }
    }

    if (js.contains("arrival") && js["arrival"].is_object())
        sys.arrival_family = parse_family(js["arrival"], "$.system.arrival", v);
    else
        v.fail("$.system.arrival", "missing arrival family block");

    switch (sys.kind) {
        case SystemKind::single: {
            sys.n = 1;
            if (js.contains("service")) sys.service = parse_fixed_dist(js["service"], "$.system.service", v);
            else v.fail("$.system.service", "missing service law");
            break;
        }
        case SystemKind::lb: {
            sys.n = static_cast<int>(get_num(js, "n", "$.system", v));
            if (js.contains("service")) sys.service = parse_fixed_dist(js["service"], "$.system.service", v);
            else v.fail("$.system.service", "missing service law");
            break;
        }
        case SystemKind::gs: {
            if (!js.contains("channel") || !js["channel"].contains("states") ||
                !js["channel"]["states"].is_array() || js["channel"]["states"].empty()) {
                v.fail("$.system.channel.states", "missing channel states");
                break;
            }
            for (std::size_t t = 0; t < js["channel"]["states"].size(); ++t) {
                const json& st = js["channel"]["states"][t];
                const std::string path = "$.system.channel.states[" + std::to_string(t) + "]";
                sys.channel.labels.push_back(get_str(st, "label", path, v, "t" + std::to_string(t)));
                sys.channel.probs.push_back(get_num(st, "prob", path, v));
                sys.schedules.per_state.push_back(get_ivecs(st, "schedules", path, v));
            }
            sys.r = get_dvec(js, "r", "$.system", v);
            sys.n = static_cast<int>(sys.r.size());
            break;
        }
        case SystemKind::iq_switch: {
            sys.N = static_cast<int>(get_num(js, "N", "$.system", v));
            break;
        }
    }

    if (root.contains("sim") && root["sim"].is_object()) {
        const json& jm = root["sim"];
        SimConfig& sc = cfg.sim;
        sc.warmup_slots = static_cast<long long>(get_num(jm, "warmup_slots", "$.sim", v, 0));
        sc.measure_slots = static_cast<long long>(get_num(jm, "measure_slots", "$.sim", v, 1000000));
        sc.batches = static_cast<int>(get_num(jm, "batches", "$.sim", v, 20));
        sc.seed = static_cast<std::uint64_t>(get_num(jm, "seed", "$.sim", v, 1));
        if (jm.contains("theta_grid")) sc.theta_grid = get_dvec(jm, "theta_grid", "$.sim", v);
        sc.hist_bins = static_cast<int>(get_num(jm, "hist_bins", "$.sim", v, 120));
        sc.hist_max = get_num(jm, "hist_max", "$.sim", v, 0.0);
        sc.thin_cap = static_cast<long long>(get_num(jm, "thin_cap", "$.sim", v, 200000));
        sc.perp_theta = get_num(jm, "perp_theta", "$.sim", v, 0.0);
        cfg.replications = static_cast<int>(get_num(jm, "replications", "$.sim", v, 1));
        if (cfg.replications < 1) v.fail("$.sim.replications", "must be >= 1");
        if (sc.batches < 10) v.fail("$.sim.batches", "batch-means CI needs at least 10 batches");
        if (sc.measure_slots % std::max(1, sc.batches) != 0)
            v.fail("$.sim.measure_slots", "must be divisible by batches");
    }

    // theta grid always carries 0, where the MGF must be exactly 1
    bool has_zero = false;
    for (double th : cfg.sim.theta_grid) has_zero = has_zero || th == 0.0;
    if (!has_zero) cfg.sim.theta_grid.push_back(0.0);
    std::sort(cfg.sim.theta_grid.begin(), cfg.sim.theta_grid.end());

    cfg.epsilon_list = get_dvec(root, "epsilon_list", "$", v);
    if (cfg.epsilon_list.empty()) v.fail("$.epsilon_list", "needs at least one epsilon");

    if (root.contains("oracle") && root["oracle"].is_object()) {
        const json& jo = root["oracle"];
        cfg.oracle.enabled = jo.value("enabled", false);
        cfg.oracle.options.q_cap = static_cast<long long>(get_num(jo, "q_cap", "$.oracle", v, 200));
        cfg.oracle.options.solve_tol = get_num(jo, "solve_tol", "$.oracle", v, 1e-10);
        cfg.oracle.options.max_iterations =
            static_cast<long long>(get_num(jo, "max_iterations", "$.oracle", v, 2000000));
        cfg.oracle.options.boundary_threshold = get_num(jo, "boundary_threshold", "$.oracle", v, 1e-8);
    }

    if (root.contains("output") && root["output"].is_object()) {
        const json& jo = root["output"];
        cfg.output.dir = get_str(jo, "dir", "$.output", v, std::string("out"));
        cfg.output.csv = get_str(jo, "csv", "$.output", v, std::string("results.csv"));
        cfg.output.summary = get_str(jo, "summary", "$.output", v, std::string("summary.txt"));
    }

    v.finish();

    // "fixed": 1 on a pmf family bypasses the epsilon parametrization and uses
    // the pmf verbatim (explicit user law; sanity and degenerate runs)
    if (sys.arrival_family.kind == "pmf" && sys.arrival_family.params.count("fixed") &&
        sys.arrival_family.params.at("fixed") != 0.0)
        sys.arrival_override = FiniteJointDist(sys.arrival_family.support, sys.arrival_family.probs);

    try {
        cfg.system.finalize();
    } catch (const std::exception& e) {
        throw config_error(std::string("$.system: ") + e.what());
    }

    for (double eps : cfg.epsilon_list) {
        if (eps <= 0.0 || eps >= cfg.system.eps_max())
            throw config_error("$.epsilon_list: epsilon " + std::to_string(eps) +
                               " outside the admissible interval (0, " + std::to_string(cfg.system.eps_max()) +
                               ") for this system");
        cfg.system.arrival_dist(eps);  // feasibility of the family at each point
        cfg.sim.validate(eps, cfg.system.n, cfg.system.a_max, cfg.system.s_max);
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw config_error("config '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(root);
}

}  // namespace htq
