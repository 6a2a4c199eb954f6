#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "htq/config.hpp"
#include "htq/sweep.hpp"

using namespace htq;
namespace fs = std::filesystem;

namespace {

std::string cfg_path(const std::string& name) { return std::string(HTQ_SOURCE_DIR) + "/configs/" + name; }

ExperimentConfig tiny_single(const std::string& outdir) {
    auto cfg = load_config(cfg_path("single_mu05.json"));
    cfg.sim.measure_slots = 40000;
    cfg.sim.warmup_slots = 2000;
    cfg.epsilon_list = {0.2, 0.1, 0.05};
    cfg.oracle.enabled = false;
    cfg.output.dir = outdir;
    return cfg;
}

}  // namespace

TEST_CASE("csv header is schema-stable") {
    REQUIRE(csv_header({-1.0, 0.0, 1.0}) ==
            "system,policy,epsilon,source,replication,slots,scaled_mean,scaled_mean_ci_lo,"
            "scaled_mean_ci_hi,predicted_mean,perp_sq_scaled,unused_mean,unused_identity_residual,"
            "ks_stat,seed,mgf_theta_-1,mgf_theta_0,mgf_theta_1,mgf_ref_theta_-1,mgf_ref_theta_0,"
            "mgf_ref_theta_1");
}

TEST_CASE("cmd_run writes rows and exits cleanly") {
    const std::string dir = (fs::temp_directory_path() / "htq_test_run").string();
    fs::remove_all(dir);
    auto cfg = tiny_single(dir);
    cfg.epsilon_list = {0.1};
    std::ostringstream log;
    REQUIRE(cmd_run(cfg, {}, log) == 0);
    std::ifstream csv(dir + "/sweep.csv");
    REQUIRE(csv.good());
    int lines = 0;
    std::string line;
    while (std::getline(csv, line)) ++lines;
    REQUIRE(lines >= 3);  // comment, header, one row
}

TEST_CASE("reruns with the same seed produce byte-identical csv bodies") {
    const std::string d1 = (fs::temp_directory_path() / "htq_repro_1").string();
    const std::string d2 = (fs::temp_directory_path() / "htq_repro_2").string();
    fs::remove_all(d1);
    fs::remove_all(d2);
    std::ostringstream log;
    auto cfg1 = tiny_single(d1);
    auto cfg2 = tiny_single(d2);
    REQUIRE(cmd_run(cfg1, {}, log) == 0);
    REQUIRE(cmd_run(cfg2, {}, log) == 0);
    REQUIRE(csv_body(d1 + "/sweep.csv") == csv_body(d2 + "/sweep.csv"));

    const std::string d3 = (fs::temp_directory_path() / "htq_repro_3").string();
    fs::remove_all(d3);
    auto cfg3 = tiny_single(d3);
    cfg3.sim.seed = 2;
    REQUIRE(cmd_run(cfg3, {}, log) == 0);
    REQUIRE(csv_body(d1 + "/sweep.csv") != csv_body(d3 + "/sweep.csv"));
}

TEST_CASE("HTQ_SEED environment variable is the final override") {
    const std::string dir = (fs::temp_directory_path() / "htq_env_seed").string();
    fs::remove_all(dir);
    setenv("HTQ_SEED", "777", 1);
    auto cfg = tiny_single(dir);
    cfg.epsilon_list = {0.1};
    std::ostringstream log;
    CliOverrides ov;
    ov.seed = 5;  // env must win
    REQUIRE(cmd_run(cfg, ov, log) == 0);
    unsetenv("HTQ_SEED");
    const std::string body = csv_body(dir + "/sweep.csv");
    REQUIRE(body.find(",777,") != std::string::npos);
}

TEST_CASE("sweep produces a summary with pass/fail flags") {
    const std::string dir = (fs::temp_directory_path() / "htq_test_sweep").string();
    fs::remove_all(dir);
    auto cfg = tiny_single(dir);
    std::ostringstream log;
    REQUIRE(cmd_sweep(cfg, {}, log) == 0);
    std::ifstream sum(dir + "/summary.txt");
    std::stringstream ss;
    ss << sum.rdbuf();
    REQUIRE(ss.str().find("strictly decreasing") != std::string::npos);
    REQUIRE(ss.str().find("PASS") != std::string::npos);
}

TEST_CASE("one-point sweeps are rejected") {
    const std::string dir = (fs::temp_directory_path() / "htq_short_sweep").string();
    auto cfg = tiny_single(dir);
    cfg.epsilon_list = {0.1};
    std::ostringstream log;
    REQUIRE_THROWS_AS(cmd_sweep(cfg, {}, log), config_error);
}

TEST_CASE("validate prints the capacity facts for the two-state example") {
    auto cfg = load_config(cfg_path("gs_twostate.json"));
    const std::string dir = (fs::temp_directory_path() / "htq_validate").string();
    fs::remove_all(dir);
    cfg.output.dir = dir;
    std::ostringstream log;
    REQUIRE(cmd_validate(cfg, {}, log) == 0);
    const std::string out = log.str();
    REQUIRE(out.find("1.06066") != std::string::npos);
    REQUIRE(out.find("sigma_B^2=0.125") != std::string::npos);
    REQUIRE(out.find("CRP: holds") != std::string::npos);
    std::ifstream facets(dir + "/facets.csv");
    std::string header;
    REQUIRE(std::getline(facets, header));
    REQUIRE(header == "facet_id,c_0,c_1,b,sigma_B_sq");
    std::string row;
    REQUIRE(std::getline(facets, row));
    REQUIRE(row.find("0.125") != std::string::npos);
}

TEST_CASE("validate refuses a non-switch system") {
    auto cfg = tiny_single((fs::temp_directory_path() / "htq_val").string());
    std::ostringstream log;
    REQUIRE_THROWS_AS(cmd_validate(cfg, {}, log), config_error);
}

TEST_CASE("oracle-compare emits paired rows with coverage lines") {
    const std::string dir = (fs::temp_directory_path() / "htq_oc").string();
    fs::remove_all(dir);
    auto cfg = load_config(cfg_path("lb_jsq_n2_bernoulli.json"));
    cfg.output.dir = dir;
    cfg.sim.measure_slots = 200000;
    cfg.epsilon_list = {0.2};
    cfg.oracle.options.q_cap = 60;
    std::ostringstream log;
    std::vector<CoverageLine> lines;
    REQUIRE(cmd_oracle_compare(cfg, {}, log, &lines) == 0);
    REQUIRE(!lines.empty());
    const std::string body = csv_body(dir + "/compare.csv");
    REQUIRE(body.find(",oracle,") != std::string::npos);
    REQUIRE(body.find(",sim,") != std::string::npos);
}

TEST_CASE("report re-renders a sweep csv") {
    const std::string dir = (fs::temp_directory_path() / "htq_report").string();
    fs::remove_all(dir);
    auto cfg = tiny_single(dir);
    std::ostringstream log;
    REQUIRE(cmd_sweep(cfg, {}, log) == 0);
    std::ostringstream rep;
    REQUIRE(cmd_report(dir + "/sweep.csv", rep) == 0);
    REQUIRE(rep.str().find("rel_gap") != std::string::npos);
}

TEST_CASE("csv float formatting is locale-independent and stable") {
    REQUIRE(fmt_g(0.1) == "0.1");
    REQUIRE(fmt_g(1.0606601717798214) == "1.06066017178");
    REQUIRE(fmt_g(-2.0) == "-2");
}
