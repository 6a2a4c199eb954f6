#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "htq/config.hpp"

using namespace htq;

namespace {
std::string cfg_path(const std::string& name) { return std::string(HTQ_SOURCE_DIR) + "/configs/" + name; }
}  // namespace

TEST_CASE("all shipped configs load and finalize") {
    for (const char* name :
         {"single_mu05.json", "lb_jsq_n2_bernoulli.json", "lb_jsq_n2_trinomial.json",
          "lb_jsq_n2_commonshock.json", "lb_jsq_n3.json", "lb_po2_n2.json", "lb_po2_n3.json",
          "lb_random_n2.json", "gs_twostate.json", "gs_twostate_minvar.json", "switch_n2.json"}) {
        INFO(name);
        REQUIRE_NOTHROW(load_config(cfg_path(name)));
    }
}

TEST_CASE("predictions derived from the shipped configs") {
    REQUIRE(load_config(cfg_path("single_mu05.json")).system.prediction.limit_mean ==
            Catch::Approx(0.25).margin(1e-12));
    REQUIRE(load_config(cfg_path("lb_jsq_n2_trinomial.json")).system.prediction.limit_mean ==
            Catch::Approx(0.1875).margin(1e-12));
    REQUIRE(load_config(cfg_path("lb_jsq_n2_commonshock.json")).system.prediction.limit_mean ==
            Catch::Approx(0.28125).margin(1e-12));
    // two-state switch, Bernoulli arrivals at r = (0.75, 0.75): limit variance
    // 0.1875 per queue, so ((0.1875 + 0.1875)/2 + 0.125)/2
    REQUIRE(load_config(cfg_path("gs_twostate.json")).system.prediction.limit_mean ==
            Catch::Approx(0.15625).margin(1e-12));
    // minimum-variance pair arrivals: Var(a1 + a2)/2 -> 0.125
    REQUIRE(load_config(cfg_path("gs_twostate_minvar.json")).system.prediction.limit_mean ==
            Catch::Approx(0.125).margin(1e-12));
    // N=2 switch, Bernoulli(1/2) row-1 arrivals in the limit
    REQUIRE(load_config(cfg_path("switch_n2.json")).system.prediction.limit_mean ==
            Catch::Approx(0.125).margin(1e-12));
}

TEST_CASE("epsilon at or above the capacity bound is named in the error") {
    json root = {{"config_version", 1},
                 {"system",
                  {{"kind", "single"},
                   {"arrival", {{"family", "bernoulli"}}},
                   {"service", {{"family", "bernoulli"}, {"mean", {0.5}}}}}},
                 {"epsilon_list", {0.5}}};
    try {
        parse_config(root);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        REQUIRE(std::string(e.what()).find("admissible interval") != std::string::npos);
        REQUIRE(std::string(e.what()).find("0.5") != std::string::npos);
    }
}

TEST_CASE("pmf that does not sum to one is a schema error") {
    json root = {{"config_version", 1},
                 {"system",
                  {{"kind", "single"},
                   {"arrival", {{"family", "bernoulli"}}},
                   {"service", {{"family", "pmf"}, {"support", {{0}, {1}}}, {"probs", {0.5, 0.6}}}}}},
                 {"epsilon_list", {0.1}}};
    REQUIRE_THROWS_AS(parse_config(root), config_error);
}

TEST_CASE("schema violations are reported with field paths") {
    json root = {{"config_version", 1},
                 {"system", {{"kind", "lb"}, {"policy", "jsq"}}},
                 {"epsilon_list", json::array()}};
    try {
        parse_config(root);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        const std::string msg = e.what();
        REQUIRE(msg.find("$.system.arrival") != std::string::npos);
        REQUIRE(msg.find("$.system.service") != std::string::npos);
        REQUIRE(msg.find("$.epsilon_list") != std::string::npos);
    }
}

TEST_CASE("config version is mandatory") {
    json root = {{"system", {{"kind", "single"}}}, {"epsilon_list", {0.1}}};
    REQUIRE_THROWS_AS(parse_config(root), config_error);
}

TEST_CASE("policy must match the system kind") {
    json root = {{"config_version", 1},
                 {"system",
                  {{"kind", "lb"},
                   {"n", 2},
                   {"policy", "maxweight"},
                   {"arrival", {{"family", "bernoulli"}}},
                   {"service", {{"family", "bernoulli"}, {"mean", {0.5, 0.5}}}}}},
                 {"epsilon_list", {0.1}}};
    REQUIRE_THROWS_AS(parse_config(root), config_error);
}

TEST_CASE("po2 with non-identical servers only warns") {
    json root = {{"config_version", 1},
                 {"system",
                  {{"kind", "lb"},
                   {"n", 2},
                   {"policy", "po2"},
                   {"arrival", {{"family", "bernoulli"}}},
                   {"service", {{"family", "bernoulli"}, {"mean", {0.5, 0.3}}}}}},
                 {"epsilon_list", {0.1}}};
    auto cfg = parse_config(root);
    REQUIRE(cfg.system.warnings.size() == 1);
}

TEST_CASE("fixed pmf arrivals bypass the parametrization") {
    json root = {{"config_version", 1},
                 {"system",
                  {{"kind", "single"},
                   {"arrival", {{"family", "pmf"}, {"fixed", 1}, {"support", {{0}}}, {"probs", {1.0}}}},
                   {"service", {{"family", "bernoulli"}, {"mean", {0.5}}}}}},
                 {"epsilon_list", {0.1}}};
    auto cfg = parse_config(root);
    REQUIRE(cfg.system.arrival_override.has_value());
    REQUIRE(cfg.system.arrival_dist(0.1).bound() == 0);
}

TEST_CASE("theta grid always contains zero after parsing") {
    auto cfg = load_config(cfg_path("single_mu05.json"));
    bool has_zero = false;
    for (double th : cfg.sim.theta_grid) has_zero = has_zero || th == 0.0;
    REQUIRE(has_zero);
    REQUIRE(std::is_sorted(cfg.sim.theta_grid.begin(), cfg.sim.theta_grid.end()));
}
