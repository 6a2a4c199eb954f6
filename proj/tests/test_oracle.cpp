#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "htq/oracle.hpp"
#include "htq/simulate.hpp"

using namespace htq;

namespace {

SystemModel single_mu05() {
    SystemModel sys;
    sys.kind = SystemKind::single;
    sys.arrival_family = FamilySpec{"bernoulli", {}, {}, {}};
    sys.service = make_bernoulli_scalar(0.5);
    sys.finalize();
    return sys;
}

SystemModel lb_n2(PolicyKind policy) {
    SystemModel sys;
    sys.kind = SystemKind::lb;
    sys.n = 2;
    sys.policy = policy;
    sys.arrival_family = FamilySpec{"bernoulli", {}, {}, {}};
    sys.service = make_bernoulli_vec({0.5, 0.5});
    sys.finalize();
    return sys;
}

}  // namespace

TEST_CASE("birth-death closed form: E[q] = 2 and pi(0) = 1/3 at eps 0.1") {
    auto sys = single_mu05();
    OracleOptions opts;
    opts.q_cap = 200;
    TruncatedChain chain(sys, 0.1, opts);
    REQUIRE(chain.residual() < 1e-10);
    REQUIRE(chain.mean_queue(0) == Catch::Approx(2.0).margin(1e-6));
    REQUIRE(chain.pi_at({0}) == Catch::Approx(1.0 / 3.0).margin(1e-6));
    REQUIRE(chain.boundary_mass() < 1e-8);
    REQUIRE_FALSE(chain.truncation_warning());
}

TEST_CASE("oracle reproduces E[u] = eps") {
    auto sys = single_mu05();
    OracleOptions opts;
    opts.q_cap = 200;
    for (double eps : {0.2, 0.1, 0.05}) {
        TruncatedChain chain(sys, eps, opts);
        auto m = chain.exact_moments({0.0});
        REQUIRE(m.unused_sum == Catch::Approx(eps).margin(1e-8));
        REQUIRE(std::abs(m.identity_residual) < 1e-8);
    }
}

TEST_CASE("oracle MGF matches the geometric closed form") {
    auto sys = single_mu05();
    OracleOptions opts;
    opts.q_cap = 300;
    const double eps = 0.1, theta = 1.0;
    TruncatedChain chain(sys, eps, opts);
    auto m = chain.exact_moments({theta});
    const double lam = 0.4, mu = 0.5;
    const double rho = lam * (1 - mu) / (mu * (1 - lam));
    const double closed = (1 - rho) / (1 - rho * std::exp(theta * eps));
    REQUIRE(m.mgf[0] == Catch::Approx(closed).margin(1e-8));
}

TEST_CASE("zero arrivals collapse the stationary law to the origin") {
    SystemModel sys;
    sys.kind = SystemKind::single;
    sys.arrival_family = FamilySpec{"pmf", {{"fixed", 1.0}}, {{0}}, {1.0}};
    sys.arrival_override = make_point_mass({0});
    sys.service = make_bernoulli_scalar(0.5);
    sys.finalize();
    OracleOptions opts;
    opts.q_cap = 30;
    TruncatedChain chain(sys, 0.1, opts);
    REQUIRE(chain.pi_at({0}) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("jsq symmetric servers give exchangeable queues") {
    auto sys = lb_n2(PolicyKind::jsq);
    OracleOptions opts;
    opts.q_cap = 50;
    TruncatedChain chain(sys, 0.2, opts);
    REQUIRE(chain.mean_queue(0) == Catch::Approx(chain.mean_queue(1)).margin(1e-9));
    auto m = chain.exact_moments({0.0});
    REQUIRE(m.unused_sum == Catch::Approx(0.2).margin(1e-8));
}

TEST_CASE("simulator confidence intervals cover oracle values") {
    OracleOptions opts;
    opts.q_cap = 60;
    SimConfig cfg;
    cfg.measure_slots = 400000;
    cfg.seed = 1;
    cfg.theta_grid = {-1.0, 0.0, 1.0};
    for (PolicyKind policy : {PolicyKind::jsq, PolicyKind::po2}) {
        auto sys = lb_n2(policy);
        for (double eps : {0.2, 0.1}) {
            INFO(policy_name(policy) << " eps " << eps);
            TruncatedChain chain(sys, eps, opts);
            REQUIRE(chain.boundary_mass() < 1e-8);
            auto om = chain.exact_moments(cfg.theta_grid);
            auto est = run(sys, eps, cfg);
            REQUIRE(est.scaled_parallel_mean.covers(om.scaled_mean));
            REQUIRE(est.unused_sum.covers(om.unused_sum));
            for (std::size_t t = 0; t < cfg.theta_grid.size(); ++t) {
                INFO("theta " << cfg.theta_grid[t]);
                REQUIRE(est.mgf[t].est.covers(om.mgf[t]));
            }
        }
    }
}

TEST_CASE("generalized switch oracle honors the weighted drift identity") {
    SystemModel sys;
    sys.kind = SystemKind::gs;
    sys.n = 2;
    sys.policy = PolicyKind::maxweight;
    sys.arrival_family = FamilySpec{"bernoulli", {}, {}, {}};
    sys.schedules.per_state = {{{0, 0}, {2, 0}, {0, 2}}, {{0, 0}, {1, 0}, {0, 1}}};
    sys.channel = ChannelDist{{"t1", "t2"}, {0.5, 0.5}};
    sys.r = {0.75, 0.75};
    sys.finalize();
    OracleOptions opts;
    opts.q_cap = 40;
    TruncatedChain chain(sys, 0.2, opts);
    auto m = chain.exact_moments({0.0});
    REQUIRE(std::abs(m.identity_residual) < 1e-7);
    // E[<c, s>] stays inside the capacity region
    REQUIRE(m.weighted_service <= sys.b + 1e-9);
}

TEST_CASE("state explosion raises an unsupported-scale error") {
    auto sys = lb_n2(PolicyKind::jsq);
    OracleOptions opts;
    opts.q_cap = 4000;  // (4001)^2 > 1e7
    REQUIRE_THROWS_AS(TruncatedChain(sys, 0.2, opts), unsupported_scale_error);
}

TEST_CASE("tiny caps trip the truncation warning") {
    auto sys = single_mu05();
    OracleOptions opts;
    opts.q_cap = 4;
    TruncatedChain chain(sys, 0.05, opts);
    REQUIRE(chain.truncation_warning());
    REQUIRE(chain.saturation_mass() > 0.0);
}
