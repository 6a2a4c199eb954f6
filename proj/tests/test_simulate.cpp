#include <catch2/catch_amalgamated.hpp>

#include <cmath>

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

SystemModel lb_jsq_n2() {
    SystemModel sys;
    sys.kind = SystemKind::lb;
    sys.n = 2;
    sys.policy = PolicyKind::jsq;
    sys.arrival_family = FamilySpec{"bernoulli", {}, {}, {}};
    sys.service = make_bernoulli_vec({0.5, 0.5});
    sys.finalize();
    return sys;
}

SimConfig quick(long long slots = 1000000) {
    SimConfig cfg;
    cfg.measure_slots = slots;
    cfg.seed = 1;
    cfg.theta_grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
    return cfg;
}

}  // namespace

TEST_CASE("empty system: zero arrivals keep the queue at zero") {
    SystemModel sys;
    sys.kind = SystemKind::single;
    sys.arrival_family = FamilySpec{"pmf", {{"fixed", 1.0}}, {{0}}, {1.0}};
    sys.arrival_override = make_point_mass({0});
    sys.service = make_bernoulli_scalar(0.5);
    sys.finalize();
    auto est = run(sys, 0.1, quick(100000));
    REQUIRE(est.scaled_parallel_mean.mean == 0.0);
    for (const auto& m : est.mgf) REQUIRE(m.est.mean == 1.0);
}

TEST_CASE("mgf at theta zero is exactly one") {
    auto est = run(single_mu05(), 0.1, quick(200000));
    bool found = false;
    for (const auto& m : est.mgf)
        if (m.theta == 0.0) {
            found = true;
            REQUIRE(m.est.mean == 1.0);
            REQUIRE(m.est.ci_lo == 1.0);
            REQUIRE(m.est.ci_hi == 1.0);
        }
    REQUIRE(found);
}

TEST_CASE("single server near the birth-death stationary values") {
    // rho = lam(1-mu)/(mu(1-lam)) = 2/3 at eps = 0.1, so E[q] = 2
    auto est = run(single_mu05(), 0.1, quick(1000000));
    REQUIRE(est.scaled_parallel_mean.covers(0.2));
    REQUIRE(est.unused_sum.covers(0.1));
    REQUIRE(est.identity_residual.covers(0.0));
}

TEST_CASE("every simulated slot passed the exact invariants") {
    SimConfig cfg = quick(100000);
    auto est = run(single_mu05(), 0.2, cfg);
    REQUIRE(est.checked_slots == cfg.effective_warmup(0.2) + cfg.measure_slots);
    REQUIRE(est.slots == cfg.measure_slots);
}

TEST_CASE("identical seeds reproduce estimates bitwise") {
    auto a = run(lb_jsq_n2(), 0.1, quick(200000));
    auto b = run(lb_jsq_n2(), 0.1, quick(200000));
    REQUIRE(a.scaled_parallel_mean.mean == b.scaled_parallel_mean.mean);
    REQUIRE(a.perp_sq.mean == b.perp_sq.mean);
    REQUIRE(a.unused_sum.mean == b.unused_sum.mean);
    for (std::size_t t = 0; t < a.mgf.size(); ++t) REQUIRE(a.mgf[t].est.mean == b.mgf[t].est.mean);
    REQUIRE(a.thinned == b.thinned);

    SimConfig other = quick(200000);
    other.replication_id = 1;
    auto c = run(lb_jsq_n2(), 0.1, other);
    REQUIRE(a.scaled_parallel_mean.mean != c.scaled_parallel_mean.mean);
}

TEST_CASE("transform-identity residual vanishes for the single server") {
    auto est = run(single_mu05(), 0.1, quick(1000000));
    for (const auto& r : est.residual) {
        if (r.theta == 0.0) {
            REQUIRE(r.est.mean == 0.0);
        } else {
            INFO("theta " << r.theta);
            REQUIRE(r.est.covers(0.0));
            REQUIRE(std::abs(r.est.mean) < 1e-4);  // telescoping sum over the path
        }
    }
}

TEST_CASE("load balancing satisfies the unused-service identity and moment bound") {
    auto est = run(lb_jsq_n2(), 0.1, quick(1000000));
    REQUIRE(est.unused_sum.covers(0.1));
    // E[(sum u)^2] <= eps * n * S_max since sum u <= n S_max pathwise
    REQUIRE(est.unused_sum_sq.mean <= 0.1 * 2 * 1 * 1.05);
    // perpendicular component exists but is O(1)
    REQUIRE(est.perp_sq.mean > 0.0);
    REQUIRE(est.perp_sq.mean < 5.0);
}

TEST_CASE("epsilon outside the admissible interval is rejected") {
    REQUIRE_THROWS_AS(run(single_mu05(), 0.5, quick(10000)), config_error);
    REQUIRE_THROWS_AS(run(single_mu05(), 0.0, quick(10000)), config_error);
    REQUIRE_THROWS_AS(run(single_mu05(), -0.1, quick(10000)), config_error);
}

TEST_CASE("overflow guard rejects an out-of-range theta grid") {
    SimConfig cfg = quick(10000);
    cfg.theta_grid = {400.0};
    REQUIRE_THROWS_AS(run(single_mu05(), 0.2, cfg), config_error);
}

TEST_CASE("measure slots must split evenly into batches") {
    SimConfig cfg = quick(100001);
    REQUIRE_THROWS_AS(run(single_mu05(), 0.2, cfg), config_error);
}

TEST_CASE("generalized switch run satisfies the weighted drift identity") {
    SystemModel sys;
    sys.kind = SystemKind::gs;
    sys.n = 2;
    sys.policy = PolicyKind::maxweight;
    sys.arrival_family = FamilySpec{"bernoulli", {}, {}, {}};
    sys.schedules.per_state = {{{0, 0}, {2, 0}, {0, 2}}, {{0, 0}, {1, 0}, {0, 1}}};
    sys.channel = ChannelDist{{"t1", "t2"}, {0.5, 0.5}};
    sys.r = {0.75, 0.75};
    sys.finalize();
    REQUIRE(sys.b == Catch::Approx(1.0606601717798214).margin(1e-9));
    REQUIRE(sys.bdist.variance == Catch::Approx(0.125).margin(1e-9));

    auto est = run(sys, 0.1, quick(1000000));
    // E[<c,u>] + b - E[<c,s>] = eps
    REQUIRE(est.identity_residual.covers(0.0));
    REQUIRE(std::abs(est.unused_weighted.mean + sys.b - est.weighted_service.mean - 0.1) < 0.01);
    // mean weighted service never exceeds the facet offset (3 SE slack)
    REQUIRE(est.weighted_service.mean <= sys.b + 3 * est.weighted_service.half_width());
}

TEST_CASE("switch run saturates row one and honors its identity") {
    SystemModel sys;
    sys.kind = SystemKind::iq_switch;
    sys.N = 2;
    sys.policy = PolicyKind::switch_maxweight;
    sys.arrival_family = FamilySpec{"bernoulli", {}, {}, {}};
    sys.finalize();
    REQUIRE(sys.eps_eff(0.1) == Catch::Approx(0.1 / std::sqrt(2.0)).margin(1e-12));

    auto est = run(sys, 0.1, quick(500000));
    // row-1 weighted service is identically b = 1/sqrt(2) under full matchings
    REQUIRE(est.weighted_service.mean == Catch::Approx(sys.b).margin(1e-12));
    REQUIRE(est.identity_residual.covers(0.0));
}

TEST_CASE("histogram and thinned samples are populated") {
    auto est = run(single_mu05(), 0.1, quick(200000));
    REQUIRE(est.hist.total == est.slots);
    REQUIRE(!est.thinned.empty());
    REQUIRE(static_cast<long long>(est.thinned.size()) <= est.slots / 10 + 1);
}
