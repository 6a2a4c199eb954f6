#include <catch2/catch_amalgamated.hpp>

#include "htq/dynamics.hpp"
#include "htq/rng.hpp"

using namespace htq;

TEST_CASE("step arithmetic without idling") {
    auto rec = step({3}, {1}, {2});
    REQUIRE(rec.q_next == IVec{2});
    REQUIRE(rec.u == IVec{0});
}

TEST_CASE("step forced idling when service exceeds work") {
    auto rec = step({0}, {1}, {3});
    REQUIRE(rec.q_next == IVec{0});
    REQUIRE(rec.u == IVec{2});
}

TEST_CASE("step is per-coordinate") {
    auto rec = step({2, 0}, {0, 1}, {3, 0});
    REQUIRE(rec.q_next == IVec{0, 1});
    REQUIRE(rec.u == IVec{1, 0});
}

TEST_CASE("step rejects dimension mismatch") {
    REQUIRE_THROWS_AS(step({1, 2}, {1}, {0, 0}), config_error);
}

TEST_CASE("step is deterministic") {
    auto a = step({5, 1, 0}, {2, 0, 1}, {1, 3, 0});
    auto b = step({5, 1, 0}, {2, 0, 1}, {1, 3, 0});
    REQUIRE(a.q_next == b.q_next);
    REQUIRE(a.u == b.u);
}

TEST_CASE("complementarity and unused-service bound hold on random slots") {
    Rng rng(7);
    QueueState q(4, 0);
    for (long long slot = 0; slot < 20000; ++slot) {
        IVec a(4), s(4);
        for (int i = 0; i < 4; ++i) {
            a[i] = static_cast<long long>(rng.below(4));
            s[i] = static_cast<long long>(rng.below(5));
        }
        auto rec = step(q, a, s);
        for (int i = 0; i < 4; ++i) {
            REQUIRE(rec.q_next[i] * rec.u[i] == 0);
            REQUIRE(rec.u[i] >= 0);
            REQUIRE(rec.u[i] <= rec.s[i]);
            REQUIRE(rec.q_next[i] == rec.q[i] + rec.a[i] - rec.s[i] + rec.u[i]);
        }
        REQUIRE_NOTHROW(check_slot(rec, 3, 4, slot));
        q = rec.q_next;
    }
}

TEST_CASE("check_slot names the slot on a violated record") {
    auto rec = step({2}, {1}, {1});
    rec.u[0] = 5;  // corrupt
    try {
        check_slot(rec, -1, -1, 42);
        FAIL("expected invariant_violation");
    } catch (const invariant_violation& e) {
        REQUIRE(e.slot == 42);
    }
}
