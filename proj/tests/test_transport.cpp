#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mfg/transport.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

SpatialMeasure random_measure(std::mt19937_64& rng, int max_atoms) {
    std::uniform_int_distribution<int> natoms(1, max_atoms);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> wr(0.05, 1.0);
    int n = natoms(rng);
    Mat pts(2, n);
    Vec w(n);
    for (int i = 0; i < n; ++i) {
        pts.col(i) = v2(coord(rng), coord(rng));
        w[i] = wr(rng);
    }
    w /= w.sum();
    return SpatialMeasure(std::move(pts), std::move(w));
}
}  // namespace

TEST_CASE("d1 between diracs is the distance", "[transport]") {
    auto m1 = SpatialMeasure::dirac(v2(0.2, -0.3));
    auto m2 = SpatialMeasure::dirac(v2(-0.5, 0.4));
    CHECK(kantorovich_d1(m1, m2) == Catch::Approx((v2(0.2, -0.3) - v2(-0.5, 0.4)).norm()));
    CHECK(kantorovich_d1(m1, m1) == 0.0);
}

TEST_CASE("two-to-one split", "[transport]") {
    Mat pts(2, 2);
    pts.col(0) = v2(0, 0);
    pts.col(1) = v2(1, 0);
    SpatialMeasure m1(pts, Vec::Constant(2, 0.5));
    auto m2 = SpatialMeasure::dirac(v2(0.5, 0));
    // the 2x1 transport polytope has a single vertex: ship each half atom
    CHECK(kantorovich_d1(m1, m2) == Catch::Approx(0.5));
}

TEST_CASE("d1 equals vertex enumeration on random instances", "[transport]") {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 60; ++trial) {
        auto m1 = random_measure(rng, 4);
        auto m2 = random_measure(rng, 4);
        Mat cost = detail::pairwise_cost(m1, m2, 1);
        oracle::TransportVertexEnumerator oracle_lp(cost, m1.weights(), m2.weights());
        double expected = oracle_lp.solve();
        CHECK(kantorovich_d1(m1, m2) == Catch::Approx(expected).margin(1e-10));
    }
}

TEST_CASE("d2 equals vertex enumeration on squared costs", "[transport]") {
    std::mt19937_64 rng(4321);
    for (int trial = 0; trial < 25; ++trial) {
        auto m1 = random_measure(rng, 4);
        auto m2 = random_measure(rng, 4);
        Mat cost = detail::pairwise_cost(m1, m2, 2);
        oracle::TransportVertexEnumerator oracle_lp(cost, m1.weights(), m2.weights());
        double expected = std::sqrt(oracle_lp.solve());
        CHECK(kantorovich_d2(m1, m2) == Catch::Approx(expected).margin(1e-10));
    }
}

TEST_CASE("metric axioms on sampled triples", "[transport]") {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        auto a = random_measure(rng, 5);
        auto b = random_measure(rng, 5);
        auto c = random_measure(rng, 5);
        double ab = kantorovich_d1(a, b);
        double ba = kantorovich_d1(b, a);
        double ac = kantorovich_d1(a, c);
        double cb = kantorovich_d1(c, b);
        CHECK(ab == Catch::Approx(ba).margin(1e-12));
        CHECK(ab <= ac + cb + 1e-9);
        CHECK(ab >= 0.0);
    }
}

TEST_CASE("primal optimum meets the Lipschitz dual", "[transport]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 12; ++trial) {
        auto m1 = random_measure(rng, 6);
        auto m2 = random_measure(rng, 6);
        double primal = kantorovich_d1(m1, m2);
        double dual = oracle::lipschitz_dual_value(m1.points(), m1.weights(), m2.points(),
                                                   m2.weights(), primal);
        CHECK(dual <= primal + 1e-9);       // weak duality
        CHECK(primal - dual < 1e-6);        // strong duality reached by ascent
    }
}

TEST_CASE("optimal plan satisfies marginals and cost", "[transport]") {
    std::mt19937_64 rng(15);
    auto m1 = random_measure(rng, 5);
    auto m2 = random_measure(rng, 5);
    TransportPlan plan = optimal_transport_plan(m1, m2, 1);
    CHECK(plan.cost(1) == Catch::Approx(kantorovich_d1(m1, m2)).margin(1e-12));
}

TEST_CASE("identical measures with many atoms give exactly zero", "[transport]") {
    std::mt19937_64 rng(8);
    auto m = random_measure(rng, 6);
    CHECK(kantorovich_d1(m, m) == 0.0);
    CHECK(kantorovich_d2(m, m) == 0.0);
}

TEST_CASE("degenerate input is rejected", "[transport]") {
    auto m = SpatialMeasure::dirac(v2(0, 0));
    Vec empty_w;
    Mat empty_p(2, 0);
    auto empty = SpatialMeasure::unchecked(empty_p, empty_w);
    CHECK_THROWS_AS(kantorovich_d1(empty, m), std::invalid_argument);
    // dimension mismatch
    Vec one(1);
    one << 0.5;
    Mat p1(1, 1);
    p1.col(0) = one;
    auto m1d = SpatialMeasure(p1, Vec::Ones(1));
    CHECK_THROWS_AS(kantorovich_d1(m1d, m), std::invalid_argument);
}
