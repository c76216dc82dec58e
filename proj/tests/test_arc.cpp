#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mfg/arc.hpp"
#include "mfg/geometry.hpp"

using namespace mfg;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

Arc random_arc(const Domain& dom, TimeGrid grid, std::mt19937_64& rng, double scale = 0.8) {
    std::uniform_real_distribution<double> unif(-scale, scale);
    Mat nodes(dom.dim(), grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) {
        Vec x(dom.dim());
        do {
            for (int i = 0; i < dom.dim(); ++i) x[i] = unif(rng);
        } while (!dom.contains(x));
        nodes.col(k) = x;
    }
    return Arc(grid, std::move(nodes));
}
}  // namespace

TEST_CASE("evaluate interpolates linearly", "[arc]") {
    TimeGrid grid(1.0, 1);
    Arc line = Arc::line(grid, v2(0, 0), v2(1, 0));
    CHECK((line.evaluate(0.5) - v2(0.5, 0)).norm() < 1e-15);

    Arc still = Arc::constant(TimeGrid(2.0, 4), v2(0.3, -0.2));
    for (double t : {0.0, 0.37, 1.0, 2.0}) CHECK((still.evaluate(t) - v2(0.3, -0.2)).norm() == 0.0);

    CHECK_THROWS_AS(line.evaluate(-0.1), OutOfHorizon);
    CHECK_THROWS_AS(line.evaluate(1.1), OutOfHorizon);
}

TEST_CASE("evaluate matches the convex-combination formula", "[arc]") {
    TimeGrid grid(1.0, 9);  // 10 nodes
    std::mt19937_64 rng(3);
    auto disc = DiscDomain::unit();
    Arc arc = random_arc(*disc, grid, rng);
    double dt = grid.dt();
    double t = 3.4 * dt;  // between nodes 3 and 4
    double w = (t - 3 * dt) / dt;
    Vec expected = (1.0 - w) * arc.nodes.col(3) + w * arc.nodes.col(4);
    CHECK((arc.evaluate(t) - expected).norm() < 1e-15);
    // exact at nodes
    for (int k = 0; k < grid.nodes(); ++k)
        CHECK((arc.evaluate(grid.node(k)) - arc.nodes.col(k)).norm() == 0.0);
}

TEST_CASE("energy norm", "[arc]") {
    CHECK(Arc::constant(TimeGrid(1.0, 4), v2(0.1, 0.2)).energy_norm() == 0.0);

    double T = 2.0;
    Arc line = Arc::line(TimeGrid(T, 8), v2(0, 0), v2(0.6, -0.3));
    CHECK(line.energy_norm() == Catch::Approx(v2(0.6, -0.3).norm() / std::sqrt(T)).epsilon(1e-12));

    // segment-by-segment quadrature oracle
    std::mt19937_64 rng(11);
    auto disc = DiscDomain::unit();
    TimeGrid grid(1.5, 7);  // 8 nodes
    Arc arc = random_arc(*disc, grid, rng);
    double acc = 0.0;
    for (int k = 0; k < grid.steps; ++k) {
        Vec v = (arc.nodes.col(k + 1) - arc.nodes.col(k)) / grid.dt();
        acc += v.squaredNorm() * grid.dt();
    }
    CHECK(arc.energy_norm() == Catch::Approx(std::sqrt(acc)).epsilon(1e-14));
}

TEST_CASE("holder modulus", "[arc]") {
    CHECK(Arc::constant(TimeGrid(1.0, 3), v2(0, 0)).holder_modulus() == 0.0);

    double T = 2.0;
    Arc line = Arc::line(TimeGrid(T, 6), v2(-0.2, 0), v2(0.4, 0.3));
    CHECK(line.holder_modulus() ==
          Catch::Approx((v2(0.4, 0.3) - v2(-0.2, 0)).norm() / std::sqrt(T)).epsilon(1e-12));

    std::mt19937_64 rng(19);
    auto disc = DiscDomain::unit();
    for (int trial = 0; trial < 30; ++trial) {
        Arc arc = random_arc(*disc, TimeGrid(1.0, 12), rng);
        CHECK(arc.holder_modulus() <= arc.energy_norm() + 1e-12);
    }
}

TEST_CASE("project_arc zero translation is the identity", "[arc]") {
    std::mt19937_64 rng(29);
    auto disc = DiscDomain::unit(2, 0.5);
    Arc arc = random_arc(*disc, TimeGrid(1.0, 10), rng);
    Arc moved = project_arc(*disc, arc, arc.start());
    CHECK((moved.nodes - arc.nodes).norm() == 0.0);
}

TEST_CASE("project_arc interior translation is a pure shift", "[arc]") {
    auto disc = DiscDomain::unit(2, 0.5);
    std::mt19937_64 rng(31);
    Arc arc = random_arc(*disc, TimeGrid(1.0, 6), rng, 0.4);  // well inside
    Vec delta = v2(0.05, -0.04);
    Arc moved = project_arc(*disc, arc, arc.start() + delta);
    for (int k = 0; k < arc.grid.nodes(); ++k)
        CHECK((moved.nodes.col(k) - (arc.nodes.col(k) + delta)).norm() < 1e-14);
}

TEST_CASE("project_arc hugging the boundary", "[arc]") {
    auto disc = DiscDomain::unit(2, 0.5);
    TimeGrid grid(1.0, 16);
    // arc sliding along the boundary at radius 1
    Mat nodes(2, grid.nodes());
    for (int k = 0; k < grid.nodes(); ++k) {
        double th = 0.2 + 0.8 * k / grid.steps;
        nodes.col(k) = v2(std::cos(th), std::sin(th));
    }
    Arc arc(grid, nodes);
    Vec delta = 0.05 * v2(std::cos(0.2), std::sin(0.2));  // outward at the start
    Vec new_start = disc->project_to_closure(arc.start() + delta);
    Arc moved = project_arc(*disc, arc, new_start);

    double shift = (new_start - arc.start()).norm();
    for (int k = 0; k < grid.nodes(); ++k) {
        CHECK(disc->signed_distance(moved.nodes.col(k)) <= 1e-12);
        CHECK((moved.nodes.col(k) - arc.nodes.col(k)).norm() <= 2.0 * shift + 1e-12);
    }
    CHECK((moved.start() - new_start).norm() == 0.0);
}

TEST_CASE("project_arc speed and feasibility invariants", "[arc]") {
    auto disc = DiscDomain::unit(2, 0.5);
    double c_dom = disc->projection_speed_factor();
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    TimeGrid grid(1.0, 12);
    double tol = default_feasibility_tol(*disc);
    for (int trial = 0; trial < 60; ++trial) {
        Arc arc = random_arc(*disc, grid, rng, 0.95);
        Vec delta = 0.08 * v2(unif(rng), unif(rng));
        Vec target = disc->project_to_closure(arc.start() + delta);
        Arc moved = project_arc(*disc, arc, target);
        CHECK(moved.feasible(*disc, tol));
        double dt = grid.dt();
        for (int k = 0; k < grid.steps; ++k) {
            double vin = (arc.nodes.col(k + 1) - arc.nodes.col(k)).norm() / dt;
            double vout = (moved.nodes.col(k + 1) - moved.nodes.col(k)).norm() / dt;
            CHECK(vout <= c_dom * vin + 1e-9);
        }
    }
}

TEST_CASE("project_arc rejects translations past the tube", "[arc]") {
    auto disc = DiscDomain::unit(2, 0.1);
    Arc arc = Arc::constant(TimeGrid(1.0, 2), v2(0.95, 0.0));
    CHECK_THROWS_AS(project_arc(*disc, arc, v2(0.5, 0.0)), TubeExceeded);
}

TEST_CASE("evaluate is Lipschitz with the max segment speed", "[arc]") {
    std::mt19937_64 rng(53);
    auto disc = DiscDomain::unit();
    Arc arc = random_arc(*disc, TimeGrid(1.0, 8), rng);
    double lip = arc.max_segment_speed();
    std::uniform_real_distribution<double> ts(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        double t1 = ts(rng), t2 = ts(rng);
        CHECK((arc.evaluate(t1) - arc.evaluate(t2)).norm() <= lip * std::abs(t1 - t2) + 1e-12);
    }
}
