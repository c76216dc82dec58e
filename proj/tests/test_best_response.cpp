#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mfg/best_response.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

std::vector<SpatialMeasure> constant_flow(const TimeGrid& grid, const SpatialMeasure& m) {
    return std::vector<SpatialMeasure>(grid.nodes(), m);
}
}  // namespace

TEST_CASE("free motion stays put", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L(1.0);  // |v|^2
    ZeroCoupling zero;
    TimeGrid grid(1.0, 16);
    auto flow = constant_flow(grid, SpatialMeasure::dirac(v2(0, 0)));

    BestResponseConfig cfg;
    Vec x = v2(0.3, -0.2);
    auto res = best_response(*disc, x, flow, grid, L, zero, zero, cfg, 1);
    CHECK(res.value == 0.0);
    CHECK((res.arc.nodes.colwise() - x).norm() == 0.0);
    CHECK(res.converged);
}

TEST_CASE("rejects infeasible starts", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L;
    ZeroCoupling zero;
    TimeGrid grid(1.0, 4);
    auto flow = constant_flow(grid, SpatialMeasure::dirac(v2(0, 0)));
    BestResponseConfig cfg;
    CHECK_THROWS_AS(best_response(*disc, v2(1.2, 0.0), flow, grid, L, zero, zero, cfg),
                    InfeasibleStart);
}

TEST_CASE("quadratic target matches the straight-line oracle", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L(0.5);
    ZeroCoupling F;
    Vec zstar = v2(0.4, 0.1);
    QuadraticTargetCoupling G(zstar);
    double T = 1.0;
    TimeGrid grid(T, 16);
    auto flow = constant_flow(grid, SpatialMeasure::dirac(v2(0, 0)));

    BestResponseConfig cfg;
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> unif(-0.6, 0.6);
    for (int trial = 0; trial < 8; ++trial) {
        Vec x = v2(unif(rng), unif(rng));
        auto res = best_response(*disc, x, flow, grid, L, F, G, cfg, trial);

        // brute force restricted to straight lines x -> x + s (zstar - x)
        Vec d = zstar - x;
        auto line_cost = [&](double s) {
            return s * s * d.squaredNorm() / (2.0 * T) + (1.0 - s) * (1.0 - s) * d.squaredNorm();
        };
        auto [s_best, oracle_value] = oracle::golden_min(line_cost, -0.5, 1.5);
        CHECK(res.value == Catch::Approx(oracle_value).margin(1e-3));
        CHECK(res.converged);

        // classical LQ value for reference: |x - z*|^2 / (1 + 2T)
        CHECK(res.value == Catch::Approx(d.squaredNorm() / (1.0 + 2.0 * T)).margin(1e-3));

        // straight-line geometry: interior nodes collinear with x and zstar
        for (int k = 1; k < grid.nodes(); ++k) {
            Vec p = res.arc.nodes.col(k) - x;
            double cross = p[0] * d[1] - p[1] * d[0];
            CHECK(std::abs(cross) < 1e-4);
        }
    }
}

TEST_CASE("target behind the wall lands on the boundary", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L(0.5);
    ZeroCoupling F;
    Vec zstar = v2(1.6, 0.3);  // outside the closure
    QuadraticTargetCoupling G(zstar);
    double T = 1.0;
    TimeGrid grid(T, 1);  // coarse 2-node grid
    auto flow = constant_flow(grid, SpatialMeasure::dirac(v2(0, 0)));

    Vec x = v2(0.2, 0.0);
    BestResponseConfig cfg;
    cfg.multistart_count = 6;
    auto res = best_response(*disc, x, flow, grid, L, F, G, cfg, 5);

    // exhaustive search over terminal nodes on the boundary
    double best_boundary = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4096; ++i) {
        double th = 2.0 * M_PI * i / 4096;
        Vec y = v2(std::cos(th), std::sin(th));
        double c = (y - x).squaredNorm() / (2.0 * T) + (y - zstar).squaredNorm();
        best_boundary = std::min(best_boundary, c);
    }
    CHECK(res.value == Catch::Approx(best_boundary).margin(1e-3));
    // terminal node sits on the boundary: the unconstrained pull is outward
    CHECK(std::abs(disc->signed_distance(res.arc.end())) < 1e-6);
}

TEST_CASE("best responses satisfy the energy certificate", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L(0.5);
    auto conv = std::make_shared<ConvolutionCoupling>(disc, 0.4, 0.6, 0.0, 21);
    ZeroCoupling G;
    TimeGrid grid(1.0, 16);

    Mat pts(2, 3);
    pts.col(0) = v2(0.1, 0.0);
    pts.col(1) = v2(0.15, 0.05);
    pts.col(2) = v2(-0.2, 0.1);
    Vec w = Vec::Constant(3, 1.0 / 3.0);
    SpatialMeasure m0(pts, w);
    auto flow = constant_flow(grid, m0);

    double K = holder_constant(L, *conv, G, grid.horizon, *disc);
    BestResponseConfig cfg;
    for (int i = 0; i < 3; ++i) {
        auto res = best_response(*disc, m0.point(i), flow, grid, L, *conv, G, cfg, 7 + i);
        CHECK(res.arc.energy_norm() <= K + 1e-6);
        // comparison bound: never worse than staying put
        double constant_cost = total_cost(Arc::constant(grid, m0.point(i)), flow, L, *conv, G);
        CHECK(res.value <= constant_cost + 1e-12);
        // feasibility of every node
        CHECK(res.arc.feasible(*disc, cfg.feasibility(*disc)));
    }
}

TEST_CASE("exploitability vanishes for constant arcs under free motion", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L(1.0);
    ZeroCoupling zero;
    TimeGrid grid(1.0, 8);
    Mat pts(2, 2);
    pts.col(0) = v2(0.2, 0.2);
    pts.col(1) = v2(-0.3, 0.1);
    SpatialMeasure m0(pts, Vec::Constant(2, 0.5));
    ArcMeasure eta = ArcMeasure::constant_arcs(grid, m0);

    BestResponseConfig cfg;
    auto res = exploitability(*disc, eta, L, zero, zero, cfg, 3);
    CHECK(res.value == 0.0);
    CHECK(res.all_converged);
}

TEST_CASE("exploitability equals the known cost gap", "[bestresponse]") {
    auto disc = DiscDomain::unit(2, 0.5);
    KineticLagrangian L(0.5);
    ZeroCoupling F;
    Vec zstar = v2(0.4, 0.0);
    QuadraticTargetCoupling G(zstar);
    double T = 1.0;
    TimeGrid grid(T, 16);

    Vec x = v2(-0.2, 0.1);
    ArcMeasure eta = ArcMeasure::constant_arcs(grid, SpatialMeasure::dirac(x));

    // staying put costs G(x); the best response earns the LQ value
    double expected_gap =
        (x - zstar).squaredNorm() - (x - zstar).squaredNorm() / (1.0 + 2.0 * T);
    BestResponseConfig cfg;
    auto res = exploitability(*disc, eta, L, F, G, cfg, 11);
    CHECK(res.value == Catch::Approx(expected_gap).margin(1e-3));
    CHECK(res.value >= 0.0);
}
