#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mfg/geometry.hpp"
#include "oracles.hpp"

using namespace mfg;

namespace {
Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}
}  // namespace

TEST_CASE("disc signed distance", "[geometry]") {
    auto disc = DiscDomain::unit();
    CHECK(disc->signed_distance(v2(0, 0)) == Catch::Approx(-1.0));
    CHECK(disc->signed_distance(v2(2, 0)) == Catch::Approx(1.0));
    CHECK(disc->signed_distance(v2(0, 1)) == Catch::Approx(0.0).margin(1e-15));

    Vec bad(2);
    bad << std::numeric_limits<double>::quiet_NaN(), 0.0;
    CHECK_THROWS_AS(disc->signed_distance(bad), std::invalid_argument);
}

TEST_CASE("disc projection", "[geometry]") {
    DiscDomain disc(Vec::Zero(2), 1.0, 1.5);
    Vec p = disc.project_to_closure(v2(2, 0));
    CHECK((p - v2(1, 0)).norm() < 1e-14);

    // interior points are fixed
    CHECK((disc.project_to_closure(v2(0.5, 0)) - v2(0.5, 0)).norm() == 0.0);

    DiscDomain tight(Vec::Zero(2), 1.0, 0.5);
    CHECK_THROWS_AS(tight.project_to_closure(v2(2, 0)), TubeExceeded);
}

TEST_CASE("projection invariants on the tube", "[geometry]") {
    auto disc = DiscDomain::unit(2, 0.6);
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> radius(0.0, 1.55);
    for (int trial = 0; trial < 200; ++trial) {
        Vec x = v2(std::cos(angle(rng)), std::sin(angle(rng))) * radius(rng);
        if (disc->distance(x) >= disc->tube_radius()) continue;
        Vec p = disc->project_to_closure(x);
        CHECK(disc->signed_distance(p) <= 1e-12);
        CHECK((p - x).norm() == Catch::Approx(disc->distance(x)).margin(1e-12));
        // idempotence
        CHECK((disc->project_to_closure(p) - p).norm() <= 1e-12);
    }
}

TEST_CASE("translation projection distance bound", "[geometry]") {
    // mirrors the arc projection estimate: a feasible point translated by
    // delta projects back within 2|delta| of the original
    auto disc = DiscDomain::unit(2, 0.6);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        Vec y = v2(unif(rng), unif(rng));
        if (disc->signed_distance(y) > 0.0) continue;
        Vec delta = 0.3 * v2(unif(rng), unif(rng));
        Vec x = y + delta;
        if (disc->distance(x) >= disc->tube_radius()) continue;
        Vec p = disc->project_to_closure(x);
        CHECK((p - y).norm() <= 2.0 * delta.norm() + 1e-12);
    }
}

TEST_CASE("disc gradient matches finite differences", "[geometry]") {
    auto disc = DiscDomain::unit(2, 0.6);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-1.3, 1.3);
    double h = 1e-6;
    int tested = 0;
    while (tested < 50) {
        Vec x = v2(unif(rng), unif(rng));
        if (std::abs(disc->signed_distance(x)) >= 0.5 || x.norm() < 0.3) continue;
        ++tested;
        Vec g = disc->gradient(x);
        CHECK(std::abs(g.norm() - 1.0) < 1e-12);
        for (int i = 0; i < 2; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            double fd = (disc->signed_distance(xp) - disc->signed_distance(xm)) / (2 * h);
            CHECK(g[i] == Catch::Approx(fd).margin(1e-8));
        }
    }
}

TEST_CASE("disc hessian is the analytic tangential projector", "[geometry]") {
    auto disc = DiscDomain::unit(2, 0.6);
    Vec x = v2(1.2, 0.4);
    Mat h = disc->hessian(x);
    double n = x.norm();
    Vec u = x / n;
    Mat expected = (Mat::Identity(2, 2) - u * u.transpose()) / n;
    CHECK((h - expected).norm() < 1e-12);
}

TEST_CASE("superellipse boundary and distance", "[geometry]") {
    SuperellipseDomain dom(1.2, 0.8, 0.25);

    // points constructed on the level set evaluate to distance zero
    for (double theta : {0.3, 0.7, 1.2, 2.0, 3.4, 4.4, 5.9}) {
        Vec p = dom.param_point(theta);
        CHECK(std::abs(dom.level(p)) < 1e-12);
        CHECK(std::abs(dom.signed_distance(p)) < 1e-10);
    }

    // interior and exterior signs
    CHECK(dom.signed_distance(v2(0, 0)) < 0.0);
    CHECK(dom.signed_distance(v2(1.4, 0.9)) > 0.0);
}

TEST_CASE("superellipse closest point against sampling oracle", "[geometry]") {
    SuperellipseDomain dom(1.2, 0.8, 0.25);
    auto curve = [&](double th) { return dom.param_point(th); };
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> th_dist(0.0, 2.0 * M_PI);

    for (int trial = 0; trial < 25; ++trial) {
        double theta = th_dist(rng);
        Vec q = dom.param_point(theta);
        // a point at exact offset 0.1 along the outward normal
        Vec normal = dom.gradient(q);
        Vec x = q + 0.1 * normal;
        auto [p_oracle, d_oracle] = oracle::closest_on_curve(curve, x);
        CHECK(dom.distance(x) == Catch::Approx(d_oracle).margin(1e-8));

        Vec p = dom.project_to_closure(x);
        CHECK(std::abs(dom.signed_distance(p)) < 1e-8);
        CHECK((p - x).norm() == Catch::Approx(0.1).margin(1e-8));
    }
}

TEST_CASE("tube validator", "[geometry]") {
    auto disc = DiscDomain::unit(2, 0.5);
    auto rep = disc->validate_tube(100);
    CHECK(rep.ok);
    CHECK(rep.worst_eikonal_error < 1e-6);

    SuperellipseDomain super(1.2, 0.8, 0.2);
    auto rep2 = super.validate_tube(80);
    CHECK(rep2.ok);
}

TEST_CASE("level-set ellipse domain", "[geometry]") {
    double a = 1.1, b = 0.7;
    Box box{v2(-1.4, -1.0), v2(1.4, 1.0)};
    auto g = [a, b](const Vec& x) {
        return x[0] * x[0] / (a * a) + x[1] * x[1] / (b * b) - 1.0;
    };
    auto grad = [a, b](const Vec& x) {
        return Vec(v2(2.0 * x[0] / (a * a), 2.0 * x[1] / (b * b)));
    };
    LevelSetDomain dom(g, grad, box, 0.2, 96);

    CHECK(dom.signed_distance(v2(0, 0)) < 0.0);

    auto curve = [&](double th) { return v2(a * std::cos(th), b * std::sin(th)); };
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> th_dist(0.0, 2.0 * M_PI);
    for (int trial = 0; trial < 15; ++trial) {
        Vec q = curve(th_dist(rng));
        Vec n = grad(q).normalized();
        for (double s : {-0.12, -0.05, 0.05, 0.12}) {
            Vec x = q + s * n;
            auto [p_oracle, d_oracle] = oracle::closest_on_curve(curve, x);
            double expected = dom.contains(x) ? -d_oracle : d_oracle;
            CHECK(dom.signed_distance(x) == Catch::Approx(expected).margin(1e-7));
        }
    }

    auto rep = dom.validate_tube(60);
    CHECK(rep.ok);
}

TEST_CASE("projection speed factor is sane", "[geometry]") {
    auto disc = DiscDomain::unit(2, 0.5);
    // sup ||D^2 b|| over the tube of a unit disc is 1/(1-rho0) = 2
    CHECK(disc->projection_speed_factor() > 1.0);
    CHECK(disc->projection_speed_factor() < 1.0 + 1.1 * 0.5 * 2.5);
}
