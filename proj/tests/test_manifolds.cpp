#include <doctest.h>

#include <cmath>
#include <numbers>

#include "heatlab/error.hpp"
#include "heatlab/harness.hpp"
#include "heatlab/manifolds.hpp"
#include "oracles.hpp"

using namespace heatlab;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::Io;
}
}  // namespace

TEST_CASE("spec mini-language") {
    CHECK(parse_manifold_spec("Circle:L=2").spec() == "circle:L=2");
    CHECK(parse_manifold_spec("EUCLIDEAN:n=3").dim() == 3);
    CHECK(parse_manifold_spec("h3").dim() == 3);
    const Manifold p = parse_manifold_spec("product(circle:L=6.2832;euclidean:n=1)");
    CHECK(p.dim() == 2);
    CHECK_FALSE(p.compact());
    CHECK(parse_manifold_spec(p.spec()).spec() == p.spec());
    CHECK(parse_manifold_spec("flattorus:L=1,2,3").dim() == 3);
    CHECK(parse_manifold_spec("revtorus:R=2,a=1").compact());

    try {
        parse_manifold_spec("circle:Q=2");
        FAIL("should not parse");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Parse);
        CHECK(std::string(e.what()).find("'q'") != std::string::npos);
    }
    CHECK(kind_of([] { parse_manifold_spec("klein:bottle"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_manifold_spec("circle:L=-1"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_manifold_spec("revtorus:R=1,a=2"); }) != ErrorKind::Io);
}

TEST_CASE("compactness and dimension") {
    CHECK_FALSE(Manifold::euclidean(2).compact());
    CHECK_FALSE(Manifold::hyperbolic3().compact());
    CHECK(Manifold::circle(1.0).compact());
    CHECK(Manifold::sphere2(1.0).compact());
    CHECK(Manifold::product(Manifold::circle(1.0), Manifold::sphere2(2.0)).compact());
    CHECK(Manifold::product(Manifold::circle(1.0), Manifold::sphere2(2.0)).dim() == 3);
}

TEST_CASE("points are validated") {
    const Manifold s = Manifold::sphere2(1.0);
    CHECK(kind_of([&] { make_point(s, {4.0, 0.0}); }) == ErrorKind::InvalidPoint);
    CHECK(kind_of([&] { make_point(s, {1.0}); }) == ErrorKind::InvalidPoint);
    const Manifold c = Manifold::circle(2.0);
    CHECK(make_point(c, {5.0}).coords[0] == Approx(1.0));
    CHECK(make_point(c, {-0.5}).coords[0] == Approx(1.5));
}

TEST_CASE("distances") {
    const Manifold c = Manifold::circle(2.0 * kPi);
    CHECK(distance(c, Point{{0.1}}, Point{{6.2}}) == Approx(2.0 * kPi - 6.1));
    const Manifold s = Manifold::sphere2(2.0);
    CHECK(distance(s, Point{{0.0, 0.0}}, Point{{kPi, 0.0}}) == Approx(2.0 * kPi));
    CHECK(distance(s, Point{{0.5 * kPi, 0.0}}, Point{{0.5 * kPi, 0.5 * kPi}}) == Approx(kPi));
    const Manifold h = Manifold::hyperbolic3();
    CHECK(distance(h, Point{{3.0, 0.3, 1.0}}, origin_point(h)) == Approx(3.0));
    // Opposite rays: d = r1 + r2.
    CHECK(distance(h, Point{{2.0, 0.5 * kPi, 0.0}}, Point{{1.5, 0.5 * kPi, kPi}}) == Approx(3.5));
    const Manifold e = Manifold::euclidean(2);
    const Manifold p = Manifold::product(c, e);
    CHECK(distance(p, Point{{0.0, 0.0, 0.0}}, Point{{1.0, 1.0, 1.0}}) == Approx(std::sqrt(3.0)));
}

TEST_CASE("torus of revolution geodesic distance on the grid") {
    const Manifold m = parse_manifold_spec("revtorus:R=2,a=1");
    CHECK(distance(m, Point{{0.0, 0.0}}, Point{{0.0, kPi}}) == Approx(kPi).epsilon(1e-6));
    // Along the outer equator (rho = 3) the u-circle is a geodesic; 8-neighbour
    // paths overestimate it by under 1%.
    CHECK(distance(m, Point{{0.0, 0.0}}, Point{{1.0, 0.0}}) == Approx(3.0).epsilon(1e-2));
}

TEST_CASE("distance gradient matches finite differences") {
    Rng rng(7);
    for (const char* spec : {"sphere2:r=1.5", "h3", "euclidean:n=3", "product(circle:L=6;sphere2:r=1)"}) {
        const Manifold m = parse_manifold_spec(spec);
        for (int trial = 0; trial < 20; ++trial) {
            Point x = rng.point(m, 4.0), y = rng.point(m, 4.0);
            if (m.as<Sphere2>() && (x.coords[0] < 0.2 || x.coords[0] > kPi - 0.2)) continue;
            if (m.as<Hyperbolic3>() && (x.coords[1] < 0.2 || x.coords[1] > kPi - 0.2 || x.coords[0] < 0.2)) continue;
            const auto g = distance_gradient(m, x, y);
            const ChartMetric cm = chart_metric(m, x);
            double norm = 0.0;
            for (double v : g) norm += v * v;
            CHECK(std::sqrt(norm) == Approx(1.0).epsilon(1e-9));
            for (std::size_t i = 0; i < g.size(); ++i) {
                auto f = [&](double s) {
                    Point z = x;
                    z.coords[i] += s;
                    return distance(m, z, y);
                };
                // Coordinate derivative = frame component / sqrt(g_ii).
                const double fd = oracle::derivative(f, 0.0, 1e-4);
                CHECK(fd == Approx(g[i] / std::sqrt(cm.inv_metric[i])).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("H3 distance gradient far from the origin") {
    const Manifold h = Manifold::hyperbolic3();
    const auto g = distance_gradient(h, Point{{20.0, 0.5 * kPi, 0.0}}, origin_point(h));
    CHECK(g[0] == Approx(1.0));
    CHECK(std::abs(g[1]) < 1e-12);
    const auto g2 = distance_gradient(h, Point{{30.0, 0.5 * kPi, 0.0}}, Point{{30.0, 0.5 * kPi, 1e-3}});
    CHECK(std::hypot(g2[0], g2[1], g2[2]) == Approx(1.0));
}

TEST_CASE("curvature") {
    CHECK(curvature_summary(Manifold::circle(1.0)).ricci_lower == 0.0);
    CHECK(curvature_summary(Manifold::sphere2(1.0)).ricci_lower == 0.0);
    CHECK(curvature_summary(Manifold::hyperbolic3()).ricci_lower == 2.0);
    const Manifold m = parse_manifold_spec("revtorus:R=2,a=1");
    const CurvatureSummary k = curvature_summary(m);
    CHECK(k.ricci_lower == Approx(1.0).epsilon(1e-10));
    CHECK(*k.gauss_min == Approx(-1.0).epsilon(1e-10));
    CHECK(*k.gauss_max == Approx(1.0 / 3.0).epsilon(1e-10));

    const ProfileCurve torus = ProfileCurve::torus(2.0, 1.0);
    std::vector<double> samples;
    for (int i = 0; i < 512; ++i) samples.push_back(torus.rho(2.0 * kPi * i / 512));
    const ProfileCurve sampled = ProfileCurve::sampled(samples, 1.0);
    for (int i = 0; i < 100; ++i) {
        const double v = 2.0 * kPi * (i + 0.3) / 100;
        const double exact = std::cos(v) / (2.0 + std::cos(v));
        CHECK(gauss_curvature(torus, v) == Approx(exact).epsilon(1e-10).scale(1.0));
        CHECK(gauss_curvature(sampled, v) == Approx(exact).epsilon(1e-5).scale(1.0));
    }
}

TEST_CASE("diameters") {
    auto eq = [](const DiameterEstimate& d, double v) {
        CHECK(d.lower == Approx(v));
        CHECK(d.upper == Approx(v));
    };
    eq(diameter_estimate(Manifold::circle(3.0)), 1.5);
    eq(diameter_estimate(Manifold::flat_torus({3.0, 4.0})), 2.5);
    eq(diameter_estimate(Manifold::sphere2(2.0)), 2.0 * kPi);
    const DiameterEstimate d = diameter_estimate(parse_manifold_spec("revtorus:R=2,a=1"));
    CHECK(d.lower <= d.upper);
    // Antipodal points on the outer equator are 3 pi apart along it; the true
    // diameter is at most that.
    CHECK(d.lower <= 3.0 * kPi);
    CHECK(d.upper >= kPi);
    CHECK(d.method.find("dijkstra") == 0);
}

TEST_CASE("ball volumes") {
    CHECK(ball_volume(Manifold::euclidean(3), Point{{0, 0, 0}}, 2.0) == Approx(4.0 / 3.0 * kPi * 8.0));
    CHECK(ball_volume(Manifold::circle(2.0), Point{{0.0}}, 0.4) == Approx(0.8));
    CHECK(ball_volume(Manifold::circle(2.0), Point{{0.0}}, 3.0) == Approx(2.0));
    const Manifold s = Manifold::sphere2(1.0);
    CHECK(ball_volume(s, Point{{0.0, 0.0}}, 1.0) == Approx(2.0 * kPi * (1.0 - std::cos(1.0))));
    CHECK(ball_volume(s, Point{{0.0, 0.0}}, 10.0) == Approx(4.0 * kPi));
    const Manifold h = Manifold::hyperbolic3();
    CHECK(ball_volume(h, origin_point(h), 1.5) == Approx(kPi * (std::sinh(3.0) - 3.0)));
    CHECK(ball_volume(h, origin_point(h), 1e-3) == Approx(4.0 / 3.0 * kPi * 1e-9).epsilon(1e-6));

    const Manifold f = Manifold::flat_torus({2.0, 3.0});
    double prev = 0.0;
    for (int i = 1; i <= 60; ++i) {
        const double r = 0.05 * i;
        const double v = ball_volume(f, Point{{0.0, 0.0}}, r);
        CHECK(v >= prev - 1e-12);
        prev = v;
    }
    CHECK(ball_volume(f, Point{{0.0, 0.0}}, 0.5) == Approx(kPi * 0.25));
    CHECK(prev == Approx(6.0));
    CHECK(total_volume(f) == Approx(6.0));
    CHECK(total_volume(parse_manifold_spec("revtorus:R=2,a=1")) == Approx(4.0 * kPi * kPi * 2.0));
}

TEST_CASE("space grids and poles") {
    CHECK(make_space_grid(Manifold::circle(1.0), 32).points.size() == 32);
    CHECK(make_space_grid(Manifold::flat_torus({1.0, 2.0}), 16).points.size() == 256);
    CHECK(make_space_grid(Manifold::sphere2(1.0), 16).points.size() == 2 + 7 * 16);
    CHECK(kind_of([] { make_space_grid(Manifold::circle(1.0), 8); }) == ErrorKind::Domain);
    CHECK(default_poles(parse_manifold_spec("revtorus:R=2,a=1")).size() == 8);
    CHECK(default_poles(Manifold::sphere2(1.0)).size() == 1);
}
