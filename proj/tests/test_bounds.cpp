#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "heatlab/bounds.hpp"
#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"
#include "heatlab/harness.hpp"
#include "heatlab/kernels.hpp"
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

std::string error_text(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}
}  // namespace

TEST_CASE("classical bound") {
    CHECK(rhs_classical(2, 1.0, 1.0, 2.0) == Approx(8.0));
    // n alpha^2 K / (2 (alpha - 1)) t + n alpha^2 / 2 at n=3, K=2, alpha=1.5, t=0.5.
    CHECK(rhs_classical(3, 2.0, 0.5, 1.5) == Approx(10.125));
    CHECK(rhs_classical(4, 0.0, 3.0, 1.0) == Approx(2.0));
    CHECK(rhs_classical(4, 0.0, 3.0, 1.0 + 1e-9) == Approx(2.0));
    CHECK(kind_of([] { rhs_classical(2, 1.0, 1.0, 1.0); }) == ErrorKind::Domain);

    // inf over alpha is at least n/2, with equality only when K = 0.
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const int n = rng.integer(1, 5);
        const double K = i % 4 == 0 ? 0.0 : rng.uniform(0.01, 3.0);
        const double t = std::pow(10.0, rng.uniform(-3.0, 1.0));
        double best = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 4000; ++k) best = std::min(best, rhs_classical(n, K, t, 1.0 + 1e-4 * k * k / 16.0));
        CHECK(best >= 0.5 * n);
        if (K == 0.0) CHECK(best == Approx(0.5 * n).epsilon(1e-4));
        else CHECK(best > 0.5 * n);
    }
}

TEST_CASE("sharp compact bound") {
    CHECK(rhs_sharp_compact(3, 0.0, 5.0, 7.0, 1.0, 1.0) == 1.5);
    CHECK(rhs_sharp_compact(2, 1.0, 1.0, kPi, 1.0, 1.0) == Approx(1.0 + 4.0 * kPi + 2.0));
    BoundConstants c;
    c.c1 = 1.0;
    c.c2 = 1.0;
    CHECK(rhs_sharp_compact(2, 1.0, 1.0, kPi, c) == Approx(1.0 + 4.0 * kPi + 2.0));
    c.c4 = 3.0;
    c.c5 = 3.0;
    CHECK(rhs_kernel_sharp(2, 1.0, 1.0, kPi, c) == Approx(1.0 + 4.0 * kPi + std::sqrt(2.0 * 6.0)));

    Rng rng(2);
    for (int i = 0; i < 1000; ++i) {
        const int n = rng.integer(1, 4);
        double a[5] = {rng.uniform(0.0, 3.0), rng.uniform(0.01, 10.0), rng.uniform(0.1, 10.0), rng.uniform(0.0, 50.0),
                       rng.uniform(0.0, 50.0)};
        const double base = rhs_sharp_compact(n, a[0], a[1], a[2], a[3], a[4]);
        for (int k = 0; k < 5; ++k) {
            double b[5] = {a[0], a[1], a[2], a[3], a[4]};
            b[k] += rng.uniform(0.01, 1.0);
            const double up = rhs_sharp_compact(n, b[0], b[1], b[2], b[3], b[4]);
            CHECK(up >= base);
            if (k == 2 && a[0] > 0.0) CHECK(up > base);
        }
    }
}

TEST_CASE("Hamilton estimate") {
    CHECK(rhs_hamilton(0.7, 1.0, 2.0, 2.0) == 0.0);
    CHECK(rhs_hamilton(3.0, 0.0, std::exp(1.0), 1.0) == Approx(1.0));
    CHECK(kind_of([] { rhs_hamilton(1.0, 0.0, 1.0, 2.0); }) == ErrorKind::Domain);

    // f(x, t) = G(x, t + t0, 0) on the circle; A is the sup over (0, t0].
    const Manifold c = Manifold::circle(2.0 * kPi);
    const double t0 = 0.5;
    std::vector<double> window;
    for (int i = 0; i <= 20; ++i) window.push_back(t0 + t0 * i / 20.0);
    const double A = kernel_sup(c, Point{{0.0}}, window, 256).value;
    CHECK(A == Approx(oracle::circle_kernel(2.0 * kPi, 0.0, t0)).epsilon(1e-12));
    for (int i = 0; i < 256; ++i) {
        const Point x{{2.0 * kPi * i / 256}};
        const KernelJet j = kernel_jet(c, x, 2.0 * t0, Point{{0.0}});
        const double lhs = t0 * j.ld.grad_norm2();
        CHECK(lhs <= rhs_hamilton(t0, 0.0, A, j.eval.value) + 1e-8);
    }
}

TEST_CASE("Gaussian envelope") {
    const BoundConstants c;
    const Manifold e = Manifold::euclidean(3);
    // Minimal gaussian_c1 for the lower bound at d = 0 is |B(sqrt t)| (4 pi t)^{3/2} = 6 sqrt(pi), for every t.
    for (double t : {0.01, 0.3, 4.0}) {
        const double ball = 4.0 / 3.0 * kPi * std::pow(t, 1.5);
        const double g = std::pow(4.0 * kPi * t, -1.5);
        CHECK(1.0 / (ball * g) == Approx(6.0 * std::sqrt(kPi)));
        BoundConstants fitted;
        fitted.gaussian_c1 = 6.0 * std::sqrt(kPi) * (1.0 + 1e-12);
        const GaussianEnvelope env = gaussian_envelope(e, Point{{0, 0, 0}}, Point{{0, 0, 0}}, t, fitted);
        CHECK(env.lower <= g);
        CHECK(g <= env.upper);
        // With the default 10 the lower envelope overshoots.
        CHECK(gaussian_envelope(e, Point{{0, 0, 0}}, Point{{0, 0, 0}}, t, c).lower > g);
    }

    Rng rng(4);
    for (const char* spec : {"circle:L=3", "sphere2:r=1", "h3", "euclidean:n=2"}) {
        const Manifold m = parse_manifold_spec(spec);
        for (int i = 0; i < 100; ++i) {
            const Point x = rng.point(m), y = rng.point(m);
            const GaussianEnvelope env = gaussian_envelope(m, x, y, rng.uniform(0.01, 5.0), c);
            CHECK(env.lower <= env.upper);
        }
    }
    const GaussianEnvelope far = gaussian_envelope(e, Point{{0, 0, 0}}, Point{{30, 0, 0}}, 1.0, c);
    CHECK(far.upper < 1e-70);

    const Manifold circ = Manifold::circle(2.0 * kPi);
    const GaussianEnvelope env = gaussian_envelope(circ, Point{{kPi}}, Point{{0.0}}, 0.1, c);
    const double g = kernel_value(circ, Point{{kPi}}, 0.1, Point{{0.0}}).value;
    CHECK(env.lower <= g);
    CHECK(g <= env.upper);
}

TEST_CASE("Harnack") {
    CHECK(harnack_log_factor(1.0, 2.0, 1.5, 3, 0.7, 2.0) ==
          Approx(3.0 * std::log(2.0) + 1.5 * 1.5 / 2.0 + 3.0 * 0.7 / 2.0));
    CHECK(kind_of([] { harnack_log_factor(2.0, 2.0, 0.0, 1, 0.0, 2.0); }) == ErrorKind::Domain);
    CHECK(kind_of([] { harnack_log_factor(1.0, 2.0, 0.0, 1, 1.0, 1.0); }) == ErrorKind::Domain);

    // Exact Gaussian scaling at alpha = 1, K = 0.
    const Manifold e1 = Manifold::euclidean(1);
    const double g1 = kernel_value(e1, Point{{0.0}}, 1.0, Point{{0.0}}).value;
    const double g2 = kernel_value(e1, Point{{0.0}}, 2.0, Point{{0.0}}).value;
    CHECK(harnack_rhs(g2, 1.0, 2.0, 0.0, 1, 0.0, 1.0) == Approx(g1).epsilon(1e-14));

    const Manifold c = Manifold::circle(2.0 * kPi);
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const Point x = rng.point(c), z = rng.point(c), y{{0.0}};
        const double t1 = rng.uniform(0.05, 3.0), t2 = t1 + rng.uniform(0.01, 3.0);
        const double u1 = kernel_value(c, x, t1, y).value, u2 = kernel_value(c, z, t2, y).value;
        const double ln_margin = std::log(u2) + harnack_log_factor(t1, t2, distance(c, x, z), 1, 0.0, 2.0) - std::log(u1);
        CHECK(ln_margin >= -1e-10);
    }

    // Chain rule along collinear points of R^2.
    for (int i = 0; i < 200; ++i) {
        const double d12 = rng.uniform(0.0, 3.0), d23 = rng.uniform(0.0, 3.0);
        const double t1 = rng.uniform(0.1, 2.0), t2 = t1 + rng.uniform(0.05, 2.0), t3 = t2 + rng.uniform(0.05, 2.0);
        const double alpha = rng.uniform(1.01, 4.0), K = i % 2 ? 0.0 : rng.uniform(0.0, 1.0);
        const double chained = harnack_log_factor(t1, t2, d12, 2, K, alpha) + harnack_log_factor(t2, t3, d23, 2, K, alpha);
        CHECK(chained >= harnack_log_factor(t1, t3, d12 + d23, 2, K, alpha) - 1e-12);
    }
}

TEST_CASE("kernel gradient bound") {
    CHECK(gradient_regime(7.99) == GradientRegime::SmallTime);
    CHECK(gradient_regime(8.0) == GradientRegime::LargeTime);
    BoundConstants c;
    CHECK(rhs_kernel_gradient(1, 0.5, 0.0, 2.0, c, GradientRegime::SmallTime) ==
          Approx(2.0 * (4.0 / 0.5 + 2.0 * std::log(c.gaussian_c1))));
    CHECK(rhs_kernel_gradient(1, 20.0, 0.0, kPi, c, GradientRegime::LargeTime) == Approx(2.0 * (std::log(2.0) + kPi * kPi)));

    // Circle L = 2 pi at t = 0.5: the bound with diam = pi holds, and the
    // smallest admissible c1 is below 1.
    const Manifold circ = Manifold::circle(2.0 * kPi);
    double sup = 0.0;
    for (int i = 0; i < 512; ++i) {
        const LogDerivatives ld = kernel_log_derivatives(circ, Point{{2.0 * kPi * i / 512}}, 0.5, Point{{0.0}});
        sup = std::max(sup, 0.5 * ld.grad_norm2());
    }
    CHECK(sup <= rhs_kernel_gradient(1, 0.5, 0.0, kPi, c, GradientRegime::SmallTime));
    const double c1_min = std::exp((sup / 2.0 - kPi * kPi / 0.5) / 2.0);
    CHECK(c1_min < 1.0);
    BoundConstants tight = c;
    tight.gaussian_c1 = c1_min;
    CHECK(sup <= rhs_kernel_gradient(1, 0.5, 0.0, kPi, tight, GradientRegime::SmallTime) * (1.0 + 1e-12));
}

TEST_CASE("noncompact bound") {
    const BoundConstants c;
    const AlphaFamily lin = AlphaFamily::linear();
    CHECK(lin.alpha(0.0, 5.0) == 1.0);
    CHECK(lin.alpha(3.0, 2.0) == Approx(3.0));
    CHECK(lin.beta(3.0, 2.0) == Approx(9.0));
    CHECK(rhs_noncompact(3, 0.0, 2.0, AlphaFamily::constant(1.7), 5.0, 1.0, c) == Approx(3.0 * 1.7 / 2.0));
    CHECK(kind_of([&] { rhs_noncompact(3, 2.0, 1.0, AlphaFamily::constant(1.0), 0.0, 0.0, c); }) == ErrorKind::Domain);
    for (double t : {1e-3, 0.1, 10.0}) CHECK(std::isfinite(rhs_noncompact(3, 2.0, t, lin, 1.0, 0.0, c)));

    // H3 kernel: the left side grows like r, the right side like r^2.
    const Manifold h = Manifold::hyperbolic3();
    double prev = -std::numeric_limits<double>::infinity();
    for (double r : {10.0, 20.0, 40.0}) {
        const double tY = li_yau_quantity(kernel_log_derivatives(h, Point{{r, 1.0, 1.0}}, 1.0, origin_point(h)), 1.0, 1.0).tY;
        CHECK(tY == Approx(r + 2.5).epsilon(0.02));
        const double margin = rhs_noncompact(3, 2.0, 1.0, lin, r, 0.0, c) - tY;
        CHECK(margin > prev);
        prev = margin;
    }
}

TEST_CASE("constant fit") {
    const std::vector<FitSample> flat{{0.1, 0.9}, {1.0, 1.0}, {5.0, 0.3}};
    ConstantFit f = minimal_constant_fit(flat, 2, 0.0, 1.0);
    CHECK(f.dominated);
    CHECK(f.c1 == 0.0);
    CHECK(f.c2 == 0.0);

    // Below n/2 plus the first radical: nothing needed from c1, c2.
    const double first = std::sqrt(2.0 * 2 * 1.0 * 2.0 * 2.0) * 1.0;  // K=1, t=1, diam=1
    const std::vector<FitSample> under{{1.0, 1.0 + 0.99 * first}};
    f = minimal_constant_fit(under, 2, 1.0, 1.0);
    CHECK(f.dominated);
    CHECK(f.c1 == 0.0);
    CHECK(f.c2 == 0.0);

    const std::vector<FitSample> over{{1.0, 1.0 + first + 3.0}, {0.5, 1.2}};
    f = minimal_constant_fit(over, 2, 1.0, 1.0);
    CHECK(f.dominated);
    CHECK(f.required == Approx(9.0 / 2.0));
    CHECK(f.c1 + f.c2 >= f.required);
    CHECK(rhs_sharp_compact(2, 1.0, 1.0, 1.0, f.c1, f.c2) >= over[0].tY);
    // Minimal on the lattice, smaller c1 among ties.
    for (double a : fit_lattice()) {
        for (double b : fit_lattice()) {
            if (a + b >= f.required) {
                CHECK(a + b >= f.c1 + f.c2);
                if (a + b == f.c1 + f.c2) CHECK(a >= f.c1);
            }
        }
    }

    const std::vector<FitSample> hopeless{{1.0, 3.0}};
    f = minimal_constant_fit(hopeless, 2, 0.0, 1.0);
    CHECK_FALSE(f.dominated);
    CHECK(f.worst.tY == 3.0);
    CHECK(f.worst_excess == Approx(2.0));

    CHECK(fit_lattice().size() == 66);
    CHECK(fit_lattice().front() == 0.0);
}

TEST_CASE("constants file") {
    BoundConstants c = parse_constants("# tuned\nc1 = 12.5\n\nc0=auto  # default\ngaussian_c2=3\n");
    CHECK(c.c1 == 12.5);
    CHECK_FALSE(c.c0.has_value());
    CHECK(c.c0_for(4) == 2.0);
    CHECK(c.gaussian_c2 == 3.0);
    CHECK(c.c2 == 100.0);
    CHECK(parse_constants("c0=1.25").c0_for(3) == 1.25);
    CHECK(c.entries().front().first == "c0");
    CHECK(c.entries().front().second == "auto");

    CHECK(error_text([] { parse_constants("c1=1\nc9=2\n"); }).find("line 2") != std::string::npos);
    CHECK(kind_of([] { parse_constants("c1=1\nc9=2\n"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_constants("c1=-3"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_constants("c1=0"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_constants("c1"); }) == ErrorKind::Parse);
    CHECK(kind_of([] { parse_constants("c2=abc"); }) == ErrorKind::Parse);

    const auto path = std::filesystem::temp_directory_path() / "heatlab_constants_test.txt";
    std::ofstream(path) << "c3=2\n";
    CHECK(load_constants(path).c3 == 2.0);
    std::filesystem::remove(path);
    CHECK(kind_of([&] { load_constants(path); }) == ErrorKind::Io);
}
