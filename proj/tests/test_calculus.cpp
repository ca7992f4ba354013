#include <doctest.h>

#include <cmath>
#include <numbers>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"
#include "heatlab/harness.hpp"
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

double max_abs_diff(const LogDerivatives& a, const LogDerivatives& b) {
    double m = std::max(std::abs(a.lap_ln - b.lap_ln), std::abs(a.dt_ln - b.dt_ln));
    for (std::size_t i = 0; i < a.grad.size(); ++i) m = std::max(m, std::abs(a.grad[i] - b.grad[i]));
    return m;
}
}  // namespace

TEST_CASE("Li-Yau quantity on closed forms") {
    const Manifold e = Manifold::euclidean(3);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Point x = rng.point(e), y = rng.point(e);
        const double t = rng.uniform(0.01, 10.0);
        const LiYauEvaluation q = li_yau_quantity(kernel_log_derivatives(e, x, t, y), 1.0, t);
        CHECK(q.tY == Approx(1.5).epsilon(1e-12));
    }
    const LiYauEvaluation q2 = li_yau_quantity(kernel_log_derivatives(e, Point{{0, 0, 0}}, 0.7, Point{{0, 0, 0}}), 2.0, 0.7);
    CHECK(q2.Y_alpha == Approx(3.0 / 0.7));

    const Manifold h = Manifold::hyperbolic3();
    const LiYauEvaluation qh = li_yau_quantity(kernel_log_derivatives(h, Point{{20.0, 1.0, 1.0}}, 1.0, origin_point(h)), 1.0, 1.0);
    CHECK(std::abs(qh.tY - 22.4025) <= 1e-4);

    CHECK(kind_of([&] { li_yau_quantity(kernel_log_derivatives(e, Point{{0, 0, 0}}, 1.0, Point{{1, 0, 0}}), 0.5, 1.0); }) ==
          ErrorKind::Domain);
}

TEST_CASE("Y_alpha is affine in alpha with slope -dt_ln") {
    Rng rng(17);
    const Manifold m = Manifold::sphere2(1.0);
    for (int i = 0; i < 100; ++i) {
        const Point x = rng.point(m), y = rng.point(m);
        const double t = rng.uniform(0.05, 2.0);
        const LogDerivatives ld = kernel_log_derivatives(m, x, t, y);
        const double a = rng.uniform(1.0, 5.0), b = rng.uniform(1.0, 5.0);
        const double ya = li_yau_quantity(ld, a, t).Y_alpha, yb = li_yau_quantity(ld, b, t).Y_alpha;
        CHECK(ya - yb == Approx(-(a - b) * ld.dt_ln).epsilon(1e-12).scale(1e-12 * (1 + std::abs(ya))));
        // Sign-linked monotonicity.
        if (ld.dt_ln >= 0.0) CHECK((a <= b ? ya >= yb : ya <= yb));
        else CHECK((a <= b ? ya <= yb : ya >= yb));
        // For kernel sources tY = -t lap_ln.
        const LiYauEvaluation q = li_yau_quantity(ld, 1.0, t);
        CHECK(std::abs(q.tY + t * ld.lap_ln) <= q.error + 1e-9);
    }
}

TEST_CASE("Bochner residual") {
    const Manifold e = Manifold::euclidean(2);
    Rng rng(9);
    for (int i = 0; i < 20; ++i) {
        const Point x = rng.point(e), y = rng.point(e);
        const double t = rng.uniform(0.2, 3.0);
        const BochnerResidual b = bochner_residual(e, x, t, y);
        CHECK(std::abs(b.residual) <= 1e-6 * (1.0 + std::abs(b.rhs)));
    }
    const BochnerResidual at_pole = bochner_residual(e, Point{{0.3, 0.3}}, 0.5, Point{{0.3, 0.3}});
    CHECK(at_pole.rhs == Approx(2.0 / (2.0 * 0.25)));

    const Manifold h = Manifold::hyperbolic3();
    CHECK(bochner_residual(h, Point{{2.0, 1.0, 1.0}}, 0.5, origin_point(h)).residual >= -1e-4);
    for (int i = 0; i < 100; ++i) {
        const double r = rng.uniform(0.2, 10.0), t = rng.uniform(0.1, 5.0);
        CHECK(bochner_residual(h, Point{{r, 1.3, 0.4}}, t, origin_point(h)).residual >= -1e-4);
    }
    CHECK(kind_of([] { bochner_residual(Manifold::circle(1.0), Point{{0.1}}, 1.0, Point{{0.0}}); }) == ErrorKind::Unsupported);
}

TEST_CASE("mixtures") {
    const Manifold c = Manifold::circle(2.0 * kPi);
    SUBCASE("single source is the kernel") {
        const MixtureSolution s = make_mixture(c, {{Point{{1.0}}, 3.0}});
        const LogDerivatives a = mixture_log_derivatives(s, Point{{2.2}}, 0.4);
        const LogDerivatives b = kernel_log_derivatives(c, Point{{2.2}}, 0.4, Point{{1.0}});
        CHECK(max_abs_diff(a, b) < 1e-13);
        CHECK(mixture_eval(s, Point{{2.2}}, 0.4).log_value ==
              Approx(std::log(3.0) + kernel_value(c, Point{{2.2}}, 0.4, Point{{1.0}}).log_value));
    }
    SUBCASE("antipodal pair") {
        const MixtureSolution s = make_mixture(c, {{Point{{0.0}}, 1.0}, {Point{{kPi}}, 1.0}});
        for (double x : {0.0, kPi}) CHECK(std::abs(mixture_log_derivatives(s, Point{{x}}, 0.3).grad[0]) < 1e-12);

        const LogDerivatives mid = mixture_log_derivatives(s, Point{{0.5 * kPi}}, 0.3);
        const double tY_mix = 0.3 * (mid.grad_norm2() - mid.dt_ln);
        double sup_kernel = 0.0;
        for (int i = 0; i < 512; ++i) {
            const LogDerivatives ld = kernel_log_derivatives(c, Point{{2.0 * kPi * i / 512}}, 0.3, Point{{0.0}});
            sup_kernel = std::max(sup_kernel, 0.3 * (ld.grad_norm2() - ld.dt_ln));
        }
        CHECK(tY_mix <= sup_kernel + 1e-8);
        CHECK(sup_kernel - tY_mix > 0.0);
    }
    SUBCASE("heat equation identity and scale invariance") {
        Rng rng(21);
        for (const char* spec : {"circle:L=5", "flattorus:L=3,4", "sphere2:r=1"}) {
            const Manifold m = parse_manifold_spec(spec);
            for (int i = 0; i < 34; ++i) {
                std::vector<MixtureSource> src;
                const int k = rng.integer(1, 5);
                for (int j = 0; j < k; ++j) src.push_back({rng.point(m), std::pow(10.0, rng.uniform(-3.0, 3.0))});
                Point x = rng.point(m);
                if (m.as<Sphere2>()) x.coords[0] = std::clamp(x.coords[0], 0.2, kPi - 0.2);
                const double t = rng.uniform(0.05, 1.0);
                const MixtureSolution s = make_mixture(m, src, 0.01);
                const LogDerivatives ld = mixture_log_derivatives(s, x, t);
                const double scale = 1.0 + ld.grad_norm2() + std::abs(ld.lap_ln);
                CHECK(std::abs(ld.grad_norm2() - ld.dt_ln + ld.lap_ln) <= ld.error_estimate + 1e-9 * scale);

                for (auto& w : src) w.weight *= 123.0;
                const LogDerivatives scaled = mixture_log_derivatives(make_mixture(m, src, 0.01), x, t);
                CHECK(max_abs_diff(ld, scaled) <= 1e-12 * scale);
            }
        }
    }
    SUBCASE("far field small t") {
        const MixtureSolution s = make_mixture(c, {{Point{{0.0}}, 1.0}, {Point{{0.1}}, 1e-3}});
        const MixtureEvaluation ev = mixture_eval(s, Point{{kPi}}, 0.005);
        CHECK(std::isfinite(ev.log_value));
        CHECK(ev.log_value < -400.0);
        CHECK(kind_of([&] { mixture_eval(s, Point{{kPi}}, 1e-3); }) == ErrorKind::Unresolved);
    }
    SUBCASE("construction errors") {
        CHECK(kind_of([&] { make_mixture(c, {}); }) == ErrorKind::Domain);
        CHECK(kind_of([&] { make_mixture(c, {{Point{{0.0}}, 0.0}}); }) == ErrorKind::Domain);
        CHECK(kind_of([&] { make_mixture(c, {{Point{{0.0}}, 1.0}}, -1.0); }) == ErrorKind::Domain);
    }
}
