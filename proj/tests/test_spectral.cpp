#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/spectral.hpp"
#include "oracles.hpp"

using namespace heatlab;
using doctest::Approx;

namespace {
constexpr double kPi = std::numbers::pi;

const SpectralModel& torus_model() {
    static const SpectralModel m = build_spectral_model(ProfileCurve::torus(2.0, 1.0), {});
    return m;
}
}  // namespace

TEST_CASE("constant profile reproduces the lattice spectrum") {
    for (int mode : {0, 1, 3}) {
        SturmLiouvilleProblem p{mode, ProfileCurve::constant(2.0, 0.5), 1024};
        const auto ev = mode_eigenvalues(p);
        // Exact: k^2 / a^2 + m^2 / R^2, k = 0, 1, 1, 2, 2, ...
        std::vector<double> exact;
        for (int k = 0; k < 6; ++k) {
            exact.push_back(k * k / 0.25 + mode * mode / 4.0);
            if (k > 0) exact.push_back(exact.back());
        }
        std::sort(exact.begin(), exact.end());
        for (std::size_t i = 0; i < exact.size(); ++i) CHECK(ev[i] == Approx(exact[i]).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("ground state is constant with eigenvalue zero") {
    SturmLiouvilleProblem p{0, ProfileCurve::torus(2.0, 1.0), 256};
    const auto pairs = eigen_solve_mode(p, 1.0);
    REQUIRE_FALSE(pairs.empty());
    CHECK(std::abs(pairs[0].value) < 1e-10);
    const auto& v = pairs[0].vector;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    CHECK(*hi - *lo < 1e-10 * std::abs(*hi));
    // Unit norm under the weight rho a dv: phi0^2 * area = 2 pi (the u-factor 1/(2 pi) is separate).
    CHECK(v[0] * v[0] * 4.0 * kPi * kPi * 2.0 == Approx(2.0 * kPi).epsilon(1e-10));
}

TEST_CASE("eigenvalues converge at second order") {
    // Error ratios between successive doublings for the first ten eigenvalues
    // of the R=2, a=1 torus, via differences of the refinement sequence.
    const ProfileCurve torus = ProfileCurve::torus(2.0, 1.0);
    std::vector<std::vector<double>> seq;
    for (int n : {128, 256, 512}) {
        std::vector<double> ev;
        for (int m : {0, 1, 2}) {
            const auto e = mode_eigenvalues({m, torus, n});
            ev.insert(ev.end(), e.begin(), e.begin() + 4);
        }
        seq.push_back(ev);
    }
    int compared = 0;
    for (std::size_t i = 0; i < seq[0].size() && compared < 10; ++i) {
        const double d1 = seq[0][i] - seq[1][i], d2 = seq[1][i] - seq[2][i];
        if (std::abs(d2) < 1e-11) continue;  // exact to rounding (the zero mode)
        CHECK(d1 / d2 == Approx(4.0).epsilon(0.25));
        ++compared;
    }
    CHECK(compared >= 10);
}

TEST_CASE("flat torus validation at grid 256") {
    SpectralBuildOptions o;
    o.grid_n = 256;
    const SpectralModel model = build_spectral_model(ProfileCurve::constant(1.0, 1.0), o);
    const FlatTorusValidation v = validate_against_flat_torus(model);
    CHECK(v.eigenvalues_compared == 25);
    CHECK(v.max_eigenvalue_rel_error < 1e-3);
    CHECK(v.max_kernel_error < 1e-4);
    CHECK(v.ground_state_error < 1e-12);
}

TEST_CASE("model bookkeeping") {
    const SpectralModel& m = torus_model();
    CHECK(m.mode_weight(0) == Approx(1.0 / (2.0 * kPi)));
    CHECK(m.mode_weight(3) == Approx(1.0 / kPi));
    CHECK(m.total_volume == Approx(8.0 * kPi * kPi).epsilon(1e-10));
    CHECK(m.pair_count() > 100);
    const auto tails = m.tail_bounds(m.t_min);
    CHECK(tails[0] <= m.tol * 1.0000001);
    const auto later = m.tail_bounds(1.0);
    for (int i = 0; i < 3; ++i) CHECK(later[static_cast<std::size_t>(i)] <= tails[static_cast<std::size_t>(i)]);
}

TEST_CASE("heat trace decreases in t") {
    const SpectralModel& m = torus_model();
    double prev = std::numeric_limits<double>::infinity();
    for (double t : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0}) {
        double trace = 0.0;
        for (const auto& mode : m.modes) {
            for (double lam : mode.eigenvalues) trace += (mode.m == 0 ? 1.0 : 2.0) * std::exp(-lam * t);
        }
        CHECK(trace < prev);
        prev = trace;
    }
}

TEST_CASE("Weyl growth") {
    const SpectralModel& m = torus_model();
    const double area = 8.0 * kPi * kPi;
    auto count_below = [&](double lam) {
        double c = 0.0;
        for (const auto& mode : m.modes) {
            for (double l : mode.eigenvalues) c += l <= lam ? (mode.m == 0 ? 1.0 : 2.0) : 0.0;
        }
        return c;
    };
    const double lo = 100.0, hi = 0.9 * m.eigen_cutoff;
    const double slope = (count_below(hi) - count_below(lo)) / (hi - lo);
    const double weyl = area / (4.0 * kPi);
    CHECK(slope > 0.5 * weyl);
    CHECK(slope < 2.0 * weyl);
}

TEST_CASE("spectral kernel agrees with the product of circle kernels on a flat torus") {
    SpectralBuildOptions o;
    o.grid_n = 512;
    const SpectralModel model = build_spectral_model(ProfileCurve::constant(1.5, 1.0), o);
    for (double t : {0.1, 0.5, 2.0}) {
        for (double du : {0.0, 1.0, 3.0}) {
            for (double dv : {0.0, 0.7, 3.1}) {
                const double g = spectral_kernel(model, du, 0.4, 0.4 + dv, t);
                const double exact = oracle::circle_kernel(2.0 * kPi * 1.5, 1.5 * du, t) * oracle::circle_kernel(2.0 * kPi, dv, t);
                CHECK(g == Approx(exact).epsilon(1e-3).scale(1e-3));
            }
        }
    }
}

TEST_CASE("cache round trip is bit-identical") {
    const auto path = std::filesystem::temp_directory_path() / "heatlab_spectral_cache_test.txt";
    std::filesystem::remove(path);
    const SpectralModel& m = torus_model();
    save_spectral_model(m, path);
    const auto loaded = load_spectral_model(path, ProfileCurve::torus(2.0, 1.0), {});
    REQUIRE(loaded.has_value());
    for (double t : {0.05, 0.3, 2.0}) {
        for (double du : {0.0, 1.3}) {
            CHECK(spectral_kernel(*loaded, du, 0.2, 2.5, t) == spectral_kernel(m, du, 0.2, 2.5, t));
        }
    }
    SpectralBuildOptions other;
    other.grid_n = 128;
    CHECK_FALSE(load_spectral_model(path, ProfileCurve::torus(2.0, 1.0), other).has_value());
    CHECK_FALSE(load_spectral_model(path, ProfileCurve::torus(2.5, 1.0), {}).has_value());

    // Through the manifold: a second surface with the same cache file reads it back.
    RevolutionSettings s;
    s.cache_path = path.string();
    const Manifold a = Manifold::revolution(ProfileCurve::torus(2.0, 1.0), s);
    const Manifold b = Manifold::revolution(ProfileCurve::torus(2.0, 1.0), s);
    const Point x{{0.3, 1.0}}, y{{0.0, 0.0}};
    CHECK(kernel_value(a, x, 0.4, y).value == kernel_value(b, x, 0.4, y).value);
    std::filesystem::remove(path);
}

TEST_CASE("times below t_min are refused") {
    const Manifold m = Manifold::revolution(ProfileCurve::torus(2.0, 1.0));
    try {
        kernel_value(m, Point{{0.0, 0.0}}, 0.01, Point{{0.0, 0.0}});
        FAIL("expected refusal");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Truncation);
    }
}
