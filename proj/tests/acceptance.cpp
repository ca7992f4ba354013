// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "heatlab/bounds.hpp"
#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"
#include "heatlab/harness.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/spectral.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {
constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool ok = true;
    std::string detail;
};

GridSpec grid(const Manifold& m, const char* tgrid, int res, std::vector<Point> poles = {}) {
    return make_grid_spec(m, parse_time_grid(tgrid), res, std::move(poles));
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double tY_of(const LogDerivatives& ld, double t) { return t * (ld.grad_norm2() - ld.dt_ln); }

Outcome euclidean_sharpness() {
    Outcome o;
    Rng rng(101);
    double worst_analytic = 0.0, worst_fd = 0.0;
    for (int n = 1; n <= 3; ++n) {
        const Manifold m = Manifold::euclidean(n);
        for (int i = 0; i < 100; ++i) {
            const Point x = rng.point(m), y = rng.point(m);
            const double t = rng.uniform(0.05, 5.0);
            worst_analytic = std::max(worst_analytic, std::abs(tY_of(kernel_log_derivatives(m, x, t, y), t) - 0.5 * n));
            worst_fd = std::max(worst_fd, std::abs(tY_of(fd_log_derivatives(m, x, t, y), t) - 0.5 * n));
        }
    }
    o.ok = worst_analytic <= 1e-10 && worst_fd <= 1e-6;
    o.detail = "max |tY - n/2| analytic " + num(worst_analytic) + ", finite-difference " + num(worst_fd);
    return o;
}

Outcome compact_flat() {
    Outcome o;
    for (const char* spec : {"circle:L=6.283185307179586", "flattorus:L=6.283185307179586,6.283185307179586"}) {
        const Manifold m = parse_manifold_spec(spec);
        const SweepResult s = sweep_sup_tY(m, grid(m, "0.01:10:log:50", 512));
        const double half = 0.5 * m.dim();
        double sup = 0.0;
        for (const auto& row : s.rows) sup = std::max(sup, row.sup_tY);
        const double first = s.rows.front().sup_tY;
        o.ok = o.ok && sup <= half + 1e-8 && first >= half - 1e-3 && s.excluded.empty();
        o.detail += std::string(m.dim() == 1 ? "circle" : "flat torus") + " sup " + num(sup) + " (t=0.01: " + num(first) + "); ";
    }
    const Manifold s2 = Manifold::sphere2(1.0);
    const SweepResult s = sweep_sup_tY(s2, grid(s2, "0.05:5:log:20", 64));
    double sup = 0.0;
    for (const auto& row : s.rows) sup = std::max(sup, row.sup_tY);
    o.ok = o.ok && sup <= 1.0 + 1e-6;
    o.detail += "sphere sup " + num(sup);
    return o;
}

Outcome h3_counterexample() {
    Outcome o;
    const Manifold h = Manifold::hyperbolic3();
    const double analytic = tY_of(kernel_log_derivatives(h, Point{{20.0, 1.0, 1.0}}, 1.0, origin_point(h)), 1.0);
    // Finite differences of the closed-form kernel in r and t.
    auto lnG_r = [](double r) { return std::log(oracle::h3_kernel(r, 1.0)); };
    auto lnG_t = [](double t) { return std::log(oracle::h3_kernel(20.0, t)); };
    const double g = oracle::derivative(lnG_r, 20.0, 1e-2), dt = oracle::derivative(lnG_t, 1.0, 1e-3);
    const double fd = g * g - dt;
    const H3Scan scan = h3_counterexample_scan(40.0, 1.0, 40);
    const double halving = scan.rows[40].residual / scan.rows[20].residual;
    bool refused = false;
    try {
        check_compatibility(h, BoundSelector::SharpCompact);
    } catch (const Error& e) {
        refused = e.kind() == ErrorKind::Incompatible;
    }
    o.ok = std::abs(analytic - 22.4025) <= 1e-4 && std::abs(fd - analytic) <= 1e-4 && std::abs(halving - 0.5) <= 0.1 &&
           refused;
    o.detail = "tY(20,1) analytic " + num(analytic) + ", fd " + num(fd) + ", residual ratio r=40/r=20 " + num(halving) +
               (refused ? ", sharp-compact refused" : ", sharp-compact NOT refused");
    return o;
}

Outcome revolution_torus() {
    Outcome o;
    const Manifold m = parse_manifold_spec("revtorus:R=2,a=1");
    const double K = curvature_summary(m).ricci_lower;
    CheckOptions opt;
    opt.fit = true;
    const CheckReport coarse = run_check(m, grid(m, "0.05:10:log:20", 64), BoundSelector::SharpCompact, {}, opt);
    const CheckReport fine = run_check(m, grid(m, "0.05:10:log:20", 128), BoundSelector::SharpCompact, {}, opt);
    const ConstantFit& a = *coarse.fit;
    const ConstantFit& b = *fine.fit;
    const double va = a.c1 + a.c2 * K, vb = b.c1 + b.c2 * K;
    const bool stable = va == vb || (va > 0.0 && vb > 0.0 && std::max(va, vb) <= 2.0 * std::min(va, vb));
    o.ok = std::abs(K - 1.0) <= 1e-10 && coarse.min_margin >= 0.0 && coarse.passed() && a.dominated && b.dominated &&
           std::isfinite(va) && stable;
    o.detail = "K " + num(K) + ", min margin " + num(coarse.min_margin) + ", sup tY " + num(coarse.sup_tY) + ", fit (" +
               num(a.c1) + ", " + num(a.c2) + ") at res 64, (" + num(b.c1) + ", " + num(b.c2) + ") at res 128";
    return o;
}

Outcome hamilton() {
    Outcome o;
    double worst = std::numeric_limits<double>::infinity();
    bool all = true;
    for (const char* spec : {"circle:L=6.283185307179586", "flattorus:L=3,5", "sphere2:r=1"}) {
        const Manifold m = parse_manifold_spec(spec);
        for (double t0 : {0.5, 2.0}) {
            CheckOptions opt;
            opt.hamilton_t0 = t0;
            opt.tolerance = 1e-8;
            const CheckReport r = run_check(m, grid(m, "0.05:5:log:10", 64), BoundSelector::Hamilton, {}, opt);
            all = all && r.passed() && r.excluded.empty();
            worst = std::min(worst, r.min_margin);
        }
    }
    o.ok = all && worst >= -1e-8;
    o.detail = "min margin over circle, flat torus, sphere with t0 in {0.5, 2}: " + num(worst);
    return o;
}

Outcome harnack() {
    Outcome o;
    const HarnackReport c = harnack_check(Manifold::circle(2.0 * kPi), 500, 7, 2.0);
    const HarnackReport e = harnack_check(Manifold::euclidean(2), 500, 7, 2.0);
    const Manifold line = Manifold::euclidean(1);
    const double g1 = kernel_value(line, Point{{0.0}}, 1.0, Point{{0.0}}).value;
    const double g2 = kernel_value(line, Point{{0.0}}, 2.0, Point{{0.0}}).value;
    const double eq = std::abs(harnack_rhs(g2, 1.0, 2.0, 0.0, 1, 0.0, 1.0) - g1);
    o.ok = c.violations == 0 && e.violations == 0 && c.min_margin >= -1e-10 && e.min_margin >= -1e-10 && eq <= 1e-10;
    o.detail = "min margin circle " + num(c.min_margin) + ", euclidean " + num(e.min_margin) + "; alpha=1 equality gap " +
               num(eq);
    return o;
}

Outcome transfer() {
    Outcome o;
    const Manifold c = Manifold::circle(2.0 * kPi);
    const Manifold f = Manifold::flat_torus({2.0 * kPi, 2.0 * kPi});
    const TransferReport a = transfer_check(c, 50, 2024, grid(c, "0.05:2:log:8", 32));
    const TransferReport b = transfer_check(f, 50, 2024, grid(f, "0.05:2:log:4", 16));
    o.ok = a.failures == 0 && b.failures == 0 && a.worst_gap <= 1e-8 && b.worst_gap <= 1e-8;
    o.detail = "worst gap circle " + num(a.worst_gap) + ", flat torus " + num(b.worst_gap) + "; failures " +
               std::to_string(a.failures + b.failures);
    return o;
}

Outcome additivity() {
    Outcome o;
    const Manifold c = Manifold::circle(2.0 * kPi);
    const Manifold s = Manifold::sphere2(1.0);
    const AdditivityReport a = product_additivity_check(c, grid(c, "0.05:2:log:7", 32));
    const AdditivityReport b = product_additivity_check(s, grid(s, "0.05:2:log:4", 16));
    o.ok = a.samples >= 200 && b.samples >= 200 && a.max_deviation <= 1e-10 && b.max_deviation <= 1e-6;
    o.detail = "circle " + num(a.max_deviation) + " over " + std::to_string(a.samples) + " points, sphere " +
               num(b.max_deviation) + " over " + std::to_string(b.samples);
    return o;
}

Outcome bochner() {
    Outcome o;
    Rng rng(9);
    double euclid = 0.0, h3 = std::numeric_limits<double>::infinity();
    const Manifold e = Manifold::euclidean(3);
    for (int i = 0; i < 100; ++i) {
        const Point x = rng.point(e), y = rng.point(e);
        euclid = std::max(euclid, std::abs(bochner_residual(e, x, rng.uniform(0.1, 2.0), y).residual));
    }
    const Manifold h = Manifold::hyperbolic3();
    for (int i = 0; i < 100; ++i) {
        const double r = rng.uniform(0.1, 5.0), t = rng.uniform(0.1, 2.0);
        h3 = std::min(h3, bochner_residual(h, Point{{r, 1.2, 0.3}}, t, origin_point(h)).residual);
    }
    o.ok = euclid <= 1e-6 && h3 >= -1e-4;
    o.detail = "max |euclidean residual| " + num(euclid) + ", min H3 residual " + num(h3);
    return o;
}

Outcome infrastructure() {
    Outcome o;
    double dual = 0.0;
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
        for (double off : {0.0, 1.0, 2.5, kPi}) dual = std::max(dual, poisson_dual_check(2.0 * kPi, t, off).discrepancy);
    }
    SpectralBuildOptions so;
    so.grid_n = 2048;
    const FlatTorusValidation v = validate_against_flat_torus(build_spectral_model(ProfileCurve::constant(1.0, 1.0), so));
    // Error ratios of the k = 1, 2, 3 eigenvalues of the m = 0 ladder between grids 1024 and 2048.
    SturmLiouvilleProblem p{0, ProfileCurve::constant(1.0, 1.0), 1024};
    const auto coarse = mode_eigenvalues(p);
    p.grid_n = 2048;
    const auto fine = mode_eigenvalues(p);
    double worst_ratio = 4.0;
    for (int k = 1; k <= 3; ++k) {
        const auto i = static_cast<std::size_t>(2 * k - 1);
        const double ratio = (k * k - coarse[i]) / (k * k - fine[i]);
        if (std::abs(ratio - 4.0) > std::abs(worst_ratio - 4.0)) worst_ratio = ratio;
    }
    double integral = 0.0;
    for (const char* spec : {"circle:L=6.283185307179586", "flattorus:L=2,3", "sphere2:r=1", "revtorus:R=2,a=1",
                             "product(circle:L=3;sphere2:r=1)"}) {
        const Manifold m = parse_manifold_spec(spec);
        for (double t : {0.1, 1.0, 10.0}) {
            integral = std::max(integral, std::abs(integrate_kernel(m, default_poles(m).front(), t) - 1.0));
        }
    }
    o.ok = dual <= 1e-12 && v.eigenvalues_compared == 25 && v.max_eigenvalue_rel_error <= 1e-3 &&
           std::abs(worst_ratio - 4.0) <= 1.0 && integral <= 1e-6;
    o.detail = "poisson dual " + num(dual) + ", eigenvalue rel error " + num(v.max_eigenvalue_rel_error) +
               ", refinement ratio " + num(worst_ratio) + ", max |integral - 1| " + num(integral);
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"euclidean sharpness", euclidean_sharpness},
        {"compact K=0 bound", compact_flat},
        {"H3 counterexample", h3_counterexample},
        {"torus of revolution", revolution_torus},
        {"Hamilton estimate", hamilton},
        {"Harnack inequality", harnack},
        {"transfer to mixtures", transfer},
        {"product additivity", additivity},
        {"Bochner residual", bochner},
        {"infrastructure oracles", infrastructure},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %2zu %-24s %s (%.1fs)\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.ok;
    }
    return failed == 0 ? 0 : 1;
}
