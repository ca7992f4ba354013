#include "heatlab/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "heatlab/calculus.hpp"
#include "heatlab/error.hpp"
#include "heatlab/format.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/spectral.hpp"

namespace heatlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

bool has_spectral_factor(const Manifold& m) {
    if (m.as<RevolutionSurface>()) return true;
    if (const auto* p = m.as<Product>()) return has_spectral_factor(*p->left) || has_spectral_factor(*p->right);
    return false;
}

// Points where the derivative error alone could move tY by this much are
// treated like unresolved kernel values.
constexpr double kTYErrorCap = 0.1;

bool usable(const KernelJet& j, double t) { return j.resolved && t * j.ld.error_estimate <= kTYErrorCap; }

double tY_of(const LogDerivatives& ld, double t, double alpha = 1.0) {
    return t * (ld.grad_norm2() - alpha * ld.dt_ln);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto p = s.find(sep);
        out.push_back(s.substr(0, p));
        if (p == std::string_view::npos) return out;
        s.remove_prefix(p + 1);
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

std::vector<double> TimeGrid::points() const {
    std::vector<double> ts(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double f = static_cast<double>(i) / (count - 1);
        ts[static_cast<std::size_t>(i)] = log_spacing ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo)))
                                                      : lo + f * (hi - lo);
    }
    // Pin the endpoints against rounding in exp/log.
    ts.front() = lo;
    ts.back() = hi;
    return ts;
}

std::string TimeGrid::describe() const {
    return format_double(lo) + ":" + format_double(hi) + ":" + (log_spacing ? "log" : "lin") + ":" +
           std::to_string(count);
}

TimeGrid parse_time_grid(std::string_view text) {
    const auto parts = split(text, ':');
    const std::string quoted = "'" + std::string(text) + "'";
    if (parts.size() != 4) fail(ErrorKind::Parse, "time grid " + quoted + ": expected lo:hi:lin|log:count");
    TimeGrid g;
    if (!parse_double(parts[0], g.lo)) fail(ErrorKind::Parse, "time grid " + quoted + ": bad lower time '" + std::string(parts[0]) + "'");
    if (!parse_double(parts[1], g.hi)) fail(ErrorKind::Parse, "time grid " + quoted + ": bad upper time '" + std::string(parts[1]) + "'");
    if (parts[2] == "log") g.log_spacing = true;
    else if (parts[2] == "lin") g.log_spacing = false;
    else fail(ErrorKind::Parse, "time grid " + quoted + ": spacing '" + std::string(parts[2]) + "' is not lin or log");
    long long count = 0;
    if (!parse_int(parts[3], count)) fail(ErrorKind::Parse, "time grid " + quoted + ": bad count '" + std::string(parts[3]) + "'");
    if (count < 2 || count > 100000) fail(ErrorKind::Parse, "time grid " + quoted + ": count must be in [2, 100000]");
    g.count = static_cast<int>(count);
    if (!(g.lo > 0.0) || !(g.hi > g.lo) || !std::isfinite(g.hi)) {
        fail(ErrorKind::Parse, "time grid " + quoted + ": need 0 < lo < hi");
    }
    return g;
}

void validate_grid_spec(const Manifold& m, const GridSpec& g) {
    if (g.t_points.size() < 2) fail(ErrorKind::Domain, "time grid needs at least two points");
    if (g.resolution < 16) fail(ErrorKind::Domain, "space resolution must be >= 16");
    const double lo = *std::min_element(g.t_points.begin(), g.t_points.end());
    const double thr = kernel_time_threshold(m);
    if (!(lo > 0.0) || lo < thr) {
        fail(ErrorKind::Domain, "smallest time " + format_double(lo) + " is below the kernel threshold " +
                                    format_double(thr) + " of " + m.spec());
    }
    if (g.poles.empty()) fail(ErrorKind::Domain, "grid needs at least one pole");
    for (const auto& y : g.poles) validate_point(m, y);
}

GridSpec make_grid_spec(const Manifold& m, const TimeGrid& times, int resolution, std::vector<Point> poles) {
    GridSpec g;
    g.t_points = times.points();
    g.t_description = times.describe();
    g.resolution = resolution;
    g.poles = poles.empty() ? default_poles(m) : std::move(poles);
    validate_grid_spec(m, g);
    return g;
}

std::string describe_grid(const Manifold& m, const GridSpec& g) {
    const SpaceGrid sg = make_space_grid(m, g.resolution, g.window);
    std::string t = g.t_description.empty() ? std::to_string(g.t_points.size()) + " times" : g.t_description;
    return "t=" + t + " space=" + sg.description + " poles=" + std::to_string(g.poles.size());
}

double default_tolerance(const Manifold& m) { return has_spectral_factor(m) ? 1e-5 : 1e-8; }

bool refinement_stable(double coarse, double fine, double* relative_change) {
    const double scale = std::max(std::abs(coarse), std::abs(fine));
    const double diff = std::abs(coarse - fine);
    if (relative_change) *relative_change = scale > 0.0 ? diff / scale : 0.0;
    return diff <= 0.01 * scale + 1e-9;
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

namespace {

SweepResult sweep_once(const Manifold& m, const GridSpec& g) {
    const SpaceGrid sg = make_space_grid(m, g.resolution, g.window);
    SweepResult out;
    for (double t : g.t_points) {
        SweepRow row;
        row.t = t;
        row.sup_tY = -std::numeric_limits<double>::infinity();
        for (const auto& y : g.poles) {
            const auto jets = kernel_jets_parallel(m, sg.points, t, y);
            for (std::size_t i = 0; i < jets.size(); ++i) {
                if (!usable(jets[i], t)) {
                    out.excluded.push_back({sg.points[i], y, t});
                    continue;
                }
                ++row.evaluated;
                const double v = tY_of(jets[i].ld, t);
                if (v > row.sup_tY) {
                    row.sup_tY = v;
                    row.argmax_x = sg.points[i];
                    row.argmax_y = y;
                }
            }
        }
        if (row.evaluated == 0) row.sup_tY = kNaN;
        out.rows.push_back(std::move(row));
    }
    return out;
}

RefinementStudy compare_refined(const Manifold& m, const GridSpec& g, std::span<const SweepRow> coarse) {
    GridSpec fine = g;
    fine.resolution = 2 * g.resolution;
    fine.check_refinement = false;
    const SweepResult f = sweep_once(m, fine);
    RefinementStudy r;
    r.performed = true;
    r.resolution = fine.resolution;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        double rel = 0.0;
        if (std::isnan(coarse[i].sup_tY) || std::isnan(f.rows[i].sup_tY)) continue;
        if (!refinement_stable(coarse[i].sup_tY, f.rows[i].sup_tY, &rel)) r.stable = false;
        r.max_relative_change = std::max(r.max_relative_change, rel);
    }
    return r;
}

}  // namespace

SweepResult sweep_sup_tY(const Manifold& m, const GridSpec& g) {
    validate_grid_spec(m, g);
    if (!m.compact() && !m.as<Euclidean>() && !m.as<Hyperbolic3>()) {
        fail(ErrorKind::Incompatible, "sweeps need a compact manifold, Euclidean space or H3, got " + m.spec());
    }
    SweepResult out = sweep_once(m, g);
    if (g.check_refinement) out.refinement = compare_refined(m, g, out.rows);
    return out;
}

std::vector<LargeTimeRatio> large_time_ratios(const Manifold& m, const GridSpec& g) {
    GridSpec lt = g;
    lt.t_points = {1.0, 10.0, 100.0};
    lt.check_refinement = false;
    const SweepResult s = sweep_once(m, lt);
    std::vector<LargeTimeRatio> out;
    for (const auto& row : s.rows) out.push_back({row.t, row.sup_tY, row.sup_tY / row.t});
    return out;
}

// ---------------------------------------------------------------------------
// Bound checks
// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<std::string_view, std::string_view> kBounds[] = {
    {"sharp-compact", "t Y <= n/2 + sqrt(2nK(1+Kt)(1+t)) diam + sqrt(K(1+Kt)(c1+c2K)t); compact only"},
    {"kernel-sharp", "sharp-compact shape with the kernel constants c4, c5; compact only"},
    {"classical", "t Y_alpha <= t n alpha^2 K / (2(alpha-1)) + n alpha^2 / 2; any manifold (--alpha, default 2)"},
    {"kernel-gradient", "t |grad ln G|^2 against the small/large time kernel gradient bound (split at t=8); compact only"},
    {"hamilton", "t |grad ln f|^2 <= (1+2Kt) ln(A/f), f = G(., t+t0, y) (--t0, default 0.5); compact only"},
    {"noncompact", "t Y against the alpha(t,K) family bound with distance terms (--family linear|constant:<a>)"},
};

constexpr BoundSelector kSelectors[] = {BoundSelector::SharpCompact, BoundSelector::KernelSharp,
                                        BoundSelector::Classical,    BoundSelector::KernelGradient,
                                        BoundSelector::Hamilton,     BoundSelector::Noncompact};

AlphaFamily parse_family(const std::string& text) {
    if (text == "linear") return AlphaFamily::linear();
    if (text.rfind("constant:", 0) == 0) {
        double a = 0.0;
        if (!parse_double(std::string_view(text).substr(9), a)) fail(ErrorKind::Parse, "bad alpha family '" + text + "'");
        return AlphaFamily::constant(a);
    }
    fail(ErrorKind::Parse, "unknown alpha family '" + text + "' (expected linear or constant:<alpha>)");
}

}  // namespace

std::string_view to_string(BoundSelector b) { return kBounds[static_cast<int>(b)].first; }

BoundSelector parse_bound_selector(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    std::replace(lower.begin(), lower.end(), '_', '-');
    for (auto b : kSelectors) {
        if (lower == to_string(b)) return b;
    }
    std::string known;
    for (auto b : kSelectors) known += (known.empty() ? "" : ", ") + std::string(to_string(b));
    fail(ErrorKind::Parse, "unknown bound '" + std::string(text) + "' (known: " + known + ")");
}

std::span<const std::pair<std::string_view, std::string_view>> bound_catalog() { return kBounds; }

void check_compatibility(const Manifold& m, BoundSelector b) {
    if (m.compact()) return;
    switch (b) {
        case BoundSelector::SharpCompact:
        case BoundSelector::KernelSharp:
            fail(ErrorKind::Incompatible,
                 std::string(to_string(b)) + " needs a compact manifold and " + m.spec() +
                     " is noncompact: one can not take α=1 for all noncompact manifolds "
                     "(on H3 the kernel has t Y of the order d(x, y))");
        case BoundSelector::KernelGradient:
            fail(ErrorKind::Incompatible, "kernel-gradient needs a finite diameter and " + m.spec() + " is noncompact");
        case BoundSelector::Hamilton:
            fail(ErrorKind::Incompatible, "hamilton takes A as a sup over a compact manifold and " + m.spec() +
                                              " is noncompact");
        default:
            return;
    }
}

CheckReport run_check(const Manifold& m, const GridSpec& g, BoundSelector bound, const BoundConstants& c,
                      const CheckOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    check_compatibility(m, bound);
    validate_grid_spec(m, g);

    const int n = m.dim();
    const double K = curvature_summary(m).ricci_lower;
    const bool needs_diam = bound == BoundSelector::SharpCompact || bound == BoundSelector::KernelSharp ||
                            bound == BoundSelector::KernelGradient;
    const bool hamilton = bound == BoundSelector::Hamilton;
    const double t0 = opt.hamilton_t0;
    if (hamilton && !(t0 > 0.0)) fail(ErrorKind::Domain, "hamilton needs t0 > 0");

    CheckReport r;
    r.manifold = m.spec();
    r.bound = std::string(to_string(bound));
    r.scenario = r.bound + "@" + r.manifold;
    r.constants = c.entries();
    r.grid = describe_grid(m, g);
    r.resolution = g.resolution;
    r.t_points = g.t_points;
    r.poles = g.poles.size();
    r.tolerance = opt.tolerance.value_or(default_tolerance(m));
    r.K = K;
    if (needs_diam || m.compact()) r.diameter = diameter_estimate(m);

    std::optional<AlphaFamily> family;
    double alpha = 1.0;
    switch (bound) {
        case BoundSelector::Classical:
            alpha = opt.alpha;
            r.lhs = "t*Y_alpha";
            r.alpha_family = AlphaFamily::constant(alpha).name;
            (void)rhs_classical(n, K, 1.0, alpha);  // reject alpha before sweeping
            break;
        case BoundSelector::Noncompact:
            family = parse_family(opt.family);
            r.lhs = "t*Y";
            r.alpha_family = family->name + " (illustrative)";
            break;
        case BoundSelector::KernelGradient:
        case BoundSelector::Hamilton:
            r.lhs = "t*|grad ln f|^2";
            break;
        default:
            r.lhs = "t*Y";
    }

    const SpaceGrid sg = make_space_grid(m, g.resolution, g.window);
    const Point origin = origin_point(m);
    std::vector<double> d_origin;
    if (bound == BoundSelector::Noncompact) {
        d_origin.reserve(sg.points.size());
        for (const auto& x : sg.points) d_origin.push_back(distance(m, x, origin));
    }

    // Per-time right-hand sides that do not depend on the point.
    auto rhs_at = [&](double t, double diam) {
        switch (bound) {
            case BoundSelector::SharpCompact: return rhs_sharp_compact(n, K, t, diam, c);
            case BoundSelector::KernelSharp: return rhs_kernel_sharp(n, K, t, diam, c);
            case BoundSelector::Classical: return rhs_classical(n, K, t, alpha);
            case BoundSelector::KernelGradient: return rhs_kernel_gradient(n, t, K, diam, c, gradient_regime(t));
            default: return kNaN;
        }
    };

    r.sup_tY = -std::numeric_limits<double>::infinity();
    r.min_margin = std::numeric_limits<double>::infinity();
    double min_lower = std::numeric_limits<double>::infinity();
    std::vector<FitSample> fit_samples;

    for (double t : g.t_points) {
        const double rhs_t = needs_diam || bound == BoundSelector::Classical ? rhs_at(t, r.diameter ? r.diameter->upper : 0.0)
                                                                              : kNaN;
        const double rhs_lower = needs_diam ? rhs_at(t, r.diameter->lower) : kNaN;
        double sup_t = -std::numeric_limits<double>::infinity();
        for (const auto& y : g.poles) {
            const double te = hamilton ? t + t0 : t;
            double A = 0.0;
            if (hamilton) {
                const double times[] = {t0, te};
                A = kernel_sup(m, y, times, g.resolution).value;
            }
            const double R_support = bound == BoundSelector::Noncompact ? distance(m, y, origin) : 0.0;
            const auto jets = kernel_jets_parallel(m, sg.points, te, y);
            for (std::size_t i = 0; i < jets.size(); ++i) {
                const KernelJet& j = jets[i];
                if (!usable(j, t)) {
                    r.excluded.push_back({sg.points[i], y, t});
                    continue;
                }
                ++r.evaluated;
                const double tY = tY_of(j.ld, t);
                double lhs = tY, rhs = rhs_t, err = t * j.ld.error_estimate;
                switch (bound) {
                    case BoundSelector::Classical:
                        lhs = tY_of(j.ld, t, alpha);
                        err *= alpha;
                        break;
                    case BoundSelector::KernelGradient: lhs = t * j.ld.grad_norm2(); break;
                    case BoundSelector::Hamilton:
                        lhs = t * j.ld.grad_norm2();
                        rhs = rhs_hamilton(t, K, std::max(A, j.eval.value), j.eval.value);
                        // ln(A/f) inherits the relative error of both values.
                        err += (1.0 + 2.0 * K * t) * 2.0 * j.eval.tail_bound / j.eval.value;
                        break;
                    case BoundSelector::Noncompact:
                        rhs = rhs_noncompact(n, K, t, *family, d_origin[i], R_support, c);
                        break;
                    default: break;
                }
                const double margin = rhs - lhs;
                if (tY > r.sup_tY) {
                    r.sup_tY = tY;
                    r.sup_at = {sg.points[i], y, t};
                }
                sup_t = std::max(sup_t, tY);
                if (margin < r.min_margin) {
                    r.min_margin = margin;
                    r.min_at = {sg.points[i], y, t};
                }
                if (needs_diam) min_lower = std::min(min_lower, rhs_lower - lhs);
                if (margin < -(r.tolerance + err)) r.violations.push_back({{sg.points[i], y, t}, lhs, rhs, margin});
                if (opt.collect_rows) r.rows.push_back({t, sg.points[i], y, lhs, rhs, margin});
            }
        }
        if (std::isfinite(sup_t)) fit_samples.push_back({t, sup_t});
    }
    if (r.evaluated == 0) {
        r.sup_tY = kNaN;
        r.min_margin = kNaN;
    }
    if (needs_diam && r.evaluated > 0) r.min_margin_lower_diameter = min_lower;

    if (g.check_refinement) {
        std::vector<SweepRow> rows;
        for (const auto& s : fit_samples) rows.push_back({s.t, s.tY, {}, {}, 0});
        if (rows.size() == g.t_points.size()) r.refinement = compare_refined(m, g, rows);
    }
    if (opt.fit && !fit_samples.empty() && m.compact()) {
        r.fit = minimal_constant_fit(fit_samples, n, K, r.diameter->upper);
    }
    if (m.compact() && !hamilton) r.large_time = large_time_ratios(m, g);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// ---------------------------------------------------------------------------
// Scenario reproductions
// ---------------------------------------------------------------------------

H3Scan h3_counterexample_scan(double r_max, double t, int steps) {
    if (!(r_max > 1.0)) fail(ErrorKind::Domain, "h3 scan needs r_max > 1");
    if (!(t > 0.0)) fail(ErrorKind::Domain, "h3 scan needs t > 0");
    if (steps < 2) fail(ErrorKind::Domain, "h3 scan needs at least 2 steps");
    const Manifold h3 = Manifold::hyperbolic3();
    const Point o = origin_point(h3);
    H3Scan s;
    s.t = t;
    s.r_max = r_max;
    for (int i = 0; i <= steps; ++i) {
        const double r = r_max * i / steps;
        const LogDerivatives ld = kernel_log_derivatives(h3, Point{{r, 0.5 * kPi, 0.0}}, t, o);
        H3ScanRow row;
        row.r = r;
        row.tY = tY_of(ld, t);
        row.asymptote = r + 2.0 * t + 0.5;
        row.residual = row.tY - row.asymptote;
        s.rows.push_back(row);
    }
    // Least squares on the outer half, where the residual is in its 1/r regime.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const auto& row : s.rows) {
        if (row.r < 0.5 * r_max || row.r < 1.0 || row.residual == 0.0) continue;
        const double lx = std::log(row.r), ly = std::log(std::abs(row.residual));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++cnt;
    }
    if (cnt >= 2) s.decay_exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    else s.decay_exponent = kNaN;
    return s;
}

AdditivityReport product_additivity_check(const Manifold& m0, const GridSpec& g) {
    if (!m0.compact()) fail(ErrorKind::Incompatible, "product additivity takes a compact first factor");
    validate_grid_spec(m0, g);
    const Manifold line = Manifold::euclidean(1);
    const Manifold prod = Manifold::product(m0, line);
    const SpaceGrid sg = make_space_grid(m0, g.resolution, g.window);
    // Fixed offsets along the line factor, cycled over the grid.
    constexpr double kLine[] = {0.0, 0.7, -1.3, 2.1};
    AdditivityReport rep;
    rep.manifold = prod.spec();
    for (double t : g.t_points) {
        for (const auto& y : g.poles) {
            const Point py = join_points(y, Point{{0.0}});
            std::vector<Point> xs;
            xs.reserve(sg.points.size());
            for (std::size_t i = 0; i < sg.points.size(); ++i) xs.push_back(join_points(sg.points[i], Point{{kLine[i % 4]}}));
            const auto base = kernel_jets_parallel(m0, sg.points, t, y);
            const auto both = kernel_jets_parallel(prod, xs, t, py);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                if (!usable(base[i], t) || !usable(both[i], t)) continue;
                ++rep.samples;
                const double dev = std::abs(tY_of(both[i].ld, t) - tY_of(base[i].ld, t) - 0.5);
                const double allow = 1e-12 + t * (base[i].ld.error_estimate + both[i].ld.error_estimate);
                rep.tolerance = std::max(rep.tolerance, allow);
                if (dev > rep.max_deviation) {
                    rep.max_deviation = dev;
                    rep.worst = {xs[i], py, t};
                }
                if (dev > allow) ++rep.failures;
            }
        }
    }
    return rep;
}

TransferReport transfer_check(const Manifold& m, int trials, std::uint64_t seed, const GridSpec& g) {
    if (!m.compact()) fail(ErrorKind::Incompatible, "transfer check needs a compact manifold");
    if (trials < 1) fail(ErrorKind::Domain, "transfer check needs at least one trial");
    validate_grid_spec(m, g);
    const SpaceGrid sg = make_space_grid(m, g.resolution, g.window);
    const auto npts = static_cast<std::ptrdiff_t>(sg.points.size());
    Rng rng(seed);
    TransferReport rep;
    rep.manifold = m.spec();
    rep.seed = seed;
    for (int trial = 0; trial < trials; ++trial) {
        std::vector<MixtureSource> src;
        const int k = rng.integer(1, 5);
        for (int i = 0; i < k; ++i) {
            Point p = rng.point(m);
            const double w = std::exp(rng.uniform(std::log(1e-3), std::log(1e3)));
            src.push_back({std::move(p), w});
        }
        const MixtureSolution mix = make_mixture(m, src);
        TransferTrial tr;
        tr.sources = k;
        tr.mixture_max = -std::numeric_limits<double>::infinity();
        tr.kernel_max = -std::numeric_limits<double>::infinity();
        tr.pointwise = -std::numeric_limits<double>::infinity();
        for (double t : g.t_points) {
            std::vector<double> point_max(sg.points.size(), -std::numeric_limits<double>::infinity());
            for (const auto& s : src) {
                const auto jets = kernel_jets_parallel(m, sg.points, t, s.point);
                for (std::size_t i = 0; i < jets.size(); ++i) {
                    if (!usable(jets[i], t)) continue;
                    const double v = tY_of(jets[i].ld, t);
                    point_max[i] = std::max(point_max[i], v);
                    tr.kernel_max = std::max(tr.kernel_max, v);
                }
            }
            std::vector<double> mix_tY(sg.points.size());
            std::vector<char> ok(sg.points.size(), 1);
#pragma omp parallel for schedule(static)
            for (std::ptrdiff_t i = 0; i < npts; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                try {
                    const LogDerivatives ld = mixture_log_derivatives(mix, sg.points[ui], t);
                    mix_tY[ui] = tY_of(ld, t);
                    ok[ui] = t * ld.error_estimate <= kTYErrorCap;
                } catch (const Error&) {
                    ok[ui] = 0;
                }
            }
            for (std::size_t i = 0; i < mix_tY.size(); ++i) {
                if (!ok[i]) {
                    ++rep.unresolved;
                    continue;
                }
                tr.mixture_max = std::max(tr.mixture_max, mix_tY[i]);
                if (std::isfinite(point_max[i])) tr.pointwise = std::max(tr.pointwise, mix_tY[i] - point_max[i]);
            }
        }
        tr.gap = tr.mixture_max - tr.kernel_max;
        tr.passed = tr.gap <= 1e-8;
        if (!tr.passed) ++rep.failures;
        rep.worst_gap = trial == 0 ? tr.gap : std::max(rep.worst_gap, tr.gap);
        rep.trials.push_back(tr);
    }
    return rep;
}

HarnackReport harnack_check(const Manifold& m, int configurations, std::uint64_t seed, double alpha) {
    if (configurations < 1) fail(ErrorKind::Domain, "harnack check needs at least one configuration");
    const int n = m.dim();
    const double K = curvature_summary(m).ricci_lower;
    (void)harnack_log_factor(1.0, 2.0, 0.0, n, K, alpha);  // reject alpha up front
    const double t_lo = std::max(0.1, kernel_time_threshold(m));
    Rng rng(seed);
    HarnackReport rep;
    rep.manifold = m.spec();
    rep.seed = seed;
    rep.alpha = alpha;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < configurations; ++i) {
        const Point y = rng.point(m), x = rng.point(m), z = rng.point(m);
        const double t1 = rng.uniform(t_lo, 2.0);
        const double t2 = t1 + rng.uniform(0.05, 2.0);
        double ux = 0.0, uz = 0.0;
        try {
            ux = kernel_value(m, x, t1, y).log_value;
            uz = kernel_value(m, z, t2, y).log_value;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Unresolved) throw;
            continue;
        }
        ++rep.configurations;
        const double margin = uz + harnack_log_factor(t1, t2, distance(m, x, z), n, K, alpha) - ux;
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < -1e-10) ++rep.violations;
    }
    return rep;
}

double integrate_kernel(const Manifold& m, const Point& y, double t) {
    if (!m.compact()) fail(ErrorKind::Unsupported, "kernel integral needs a compact manifold");
    validate_point(m, y);
    auto resolution_for = [t](double length) {
        // Trapezoid error on a periodic Gaussian of width sqrt(2t) is ~exp(-4 pi^2 t / h^2).
        const double h = kPi * std::sqrt(t / 10.0);
        return std::max(128, static_cast<int>(std::ceil(length / h)));
    };
    auto sum_grid = [&](const SpaceGrid& sg, auto&& weight) {
        const auto jets = kernel_jets_parallel(m, sg.points, t, y);
        double s = 0.0;
        for (std::size_t i = 0; i < jets.size(); ++i) {
            if (jets[i].resolved) s += jets[i].eval.value * weight(sg.points[i]);
        }
        return s;
    };
    return std::visit(
        overloaded{
            [&](const Circle& c) {
                const int res = resolution_for(c.length);
                return sum_grid(make_space_grid(m, res), [&](const Point&) { return c.length / res; });
            },
            [&](const FlatTorus& f) {
                double longest = 0.0, cell = 1.0;
                for (double l : f.lengths) longest = std::max(longest, l);
                const int res = std::min(resolution_for(longest), f.lengths.size() > 2 ? 64 : 512);
                for (double l : f.lengths) cell *= l / res;
                return sum_grid(make_space_grid(m, res), [&](const Point&) { return cell; });
            },
            [&](const Sphere2& s) {
                const int nphi = std::max(64, resolution_for(2.0 * kPi * s.radius));
                auto ring = [&](double th) {
                    std::vector<Point> pts;
                    for (int j = 0; j < nphi; ++j) pts.push_back(Point{{th, 2.0 * kPi * j / nphi}});
                    const auto jets = kernel_jets_serial(m, pts, t, y);
                    double acc = 0.0;
                    for (const auto& j : jets) acc += j.resolved ? j.eval.value : 0.0;
                    return acc * 2.0 * kPi / nphi * std::sin(th) * s.radius * s.radius;
                };
                return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(ring, 0.0, kPi, 12, 1e-12);
            },
            [&](const RevolutionSurface& s) {
                const int res = s.settings.spectral_grid;
                const double a = s.profile.meridian_scale();
                const double cell = (2.0 * kPi / res) * (2.0 * kPi / res);
                return sum_grid(make_space_grid(m, res),
                                [&](const Point& p) { return cell * a * s.profile.rho(p.coords[1]); });
            },
            [&](const Product& p) {
                auto [yl, yr] = split_point(p, y);
                return integrate_kernel(*p.left, yl, t) * integrate_kernel(*p.right, yr, t);
            },
            [&](const auto&) -> double { fail(ErrorKind::Unsupported, "kernel integral needs a compact manifold"); },
        },
        m.kind());
}

// ---------------------------------------------------------------------------

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

int Rng::integer(int lo, int hi) {
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
}

Point Rng::point(const Manifold& m, double window) {
    return std::visit(
        overloaded{
            [&](const Euclidean& e) {
                std::vector<double> c;
                for (int i = 0; i < e.n; ++i) c.push_back(uniform(-window, window));
                return Point{c};
            },
            [&](const Circle& c) { return make_point(m, {uniform() * c.length}); },
            [&](const FlatTorus& f) {
                std::vector<double> c;
                for (double l : f.lengths) c.push_back(uniform() * l);
                return make_point(m, std::move(c));
            },
            [&](const Sphere2&) {
                const double th = std::acos(1.0 - 2.0 * uniform());
                return make_point(m, {th, 2.0 * kPi * uniform()});
            },
            [&](const Hyperbolic3&) {
                const double r = uniform() * window;
                const double th = std::acos(1.0 - 2.0 * uniform());
                return make_point(m, {r, th, 2.0 * kPi * uniform()});
            },
            [&](const RevolutionSurface&) { return make_point(m, {2.0 * kPi * uniform(), 2.0 * kPi * uniform()}); },
            [&](const Product& p) {
                const Point l = point(*p.left, window);
                return join_points(l, point(*p.right, window));
            },
        },
        m.kind());
}

}  // namespace heatlab
