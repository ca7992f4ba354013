#include "heatlab/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "heatlab/error.hpp"
#include "heatlab/format.hpp"
#include "heatlab/spectral.hpp"
#include "kernels/revolution_sums.hpp"

namespace heatlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSphereMinTau = 0.01;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::Domain, "time must be positive and finite");
}

[[noreturn]] void unresolved(const std::string& where, double value, double tail) {
    fail(ErrorKind::Unresolved, where + ": truncation/rounding bound " + format_double(tail) +
                                    " is not below the kernel value " + format_double(value));
}

// Log-derivative errors from absolute errors on G, grad G and dt G.
struct Propagated {
    double grad = 0.0, dt = 0.0, lap = 0.0;
    double total() const { return grad + dt + lap; }
};
Propagated propagate(double G, double err0, double err_grad, double dt_abs, double err_dt, double g_norm) {
    Propagated p;
    p.grad = err_grad / G + g_norm * err0 / G;
    p.dt = err_dt / G + dt_abs * err0 / G;
    p.lap = p.dt + 2.0 * g_norm * p.grad;
    return p;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// ---------------------------------------------------------------------------

KernelJet euclidean_jet(const Euclidean& e, const Point& x, double t, const Point& y) {
    KernelJet j;
    const int n = e.n;
    double d2 = 0.0;
    j.ld.grad.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double dx = x.coords[static_cast<std::size_t>(i)] - y.coords[static_cast<std::size_t>(i)];
        d2 += dx * dx;
        j.ld.grad[static_cast<std::size_t>(i)] = -dx / (2.0 * t);
    }
    j.eval.log_value = -0.5 * n * std::log(4.0 * kPi * t) - d2 / (4.0 * t);
    j.eval.value = std::exp(j.eval.log_value);
    j.eval.tail_bound = 4.0 * kEps * j.eval.value;
    j.ld.lap_ln = -0.5 * n / t;
    j.ld.dt_ln = -0.5 * n / t + d2 / (4.0 * t * t);
    j.ld.method = DerivativeMethod::Analytic;
    j.ld.error_estimate = 8.0 * kEps * (std::abs(j.ld.lap_ln) + std::abs(j.ld.dt_ln) + d2 / (4.0 * t * t));
    return j;
}

// Product of one-dimensional circle kernels in arclength coordinates.
KernelJet circles_jet(std::span<const double> lengths, const Point& x, double t, const Point& y) {
    KernelJet j;
    j.ld.method = DerivativeMethod::SeriesTermwise;
    j.ld.grad.resize(lengths.size());
    double rel0 = 0.0;  // relative error of the product value
    double err = 0.0;
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const CircleSeries s = circle_series(lengths[i], x.coords[i] - y.coords[i], t);
        if (!(s.err0 < s.value)) unresolved("circle kernel", s.value, s.err0);
        const double g = s.d1 / s.value;
        const double dt = s.dt / s.value;
        j.ld.grad[i] = g;
        j.ld.lap_ln += s.d2 / s.value - g * g;
        j.ld.dt_ln += dt;
        j.eval.log_value += std::log(s.value);
        rel0 += s.err0 / s.value;
        const double eg = s.err1 / s.value + std::abs(g) * s.err0 / s.value;
        const double e2 = s.err2 / s.value + std::abs(s.d2 / s.value) * s.err0 / s.value;
        const double et = s.err_t / s.value + std::abs(dt) * s.err0 / s.value;
        err += eg + et + e2 + 2.0 * std::abs(g) * eg;
    }
    j.eval.value = std::exp(j.eval.log_value);
    j.eval.tail_bound = j.eval.value * (std::exp(rel0) - 1.0);
    j.ld.error_estimate = err;
    return j;
}

KernelJet sphere_jet(const Sphere2& sp, const Manifold& m, const Point& x, double t, const Point& y) {
    const double R = sp.radius;
    const double tau = t / (R * R);
    if (tau < kSphereMinTau) {
        fail(ErrorKind::Truncation, "sphere kernel refuses t/R^2 = " + format_double(tau) +
                                        " < 0.01 (small-time Legendre series loses precision)");
    }
    const double gamma = distance(m, x, y) / R;
    const double xc = std::cos(gamma), sg = std::sin(gamma);
    const double norm = 1.0 / (4.0 * kPi * R * R);

    // Cut where the weighted majorant (2l+1) l(l+1)^2 e^{-l(l+1)tau} is negligible.
    int lmax = 1;
    while (true) {
        const double ll = static_cast<double>(lmax) * (lmax + 1);
        if ((2.0 * lmax + 1.0) * ll * ll * std::exp(-ll * tau) < 1e-19) break;
        ++lmax;
    }
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, a0 = 0.0, a1 = 0.0, a2 = 0.0;
    double p_prev = 1.0, p = xc;     // P_{l-1}, P_l
    double dp_prev = 0.0, dp = 1.0;  // P'_{l-1}, P'_l
    // l = 0
    s0 += norm;
    a0 += norm;
    for (int l = 1; l <= lmax; ++l) {
        const double ll = static_cast<double>(l) * (l + 1);
        const double c = (2.0 * l + 1.0) * norm * std::exp(-ll * tau);
        s0 += c * p;
        s1 += c * dp;
        s2 += c * ll * p;
        a0 += std::abs(c * p);
        a1 += std::abs(c * dp);
        a2 += std::abs(c * ll * p);
        const double p_next = ((2.0 * l + 1.0) * xc * p - l * p_prev) / (l + 1.0);
        const double dp_next = dp_prev + (2.0 * l + 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    // Dropped terms with |P_l| <= 1 and |P_l'| <= l(l+1)/2.
    double t0 = 0.0, t1 = 0.0, t2 = 0.0;
    for (int l = lmax + 1;; ++l) {
        const double ll = static_cast<double>(l) * (l + 1);
        const double c = (2.0 * l + 1.0) * norm * std::exp(-ll * tau);
        t0 += c;
        t1 += 0.5 * ll * c;
        t2 += ll * c;
        if (c == 0.0 || c <= 1e-20 * t0) break;
    }
    const double round = kEps * (lmax + 1);
    const double G = s0;
    const double err0 = t0 + round * a0;
    if (!(err0 < G)) unresolved("sphere kernel", G, err0);
    const double Gd = -sg / R * s1;  // d/d(distance)
    const double Gt = -s2 / (R * R);
    const double err_d = sg / R * (t1 + round * a1);
    const double err_t = (t2 + round * a2) / (R * R);

    KernelJet j;
    j.eval.value = G;
    j.eval.log_value = std::log(G);
    j.eval.tail_bound = err0;
    const double g = Gd / G;
    j.ld.grad = distance_gradient(m, x, y);
    for (double& v : j.ld.grad) v *= g;
    j.ld.dt_ln = Gt / G;
    j.ld.lap_ln = j.ld.dt_ln - g * g;  // Delta G = dt G for every term
    j.ld.method = DerivativeMethod::SeriesTermwise;
    j.ld.error_estimate = propagate(G, err0, err_d, std::abs(Gt), err_t, std::abs(g)).total();
    return j;
}

// coth r - 1/r, regular at r = 0.
double coth_minus_inv(double r) {
    if (r < 0.1) {
        const double r2 = r * r;
        return r * (1.0 / 3.0 + r2 * (-1.0 / 45.0 + r2 * (2.0 / 945.0 + r2 * (-1.0 / 4725.0 + r2 * 2.0 / 93555.0))));
    }
    return 1.0 / std::tanh(r) - 1.0 / r;
}

double log_r_over_sinh(double r) {
    if (r < 1e-2) {
        const double r2 = r * r;
        return r2 * (-1.0 / 6.0 + r2 * (1.0 / 180.0 - r2 / 2835.0));
    }
    if (r > 20.0) return std::log(2.0 * r) - r - std::log1p(-std::exp(-2.0 * r));
    return std::log(r / std::sinh(r));
}

KernelJet h3_jet(const Manifold& m, const Point& x, double t, const Point& y) {
    const double r = distance(m, x, y);
    const double q = coth_minus_inv(r);
    KernelJet j;
    j.eval.log_value = -1.5 * std::log(4.0 * kPi * t) + log_r_over_sinh(r) - t - r * r / (4.0 * t);
    j.eval.value = std::exp(j.eval.log_value);
    j.eval.tail_bound = 8.0 * kEps * j.eval.value;
    const double fr = -r / (2.0 * t) - q;  // d/dr ln G
    j.ld.grad = distance_gradient(m, x, y);
    for (double& v : j.ld.grad) v *= fr;
    j.ld.lap_ln = -1.5 / t - 1.0 - q * q - r * q / t;
    j.ld.dt_ln = -1.5 / t - 1.0 + r * r / (4.0 * t * t);
    j.ld.method = DerivativeMethod::Analytic;
    j.ld.error_estimate = 16.0 * kEps * (std::abs(j.ld.lap_ln) + std::abs(j.ld.dt_ln) + fr * fr);
    return j;
}

KernelJet revolution_jet(const RevolutionSurface& s, const Point& x, double t, const Point& y) {
    const SpectralModel& model = spectral_model_for(s);
    if (t < model.t_min) {
        fail(ErrorKind::Truncation, "t = " + format_double(t) + " is below the spectral model t_min = " +
                                        format_double(model.t_min) + "; rebuild with a smaller t_min");
    }
    const detail::PoleTerms pole = detail::pole_terms(model, y.coords[1], t);
    const detail::ModeSums sums = detail::mode_sums(model, pole, x.coords[1]);
    return detail::combine_mode_sums(model, s.profile, pole, sums, x.coords[0] - y.coords[0], x.coords[1], t);
}

KernelJet product_jet(const Product& p, const Point& x, double t, const Point& y) {
    auto [xl, xr] = split_point(p, x);
    auto [yl, yr] = split_point(p, y);
    const KernelJet a = kernel_jet(*p.left, xl, t, yl);
    const KernelJet b = kernel_jet(*p.right, xr, t, yr);
    KernelJet j;
    j.eval.log_value = a.eval.log_value + b.eval.log_value;
    j.eval.value = a.eval.value * b.eval.value;
    j.eval.tail_bound = (a.eval.value + a.eval.tail_bound) * (b.eval.value + b.eval.tail_bound) - j.eval.value;
    j.ld.grad = a.ld.grad;
    j.ld.grad.insert(j.ld.grad.end(), b.ld.grad.begin(), b.ld.grad.end());
    j.ld.lap_ln = a.ld.lap_ln + b.ld.lap_ln;
    j.ld.dt_ln = a.ld.dt_ln + b.ld.dt_ln;
    j.ld.error_estimate = a.ld.error_estimate + b.ld.error_estimate;
    if (a.ld.method == DerivativeMethod::FiniteDifference || b.ld.method == DerivativeMethod::FiniteDifference) {
        j.ld.method = DerivativeMethod::FiniteDifference;
    } else if (a.ld.method == DerivativeMethod::Analytic && b.ld.method == DerivativeMethod::Analytic) {
        j.ld.method = DerivativeMethod::Analytic;
    } else {
        j.ld.method = DerivativeMethod::SeriesTermwise;
    }
    return j;
}

KernelJet dispatch(const Manifold& m, const Point& x, double t, const Point& y) {
    return std::visit(overloaded{
                          [&](const Euclidean& e) { return euclidean_jet(e, x, t, y); },
                          [&](const Circle& c) { return circles_jet(std::span<const double>(&c.length, 1), x, t, y); },
                          [&](const FlatTorus& f) { return circles_jet(f.lengths, x, t, y); },
                          [&](const Sphere2& s) { return sphere_jet(s, m, x, t, y); },
                          [&](const Hyperbolic3&) { return h3_jet(m, x, t, y); },
                          [&](const RevolutionSurface& s) { return revolution_jet(s, x, t, y); },
                          [&](const Product& p) { return product_jet(p, x, t, y); },
                      },
                      m.kind());
}

}  // namespace

std::string_view to_string(DerivativeMethod method) {
    switch (method) {
        case DerivativeMethod::Analytic: return "analytic";
        case DerivativeMethod::SeriesTermwise: return "series_termwise";
        case DerivativeMethod::FiniteDifference: return "finite_difference";
    }
    return "unknown";
}

double LogDerivatives::grad_norm2() const { return norm2(grad); }
double LogDerivatives::grad_norm() const { return std::sqrt(norm2(grad)); }

double kernel_time_threshold(const Manifold& m) {
    return std::visit(overloaded{
                          [](const Sphere2& s) { return kSphereMinTau * s.radius * s.radius; },
                          [](const RevolutionSurface& s) { return s.settings.t_min; },
                          [](const Product& p) {
                              return std::max(kernel_time_threshold(*p.left), kernel_time_threshold(*p.right));
                          },
                          [](const auto&) { return 0.0; },
                      },
                      m.kind());
}

KernelJet kernel_jet(const Manifold& m, const Point& x, double t, const Point& y) {
    validate_point(m, x);
    validate_point(m, y);
    check_time(t);
    KernelJet j = dispatch(m, x, t, y);
    if (j.ld.method == DerivativeMethod::SeriesTermwise) {
        // Term-wise tails too large for the derivatives: try the difference oracle.
        const double scale = 1.0 + std::abs(j.ld.lap_ln) + std::abs(j.ld.dt_ln) + j.ld.grad_norm2();
        if (!(j.ld.error_estimate < 1e-3 * scale) && !m.as<RevolutionSurface>()) {
            LogDerivatives fd = fd_log_derivatives(m, x, t, y);
            if (fd.error_estimate < j.ld.error_estimate) j.ld = std::move(fd);
        }
    }
    return j;
}

KernelEvaluation kernel_value(const Manifold& m, const Point& x, double t, const Point& y) {
    return kernel_jet(m, x, t, y).eval;
}

LogDerivatives kernel_log_derivatives(const Manifold& m, const Point& x, double t, const Point& y) {
    return kernel_jet(m, x, t, y).ld;
}

// ---------------------------------------------------------------------------

LogDerivatives fd_log_derivatives(const Manifold& m, const Point& x, double t, const Point& y) {
    validate_point(m, x);
    check_time(t);
    const double threshold = kernel_time_threshold(m);
    auto f = [&](const std::vector<double>& c, double tt) {
        return dispatch(m, make_point(m, c), tt, y).eval.log_value;
    };
    const double f0 = f(x.coords, t);
    const double scale = std::abs(f0) + 1.0;
    const std::size_t k = x.coords.size();
    std::vector<double> d1(k), d2(k);
    double err = 0.0;
    std::vector<double> err1(k), err2(k);
    for (std::size_t i = 0; i < k; ++i) {
        auto shifted = [&](double h) {
            std::vector<double> c = x.coords;
            c[i] += h;
            return f(c, t);
        };
        const double mag = std::max(1.0, std::abs(x.coords[i]));
        const double h1 = std::cbrt(kEps) * mag;
        auto D = [&](double h) { return (shifted(h) - shifted(-h)) / (2.0 * h); };
        const double Dh = D(h1), Dh2 = D(0.5 * h1);
        d1[i] = (4.0 * Dh2 - Dh) / 3.0;
        err1[i] = std::abs(d1[i] - Dh2) + kEps * scale / h1;
        const double h2 = std::pow(kEps, 1.0 / 6.0) * mag;
        auto S = [&](double h) { return (shifted(h) - 2.0 * f0 + shifted(-h)) / (h * h); };
        const double Sh = S(h2), Sh2 = S(0.5 * h2);
        d2[i] = (4.0 * Sh2 - Sh) / 3.0;
        err2[i] = std::abs(d2[i] - Sh2) + 16.0 * kEps * scale / (h2 * h2);
    }
    const ChartMetric cm = chart_metric(m, x);
    LogDerivatives ld;
    ld.method = DerivativeMethod::FiniteDifference;
    ld.grad.resize(k);
    double eg = 0.0, elap = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double s = std::sqrt(cm.inv_metric[i]);
        ld.grad[i] = s * d1[i];
        eg += s * err1[i];
        ld.lap_ln += cm.inv_metric[i] * d2[i] + cm.drift[i] * d1[i];
        elap += cm.inv_metric[i] * err2[i] + std::abs(cm.drift[i]) * err1[i];
    }
    const double ht = std::cbrt(kEps) * t;
    double et = 0.0;
    if (t - ht > threshold) {
        auto D = [&](double h) { return (f(x.coords, t + h) - f(x.coords, t - h)) / (2.0 * h); };
        const double a = D(ht), b = D(0.5 * ht);
        ld.dt_ln = (4.0 * b - a) / 3.0;
        et = std::abs(ld.dt_ln - b) + kEps * scale / ht;
    } else {
        // One-sided three-point formula near the validity threshold.
        auto F = [&](double h) { return (-3.0 * f0 + 4.0 * f(x.coords, t + h) - f(x.coords, t + 2.0 * h)) / (2.0 * h); };
        const double a = F(ht), b = F(0.5 * ht);
        ld.dt_ln = (4.0 * b - a) / 3.0;
        et = std::abs(ld.dt_ln - b) + 4.0 * kEps * scale / ht;
    }
    err = eg + elap + et + 2.0 * ld.grad_norm() * eg;
    ld.error_estimate = err;
    return ld;
}

// ---------------------------------------------------------------------------

std::vector<KernelJet> kernel_jets_serial(const Manifold& m, std::span<const Point> xs, double t, const Point& y) {
    std::vector<KernelJet> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        try {
            out[i] = kernel_jet(m, xs[i], t, y);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Unresolved) throw;
            out[i].resolved = false;
        }
    }
    return out;
}

std::vector<KernelJet> kernel_jets_parallel(const Manifold& m, std::span<const Point> xs, double t, const Point& y) {
    if (const auto* s = m.as<RevolutionSurface>()) {
        validate_point(m, y);
        check_time(t);
        return detail::revolution_batch(*s, xs, t, y);
    }
    // Fail fast on errors that do not depend on x.
    validate_point(m, y);
    check_time(t);
    if (t < kernel_time_threshold(m)) {
        if (!xs.empty()) (void)kernel_jet(m, xs.front(), t, y);
    }
    std::vector<KernelJet> out(xs.size());
    std::vector<int> failed(xs.size(), 0);
    std::exception_ptr first_error;
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        try {
            out[ui] = kernel_jet(m, xs[ui], t, y);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Unresolved) {
                out[ui].resolved = false;
            } else {
                failed[ui] = 1;
            }
        }
    }
    // Re-raise the first hard failure in input order, serially.
    for (std::size_t i = 0; i < failed.size(); ++i) {
        if (failed[i]) (void)kernel_jet(m, xs[i], t, y);
    }
    return out;
}

KernelSup kernel_sup(const Manifold& m, const Point& y, std::span<const double> times, int resolution) {
    if (!m.compact()) fail(ErrorKind::Unsupported, "kernel_sup needs a compact manifold");
    if (resolution < 16) fail(ErrorKind::Domain, "kernel_sup grid needs at least 16 points per period");
    if (times.empty()) fail(ErrorKind::Domain, "kernel_sup needs at least one time");
    SpaceGrid grid = make_space_grid(m, resolution);
    grid.points.push_back(y);
    KernelSup best;
    best.resolution = resolution;
    best.value = -1.0;
    for (double t : times) {
        const auto jets = kernel_jets_parallel(m, grid.points, t, y);
        for (std::size_t i = 0; i < jets.size(); ++i) {
            if (jets[i].resolved && jets[i].eval.value > best.value) {
                best.value = jets[i].eval.value;
                best.argmax = grid.points[i];
                best.t_argmax = t;
            }
        }
    }
    return best;
}

}  // namespace heatlab
