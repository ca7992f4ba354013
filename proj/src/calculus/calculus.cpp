#include "heatlab/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "heatlab/error.hpp"

namespace heatlab {

LiYauEvaluation li_yau_quantity(const LogDerivatives& ld, double alpha, double t) {
    if (!(alpha >= 1.0)) fail(ErrorKind::Domain, "alpha must be >= 1");
    const double g2 = ld.grad_norm2();
    LiYauEvaluation e;
    e.alpha = alpha;
    e.t = t;
    e.Y_alpha = g2 - alpha * ld.dt_ln;
    e.tY = t * (g2 - ld.dt_ln);
    e.error = t * ld.error_estimate;
    return e;
}

// ---------------------------------------------------------------------------

namespace {

struct RadialField {
    int n;
    double K;
    double (*Y)(double r, double t, int n);
    double (*dlog)(double r, double t);       // d/dr ln u
    double (*area_ratio)(double r, int n);    // (n-1) * (area element)'/(area element)
};

double euclid_Y(double, double t, int n) { return 0.5 * n / t; }
double euclid_dlog(double r, double t) { return -r / (2.0 * t); }
double euclid_ratio(double r, int n) { return (n - 1) / r; }

double h3_q(double r) {
    if (r < 0.1) {
        const double r2 = r * r;
        return r * (1.0 / 3.0 + r2 * (-1.0 / 45.0 + r2 * (2.0 / 945.0 + r2 * (-1.0 / 4725.0 + r2 * 2.0 / 93555.0))));
    }
    return 1.0 / std::tanh(r) - 1.0 / r;
}
double h3_Y(double r, double t, int) {
    const double q = h3_q(r);
    return q * q + r * q / t + 1.5 / t + 1.0;
}
double h3_dlog(double r, double t) { return -r / (2.0 * t) - h3_q(r); }
double h3_ratio(double r, int) { return 2.0 / std::tanh(r); }

}  // namespace

BochnerResidual bochner_residual(const Manifold& m, const Point& x, double t, const Point& y, double h) {
    if (!(t > 0.0)) fail(ErrorKind::Domain, "time must be positive");
    if (!(h > 0.0)) fail(ErrorKind::Domain, "difference step must be positive");
    RadialField f{};
    if (const auto* e = m.as<Euclidean>()) {
        f = {e->n, 0.0, euclid_Y, euclid_dlog, euclid_ratio};
    } else if (m.as<Hyperbolic3>()) {
        f = {3, 2.0, h3_Y, h3_dlog, h3_ratio};
    } else {
        fail(ErrorKind::Unsupported, "Bochner residual needs a closed-form radial Y field (euclidean or h3), got " +
                                         m.kind_name());
    }
    const double r = distance(m, x, y);
    // Y is even in r, so differences across r = 0 stay valid.
    auto Y = [&](double rr, double tt) { return f.Y(std::abs(rr), tt, f.n); };
    auto d1 = [&](double hh) { return (Y(r + hh, t) - Y(r - hh, t)) / (2.0 * hh); };
    auto d2 = [&](double hh) { return (Y(r + hh, t) - 2.0 * Y(r, t) + Y(r - hh, t)) / (hh * hh); };
    const double ht = h * t;
    auto dt = [&](double hh) { return (Y(r, t + hh) - Y(r, t - hh)) / (2.0 * hh); };
    const double Yr = (4.0 * d1(0.5 * h) - d1(h)) / 3.0;
    const double Yrr = (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
    const double Yt = (4.0 * dt(0.5 * ht) - dt(ht)) / 3.0;
    // Radial Laplacian; at the pole Y'' counts once per dimension.
    const double lap = r > h ? Yrr + f.area_ratio(r, f.n) * Yr : f.n * Yrr;
    const double g = f.dlog(r, t);
    const double y0 = Y(r, t);
    BochnerResidual b;
    b.lhs = lap - Yt + 2.0 * g * Yr;
    b.rhs = 2.0 / f.n * y0 * y0 - 2.0 * f.K * g * g;
    b.residual = b.lhs - b.rhs;
    return b;
}

// ---------------------------------------------------------------------------

MixtureSolution make_mixture(const Manifold& m, std::vector<MixtureSource> sources, double start_offset) {
    if (sources.empty()) fail(ErrorKind::Domain, "a mixture needs at least one source");
    if (!(start_offset >= 0.0)) fail(ErrorKind::Domain, "mixture start offset must be >= 0");
    for (const auto& s : sources) {
        if (!(s.weight > 0.0) || !std::isfinite(s.weight)) fail(ErrorKind::Domain, "mixture weights must be positive");
        validate_point(m, s.point);
    }
    return MixtureSolution{m, std::move(sources), start_offset};
}

MixtureEvaluation mixture_eval(const MixtureSolution& s, const Point& x, double t) {
    const double tt = t + s.start_offset;
    std::vector<KernelJet> jets;
    std::vector<double> logw;
    for (const auto& src : s.sources) {
        try {
            jets.push_back(kernel_jet(s.manifold, x, tt, src.point));
            logw.push_back(std::log(src.weight) + jets.back().eval.log_value);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Unresolved) throw;
        }
    }
    if (jets.empty()) fail(ErrorKind::Unresolved, "every kernel term of the mixture is unresolved");
    // Log-sum-exp weights omega_i = w_i G_i / u.
    const double top = *std::max_element(logw.begin(), logw.end());
    double sum = 0.0;
    for (double l : logw) sum += std::exp(l - top);
    MixtureEvaluation out;
    out.log_value = top + std::log(sum);
    LogDerivatives& ld = out.ld;
    ld.grad.assign(jets.front().ld.grad.size(), 0.0);
    double lap_u = 0.0, rel_tail = 0.0;
    ld.method = DerivativeMethod::Analytic;
    for (std::size_t i = 0; i < jets.size(); ++i) {
        const double w = std::exp(logw[i] - top) / sum;
        const LogDerivatives& li = jets[i].ld;
        for (std::size_t k = 0; k < ld.grad.size(); ++k) ld.grad[k] += w * li.grad[k];
        ld.dt_ln += w * li.dt_ln;
        lap_u += w * (li.lap_ln + li.grad_norm2());
        ld.error_estimate += w * li.error_estimate;
        if (jets[i].eval.value > 0.0) rel_tail = std::max(rel_tail, jets[i].eval.tail_bound / jets[i].eval.value);
        if (li.method == DerivativeMethod::FiniteDifference) {
            ld.method = DerivativeMethod::FiniteDifference;
        } else if (li.method == DerivativeMethod::SeriesTermwise && ld.method == DerivativeMethod::Analytic) {
            ld.method = DerivativeMethod::SeriesTermwise;
        }
    }
    ld.lap_ln = lap_u - ld.grad_norm2();
    // Relative errors in the weights move every weighted average.
    ld.error_estimate += 2.0 * rel_tail * (std::abs(lap_u) + std::abs(ld.dt_ln) + ld.grad_norm2());
    return out;
}

LogDerivatives mixture_log_derivatives(const MixtureSolution& s, const Point& x, double t) {
    return mixture_eval(s, x, t).ld;
}

}  // namespace heatlab
