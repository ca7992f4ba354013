#include <algorithm>
#include <cmath>
#include <limits>

#include "heatlab/error.hpp"
#include "heatlab/format.hpp"
#include "kernels/revolution_sums.hpp"

namespace heatlab::detail {

namespace {
constexpr double kEps = std::numeric_limits<double>::epsilon();
}

PoleTerms pole_terms(const SpectralModel& model, double v_pole, double t) {
    PoleTerms p;
    p.coef.reserve(model.pair_count());
    p.lambda_coef.reserve(model.pair_count());
    for (const auto& mode : model.modes) {
        for (std::size_t j = 0; j < mode.eigenvalues.size(); ++j) {
            const double lam = mode.eigenvalues[j];
            const double c = std::exp(-lam * t) * mode.functions[j](v_pole);
            p.coef.push_back(c);
            p.lambda_coef.push_back(lam * c);
        }
    }
    return p;
}

ModeSums mode_sums(const SpectralModel& model, const PoleTerms& pole, double v) {
    ModeSums out(model.modes.size());
    std::size_t k = 0;
    for (std::size_t mi = 0; mi < model.modes.size(); ++mi) {
        const auto& mode = model.modes[mi];
        ModeSum& s = out[mi];
        for (std::size_t j = 0; j < mode.eigenvalues.size(); ++j, ++k) {
            const auto jet = mode.functions[j].jet(v);
            const double c = pole.coef[k], cl = pole.lambda_coef[k];
            s.a0 += c * jet.value;
            s.a1 += c * jet.d1;
            s.a2 += c * jet.d2;
            s.al += cl * jet.value;
            s.b0 += std::abs(c * jet.value);
            s.b1 += std::abs(c * jet.d1);
            s.bl += std::abs(cl * jet.value);
        }
    }
    return out;
}

KernelJet combine_mode_sums(const SpectralModel& model, const ProfileCurve& profile, const PoleTerms& pole,
                            const ModeSums& sums, double du, double v, double t) {
    double G = 0.0, Gu = 0.0, Gv = 0.0, Gvv = 0.0, Guu = 0.0, Gt = 0.0;
    double A0 = 0.0, Au = 0.0, Av = 0.0, At = 0.0;
    for (std::size_t mi = 0; mi < sums.size(); ++mi) {
        const int m = model.modes[mi].m;
        const double w = model.mode_weight(m);
        const double c = std::cos(m * du), s = std::sin(m * du);
        const ModeSum& a = sums[mi];
        G += w * c * a.a0;
        Gu -= w * m * s * a.a0;
        Gv += w * c * a.a1;
        Gvv += w * c * a.a2;
        Guu -= w * m * m * c * a.a0;
        Gt -= w * c * a.al;
        A0 += w * a.b0;
        Au += w * m * a.b0;
        Av += w * a.b1;
        At += w * a.bl;
    }
    const auto tails = model.tail_bounds(t);
    const double round = kEps * static_cast<double>(pole.coef.size());
    const double err0 = tails[0] + round * A0;
    if (!(err0 < G)) {
        fail(ErrorKind::Unresolved, "revolution kernel: truncation/rounding bound " + format_double(err0) +
                                        " is not below the kernel value " + format_double(G));
    }
    const double rho = profile.rho(v), a = profile.meridian_scale();
    KernelJet j;
    j.eval.value = G;
    j.eval.log_value = std::log(G);
    j.eval.tail_bound = err0;
    j.ld.grad = {Gu / (rho * G), Gv / (a * G)};
    j.ld.dt_ln = Gt / G;
    // Every retained term satisfies Delta(term) = dt(term) for the discrete operator.
    j.ld.lap_ln = j.ld.dt_ln - j.ld.grad_norm2();
    j.ld.method = DerivativeMethod::SeriesTermwise;

    const double g = j.ld.grad_norm();
    const double err_grad = tails[1] + round * (Au / rho + Av / a);
    const double err_t = tails[2] + round * At;
    const double eg = err_grad / G + g * err0 / G;
    const double et = err_t / G + std::abs(Gt) * err0 / G;
    // Gap between the continuous Laplacian of the interpolated sum and the
    // discrete spectral one: the discretisation error of the model.
    const double lap_spline = Guu / (rho * rho) + (Gvv + profile.drho(v) / rho * Gv) / (a * a);
    const double mismatch = std::abs(lap_spline - Gt) / G;
    j.ld.error_estimate = eg + et + (et + 2.0 * g * eg) + mismatch;
    return j;
}

std::vector<KernelJet> revolution_batch(const RevolutionSurface& s, std::span<const Point> xs, double t,
                                        const Point& y) {
    const SpectralModel& model = spectral_model_for(s);
    if (t < model.t_min) {
        fail(ErrorKind::Truncation, "t = " + format_double(t) + " is below the spectral model t_min = " +
                                        format_double(model.t_min) + "; rebuild with a smaller t_min");
    }
    const PoleTerms pole = pole_terms(model, y.coords[1], t);
    std::vector<double> vs;
    vs.reserve(xs.size());
    for (const auto& x : xs) vs.push_back(x.coords[1]);
    std::sort(vs.begin(), vs.end());
    vs.erase(std::unique(vs.begin(), vs.end()), vs.end());

    std::vector<ModeSums> rows(vs.size());
    const auto nv = static_cast<std::ptrdiff_t>(vs.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < nv; ++i) {
        rows[static_cast<std::size_t>(i)] = mode_sums(model, pole, vs[static_cast<std::size_t>(i)]);
    }

    std::vector<KernelJet> out(xs.size());
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const Point& x = xs[ui];
        const auto row = static_cast<std::size_t>(std::lower_bound(vs.begin(), vs.end(), x.coords[1]) - vs.begin());
        try {
            out[ui] = combine_mode_sums(model, s.profile, pole, rows[row], x.coords[0] - y.coords[0], x.coords[1], t);
        } catch (const Error&) {
            out[ui].resolved = false;
        }
    }
    return out;
}

}  // namespace heatlab::detail
