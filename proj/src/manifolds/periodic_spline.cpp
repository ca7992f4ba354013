#include "heatlab/periodic_spline.hpp"

#include <cmath>

#include "heatlab/error.hpp"

namespace heatlab {

namespace {

// Solves the cyclic system  M_{i-1} + 4 M_i + M_{i+1} = r_i  by Sherman-Morrison
// on top of a Thomas sweep.
std::vector<double> solve_cyclic_141(std::vector<double> rhs) {
    const std::size_t n = rhs.size();
    const double gamma = -4.0;
    std::vector<double> diag(n, 4.0);
    diag[0] -= gamma;
    diag[n - 1] -= 1.0 / gamma;

    auto thomas = [&](std::vector<double> d) {
        std::vector<double> c(n, 0.0);
        std::vector<double> b = diag;
        c[0] = 1.0 / b[0];
        d[0] /= b[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double m = b[i] - c[i - 1];
            c[i] = 1.0 / m;
            d[i] = (d[i] - d[i - 1]) / m;
        }
        for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
        return d;
    };

    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = 1.0;
    const std::vector<double> x = thomas(std::move(rhs));
    const std::vector<double> z = thomas(u);
    const double fact = (x[0] + x[n - 1] / gamma) / (1.0 + z[0] + z[n - 1] / gamma);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] - fact * z[i];
    return out;
}

}  // namespace

PeriodicSpline::PeriodicSpline(std::span<const double> samples, double period)
    : values_(samples.begin(), samples.end()), period_(period) {
    const std::size_t n = values_.size();
    if (n < 4) fail(ErrorKind::Profile, "periodic spline needs at least 4 samples");
    if (!(period > 0.0)) fail(ErrorKind::Profile, "periodic spline period must be positive");
    for (double v : values_) {
        if (!std::isfinite(v)) fail(ErrorKind::Profile, "periodic spline sample is not finite");
    }
    step_ = period / static_cast<double>(n);
    std::vector<double> rhs(n);
    const double scale = 6.0 / (step_ * step_);
    for (std::size_t i = 0; i < n; ++i) {
        const double prev = values_[(i + n - 1) % n];
        const double next = values_[(i + 1) % n];
        rhs[i] = scale * (next - 2.0 * values_[i] + prev);
    }
    moments_ = solve_cyclic_141(std::move(rhs));
}

PeriodicSpline::Jet PeriodicSpline::jet(double x) const {
    const std::size_t n = values_.size();
    double pos = std::fmod(x, period_);
    if (pos < 0.0) pos += period_;
    double cell = std::floor(pos / step_);
    std::size_t i = static_cast<std::size_t>(cell);
    if (i >= n) i = n - 1;
    const double s = pos / step_ - static_cast<double>(i);
    const std::size_t j = (i + 1) % n;
    const double r = 1.0 - s;
    const double h = step_;
    const double mi = moments_[i];
    const double mj = moments_[j];

    Jet out{};
    out.value = r * values_[i] + s * values_[j] +
                h * h / 6.0 * ((r * r * r - r) * mi + (s * s * s - s) * mj);
    out.d1 = (values_[j] - values_[i]) / h + h / 6.0 * (-(3.0 * r * r - 1.0) * mi + (3.0 * s * s - 1.0) * mj);
    out.d2 = r * mi + s * mj;
    return out;
}

}  // namespace heatlab
