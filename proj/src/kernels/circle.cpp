#include <cmath>
#include <limits>
#include <numbers>

#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"

namespace heatlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_args(double L, double t) {
    if (!(L > 0.0) || !std::isfinite(L)) fail(ErrorKind::Domain, "circle length must be positive");
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::Domain, "time must be positive");
}

double reduce_offset(double offset, double L) {
    double d = std::fmod(offset, L);
    if (d > 0.5 * L) d -= L;
    if (d <= -0.5 * L) d += L;
    return d;
}

}  // namespace

CircleSeries circle_image_series(double L, double offset, double t) {
    check_args(L, t);
    const double d = reduce_offset(offset, L);
    const double c = 1.0 / std::sqrt(4.0 * kPi * t);
    // Images beyond K are below exp(-41) relative to the farthest retained one.
    const int K = static_cast<int>(std::ceil(std::sqrt(0.25 * L * L + 166.0 * t) / L + 0.5)) + 1;
    CircleSeries s;
    double abs0 = 0.0, abs1 = 0.0, abs2 = 0.0;
    for (int k = -K; k <= K; ++k) {
        const double z = d + k * L;
        const double g = c * std::exp(-z * z / (4.0 * t));
        const double g1 = -z / (2.0 * t) * g;
        const double g2 = (z * z / (4.0 * t * t) - 0.5 / t) * g;
        s.value += g;
        s.d1 += g1;
        s.d2 += g2;
        abs0 += g;
        abs1 += std::abs(g1);
        abs2 += std::abs(g2);
    }
    s.terms = 2 * K + 1;
    // Majorants of the dropped images: |d + jL| lies in [(j-1/2)L, (j+1/2)L].
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int j = K + 1;; ++j) {
        const double lo = (j - 0.5) * L, hi = (j + 0.5) * L;
        const double g = 2.0 * c * std::exp(-lo * lo / (4.0 * t));
        m0 += g;
        m1 += hi / (2.0 * t) * g;
        m2 += (hi * hi / (4.0 * t * t) + 0.5 / t) * g;
        if (g == 0.0 || g <= 1e-20 * m0) break;
    }
    const double round = kEps * s.terms;
    s.dt = s.d2;
    s.err0 = m0 + round * abs0;
    s.err1 = m1 + round * abs1;
    s.err2 = m2 + round * abs2;
    s.err_t = s.err2;
    return s;
}

CircleSeries circle_spectral_series(double L, double offset, double t) {
    check_args(L, t);
    const double d = reduce_offset(offset, L);
    const double w = 2.0 * kPi / L;
    const int K = static_cast<int>(std::ceil(std::sqrt(45.0 / t) / w)) + 1;
    CircleSeries s;
    double sum0 = 0.0, sum1 = 0.0, sum2 = 0.0, abs0 = 0.0, abs1 = 0.0, abs2 = 0.0;
    for (int k = 1; k <= K; ++k) {
        const double om = w * k;
        const double e = std::exp(-om * om * t);
        const double c = std::cos(om * d), sn = std::sin(om * d);
        sum0 += e * c;
        sum1 -= om * e * sn;
        sum2 -= om * om * e * c;
        abs0 += e;
        abs1 += om * e;
        abs2 += om * om * e;
    }
    s.terms = K + 1;
    s.value = (1.0 + 2.0 * sum0) / L;
    s.d1 = 2.0 * sum1 / L;
    s.d2 = 2.0 * sum2 / L;
    s.dt = s.d2;
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (int k = K + 1;; ++k) {
        const double om = w * k;
        const double e = 2.0 / L * std::exp(-om * om * t);
        m0 += e;
        m1 += om * e;
        m2 += om * om * e;
        if (e == 0.0 || e <= 1e-20 * m0) break;
    }
    const double round = kEps * s.terms;
    s.err0 = m0 + round * (1.0 + 2.0 * abs0) / L;
    s.err1 = m1 + round * 2.0 * abs1 / L;
    s.err2 = m2 + round * 2.0 * abs2 / L;
    s.err_t = s.err2;
    return s;
}

CircleSeries circle_series(double L, double offset, double t) {
    // The two forms converge equally fast at t = L^2 / (4 pi).
    return t < L * L / (4.0 * kPi) ? circle_image_series(L, offset, t) : circle_spectral_series(L, offset, t);
}

PoissonDual poisson_dual_check(double L, double t, double offset) {
    PoissonDual p;
    p.image_sum = circle_image_series(L, offset, t).value;
    p.spectral_sum = circle_spectral_series(L, offset, t).value;
    p.discrepancy = std::abs(p.image_sum - p.spectral_sum);
    return p;
}

}  // namespace heatlab
