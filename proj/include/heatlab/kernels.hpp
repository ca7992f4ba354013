#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "heatlab/manifolds.hpp"

namespace heatlab {

enum class DerivativeMethod { Analytic, SeriesTermwise, FiniteDifference };
std::string_view to_string(DerivativeMethod method);

struct KernelEvaluation {
    double value = 0.0;
    double log_value = 0.0;
    double tail_bound = 0.0;  // truncation + rounding, absolute
};

/// Log-derivatives of a positive function at (x, t).  grad holds components in
/// the orthonormal frame of the chart at x, so its Euclidean norm is |grad ln u|.
struct LogDerivatives {
    std::vector<double> grad;
    double lap_ln = 0.0;
    double dt_ln = 0.0;
    DerivativeMethod method = DerivativeMethod::Analytic;
    double error_estimate = 0.0;  // sum of the component error bounds

    double grad_norm2() const;
    double grad_norm() const;
};

struct KernelJet {
    KernelEvaluation eval;
    LogDerivatives ld;
    bool resolved = true;
};

KernelEvaluation kernel_value(const Manifold& m, const Point& x, double t, const Point& y);
LogDerivatives kernel_log_derivatives(const Manifold& m, const Point& x, double t, const Point& y);
KernelJet kernel_jet(const Manifold& m, const Point& x, double t, const Point& y);

/// Smallest t accepted by the kernel evaluators (0 when every t > 0 works).
double kernel_time_threshold(const Manifold& m);

/// Central-difference oracle on ln G with one Richardson level.
LogDerivatives fd_log_derivatives(const Manifold& m, const Point& x, double t, const Point& y);

// Batch evaluation over many x for one (t, y).  Unresolved points come back
// with resolved = false instead of throwing.  Both orderings match the input.
std::vector<KernelJet> kernel_jets_serial(const Manifold& m, std::span<const Point> xs, double t, const Point& y);
std::vector<KernelJet> kernel_jets_parallel(const Manifold& m, std::span<const Point> xs, double t, const Point& y);

// ---------------------------------------------------------------------------
// Circle kernel in both representations
// ---------------------------------------------------------------------------

/// Kernel of the circle of length L and its derivatives in the offset and t,
/// each with an absolute error bound.
struct CircleSeries {
    double value = 0.0, d1 = 0.0, d2 = 0.0, dt = 0.0;
    double err0 = 0.0, err1 = 0.0, err2 = 0.0, err_t = 0.0;
    int terms = 0;
};

CircleSeries circle_image_series(double L, double offset, double t);
CircleSeries circle_spectral_series(double L, double offset, double t);
/// Picks the faster converging form.
CircleSeries circle_series(double L, double offset, double t);

struct PoissonDual {
    double image_sum = 0.0;
    double spectral_sum = 0.0;
    double discrepancy = 0.0;
};
PoissonDual poisson_dual_check(double L, double t, double offset);

struct KernelSup {
    double value = 0.0;
    Point argmax;
    double t_argmax = 0.0;
    int resolution = 0;
};
/// Largest kernel value over the space grid at the given times.
KernelSup kernel_sup(const Manifold& m, const Point& y, std::span<const double> times, int resolution);

}  // namespace heatlab
