#pragma once

#include <vector>

#include "heatlab/kernels.hpp"
#include "heatlab/manifolds.hpp"

namespace heatlab {

struct LiYauEvaluation {
    double alpha = 1.0;
    double Y_alpha = 0.0;  // |grad ln u|^2 - alpha dt ln u
    double tY = 0.0;       // t (|grad ln u|^2 - dt ln u)
    double t = 0.0;
    double error = 0.0;    // bound on the error of tY
};

LiYauEvaluation li_yau_quantity(const LogDerivatives& ld, double alpha, double t);

struct BochnerResidual {
    double lhs = 0.0;  // (Delta - dt) Y + 2 grad ln u . grad Y
    double rhs = 0.0;  // (2/n) Y^2 - 2 K |grad ln u|^2
    double residual = 0.0;
};

/// Radial finite differences of the closed-form Y field of the kernel with
/// pole y.  Euclidean and Hyperbolic3 only.
BochnerResidual bochner_residual(const Manifold& m, const Point& x, double t, const Point& y, double h = 1e-3);

struct MixtureSource {
    Point point;
    double weight = 1.0;
};

/// u(x, t) = sum_i w_i G(x, t + start_offset, y_i).
struct MixtureSolution {
    Manifold manifold;
    std::vector<MixtureSource> sources;
    double start_offset = 0.0;
};

MixtureSolution make_mixture(const Manifold& m, std::vector<MixtureSource> sources, double start_offset = 0.0);

struct MixtureEvaluation {
    double log_value = 0.0;
    LogDerivatives ld;
};

MixtureEvaluation mixture_eval(const MixtureSolution& s, const Point& x, double t);
LogDerivatives mixture_log_derivatives(const MixtureSolution& s, const Point& x, double t);

}  // namespace heatlab
