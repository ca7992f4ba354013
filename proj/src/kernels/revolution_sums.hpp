#pragma once

#include <span>
#include <vector>

#include "heatlab/kernels.hpp"
#include "heatlab/spectral.hpp"

namespace heatlab::detail {

// exp(-lambda t) phi_j(v_pole) per retained pair, flattened mode by mode.
struct PoleTerms {
    std::vector<double> coef;
    std::vector<double> lambda_coef;
};
PoleTerms pole_terms(const SpectralModel& model, double v_pole, double t);

// Per mode: sums over j of coef * {phi, phi', phi'', lambda phi} at v, and
// absolute-value sums for the rounding bound.
struct ModeSum {
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, al = 0.0;
    double b0 = 0.0, b1 = 0.0, bl = 0.0;
};
using ModeSums = std::vector<ModeSum>;
ModeSums mode_sums(const SpectralModel& model, const PoleTerms& pole, double v);

/// Assembles value and log-derivatives; throws Unresolved when the tail wins.
KernelJet combine_mode_sums(const SpectralModel& model, const ProfileCurve& profile, const PoleTerms& pole,
                            const ModeSums& sums, double du, double v, double t);

std::vector<KernelJet> revolution_batch(const RevolutionSurface& s, std::span<const Point> xs, double t,
                                        const Point& y);

}  // namespace heatlab::detail
