#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "heatlab/manifolds.hpp"

namespace heatlab {

/// Constants of the right-hand sides.  Only their existence is known;
/// the defaults are deliberately generous.
struct BoundConstants {
    std::optional<double> c0;  // Harnack constant, n/2 when unset
    double c1 = 100.0;
    double c2 = 100.0;
    double c3 = 1.0;
    double c4 = 100.0;
    double c5 = 100.0;
    double gaussian_c1 = 10.0;
    double gaussian_c2 = 10.0;

    double c0_for(int n) const { return c0 ? *c0 : 0.5 * n; }
    /// (key, value) pairs in file order; c0 shown as "auto" when unset.
    std::vector<std::pair<std::string, std::string>> entries() const;
};

/// Flat `key=value` text, '#' comments.  Unknown keys and non-positive values
/// are parse errors naming the line.
BoundConstants parse_constants(std::string_view text, BoundConstants base = {});
BoundConstants load_constants(const std::filesystem::path& path);

struct AlphaFamily {
    std::string name;
    std::function<double(double t, double K)> alpha;
    std::function<double(double t, double K)> beta;
    bool illustrative = true;

    static AlphaFamily constant(double alpha);
    /// alpha = 1 + K t / 3, beta = alpha^2.
    static AlphaFamily linear();
};

// All right-hand sides are t-scaled: compare with t * Y.

double rhs_classical(int n, double K, double t, double alpha);
double rhs_sharp_compact(int n, double K, double t, double diam, double c1, double c2);
double rhs_sharp_compact(int n, double K, double t, double diam, const BoundConstants& c);
/// Same shape with the kernel-level constants c4, c5.
double rhs_kernel_sharp(int n, double K, double t, double diam, const BoundConstants& c);
double rhs_hamilton(double t, double K, double A, double f_value);

struct GaussianEnvelope {
    double lower = 0.0;
    double upper = 0.0;
};
GaussianEnvelope gaussian_envelope(const Manifold& m, const Point& x, const Point& y, double t,
                                   const BoundConstants& c);

/// log of the factor multiplying u_later.
double harnack_log_factor(double t1, double t2, double d, int n, double K, double alpha);
double harnack_rhs(double u_later, double t1, double t2, double d, int n, double K, double alpha);

enum class GradientRegime { SmallTime, LargeTime };
/// The split sits at t = 8.
GradientRegime gradient_regime(double t);
double rhs_kernel_gradient(int n, double t, double K, double diam, const BoundConstants& c, GradientRegime regime);

double rhs_noncompact(int n, double K, double t, const AlphaFamily& fam, double d_to_origin, double support_radius,
                      const BoundConstants& c);

struct FitSample {
    double t = 0.0;
    double tY = 0.0;
};

struct ConstantFit {
    bool dominated = false;
    double c1 = 0.0;
    double c2 = 0.0;
    double required = 0.0;  // smallest c1 + c2 K that dominates every sample
    FitSample worst;        // sample setting `required`, or the violating one
    double worst_excess = 0.0;
};

/// Search lattice: {0} and 10^(k/8) for k = -16 .. 48.
std::span<const double> fit_lattice();
ConstantFit minimal_constant_fit(std::span<const FitSample> samples, int n, double K, double diam);

}  // namespace heatlab
