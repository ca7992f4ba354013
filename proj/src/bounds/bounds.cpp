#include "heatlab/bounds.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "heatlab/error.hpp"
#include "heatlab/format.hpp"

namespace heatlab {

namespace {

void require_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorKind::Domain, "time must be positive");
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> BoundConstants::entries() const {
    return {{"c0", c0 ? format_double(*c0) : "auto"},
            {"c1", format_double(c1)},
            {"c2", format_double(c2)},
            {"c3", format_double(c3)},
            {"c4", format_double(c4)},
            {"c5", format_double(c5)},
            {"gaussian_c1", format_double(gaussian_c1)},
            {"gaussian_c2", format_double(gaussian_c2)}};
}

BoundConstants parse_constants(std::string_view text, BoundConstants c) {
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "constants line " + std::to_string(line_no);
        if (eq == std::string_view::npos) fail(ErrorKind::Parse, where + ": expected key=value, got '" + std::string(line) + "'");
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view raw = trim(line.substr(eq + 1));
        if (key == "c0" && raw == "auto") {
            c.c0.reset();
            continue;
        }
        double v = 0.0;
        if (!parse_double(raw, v)) fail(ErrorKind::Parse, where + ": '" + std::string(raw) + "' is not a number");
        if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::Parse, where + ": " + key + " must be positive");
        if (key == "c0") c.c0 = v;
        else if (key == "c1") c.c1 = v;
        else if (key == "c2") c.c2 = v;
        else if (key == "c3") c.c3 = v;
        else if (key == "c4") c.c4 = v;
        else if (key == "c5") c.c5 = v;
        else if (key == "gaussian_c1") c.gaussian_c1 = v;
        else if (key == "gaussian_c2") c.gaussian_c2 = v;
        else fail(ErrorKind::Parse, where + ": unknown constant '" + key + "'");
    }
    return c;
}

BoundConstants load_constants(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot read constants file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_constants(ss.str());
}

AlphaFamily AlphaFamily::constant(double alpha) {
    if (!(alpha >= 1.0)) fail(ErrorKind::Domain, "alpha must be >= 1");
    return {"constant(" + format_double(alpha) + ")", [alpha](double, double) { return alpha; },
            [alpha](double, double) { return alpha * alpha; }, true};
}

AlphaFamily AlphaFamily::linear() {
    auto a = [](double t, double K) { return 1.0 + K * t / 3.0; };
    return {"linear", a, [a](double t, double K) { return a(t, K) * a(t, K); }, true};
}

// ---------------------------------------------------------------------------

double rhs_classical(int n, double K, double t, double alpha) {
    require_time(t);
    if (K > 0.0 && !(alpha > 1.0)) fail(ErrorKind::Domain, "classical bound needs alpha > 1 when K > 0");
    if (!(alpha >= 1.0)) fail(ErrorKind::Domain, "alpha must be >= 1");
    const double a2 = alpha * alpha;
    const double k_term = K > 0.0 ? t * n * a2 * K / (2.0 * (alpha - 1.0)) : 0.0;
    return k_term + 0.5 * n * a2;
}

double rhs_sharp_compact(int n, double K, double t, double diam, double c1, double c2) {
    require_time(t);
    const double growth = K * (1.0 + K * t);
    return 0.5 * n + std::sqrt(2.0 * n * growth * (1.0 + t)) * diam + std::sqrt(growth * (c1 + c2 * K) * t);
}

double rhs_sharp_compact(int n, double K, double t, double diam, const BoundConstants& c) {
    return rhs_sharp_compact(n, K, t, diam, c.c1, c.c2);
}

double rhs_kernel_sharp(int n, double K, double t, double diam, const BoundConstants& c) {
    return rhs_sharp_compact(n, K, t, diam, c.c4, c.c5);
}

double rhs_hamilton(double t, double K, double A, double f_value) {
    require_time(t);
    if (!(f_value > 0.0)) fail(ErrorKind::Domain, "Hamilton estimate needs f > 0");
    if (f_value > A) {
        fail(ErrorKind::Domain, "f = " + format_double(f_value) + " exceeds its supposed bound A = " + format_double(A));
    }
    return (1.0 + 2.0 * K * t) * std::log(A / f_value);
}

GaussianEnvelope gaussian_envelope(const Manifold& m, const Point& x, const Point& y, double t,
                                   const BoundConstants& c) {
    require_time(t);
    const double K = curvature_summary(m).ricci_lower;
    const double d = distance(m, x, y);
    const double ball = ball_volume(m, x, std::sqrt(t));
    GaussianEnvelope e;
    e.lower = std::exp(-c.gaussian_c2 * K * t - d * d / (3.0 * t)) / (c.gaussian_c1 * ball);
    e.upper = c.gaussian_c1 * std::exp(c.gaussian_c2 * K * t - d * d / (5.0 * t)) / ball;
    return e;
}

double harnack_log_factor(double t1, double t2, double d, int n, double K, double alpha) {
    if (!(t1 > 0.0) || !(t2 > t1)) fail(ErrorKind::Domain, "Harnack comparison needs t2 > t1 > 0");
    if (!(alpha >= 1.0) || (K > 0.0 && !(alpha > 1.0))) {
        fail(ErrorKind::Domain, "Harnack comparison needs alpha > 1 when K > 0");
    }
    const double dt = t2 - t1;
    const double k_term = K > 0.0 ? n * alpha * K * dt / (4.0 * (alpha - 1.0)) : 0.0;
    return 0.5 * n * alpha * std::log(t2 / t1) + alpha * d * d / (4.0 * dt) + k_term;
}

double harnack_rhs(double u_later, double t1, double t2, double d, int n, double K, double alpha) {
    return u_later * std::exp(harnack_log_factor(t1, t2, d, n, K, alpha));
}

GradientRegime gradient_regime(double t) { return t >= 8.0 ? GradientRegime::LargeTime : GradientRegime::SmallTime; }

double rhs_kernel_gradient(int n, double t, double K, double diam, const BoundConstants& c, GradientRegime regime) {
    require_time(t);
    const double pre = 2.0 * (1.0 + K * t);
    if (regime == GradientRegime::SmallTime) {
        // The constants of this branch come from the Gaussian bounds.
        return pre * (2.0 * c.gaussian_c2 * K * t + 4.0 * c.c3 * c.c3 * K + diam * diam / t +
                      2.0 * std::log(c.gaussian_c1));
    }
    return pre * (n * std::log(2.0) + 2.0 * c.c0_for(n) * K + diam * diam);
}

double rhs_noncompact(int n, double K, double t, const AlphaFamily& fam, double d_to_origin, double support_radius,
                      const BoundConstants& c) {
    require_time(t);
    const double alpha = fam.alpha(t, K);
    const double beta = fam.beta(t, K);
    if (K > 0.0 && !(alpha > 1.0)) fail(ErrorKind::Domain, "noncompact bound needs alpha > 1 when K > 0");
    const double k_term = K > 0.0 ? t * n * beta / alpha * K / (2.0 * (alpha - 1.0)) : 0.0;
    return 0.5 * n * alpha + k_term + c.c1 * K * t + c.c2 * K * K * t * t +
           2.0 * c.c3 * K * (d_to_origin * d_to_origin + support_radius * support_radius);
}

// ---------------------------------------------------------------------------

std::span<const double> fit_lattice() {
    static const std::vector<double> lattice = [] {
        std::vector<double> v{0.0};
        for (int k = -16; k <= 48; ++k) v.push_back(std::pow(10.0, k / 8.0));
        return v;
    }();
    return lattice;
}

ConstantFit minimal_constant_fit(std::span<const FitSample> samples, int n, double K, double diam) {
    ConstantFit fit;
    if (samples.empty()) fail(ErrorKind::Domain, "constant fit needs samples");
    // Dominance is c1 + c2 K >= excess^2 / (K (1+Kt) t) per sample.
    for (const auto& s : samples) {
        const double growth = K * (1.0 + K * s.t);
        const double excess = s.tY - 0.5 * n - std::sqrt(2.0 * n * growth * (1.0 + s.t)) * diam;
        if (excess <= 0.0) continue;
        if (!(K > 0.0)) {
            if (excess > fit.worst_excess) {
                fit.worst_excess = excess;
                fit.worst = s;
            }
            continue;
        }
        const double need = excess * excess / (growth * s.t);
        if (need > fit.required) {
            fit.required = need;
            fit.worst = s;
            fit.worst_excess = excess;
        }
    }
    if (!(K > 0.0)) {
        fit.dominated = fit.worst_excess == 0.0;
        return fit;
    }
    const auto lattice = fit_lattice();
    double best = std::numeric_limits<double>::infinity();
    for (double c1 : lattice) {
        for (double c2 : lattice) {
            const double v = c1 + c2 * K;
            if (v < fit.required) continue;
            if (v < best || (v == best && c1 < fit.c1)) {
                best = v;
                fit.c1 = c1;
                fit.c2 = c2;
                fit.dominated = true;
            }
        }
    }
    return fit;
}

}  // namespace heatlab
