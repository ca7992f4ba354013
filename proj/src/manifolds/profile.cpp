#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "heatlab/error.hpp"
#include "heatlab/manifolds.hpp"

namespace heatlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
    for (int i = 0; i < 8; ++i) {
        h ^= (word >> (8 * i)) & 0xffu;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

ProfileCurve ProfileCurve::torus(double major_radius, double minor_radius) {
    if (!(minor_radius > 0.0) || !(major_radius > minor_radius)) {
        fail(ErrorKind::Profile, "torus of revolution needs R > a > 0");
    }
    ProfileCurve p;
    p.kind_ = Kind::Torus;
    p.major_ = major_radius;
    p.a_ = minor_radius;
    p.finish();
    return p;
}

ProfileCurve ProfileCurve::constant(double radius, double meridian_scale) {
    if (!(radius > 0.0) || !(meridian_scale > 0.0)) {
        fail(ErrorKind::Profile, "constant profile needs positive radius and meridian scale");
    }
    ProfileCurve p;
    p.kind_ = Kind::Constant;
    p.major_ = radius;
    p.a_ = meridian_scale;
    p.finish();
    return p;
}

ProfileCurve ProfileCurve::sampled(std::vector<double> rho_samples, double meridian_scale) {
    if (!(meridian_scale > 0.0)) fail(ErrorKind::Profile, "meridian scale must be positive");
    if (rho_samples.size() < 8) fail(ErrorKind::Profile, "sampled profile needs at least 8 samples");
    for (double r : rho_samples) {
        if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::Profile, "sampled profile must be positive and finite");
    }
    ProfileCurve p;
    p.kind_ = Kind::Sampled;
    p.a_ = meridian_scale;
    p.spline_ = PeriodicSpline(rho_samples, kTwoPi);
    p.finish();
    return p;
}

void ProfileCurve::finish() {
    const int dense = kind_ == Kind::Sampled ? 16 * static_cast<int>(spline_.size()) : 4096;
    min_rho_ = std::numeric_limits<double>::infinity();
    max_rho_ = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < dense; ++i) {
        const double r = rho(kTwoPi * i / dense);
        min_rho_ = std::min(min_rho_, r);
        max_rho_ = std::max(max_rho_, r);
    }
    if (kind_ == Kind::Torus) {
        min_rho_ = major_ - a_;
        max_rho_ = major_ + a_;
    }
    if (!(min_rho_ > 0.0)) fail(ErrorKind::Profile, "profile spline dips to a non-positive radius");
}

double ProfileCurve::rho(double v) const {
    switch (kind_) {
        case Kind::Torus: return major_ + a_ * std::cos(v);
        case Kind::Constant: return major_;
        case Kind::Sampled: return spline_.jet(v).value;
    }
    return 0.0;
}

double ProfileCurve::drho(double v) const {
    switch (kind_) {
        case Kind::Torus: return -a_ * std::sin(v);
        case Kind::Constant: return 0.0;
        case Kind::Sampled: return spline_.jet(v).d1;
    }
    return 0.0;
}

double ProfileCurve::d2rho(double v) const {
    switch (kind_) {
        case Kind::Torus: return -a_ * std::cos(v);
        case Kind::Constant: return 0.0;
        case Kind::Sampled: return spline_.jet(v).d2;
    }
    return 0.0;
}

std::optional<std::pair<double, double>> ProfileCurve::closed_form_parameters() const {
    if (kind_ == Kind::Sampled) return std::nullopt;
    return std::pair{major_, a_};
}

std::uint64_t ProfileCurve::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a(h, static_cast<std::uint64_t>(kind_));
    h = fnv1a(h, std::bit_cast<std::uint64_t>(a_));
    h = fnv1a(h, std::bit_cast<std::uint64_t>(major_));
    if (kind_ == Kind::Sampled) {
        for (double s : spline_.samples()) h = fnv1a(h, std::bit_cast<std::uint64_t>(s));
    }
    return h;
}

std::string ProfileCurve::describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
        case Kind::Torus: os << "torus(R=" << major_ << ",a=" << a_ << ")"; break;
        case Kind::Constant: os << "constant(R=" << major_ << ",a=" << a_ << ")"; break;
        case Kind::Sampled: os << "sampled(n=" << spline_.size() << ",a=" << a_ << ")"; break;
    }
    return os.str();
}

double gauss_curvature(const ProfileCurve& profile, double v) {
    const double a = profile.meridian_scale();
    return -profile.d2rho(v) / (a * a * profile.rho(v));
}

}  // namespace heatlab
