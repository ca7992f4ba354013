#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "heatlab/error.hpp"
#include "heatlab/format.hpp"
#include "heatlab/manifolds.hpp"

namespace heatlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

using Vec3 = std::array<double, 3>;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 unit_vector(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}
Vec3 frame_theta(double theta, double phi) {
    return {std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta)};
}
Vec3 frame_phi(double phi) { return {-std::sin(phi), std::cos(phi), 0.0}; }

double chord(const Vec3& a, const Vec3& b) {
    const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

// Signed shortest displacement x - y on a circle of length L, in (-L/2, L/2].
double circle_offset(double x, double y, double L) {
    double d = std::fmod(x - y, L);
    if (d > 0.5 * L) d -= L;
    if (d <= -0.5 * L) d += L;
    return d;
}

double hyperbolic_distance(const Point& x, const Point& y) {
    const double rx = x.coords[0], ry = y.coords[0];
    const double c = chord(unit_vector(x.coords[1], x.coords[2]), unit_vector(y.coords[1], y.coords[2]));
    const double sh = std::sinh(0.5 * (rx - ry));
    // cosh d - 1 = 2 sinh^2((rx-ry)/2) + sinh rx sinh ry |nx - ny|^2 / 2, all terms >= 0.
    const double excess = 2.0 * sh * sh + std::sinh(rx) * std::sinh(ry) * 0.5 * c * c;
    return 2.0 * std::asinh(std::sqrt(0.5 * excess));
}

double unit_ball_volume(int n) { return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

// Volume of {p in prod [-h_i, h_i] : |p| <= r}.
double box_ball_volume(std::span<const double> half, double r) {
    if (r <= 0.0) return 0.0;
    const double hk = half.back();
    if (half.size() == 1) return 2.0 * std::min(r, hk);
    auto rest = half.first(half.size() - 1);
    const double lim = std::min(r, hk);
    auto slice = [&](double s) { return box_ball_volume(rest, std::sqrt(std::max(0.0, r * r - s * s))); };
    // Split at the kinks where the slice radius crosses a box half-width.
    std::vector<double> cuts{0.0, lim};
    for (double h : rest) {
        if (r > h) {
            const double s = std::sqrt(r * r - h * h);
            if (s > 0.0 && s < lim) cuts.push_back(s);
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] > cuts[i]) {
            total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(slice, cuts[i], cuts[i + 1], 12, 1e-13);
        }
    }
    return 2.0 * total;
}

}  // namespace

// ---------------------------------------------------------------------------

double distance(const Manifold& m, const Point& x, const Point& y) {
    validate_point(m, x);
    validate_point(m, y);
    return std::visit(
        overloaded{
            [&](const Euclidean&) {
                double s = 0.0;
                for (std::size_t i = 0; i < x.coords.size(); ++i) {
                    const double d = x.coords[i] - y.coords[i];
                    s += d * d;
                }
                return std::sqrt(s);
            },
            [&](const Circle& c) { return std::abs(circle_offset(x.coords[0], y.coords[0], c.length)); },
            [&](const FlatTorus& f) {
                double s = 0.0;
                for (std::size_t i = 0; i < f.lengths.size(); ++i) {
                    const double d = circle_offset(x.coords[i], y.coords[i], f.lengths[i]);
                    s += d * d;
                }
                return std::sqrt(s);
            },
            [&](const Sphere2& s) {
                const double c = chord(unit_vector(x.coords[0], x.coords[1]), unit_vector(y.coords[0], y.coords[1]));
                return s.radius * 2.0 * std::asin(std::min(1.0, 0.5 * c));
            },
            [&](const Hyperbolic3&) { return hyperbolic_distance(x, y); },
            [&](const RevolutionSurface& s) {
                const int n = s.settings.distance_grid;
                auto node = [n](double c) {
                    return static_cast<int>(std::lround(c / kTwoPi * n)) % n;
                };
                const auto dist = dijkstra_from(s, n, node(y.coords[0]), node(y.coords[1]));
                return dist[static_cast<std::size_t>(node(x.coords[1]) * n + node(x.coords[0]))];
            },
            [&](const Product& p) {
                auto [xl, xr] = split_point(p, x);
                auto [yl, yr] = split_point(p, y);
                return std::hypot(distance(*p.left, xl, yl), distance(*p.right, xr, yr));
            },
        },
        m.kind());
}

std::vector<double> distance_gradient(const Manifold& m, const Point& x, const Point& y) {
    validate_point(m, x);
    validate_point(m, y);
    return std::visit(
        overloaded{
            [&](const Euclidean&) {
                std::vector<double> g(x.coords.size());
                double s = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] = x.coords[i] - y.coords[i];
                    s += g[i] * g[i];
                }
                const double d = std::sqrt(s);
                for (double& v : g) v = d > 0.0 ? v / d : 0.0;
                return g;
            },
            [&](const Circle& c) {
                const double d = circle_offset(x.coords[0], y.coords[0], c.length);
                const bool unique = d != 0.0 && std::abs(d) < 0.5 * c.length;
                return std::vector<double>{unique ? (d > 0.0 ? 1.0 : -1.0) : 0.0};
            },
            [&](const FlatTorus& f) {
                std::vector<double> g(f.lengths.size());
                double s = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    g[i] = circle_offset(x.coords[i], y.coords[i], f.lengths[i]);
                    if (std::abs(g[i]) >= 0.5 * f.lengths[i]) g[i] = 0.0;
                    s += g[i] * g[i];
                }
                const double d = std::sqrt(s);
                for (double& v : g) v = d > 0.0 ? v / d : 0.0;
                return g;
            },
            [&](const Sphere2&) {
                const Vec3 nx = unit_vector(x.coords[0], x.coords[1]);
                const Vec3 ny = unit_vector(y.coords[0], y.coords[1]);
                const double c = dot(nx, ny);
                // Tangent at x pointing towards y.
                Vec3 w{ny[0] - c * nx[0], ny[1] - c * nx[1], ny[2] - c * nx[2]};
                const double norm = std::sqrt(dot(w, w));
                if (!(norm > 1e-300)) return std::vector<double>{0.0, 0.0};
                const double gt = -dot(w, frame_theta(x.coords[0], x.coords[1])) / norm;
                const double gp = -dot(w, frame_phi(x.coords[1])) / norm;
                return std::vector<double>{gt, gp};
            },
            [&](const Hyperbolic3&) {
                // Differentiate cosh d = cosh r cosh s - sinh r sinh s cos g, with the radial part
                // rewritten as sinh(r - s) + 2 cosh r sinh s sin^2(g/2) to avoid cancellation.
                const double rx = x.coords[0], ry = y.coords[0];
                const Vec3 nx = unit_vector(x.coords[1], x.coords[2]);
                const Vec3 ny = unit_vector(y.coords[1], y.coords[2]);
                const double d = hyperbolic_distance(x, y);
                if (!(d > 1e-300)) return std::vector<double>{0.0, 0.0, 0.0};
                const Vec3 diff{nx[0] - ny[0], nx[1] - ny[1], nx[2] - ny[2]};
                const double sin2_half = 0.25 * dot(diff, diff);
                const double shy = std::sinh(ry);
                const double cr = std::sinh(rx - ry) + 2.0 * std::cosh(rx) * shy * sin2_half;
                const double ct = -shy * dot(ny, frame_theta(x.coords[1], x.coords[2]));
                const double cp = -shy * dot(ny, frame_phi(x.coords[2]));
                const double norm = std::sqrt(cr * cr + ct * ct + cp * cp);
                if (!(norm > 0.0)) return std::vector<double>{0.0, 0.0, 0.0};
                return std::vector<double>{cr / norm, ct / norm, cp / norm};
            },
            [&](const RevolutionSurface&) -> std::vector<double> {
                fail(ErrorKind::Unsupported, "distance gradient is not available on grid-graph distances");
            },
            [&](const Product& p) {
                auto [xl, xr] = split_point(p, x);
                auto [yl, yr] = split_point(p, y);
                const double dl = distance(*p.left, xl, yl), dr = distance(*p.right, xr, yr);
                const double d = std::hypot(dl, dr);
                std::vector<double> gl = distance_gradient(*p.left, xl, yl);
                std::vector<double> gr = distance_gradient(*p.right, xr, yr);
                for (double& v : gl) v = d > 0.0 ? v * dl / d : 0.0;
                for (double& v : gr) v = d > 0.0 ? v * dr / d : 0.0;
                gl.insert(gl.end(), gr.begin(), gr.end());
                return gl;
            },
        },
        m.kind());
}

// ---------------------------------------------------------------------------

CurvatureSummary curvature_summary(const Manifold& m) {
    return std::visit(
        overloaded{
            [](const Euclidean& e) {
                CurvatureSummary s;
                if (e.n == 2) s.gauss_min = s.gauss_max = 0.0;
                return s;
            },
            [](const Circle&) { return CurvatureSummary{}; },
            [](const FlatTorus&) { return CurvatureSummary{0.0, 0.0, 0.0}; },
            [](const Sphere2& s) {
                const double k = 1.0 / (s.radius * s.radius);
                return CurvatureSummary{0.0, k, k};
            },
            [](const Hyperbolic3&) {
                // Sectional curvature -1 gives Ric = -(n-1) g = -2 g.
                return CurvatureSummary{2.0, std::nullopt, std::nullopt};
            },
            [](const RevolutionSurface& s) {
                const ProfileCurve& p = s.profile;
                if (!p.closed_form()) {
                    // Cross-check spline second derivatives against central differences.
                    const int n = 1024;
                    const double h = 1e-3;
                    double worst = 0.0, scale = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double v = kTwoPi * (i + 0.37) / n;
                        const double fd = (p.rho(v + h) - 2.0 * p.rho(v) + p.rho(v - h)) / (h * h);
                        worst = std::max(worst, std::abs(fd - p.d2rho(v)));
                        scale = std::max(scale, std::abs(p.d2rho(v)));
                    }
                    if (worst > 1e-2 * std::max(scale, 1.0)) {
                        fail(ErrorKind::Profile, "sampled profile is not smooth enough: spline curvature disagrees with "
                                                 "central differences by " + format_double(worst));
                    }
                }
                const int n = 4096;
                auto kg = [&](double v) { return gauss_curvature(p, v); };
                int imin = 0, imax = 0;
                std::vector<double> vals(n);
                for (int i = 0; i < n; ++i) {
                    vals[static_cast<std::size_t>(i)] = kg(kTwoPi * i / n);
                    if (vals[static_cast<std::size_t>(i)] < vals[static_cast<std::size_t>(imin)]) imin = i;
                    if (vals[static_cast<std::size_t>(i)] > vals[static_cast<std::size_t>(imax)]) imax = i;
                }
                const double cell = kTwoPi / n;
                const int bits = std::numeric_limits<double>::digits;
                auto lo = boost::math::tools::brent_find_minima(kg, kTwoPi * imin / n - cell, kTwoPi * imin / n + cell, bits);
                auto hi = boost::math::tools::brent_find_minima([&](double v) { return -kg(v); }, kTwoPi * imax / n - cell,
                                                                kTwoPi * imax / n + cell, bits);
                const double gmin = std::min(lo.second, vals[static_cast<std::size_t>(imin)]);
                const double gmax = std::max(-hi.second, vals[static_cast<std::size_t>(imax)]);
                return CurvatureSummary{std::max(0.0, -gmin), gmin, gmax};
            },
            [](const Product& p) {
                return CurvatureSummary{
                    std::max(curvature_summary(*p.left).ricci_lower, curvature_summary(*p.right).ricci_lower),
                    std::nullopt, std::nullopt};
            },
        },
        m.kind());
}

DiameterEstimate diameter_estimate(const Manifold& m) {
    if (!m.compact()) fail(ErrorKind::Unsupported, "diameter is infinite on noncompact " + m.kind_name());
    return std::visit(overloaded{
                          [](const Circle& c) { return DiameterEstimate{0.5 * c.length, 0.5 * c.length, "closed-form"}; },
                          [](const FlatTorus& f) {
                              double s = 0.0;
                              for (double l : f.lengths) s += l * l;
                              const double d = 0.5 * std::sqrt(s);
                              return DiameterEstimate{d, d, "closed-form"};
                          },
                          [](const Sphere2& s) { return DiameterEstimate{kPi * s.radius, kPi * s.radius, "closed-form"}; },
                          [](const RevolutionSurface& s) {
                              const double a = s.profile.meridian_scale();
                              if (s.profile.is_constant()) {
                                  const double d = 0.5 * std::hypot(kTwoPi * s.profile.rho(0.0), kTwoPi * a);
                                  return DiameterEstimate{d, d, "closed-form"};
                              }
                              const GeodesicGrid& g = geodesic_grid(s);
                              // Any curve joining v and v + pi has length >= pi a.
                              const double lower = std::max(kPi * a, g.max_distance / g.anisotropy - 2.0 * g.node_radius);
                              const double upper = g.max_distance + 2.0 * g.node_radius;
                              return DiameterEstimate{lower, upper, "dijkstra:N=" + std::to_string(g.n)};
                          },
                          [](const Product& p) {
                              const auto l = diameter_estimate(*p.left), r = diameter_estimate(*p.right);
                              return DiameterEstimate{std::hypot(l.lower, r.lower), std::hypot(l.upper, r.upper),
                                                      l.method == "closed-form" && r.method == "closed-form"
                                                          ? std::string("closed-form")
                                                          : "product(" + l.method + ";" + r.method + ")"};
                          },
                          [](const auto&) -> DiameterEstimate { fail(ErrorKind::Unsupported, "noncompact"); },
                      },
                      m.kind());
}

double ball_volume(const Manifold& m, const Point& x, double r) {
    validate_point(m, x);
    if (!(r >= 0.0)) fail(ErrorKind::Domain, "ball radius must be >= 0");
    return std::visit(
        overloaded{
            [&](const Euclidean& e) { return unit_ball_volume(e.n) * std::pow(r, e.n); },
            [&](const Circle& c) { return std::min(2.0 * r, c.length); },
            [&](const FlatTorus& f) {
                std::vector<double> half;
                double total = 1.0;
                for (double l : f.lengths) {
                    half.push_back(0.5 * l);
                    total *= l;
                }
                return std::min(total, box_ball_volume(half, r));
            },
            [&](const Sphere2& s) {
                const double R = s.radius;
                const double rr = std::min(r, kPi * R);
                const double sh = std::sin(0.5 * rr / R);
                return 4.0 * kPi * R * R * sh * sh;  // 2 pi R^2 (1 - cos(r/R))
            },
            [&](const Hyperbolic3&) {
                if (r < 0.1) {
                    // sinh 2r - 2r = sum_{k>=1} (2r)^(2k+1)/(2k+1)!
                    const double z = 2.0 * r, z2 = z * z;
                    double term = z * z2 / 6.0, sum = 0.0;
                    for (int k = 1; k < 8; ++k) {
                        sum += term;
                        term *= z2 / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
                    }
                    return kPi * sum;
                }
                return kPi * (std::sinh(2.0 * r) - 2.0 * r);
            },
            [&](const RevolutionSurface&) -> double {
                fail(ErrorKind::Unsupported, "ball volume has no closed form on a surface of revolution");
            },
            [&](const Product&) -> double {
                fail(ErrorKind::Unsupported, "ball volume has no closed form on product manifolds");
            },
        },
        m.kind());
}

double total_volume(const Manifold& m) {
    return std::visit(overloaded{
                          [](const Circle& c) { return c.length; },
                          [](const FlatTorus& f) {
                              double v = 1.0;
                              for (double l : f.lengths) v *= l;
                              return v;
                          },
                          [](const Sphere2& s) { return 4.0 * kPi * s.radius * s.radius; },
                          [](const RevolutionSurface& s) {
                              if (auto p = s.profile.closed_form_parameters()) return 4.0 * kPi * kPi * p->first * p->second;
                              const int n = 4096;
                              double sum = 0.0;
                              for (int i = 0; i < n; ++i) sum += s.profile.rho(kTwoPi * i / n);
                              return kTwoPi * s.profile.meridian_scale() * sum * kTwoPi / n;
                          },
                          [](const Product& p) { return total_volume(*p.left) * total_volume(*p.right); },
                          [](const auto&) { return std::numeric_limits<double>::infinity(); },
                      },
                      m.kind());
}

ChartMetric chart_metric(const Manifold& m, const Point& x) {
    validate_point(m, x);
    return std::visit(
        overloaded{
            [&](const Sphere2& s) {
                const double R2 = s.radius * s.radius;
                const double th = x.coords[0];
                const double sn = std::sin(th);
                return ChartMetric{{1.0 / R2, 1.0 / (R2 * sn * sn)}, {std::cos(th) / (sn * R2), 0.0}};
            },
            [&](const Hyperbolic3&) {
                const double r = x.coords[0], th = x.coords[1];
                const double sh = std::sinh(r), sn = std::sin(th);
                return ChartMetric{{1.0, 1.0 / (sh * sh), 1.0 / (sh * sh * sn * sn)},
                                   {2.0 / std::tanh(r), std::cos(th) / (sn * sh * sh), 0.0}};
            },
            [&](const RevolutionSurface& s) {
                const double v = x.coords[1];
                const double a = s.profile.meridian_scale();
                const double rho = s.profile.rho(v);
                return ChartMetric{{1.0 / (rho * rho), 1.0 / (a * a)}, {0.0, s.profile.drho(v) / (a * a * rho)}};
            },
            [&](const Product& p) {
                auto [xl, xr] = split_point(p, x);
                ChartMetric l = chart_metric(*p.left, xl);
                ChartMetric r = chart_metric(*p.right, xr);
                l.inv_metric.insert(l.inv_metric.end(), r.inv_metric.begin(), r.inv_metric.end());
                l.drift.insert(l.drift.end(), r.drift.begin(), r.drift.end());
                return l;
            },
            [&](const auto&) {
                const auto k = static_cast<std::size_t>(m.chart_arity());
                return ChartMetric{std::vector<double>(k, 1.0), std::vector<double>(k, 0.0)};
            },
        },
        m.kind());
}

// ---------------------------------------------------------------------------

namespace {

SpaceGrid tensor_grid(std::vector<std::vector<double>> axes, std::string description) {
    std::size_t total = 1;
    for (const auto& ax : axes) {
        total *= ax.size();
        if (total > kMaxGridPoints) {
            fail(ErrorKind::Domain, "space grid would hold more than " + std::to_string(kMaxGridPoints) +
                                        " points; lower the resolution");
        }
    }
    SpaceGrid g;
    g.points.reserve(total);
    std::vector<std::size_t> idx(axes.size(), 0);
    for (std::size_t k = 0; k < total; ++k) {
        Point p;
        p.coords.resize(axes.size());
        for (std::size_t a = 0; a < axes.size(); ++a) p.coords[a] = axes[a][idx[a]];
        g.points.push_back(std::move(p));
        for (std::size_t a = 0; a < axes.size(); ++a) {
            if (++idx[a] < axes[a].size()) break;
            idx[a] = 0;
        }
    }
    g.axes = std::move(axes);
    g.description = std::move(description);
    return g;
}

std::vector<double> periodic_axis(double length, int res) {
    std::vector<double> ax(static_cast<std::size_t>(res));
    for (int i = 0; i < res; ++i) ax[static_cast<std::size_t>(i)] = length * i / res;
    return ax;
}

}  // namespace

SpaceGrid make_space_grid(const Manifold& m, int resolution, double window) {
    if (resolution < 16) fail(ErrorKind::Domain, "space resolution must be >= 16 points per period");
    if (!(window > 0.0)) fail(ErrorKind::Domain, "space window must be positive");
    const std::string res = std::to_string(resolution);
    return std::visit(
        overloaded{
            [&](const Euclidean& e) {
                std::vector<double> ax(static_cast<std::size_t>(resolution));
                for (int i = 0; i < resolution; ++i) ax[static_cast<std::size_t>(i)] = -window + 2.0 * window * i / (resolution - 1);
                return tensor_grid(std::vector<std::vector<double>>(static_cast<std::size_t>(e.n), ax),
                                   "box[-" + format_double(window) + "," + format_double(window) + "]^" +
                                       std::to_string(e.n) + " res=" + res);
            },
            [&](const Circle& c) { return tensor_grid({periodic_axis(c.length, resolution)}, "uniform res=" + res); },
            [&](const FlatTorus& f) {
                std::vector<std::vector<double>> axes;
                for (double l : f.lengths) axes.push_back(periodic_axis(l, resolution));
                return tensor_grid(std::move(axes), "uniform res=" + res + " per axis");
            },
            [&](const Sphere2&) {
                SpaceGrid g;
                const int nth = resolution / 2;
                for (int i = 0; i <= nth; ++i) {
                    const double th = kPi * i / nth;
                    if (i == 0 || i == nth) {
                        g.points.push_back(Point{{th, 0.0}});
                        continue;
                    }
                    for (int j = 0; j < resolution; ++j) g.points.push_back(Point{{th, kTwoPi * j / resolution}});
                }
                g.description = "colatitude/longitude res=" + res;
                return g;
            },
            [&](const Hyperbolic3&) {
                SpaceGrid g;
                for (int i = 0; i <= resolution; ++i) g.points.push_back(Point{{window * i / resolution, 0.5 * kPi, 0.0}});
                g.description = "radial ray r in [0," + format_double(window) + "] res=" + res;
                return g;
            },
            [&](const RevolutionSurface&) {
                return tensor_grid({periodic_axis(kTwoPi, resolution), periodic_axis(kTwoPi, resolution)},
                                   "uniform (u,v) res=" + res);
            },
            [&](const Product& p) {
                SpaceGrid l = make_space_grid(*p.left, resolution, window);
                SpaceGrid r = make_space_grid(*p.right, resolution, window);
                if (l.points.size() * r.points.size() > kMaxGridPoints) {
                    fail(ErrorKind::Domain, "product grid would hold more than " + std::to_string(kMaxGridPoints) +
                                                " points; lower the resolution");
                }
                SpaceGrid g;
                g.points.reserve(l.points.size() * r.points.size());
                for (const auto& b : r.points) {
                    for (const auto& a : l.points) g.points.push_back(join_points(a, b));
                }
                g.description = "product(" + l.description + ";" + r.description + ")";
                return g;
            },
        },
        m.kind());
}

std::vector<Point> default_poles(const Manifold& m, int per_period) {
    if (const auto* p = m.as<Product>()) {
        std::vector<Point> out;
        for (const auto& b : default_poles(*p->right, per_period)) {
            for (const auto& a : default_poles(*p->left, per_period)) out.push_back(join_points(a, b));
        }
        return out;
    }
    if (const auto* s = m.as<RevolutionSurface>(); s && !s->profile.is_constant()) {
        std::vector<Point> out;
        for (int k = 0; k < per_period; ++k) out.push_back(Point{{0.0, kTwoPi * k / per_period}});
        return out;
    }
    return {origin_point(m)};
}

}  // namespace heatlab
