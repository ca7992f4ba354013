#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heatlab/periodic_spline.hpp"

namespace heatlab {

class SpectralModel;
class Manifold;

// ---------------------------------------------------------------------------
// Profile curves for surfaces of revolution  (metric rho(v)^2 du^2 + a^2 dv^2)
// ---------------------------------------------------------------------------

class ProfileCurve {
  public:
    /// rho(v) = R + a cos v with meridian scale a; requires R > a > 0.
    static ProfileCurve torus(double major_radius, double minor_radius);
    /// rho sampled at v_i = 2*pi*i/N, interpolated by a periodic cubic spline.
    static ProfileCurve sampled(std::vector<double> rho_samples, double meridian_scale);
    /// rho(v) = R constant (flat torus with circumferences 2*pi*R and 2*pi*a).
    static ProfileCurve constant(double radius, double meridian_scale);

    double rho(double v) const;
    double drho(double v) const;
    double d2rho(double v) const;
    double meridian_scale() const { return a_; }

    bool closed_form() const { return kind_ != Kind::Sampled; }
    bool is_constant() const { return kind_ == Kind::Constant; }
    /// (R, a) for the closed-form torus and the constant profile.
    std::optional<std::pair<double, double>> closed_form_parameters() const;
    bool reflection_symmetric() const { return kind_ != Kind::Sampled; }

    double min_rho() const { return min_rho_; }
    double max_rho() const { return max_rho_; }
    std::uint64_t hash() const;
    std::string describe() const;

  private:
    enum class Kind { Torus, Constant, Sampled };
    ProfileCurve() = default;
    void finish();

    Kind kind_ = Kind::Torus;
    double major_ = 0.0;
    double a_ = 0.0;
    PeriodicSpline spline_;
    double min_rho_ = 0.0;
    double max_rho_ = 0.0;
};

/// Gauss curvature -rho''/(a^2 rho) of the surface of revolution at meridian angle v.
double gauss_curvature(const ProfileCurve& profile, double v);

// ---------------------------------------------------------------------------
// Manifold catalog
// ---------------------------------------------------------------------------

struct RevolutionSettings {
    int distance_grid = 256;     // N for the N x N Dijkstra grid
    int spectral_grid = 256;     // v-samples per Sturm-Liouville solve
    double spectral_tol = 1e-8;  // truncation tolerance of the spectral model
    double t_min = 0.05;         // smallest time served by the spectral model
    int mode_cap = 512;
    std::string cache_path;      // optional spectral model cache file
};

struct GeodesicGrid;

namespace detail {
struct RevolutionCache {
    std::once_flag spectral_once;
    std::shared_ptr<const SpectralModel> spectral;
    std::once_flag geodesic_once;
    std::shared_ptr<const GeodesicGrid> geodesic;
};
}  // namespace detail

struct Euclidean {
    int n;
};
struct Circle {
    double length;
};
struct FlatTorus {
    std::vector<double> lengths;
};
struct Sphere2 {
    double radius;
};
struct Hyperbolic3 {};
struct RevolutionSurface {
    ProfileCurve profile;
    RevolutionSettings settings;
    std::shared_ptr<detail::RevolutionCache> cache;
};
struct Product {
    std::shared_ptr<const Manifold> left;
    std::shared_ptr<const Manifold> right;
};

using ManifoldKind =
    std::variant<Euclidean, Circle, FlatTorus, Sphere2, Hyperbolic3, RevolutionSurface, Product>;

/// Immutable model geometry.  Copies share the lazily built spectral and
/// geodesic caches of revolution surfaces.
class Manifold {
  public:
    static Manifold euclidean(int n);
    static Manifold circle(double length);
    static Manifold flat_torus(std::vector<double> lengths);
    static Manifold sphere2(double radius);
    static Manifold hyperbolic3();
    static Manifold revolution(ProfileCurve profile, RevolutionSettings settings = {});
    static Manifold product(const Manifold& left, const Manifold& right);

    const ManifoldKind& kind() const { return kind_; }
    template <class T>
    const T* as() const {
        return std::get_if<T>(&kind_);
    }

    int dim() const { return dim_; }
    bool compact() const { return compact_; }
    /// Number of chart coordinates of a point.
    int chart_arity() const { return arity_; }
    /// Isometry group acts transitively (and for Sphere2/H3 isotropically).
    bool homogeneous() const;
    /// Canonical mini-language form, e.g. "circle:L=6.283185307179586".
    std::string spec() const;
    std::string kind_name() const;

  private:
    explicit Manifold(ManifoldKind kind);
    ManifoldKind kind_;
    int dim_ = 0;
    int arity_ = 0;
    bool compact_ = false;
};

/// Parses the CLI mini-language (case-insensitive):
///   euclidean:n=3  circle:L=6.2832  flattorus:L=6.2832,6.2832  sphere2:r=1
///   h3  revtorus:R=2,a=1  product(<spec>;<spec>)
Manifold parse_manifold_spec(std::string_view text);

/// Kind names accepted by parse_manifold_spec, with their syntax.
std::span<const std::pair<std::string_view, std::string_view>> manifold_catalog();

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// Chart coordinates.  Circle/FlatTorus: angle in [0, L_i).  Sphere2: (theta, phi)
/// colatitude/longitude.  Hyperbolic3: geodesic polar (r, theta, phi) about a
/// fixed origin.  RevolutionSurface: (u, v) in [0, 2pi)^2.  Product: concatenation.
struct Point {
    std::vector<double> coords;

    bool operator==(const Point&) const = default;
};

/// Validates arity and ranges and reduces periodic coordinates.
Point make_point(const Manifold& m, std::vector<double> coords);
void validate_point(const Manifold& m, const Point& x);
/// Splits a product point into factor points.
std::pair<Point, Point> split_point(const Product& p, const Point& x);
Point join_points(const Point& left, const Point& right);
/// Origin / north pole / (0, 0): the default pole of every catalog member.
Point origin_point(const Manifold& m);

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

double distance(const Manifold& m, const Point& x, const Point& y);

/// Unit gradient of d(., y) at x in the orthonormal frame of the chart at x
/// (zero vector when x = y or the direction is not unique).
std::vector<double> distance_gradient(const Manifold& m, const Point& x, const Point& y);

struct CurvatureSummary {
    double ricci_lower = 0.0;  // K >= 0 with Ric >= -K g
    std::optional<double> gauss_min;
    std::optional<double> gauss_max;
};
CurvatureSummary curvature_summary(const Manifold& m);

struct DiameterEstimate {
    double lower = 0.0;
    double upper = 0.0;
    std::string method;  // "closed-form" or "dijkstra:N=<grid>"
};
DiameterEstimate diameter_estimate(const Manifold& m);

double ball_volume(const Manifold& m, const Point& x, double r);
double total_volume(const Manifold& m);

/// Diagonal chart metric data at x: inverse metric g^{ii} and the first-order
/// coefficients b_i = (1/sqrt g) d_i(sqrt g g^{ii}) of the Laplace-Beltrami operator.
struct ChartMetric {
    std::vector<double> inv_metric;
    std::vector<double> drift;
};
ChartMetric chart_metric(const Manifold& m, const Point& x);

/// Dijkstra distances on the 8-neighbour parameter grid of a revolution surface.
struct GeodesicGrid {
    int n = 0;
    double max_distance = 0.0;    // all-pairs maximum over grid nodes
    double anisotropy = 1.0;      // worst ratio grid-path / straight length
    double node_radius = 0.0;     // every point lies within this of a node
};
std::vector<double> dijkstra_from(const RevolutionSurface& s, int n, int source_u, int source_v);
const GeodesicGrid& geodesic_grid(const RevolutionSurface& s);

// ---------------------------------------------------------------------------
// Space grids
// ---------------------------------------------------------------------------

struct SpaceGrid {
    std::vector<Point> points;
    /// For tensor grids in chart coordinates: the node values per axis; points
    /// are ordered with the last axis outermost.
    std::vector<std::vector<double>> axes;
    std::string description;
};

inline constexpr std::size_t kMaxGridPoints = 4'000'000;

/// Uniform chart grid with `resolution` points per period (per axis).
/// Noncompact members use the box / radial window [0, window].
SpaceGrid make_space_grid(const Manifold& m, int resolution, double window = 3.0);

/// Default pole set: a single pole on homogeneous members, `per_period` poles
/// along the meridian (u = 0) for revolution surfaces.
std::vector<Point> default_poles(const Manifold& m, int per_period = 8);

}  // namespace heatlab
