#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "heatlab/bounds.hpp"
#include "heatlab/manifolds.hpp"

namespace heatlab {

// ---------------------------------------------------------------------------
// Grids
// ---------------------------------------------------------------------------

/// `lo:hi:lin|log:count`
struct TimeGrid {
    double lo = 0.0;
    double hi = 0.0;
    bool log_spacing = true;
    int count = 0;

    std::vector<double> points() const;
    std::string describe() const;
};
TimeGrid parse_time_grid(std::string_view text);

struct GridSpec {
    std::vector<double> t_points;
    std::string t_description;
    int resolution = 64;  // points per period / axis
    std::vector<Point> poles;
    double window = 3.0;  // half-width (Euclidean) or radius (H3) of the space window
    bool check_refinement = false;
};

/// Validates the grid against the manifold (t_lo above the kernel threshold,
/// at least two times, resolution >= 16).  Empty poles become default_poles.
GridSpec make_grid_spec(const Manifold& m, const TimeGrid& times, int resolution, std::vector<Point> poles = {});
void validate_grid_spec(const Manifold& m, const GridSpec& g);
std::string describe_grid(const Manifold& m, const GridSpec& g);

/// Violation tolerance on margins: 1e-5 when a spectral factor is involved.
double default_tolerance(const Manifold& m);

// ---------------------------------------------------------------------------
// Sweeps and checks
// ---------------------------------------------------------------------------

/// Grid point left out of a sweep: the kernel value is unresolved, or the
/// derivative error estimate allows tY to move by more than 0.1.
struct ExcludedPoint {
    Point x;
    Point y;
    double t = 0.0;
};

struct SweepRow {
    double t = 0.0;
    double sup_tY = 0.0;
    Point argmax_x;
    Point argmax_y;
    std::size_t evaluated = 0;
};

struct RefinementStudy {
    bool performed = false;
    bool stable = true;
    int resolution = 0;               // the doubled resolution
    double max_relative_change = 0.0; // over the time points
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::vector<ExcludedPoint> excluded;
    RefinementStudy refinement;
};

SweepResult sweep_sup_tY(const Manifold& m, const GridSpec& g);

/// Relative change test used for refinement flags: |a - b| <= 1% max(|a|, |b|) + 1e-9.
bool refinement_stable(double coarse, double fine, double* relative_change = nullptr);

enum class BoundSelector { SharpCompact, KernelSharp, Classical, KernelGradient, Hamilton, Noncompact };

std::string_view to_string(BoundSelector b);
BoundSelector parse_bound_selector(std::string_view text);
std::span<const std::pair<std::string_view, std::string_view>> bound_catalog();
/// Throws Incompatible with the reason when the pair does not make sense.
void check_compatibility(const Manifold& m, BoundSelector b);

struct CheckOptions {
    double alpha = 2.0;           // classical selector
    std::string family = "linear";  // noncompact selector: "linear" or "constant:<alpha>"
    double hamilton_t0 = 0.5;
    bool fit = false;
    bool collect_rows = false;    // keep one row per grid point (CSV output)
    std::optional<double> tolerance;
};

struct Location {
    Point x;
    Point y;
    double t = 0.0;
};

struct Violation {
    Location at;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
};

struct GridRow {
    double t = 0.0;
    Point x;
    Point y;
    double tY = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
};

struct LargeTimeRatio {
    double t = 0.0;
    double sup_tY = 0.0;
    double ratio = 0.0;  // sup_tY / t
};

struct CheckReport {
    std::string scenario;
    std::string manifold;
    std::string bound;
    std::string lhs;  // which t-scaled quantity was compared
    std::vector<std::pair<std::string, std::string>> constants;
    std::string alpha_family;
    std::string grid;
    int resolution = 0;
    std::vector<double> t_points;
    std::size_t poles = 0;
    double tolerance = 0.0;
    double K = 0.0;
    std::optional<DiameterEstimate> diameter;

    std::size_t evaluated = 0;
    double sup_tY = 0.0;
    Location sup_at;
    double min_margin = 0.0;
    Location min_at;
    /// Min margin with the lower diameter estimate (diameter-dependent bounds).
    std::optional<double> min_margin_lower_diameter;
    std::vector<Violation> violations;
    std::vector<ExcludedPoint> excluded;
    RefinementStudy refinement;
    std::optional<ConstantFit> fit;
    std::vector<LargeTimeRatio> large_time;

    std::vector<GridRow> rows;  // not serialized to JSON
    double wall_seconds = 0.0;  // not serialized to JSON

    bool passed() const { return violations.empty(); }
};

CheckReport run_check(const Manifold& m, const GridSpec& g, BoundSelector bound, const BoundConstants& c,
                      const CheckOptions& opt = {});

/// sup tY / t on the grid at t in {1, 10, 100}.
std::vector<LargeTimeRatio> large_time_ratios(const Manifold& m, const GridSpec& g);

// ---------------------------------------------------------------------------
// Scenario reproductions
// ---------------------------------------------------------------------------

struct H3ScanRow {
    double r = 0.0;
    double tY = 0.0;
    double asymptote = 0.0;  // r + 2t + 1/2
    double residual = 0.0;
};

struct H3Scan {
    double t = 0.0;
    double r_max = 0.0;
    std::vector<H3ScanRow> rows;
    double decay_exponent = 0.0;  // slope of ln|residual| against ln r on the outer half
};

/// Radial rows r = i r_max / steps, i = 0..steps.
H3Scan h3_counterexample_scan(double r_max, double t, int steps);

struct AdditivityReport {
    std::string manifold;
    std::size_t samples = 0;
    double max_deviation = 0.0;  // max |tY_product - tY_factor - 1/2|
    double tolerance = 0.0;      // the largest allowance used at any sample
    std::size_t failures = 0;
    Location worst;
};

/// Compares tY on m0 x R with tY on m0 plus 1/2 at the grid points of m0.
AdditivityReport product_additivity_check(const Manifold& m0, const GridSpec& g);

struct TransferTrial {
    int sources = 0;
    double mixture_max = 0.0;
    double kernel_max = 0.0;
    double gap = 0.0;        // mixture_max - kernel_max
    double pointwise = 0.0;  // max over grid points of tY[u] - max_i tY[G_i] at that point
    bool passed = true;
};

struct TransferReport {
    std::string manifold;
    std::uint64_t seed = 0;
    std::vector<TransferTrial> trials;
    double worst_gap = 0.0;
    std::size_t failures = 0;
    std::size_t unresolved = 0;
};

TransferReport transfer_check(const Manifold& m, int trials, std::uint64_t seed, const GridSpec& g);

struct HarnackReport {
    std::string manifold;
    std::uint64_t seed = 0;
    double alpha = 2.0;
    std::size_t configurations = 0;
    double min_margin = 0.0;  // log-scale: ln rhs - ln u(x, t1)
    std::size_t violations = 0;
};

HarnackReport harnack_check(const Manifold& m, int configurations, std::uint64_t seed, double alpha = 2.0);

/// Integral of G(., t, y) over a compact manifold.
double integrate_kernel(const Manifold& m, const Point& y, double t);

/// Uniform doubles in [0, 1) from a fixed 64-bit stream (reproducible across platforms).
class Rng {
  public:
    explicit Rng(std::uint64_t seed);
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi);  // inclusive
    Point point(const Manifold& m, double window = 3.0);

  private:
    std::mt19937_64 engine_;
};

}  // namespace heatlab
