#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <vector>

#include "heatlab/manifolds.hpp"
#include "heatlab/periodic_spline.hpp"

namespace heatlab {

/// m-th Fourier mode of -Laplace on rho(v)^2 du^2 + a^2 dv^2:
///   phi -> -(1/(a rho)) (rho/a phi')' + (m^2/rho^2) phi,  weight rho a dv.
struct SturmLiouvilleProblem {
    int mode = 0;
    ProfileCurve profile;
    int grid_n = 256;
};

struct EigenPair {
    double value;
    std::vector<double> vector;  // samples at v_i = 2 pi i / grid_n, sum_i w_i h phi_i^2 = 1
};

/// All eigenvalues of the discretised mode operator, ascending.
std::vector<double> mode_eigenvalues(const SturmLiouvilleProblem& p);

/// Eigenpairs with eigenvalue <= max_value (all of them by default), ascending.
std::vector<EigenPair> eigen_solve_mode(const SturmLiouvilleProblem& p,
                                        double max_value = std::numeric_limits<double>::infinity());

struct SpectralMode {
    int m = 0;
    std::vector<double> eigenvalues;
    std::vector<PeriodicSpline> functions;  // spline through each eigenvector
};

/// Truncated eigen-expansion of the heat kernel of a revolution surface,
///   G = sum_m c_m cos(m du) sum_j exp(-lambda t) phi_j(v1) phi_j(v2),
/// c_0 = 1/(2 pi), c_m = 1/pi (the cos/sin pair of each m >= 1 stored once).
struct SpectralModel {
    explicit SpectralModel(ProfileCurve p) : profile(std::move(p)) {}

    ProfileCurve profile;
    int grid_n = 0;
    double tol = 0.0;
    double t_min = 0.0;
    int mode_cutoff = 0;
    double eigen_cutoff = 0.0;
    // Weighted sums over the dropped pairs at t_min of exp(-lambda t),
    // sqrt(lambda) exp(-lambda t) and lambda exp(-lambda t).
    double tail0 = 0.0;
    double tail1 = 0.0;
    double tail2 = 0.0;
    double sup_bound = 0.0;  // bound on phi^2 for unit-norm eigenvectors
    double total_volume = 0.0;
    std::vector<SpectralMode> modes;

    double mode_weight(int m) const;
    /// Tail bounds at t >= t_min: {value, gradient, time derivative}.
    std::array<double, 3> tail_bounds(double t) const;
    std::size_t pair_count() const;
};

struct SpectralBuildOptions {
    int grid_n = 256;
    double tol = 1e-8;
    double t_min = 0.05;
    int mode_cap = 512;
};

SpectralModel build_spectral_model(const ProfileCurve& profile, const SpectralBuildOptions& options);

/// Lazily built model shared by all copies of the manifold; reads and writes
/// the cache file named in the settings when there is one.
const SpectralModel& spectral_model_for(const RevolutionSurface& s);

/// Truncated kernel sum at meridian angles v1, v2 and longitude offset du.
double spectral_kernel(const SpectralModel& model, double du, double v1, double v2, double t);

struct FlatTorusValidation {
    double max_eigenvalue_rel_error = 0.0;
    int eigenvalues_compared = 0;
    double max_kernel_error = 0.0;
    double ground_state_error = 0.0;
};

/// Compares a constant-profile model with the exact lattice spectrum and the
/// product of wrapped-Gaussian circle kernels at time t.
FlatTorusValidation validate_against_flat_torus(const SpectralModel& model, int eigenvalue_count = 25, double t = 0.5);

/// Flat text dump keyed by profile hash, grid size and cutoffs.
void save_spectral_model(const SpectralModel& model, const std::filesystem::path& path);
/// Returns nullopt when the file is for a different profile / settings.
std::optional<SpectralModel> load_spectral_model(const std::filesystem::path& path, const ProfileCurve& profile,
                                                 const SpectralBuildOptions& options);

}  // namespace heatlab
