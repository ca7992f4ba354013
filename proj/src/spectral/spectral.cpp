#include "heatlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <lapacke.h>

#include "heatlab/error.hpp"
#include "heatlab/kernels.hpp"

namespace heatlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kBand = 2;

// Periodic tridiagonal matrices become pentadiagonal under the ordering
// 0, N-1, 1, N-2, ...; position p holds node order[p].
std::vector<int> interleaved_order(int n) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int k = 0; k < n / 2; ++k) {
        order[static_cast<std::size_t>(2 * k)] = k;
        order[static_cast<std::size_t>(2 * k + 1)] = n - 1 - k;
    }
    return order;
}

struct Discretisation {
    int n = 0;
    double h = 0.0;
    std::vector<double> weight;  // w_i = a rho_i
    std::vector<int> order;
    std::vector<double> band;  // upper band storage, column major, ldab = kBand + 1
};

Discretisation discretise(const SturmLiouvilleProblem& p) {
    const int n = p.grid_n;
    if (n < 64 || n % 2 != 0) {
        fail(ErrorKind::Domain, "Sturm-Liouville grid must be even and >= 64, got " + std::to_string(n));
    }
    if (p.mode < 0) fail(ErrorKind::Domain, "Fourier mode must be >= 0");
    Discretisation d;
    d.n = n;
    d.h = kTwoPi / n;
    const double a = p.profile.meridian_scale();
    const double m2 = static_cast<double>(p.mode) * p.mode;
    std::vector<double> rho(static_cast<std::size_t>(n)), flux(static_cast<std::size_t>(n));
    d.weight.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        rho[static_cast<std::size_t>(i)] = p.profile.rho(d.h * i);
        flux[static_cast<std::size_t>(i)] = p.profile.rho(d.h * (i + 0.5)) / a;  // p_{i+1/2}
        d.weight[static_cast<std::size_t>(i)] = a * rho[static_cast<std::size_t>(i)];
    }
    d.order = interleaved_order(n);
    std::vector<int> position(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) position[static_cast<std::size_t>(d.order[static_cast<std::size_t>(q)])] = q;

    d.band.assign(static_cast<std::size_t>((kBand + 1) * n), 0.0);
    auto put = [&](int i, int j, double value) {
        int pi = position[static_cast<std::size_t>(i)], pj = position[static_cast<std::size_t>(j)];
        if (pi > pj) std::swap(pi, pj);
        d.band[static_cast<std::size_t>(kBand + pi - pj + pj * (kBand + 1))] = value;
    };
    const double h2 = d.h * d.h;
    for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const std::size_t prev = (ui + static_cast<std::size_t>(n) - 1) % static_cast<std::size_t>(n);
        const double diag = (flux[ui] + flux[prev]) / (h2 * d.weight[ui]) + m2 / (rho[ui] * rho[ui]);
        put(i, i, diag);
        const int next = (i + 1) % n;
        put(i, next, -flux[ui] / (h2 * std::sqrt(d.weight[ui] * d.weight[static_cast<std::size_t>(next)])));
    }
    return d;
}

}  // namespace

std::vector<double> mode_eigenvalues(const SturmLiouvilleProblem& p) {
    Discretisation d = discretise(p);
    std::vector<double> w(static_cast<std::size_t>(d.n));
    const lapack_int info = LAPACKE_dsbev(LAPACK_COL_MAJOR, 'N', 'U', d.n, kBand, d.band.data(), kBand + 1, w.data(),
                                          nullptr, 1);
    if (info != 0) {
        fail(ErrorKind::NumericalFailure, "banded eigen-solver failed (info " + std::to_string(info) + ") for mode " +
                                              std::to_string(p.mode) + " on grid " + std::to_string(d.n));
    }
    for (double& v : w) v = std::max(v, 0.0);
    return w;
}

std::vector<EigenPair> eigen_solve_mode(const SturmLiouvilleProblem& p, double max_value) {
    Discretisation d = discretise(p);
    const int n = d.n;
    std::vector<double> q(static_cast<std::size_t>(n) * n), w(static_cast<std::size_t>(n)),
        z(static_cast<std::size_t>(n) * n);
    std::vector<lapack_int> ifail(static_cast<std::size_t>(n));
    lapack_int found = 0;
    const bool all = !std::isfinite(max_value);
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    const lapack_int info =
        LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'V', all ? 'A' : 'V', 'U', n, kBand, d.band.data(), kBand + 1, q.data(), n,
                       -1.0, all ? 0.0 : max_value, 0, 0, abstol, &found, w.data(), z.data(), n, ifail.data());
    if (info != 0) {
        fail(ErrorKind::NumericalFailure, "banded eigen-solver did not converge (info " + std::to_string(info) +
                                              ") for mode " + std::to_string(p.mode) + " on grid " + std::to_string(n));
    }
    std::vector<EigenPair> out;
    out.reserve(static_cast<std::size_t>(found));
    for (lapack_int j = 0; j < found; ++j) {
        EigenPair e;
        e.value = std::max(w[static_cast<std::size_t>(j)], 0.0);
        e.vector.resize(static_cast<std::size_t>(n));
        for (int pos = 0; pos < n; ++pos) {
            const auto node = static_cast<std::size_t>(d.order[static_cast<std::size_t>(pos)]);
            e.vector[node] = z[static_cast<std::size_t>(pos) + static_cast<std::size_t>(j) * n] /
                             std::sqrt(d.weight[node] * d.h);
        }
        // Deterministic sign: the largest entry (first one on ties) is positive.
        std::size_t big = 0;
        for (std::size_t i = 1; i < e.vector.size(); ++i) {
            if (std::abs(e.vector[i]) > std::abs(e.vector[big]) * (1.0 + 1e-12)) big = i;
        }
        if (e.vector[big] < 0.0) {
            for (double& v : e.vector) v = -v;
        }
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------

double SpectralModel::mode_weight(int m) const { return m == 0 ? 1.0 / kTwoPi : 1.0 / kPi; }

std::array<double, 3> SpectralModel::tail_bounds(double t) const {
    const double decay = std::exp(-eigen_cutoff * std::max(0.0, t - t_min));
    // Gradient terms: |d phi| is bounded by sqrt(lambda) |phi| up to the
    // anisotropy of the profile; the factor below absorbs it heuristically.
    const double aniso = 2.0 * profile.max_rho() / profile.min_rho();
    return {tail0 * decay, aniso * tail1 * decay, tail2 * decay};
}

std::size_t SpectralModel::pair_count() const {
    std::size_t n = 0;
    for (const auto& m : modes) n += m.eigenvalues.size();
    return n;
}

double spectral_kernel(const SpectralModel& model, double du, double v1, double v2, double t) {
    double g = 0.0;
    for (const auto& mode : model.modes) {
        double s = 0.0;
        for (std::size_t j = 0; j < mode.eigenvalues.size(); ++j) {
            s += std::exp(-mode.eigenvalues[j] * t) * mode.functions[j](v1) * mode.functions[j](v2);
        }
        g += model.mode_weight(mode.m) * std::cos(mode.m * du) * s;
    }
    return g;
}

SpectralModel build_spectral_model(const ProfileCurve& profile, const SpectralBuildOptions& options) {
    if (!(options.tol > 0.0)) fail(ErrorKind::Domain, "spectral tolerance must be positive");
    if (!(options.t_min > 0.0)) fail(ErrorKind::Domain, "spectral t_min must be positive");
    const int n = options.grid_n;
    const double h = kTwoPi / n;
    const double a = profile.meridian_scale();
    const double t0 = options.t_min;

    double min_w = std::numeric_limits<double>::infinity(), rho_max = 0.0, rho_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = profile.rho(h * i);
        min_w = std::min(min_w, a * r);
        rho_max = std::max(rho_max, r);
        rho_sum += r;
    }
    // Unit-norm eigenvectors satisfy phi_i^2 <= 1 / (w_i h).
    const double sup = 1.0 / (h * min_w);

    std::map<int, std::vector<double>> spectra;
    auto spectrum = [&](int m) -> const std::vector<double>& {
        auto it = spectra.find(m);
        if (it == spectra.end()) it = spectra.emplace(m, mode_eigenvalues({m, profile, n})).first;
        return it->second;
    };
    const std::vector<double>& mu = spectrum(0);

    struct Tail {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    };
    auto add = [t0](Tail& tl, double weight, double lambda) {
        const double e = weight * std::exp(-lambda * t0);
        tl.s0 += e;
        tl.s1 += std::sqrt(lambda) * e;
        tl.s2 += lambda * e;
    };
    auto last_mode = [&](double cutoff) { return static_cast<int>(std::floor(rho_max * std::sqrt(cutoff))); };
    // Dropped weight for eigen cutoff `cutoff`: exact over the modes that can
    // hold a retained pair, and lambda_{m,j} >= mu_j + m^2/rho_max^2 beyond.
    auto dropped = [&](double cutoff) {
        const int last = last_mode(cutoff);
        if (last > options.mode_cap) {
            fail(ErrorKind::Truncation, "spectral model needs more than " + std::to_string(options.mode_cap) +
                                            " Fourier modes at t_min=" + std::to_string(t0) + "; use a larger t_min");
        }
        Tail tl;
        for (int m = 0; m <= last; ++m) {
            const double w = (m == 0 ? 1.0 : 2.0) * sup / kTwoPi;
            for (double lam : spectrum(m)) {
                if (lam > cutoff) add(tl, w, lam);
            }
        }
        for (int m = last + 1;; ++m) {
            const double shift = static_cast<double>(m) * m / (rho_max * rho_max);
            Tail row;
            for (double lam : mu) add(row, 2.0 * sup / kTwoPi, lam + shift);
            tl.s0 += row.s0;
            tl.s1 += row.s1;
            tl.s2 += row.s2;
            if (row.s0 <= 1e-6 * tl.s0 * options.tol || row.s0 == 0.0) break;
        }
        return tl;
    };

    double hi = 20.0 / t0;
    while (dropped(hi).s0 > options.tol) hi *= 1.5;
    double lo = 0.0;
    for (int it = 0; it < 60 && hi - lo > 1e-9 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dropped(mid).s0 > options.tol ? lo : hi) = mid;
    }
    const Tail tail = dropped(hi);

    SpectralModel model(profile);
    model.grid_n = n;
    model.tol = options.tol;
    model.t_min = t0;
    model.eigen_cutoff = hi;
    model.tail0 = tail.s0;
    model.tail1 = tail.s1;
    model.tail2 = tail.s2;
    model.sup_bound = sup;
    model.total_volume = kTwoPi * a * h * rho_sum;

    const int last = last_mode(hi);
    std::vector<SpectralMode> modes(static_cast<std::size_t>(last + 1));
#pragma omp parallel for schedule(dynamic)
    for (int m = 0; m <= last; ++m) {
        auto& out = modes[static_cast<std::size_t>(m)];
        out.m = m;
        if (spectra.at(m).front() > hi) continue;
        for (auto& pair : eigen_solve_mode({m, profile, n}, hi)) {
            out.eigenvalues.push_back(pair.value);
            out.functions.emplace_back(pair.vector, kTwoPi);
        }
    }
    for (auto& mode : modes) {
        if (!mode.eigenvalues.empty()) {
            model.mode_cutoff = mode.m;
            model.modes.push_back(std::move(mode));
        }
    }
    return model;
}

const SpectralModel& spectral_model_for(const RevolutionSurface& s) {
    if (!s.cache) fail(ErrorKind::Unsupported, "revolution surface without cache");
    std::call_once(s.cache->spectral_once, [&] {
        const SpectralBuildOptions opts{s.settings.spectral_grid, s.settings.spectral_tol, s.settings.t_min,
                                        s.settings.mode_cap};
        if (!s.settings.cache_path.empty()) {
            if (auto cached = load_spectral_model(s.settings.cache_path, s.profile, opts)) {
                s.cache->spectral = std::make_shared<const SpectralModel>(std::move(*cached));
                return;
            }
        }
        auto model = std::make_shared<const SpectralModel>(build_spectral_model(s.profile, opts));
        if (!s.settings.cache_path.empty()) save_spectral_model(*model, s.settings.cache_path);
        s.cache->spectral = std::move(model);
    });
    return *s.cache->spectral;
}

// ---------------------------------------------------------------------------

FlatTorusValidation validate_against_flat_torus(const SpectralModel& model, int eigenvalue_count, double t) {
    FlatTorusValidation report;
    const auto params = model.profile.closed_form_parameters();
    if (!model.profile.is_constant() || !params) return report;
    const double R = params->first, a = params->second;

    std::vector<double> computed;
    for (const auto& mode : model.modes) {
        for (double lam : mode.eigenvalues) {
            computed.push_back(lam);
            if (mode.m > 0) computed.push_back(lam);
        }
    }
    std::sort(computed.begin(), computed.end());
    const int kmax = static_cast<int>(std::sqrt(static_cast<double>(eigenvalue_count))) + 3;
    std::vector<double> exact;
    for (int k = -kmax * 4; k <= kmax * 4; ++k) {
        for (int m = -kmax * 4; m <= kmax * 4; ++m) exact.push_back(k * k / (a * a) + m * m / (R * R));
    }
    std::sort(exact.begin(), exact.end());
    const int count = std::min<int>(eigenvalue_count, static_cast<int>(computed.size()));
    for (int i = 0; i < count; ++i) {
        const double e = exact[static_cast<std::size_t>(i)], c = computed[static_cast<std::size_t>(i)];
        const double err = e > 0.0 ? std::abs(c - e) / e : std::abs(c - e);
        report.max_eigenvalue_rel_error = std::max(report.max_eigenvalue_rel_error, err);
    }
    report.eigenvalues_compared = count;

    const double offsets[][3] = {{0.0, 0.0, 0.0}, {0.3, 1.0, 1.2}, {kPi, 2.0, 5.0}, {1.7, 4.0, 0.5}, {5.9, 3.1, 3.1}};
    for (const auto& o : offsets) {
        const double du = o[0], v1 = o[1], v2 = o[2];
        const double g = spectral_kernel(model, du, v1, v2, t);
        const double ref = circle_series(kTwoPi * R, R * du, t).value * circle_series(kTwoPi * a, a * (v1 - v2), t).value;
        report.max_kernel_error = std::max(report.max_kernel_error, std::abs(g - ref));
    }
    if (!model.modes.empty() && model.modes.front().m == 0) {
        const double phi0 = model.modes.front().functions.front()(0.0) / std::sqrt(kTwoPi);
        report.ground_state_error = std::abs(phi0 - 1.0 / std::sqrt(4.0 * kPi * kPi * a * R));
    }
    return report;
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kCacheMagic = "heatlab-spectral-v1";

std::string hex(std::uint64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void save_spectral_model(const SpectralModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write spectral cache " + path.string());
    out << kCacheMagic << '\n';
    out << "hash " << hex(model.profile.hash()) << " grid_n " << model.grid_n << " tol " << exact(model.tol)
        << " t_min " << exact(model.t_min) << '\n';
    out << exact(model.eigen_cutoff) << ' ' << exact(model.tail0) << ' ' << exact(model.tail1) << ' '
        << exact(model.tail2) << ' ' << exact(model.sup_bound) << ' ' << exact(model.total_volume) << '\n';
    out << model.modes.size() << '\n';
    for (const auto& mode : model.modes) {
        out << mode.m << ' ' << mode.eigenvalues.size() << '\n';
        for (std::size_t j = 0; j < mode.eigenvalues.size(); ++j) {
            out << exact(mode.eigenvalues[j]);
            for (double s : mode.functions[j].samples()) out << ' ' << exact(s);
            out << '\n';
        }
    }
    if (!out) fail(ErrorKind::Io, "failed writing spectral cache " + path.string());
}

std::optional<SpectralModel> load_spectral_model(const std::filesystem::path& path, const ProfileCurve& profile,
                                                 const SpectralBuildOptions& options) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::string magic, k1, hash, k2, k3, k4;
    int grid = 0;
    std::string tol, tmin;
    if (!(in >> magic) || magic != kCacheMagic) return std::nullopt;
    if (!(in >> k1 >> hash >> k2 >> grid >> k3 >> tol >> k4 >> tmin)) return std::nullopt;
    if (hash != hex(profile.hash()) || grid != options.grid_n || tol != exact(options.tol) ||
        tmin != exact(options.t_min)) {
        return std::nullopt;
    }
    SpectralModel model(profile);
    model.grid_n = grid;
    model.tol = options.tol;
    model.t_min = options.t_min;
    std::size_t count = 0;
    if (!(in >> model.eigen_cutoff >> model.tail0 >> model.tail1 >> model.tail2 >> model.sup_bound >>
          model.total_volume >> count)) {
        fail(ErrorKind::Io, "corrupt spectral cache " + path.string());
    }
    std::vector<double> samples(static_cast<std::size_t>(grid));
    for (std::size_t i = 0; i < count; ++i) {
        SpectralMode mode;
        std::size_t pairs = 0;
        if (!(in >> mode.m >> pairs)) fail(ErrorKind::Io, "corrupt spectral cache " + path.string());
        for (std::size_t j = 0; j < pairs; ++j) {
            double lam = 0.0;
            in >> lam;
            for (double& s : samples) in >> s;
            if (!in) fail(ErrorKind::Io, "corrupt spectral cache " + path.string());
            mode.eigenvalues.push_back(lam);
            mode.functions.emplace_back(samples, kTwoPi);
        }
        model.mode_cutoff = mode.m;
        model.modes.push_back(std::move(mode));
    }
    return model;
}

}  // namespace heatlab
