#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>

#include "heatlab/error.hpp"
#include "heatlab/manifolds.hpp"

namespace heatlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Worst ratio between the 8-neighbour path length and the straight length of a
// segment in a locally flat cell with sides (h rho, h a).
double grid_anisotropy(const ProfileCurve& p) {
    const double a = p.meridian_scale();
    double worst = 1.0;
    for (int k = 0; k <= 32; ++k) {
        const double rho = p.min_rho() + (p.max_rho() - p.min_rho()) * k / 32.0;
        const double diag = std::hypot(rho, a);
        for (int i = 0; i <= 1024; ++i) {
            const double psi = 0.5 * std::numbers::pi * i / 1024.0;
            const double x = std::cos(psi) / rho, y = std::sin(psi) / a;  // steps per unit length
            const double len = std::min(x, y) * diag + (x > y ? (x - y) * rho : (y - x) * a);
            worst = std::max(worst, len);
        }
    }
    return worst;
}

}  // namespace

std::vector<double> dijkstra_from(const RevolutionSurface& s, int n, int source_u, int source_v) {
    if (n < 8) fail(ErrorKind::Domain, "geodesic grid too small");
    const double h = kTwoPi / n;
    const double a = s.profile.meridian_scale();
    // rho at v-rows and at half rows (index 2*j and 2*j+1).
    std::vector<double> rho_half(static_cast<std::size_t>(2 * n));
    for (int j = 0; j < 2 * n; ++j) rho_half[static_cast<std::size_t>(j)] = s.profile.rho(0.5 * h * j);

    const auto size = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    std::vector<double> dist(size, std::numeric_limits<double>::infinity());
    using Entry = std::pair<double, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    auto index = [n](int u, int v) { return static_cast<std::size_t>(v) * static_cast<std::size_t>(n) + static_cast<std::size_t>(u); };
    const std::size_t src = index(((source_u % n) + n) % n, ((source_v % n) + n) % n);
    dist[src] = 0.0;
    queue.emplace(0.0, src);
    while (!queue.empty()) {
        auto [d, id] = queue.top();
        queue.pop();
        if (d > dist[id]) continue;
        const int u = static_cast<int>(id % static_cast<std::size_t>(n));
        const int v = static_cast<int>(id / static_cast<std::size_t>(n));
        for (int dv = -1; dv <= 1; ++dv) {
            for (int du = -1; du <= 1; ++du) {
                if (du == 0 && dv == 0) continue;
                const int half = ((2 * v + dv) % (2 * n) + 2 * n) % (2 * n);
                const double rho = rho_half[static_cast<std::size_t>(half)];
                const double w = h * std::sqrt(rho * rho * du * du + a * a * dv * dv);
                const std::size_t next = index((u + du + n) % n, (v + dv + n) % n);
                if (d + w < dist[next]) {
                    dist[next] = d + w;
                    queue.emplace(d + w, next);
                }
            }
        }
    }
    return dist;
}

const GeodesicGrid& geodesic_grid(const RevolutionSurface& s) {
    if (!s.cache) fail(ErrorKind::Unsupported, "revolution surface without cache");
    std::call_once(s.cache->geodesic_once, [&] {
        const int n = s.settings.distance_grid;
        // The metric is invariant under u-translation, so sources at u = 0 cover all pairs;
        // a reflection-symmetric profile needs only v in [0, pi].
        const int last = s.profile.reflection_symmetric() ? n / 2 : n - 1;
        double max_d = 0.0;
        for (int v = 0; v <= last; ++v) {
            const auto dist = dijkstra_from(s, n, 0, v);
            max_d = std::max(max_d, *std::max_element(dist.begin(), dist.end()));
        }
        auto g = std::make_shared<GeodesicGrid>();
        g->n = n;
        g->max_distance = max_d;
        g->anisotropy = grid_anisotropy(s.profile);
        g->node_radius = 0.5 * (kTwoPi / n) * std::hypot(s.profile.max_rho(), s.profile.meridian_scale());
        s.cache->geodesic = std::move(g);
    });
    return *s.cache->geodesic;
}

}  // namespace heatlab
