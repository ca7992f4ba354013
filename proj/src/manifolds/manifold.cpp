#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

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

double wrap(double x, double period) {
    double r = std::fmod(x, period);
    if (r < 0.0) r += period;
    if (r >= period) r -= period;
    return r;
}

}  // namespace

Manifold::Manifold(ManifoldKind kind) : kind_(std::move(kind)) {
    std::visit(overloaded{
                   [&](const Euclidean& e) { dim_ = e.n, arity_ = e.n, compact_ = false; },
                   [&](const Circle&) { dim_ = 1, arity_ = 1, compact_ = true; },
                   [&](const FlatTorus& f) {
                       dim_ = static_cast<int>(f.lengths.size());
                       arity_ = dim_;
                       compact_ = true;
                   },
                   [&](const Sphere2&) { dim_ = 2, arity_ = 2, compact_ = true; },
                   [&](const Hyperbolic3&) { dim_ = 3, arity_ = 3, compact_ = false; },
                   [&](const RevolutionSurface&) { dim_ = 2, arity_ = 2, compact_ = true; },
                   [&](const Product& p) {
                       dim_ = p.left->dim() + p.right->dim();
                       arity_ = p.left->chart_arity() + p.right->chart_arity();
                       compact_ = p.left->compact() && p.right->compact();
                   },
               },
               kind_);
}

Manifold Manifold::euclidean(int n) {
    if (n < 1) fail(ErrorKind::Domain, "euclidean dimension must be >= 1");
    return Manifold(Euclidean{n});
}

Manifold Manifold::circle(double length) {
    if (!(length > 0.0) || !std::isfinite(length)) fail(ErrorKind::Domain, "circle circumference must be positive");
    return Manifold(Circle{length});
}

Manifold Manifold::flat_torus(std::vector<double> lengths) {
    if (lengths.empty()) fail(ErrorKind::Domain, "flat torus needs at least one length");
    for (double l : lengths) {
        if (!(l > 0.0) || !std::isfinite(l)) fail(ErrorKind::Domain, "flat torus lengths must be positive");
    }
    return Manifold(FlatTorus{std::move(lengths)});
}

Manifold Manifold::sphere2(double radius) {
    if (!(radius > 0.0) || !std::isfinite(radius)) fail(ErrorKind::Domain, "sphere radius must be positive");
    return Manifold(Sphere2{radius});
}

Manifold Manifold::hyperbolic3() { return Manifold(Hyperbolic3{}); }

Manifold Manifold::revolution(ProfileCurve profile, RevolutionSettings settings) {
    if (settings.distance_grid < 16 || settings.distance_grid % 2 != 0) {
        fail(ErrorKind::Domain, "revolution distance grid must be even and >= 16");
    }
    if (settings.spectral_grid < 64 || settings.spectral_grid % 2 != 0) {
        fail(ErrorKind::Domain, "revolution spectral grid must be even and >= 64");
    }
    if (!(settings.spectral_tol > 0.0) || !(settings.t_min > 0.0)) {
        fail(ErrorKind::Domain, "spectral tolerance and t_min must be positive");
    }
    return Manifold(RevolutionSurface{std::move(profile), settings, std::make_shared<detail::RevolutionCache>()});
}

Manifold Manifold::product(const Manifold& left, const Manifold& right) {
    return Manifold(Product{std::make_shared<const Manifold>(left), std::make_shared<const Manifold>(right)});
}

bool Manifold::homogeneous() const {
    return std::visit(overloaded{
                          [](const RevolutionSurface& s) { return s.profile.is_constant(); },
                          [](const Product& p) { return p.left->homogeneous() && p.right->homogeneous(); },
                          [](const auto&) { return true; },
                      },
                      kind_);
}

std::string Manifold::kind_name() const {
    return std::visit(overloaded{
                          [](const Euclidean&) { return std::string("euclidean"); },
                          [](const Circle&) { return std::string("circle"); },
                          [](const FlatTorus&) { return std::string("flattorus"); },
                          [](const Sphere2&) { return std::string("sphere2"); },
                          [](const Hyperbolic3&) { return std::string("h3"); },
                          [](const RevolutionSurface&) { return std::string("revtorus"); },
                          [](const Product&) { return std::string("product"); },
                      },
                      kind_);
}

std::string Manifold::spec() const {
    return std::visit(
        overloaded{
            [](const Euclidean& e) { return "euclidean:n=" + std::to_string(e.n); },
            [](const Circle& c) { return "circle:L=" + format_double(c.length); },
            [](const FlatTorus& f) {
                std::string s = "flattorus:L=";
                for (std::size_t i = 0; i < f.lengths.size(); ++i) {
                    if (i) s += ',';
                    s += format_double(f.lengths[i]);
                }
                return s;
            },
            [](const Sphere2& s) { return "sphere2:r=" + format_double(s.radius); },
            [](const Hyperbolic3&) { return std::string("h3"); },
            [](const RevolutionSurface& s) {
                if (auto params = s.profile.closed_form_parameters(); params && !s.profile.is_constant()) {
                    return "revtorus:R=" + format_double(params->first) + ",a=" + format_double(params->second);
                }
                return "revolution:" + s.profile.describe();
            },
            [](const Product& p) { return "product(" + p.left->spec() + ";" + p.right->spec() + ")"; },
        },
        kind_);
}

// ---------------------------------------------------------------------------
// Mini-language parser
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 7> kCatalog{{
    {"euclidean", "euclidean:n=<dim>"},
    {"circle", "circle:L=<circumference>"},
    {"flattorus", "flattorus:L=<l1>,<l2>,..."},
    {"sphere2", "sphere2:r=<radius>"},
    {"h3", "h3"},
    {"revtorus", "revtorus:R=<major>,a=<minor>"},
    {"product", "product(<spec>;<spec>)"},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void parse_error(std::string_view token, std::string_view why) {
    fail(ErrorKind::Parse, "manifold spec: " + std::string(why) + " at token '" + std::string(token) + "'");
}

double parse_number(std::string_view token) {
    double v = 0.0;
    if (!parse_double(trim(token), v)) parse_error(token, "expected a number");
    return v;
}

// Splits "k=v1,v2,k2=v3" into key -> list of values.
std::vector<std::pair<std::string, std::vector<std::string_view>>> parse_params(std::string_view body) {
    std::vector<std::pair<std::string, std::vector<std::string_view>>> out;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        std::size_t comma = body.find(',', pos);
        std::string_view item = trim(body.substr(pos, comma == std::string_view::npos ? body.npos : comma - pos));
        if (item.empty()) parse_error(body, "empty parameter");
        if (auto eq = item.find('='); eq != std::string_view::npos) {
            std::string key = lower(trim(item.substr(0, eq)));
            if (key.empty()) parse_error(item, "missing parameter name");
            out.push_back({key, {item.substr(eq + 1)}});
        } else {
            if (out.empty()) parse_error(item, "value without a parameter name");
            out.back().second.push_back(item);
        }
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

Manifold parse_impl(std::string_view text) {
    text = trim(text);
    if (text.empty()) parse_error(text, "empty manifold spec");
    const std::string low = lower(text);

    if (low.rfind("product", 0) == 0) {
        std::string_view rest = trim(text.substr(7));
        if (rest.size() < 2 || rest.front() != '(' || rest.back() != ')') {
            parse_error(text, "product needs the form product(<spec>;<spec>)");
        }
        std::string_view inner = rest.substr(1, rest.size() - 2);
        int depth = 0;
        std::size_t split = std::string_view::npos;
        for (std::size_t i = 0; i < inner.size(); ++i) {
            if (inner[i] == '(') ++depth;
            else if (inner[i] == ')') --depth;
            else if (inner[i] == ';' && depth == 0) {
                if (split != std::string_view::npos) parse_error(inner.substr(i), "product takes exactly two factors");
                split = i;
            }
        }
        if (split == std::string_view::npos) parse_error(inner, "product needs two factors separated by ';'");
        return Manifold::product(parse_impl(inner.substr(0, split)), parse_impl(inner.substr(split + 1)));
    }

    const std::size_t colon = text.find(':');
    const std::string kind = lower(trim(text.substr(0, colon)));
    const std::string_view body = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

    if (kind == "h3") {
        if (!trim(body).empty()) parse_error(body, "h3 takes no parameters");
        return Manifold::hyperbolic3();
    }
    if (body.empty()) parse_error(text, "missing parameters for '" + kind + "'");
    auto params = parse_params(body);

    auto take = [&](std::string_view key, std::size_t count) -> std::vector<std::string_view> {
        for (auto& [k, v] : params) {
            if (k == key) {
                if (count != 0 && v.size() != count) parse_error(body, "wrong number of values for '" + std::string(key) + "'");
                return v;
            }
        }
        parse_error(body, "missing parameter '" + std::string(key) + "'");
    };
    auto check_keys = [&](std::initializer_list<std::string_view> allowed) {
        for (auto& [k, v] : params) {
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) parse_error(k, "unknown parameter");
        }
    };

    try {
        if (kind == "euclidean") {
            check_keys({"n"});
            long long n = 0;
            auto tok = take("n", 1)[0];
            if (!parse_int(trim(tok), n) || n < 1 || n > 64) parse_error(tok, "expected an integer dimension in [1, 64]");
            return Manifold::euclidean(static_cast<int>(n));
        }
        if (kind == "circle") {
            check_keys({"l"});
            return Manifold::circle(parse_number(take("l", 1)[0]));
        }
        if (kind == "flattorus") {
            check_keys({"l"});
            std::vector<double> lengths;
            for (auto tok : take("l", 0)) lengths.push_back(parse_number(tok));
            return Manifold::flat_torus(std::move(lengths));
        }
        if (kind == "sphere2") {
            check_keys({"r"});
            return Manifold::sphere2(parse_number(take("r", 1)[0]));
        }
        if (kind == "revtorus") {
            check_keys({"r", "a"});
            return Manifold::revolution(ProfileCurve::torus(parse_number(take("r", 1)[0]), parse_number(take("a", 1)[0])));
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Parse) throw;
        fail(ErrorKind::Parse, "manifold spec '" + std::string(text) + "': " + e.what());
    }
    parse_error(kind, "unknown manifold kind");
}

}  // namespace

Manifold parse_manifold_spec(std::string_view text) { return parse_impl(text); }

std::span<const std::pair<std::string_view, std::string_view>> manifold_catalog() { return kCatalog; }

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

namespace {

void reduce_point(const Manifold& m, std::span<double> c) {
    std::visit(overloaded{
                   [&](const Euclidean&) {},
                   [&](const Circle& s) { c[0] = wrap(c[0], s.length); },
                   [&](const FlatTorus& f) {
                       for (std::size_t i = 0; i < f.lengths.size(); ++i) c[i] = wrap(c[i], f.lengths[i]);
                   },
                   [&](const Sphere2&) {
                       if (c[0] < 0.0 || c[0] > kPi) {
                           fail(ErrorKind::InvalidPoint, "sphere colatitude must lie in [0, pi], got " + format_double(c[0]));
                       }
                       c[1] = wrap(c[1], kTwoPi);
                   },
                   [&](const Hyperbolic3&) {
                       if (c[0] < 0.0) fail(ErrorKind::InvalidPoint, "hyperbolic radial coordinate must be >= 0");
                       if (c[1] < 0.0 || c[1] > kPi) fail(ErrorKind::InvalidPoint, "hyperbolic polar angle must lie in [0, pi]");
                       c[2] = wrap(c[2], kTwoPi);
                   },
                   [&](const RevolutionSurface&) {
                       c[0] = wrap(c[0], kTwoPi);
                       c[1] = wrap(c[1], kTwoPi);
                   },
                   [&](const Product& p) {
                       const auto k = static_cast<std::size_t>(p.left->chart_arity());
                       reduce_point(*p.left, c.subspan(0, k));
                       reduce_point(*p.right, c.subspan(k));
                   },
               },
               m.kind());
}

}  // namespace

Point make_point(const Manifold& m, std::vector<double> coords) {
    if (static_cast<int>(coords.size()) != m.chart_arity()) {
        fail(ErrorKind::InvalidPoint, "point has " + std::to_string(coords.size()) + " coordinates, " + m.kind_name() +
                                          " charts take " + std::to_string(m.chart_arity()));
    }
    for (double c : coords) {
        if (!std::isfinite(c)) fail(ErrorKind::InvalidPoint, "point coordinate is not finite");
    }
    reduce_point(m, coords);
    return Point{std::move(coords)};
}

void validate_point(const Manifold& m, const Point& x) {
    if (static_cast<int>(x.coords.size()) != m.chart_arity()) {
        fail(ErrorKind::InvalidPoint, "point has " + std::to_string(x.coords.size()) + " coordinates, " + m.kind_name() +
                                          " charts take " + std::to_string(m.chart_arity()));
    }
}

std::pair<Point, Point> split_point(const Product& p, const Point& x) {
    const auto k = static_cast<std::size_t>(p.left->chart_arity());
    return {Point{{x.coords.begin(), x.coords.begin() + static_cast<std::ptrdiff_t>(k)}},
            Point{{x.coords.begin() + static_cast<std::ptrdiff_t>(k), x.coords.end()}}};
}

Point join_points(const Point& left, const Point& right) {
    Point out{left.coords};
    out.coords.insert(out.coords.end(), right.coords.begin(), right.coords.end());
    return out;
}

Point origin_point(const Manifold& m) { return Point{std::vector<double>(static_cast<std::size_t>(m.chart_arity()), 0.0)}; }

}  // namespace heatlab
