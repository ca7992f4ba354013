#include "heatlab/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "heatlab/error.hpp"
#include "heatlab/format.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// JSON has no NaN/inf; nlohmann writes null, read it back as NaN.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }
double num(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

Json coords(const Point& p) { return p.coords; }
Point point_of(const Json& j) { return Point{j.get<std::vector<double>>()}; }

Json location(const Location& l) { return {{"x", coords(l.x)}, {"y", coords(l.y)}, {"t", l.t}}; }
Location location_of(const Json& j) { return {point_of(j.at("x")), point_of(j.at("y")), j.at("t").get<double>()}; }

Json header(const char* kind) { return {{"schema", kReportSchema}, {"kind", kind}}; }

std::string g6(double v) {
    if (std::isnan(v)) return "n/a";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 6);
    return ec == std::errc{} ? std::string(buf, end) : "n/a";
}

std::string point_text(const Json& p) {
    std::string s = "(";
    for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + g6(num(p[i]));
    return s + ")";
}

std::string loc_text(const Json& l) {
    return "x=" + point_text(l.at("x")) + " y=" + point_text(l.at("y")) + " t=" + g6(num(l.at("t")));
}

std::string coords_cell(const Point& p) {
    std::string s;
    for (std::size_t i = 0; i < p.coords.size(); ++i) s += (i ? " " : "") + csv_number(p.coords[i]);
    return s;
}

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string summarize_check(const Json& d) {
    const Json& a = d.at("aggregates");
    std::ostringstream os;
    os << "check " << d.at("bound").get<std::string>() << " on " << d.at("manifold").get<std::string>() << "\n";
    os << "  grid: " << d.at("grid").get<std::string>() << "\n";
    os << "  constants:";
    for (const auto& [k, v] : d.at("constants").items()) os << " " << k << "=" << v.get<std::string>();
    os << "\n";
    if (!d.at("alpha_family").get<std::string>().empty()) os << "  alpha family: " << d.at("alpha_family").get<std::string>() << "\n";
    os << "  K=" << g6(num(d.at("K")));
    if (!d.at("diameter").is_null()) {
        const Json& dm = d.at("diameter");
        os << " diam in [" << g6(num(dm.at("lower"))) << ", " << g6(num(dm.at("upper"))) << "] ("
           << dm.at("method").get<std::string>() << ", upper used)";
    }
    os << "\n";
    os << "  evaluated " << a.at("evaluated").get<std::size_t>() << " points, excluded (unresolved) "
       << a.at("excluded_count").get<std::size_t>() << "\n";
    os << "  sup tY = " << g6(num(a.at("sup_tY"))) << " at " << loc_text(a.at("sup_at")) << "\n";
    os << "  min margin = " << g6(num(a.at("min_margin"))) << " at " << loc_text(a.at("min_at")) << "\n";
    if (!a.at("min_margin_lower_diameter").is_null()) {
        os << "  min margin with lower diameter = " << g6(num(a.at("min_margin_lower_diameter"))) << "\n";
    }
    const Json& rf = d.at("refinement");
    if (rf.at("performed").get<bool>()) {
        os << "  refinement (res " << rf.at("resolution").get<int>() << "): "
           << (rf.at("stable").get<bool>() ? "stable" : "UNSTABLE") << ", max relative change "
           << g6(num(rf.at("max_relative_change"))) << "\n";
    } else {
        os << "  refinement: not checked\n";
    }
    if (!d.at("fit").is_null()) {
        const Json& f = d.at("fit");
        if (f.at("dominated").get<bool>()) {
            os << "  fit: c1*=" << g6(num(f.at("c1"))) << " c2*=" << g6(num(f.at("c2")))
               << " (need c1+c2K >= " << g6(num(f.at("required"))) << ")\n";
        } else {
            os << "  fit: no lattice point dominates; worst sample t=" << g6(num(f.at("worst").at("t")))
               << " tY=" << g6(num(f.at("worst").at("tY"))) << " excess " << g6(num(f.at("worst_excess"))) << "\n";
        }
    }
    if (!d.at("large_time").empty()) {
        os << "  sup tY / t:";
        for (const auto& r : d.at("large_time")) os << " t=" << g6(num(r.at("t"))) << ":" << g6(num(r.at("ratio")));
        os << "\n";
    }
    const auto nv = a.at("violation_count").get<std::size_t>();
    os << "  " << (nv == 0 ? "PASS" : "FAIL") << ": " << nv << " violations beyond tolerance "
       << g6(num(d.at("tolerance"))) << "\n";
    return os.str();
}

std::string summarize_sweep(const Json& d) {
    std::ostringstream os;
    os << "sweep on " << d.at("manifold").get<std::string>() << "\n  grid: " << d.at("grid").get<std::string>() << "\n";
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& r : d.at("rows")) {
        os << "  t=" << g6(num(r.at("t"))) << " sup tY=" << g6(num(r.at("sup_tY"))) << "\n";
        if (!r.at("sup_tY").is_null()) top = std::max(top, num(r.at("sup_tY")));
    }
    os << "  overall sup tY = " << g6(std::isfinite(top) ? top : kNaN) << ", excluded (unresolved) "
       << d.at("excluded").size() << "\n";
    const Json& rf = d.at("refinement");
    if (rf.at("performed").get<bool>()) {
        os << "  refinement (res " << rf.at("resolution").get<int>() << "): "
           << (rf.at("stable").get<bool>() ? "stable" : "UNSTABLE") << "\n";
    }
    return os.str();
}

std::string summarize_h3(const Json& d) {
    std::ostringstream os;
    os << "H3 counterexample scan, t=" << g6(num(d.at("t"))) << ", r up to " << g6(num(d.at("r_max"))) << "\n";
    const auto& rows = d.at("rows");
    const std::size_t stride = std::max<std::size_t>(1, rows.size() / 8);
    for (std::size_t i = 0; i < rows.size(); i += stride) {
        const auto& r = rows[i];
        os << "  r=" << g6(num(r.at("r"))) << " tY=" << g6(num(r.at("tY"))) << " r+2t+1/2=" << g6(num(r.at("asymptote")))
           << " residual=" << g6(num(r.at("residual"))) << "\n";
    }
    os << "  residual decay exponent " << g6(num(d.at("decay_exponent"))) << " (1/r law: -1)\n";
    os << "  tY is unbounded in r: the sharp compact bound cannot hold on H3\n";
    return os.str();
}

std::string summarize_additivity(const Json& d) {
    std::ostringstream os;
    const auto failures = d.at("failures").get<std::size_t>();
    os << "product additivity on " << d.at("manifold").get<std::string>() << "\n  " << d.at("samples").get<std::size_t>()
       << " samples, max |tY_product - tY_factor - 1/2| = " << g6(num(d.at("max_deviation"))) << "\n  "
       << (failures == 0 ? "PASS" : "FAIL") << ": " << failures << " samples beyond the error allowance\n";
    return os.str();
}

std::string summarize_transfer(const Json& d) {
    std::ostringstream os;
    const auto failures = d.at("failures").get<std::size_t>();
    os << "transfer check on " << d.at("manifold").get<std::string>() << ", seed " << d.at("seed").get<std::uint64_t>()
       << "\n  " << d.at("trials").size() << " mixtures, worst gap (mixture max - kernel max) = "
       << g6(num(d.at("worst_gap"))) << "\n  " << (failures == 0 ? "PASS" : "FAIL") << ": " << failures
       << " mixtures above kernel max + 1e-08\n";
    return os.str();
}

std::string summarize_harnack(const Json& d) {
    std::ostringstream os;
    const auto v = d.at("violations").get<std::size_t>();
    os << "harnack check on " << d.at("manifold").get<std::string>() << ", alpha=" << g6(num(d.at("alpha"))) << "\n  "
       << d.at("configurations").get<std::size_t>() << " configurations, min log margin " << g6(num(d.at("min_margin")))
       << "\n  " << (v == 0 ? "PASS" : "FAIL") << ": " << v << " violations\n";
    return os.str();
}

}  // namespace

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

Json to_json(const CheckReport& r) {
    Json d = header("check");
    d["scenario"] = r.scenario;
    d["manifold"] = r.manifold;
    d["bound"] = r.bound;
    d["lhs"] = r.lhs;
    Json c = Json::object();
    for (const auto& [k, v] : r.constants) c[k] = v;
    d["constants"] = c;
    d["alpha_family"] = r.alpha_family;
    d["grid"] = r.grid;
    d["resolution"] = r.resolution;
    d["t_points"] = r.t_points;
    d["poles"] = r.poles;
    d["tolerance"] = r.tolerance;
    d["K"] = r.K;
    d["diameter"] = r.diameter ? Json{{"lower", r.diameter->lower}, {"upper", r.diameter->upper}, {"method", r.diameter->method}}
                               : Json(nullptr);
    d["aggregates"] = {{"evaluated", r.evaluated},
                       {"sup_tY", num(r.sup_tY)},
                       {"sup_at", location(r.sup_at)},
                       {"min_margin", num(r.min_margin)},
                       {"min_at", location(r.min_at)},
                       {"min_margin_lower_diameter", r.min_margin_lower_diameter ? num(*r.min_margin_lower_diameter) : Json(nullptr)},
                       {"violation_count", r.violations.size()},
                       {"excluded_count", r.excluded.size()},
                       {"passed", r.passed()}};
    d["refinement"] = {{"performed", r.refinement.performed},
                       {"stable", r.refinement.stable},
                       {"resolution", r.refinement.resolution},
                       {"max_relative_change", r.refinement.max_relative_change}};
    if (r.fit) {
        d["fit"] = {{"dominated", r.fit->dominated},
                    {"c1", r.fit->c1},
                    {"c2", r.fit->c2},
                    {"required", r.fit->required},
                    {"worst", {{"t", r.fit->worst.t}, {"tY", r.fit->worst.tY}}},
                    {"worst_excess", r.fit->worst_excess},
                    {"lattice", "{0} and 10^(k/8), k=-16..48"}};
    } else {
        d["fit"] = nullptr;
    }
    Json lt = Json::array();
    for (const auto& x : r.large_time) lt.push_back({{"t", x.t}, {"sup_tY", num(x.sup_tY)}, {"ratio", num(x.ratio)}});
    d["large_time"] = lt;
    Json vs = Json::array();
    for (const auto& v : r.violations) {
        vs.push_back({{"x", coords(v.at.x)}, {"y", coords(v.at.y)}, {"t", v.at.t}, {"lhs", v.lhs}, {"rhs", v.rhs},
                      {"margin", v.margin}});
    }
    d["violations"] = vs;
    Json ex = Json::array();
    for (const auto& e : r.excluded) ex.push_back({{"x", coords(e.x)}, {"y", coords(e.y)}, {"t", e.t}});
    d["excluded"] = ex;
    return d;
}

CheckReport check_report_from_json(const Json& d) {
    if (d.value("schema", "") != kReportSchema || d.value("kind", "") != "check") {
        fail(ErrorKind::Parse, "not a heatlab check report");
    }
    try {
        CheckReport r;
        r.scenario = d.at("scenario");
        r.manifold = d.at("manifold");
        r.bound = d.at("bound");
        r.lhs = d.at("lhs");
        for (const auto& [k, v] : d.at("constants").items()) r.constants.emplace_back(k, v.get<std::string>());
        r.alpha_family = d.at("alpha_family");
        r.grid = d.at("grid");
        r.resolution = d.at("resolution");
        r.t_points = d.at("t_points").get<std::vector<double>>();
        r.poles = d.at("poles");
        r.tolerance = num(d.at("tolerance"));
        r.K = num(d.at("K"));
        if (!d.at("diameter").is_null()) {
            const Json& dm = d.at("diameter");
            r.diameter = DiameterEstimate{num(dm.at("lower")), num(dm.at("upper")), dm.at("method")};
        }
        const Json& a = d.at("aggregates");
        r.evaluated = a.at("evaluated");
        r.sup_tY = num(a.at("sup_tY"));
        r.sup_at = location_of(a.at("sup_at"));
        r.min_margin = num(a.at("min_margin"));
        r.min_at = location_of(a.at("min_at"));
        if (!a.at("min_margin_lower_diameter").is_null()) r.min_margin_lower_diameter = num(a.at("min_margin_lower_diameter"));
        const Json& rf = d.at("refinement");
        r.refinement = {rf.at("performed"), rf.at("stable"), rf.at("resolution"), num(rf.at("max_relative_change"))};
        if (!d.at("fit").is_null()) {
            const Json& f = d.at("fit");
            ConstantFit fit;
            fit.dominated = f.at("dominated");
            fit.c1 = num(f.at("c1"));
            fit.c2 = num(f.at("c2"));
            fit.required = num(f.at("required"));
            fit.worst = {num(f.at("worst").at("t")), num(f.at("worst").at("tY"))};
            fit.worst_excess = num(f.at("worst_excess"));
            r.fit = fit;
        }
        for (const auto& x : d.at("large_time")) r.large_time.push_back({num(x.at("t")), num(x.at("sup_tY")), num(x.at("ratio"))});
        for (const auto& v : d.at("violations")) {
            r.violations.push_back({location_of(v), num(v.at("lhs")), num(v.at("rhs")), num(v.at("margin"))});
        }
        for (const auto& e : d.at("excluded")) r.excluded.push_back({point_of(e.at("x")), point_of(e.at("y")), num(e.at("t"))});
        return r;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed check report: ") + e.what());
    }
}

Json to_json(const SweepResult& s, const Manifold& m, const GridSpec& g) {
    Json d = header("sweep");
    d["manifold"] = m.spec();
    d["grid"] = describe_grid(m, g);
    d["resolution"] = g.resolution;
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"t", r.t}, {"sup_tY", num(r.sup_tY)}, {"argmax_x", coords(r.argmax_x)},
                        {"argmax_y", coords(r.argmax_y)}, {"evaluated", r.evaluated}});
    }
    d["rows"] = rows;
    d["refinement"] = {{"performed", s.refinement.performed},
                       {"stable", s.refinement.stable},
                       {"resolution", s.refinement.resolution},
                       {"max_relative_change", s.refinement.max_relative_change}};
    Json ex = Json::array();
    for (const auto& e : s.excluded) ex.push_back({{"x", coords(e.x)}, {"y", coords(e.y)}, {"t", e.t}});
    d["excluded"] = ex;
    return d;
}

Json to_json(const H3Scan& s) {
    Json d = header("h3-scan");
    d["t"] = s.t;
    d["r_max"] = s.r_max;
    d["decay_exponent"] = num(s.decay_exponent);
    Json rows = Json::array();
    for (const auto& r : s.rows) {
        rows.push_back({{"r", r.r}, {"tY", r.tY}, {"asymptote", r.asymptote}, {"residual", r.residual}});
    }
    d["rows"] = rows;
    return d;
}

Json to_json(const AdditivityReport& r) {
    Json d = header("product-additivity");
    d["manifold"] = r.manifold;
    d["samples"] = r.samples;
    d["max_deviation"] = r.max_deviation;
    d["tolerance"] = r.tolerance;
    d["failures"] = r.failures;
    d["worst"] = location(r.worst);
    return d;
}

Json to_json(const TransferReport& r) {
    Json d = header("transfer");
    d["manifold"] = r.manifold;
    d["seed"] = r.seed;
    d["worst_gap"] = num(r.worst_gap);
    d["failures"] = r.failures;
    d["unresolved"] = r.unresolved;
    Json ts = Json::array();
    for (const auto& t : r.trials) {
        ts.push_back({{"sources", t.sources}, {"mixture_max", num(t.mixture_max)}, {"kernel_max", num(t.kernel_max)},
                      {"gap", num(t.gap)}, {"pointwise", num(t.pointwise)}, {"passed", t.passed}});
    }
    d["trials"] = ts;
    return d;
}

Json to_json(const HarnackReport& r) {
    Json d = header("harnack");
    d["manifold"] = r.manifold;
    d["seed"] = r.seed;
    d["alpha"] = r.alpha;
    d["configurations"] = r.configurations;
    d["min_margin"] = num(r.min_margin);
    d["violations"] = r.violations;
    return d;
}

std::string summarize(const Json& doc) {
    try {
        if (doc.value("schema", "") != kReportSchema) fail(ErrorKind::Parse, "document is not a heatlab report");
        const std::string kind = doc.at("kind");
        if (kind == "check") return summarize_check(doc);
        if (kind == "sweep") return summarize_sweep(doc);
        if (kind == "h3-scan") return summarize_h3(doc);
        if (kind == "product-additivity") return summarize_additivity(doc);
        if (kind == "transfer") return summarize_transfer(doc);
        if (kind == "harnack") return summarize_harnack(doc);
        if (doc.contains("summary")) return doc.at("summary").get<std::string>();
        fail(ErrorKind::Parse, "unknown report kind '" + kind + "'");
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, std::string("malformed report: ") + e.what());
    }
}

std::string summary_text(const CheckReport& r) { return summarize(to_json(r)); }

void write_check_csv(std::ostream& os, const CheckReport& r) {
    os << "#schema=" << kGridCsvSchema << "\n";
    os << "manifold,t,x,y,tY,rhs,margin\n";
    const std::string m = quoted(r.manifold);
    for (const auto& row : r.rows) {
        os << m << ',' << csv_number(row.t) << ',' << coords_cell(row.x) << ',' << coords_cell(row.y) << ','
           << csv_number(row.tY) << ',' << csv_number(row.rhs) << ',' << csv_number(row.margin) << '\n';
    }
}

void write_sweep_csv(std::ostream& os, const SweepResult& s, const std::string& manifold) {
    os << "#schema=heatlab-sweep-v1\n";
    os << "manifold,t,sup_tY,argmax_x,argmax_y\n";
    const std::string m = quoted(manifold);
    for (const auto& r : s.rows) {
        os << m << ',' << csv_number(r.t) << ',' << csv_number(r.sup_tY) << ',' << coords_cell(r.argmax_x) << ','
           << coords_cell(r.argmax_y) << '\n';
    }
}

void write_h3_csv(std::ostream& os, const H3Scan& s) {
    os << "#schema=heatlab-h3-scan-v1\n";
    os << "r,t,tY,asymptote,residual\n";
    for (const auto& r : s.rows) {
        os << csv_number(r.r) << ',' << csv_number(s.t) << ',' << csv_number(r.tY) << ',' << csv_number(r.asymptote) << ','
           << csv_number(r.residual) << '\n';
    }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write to " + path.string() + " failed");
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot read " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

}  // namespace heatlab
