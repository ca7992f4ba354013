#include "heatlab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <ostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "heatlab/bounds.hpp"
#include "heatlab/format.hpp"
#include "heatlab/harness.hpp"
#include "heatlab/kernels.hpp"
#include "heatlab/manifolds.hpp"
#include "heatlab/report.hpp"
#include "heatlab/spectral.hpp"

namespace heatlab {

namespace {

enum class Format { Json, Csv };

bool has_spectral(const Manifold& m) {
    if (m.as<RevolutionSurface>()) return true;
    if (const auto* p = m.as<Product>()) return has_spectral(*p->left) || has_spectral(*p->right);
    return false;
}

struct Invocation {
    std::string command;
    std::string manifold;
    std::string bound = "sharp-compact";
    std::string tgrid;
    int res = 0;
    std::string constants_path;
    std::uint64_t seed = 0;
    std::string out;
    std::string format;
    bool fit = false;
    bool refine = false;
    double alpha = 2.0;
    std::string family = "linear";
    double t0 = 0.5;
    double window = 3.0;
    std::optional<double> tol;

    // kernel
    std::string x, y;
    double t = 1.0;
    // counterexample
    bool h3 = false;
    double rmax = 40.0;
    int steps = 400;
    // transfer
    int trials = 50;
    // validate
    int grid_n = 512;
};

Format output_format(const Invocation& inv) {
    if (inv.format == "json") return Format::Json;
    if (inv.format == "csv") return Format::Csv;
    if (!inv.format.empty()) fail(ErrorKind::Parse, "--format: expected csv or json, got '" + inv.format + "'");
    return std::filesystem::path(inv.out).extension() == ".csv" ? Format::Csv : Format::Json;
}

void check_out_path(const Invocation& inv) {
    if (inv.out.empty()) return;
    const auto parent = std::filesystem::path(inv.out).parent_path();
    if (!parent.empty() && !std::filesystem::is_directory(parent)) {
        fail(ErrorKind::Io, "--out: directory '" + parent.string() + "' does not exist");
    }
}

Manifold manifold_of(const Invocation& inv) {
    if (inv.manifold.empty()) fail(ErrorKind::Parse, "--manifold is required for '" + inv.command + "'");
    try {
        return parse_manifold_spec(inv.manifold);
    } catch (const Error& e) {
        throw Error(e.kind(), "--manifold: " + std::string(e.what()));
    }
}

Point point_of(const Manifold& m, const std::string& text, const char* flag) {
    std::vector<double> c;
    std::string_view s = text;
    while (!s.empty()) {
        const auto p = s.find(',');
        const auto tok = s.substr(0, p);
        double v = 0.0;
        if (!parse_double(tok, v)) fail(ErrorKind::Parse, std::string(flag) + ": '" + std::string(tok) + "' is not a number");
        c.push_back(v);
        if (p == std::string_view::npos) break;
        s.remove_prefix(p + 1);
    }
    try {
        return make_point(m, std::move(c));
    } catch (const Error& e) {
        throw Error(e.kind(), std::string(flag) + ": " + e.what());
    }
}

GridSpec grid_of(const Manifold& m, const Invocation& inv, std::string_view default_tgrid, int default_res) {
    TimeGrid tg;
    try {
        tg = parse_time_grid(inv.tgrid.empty() ? default_tgrid : std::string_view(inv.tgrid));
    } catch (const Error& e) {
        throw Error(e.kind(), "--tgrid: " + std::string(e.what()));
    }
    const int res = inv.res > 0 ? inv.res : default_res;
    if (res < 16) fail(ErrorKind::Parse, "--res: need at least 16 points per period, got " + std::to_string(res));
    GridSpec g;
    g.t_points = tg.points();
    g.t_description = tg.describe();
    g.resolution = res;
    g.poles = default_poles(m);
    g.window = inv.window;
    g.check_refinement = inv.refine;
    try {
        validate_grid_spec(m, g);
    } catch (const Error& e) {
        throw Error(e.kind(), "--tgrid/--res: " + std::string(e.what()));
    }
    return g;
}

BoundConstants constants_of(const Invocation& inv) {
    if (inv.constants_path.empty()) return {};
    try {
        return load_constants(inv.constants_path);
    } catch (const Error& e) {
        throw Error(e.kind(), "--constants: " + std::string(e.what()));
    }
}

void emit(const Invocation& inv, std::ostream& out, const Json& doc, const std::function<void(std::ostream&)>& csv) {
    out << summarize(doc);
    if (inv.out.empty()) return;
    std::ostringstream os;
    if (output_format(inv) == Format::Csv) {
        if (!csv) fail(ErrorKind::Parse, "--format: '" + inv.command + "' has no CSV form; use json");
        csv(os);
    } else {
        os << doc.dump(2) << "\n";
    }
    write_text_file(inv.out, os.str());
}

// ---------------------------------------------------------------------------

int cmd_kernel(const Invocation& inv, std::ostream& out) {
    const Manifold m = manifold_of(inv);
    if (inv.x.empty()) fail(ErrorKind::Parse, "--x is required for 'kernel'");
    const Point x = point_of(m, inv.x, "--x");
    const Point y = inv.y.empty() ? origin_point(m) : point_of(m, inv.y, "--y");
    const KernelJet j = kernel_jet(m, x, inv.t, y);
    const double tY = inv.t * (j.ld.grad_norm2() - j.ld.dt_ln);
    std::ostringstream s;
    s << "kernel of " << m.spec() << " at t=" << format_double(inv.t) << "\n"
      << "  G = " << format_double(j.eval.value) << " (ln G = " << format_double(j.eval.log_value)
      << ", tail bound " << format_double(j.eval.tail_bound) << ")\n"
      << "  |grad ln G|^2 = " << format_double(j.ld.grad_norm2()) << ", lap ln G = " << format_double(j.ld.lap_ln)
      << ", dt ln G = " << format_double(j.ld.dt_ln) << "\n"
      << "  t Y = " << format_double(tY) << " (" << to_string(j.ld.method) << ", error estimate "
      << format_double(j.ld.error_estimate) << ")\n";
    Json doc = {{"schema", kReportSchema},
                {"kind", "kernel"},
                {"manifold", m.spec()},
                {"x", x.coords},
                {"y", y.coords},
                {"t", inv.t},
                {"value", j.eval.value},
                {"log_value", j.eval.log_value},
                {"tail_bound", j.eval.tail_bound},
                {"grad_ln", j.ld.grad},
                {"lap_ln", j.ld.lap_ln},
                {"dt_ln", j.ld.dt_ln},
                {"tY", tY},
                {"method", std::string(to_string(j.ld.method))},
                {"error_estimate", j.ld.error_estimate},
                {"summary", s.str()}};
    emit(inv, out, doc, nullptr);
    return 0;
}

int cmd_check(const Invocation& inv, std::ostream& out, bool fit_only) {
    const Manifold m = manifold_of(inv);
    const BoundSelector bound = fit_only ? BoundSelector::SharpCompact : parse_bound_selector(inv.bound);
    check_compatibility(m, bound);
    const BoundConstants c = constants_of(inv);
    const GridSpec g = grid_of(m, inv, has_spectral(m) ? "0.05:10:log:20" : "0.01:10:log:50", 64);
    CheckOptions opt;
    opt.alpha = inv.alpha;
    opt.family = inv.family;
    opt.hamilton_t0 = inv.t0;
    opt.fit = inv.fit || fit_only;
    opt.collect_rows = !inv.out.empty() && output_format(inv) == Format::Csv;
    opt.tolerance = inv.tol;
    const CheckReport r = run_check(m, g, bound, c, opt);
    emit(inv, out, to_json(r), [&](std::ostream& os) { write_check_csv(os, r); });
    if (fit_only) return r.fit && r.fit->dominated ? 0 : 1;
    return r.passed() ? 0 : 1;
}

int cmd_sweep(const Invocation& inv, std::ostream& out) {
    const Manifold m = manifold_of(inv);
    const GridSpec g = grid_of(m, inv, has_spectral(m) ? "0.05:10:log:20" : "0.01:10:log:50", 64);
    const SweepResult s = sweep_sup_tY(m, g);
    emit(inv, out, to_json(s, m, g), [&](std::ostream& os) { write_sweep_csv(os, s, m.spec()); });
    return 0;
}

int cmd_counterexample(const Invocation& inv, std::ostream& out) {
    if (!inv.h3) fail(ErrorKind::Parse, "counterexample: only --h3 is available");
    const H3Scan s = h3_counterexample_scan(inv.rmax, inv.t, inv.steps);
    emit(inv, out, to_json(s), [&](std::ostream& os) { write_h3_csv(os, s); });
    return 0;
}

int cmd_product(const Invocation& inv, std::ostream& out) {
    const Manifold m = manifold_of(inv);
    const GridSpec g = grid_of(m, inv, "0.05:2:log:6", 32);
    const AdditivityReport r = product_additivity_check(m, g);
    emit(inv, out, to_json(r), nullptr);
    return r.failures == 0 ? 0 : 1;
}

int cmd_transfer(const Invocation& inv, std::ostream& out) {
    const Manifold m = manifold_of(inv);
    const GridSpec g = grid_of(m, inv, "0.05:2:log:8", 32);
    const TransferReport r = transfer_check(m, inv.trials, inv.seed, g);
    emit(inv, out, to_json(r), nullptr);
    return r.failures == 0 ? 0 : 1;
}

int cmd_validate(const Invocation& inv, std::ostream& out) {
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    if (inv.grid_n < 16) fail(ErrorKind::Parse, "--grid-n: need at least 16");
    std::ostringstream s;
    Json checks = Json::array();
    bool all = true;
    auto record = [&](const std::string& name, double value, double limit, bool below = true) {
        const bool ok = below ? value <= limit : value >= limit;
        all = all && ok;
        checks.push_back({{"check", name}, {"value", value}, {"limit", limit}, {"passed", ok}});
        s << "  " << (ok ? "ok  " : "FAIL") << " " << name << ": " << format_double(value) << (below ? " <= " : " >= ")
          << format_double(limit) << "\n";
    };

    double dual = 0.0;
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
        for (double off : {0.0, 1.0, 0.5 * kTwoPi}) dual = std::max(dual, poisson_dual_check(kTwoPi, t, off).discrepancy);
    }
    record("poisson dual discrepancy, circle L=2pi", dual, 1e-12);

    SpectralBuildOptions o;
    o.grid_n = inv.grid_n;
    const SpectralModel flat = build_spectral_model(ProfileCurve::constant(1.0, 1.0), o);
    const FlatTorusValidation v = validate_against_flat_torus(flat, 25, 0.5);
    record("flat torus eigenvalue relative error (first 25, grid " + std::to_string(inv.grid_n) + ")",
           v.max_eigenvalue_rel_error, 1e-3);
    record("flat torus kernel error at t=0.5", v.max_kernel_error, 1e-4);

    // Second-order convergence of the m = 0 ladder k^2; index 3 is k = 2.
    SturmLiouvilleProblem p{0, ProfileCurve::constant(1.0, 1.0), inv.grid_n};
    const auto coarse = mode_eigenvalues(p);
    p.grid_n *= 2;
    const auto fine = mode_eigenvalues(p);
    const double ratio = std::abs(coarse[3] - 4.0) / std::abs(fine[3] - 4.0);
    record("eigenvalue refinement ratio (expect 4)", std::abs(ratio - 4.0) / 4.0, 0.25);

    for (const char* spec : {"circle:L=6.283185307179586", "flattorus:L=6.283185307179586,6.283185307179586",
                             "sphere2:r=1", "revtorus:R=2,a=1"}) {
        const Manifold m = parse_manifold_spec(spec);
        double worst = 0.0;
        for (double t : {0.1, 1.0, 10.0}) worst = std::max(worst, std::abs(integrate_kernel(m, origin_point(m), t) - 1.0));
        record(std::string("|integral G - 1| on ") + spec, worst, 1e-6);
    }
    const std::string summary = "validate: infrastructure oracles\n" + s.str() + "  " + (all ? "PASS" : "FAIL") + "\n";
    Json doc = {{"schema", kReportSchema}, {"kind", "validate"}, {"checks", checks}, {"passed", all}, {"summary", summary}};
    emit(inv, out, doc, nullptr);
    return all ? 0 : 1;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NumericalFailure:
        case ErrorKind::Truncation:
        case ErrorKind::Unresolved:
        case ErrorKind::Profile:
            return 3;
        default:
            return 2;
    }
}

std::string help_footer() {
    std::string s = "\nManifolds (--manifold):\n";
    for (const auto& [name, syntax] : manifold_catalog()) s += "  " + std::string(name) + "  " + std::string(syntax) + "\n";
    s += "\nBounds (--bound):\n";
    for (const auto& [name, text] : bound_catalog()) s += "  " + std::string(name) + "  " + std::string(text) + "\n";
    s += "\nTime grid (--tgrid): lo:hi:lin|log:count\n"
         "Exit codes: 0 pass, 1 bound violation, 2 usage or input error, 3 numerical failure\n";
    return s;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Invocation inv;
    CLI::App app{"heatlab: heat kernels and Li-Yau gradient bounds on model manifolds", "heatlab"};
    app.footer(help_footer());
    app.require_subcommand(1, 1);

    auto common = [&](CLI::App* sub, bool grid) {
        sub->add_option("--out", inv.out, "report path (.csv selects CSV unless --format is given)");
        sub->add_option("--format", inv.format, "csv or json");
        if (!grid) return;
        sub->add_option("--manifold", inv.manifold, "manifold spec, e.g. circle:L=6.2832")->required();
        sub->add_option("--tgrid", inv.tgrid, "time grid lo:hi:lin|log:count");
        sub->add_option("--res", inv.res, "space points per period / axis");
        sub->add_option("--window", inv.window, "space window for noncompact manifolds");
        sub->footer(help_footer());
    };

    auto* kernel = app.add_subcommand("kernel", "evaluate one kernel value and its log-derivatives");
    common(kernel, false);
    kernel->add_option("--manifold", inv.manifold, "manifold spec")->required();
    kernel->add_option("--x", inv.x, "point, comma separated chart coordinates")->required();
    kernel->add_option("--y", inv.y, "pole (default: origin)");
    kernel->add_option("--t", inv.t, "time");
    kernel->footer(help_footer());

    auto* check = app.add_subcommand("check", "check a bound over a space-time grid");
    common(check, true);
    check->add_option("--bound", inv.bound, "bound selector");
    check->add_option("--constants", inv.constants_path, "key=value constants file");
    check->add_flag("--fit", inv.fit, "attach the minimal (c1, c2) fit");
    check->add_flag("--refine", inv.refine, "re-run at doubled resolution and flag instability");
    check->add_option("--alpha", inv.alpha, "alpha of the classical bound");
    check->add_option("--family", inv.family, "alpha family of the noncompact bound: linear | constant:<a>");
    check->add_option("--t0", inv.t0, "time shift of the Hamilton check");
    check->add_option("--tol", inv.tol, "violation tolerance (default 1e-8, 1e-5 with a spectral factor)");

    auto* sweep = app.add_subcommand("sweep", "sup of t Y per time over the grid");
    common(sweep, true);
    sweep->add_flag("--refine", inv.refine, "re-run at doubled resolution and flag instability");

    auto* counter = app.add_subcommand("counterexample", "H3: t Y grows like r + 2t + 1/2");
    common(counter, false);
    counter->add_flag("--h3", inv.h3, "scan the hyperbolic 3-space kernel")->required();
    counter->add_option("--rmax", inv.rmax, "largest radius");
    counter->add_option("--t", inv.t, "time");
    counter->add_option("--steps", inv.steps, "radial steps");

    auto* product = app.add_subcommand("product", "additivity of t Y on M x R");
    common(product, true);

    auto* transfer = app.add_subcommand("transfer", "random positive mixtures never exceed the kernel sup");
    common(transfer, true);
    transfer->add_option("--trials", inv.trials, "number of mixtures");
    transfer->add_option("--seed", inv.seed, "random seed");

    auto* fit = app.add_subcommand("fit", "minimal (c1, c2) for the sharp compact bound");
    common(fit, true);
    fit->add_option("--constants", inv.constants_path, "key=value constants file");
    fit->add_flag("--refine", inv.refine, "re-run at doubled resolution and flag instability");

    auto* validate = app.add_subcommand("validate", "infrastructure oracles");
    common(validate, false);
    validate->add_option("--grid-n", inv.grid_n, "Sturm-Liouville grid for the flat torus comparison");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        inv.command = app.get_subcommands().front()->get_name();
        check_out_path(inv);
        if (kernel->parsed()) return cmd_kernel(inv, out);
        if (check->parsed()) return cmd_check(inv, out, false);
        if (sweep->parsed()) return cmd_sweep(inv, out);
        if (counter->parsed()) return cmd_counterexample(inv, out);
        if (product->parsed()) return cmd_product(inv, out);
        if (transfer->parsed()) return cmd_transfer(inv, out);
        if (fit->parsed()) return cmd_check(inv, out, true);
        if (validate->parsed()) return cmd_validate(inv, out);
    } catch (const Error& e) {
        err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

}  // namespace heatlab
