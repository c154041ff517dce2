#include "fracheat/cli.hpp"

#include "fracheat/asymptotics.hpp"
#include "fracheat/functionals.hpp"
#include "fracheat/geometry.hpp"
#include "fracheat/stable_kernel.hpp"
#include "fracheat/stable_sampler.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace fracheat {

namespace {

constexpr std::uint64_t default_seed = 20240101;

struct usage_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct run_config {
    std::string subcommand;
    double alpha = 1.5;
    int d = 2;
    std::string shape_spec = "ball:d=2,r=1";
    std::string t_grid_spec;
    std::optional<double> t;
    std::optional<double> t_min;
    std::optional<double> t_max;
    int t_count = 8;
    std::uint64_t n_samples = 200000;
    int n_steps = 32;
    std::optional<std::uint64_t> seed_flag;
    std::uint64_t seed = default_seed;
    unsigned threads = 1;
    std::string output;
    std::string summary_output;
    double tolerance = 0.0;
    std::string theorem;
    int k = 0;
    std::string method = "both";
    std::string route = "anchored";
    double padding = 0.0;
    int quadrature_nodes = 32;
    std::string profile_out;
    std::string r_grid = "1e-3:1e3:25:log";
    double inject_heat_shift = 0.0;
    std::string dump_skeletons;
    int dump_count = 10;
};

std::uint64_t resolve_seed(const run_config& rc) {
    if (rc.seed_flag)
        return *rc.seed_flag;
    if (const char* env = std::getenv("FRACHEAT_SEED")) {
        const std::string text(env);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            if (!text.empty() && text[0] != '-')
                v = std::stoull(text, &used, 10);
        } catch (const std::exception&) {
            used = 0;
        }
        if (text.empty() || used != text.size())
            throw usage_error("FRACHEAT_SEED must be a nonnegative integer, got '" + text + "'");
        return v;
    }
    return default_seed;
}

t_grid resolve_grid(const run_config& rc, double default_min) {
    if (rc.t) {
        if (!rc.t_grid_spec.empty() || rc.t_min || rc.t_max)
            throw usage_error("--t cannot be combined with --t-grid, --t-min or --t-max");
        return t_grid({*rc.t});
    }
    if (!rc.t_grid_spec.empty()) {
        if (rc.t_min || rc.t_max)
            throw usage_error("--t-grid cannot be combined with --t-min or --t-max");
        return t_grid::parse(rc.t_grid_spec);
    }
    const double hi = rc.t_max.value_or(1e-1);
    const double lo = rc.t_min.value_or(std::min(default_min, hi / 10.0));
    return t_grid::logarithmic(lo, hi, rc.t_count);
}

std::string grid_text(const t_grid& g) {
    std::string s;
    for (double t : g.values())
        s += (s.empty() ? "" : ";") + format_double(t);
    return s;
}

// header comment echoing the resolved configuration; thread count is omitted so output does not depend on it
void write_header(std::ostream& out, const run_config& rc, const std::string& extra) {
    out << "# fracheat " << version << " subcommand=" << rc.subcommand;
    if (!rc.theorem.empty())
        out << " theorem=" << rc.theorem;
    out << " alpha=" << format_double(rc.alpha) << " shape=" << rc.shape_spec << " n_samples=" << rc.n_samples
        << " n_steps=" << rc.n_steps << " seed=" << rc.seed << " quadrature_nodes=" << rc.quadrature_nodes
        << " route=" << rc.route << " method=" << rc.method;
    if (rc.tolerance > 0.0)
        out << " tolerance=" << format_double(rc.tolerance);
    if (rc.k > 0)
        out << " k=" << rc.k;
    if (!extra.empty())
        out << ' ' << extra;
    out << '\n';
}

functional_config functional_of(const run_config& rc) {
    functional_config cfg;
    cfg.n_samples = rc.n_samples;
    cfg.n_steps = rc.n_steps;
    cfg.seed = rc.seed;
    cfg.threads = rc.threads;
    cfg.quadrature_nodes = rc.quadrature_nodes;
    cfg.truncation_padding = rc.padding;
    if (rc.route == "anchored")
        cfg.route = psi_route::anchored;
    else if (rc.route == "padded")
        cfg.route = psi_route::padded_box;
    else
        throw usage_error("--route must be anchored or padded");
    return cfg;
}

estimate_row row_of(const run_config& rc, const shape& s, double t, const std::string& quantity,
                    const std::string& method, const estimate& e, int n_steps) {
    estimate_row row;
    row.alpha = rc.alpha;
    row.d = s.dim();
    row.shape = s.spec();
    row.t = t;
    row.quantity = quantity;
    row.method = method;
    row.value = e;
    row.n_steps = n_steps;
    return row;
}

class output_target {
public:
    output_target(const std::string& path, std::ostream& fallback) : _out{&fallback} {
        if (!path.empty()) {
            _file = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*_file)
                throw usage_error("cannot open output file '" + path + "'");
            _out = _file.get();
        }
    }
    std::ostream& stream() { return *_out; }

private:
    std::unique_ptr<std::ofstream> _file;
    std::ostream* _out;
};

int cmd_kernel(const run_config& rc, std::ostream& out, std::ostream& err) {
    const stability_index index(rc.alpha, rc.d);
    const double t = rc.t.value_or(1.0);
    std::shared_ptr<const kernel> k = shared_kernel(index);
    if (!rc.profile_out.empty()) {
        std::ofstream file(rc.profile_out, std::ios::binary);
        if (!file)
            throw usage_error("cannot open profile output '" + rc.profile_out + "'");
        const kernel_profile profile = k->profile() ? *k->profile() : build_profile(index);
        profile.write_csv(file);
    }
    const t_grid radii_desc = [&] {
        try {
            return t_grid::parse(rc.r_grid);
        } catch (const std::invalid_argument& e) {
            throw usage_error(std::string("--r-grid: ") + e.what());
        }
    }();
    std::ostringstream extra;
    extra << "d=" << rc.d << " t=" << format_double(t) << " beta=" << format_double(beta_const(index))
          << " kappa_d=" << format_double(kappa_const(rc.d)) << " p1_origin=" << format_double(density_at_origin(index));
    if (rc.alpha > 1.0)
        extra << " c_star=" << format_double(c_star_const(rc.alpha));
    if (!index.gaussian())
        extra << " fitted_two_sided_c=" << format_double(fitted_kernel_constant(index));
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, extra.str());
    o << "alpha,d,t,r,density,tail_ratio\n";
    const double beta = beta_const(index);
    const auto& rv = radii_desc.values();
    for (auto it = rv.rbegin(); it != rv.rend(); ++it) {
        const double r = *it;
        const double p = (*k)(t, r);
        const double tail = beta > 0.0 ? p * std::pow(r, rc.d + rc.alpha) / (t * beta) : 0.0;
        o << format_double(rc.alpha) << ',' << rc.d << ',' << format_double(t) << ',' << format_double(r) << ','
          << format_double(p) << ',' << format_double(tail) << '\n';
    }
    err << "kernel alpha=" << rc.alpha << " d=" << rc.d << ": beta=" << beta << "\n";
    return 0;
}

int cmd_perimeter(const run_config& rc, const shape& s, std::ostream& out, std::ostream& err) {
    perimeter_config pc;
    pc.n_samples = rc.n_samples;
    pc.seed = rc.seed;
    pc.threads = rc.threads;
    if (rc.method != "both" && rc.method != "mc" && rc.method != "quadrature")
        throw usage_error("--method must be mc, quadrature or both for perimeter");
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, "");
    write_estimate_header(o);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (rc.method != "mc") {
        const estimate e = alpha_perimeter(s, rc.alpha, perimeter_method::quadrature);
        write_estimate_row(o, row_of(rc, s, nan, "alpha_perimeter", "quadrature", e, 0));
        err << "P_alpha quadrature = " << format_double(e.value) << "\n";
    }
    if (rc.method != "quadrature") {
        const estimate e = alpha_perimeter(s, rc.alpha, perimeter_method::monte_carlo, pc);
        write_estimate_row(o, row_of(rc, s, nan, "alpha_perimeter", "monte_carlo", e, 0));
        err << "P_alpha Monte Carlo = " << format_double(e.value) << " +- " << format_double(e.std_error) << "\n";
    }
    return 0;
}

int cmd_heat(const run_config& rc, const shape& s, const t_grid& grid, std::ostream& out, std::ostream&) {
    const stability_index index(rc.alpha, s.dim());
    const functional_config cfg = functional_of(rc);
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, "t_grid=" + grid_text(grid));
    write_estimate_header(o);
    const bool quadrature = s.is_ball() || s.dim() == 2 || index.gaussian();
    for (double t : grid.values()) {
        const heat_content_result h = heat_content(s, index, t, cfg);
        write_estimate_row(o, row_of(rc, s, t, "H", "monte_carlo", h.heat, 0));
        write_estimate_row(o, row_of(rc, s, t, "deficit", "monte_carlo", h.deficit, 0));
        if (quadrature) {
            const double q = deficit_quadrature(s, *shared_kernel(index), t);
            write_estimate_row(o, row_of(rc, s, t, "deficit", "quadrature", {q, 0.0, 0, rc.seed}, 0));
        }
        if (index.gaussian() && s.is_box())
            write_estimate_row(o, row_of(rc, s, t, "H", "exact", {box_heat_content_exact(s, t), 0.0, 0, rc.seed}, 0));
    }
    return 0;
}

int cmd_shc(const run_config& rc, const shape& s, const t_grid& grid, std::ostream& out, std::ostream& err) {
    const stability_index index(rc.alpha, s.dim());
    const functional_config cfg = functional_of(rc);
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, "t_grid=" + grid_text(grid));
    write_estimate_header(o);
    for (double t : grid.values()) {
        const spectral_result q = spectral_heat_content(s, index, t, cfg);
        write_estimate_row(o, row_of(rc, s, t, "Q", "monte_carlo", q.coarse, q.coarse_steps));
        write_estimate_row(o, row_of(rc, s, t, "Q", "monte_carlo", q.fine, q.fine_steps));
        write_estimate_row(o, row_of(rc, s, t, "H", "coupled_endpoint", q.heat, q.fine_steps));
        err << "t=" << format_double(t) << " Q refinement gap (n vs 2n) = " << format_double(q.refinement_gap())
            << "\n";
    }
    if (!rc.dump_skeletons.empty()) {
        std::ofstream file(rc.dump_skeletons, std::ios::binary);
        if (!file)
            throw usage_error("cannot open skeleton dump '" + rc.dump_skeletons + "'");
        rng_engine rng = make_stream(derive_seed(rc.seed, {0x534b}), 0);
        std::vector<path_skeleton> paths;
        for (int i = 0; i < rc.dump_count; ++i)
            paths.push_back(sample_path_skeleton(sample_uniform(s, rng), grid.t_max(), rc.n_steps, index, rng));
        write_skeleton_csv(file, paths);
    }
    return 0;
}

int cmd_psi(const run_config& rc, const shape& s, const t_grid& grid, std::ostream& out, std::ostream&) {
    const stability_index index(rc.alpha, s.dim());
    const functional_config cfg = functional_of(rc);
    if (rc.method != "both" && rc.method != "direct" && rc.method != "decomposed")
        throw usage_error("--method must be direct, decomposed or both for psi");
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, "t_grid=" + grid_text(grid));
    write_estimate_header(o);
    auto emit = [&](double t, const psi_result& r, const std::string& method) {
        write_estimate_row(o, row_of(rc, s, t, "psi", method, r.psi, rc.n_steps));
        write_estimate_row(o, row_of(rc, s, t, "psi_excess", method, r.excess, rc.n_steps));
        write_estimate_row(o, row_of(rc, s, t, "R_lower", method, {r.r_lower, 0.0, 0, rc.seed}, rc.n_steps));
        write_estimate_row(o, row_of(rc, s, t, "R_upper", method, {r.r_upper, 0.0, 0, rc.seed}, rc.n_steps));
        if (r.bias_bound > 0.0)
            write_estimate_row(o, row_of(rc, s, t, "truncation_bias_bound", method, {r.bias_bound, 0.0, 0, rc.seed},
                                         rc.n_steps));
    };
    for (double t : grid.values()) {
        if (rc.method != "decomposed") {
            const std::string method = cfg.route == psi_route::anchored ? "direct_anchored" : "direct_padded";
            emit(t, psi_direct(s, index, t, cfg), method);
            write_estimate_row(o, row_of(rc, s, t, "R", method, remainder_R(s, index, t, cfg), rc.n_steps));
        }
        if (rc.method != "direct")
            emit(t, psi_decomposed(s, index, t, cfg), "decomposed");
    }
    return 0;
}

int cmd_moments(const run_config& rc, const shape& s, const t_grid& grid, std::ostream& out, std::ostream& err) {
    const stability_index index(rc.alpha, s.dim());
    const functional_config cfg = functional_of(rc);
    std::vector<int> ks;
    if (rc.k == 0)
        ks = {1, 2, 3};
    else if (rc.k >= 1 && rc.k <= 3)
        ks = {rc.k};
    else
        throw usage_error("--k must be 1, 2 or 3");
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, "t_grid=" + grid_text(grid));
    write_estimate_header(o);
    static const char* methods[] = {"exact", "delta_quadrature", "monte_carlo"};
    for (double t : grid.values())
        for (int k : ks) {
            const estimate e = t_moment(s, index, t, k, cfg);
            write_estimate_row(o, row_of(rc, s, t, "T" + std::to_string(k), methods[k - 1], e, k == 3 ? rc.n_steps : 0));
            err << "T^(" << k << ")(" << format_double(t) << ") = " << format_double(e.value) << "\n";
        }
    return 0;
}

void print_summary(std::ostream& err, const theorem_report& r) {
    err << r.theorem_id << ": ";
    if (r.fitted)
        err << "fitted " << format_double(r.fit.limit) << " +- " << format_double(r.fit.std_error) << " vs paper "
            << format_double(r.paper_constant) << (r.one_sided ? " (upper bound)" : "") << ", tolerance "
            << format_double(r.tolerance) << "; ";
    std::size_t failed = 0;
    for (const auto& row : r.rows)
        failed += row.pass ? 0 : 1;
    err << r.rows.size() - failed << "/" << r.rows.size() << " inequality checks pass; verdict "
        << (r.verdict ? "PASS" : "FAIL") << "\n";
    for (const auto& c : r.checks)
        err << "  check " << c.name << ": " << format_double(c.value) << " vs " << format_double(c.reference)
            << " (sigma " << format_double(c.std_error) << ") " << (c.pass ? "pass" : "fail") << "\n";
    for (const auto& n : r.notes)
        err << "  note " << n << "\n";
}

int emit_report(const run_config& rc, const theorem_report& report, const t_grid& grid, std::ostream& out,
                std::ostream& err) {
    output_target target(rc.output, out);
    std::ostream& o = target.stream();
    write_header(o, rc, "t_grid=" + grid_text(grid));
    write_report_header(o);
    write_report_rows(o, report);
    if (rc.summary_output.empty()) {
        o << '\n';
        write_summary_header(o);
        write_summary_row(o, report);
    } else {
        output_target summary(rc.summary_output, out);
        write_header(summary.stream(), rc, "t_grid=" + grid_text(grid));
        write_summary_header(summary.stream());
        write_summary_row(summary.stream(), report);
    }
    print_summary(err, report);
    return report.verdict ? 0 : 1;
}

int cmd_verify(const run_config& rc, const shape& s, std::ostream& out, std::ostream& err) {
    verify_config vc;
    vc.functional = functional_of(rc);
    vc.tolerance = rc.tolerance;
    const std::string& id = rc.theorem;
    const double default_min = rc.alpha < 1.0 ? 1e-3 : 1e-4;
    const t_grid grid = resolve_grid(rc, default_min);
    if (grid.size() < 3)
        throw usage_error("verify needs a t grid with at least 3 points");
    theorem_report report;
    if (id == "hc-a")
        report = verify_hc_a(s, rc.alpha, grid, vc);
    else if (id == "hc-b")
        report = verify_hc_b(s, grid, vc);
    else if (id == "hc-c")
        report = verify_hc_c(s, rc.alpha, grid, vc);
    else if (id == "main-i")
        report = verify_main_i(s, rc.alpha, grid, vc);
    else if (id == "main-ii")
        report = verify_main_ii(s, grid, vc);
    else if (id == "main-iii")
        report = verify_main_iii(s, rc.alpha, grid, vc);
    else
        throw usage_error("unknown theorem '" + id + "'");
    return emit_report(rc, report, grid, out, err);
}

int cmd_audit(const run_config& rc, const shape& s, std::ostream& out, std::ostream& err) {
    verify_config vc;
    vc.functional = functional_of(rc);
    vc.inject_heat_shift = rc.inject_heat_shift;
    const t_grid grid = resolve_grid(rc, rc.alpha < 1.0 ? 1e-3 : 1e-4);
    const theorem_report report = inequality_audit(s, stability_index(rc.alpha, s.dim()), grid, vc);
    return emit_report(rc, report, grid, out, err);
}

void add_common(CLI::App* sub, run_config& rc, bool needs_grid) {
    sub->add_option("--alpha", rc.alpha, "stability index in (0, 2]");
    sub->add_option("--shape", rc.shape_spec, "ball:d=2,r=1 or box:d=2,lo=0,0,hi=1,1");
    sub->add_option("--n-samples", rc.n_samples, "Monte Carlo samples per estimate")->check(CLI::Range(2ull, 1ull << 40));
    sub->add_option("--seed", rc.seed_flag, "seed (overrides FRACHEAT_SEED)");
    sub->add_option("--threads", rc.threads, "worker threads; results do not depend on it")->check(CLI::Range(1u, 256u));
    sub->add_option("-o,--output", rc.output, "output CSV path (default stdout)");
    if (needs_grid) {
        sub->add_option("--t", rc.t, "single time");
        sub->add_option("--t-grid", rc.t_grid_spec, "min:max:count:log");
        sub->add_option("--t-min", rc.t_min, "smallest grid time");
        sub->add_option("--t-max", rc.t_max, "largest grid time");
        sub->add_option("--t-count", rc.t_count, "grid size")->check(CLI::Range(2, 10000));
        sub->add_option("--n-steps", rc.n_steps, "path grid steps")->check(CLI::Range(1, 1 << 20));
        sub->add_option("--quadrature-nodes", rc.quadrature_nodes, "Gauss-Legendre nodes in Delta")
            ->check(CLI::Range(1, 512));
        sub->add_option("--route", rc.route, "anchored or padded")->check(CLI::IsMember({"anchored", "padded"}));
        sub->add_option("--padding", rc.padding, "padding for the padded route (default 4 t^(1/alpha))");
    }
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    run_config rc;
    CLI::App app{"Heat content functionals of isotropic stable processes"};
    app.set_version_flag("--version", std::string("fracheat ") + version);
    app.require_subcommand(1, 1);

    auto* kernel_cmd = app.add_subcommand("kernel", "evaluate the transition density and constants");
    kernel_cmd->add_option("--alpha", rc.alpha, "stability index in (0, 2]");
    kernel_cmd->add_option("--d", rc.d, "dimension")->check(CLI::Range(2, 64));
    kernel_cmd->add_option("--t", rc.t, "time (default 1)");
    kernel_cmd->add_option("--r-grid", rc.r_grid, "min:max:count:log radii");
    kernel_cmd->add_option("--profile-out", rc.profile_out, "write the cached radial profile CSV");
    kernel_cmd->add_option("-o,--output", rc.output, "output CSV path (default stdout)");

    auto* perimeter_cmd = app.add_subcommand("perimeter", "alpha-perimeter by Monte Carlo and quadrature");
    add_common(perimeter_cmd, rc, false);
    perimeter_cmd->add_option("--method", rc.method, "mc, quadrature or both");

    auto* heat_cmd = app.add_subcommand("heat-content", "heat content H and its deficit");
    add_common(heat_cmd, rc, true);
    auto* shc_cmd = app.add_subcommand("shc", "spectral heat content Q at two grid resolutions");
    add_common(shc_cmd, rc, true);
    shc_cmd->add_option("--dump-skeletons", rc.dump_skeletons, "debug: write sample path skeletons to this CSV");
    shc_cmd->add_option("--dump-count", rc.dump_count, "number of dumped skeletons")->check(CLI::Range(1, 100000));
    auto* psi_cmd = app.add_subcommand("psi", "Schroedinger heat content by the direct and decomposed routes");
    add_common(psi_cmd, rc, true);
    psi_cmd->add_option("--method", rc.method, "direct, decomposed or both");
    auto* moments_cmd = app.add_subcommand("moments", "occupation time moments T^(k)");
    add_common(moments_cmd, rc, true);
    moments_cmd->add_option("--k", rc.k, "moment order 1, 2 or 3 (default all)");
    auto* verify_cmd = app.add_subcommand("verify", "fit a small-time limit and audit its inequality");
    add_common(verify_cmd, rc, true);
    verify_cmd->add_option("--theorem", rc.theorem, "hc-a, hc-b, hc-c, main-i, main-ii or main-iii")->required();
    verify_cmd->add_option("--tolerance", rc.tolerance, "relative tolerance on the fitted limit");
    verify_cmd->add_option("--summary-output", rc.summary_output, "summary CSV path (default appended to output)");
    auto* audit_cmd = app.add_subcommand("audit", "check every inequality on a t grid");
    add_common(audit_cmd, rc, true);
    audit_cmd->add_option("--summary-output", rc.summary_output, "summary CSV path (default appended to output)");
    audit_cmd->add_option("--inject-heat-shift", rc.inject_heat_shift, "self-test: shift H upward by k |Omega| sigma")
        ->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        rc.subcommand = app.get_subcommands().front()->get_name();
        rc.seed = resolve_seed(rc);
        if (rc.subcommand == "kernel")
            return cmd_kernel(rc, out, err);

        const shape s = parse_shape(rc.shape_spec);
        rc.shape_spec = s.spec();
        rc.d = s.dim();
        if (rc.subcommand == "perimeter")
            return cmd_perimeter(rc, s, out, err);
        if (rc.subcommand == "verify")
            return cmd_verify(rc, s, out, err);
        if (rc.subcommand == "audit")
            return cmd_audit(rc, s, out, err);

        const t_grid grid = resolve_grid(rc, rc.alpha < 1.0 ? 1e-3 : 1e-4);
        if (rc.subcommand == "heat-content")
            return cmd_heat(rc, s, grid, out, err);
        if (rc.subcommand == "shc")
            return cmd_shc(rc, s, grid, out, err);
        if (rc.subcommand == "psi")
            return cmd_psi(rc, s, grid, out, err);
        if (rc.subcommand == "moments")
            return cmd_moments(rc, s, grid, out, err);
        throw usage_error("unknown subcommand");
    } catch (const hypothesis_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace fracheat
