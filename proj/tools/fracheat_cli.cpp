// fracheat command-line front end: special-function tables, heat-kernel and
// fractional-kernel evaluation, rate functions, regime reports, Monte Carlo
// sampling, and the acceptance sweep.
//
// Exit codes: 0 success, 1 computation error, 2 validation/usage error.
// Errors go to stderr as one JSON object per failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fracheat/io.hpp"
#include "fracheat/mc.hpp"
#include "fracheat/run_config.hpp"
#include "fracheat/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracheat;

namespace {

struct Cli {
    RunConfig cfg;
    std::string config_path;
    std::string out_dir_flag;

    void resolve() {
        if (!config_path.empty()) {
            RunConfig file_cfg = load_config(config_path);
            // flags given on the command line were already applied to cfg;
            // start from the file and keep explicit overrides
            file_cfg.alpha = cfg.alpha;
            file_cfg.seed = cfg.seed;
            file_cfg.threads = cfg.threads;
            cfg = file_cfg;
        }
        if (!out_dir_flag.empty()) {
            cfg.out_dir = out_dir_flag;
        } else if (const char* env = std::getenv("FRACHEAT_OUT_DIR")) {
            cfg.out_dir = env;
        }
        cfg.validate();
        fs::create_directories(cfg.out_dir);
    }

    std::string path(const std::string& name) const {
        return (fs::path(cfg.out_dir) / name).string();
    }

    void emit_config(const std::string& stem) const {
        write_resolved_config(cfg, path(stem + ".config.json"));
    }

    void emit_schema(const std::string& stem, const json& columns) const {
        json j;
        j["file"] = stem + ".csv";
        j["columns"] = columns;
        std::ofstream out(path(stem + ".schema.json"));
        out << j.dump(2) << "\n";
    }
};

std::shared_ptr<const DensityGrid> build(const Cli& cli) {
    return std::make_shared<const DensityGrid>(build_kernel(cli.cfg.kernel));
}

Idx3 point_from(double x_phys, const KernelSpec& spec) {
    return {static_cast<int>(std::lround(x_phys / spec.h)), 0, 0};
}

// ---- special ---------------------------------------------------------------

int cmd_special(Cli& cli, const std::string& function, double from, double to, int points,
                double t_param, const std::string& out_stem) {
    cli.emit_config(out_stem);
    std::ofstream csv(cli.path(out_stem + ".csv"));
    csv.precision(16);
    csv << "s,value,branch,est_error\n";
    double alpha = cli.cfg.alpha;
    SeriesPolicy pol;
    if (function == "stable") {
        StableDensity g(alpha, pol);
        for (int i = 0; i < points; ++i) {
            double s = from + (to - from) * i / std::max(points - 1, 1);
            if (s <= 0) continue;
            double err = 0.0;
            if (std::string(g.branch_used(s)) == "series") g.series_value(s, &err);
            csv << s << "," << g.value(s) << "," << g.branch_used(s) << "," << err << "\n";
        }
    } else if (function == "wright") {
        WrightDensity w(alpha, pol);
        for (int i = 0; i < points; ++i) {
            double s = from + (to - from) * i / std::max(points - 1, 1);
            if (s < 0) continue;
            double err = 0.0;
            if (std::string(w.branch_used(s)) == "series") w.series_value(s, &err);
            csv << s << "," << w.value(s) << "," << w.branch_used(s) << "," << err << "\n";
        }
    } else if (function == "ml") {
        MittagLeffler e(alpha, pol);
        for (int i = 0; i < points; ++i) {
            double z = from + (to - from) * i / std::max(points - 1, 1);
            if (z > 0) continue;
            csv << z << "," << e(z) << "," << e.branch_used(z) << "," << 0.0 << "\n";
        }
    } else if (function == "inverse-subordinator") {
        WrightDensity w(alpha, pol);
        for (int i = 0; i < points; ++i) {
            double rr = from + (to - from) * i / std::max(points - 1, 1);
            if (rr <= 0) continue;
            csv << rr << "," << inverse_subordinator_density(w, t_param, rr) << ",transform,0\n";
        }
    } else {
        fail_validation("unknown-function", "special: unknown function " + function);
    }
    cli.emit_schema(out_stem, json::array({
        {{"name", "s"}, {"doc", "argument of the function"}},
        {{"name", "value"}, {"doc", "function value"}},
        {{"name", "branch"}, {"doc", "evaluation branch used"}},
        {{"name", "est_error"}, {"doc", "internal error estimate where available"}}}));
    return 0;
}

// ---- q-eval ----------------------------------------------------------------

int cmd_q_eval(Cli& cli, double t, double x_phys, bool grid, bool log_domain, double tolerance,
               const std::string& out_stem) {
    cli.emit_config(out_stem);
    auto kernel = build(cli);
    HeatKernelEvaluator::Options opt;
    opt.window.tail_tol = tolerance;
    KWindow w = poisson_window(t, opt.window);
    Idx3 half = recommended_window_half(*kernel, w.hi, {std::abs(x_phys) + 1.0, 0, 0});
    auto cumulant = std::make_shared<const Cumulant>(kernel);
    HeatKernelEvaluator ev(kernel, half, opt, cumulant);
    json result;
    result["t"] = t;
    if (grid) {
        DensityGrid q = ev.q_grid(t);
        write_grid_csv(q, cli.path(out_stem + ".csv"));
        write_grid_binary(q, cli.path(out_stem + ".grid"));
        write_grid_sidecar(q, cli.path(out_stem + ".grid.json"));
        result["mass"] = q.measured_mass();
        cli.emit_schema(out_stem, json::array({
            {{"name", "x"}, {"doc", "lattice point"}},
            {{"name", "value"}, {"doc", "q(x,t)"}}}));
    } else {
        Idx3 x = point_from(x_phys, cli.cfg.kernel);
        if (log_domain) {
            ev.prepare_log_probe(x, 1, w.hi);
            result["log_q"] = ev.q_log_eval(x, t);
        } else {
            auto q = ev.q_eval_detailed(x, t);
            result["q"] = q.value;
            result["remainder_bound"] = q.remainder_bound;
            result["window"] = {{"lo", q.window.lo}, {"hi", q.window.hi}};
        }
        result["x"] = x[0] * cli.cfg.kernel.h;
    }
    std::ofstream(cli.path(out_stem + ".json")) << result.dump(2) << "\n";
    std::cout << result.dump(2) << "\n";
    return 0;
}

// ---- p-eval ----------------------------------------------------------------

int cmd_p_eval(Cli& cli, double t, double x_phys, bool grid, const std::string& method,
               const std::string& out_stem) {
    cli.emit_config(out_stem);
    auto kernel = build(cli);
    double alpha = cli.cfg.alpha;
    FracKernelEvaluator::Options opt;
    auto probe = std::make_shared<FracKernelEvaluator>(kernel, alpha, Idx3{64, 0, 0}, opt);
    long K = probe->k_quadrature(t);
    Idx3 half = recommended_window_half(*kernel, K, {std::abs(x_phys) + 1.0, 0, 0});
    FracKernelEvaluator ev(kernel, alpha, half, opt);
    json result;
    result["t"] = t;
    result["alpha"] = alpha;
    if (grid) {
        auto sol = ev.p_ml_grids({t})[0];
        write_grid_csv(sol.regular, cli.path(out_stem + ".csv"));
        write_grid_binary(sol.regular, cli.path(out_stem + ".grid"));
        write_grid_sidecar(sol.regular, cli.path(out_stem + ".grid.json"));
        result["atom"] = sol.atom;
        result["regular_mass"] = sol.regular.measured_mass();
        cli.emit_schema(out_stem, json::array({
            {{"name", "x"}, {"doc", "lattice point"}},
            {{"name", "value"}, {"doc", "p(x,t), regular part"}}}));
    } else {
        Idx3 x = point_from(x_phys, cli.cfg.kernel);
        result["x"] = x[0] * cli.cfg.kernel.h;
        if (method == "series" || method == "both") {
            ev.prepare_t(t);
            ev.prepare_points({x}, t);
            result["p_series"] = ev.p_ml_series(x, t);
        }
        if (method == "quadrature" || method == "both") {
            ev.prepare_t(t);
            ev.prepare_points({x}, t);
            auto q = ev.p_quadrature_detailed(x, t);
            result["p_quadrature"] = q.value;
            result["quadrature_error"] = q.est_error;
        }
        if (method == "both") {
            double a = result["p_series"], b = result["p_quadrature"];
            result["discrepancy"] = std::abs(a - b) / std::max(std::abs(a), 1e-300);
        }
        if (method == "log") {
            ev.prepare_log_point(x, t);
            result["log_p"] = ev.p_log_eval(x, t);
        }
        result["atom"] = ev.atom(t);
    }
    std::ofstream(cli.path(out_stem + ".json")) << result.dump(2) << "\n";
    std::cout << result.dump(2) << "\n";
    return 0;
}

// ---- rate ------------------------------------------------------------------

int cmd_rate(Cli& cli, double v, double beta, const std::string& out_stem) {
    cli.emit_config(out_stem);
    auto kernel = build(cli);
    auto L = std::make_shared<const Cumulant>(kernel);
    FracParams fp(cli.cfg.alpha);
    SymMat sigma = covariance(*kernel).sigma;
    json result;
    result["alpha"] = cli.cfg.alpha;
    result["v"] = v;
    auto lr = legendre(*L, {v, 0, 0});
    result["I"] = lr.I;
    result["gamma_star"] = lr.gamma[0];
    if (v != 0.0) {
        result["xi"] = xi_v(*L, {v, 0, 0});
        result["Phi"] = phi(*L, {v, 0, 0});
        auto bf = big_f(*L, fp, {v, 0, 0});
        result["eta"] = bf.eta;
        result["bigF"] = bf.F;
        result["K_v"] = k_v(cli.cfg.alpha, sigma, {v, 0, 0});
        if (beta > 0.0) {
            result["beta"] = beta;
            result["moderate_exponent"] = moderate_exponent(cli.cfg.alpha, beta);
        }
    } else {
        result["Phi"] = 0.0;
    }
    std::ofstream(cli.path(out_stem + ".json")) << result.dump(2) << "\n";
    std::cout << result.dump(2) << "\n";
    return 0;
}

// ---- regimes ---------------------------------------------------------------

int cmd_regimes(Cli& cli, const std::string& regime, const std::vector<double>& t_list,
                const std::vector<double>& x_list, const std::string& out_stem) {
    cli.emit_config(out_stem);
    auto kernel = build(cli);
    double alpha = cli.cfg.alpha;
    FracKernelEvaluator::Options opt;
    auto probe = std::make_shared<FracKernelEvaluator>(kernel, alpha, Idx3{64, 0, 0}, opt);
    double t_max = *std::max_element(t_list.begin(), t_list.end());
    double x_max = 0.0;
    for (double x : x_list) x_max = std::max(x_max, std::abs(x));
    Idx3 half = recommended_window_half(*kernel, probe->k_bulk(t_max), {x_max + 1.0, 0, 0});
    FracKernelEvaluator ev(kernel, alpha, half, opt);
    auto cumulant = std::make_shared<const Cumulant>(kernel);
    auto wright = std::make_shared<const WrightDensity>(alpha);
    Predictor pred(cumulant, alpha, wright);

    json report;
    report["regime"] = regime;
    report["samples"] = json::array();
    for (double t : t_list) {
        for (double x_phys : x_list) {
            Idx3 x = point_from(x_phys, cli.cfg.kernel);
            Classification cl = classify(std::abs(x_phys), std::abs(x[0]), t, alpha,
                                         cli.cfg.thresholds);
            json row;
            row["t"] = t;
            row["x"] = x[0] * cli.cfg.kernel.h;
            row["classified"] = regime_name(cl.regime);
            double lp;
            std::string route;
            ev.prepare_t(t);
            ev.prepare_points({x}, t);
            double p = ev.p_ml_series(x, t);
            if (p > 1e-280) {
                lp = std::log(p);
                route = "series";
            } else {
                ev.prepare_log_point(x, t);
                lp = ev.p_log_eval(x, t);
                route = "log";
            }
            row["log_p"] = lp;
            row["route"] = route;
            switch (cl.regime) {
                case Regime::Bounded: row["prediction"] = pred.predict_bounded(1).form; break;
                case Regime::Subnormal:
                    row["prediction"] = pred.predict_subnormal(1, std::abs(x_phys), t).form;
                    break;
                case Regime::Normal: {
                    auto pr = pred.predict_normal({x_phys / std::pow(t, 0.5 * alpha), 0, 0});
                    row["prediction"] = pr.form;
                    row["limit_constant"] = pr.amplitude;
                    break;
                }
                case Regime::Moderate: {
                    auto pr = pred.predict_moderate({x_phys / std::pow(t, cl.beta), 0, 0}, cl.beta);
                    row["prediction"] = pr.form;
                    row["K_v"] = pr.rate;
                    row["t_exponent"] = pr.t_exponent;
                    break;
                }
                case Regime::Large: {
                    auto pr = pred.predict_large({x_phys / t, 0, 0});
                    row["prediction"] = pr.form;
                    row["F"] = pr.rate;
                    break;
                }
                case Regime::ExtraLarge: {
                    auto pr = pred.predict_extra_large(cli.cfg.kernel.p);
                    row["prediction"] = pr.form;
                    break;
                }
            }
            report["samples"].push_back(row);
        }
    }
    std::ofstream(cli.path(out_stem + ".json")) << report.dump(2) << "\n";
    std::cout << report.dump(2) << "\n";
    return 0;
}

// ---- mc --------------------------------------------------------------------

int cmd_mc(Cli& cli, double t, std::size_t n, const std::string& what, int bins,
           const std::string& out_stem) {
    cli.emit_config(out_stem);
    double alpha = cli.cfg.alpha;
    RngStream rng(cli.cfg.seed, 0);
    std::vector<double> xs;
    if (what == "stable") {
        xs = sample_stable(alpha, n, rng);
    } else if (what == "inverse") {
        xs = sample_inverse_subordinator(alpha, t, n, rng);
    } else if (what == "timechanged") {
        auto kernel = build(cli);
        KernelSampler ks(kernel);
        auto sample = sample_timechanged(alpha, t, n, rng, ks, cli.cfg.kernel.d);
        for (const Idx3& p : sample.positions) xs.push_back(p[0] * cli.cfg.kernel.h);
        json meta;
        meta["atom_count"] = sample.atom_count;
        meta["atom_frequency"] = static_cast<double>(sample.atom_count) / n;
        std::ofstream(cli.path(out_stem + ".json")) << meta.dump(2) << "\n";
    } else {
        fail_validation("unknown-sampler", "mc: unknown target " + what);
    }
    double lo = xs.empty() ? 0.0 : *std::min_element(xs.begin(), xs.end());
    double hi = xs.empty() ? 1.0 : *std::max_element(xs.begin(), xs.end());
    if (what != "timechanged") lo = std::max(lo, 0.0);
    auto emp = EmpiricalDensity::from_samples(xs, lo, hi * (1.0 + 1e-9), bins);
    std::ofstream csv(cli.path(out_stem + ".csv"));
    csv.precision(16);
    csv << "bin_center,height,stderr\n";
    for (size_t b = 0; b < emp.counts.size(); ++b)
        csv << 0.5 * (emp.edges[b] + emp.edges[b + 1]) << "," << emp.heights[b] << ","
            << emp.stderrs[b] << "\n";
    cli.emit_schema(out_stem, json::array({
        {{"name", "bin_center"}, {"doc", "midpoint of the histogram bin"}},
        {{"name", "height"}, {"doc", "empirical density estimate"}},
        {{"name", "stderr"}, {"doc", "standard error of the height"}}}));
    return 0;
}

// ---- verify ----------------------------------------------------------------

int cmd_verify(Cli& cli, const std::string& suite, const std::vector<int>& criteria,
               const std::string& out_stem) {
    if (suite != "primary")
        fail_validation("unknown-suite", "verify: only the primary suite exists");
    cli.emit_config(out_stem);
    AcceptanceOptions opt;
    opt.alpha = cli.cfg.alpha;
    opt.seed = cli.cfg.seed;
    opt.threads = cli.cfg.threads;
    opt.only = criteria;
    AcceptanceSuite acc(opt);
    auto results = acc.run(&std::cout);
    json report = acceptance_report_json(results);
    std::ofstream(cli.path(out_stem + ".json")) << report.dump(2) << "\n";
    bool all = report["all_pass"].get<bool>();
    std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED") << "\n";
    return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"time-fractional nonlocal heat kernel toolkit"};
    app.require_subcommand(1);

    Cli cli;
    app.add_option("--config", cli.config_path, "JSON config file");
    app.add_option("--out-dir", cli.out_dir_flag, "output directory (or FRACHEAT_OUT_DIR)");
    app.add_option("--alpha", cli.cfg.alpha, "Caputo order in (0,1)");
    app.add_option("--seed", cli.cfg.seed, "RNG seed");
    app.add_option("--threads", cli.cfg.threads, "worker thread cap");
    app.add_option("--h", cli.cfg.kernel.h, "lattice spacing");
    app.add_option("--kernel-p", cli.cfg.kernel.p, "kernel tail exponent p > 1");
    app.add_option("--kernel-b", cli.cfg.kernel.b, "kernel tail rate b > 0");
    app.add_option("--kernel-R", cli.cfg.kernel.R, "kernel cutoff radius");
    app.add_option("--d", cli.cfg.kernel.d, "spatial dimension (1-3)");

    // special
    auto* sp = app.add_subcommand("special", "emit special-function tables");
    std::string sp_fn = "wright";
    double sp_from = 0.0, sp_to = 4.0, sp_t = 1.0;
    int sp_points = 65;
    std::string sp_out = "special";
    sp->add_option("--function", sp_fn, "stable|wright|ml|inverse-subordinator");
    sp->add_option("--from", sp_from, "range start");
    sp->add_option("--to", sp_to, "range end");
    sp->add_option("--points", sp_points, "number of samples");
    sp->add_option("--t", sp_t, "t for the inverse-subordinator density");
    sp->add_option("--out", sp_out, "output stem");

    // q-eval
    auto* qe = app.add_subcommand("q-eval", "evaluate the classical heat kernel q(x,t)");
    double qe_t = 1.0, qe_x = 0.0, qe_tol = 1e-10;
    bool qe_grid = false, qe_log = false, qe_alpha_irrelevant = false;
    std::string qe_out = "q";
    qe->add_option("--t", qe_t, "time")->required();
    qe->add_option("--x", qe_x, "point (physical units)");
    qe->add_flag("--grid", qe_grid, "emit the full lattice slice");
    qe->add_flag("--log", qe_log, "log-domain evaluation");
    qe->add_flag("--alpha-irrelevant", qe_alpha_irrelevant,
                 "acknowledge q does not depend on alpha");
    qe->add_option("--tolerance", qe_tol, "Poisson window tail tolerance");
    qe->add_option("--out", qe_out, "output stem");

    // p-eval
    auto* pe = app.add_subcommand("p-eval", "evaluate the fractional kernel p(x,t)");
    double pe_t = 1.0, pe_x = 0.0;
    bool pe_grid = false;
    std::string pe_method = "series", pe_out = "p";
    pe->add_option("--t", pe_t, "time")->required();
    pe->add_option("--x", pe_x, "point (physical units)");
    pe->add_flag("--grid", pe_grid, "emit the full lattice slice");
    pe->add_option("--method", pe_method, "series|quadrature|both|log");
    pe->add_option("--out", pe_out, "output stem");

    // rate
    auto* ra = app.add_subcommand("rate", "rate-function machinery at v");
    double ra_v = 0.5, ra_beta = 0.0;
    std::string ra_out = "rate";
    ra->add_option("--v", ra_v, "velocity")->required();
    ra->add_option("--beta", ra_beta, "moderate-deviation exponent");
    ra->add_option("--out", ra_out, "output stem");

    // regimes
    auto* rg = app.add_subcommand("regimes", "classify and compare against regime predictions");
    std::string rg_regime = "auto", rg_out = "regimes";
    std::vector<double> rg_t, rg_x;
    rg->add_option("--regime", rg_regime, "regime tag (informational)");
    rg->add_option("--t-list", rg_t, "times")->required();
    rg->add_option("--x-list", rg_x, "points (physical units)")->required();
    rg->add_option("--out", rg_out, "output stem");

    // mc
    auto* mc = app.add_subcommand("mc", "Monte Carlo sampling");
    double mc_t = 1.0;
    std::size_t mc_n = 100000;
    int mc_bins = 40;
    std::string mc_what = "stable", mc_out = "mc";
    mc->add_option("--t", mc_t, "time");
    mc->add_option("--n", mc_n, "number of draws");
    mc->add_option("--what", mc_what, "stable|inverse|timechanged");
    mc->add_option("--bins", mc_bins, "histogram bins");
    mc->add_option("--out", mc_out, "output stem");

    // verify
    auto* vf = app.add_subcommand("verify", "run the acceptance sweep");
    std::string vf_suite = "primary", vf_out = "verify";
    std::vector<int> vf_criteria;
    vf->add_option("--suite", vf_suite, "suite name (primary)");
    vf->add_option("--criteria", vf_criteria, "subset of criterion ids (default: all)");
    vf->add_option("--out", vf_out, "output stem");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        cli.resolve();
        if (*sp) return cmd_special(cli, sp_fn, sp_from, sp_to, sp_points, sp_t, sp_out);
        if (*qe) return cmd_q_eval(cli, qe_t, qe_x, qe_grid, qe_log, qe_tol, qe_out);
        if (*pe) return cmd_p_eval(cli, pe_t, pe_x, pe_grid, pe_method, pe_out);
        if (*ra) return cmd_rate(cli, ra_v, ra_beta, ra_out);
        if (*rg) return cmd_regimes(cli, rg_regime, rg_t, rg_x, rg_out);
        if (*mc) return cmd_mc(cli, mc_t, mc_n, mc_what, mc_bins, mc_out);
        if (*vf) return cmd_verify(cli, vf_suite, vf_criteria, vf_out);
    } catch (const Error& e) {
        json err{{"error", e.code()}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return e.is_validation() ? 2 : 1;
    } catch (const std::exception& e) {
        json err{{"error", "internal"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    return 2;
}
