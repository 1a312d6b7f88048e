#pragma once

#include <chrono>
#include <functional>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "fracheat/asymptotics.hpp"
#include "fracheat/mc.hpp"
#include "fracheat/parallel.hpp"

namespace fracheat {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    nlohmann::json detail;
};

struct AcceptanceOptions {
    double alpha = 0.5;            // default-config alpha for criteria 3-9, 11
    std::uint64_t seed = 20240817; // pre-registered Monte Carlo seed
    int threads = 2;
    std::vector<int> only;         // empty = all criteria
};

namespace detail {

inline bool wanted(const AcceptanceOptions& opt, int id) {
    return opt.only.empty() ||
           std::find(opt.only.begin(), opt.only.end(), id) != opt.only.end();
}

// |x| out to which p(x,t) stays above the 1e-280 sweep floor, from the
// large-deviation rate (plus slack for prefactors and finite t).
inline double sweep_extent(const Cumulant& L, const FracParams& fp, double t) {
    double target = 660.0 / t;
    double lo = 0.05, hi = 0.98 * L.max_drift()[0];
    if (big_f(L, fp, {hi, 0, 0}).F < target) return hi * 1.15;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        if (big_f(L, fp, {mid, 0, 0}).F < target) lo = mid; else hi = mid;
    }
    return hi * 1.15 + 2.0;
}

// Independent F(v) by plain nested grid minimization of F_v(eta).
inline double big_f_direct(const Cumulant& L, const FracParams& fp, const Vec3& v) {
    double vmax = 0.0;
    for (int i = 0; i < L.dim(); ++i) vmax = std::max(vmax, std::abs(v[i]) / L.max_drift()[i]);
    double lo = vmax * (1.0 + 1e-6), hi = std::max(8.0, 6.0 * norm(L.dim(), v));
    auto F = [&](double eta) {
        Vec3 w{};
        for (int i = 0; i < L.dim(); ++i) w[i] = v[i] / eta;
        return fp.c2() * std::pow(eta, 1.0 / (1.0 - fp.alpha)) + phi(L, w) * eta;
    };
    double best_eta = lo, best = pos_inf;
    for (int round = 0; round < 4; ++round) {
        int n = 160;
        double b_lo = lo, b_hi = hi;
        for (int i = 0; i <= n; ++i) {
            double eta = b_lo + (b_hi - b_lo) * i / n;
            double f = F(eta);
            if (f < best) {
                best = f;
                best_eta = eta;
            }
        }
        double w = (b_hi - b_lo) / n;
        lo = std::max(vmax * (1.0 + 1e-6), best_eta - 2.0 * w);
        hi = best_eta + 2.0 * w;
    }
    return best;
}

using Timer = std::chrono::steady_clock;

inline double elapsed(Timer::time_point from) {
    return std::chrono::duration<double>(Timer::now() - from).count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The acceptance suite.  One evaluator per alpha is shared across criteria,
// windows sized once from the deepest sweep that alpha will see.
// ---------------------------------------------------------------------------

class AcceptanceSuite {
public:
    explicit AcceptanceSuite(AcceptanceOptions opt = {}) : opt_(opt) {
        spec_ = KernelSpec{};  // desk-scale default: d=1, p=2, b=1, R=8, h=1/16
        kernel_ = std::make_shared<const DensityGrid>(build_kernel(spec_));
        sigma_ = covariance(*kernel_).sigma;
    }

    const KernelSpec& spec() const { return spec_; }

    std::vector<CriterionResult> run(std::ostream* progress = nullptr) {
        std::vector<CriterionResult> out;
        auto add = [&](CriterionResult r) {
            if (progress)
                (*progress) << "[criterion " << r.id << "] "
                            << (r.pass ? "PASS" : "FAIL") << "  " << r.name << "  ("
                            << r.seconds << " s)\n"
                            << std::flush;
            out.push_back(std::move(r));
        };
        if (detail::wanted(opt_, 1)) add(criterion1());
        if (detail::wanted(opt_, 2)) add(criterion2());
        if (detail::wanted(opt_, 3)) add(criterion3());
        if (detail::wanted(opt_, 4)) add(criterion4());
        if (detail::wanted(opt_, 5)) add(criterion5());
        if (detail::wanted(opt_, 6)) add(criterion6());
        if (detail::wanted(opt_, 7)) add(criterion7());
        if (detail::wanted(opt_, 8)) add(criterion8());
        if (detail::wanted(opt_, 9)) add(criterion9());
        if (detail::wanted(opt_, 10)) add(criterion10());
        if (detail::wanted(opt_, 11)) add(criterion11());
        if (detail::wanted(opt_, 12)) add(criterion12());
        return out;
    }

    // ---- criterion 1: representation equivalence -------------------------
    CriterionResult criterion1() {
        auto t0 = detail::Timer::now();
        CriterionResult r{1, "representation equivalence |p_quad - p_ml|/p <= 1e-5", false, 0, {}};
        double worst = 0.0;
        long points = 0;
        nlohmann::json per_alpha = nlohmann::json::array();
        for (double alpha : {0.3, 0.5, 0.7}) {
            auto& ev = evaluator(alpha);
            std::vector<double> ts = {1.0, 10.0, 100.0};
            auto sols = ev.p_ml_grids(ts);
            // union of x with p > 1e-280 across the three t
            std::vector<Idx3> probes;
            const DensityGrid& g100 = sols[2].regular;
            for (size_t i = 0; i < g100.size(); ++i) {
                bool keep = false;
                for (auto& sol : sols)
                    if (sol.regular.values()[i] > 1e-280) keep = true;
                if (keep) probes.push_back(g100.unindex(i));
            }
            ev.prepare_points(probes, 100.0);
            double alpha_worst = 0.0;
            long alpha_points = 0;
            for (size_t it = 0; it < ts.size(); ++it) {
                double t = ts[it];
                ev.prepare_t(t);
                std::vector<Idx3> live;
                for (const Idx3& x : probes)
                    if (sols[it].regular.at(x) > 1e-280) live.push_back(x);
                std::vector<double> rel(live.size(), 0.0);
                parallel_for(live.size(), opt_.threads, [&](size_t i) {
                    double ps = ev.p_ml_series(live[i], t);
                    if (ps <= 1e-280) {
                        rel[i] = 0.0;
                        return;
                    }
                    double pq = ev.p_quadrature(live[i], t);
                    rel[i] = std::abs(pq / ps - 1.0);
                });
                for (double v : rel) alpha_worst = std::max(alpha_worst, v);
                alpha_points += static_cast<long>(live.size());
            }
            per_alpha.push_back({{"alpha", alpha},
                                 {"points", alpha_points},
                                 {"max_rel_diff", alpha_worst}});
            worst = std::max(worst, alpha_worst);
            points += alpha_points;
        }
        r.detail["per_alpha"] = per_alpha;
        r.detail["max_rel_diff"] = worst;
        r.detail["points"] = points;
        r.detail["budget_seconds"] = 300.0;
        r.pass = worst <= 1e-5 && points > 0;
        r.seconds = detail::elapsed(t0);
        r.detail["within_budget"] = r.seconds <= 300.0;
        return r;
    }

    // ---- criterion 2: special-function identities ------------------------
    CriterionResult criterion2() {
        auto t0 = detail::Timer::now();
        CriterionResult r{2, "special-function identities", false, 0, {}};
        bool ok = true;
        nlohmann::json rows = nlohmann::json::array();
        for (double alpha : {0.3, 0.5, 0.7}) {
            StableDensity g(alpha);
            WrightDensity w(alpha);
            // int g = 1: adaptive on [0, X] plus the heavy tail via the exact
            // substitution s = X u^{-1/alpha} that flattens the integrand
            double X = std::max(8.0, 2.0 * g.switchover());
            QuadOptions qo;
            qo.rel_tol = 1e-11;
            qo.breakpoints = {1e-4, 0.01, 0.05, 0.1, 0.3, 0.5, 1.0, 2.0, 4.0};
            auto head = integrate([&](double s) { return s > 0 ? g.value(s) : 0.0; }, 0.0, X, qo);
            auto tail = integrate(
                [&](double u) {
                    if (u <= 0.0) return 0.0;
                    double s = X * std::pow(u, -1.0 / alpha);
                    return g.value(s) * X / alpha * std::pow(u, -1.0 / alpha - 1.0);
                },
                0.0, 1.0, qo);
            double int_g = head.value + tail.value;
            // int W = 1 on [0, s_cap]; the remainder is ~ e^{-760}
            double s_cap = 1.0;
            while (w.log_value(s_cap) > -760.0 && s_cap < 1e9) s_cap *= 1.3;
            QuadOptions qw;
            qw.rel_tol = 1e-11;
            for (double b = 0.125; b < s_cap; b *= 2.0) qw.breakpoints.push_back(b);
            auto int_w = integrate([&](double s) { return s >= 0 ? w.value(s) : 0.0; }, 0.0,
                                   s_cap, qw);
            double w0_err = std::abs(w.value(0.0) - rec_gamma(1.0 - alpha));
            // M-Wright series vs transform on the overlap
            double branch = 0.0;
            for (double s : {0.5, 1.0, 2.0}) {
                if (s > w.series_switchover()) continue;
                branch = std::max(branch, std::abs(w.series_value(s) / w.transform_value(s) - 1.0));
            }
            bool row_ok = std::abs(int_g - 1.0) <= 1e-8 && std::abs(int_w.value - 1.0) <= 1e-8 &&
                          w0_err <= 1e-8 && branch <= 1e-8;
            rows.push_back({{"alpha", alpha},
                            {"int_g_minus_1", int_g - 1.0},
                            {"int_W_minus_1", int_w.value - 1.0},
                            {"W0_abs_err", w0_err},
                            {"series_vs_transform", branch}});
            ok = ok && row_ok;
        }
        // alpha = 1/2 closed forms
        StableDensity gh(0.5);
        MittagLeffler eh(0.5);
        double g_closed = std::exp(-0.25) / (2.0 * std::sqrt(pi));
        double e_closed = std::exp(1.0) * std::erfc(1.0);
        double g_err = std::abs(gh.value(1.0) - g_closed);
        double e_err = std::abs(eh(-1.0) - e_closed);
        ok = ok && g_err <= 1e-7 && e_err <= 1e-7;
        r.detail["rows"] = rows;
        r.detail["g_half_closed_form_abs_err"] = g_err;
        r.detail["E_half_closed_form_abs_err"] = e_err;
        r.pass = ok;
        r.seconds = detail::elapsed(t0);
        r.detail["within_budget"] = r.seconds <= 60.0;
        return r;
    }

    // ---- criterion 3: mass/atom identity ----------------------------------
    CriterionResult criterion3() {
        auto t0 = detail::Timer::now();
        CriterionResult r{3, "atom + regular mass = 1 within 1e-6", false, 0, {}};
        auto& ev = evaluator(opt_.alpha);
        std::vector<double> ts = {0.1, 1.0, 10.0, 100.0};
        auto sols = ev.p_ml_grids(ts);
        double worst = 0.0;
        nlohmann::json rows = nlohmann::json::array();
        for (auto& sol : sols) {
            double gap = std::abs(sol.atom + sol.regular.measured_mass() - 1.0);
            rows.push_back({{"t", sol.t}, {"atom", sol.atom}, {"gap", gap}});
            worst = std::max(worst, gap);
        }
        r.detail["rows"] = rows;
        r.detail["max_gap"] = worst;
        r.pass = worst <= 1e-6;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 4: alpha -> 1 degeneration -----------------------------
    CriterionResult criterion4() {
        auto t0 = detail::Timer::now();
        CriterionResult r{4, "alpha=0.99: p(.,5) within 3% of q(.,5)", false, 0, {}};
        auto& ev = evaluator(0.99);
        auto sol = ev.p_ml_grids({5.0})[0];
        DensityGrid q = ev.heat().q_grid(5.0);
        double qmax = 0.0;
        for (double v : q.values()) qmax = std::max(qmax, v);
        double worst = 0.0;
        for (size_t i = 0; i < q.size(); ++i)
            worst = std::max(worst,
                             std::abs(sol.regular.values()[i] - q.values()[i]) / qmax);
        r.detail["max_abs_diff_over_max_q"] = worst;
        r.pass = worst <= 0.03;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 5: bounded-x regime ------------------------------------
    CriterionResult criterion5() {
        auto t0 = detail::Timer::now();
        CriterionResult r{5, "bounded x: p(0,t) laws for d = 1,2,3", false, 0, {}};
        double alpha = opt_.alpha;
        auto& ev = evaluator(alpha);
        std::vector<double> ts = {1e2, 1e3, 1e4};
        for (double t : ts) ev.prepare_t(t);
        ev.prepare_points({Idx3{0, 0, 0}}, ts.back(), /*bulk=*/true);
        const std::vector<double>& c1 = ev.heat().center_column();

        // d-dimensional p(0,t) through the exact product structure of the
        // box-truncated Gaussian-shape kernel: a_d^{*k}(0) = (a_1^{*k}(0))^d
        auto p0 = [&](double t, int d) {
            const std::vector<double>& m = ev.ml_table(t);
            long K = std::min<long>(static_cast<long>(m.size()) - 1,
                                    static_cast<long>(c1.size()));
            KahanSum s;
            for (long k = 1; k <= K; ++k)
                s.add(m[static_cast<size_t>(k)] * std::pow(c1[static_cast<size_t>(k - 1)], d));
            return s.value();
        };

        std::vector<double> p1(ts.size());
        for (size_t i = 0; i < ts.size(); ++i) p1[i] = p0(ts[i], 1);
        double slope = loglog_slope(ts, p1);
        double slope_err = std::abs(slope - (-0.5 * alpha));

        auto band = [&](int d, bool with_log) {
            double lo = pos_inf, hi = 0.0;
            for (double t : ts) {
                double v = p0(t, d) * std::pow(t, alpha);
                if (with_log) v /= std::log(t);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            return hi / lo;
        };
        double band2 = band(2, true), band3 = band(3, false);

        r.detail["d1_slope"] = slope;
        r.detail["d1_slope_target"] = -0.5 * alpha;
        r.detail["d2_band_ratio"] = band2;
        r.detail["d3_band_ratio"] = band3;
        r.pass = slope_err <= 0.05 && band2 <= 3.0 && band3 <= 3.0;
        r.seconds = detail::elapsed(t0);
        r.detail["within_budget"] = r.seconds <= 600.0;
        return r;
    }

    // ---- criterion 6: normal deviations -----------------------------------
    CriterionResult criterion6() {
        auto t0 = detail::Timer::now();
        CriterionResult r{6, "normal deviations: t^{a/2} p(v t^{a/2}, t) vs int W Psi", false, 0, {}};
        double alpha = 0.5, t = 1e4;
        auto& ev = evaluator(alpha);
        double th = std::pow(t, 0.5 * alpha);
        std::vector<double> vs = {0.0, 0.5, 1.0};
        std::vector<Idx3> pts;
        for (double v : vs)
            pts.push_back({static_cast<int>(std::lround(v * th / spec_.h)), 0, 0});
        ev.prepare_t(t);
        ev.prepare_points(pts, t, /*bulk=*/true);
        nlohmann::json rows = nlohmann::json::array();
        double worst = 0.0;
        for (size_t i = 0; i < vs.size(); ++i) {
            double x_phys = pts[i][0] * spec_.h;
            Vec3 v_eff{x_phys / th, 0, 0};
            double lhs = th * ev.p_ml_series(pts[i], t);
            double rhs = normal_limit_constant(ev.wright(), v_eff, sigma_);
            double gap = std::abs(lhs / rhs - 1.0);
            rows.push_back({{"v", vs[i]}, {"computed", lhs}, {"limit", rhs}, {"rel_gap", gap}});
            worst = std::max(worst, gap);
        }
        r.detail["rows"] = rows;
        r.detail["max_rel_gap"] = worst;
        r.pass = worst <= 0.05;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 7: moderate deviations ---------------------------------
    CriterionResult criterion7() {
        auto t0 = detail::Timer::now();
        CriterionResult r{7, "moderate deviations: -log p / t^{2/3} -> K_v", false, 0, {}};
        double alpha = 0.5, beta = 0.75;
        auto& ev = evaluator(alpha);
        std::vector<double> ts = {1e2, 1e3, 1e4};
        nlohmann::json rows = nlohmann::json::array();
        std::vector<double> gaps, zs;
        for (double t : ts) {
            Idx3 x{static_cast<int>(std::lround(std::pow(t, beta) / spec_.h)), 0, 0};
            double v_eff = x[0] * spec_.h / std::pow(t, beta);
            double kv = k_v(alpha, sigma_, {v_eff, 0, 0});
            ev.prepare_log_point(x, t);
            double z = -ev.p_log_eval(x, t) / std::pow(t, moderate_exponent(alpha, beta));
            double gap = std::abs(z / kv - 1.0);
            rows.push_back({{"t", t}, {"x", x[0] * spec_.h}, {"Z", z}, {"K_v", kv}, {"rel_gap", gap}});
            gaps.push_back(gap);
            zs.push_back(z / kv);
        }
        // "monotone toward": either the gap shrinks, or the normalized
        // sequence heads monotonically to the constant (the o(1) mix can
        // cross zero at desk scale, making |gap| dip and recover)
        bool gap_monotone = true, seq_monotone = true;
        for (size_t i = 1; i < gaps.size(); ++i) {
            if (gaps[i] > gaps[i - 1] + 1e-12) gap_monotone = false;
            if ((zs[i] - zs[i - 1]) * (zs[1] - zs[0]) < 0.0) seq_monotone = false;
        }
        r.detail["rows"] = rows;
        r.detail["gap_monotone"] = gap_monotone;
        r.detail["sequence_monotone"] = seq_monotone;
        r.detail["final_gap"] = gaps.back();
        r.pass = (gap_monotone || seq_monotone) && gaps.back() <= 0.15;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 8: large deviations -------------------------------------
    CriterionResult criterion8() {
        auto t0 = detail::Timer::now();
        CriterionResult r{8, "large deviations: -log p / t -> F(v)", false, 0, {}};
        double alpha = 0.5, v = 0.5;
        auto& ev = evaluator(alpha);
        FracParams fp(alpha);
        auto big = big_f(ev.cumulant(), fp, {v, 0, 0});
        double f_direct = detail::big_f_direct(ev.cumulant(), fp, {v, 0, 0});
        std::vector<double> ts = {50.0, 100.0, 150.0};
        nlohmann::json rows = nlohmann::json::array();
        std::vector<double> gaps, zs;
        for (double t : ts) {
            Idx3 x{static_cast<int>(std::lround(v * t / spec_.h)), 0, 0};
            ev.prepare_log_point(x, t);
            double z = -ev.p_log_eval(x, t) / t;
            double gap = std::abs(z / big.F - 1.0);
            rows.push_back({{"t", t}, {"Z", z}, {"F", big.F}, {"rel_gap", gap}});
            gaps.push_back(gap);
            zs.push_back(z / big.F);
        }
        bool gap_monotone = true, seq_monotone = true;
        for (size_t i = 1; i < gaps.size(); ++i) {
            if (gaps[i] > gaps[i - 1] + 1e-12) gap_monotone = false;
            if ((zs[i] - zs[i - 1]) * (zs[1] - zs[0]) < 0.0) seq_monotone = false;
        }
        double f_consistency = std::abs(big.F - f_direct);
        r.detail["rows"] = rows;
        r.detail["F_optimizer"] = big.F;
        r.detail["F_direct_min"] = f_direct;
        r.detail["F_consistency_abs"] = f_consistency;
        r.detail["gap_monotone"] = gap_monotone;
        r.detail["sequence_monotone"] = seq_monotone;
        r.detail["final_gap"] = gaps.back();
        r.pass = (gap_monotone || seq_monotone) && gaps.back() <= 0.10 && f_consistency <= 1e-6;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 9: extra-large deviations -------------------------------
    CriterionResult criterion9() {
        auto t0 = detail::Timer::now();
        CriterionResult r{9, "extra-large: log p <= -c |x| (log|x/t|)^{(p-1)/p}", false, 0, {}};
        double alpha = opt_.alpha, t = 20.0;
        auto& ev = evaluator(alpha);
        double pw = (spec_.p - 1.0) / spec_.p;
        nlohmann::json rows = nlohmann::json::array();
        std::vector<double> cs;
        for (double ratio : {5.0, 10.0, 20.0}) {
            double x_phys = ratio * t;
            Idx3 x{static_cast<int>(std::lround(x_phys / spec_.h)), 0, 0};
            ev.prepare_log_point(x, t);
            double lp = ev.p_log_eval(x, t);
            double c = -lp / (x_phys * std::pow(std::log(ratio), pw));
            rows.push_back({{"x_over_t", ratio}, {"log_p", lp}, {"c_plus", c}});
            cs.push_back(c);
        }
        double c_min = *std::min_element(cs.begin(), cs.end());
        double c_max = *std::max_element(cs.begin(), cs.end());
        r.detail["rows"] = rows;
        r.detail["c_min"] = c_min;
        r.detail["c_max"] = c_max;
        r.detail["stability"] = c_max / c_min - 1.0;
        r.pass = c_min > 0.0 && (c_max / c_min - 1.0) <= 0.30;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 10: rate-function numerics ------------------------------
    CriterionResult criterion10() {
        auto t0 = detail::Timer::now();
        CriterionResult r{10, "rate-function numerics", false, 0, {}};
        auto& ev = evaluator(opt_.alpha);
        const Cumulant& L = ev.cumulant();
        FracParams fp(opt_.alpha);

        double grad_worst = 0.0;
        for (double v : {0.1, 0.5, 1.0, 2.0, 3.5}) {
            double eps = 1e-4 * std::max(1.0, v);
            auto c = legendre(L, {v, 0, 0});
            double fd = (legendre(L, {v + eps, 0, 0}).I - legendre(L, {v - eps, 0, 0}).I) /
                        (2.0 * eps);
            grad_worst = std::max(grad_worst, std::abs(fd / c.gamma[0] - 1.0));
        }
        double hess_err = std::abs(L.full({0, 0, 0}).hess.at(0, 0) - sigma_.at(0, 0));

        RngStream rng(opt_.seed, 77);
        int fails = 0;
        for (int i = 0; i < 100; ++i) {
            double v1 = -5.0 + 10.0 * rng.uniform(i, 0);
            double v2 = -5.0 + 10.0 * rng.uniform(i, 1);
            double lhs = legendre(L, {0.5 * (v1 + v2), 0, 0}).I;
            double rhs = 0.5 * (legendre(L, {v1, 0, 0}).I + legendre(L, {v2, 0, 0}).I);
            if (lhs > rhs + 1e-10) ++fails;

            double w1 = (rng.uniform(i, 2) < 0.5 ? -1 : 1) * (0.2 + 3.0 * rng.uniform(i, 3));
            double w2 = (rng.uniform(i, 4) < 0.5 ? -1 : 1) * (0.2 + 3.0 * rng.uniform(i, 5));
            if (std::abs(w1 + w2) > 0.05) {
                double pl = phi(L, {0.5 * (w1 + w2), 0, 0});
                double pr = 0.5 * (phi(L, {w1, 0, 0}) + phi(L, {w2, 0, 0}));
                if (pl > pr + 1e-10) ++fails;
            }
            double v = 0.2 + 1.8 * rng.uniform(i, 6);
            double e_lo = v / 7.5;
            double e1 = e_lo + (8.0 - e_lo) * rng.uniform(i, 7);
            double e2 = e_lo + (8.0 - e_lo) * rng.uniform(i, 8);
            auto Fv = [&](double eta) {
                return fp.c2() * std::pow(eta, 1.0 / (1.0 - fp.alpha)) + phi(L, {v / eta, 0, 0}) * eta;
            };
            if (Fv(0.5 * (e1 + e2)) > 0.5 * (Fv(e1) + Fv(e2)) + 1e-10) ++fails;
        }

        r.detail["grad_I_vs_fd_max_rel"] = grad_worst;
        r.detail["hessian_L0_vs_sigma_abs"] = hess_err;
        r.detail["convexity_failures"] = fails;
        r.pass = grad_worst <= 1e-5 && hess_err <= 1e-8 && fails == 0;
        r.seconds = detail::elapsed(t0);
        return r;
    }

    // ---- criterion 11: Monte Carlo agreement -------------------------------
    CriterionResult criterion11() {
        auto t0 = detail::Timer::now();
        CriterionResult r{11, "Monte Carlo agreement at n = 1e6", false, 0, {}};
        double alpha = opt_.alpha;
        const std::size_t n = 1000000;
        auto& ev = evaluator(alpha);
        StableDensity g(alpha);
        bool ok = true;
        nlohmann::json detail;

        {  // one-sided stable law
            RngStream rng(opt_.seed, 1);
            auto xs = sample_stable(alpha, n, rng);
            auto emp = EmpiricalDensity::from_samples(xs, 0.05, 8.0, 32);
            double worst_z = 0.0;
            for (size_t b = 0; b < emp.counts.size(); ++b) {
                double pe = g.cdf(emp.edges[b + 1]) - g.cdf(emp.edges[b]);
                double z = std::abs(static_cast<double>(emp.counts[b]) / n - pe) /
                           std::sqrt(pe * (1.0 - pe) / n);
                worst_z = std::max(worst_z, z);
            }
            std::vector<double> sub(xs.begin(), xs.begin() + 100000);
            double ks = ks_distance(sub, [&](double x) { return g.cdf(x); });
            double mean = 0.0, m2 = 0.0;
            for (double x : xs) {
                double e = std::exp(-x);
                mean += e;
                m2 += e * e;
            }
            mean /= n;
            double sd = std::sqrt((m2 / n - mean * mean) / n);
            double lap_z = std::abs(mean - std::exp(-1.0)) / sd;
            detail["stable"] = {{"worst_bin_z", worst_z},
                                {"ks", ks},
                                {"ks_critical", ks_critical_1pct(100000)},
                                {"laplace_z", lap_z}};
            ok = ok && worst_z <= 3.0 && ks <= ks_critical_1pct(100000) && lap_z <= 3.0;
        }

        {  // inverse subordinator at t = 1
            RngStream rng(opt_.seed, 2);
            auto vs = sample_inverse_subordinator(alpha, 1.0, n, rng);
            auto emp = EmpiricalDensity::from_samples(vs, 0.01, 2.8, 30);
            auto cdf_v = [&](double rr) { return 1.0 - g.cdf(std::pow(rr, -1.0 / alpha)); };
            double worst_z = 0.0;
            for (size_t b = 0; b < emp.counts.size(); ++b) {
                double pe = cdf_v(emp.edges[b + 1]) - cdf_v(emp.edges[b]);
                double z = std::abs(static_cast<double>(emp.counts[b]) / n - pe) /
                           std::sqrt(pe * (1.0 - pe) / n);
                worst_z = std::max(worst_z, z);
            }
            double mean = 0.0, m2 = 0.0;
            for (double vv : vs) {
                double e = std::exp(-vv);
                mean += e;
                m2 += e * e;
            }
            mean /= n;
            double sd = std::sqrt((m2 / n - mean * mean) / n);
            double ml_z = std::abs(mean - ev.atom(1.0)) / sd;
            detail["inverse_subordinator"] = {{"worst_bin_z", worst_z}, {"laplace_z", ml_z}};
            ok = ok && worst_z <= 3.0 && ml_z <= 3.0;
        }

        {  // time-changed process at t in {1, 10}
            KernelSampler ks(kernel_);
            nlohmann::json rows = nlohmann::json::array();
            for (double t : {1.0, 10.0}) {
                RngStream rng(opt_.seed, t == 1.0 ? 3 : 4);
                auto sample = sample_timechanged(alpha, t, n, rng, ks, 1);
                double atom_hat = static_cast<double>(sample.atom_count) / n;
                double atom_true = ev.atom(t);
                double atom_z = std::abs(atom_hat - atom_true) /
                                std::sqrt(atom_true * (1.0 - atom_true) / n);
                auto sol = ev.p_ml_grids({t})[0];
                // lattice histogram: 8 steps (= h/2 units) per bin over +-6
                int steps_per_bin = 8;
                int half_bins = static_cast<int>(6.0 / spec_.h) / steps_per_bin;
                double worst_z = 0.0;
                int tested = 0;
                for (int b = -half_bins; b < half_bins; ++b) {
                    long lo = b * steps_per_bin, hi = lo + steps_per_bin;
                    double pe = 0.0;
                    for (long s = lo; s < hi; ++s)
                        pe += spec_.h * sol.regular.at({static_cast<int>(s), 0, 0});
                    if (pe * n < 100.0) continue;
                    std::size_t cnt = 0;
                    for (const Idx3& pos : sample.positions)
                        if (pos[0] >= lo && pos[0] < hi) ++cnt;
                    double z = std::abs(static_cast<double>(cnt) / n - pe) /
                               std::sqrt(pe * (1.0 - pe) / n);
                    worst_z = std::max(worst_z, z);
                    ++tested;
                }
                rows.push_back({{"t", t},
                                {"atom_z", atom_z},
                                {"worst_bin_z", worst_z},
                                {"bins_tested", tested}});
                ok = ok && atom_z <= 3.0 && worst_z <= 3.0;
            }
            detail["timechanged"] = rows;
        }

        r.detail = detail;
        r.pass = ok;
        r.seconds = detail::elapsed(t0);
        r.detail["within_budget"] = r.seconds <= 600.0;
        return r;
    }

    // ---- criterion 12: local limit theorem ---------------------------------
    CriterionResult criterion12() {
        auto t0 = detail::Timer::now();
        CriterionResult r{12, "local limit: sup |k^{1/2} a^{*k}(sqrt k v) - Psi(v,1)|", false, 0, {}};
        std::vector<long> ks = {16, 64, 256};
        Idx3 half = recommended_window_half(*kernel_, ks.back());
        PowerScan scan(*kernel_, half);
        std::map<long, DensityGrid> grids;
        scan.run(ks.back(), [&](const PowerScan::View& view) {
            if (std::find(ks.begin(), ks.end(), view.k) != ks.end())
                grids.emplace(view.k, view.extract());
        });
        nlohmann::json rows = nlohmann::json::array();
        double prev = pos_inf, max_sup = 0.0;
        bool decreasing = true;
        double final_sup = 0.0;
        for (long k : ks) {
            const DensityGrid& gk = grids.at(k);
            double sk = std::sqrt(static_cast<double>(k));
            double sup = 0.0;
            gk.for_each([&](const Idx3& xi, double v) {
                Vec3 vv{xi[0] * spec_.h / sk, 0, 0};
                sup = std::max(sup, std::abs(sk * v - psi_profile(vv, 1.0, sigma_)));
            });
            rows.push_back({{"k", k}, {"sup_diff", sup}});
            if (sup >= prev) decreasing = false;
            prev = sup;
            max_sup = std::max(max_sup, sup);
            final_sup = sup;
        }
        r.detail["rows"] = rows;
        r.detail["decreasing"] = decreasing;
        r.detail["final_sup"] = final_sup;
        // The Gaussian-shape kernel's powers are lattice Gaussians up to
        // super-exponentially small corrections, so the sampled sups can sit
        // at rounding noise for every k; the trend is then vacuously met.
        double noise_floor = 1e-12;
        bool trend_ok = decreasing || max_sup <= noise_floor;
        r.detail["at_noise_floor"] = max_sup <= noise_floor;
        r.pass = trend_ok && final_sup < 0.01;
        r.seconds = detail::elapsed(t0);
        return r;
    }

private:
    FracKernelEvaluator& evaluator(double alpha) {
        auto it = evals_.find(alpha);
        if (it != evals_.end()) return *it->second;
        FracParams fp(alpha);
        FracKernelEvaluator::Options opt;
        auto probe = std::make_shared<FracKernelEvaluator>(kernel_, alpha, Idx3{64, 0, 0}, opt);
        // window: the deep sweep extent at the largest linear t plus the
        // spread of the longest table this alpha will scan
        double t_lin = 100.0;
        double x_deep = detail::sweep_extent(probe->cumulant(), fp, t_lin);
        long k_max = probe->k_quadrature(t_lin);
        if (alpha == opt_.alpha) {
            // shared default evaluator also serves the bulk t = 1e4 criteria
            k_max = std::max(k_max, probe->k_bulk(1e4));
        }
        Idx3 half = recommended_window_half(*kernel_, k_max, {x_deep, 0, 0});
        auto ev = std::make_shared<FracKernelEvaluator>(kernel_, alpha, half, opt);
        evals_[alpha] = ev;
        return *ev;
    }

    AcceptanceOptions opt_;
    KernelSpec spec_;
    std::shared_ptr<const DensityGrid> kernel_;
    SymMat sigma_;
    std::map<double, std::shared_ptr<FracKernelEvaluator>> evals_;
};

inline nlohmann::json acceptance_report_json(const std::vector<CriterionResult>& rs) {
    nlohmann::json j;
    j["criteria"] = nlohmann::json::array();
    bool all = true;
    double total = 0.0;
    for (const auto& r : rs) {
        j["criteria"].push_back({{"id", r.id},
                                 {"name", r.name},
                                 {"pass", r.pass},
                                 {"seconds", r.seconds},
                                 {"detail", r.detail}});
        all = all && r.pass;
        total += r.seconds;
    }
    j["all_pass"] = all;
    j["total_seconds"] = total;
    return j;
}

}  // namespace fracheat
