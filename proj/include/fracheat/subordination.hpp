#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "fracheat/heat_kernel.hpp"
#include "fracheat/ml_weights.hpp"

namespace fracheat {

// Full fundamental solution at one t: surviving atom at the origin plus the
// regular part on the lattice.
struct FracSolution {
    double alpha = 0.5;
    double t = 0.0;
    double atom = 1.0;      // E_alpha(-t^alpha)
    DensityGrid regular;    // p(., t)

    void check_mass_identity(double tol = 1e-7) const {
        if (!(atom > 0.0) || atom > 1.0) fail("mass-imbalance", "atom outside (0,1]");
        double m = regular.measured_mass();
        if (std::abs(atom + m - 1.0) > tol)
            fail("mass-imbalance", "atom + regular mass deviates from 1 by more than tolerance");
    }
};

// Regular part p(x,t) of the time-fractional kernel by two independent
// representations:
//   series      p = sum_k m_k(t) a^{*k}(x)          (shared work across x)
//   quadrature  p = int_0^inf W(s) q(x, t^alpha s) ds   (pointwise, validation
//                                                        and the only log route)
class FracKernelEvaluator {
public:
    struct Options {
        HeatKernelEvaluator::Options heat;
        SeriesPolicy special;
        double quad_rel_tol = 1e-8;
        double series_tail_tol = 1e-12;
        double log_integrand_cutoff = 60.0;  // nats below the peak kept in the plan
        double k_window_cutoff = 46.0;
    };

    FracKernelEvaluator(std::shared_ptr<const DensityGrid> kernel, double alpha,
                        const Idx3& window_half)
        : FracKernelEvaluator(std::move(kernel), alpha, window_half, Options{}) {}

    FracKernelEvaluator(std::shared_ptr<const DensityGrid> kernel, double alpha,
                        const Idx3& window_half, Options opt)
        : opt_(opt), alpha_(alpha), fp_(alpha), kernel_(kernel),
          cumulant_(std::make_shared<Cumulant>(kernel)),
          wright_(std::make_shared<const WrightDensity>(alpha, opt.special)),
          ml_(alpha, wright_, opt.special),
          weights_(wright_),
          heat_(kernel, window_half, opt.heat, cumulant_) {}

    double alpha() const { return alpha_; }
    const FracParams& params() const { return fp_; }
    const WrightDensity& wright() const { return *wright_; }
    const MittagLeffler& mittag_leffler() const { return ml_; }
    const MlWeights& ml_weights() const { return weights_; }
    const Cumulant& cumulant() const { return *cumulant_; }
    HeatKernelEvaluator& heat() { return heat_; }
    const HeatKernelEvaluator& heat() const { return heat_; }
    const DensityGrid& kernel() const { return *kernel_; }

    double atom(double t) const { return ml_(-std::pow(t, alpha_)); }

    // ---- sizing ----

    // s beyond which log W < -760: nothing representable survives past it.
    double s_linear_cap() const {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        return s_linear_cap_nolock();
    }

    // Series length: Mittag-Leffler weight tail below the truncation bound.
    long k_series(double t) const {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        return k_series_nolock(t);
    }

    // Table length for the deep-tail sweep: out where p ~ 1e-280 the dominant
    // power index sits well above t^alpha s, so leave saddle headroom.
    long k_quadrature(double t) const {
        double tau;
        {
            std::lock_guard<std::mutex> lock(cache_mutex_);
            tau = std::pow(t, alpha_) * s_linear_cap_nolock();
        }
        return std::max(k_series(t),
                        static_cast<long>(std::ceil(2.4 * tau + 12.0 * std::sqrt(tau + 1.0) + 30.0)));
    }

    // Table length for bulk points (|x| in the diffusive range).
    long k_bulk(double t) const {
        long K = k_series(t);
        return K + K / 8 + 16;
    }

    // ---- build phase ----

    // The m table runs out to the saddle headroom, not just the weight tail:
    // at tail x the powers a^{*k}(x) still grow past the plain series length,
    // and the products only die once the weights are utterly negligible.
    void prepare_t(double t) {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (ml_tables_.count(t)) return;
        double tau_cap = std::pow(t, alpha_) * s_linear_cap_nolock();
        long K = std::max(k_series_nolock(t),
                          static_cast<long>(std::ceil(2.4 * tau_cap + 12.0 * std::sqrt(tau_cap + 1.0)
                                                      + 30.0)));
        double ta = std::pow(t, alpha_);
        std::vector<double> m(static_cast<size_t>(K) + 1, 0.0);
        for (long k = 0; k <= K; ++k) {
            // skip the quadrature when even the best W value under the
            // Poisson bump cannot lift the weight above the linear floor
            if (k > 16) {
                double s0 = static_cast<double>(k) / ta;
                double s_in = std::max(s0 - 8.0 * std::sqrt(static_cast<double>(k)) / ta, 0.6 * s0);
                if (wright_->log_value(s_in) < -760.0) continue;
            }
            m[static_cast<size_t>(k)] = weights_.weight(k, t);
        }
        ml_tails_[t] = weights_.tail_bound(K, t);
        ml_tables_[t] = std::move(m);
    }

    double ml_tail(double t) const {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = ml_tails_.find(t);
        if (it == ml_tails_.end()) fail("not-prepared", "call prepare_t(t) first");
        return it->second;
    }

    // Deep-tail sweeps need the saddle headroom of k_quadrature; bulk points
    // get by with the series length (the truncation guard still watches).
    void prepare_points(const std::vector<Idx3>& pts, double t_max, bool bulk = false) {
        heat_.prepare_probes(pts, bulk ? k_bulk(t_max) : k_quadrature(t_max));
    }

    // ---- ML series route ----

    const std::vector<double>& ml_table(double t) const {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        auto it = ml_tables_.find(t);
        if (it == ml_tables_.end())
            fail("not-prepared", "call prepare_t(t) before series evaluation");
        return it->second;
    }

    // p(x,t) from the prepared probe table; guards its own truncation.
    double p_ml_series(const Idx3& x, double t) const {
        const std::vector<double>& m = ml_table(t);
        const LinearColumn col = column(x);
        long K = std::min<long>(static_cast<long>(m.size()) - 1, col.k_max);
        KahanSum sum;
        for (long k = 1; k <= K; ++k) sum.add(m[static_cast<size_t>(k)] * col.at(k));
        double p = sum.value();
        check_truncation(col, K, t, p);
        return p;
    }

    // Full grids for a list of t in a single stepwise scan.  Grid sums only
    // need the weight-tail length: the omitted k contribute at most the
    // 1e-12 weight tail to the total mass.
    std::vector<FracSolution> p_ml_grids(const std::vector<double>& ts) {
        for (double t : ts) prepare_t(t);
        long K = 1;
        std::vector<const std::vector<double>*> tables;
        for (double t : ts) {
            tables.push_back(&ml_table(t));
            K = std::max<long>(K, k_series(t));
        }
        std::vector<FracSolution> out(ts.size());
        std::vector<DensityGrid> acc;
        for (size_t i = 0; i < ts.size(); ++i)
            acc.emplace_back(kernel_->dim(), kernel_->spacing(), heat_.window_half());
        PowerScan scan(*kernel_, heat_.window_half());
        scan.discard_budget = opt_.heat.discard_budget;
        scan.run(K, [&](const PowerScan::View& view) {
            for (size_t i = 0; i < ts.size(); ++i) {
                const auto& m = *tables[i];
                if (view.k >= static_cast<long>(m.size())) continue;
                double w = m[static_cast<size_t>(view.k)];
                if (w <= 0.0) continue;
                double* dst = acc[i].values().data();
                view.for_each([&](const Idx3& xi, double v) {
                    dst[acc[i].index(xi)] += w * v;
                });
            }
        });
        for (size_t i = 0; i < ts.size(); ++i) {
            out[i].alpha = alpha_;
            out[i].t = ts[i];
            out[i].atom = atom(ts[i]);
            acc[i].set_mass(acc[i].measured_mass());
            out[i].regular = std::move(acc[i]);
        }
        return out;
    }

    FracSolution assemble_solution(double t) {
        FracSolution sol = p_ml_grids({t})[0];
        sol.check_mass_identity();
        return sol;
    }

    // ---- quadrature route (validation; the only log-domain route) ----

    struct QuadReport {
        double value = 0.0;        // or log value for the log route
        double est_error = 0.0;
        bool log_domain = false;
    };

    double p_quadrature(const Idx3& x, double t) const {
        return p_quadrature_detailed(x, t).value;
    }

    QuadReport p_quadrature_detailed(const Idx3& x, double t) const {
        if (!(t > 0.0)) fail_validation("nonpositive-argument", "p_quadrature requires t > 0");
        double ta = std::pow(t, alpha_);
        double s_cap = s_linear_cap();
        const std::vector<double>& col = *heat_probe(x);
        const std::vector<double>& m = ml_table(t);
        long K = std::min<long>(static_cast<long>(col.size()),
                                static_cast<long>(m.size()) - 1);

        // k range that can matter anywhere in the s integral: both routes sum
        // m_k a^{*k}(x), so terms negligible there are negligible here too.
        double peak = 0.0;
        for (long k = 1; k <= K; ++k)
            peak = std::max(peak, m[static_cast<size_t>(k)] * col[static_cast<size_t>(k - 1)]);
        if (peak <= 0.0)
            fail("underflow-everywhere", "p underflows in linear arithmetic; use the log route");
        long k_lo = K, k_hi = 1;
        for (long k = 1; k <= K; ++k) {
            if (m[static_cast<size_t>(k)] * col[static_cast<size_t>(k - 1)] >= 1e-16 * peak) {
                k_lo = std::min(k_lo, k);
                k_hi = std::max(k_hi, k);
            }
        }
        long margin = static_cast<long>(2.0 * std::sqrt(static_cast<double>(k_hi))) + 8;
        k_lo = std::max(1L, k_lo - margin);
        k_hi = std::min(K, k_hi + margin);

        auto q_at = [&](double s) {
            double tau = ta * s;
            KahanSum sum;
            double log_scale = for_poisson_weights(tau, k_lo, k_hi, [&](long k, double ws) {
                sum.add(ws * col[static_cast<size_t>(k - 1)]);
            });
            double scale = std::exp(log_scale);
            return scale > 0.0 ? scale * sum.value() : 0.0;
        };

        // panel boundaries follow the Wright branch policy
        double s0 = wright_->series_switchover() > 0.0
                        ? std::min(0.25 * wright_->series_switchover(), 0.25)
                        : 0.125;
        double s1 = std::min(wright_->asymptotic_switchover(), s_cap);
        if (!(s1 > s0)) s1 = s_cap;

        QuadOptions opt;
        opt.rel_tol = opt_.quad_rel_tol;
        opt.abs_tol = 1e-300;
        // (0, s0]: substitute s = e^u so the origin panel resolves every scale
        auto f_log_sub = [&](double u) {
            double s = std::exp(u);
            return wright_->value(s) * q_at(s) * s;
        };
        double u0 = std::log(s0);
        QuadOptions opt_left = opt;
        opt_left.breakpoints = {u0 - 300.0, u0 - 60.0, u0 - 30.0, u0 - 15.0, u0 - 8.0,
                                u0 - 4.0, u0 - 2.0, u0 - 1.0};
        auto left = integrate(f_log_sub, u0 - 700.0, u0, opt_left);

        // central panel
        auto f_mid = [&](double s) { return wright_->value(s) * q_at(s); };
        QuadOptions opt_mid = opt;
        for (double b : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0})
            if (b > s0 && b < s1) opt_mid.breakpoints.push_back(b);
        auto mid = integrate(f_mid, s0, s1, opt_mid);

        // tail panel with the Eq-(Phi) branch of W
        QuadResult tail{};
        if (s1 < s_cap) {
            auto f_tail = [&](double s) { return std::exp(wright_->asympt_large_log(s)) * q_at(s); };
            QuadOptions opt_tail = opt;
            for (double b = s1 * 1.5; b < s_cap; b *= 1.5) opt_tail.breakpoints.push_back(b);
            tail = integrate(f_tail, s1, s_cap, opt_tail);
        }
        // analytic bound on what lies beyond s_cap (q <= 1 up to a constant)
        double beyond = std::exp(wright_->log_value(s_cap)) * s_cap;

        QuadReport rep;
        rep.value = left.value + mid.value + tail.value;
        rep.est_error = left.abs_error + mid.abs_error + tail.abs_error + beyond;
        if (!left.converged || !mid.converged)
            fail("quadrature-not-converged", "p_quadrature did not meet its error target");
        if (rep.est_error > std::max(opt_.quad_rel_tol * rep.value, 1e-300) * 10.0)
            fail("quadrature-not-converged", "p_quadrature error estimate above target");
        if (rep.value == 0.0)
            fail("underflow-everywhere", "p underflows in linear arithmetic; use the log route");
        check_truncation({&col, static_cast<long>(col.size())}, K, t, rep.value);
        return rep;
    }

    // ---- log route ----

    struct LogRoutePlan {
        double s_lo = 0.0, s_hi = 0.0;
        long k_lo = 1, k_hi = 1;
        std::vector<double> breakpoints;
        double log_peak = neg_inf;
    };

    LogRoutePlan log_route_plan(const Idx3& x, double t) const {
        double ta = std::pow(t, alpha_);
        Vec3 xp{};
        for (int i = 0; i < kernel_->dim(); ++i) xp[i] = x[i] * kernel_->spacing();
        TermPreview pv(cumulant_, xp);

        double s_top = s_linear_cap() * 4.0;
        long k_cap = static_cast<long>(3.0 * ta * s_top) + 400;
        // coarse scan of the estimated log-integrand over s
        const int n_grid = 72;
        std::vector<double> sg(n_grid), lg(n_grid);
        double s_bot = std::min(0.5, s_top) * 1e-5;
        for (int i = 0; i < n_grid; ++i) {
            double f = static_cast<double>(i) / (n_grid - 1);
            double s = s_bot * std::pow(s_top / s_bot, f);
            sg[i] = s;
            KWindow w = pv.window(ta * s, 1.0, k_cap);
            double lt = pv.log_term(static_cast<double>(std::max(w.lo, pv.k_min_support())), ta * s);
            lg[i] = wright_->log_value(s) + lt;
        }
        int i_star = 0;
        for (int i = 1; i < n_grid; ++i)
            if (lg[i] > lg[i_star]) i_star = i;

        LogRoutePlan plan;
        plan.log_peak = lg[i_star];
        int i_lo = i_star, i_hi = i_star;
        while (i_lo > 0 && lg[i_lo - 1] > plan.log_peak - opt_.log_integrand_cutoff) --i_lo;
        while (i_hi + 1 < n_grid && lg[i_hi + 1] > plan.log_peak - opt_.log_integrand_cutoff) ++i_hi;
        plan.s_lo = sg[std::max(0, i_lo - 1)];
        plan.s_hi = sg[std::min(n_grid - 1, i_hi + 1)];

        long k_lo = std::numeric_limits<long>::max(), k_hi = 1;
        for (int i = std::max(0, i_lo - 1); i <= std::min(n_grid - 1, i_hi + 1); ++i) {
            if (i > i_lo + 1 && i < i_hi - 1 && (i - i_lo) % 3 != 0) continue;
            KWindow w = pv.window(ta * sg[i], opt_.k_window_cutoff, k_cap);
            k_lo = std::min(k_lo, w.lo);
            k_hi = std::max(k_hi, w.hi);
            if (sg[i] >= plan.s_lo && sg[i] <= plan.s_hi) plan.breakpoints.push_back(sg[i]);
        }
        plan.k_lo = std::max(1L, k_lo);
        plan.k_hi = std::max(plan.k_lo, k_hi);
        return plan;
    }

    void prepare_log_point(const Idx3& x, double t) {
        LogRoutePlan plan = log_route_plan(x, t);
        heat_.prepare_log_probe(x, plan.k_lo, plan.k_hi);
        std::lock_guard<std::mutex> lock(cache_mutex_);
        log_plans_[key(x, t)] = plan;
    }

    double p_log_eval(const Idx3& x, double t) const {
        LogRoutePlan plan;
        {
            std::lock_guard<std::mutex> lock(cache_mutex_);
            auto it = log_plans_.find(key(x, t));
            if (it == log_plans_.end())
                fail("not-prepared", "call prepare_log_point before p_log_eval");
            plan = it->second;
        }
        double ta = std::pow(t, alpha_);
        auto log_f = [&](double s) {
            if (s <= 0.0) return neg_inf;
            return wright_->log_value(s) + heat_.q_log_eval(x, ta * s);
        };
        QuadOptions opt;
        opt.rel_tol = 1e-9;
        opt.max_panels = 3000;
        opt.breakpoints = plan.breakpoints;
        auto r = integrate_log(log_f, plan.s_lo, plan.s_hi, opt);
        if (!r.converged)
            fail("quadrature-not-converged", "log-route quadrature did not converge");
        return r.log_value;
    }

private:
    struct LinearColumn {
        const std::vector<double>* col;
        long k_max;
        double at(long k) const { return (*col)[static_cast<size_t>(k - 1)]; }
    };

    LinearColumn column(const Idx3& x) const {
        const std::vector<double>* col = heat_probe(x);
        return {col, static_cast<long>(col->size())};
    }

    const std::vector<double>* heat_probe(const Idx3& x) const {
        const std::vector<double>* col = heat_.probe_column(x);
        if (!col || col->empty())
            fail("probe-not-prepared", "point was not prepared; call prepare_points first");
        return col;
    }

    // The series beyond the table end is bounded by (ml weight tail) x
    // (power values near the end), valid while the column has already turned
    // over in k; a still-rising column means the table is genuinely short.
    void check_truncation(const LinearColumn& col, long K, double t, double p) const {
        if (!(p > 0.0)) return;
        const std::vector<double>& m = ml_table(t);
        double m_end = m[static_cast<size_t>(std::min<long>(K, m.size() - 1))];
        double tail_est;
        if (m_end == 0.0) {
            // weights already under the 1e-308 floor and monotone dying
            tail_est = 1e-305 * static_cast<double>(K);
        } else {
            long back = std::max<long>(2, K / 16);
            bool rising = K > back && col.at(K) > col.at(K - back);
            tail_est = rising ? pos_inf : 4.0 * ml_tail(t) * col.at(K);
        }
        if (tail_est > 1e-9 * p)
            fail("truncation-bound-violated",
                 "series tail beyond the table carries more than 1e-9 of p");
    }

    double s_linear_cap_nolock() const {
        if (s_cap_ == 0.0) {
            double s = 1.0;
            while (wright_->log_value(s) > -760.0 && s < 1e9) s *= 1.25;
            s_cap_ = s;
        }
        return s_cap_;
    }

    // W mass beyond s_series_cap is already below the truncation tolerance.
    double s_series_cap_nolock() const {
        if (s_series_cap_ == 0.0) {
            double goal = std::log(opt_.series_tail_tol) - 8.0;
            double s = 0.5;
            while (wright_->log_value(s) > goal && s < 1e9) s *= 1.2;
            s_series_cap_ = s;
        }
        return s_series_cap_;
    }

    long k_series_nolock(double t) const {
        double tau = std::pow(t, alpha_) * s_series_cap_nolock();
        long K = static_cast<long>(std::ceil(tau + 12.0 * std::sqrt(tau + 1.0) + 30.0));
        while (weights_.tail_bound(K, t) > opt_.series_tail_tol)
            K = static_cast<long>(K * 1.25) + 10;
        return K;
    }

    static std::string key(const Idx3& x, double t) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%d,%d,%d@%.17g", x[0], x[1], x[2], t);
        return buf;
    }

    Options opt_;
    double alpha_;
    FracParams fp_;
    std::shared_ptr<const DensityGrid> kernel_;
    std::shared_ptr<Cumulant> cumulant_;
    std::shared_ptr<const WrightDensity> wright_;
    MittagLeffler ml_;
    MlWeights weights_;
    HeatKernelEvaluator heat_;

    mutable std::mutex cache_mutex_;
    mutable double s_cap_ = 0.0;
    mutable double s_series_cap_ = 0.0;
    mutable std::map<double, std::vector<double>> ml_tables_;
    mutable std::map<double, double> ml_tails_;
    std::map<std::string, LogRoutePlan> log_plans_;
};

}  // namespace fracheat
