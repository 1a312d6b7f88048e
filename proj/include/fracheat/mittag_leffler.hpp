#pragma once

#include <cmath>
#include <mutex>

#include "fracheat/wright.hpp"

namespace fracheat {

// E_alpha(z) for z <= 0.  Taylor series for small |z|, the optimally
// truncated large-|z| expansion sum_n -z^{-n}/Gamma(1-alpha n) beyond it, and
// the Laplace-transform identity E_alpha(-x) = int_0^inf W_alpha(s) e^{-x s} ds
// as arbiter whenever neither expansion carries the requested digits.
class MittagLeffler {
public:
    explicit MittagLeffler(double alpha, SeriesPolicy policy = {})
        : alpha_(alpha), policy_(policy) {}

    // Lazily built: only the integral fallback needs the Wright density.
    MittagLeffler(double alpha, std::shared_ptr<const WrightDensity> wright,
                  SeriesPolicy policy = {})
        : alpha_(alpha), policy_(policy), wright_(std::move(wright)) {}

    double alpha() const { return alpha_; }

    double taylor(double z, double* err_est = nullptr) const {
        KahanSum sum;
        double term = 1.0, max_abs = 1.0;
        sum.add(1.0);
        int n = 1;
        for (; n <= policy_.max_terms; ++n) {
            double lt = n * std::log(std::abs(z)) - std::lgamma(alpha_ * n + 1.0);
            term = ((n % 2) ? -1.0 : 1.0) * std::exp(lt);
            sum.add(term);
            max_abs = std::max(max_abs, std::abs(term));
            if (std::abs(term) < 1e-17 * std::max(std::abs(sum.value()), 1e-300)) break;
        }
        double err = max_abs * 1.2e-16 + (n > policy_.max_terms ? std::abs(term) : 0.0);
        if (err_est) *err_est = err;
        return sum.value();
    }

    // Asymptotic series, truncated at its smallest term.
    double asymptotic(double z, double* err_est = nullptr) const {
        double x = -z;
        KahanSum sum;
        double best_err = pos_inf;
        double prev_abs = pos_inf;
        for (int n = 1; n <= policy_.max_terms; ++n) {
            LogRecGamma rg = log_rec_gamma(1.0 - alpha_ * n);
            double term = 0.0, a = 0.0;
            if (rg.sign != 0) {
                a = std::exp(-n * std::log(x) + rg.log_abs);
                term = -((n % 2) ? -1.0 : 1.0) * rg.sign * a;  // -z^{-n}/Gamma(1-an), z<0
            }
            if (a > prev_abs && n > 2) {  // smallest term reached: stop before it grows
                best_err = prev_abs;
                break;
            }
            sum.add(term);
            if (a > 0.0) prev_abs = a;
            best_err = prev_abs;
        }
        if (err_est) *err_est = best_err;
        return sum.value();
    }

    double integral_fallback(double z) const {
        ensure_wright();
        double x = -z;
        auto log_f = [&](double s) { return wright_->log_value(s) - x * s; };
        QuadOptions opt;
        opt.rel_tol = 1e-11;
        opt.breakpoints = {1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
        double hi = 64.0;
        while (wright_->log_value(hi) - x * hi > -750.0 && hi < 1e6) hi *= 2.0;
        auto r = integrate_log(log_f, 0.0, hi, opt);
        return std::exp(r.log_value);
    }

    double operator()(double z) const {
        if (z > 0.0) fail("positive-argument", "E_alpha is implemented for z <= 0 only");
        if (z == 0.0) return 1.0;
        double err = 0.0;
        double v = taylor(z, &err);
        if (err <= policy_.tol * std::abs(v) && v > 0.0) return v;
        double v2 = asymptotic(z, &err);
        if (err <= policy_.tol * std::abs(v2) && v2 > 0.0) return v2;
        return integral_fallback(z);
    }

    const char* branch_used(double z) const {
        if (z == 0.0) return "taylor";
        double err = 0.0;
        double v = taylor(z, &err);
        if (err <= policy_.tol * std::abs(v) && v > 0.0) return "taylor";
        double v2 = asymptotic(z, &err);
        if (err <= policy_.tol * std::abs(v2) && v2 > 0.0) return "asymptotic";
        return "integral";
    }

    // Branch disagreement on the Taylor/asymptotic overlap, for diagnostics.
    double overlap_disagreement(double z) const {
        double e1 = 0.0, e2 = 0.0;
        double a = taylor(z, &e1), b = asymptotic(z, &e2);
        return std::abs(a - b) / std::max(std::abs(a), 1e-300);
    }

private:
    void ensure_wright() const {
        std::lock_guard<std::mutex> lock(build_mutex_);
        if (!wright_) wright_ = std::make_shared<const WrightDensity>(alpha_, policy_);
    }

    double alpha_;
    SeriesPolicy policy_;
    mutable std::mutex build_mutex_;
    mutable std::shared_ptr<const WrightDensity> wright_;
};

}  // namespace fracheat
