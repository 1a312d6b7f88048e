#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "fracheat/stable.hpp"

namespace fracheat {

// Natural cubic spline on uniform nodes; used to cache expensive smooth
// log-densities.  Construction solves the standard tridiagonal system.
class UniformCubicSpline {
public:
    UniformCubicSpline() = default;
    UniformCubicSpline(double a, double b, std::vector<double> y)
        : a_(a), b_(b), y_(std::move(y)) {
        size_t n = y_.size();
        h_ = (b_ - a_) / static_cast<double>(n - 1);
        m_.assign(n, 0.0);
        std::vector<double> c(n, 0.0), rhs(n, 0.0);
        for (size_t i = 1; i + 1 < n; ++i)
            rhs[i] = 6.0 * (y_[i + 1] - 2.0 * y_[i] + y_[i - 1]) / (h_ * h_);
        // Thomas algorithm for the (4,1) tridiagonal system, natural ends
        for (size_t i = 1; i + 1 < n; ++i) {
            double m = (i == 1) ? 4.0 : 4.0 - 1.0 / c[i - 1];
            c[i] = m;
            rhs[i] = rhs[i] - (i == 1 ? 0.0 : rhs[i - 1] / c[i - 1]);
        }
        for (size_t i = n - 2; i >= 1; --i) {
            m_[i] = (rhs[i] - (i + 2 == n ? 0.0 : m_[i + 1])) / c[i];
            if (i == 1) break;
        }
    }

    bool covers(double x) const { return !y_.empty() && x >= a_ && x <= b_; }

    double operator()(double x) const {
        size_t n = y_.size();
        double u = (x - a_) / h_;
        size_t i = std::min(static_cast<size_t>(std::max(u, 0.0)), n - 2);
        double t = u - static_cast<double>(i);
        double s = 1.0 - t;
        return s * y_[i] + t * y_[i + 1]
             + h_ * h_ / 6.0 * ((s * s * s - s) * m_[i] + (t * t * t - t) * m_[i + 1]);
    }

private:
    double a_ = 0.0, b_ = 1.0, h_ = 1.0;
    std::vector<double> y_, m_;
};

// M-Wright density W_alpha on [0, inf): the law of the inverse subordinator
// at t = 1 and the weight of the subordination integral.
//
// Representations:
//  * M-Wright series sum_k (-s)^k / (k! Gamma(1 - a - a k))       (moderate s)
//  * transform (1/a) s^{-1/a-1} g_a(s^{-1/a}) backed by the exact
//    Zolotarev integral                                            (any s)
//  * Eq-(Phi) tail  c1 s^{(2a-1)/(2(1-a))} exp(-c2 s^{1/(1-a)})    (large s)
//
// The series is primary up to a calibrated switchover; past it the evaluator
// uses the tail branch once its stretched exponent is deep enough to be
// trustworthy, and the exact transform in between (this is what keeps alpha
// close to 1 usable, where the series is hopeless).
class WrightDensity {
public:
    explicit WrightDensity(double alpha, SeriesPolicy policy = {})
        : alpha_(alpha), fp_(alpha), policy_(policy),
          stable_(std::make_shared<StableDensity>(alpha, policy)) {
        calibrate();
    }

    double alpha() const { return alpha_; }
    const FracParams& params() const { return fp_; }
    const StableDensity& stable() const { return *stable_; }
    double series_switchover() const { return s1_; }
    double asymptotic_switchover() const { return s2_; }

    double series_value(double s, double* err_est = nullptr) const {
        double log_s = s > 0.0 ? std::log(s) : neg_inf;
        KahanSum sum;
        double max_abs = 0.0, last_env = pos_inf;
        int small_run = 0;
        int k = 0;
        for (; k <= policy_.max_terms; ++k) {
            LogRecGamma rg = log_rec_gamma(1.0 - alpha_ * (k + 1.0));
            double lpow = (k == 0 ? 0.0 : k * log_s) - std::lgamma(k + 1.0);
            double term = 0.0;
            if (rg.sign != 0)
                term = ((k % 2) ? -1.0 : 1.0) * rg.sign * std::exp(lpow + rg.log_abs);
            sum.add(term);
            max_abs = std::max(max_abs, std::abs(term));
            if (s == 0.0) break;  // only the k = 0 term survives
            // pole-free envelope: |1/Gamma(1-a(k+1))| <= Gamma(a(k+1))/pi
            // once the reflection applies, so zero terms do not end the sum
            double lenv = rg.sign != 0 ? rg.log_abs : 0.0;
            if (alpha_ * (k + 1.0) > 0.5)
                lenv = std::max(lenv, std::lgamma(alpha_ * (k + 1.0)) - std::log(pi));
            double env = std::exp(lpow + lenv);
            if (k > 2 && env < 1e-17 * std::max(std::abs(sum.value()), 1e-300) && env < last_env) {
                if (++small_run >= 2) break;
            } else {
                small_run = 0;
            }
            last_env = std::max(env, 1e-320);
        }
        double cancel = max_abs * 1.2e-16 + (k > policy_.max_terms ? last_env : 0.0);
        if (err_est) *err_est = cancel;
        return sum.value();
    }

    // (1/a) s^{-1/a-1} g_a(s^{-1/a}) through the exact stable integral.
    double transform_log(double s) const {
        double z = std::pow(s, -1.0 / alpha_);
        return -std::log(alpha_) + (-1.0 / alpha_ - 1.0) * std::log(s) + stable_->integral_log(z);
    }

    double transform_value(double s) const { return std::exp(transform_log(s)); }

    // Same identity but routed through g's own branch logic (series for
    // moderate arguments); used by the construction-time cross-checks.
    double transform_via_branches(double s) const {
        double z = std::pow(s, -1.0 / alpha_);
        return std::pow(s, -1.0 / alpha_ - 1.0) / alpha_ * stable_->value(z);
    }

    // Eq-(Phi) tail branch, log scale.
    double asympt_large_log(double s) const {
        double q = (2.0 * alpha_ - 1.0) / (2.0 * (1.0 - alpha_));
        return std::log(fp_.c1()) + q * std::log(s) - fp_.c2() * std::pow(s, 1.0 / (1.0 - alpha_));
    }

    double log_value(double s) const {
        require_nonneg(s);
        if (s <= s1_) {
            double v = series_value(s);
            if (v > 0.0) return std::log(v);
        }
        if (s >= s2_) return asympt_large_log(s);
        if (spline_.covers(s))
            return spline_(s) - fp_.c2() * std::pow(s, 1.0 / (1.0 - alpha_));
        return transform_log(s);
    }

    double value(double s) const {
        require_nonneg(s);
        if (s <= s1_) {
            double v = series_value(s);
            if (v >= 0.0) return v;
        }
        return std::exp(log_value(s));
    }

    const char* branch_used(double s) const {
        if (s <= s1_) return "series";
        if (s >= s2_) return "asymptotic";
        return "transform";
    }

    double overlap_disagreement() const { return overlap_disagreement_; }

private:
    static void require_nonneg(double s) {
        if (!(s >= 0.0)) fail("nonpositive-argument", "Wright density requires s >= 0");
    }

    void calibrate() {
        // Series reach: largest s where the running cancellation estimate
        // stays within tolerance and the exact transform agrees on the
        // overlap [s, s(1+width)].
        double best = 0.0, worst = 0.0;
        for (double s = 0.05; s < 64.0; s *= 1.15) {
            double err = 0.0;
            double v = series_value(s, &err);
            if (!(v > 0.0) || err > policy_.tol * v) break;
            double hi = s * (1.0 + policy_.overlap_width);
            double err_hi = 0.0;
            double v_hi = series_value(hi, &err_hi);
            if (!(v_hi > 0.0) || err_hi > policy_.tol * v_hi) break;
            double d = std::max(std::abs(v / transform_value(s) - 1.0),
                                std::abs(v_hi / transform_value(hi) - 1.0));
            if (d > policy_.tol) break;
            best = s;
            worst = std::max(worst, d);
        }
        s1_ = best;  // 0 means: series only trusted at s = 0 itself
        overlap_disagreement_ = worst;

        // Tail branch: the Eq-(Phi) form takes over only where it matches the
        // exact transform at full working precision.  At alpha = 1/2 it is
        // exact and engages essentially everywhere past the series; at other
        // alpha the leading-order error never meets the policy tolerance and
        // the transform stays primary (s2 = inf).
        double lo = std::max(s1_ * (1.0 + policy_.overlap_width), 0.5);
        s2_ = pos_inf;
        int good = 0;
        for (double s = lo; s < 512.0; s *= 1.2) {
            double d = std::abs(asympt_large_log(s) - transform_log(s));
            if (d <= policy_.tol) {
                if (++good >= 2) {
                    s2_ = s / 1.2;
                    break;
                }
            } else {
                good = 0;
            }
        }

        // The transform band is exact but each call runs a quadrature, so it
        // is cached on a dense spline that is verified against the direct
        // integral before use.
        // Stop the band just past log W = -820: beyond it linear callers see
        // exact zero anyway, and the peeled residue would be dominated by the
        // cancellation noise of two huge numbers.
        double band_lo = s1_ > 0.0 ? s1_ * 0.98 : 1e-3;
        double band_hi = s2_;
        if (!std::isfinite(band_hi)) {
            band_hi = std::max(1.1 * band_lo, 0.05);
            while (transform_log(band_hi) > -820.0 && band_hi < 1e6) band_hi *= 1.07;
        }
        if (band_hi > band_lo) {
            // spline the residue after peeling off the stretched-exponential
            // tail exactly: what remains is slowly varying, so a natural
            // cubic on uniform nodes is ample
            int n = 4096;
            double c2 = fp_.c2(), ex = 1.0 / (1.0 - alpha_);
            std::vector<double> y(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) {
                double s = band_lo + (band_hi - band_lo) * i / (n - 1);
                y[static_cast<size_t>(i)] = transform_log(s) + c2 * std::pow(s, ex);
            }
            spline_ = UniformCubicSpline(band_lo, band_hi, std::move(y));
            double worst = 0.0;
            for (int i = 0; i < 23; ++i) {
                double s = band_lo + (band_hi - band_lo) * (0.013 + 0.042 * i);
                if (s <= band_lo || s >= band_hi) continue;
                worst = std::max(worst, std::abs(spline_(s) - c2 * std::pow(s, ex)
                                                 - transform_log(s)));
            }
            spline_check_ = worst;
            if (worst > 5e-7)
                fail("spline-verification-failed",
                     "Wright log-density spline misses its accuracy target");
        }
    }

    double alpha_;
    FracParams fp_;
    SeriesPolicy policy_;
    std::shared_ptr<StableDensity> stable_;
    double s1_ = 0.0, s2_ = pos_inf;
    double overlap_disagreement_ = 0.0;
    UniformCubicSpline spline_;
    double spline_check_ = 0.0;
};

// Density of the inverse subordinator V_t: G_t(r) = (1/a) t r^{-1-1/a} g_a(t r^{-1/a}),
// equivalently t^{-a} W_a(r t^{-a}) by self-similarity.
inline double inverse_subordinator_density(const WrightDensity& w, double t, double r) {
    if (!(t > 0.0) || !(r > 0.0))
        fail("nonpositive-argument", "inverse subordinator density requires t, r > 0");
    double a = w.alpha();
    return std::pow(t, -a) * w.value(r * std::pow(t, -a));
}

// The same density through the stable-density route (identity cross-check).
inline double inverse_subordinator_density_via_stable(const StableDensity& g, double t, double r) {
    if (!(t > 0.0) || !(r > 0.0))
        fail("nonpositive-argument", "inverse subordinator density requires t, r > 0");
    double a = g.alpha();
    return t / a * std::pow(r, -1.0 - 1.0 / a) * g.value(t * std::pow(r, -1.0 / a));
}

}  // namespace fracheat
