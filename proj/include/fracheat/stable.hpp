#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fracheat/frac_params.hpp"
#include "fracheat/gammafn.hpp"
#include "fracheat/zolotarev.hpp"

namespace fracheat {

// Branch-control shared by the special-function evaluators.  Switchovers are
// fixed once, at construction, by requiring both branches to agree on an
// overlap interval around the switch point.
struct SeriesPolicy {
    double tol = 1e-9;            // branch agreement demanded on the overlap
    double overlap_width = 0.2;   // overlap extends switchover*(1 +- width/2)
    int max_terms = 600;
    double integral_rel_tol = 1e-12;
};

// One-sided alpha-stable density g_alpha (Laplace transform e^{-lambda^a}).
//
// Branches:
//  * convergent series in s^{-a} for s above the switchover;
//  * exact Zolotarev integral below it (the printed small-s asymptotic branch
//    is exposed for cross-checks but is only leading-order accurate);
//  * small-s asymptotic K_a (a/s)^{(2-a)/(2(1-a))} exp(-(1-a)(s/a)^{-a/(1-a)}).
class StableDensity {
public:
    explicit StableDensity(double alpha, SeriesPolicy policy = {})
        : alpha_(alpha), fp_(alpha), policy_(policy) {
        calibrate();
    }

    double alpha() const { return alpha_; }
    double switchover() const { return switch_s_; }
    const SeriesPolicy& policy() const { return policy_; }

    // Convergent series (1/pi) sum_{k>=1} (-1)^{k-1} Gamma(a k+1)/k! sin(pi k a) s^{-a k-1}.
    // Fails (returns NaN, err=inf) when cancellation eats the requested digits.
    double series_value(double s, double* err_est = nullptr) const {
        double log_s = std::log(s);
        KahanSum sum;
        double max_abs = 0.0, last_nonzero = pos_inf;
        int small_run = 0;
        int k = 1;
        for (; k <= policy_.max_terms; ++k) {
            // magnitude of the envelope term Gamma(a k+1)/k! s^{-a k-1}; the
            // sin factor can vanish exactly (rational alpha), so the stop
            // rule watches the envelope, not the term
            double lt = std::lgamma(alpha_ * k + 1.0) - std::lgamma(k + 1.0)
                      - (alpha_ * k + 1.0) * log_s;
            double env = std::exp(lt) / pi;
            double sg = sin_pi(static_cast<double>(k) * alpha_);
            double term = ((k % 2) ? 1.0 : -1.0) * sg * env;
            sum.add(term);
            max_abs = std::max(max_abs, std::abs(term));
            if (env < 1e-17 * std::max(std::abs(sum.value()), 1e-300) && env < last_nonzero) {
                if (++small_run >= 2) break;
            } else {
                small_run = 0;
            }
            last_nonzero = std::max(env, 1e-320);
        }
        double cancel = max_abs * 1.2e-16 + last_nonzero * (k > policy_.max_terms ? 1.0 : 0.0);
        if (err_est) *err_est = cancel;
        return sum.value();
    }

    // Eq-(g) small-s branch, log scale (leading order only).
    double asympt_small_log(double s) const {
        double e = (2.0 - alpha_) / (2.0 * (1.0 - alpha_));
        return std::log(fp_.K_alpha()) + e * std::log(alpha_ / s)
             - (1.0 - alpha_) * std::pow(s / alpha_, -alpha_ / (1.0 - alpha_));
    }

    double integral_log(double s) const {
        return stable_log_density_integral(alpha_, s, policy_.integral_rel_tol);
    }

    double log_value(double s) const {
        require_positive(s);
        if (s >= switch_s_) {
            double v = series_value(s);
            if (v > 0.0) return std::log(v);
        }
        return integral_log(s);
    }

    double value(double s) const {
        require_positive(s);
        if (s >= switch_s_) {
            double v = series_value(s);
            if (v > 0.0) return v;
        }
        return std::exp(integral_log(s));
    }

    const char* branch_used(double s) const { return s >= switch_s_ ? "series" : "integral"; }

    double cdf(double s) const { return stable_cdf_integral(alpha_, s); }

    // |series/integral - 1| observed on the calibration overlap
    double overlap_disagreement() const { return overlap_disagreement_; }

private:
    static void require_positive(double s) {
        if (!(s > 0.0)) fail("nonpositive-argument", "stable density requires s > 0");
    }

    void calibrate() {
        // Walk down from large s; keep the smallest s where the series is
        // still trustworthy and matches the integral across the overlap.
        double best = pos_inf;
        double worst_diff = 0.0;
        for (double s = 64.0; s > 1e-3; s /= 1.15) {
            double err = 0.0;
            double v = series_value(s, &err);
            if (!(v > 0.0) || err > policy_.tol * v) break;
            double hi = s * (1.0 + policy_.overlap_width);
            double ref_lo = std::exp(integral_log(s));
            double ref_hi = std::exp(integral_log(hi));
            double err_hi = 0.0;
            double v_hi = series_value(hi, &err_hi);
            double d = std::max(std::abs(v / ref_lo - 1.0), std::abs(v_hi / ref_hi - 1.0));
            if (d > policy_.tol) break;
            best = s;
            worst_diff = std::max(worst_diff, d);
        }
        if (!std::isfinite(best))
            fail("series-not-converged", "stable series unusable at every probed switchover");
        switch_s_ = best;
        overlap_disagreement_ = worst_diff;
    }

    double alpha_;
    FracParams fp_;
    SeriesPolicy policy_;
    double switch_s_ = 1.0;
    double overlap_disagreement_ = 0.0;
};

}  // namespace fracheat
