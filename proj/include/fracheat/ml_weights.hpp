#pragma once

#include <cmath>
#include <memory>
#include <vector>

#include "fracheat/mittag_leffler.hpp"
#include "fracheat/wright.hpp"

namespace fracheat {

// Mittag-Leffler weights m_k(t) = t^{alpha k} E_alpha^{(k)}(-t^alpha)/k!,
// evaluated through the moment form
//
//   m_k(t) = (1/k!) int_0^inf W_alpha(s) (s t^alpha)^k e^{-s t^alpha} ds,
//
// i.e. the Wright density integrated against a Poisson(s t^alpha) pmf.
// Repeated differentiation of E_alpha would be hopeless for large k; this
// integral is uniformly stable and gives every weight in the log domain.
class MlWeights {
public:
    explicit MlWeights(std::shared_ptr<const WrightDensity> wright)
        : wright_(std::move(wright)) {}

    const WrightDensity& wright() const { return *wright_; }
    double alpha() const { return wright_->alpha(); }

    double log_weight(long k, double t) const {
        if (k < 0) fail_validation("bad-order", "ml weight needs k >= 0");
        if (!(t > 0.0)) fail_validation("nonpositive-argument", "ml weight needs t > 0");
        double ta = std::pow(t, alpha());
        double lgk = std::lgamma(static_cast<double>(k) + 1.0);
        auto log_f = [&](double s) {
            if (s <= 0.0) return neg_inf;
            double lam = s * ta;
            return wright_->log_value(s) + k * std::log(lam) - lam - lgk;
        };
        double s0 = k > 0 ? static_cast<double>(k) / ta : 0.0;
        double width = k > 0 ? std::sqrt(static_cast<double>(k)) / ta : 1.0 / ta;
        QuadOptions opt;
        opt.rel_tol = 1e-10;
        opt.max_panels = 2000;
        for (double c : {-8.0, -4.0, -2.0, -1.0, 1.0, 2.0, 4.0, 8.0}) {
            double s = s0 + c * width;
            if (s > 0.0) opt.breakpoints.push_back(s);
        }
        for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) opt.breakpoints.push_back(s);
        double hi = std::max(s0 + 16.0 * width, 8.0);
        double peak = log_f(std::max(s0, 0.5 * width));
        while (hi < 1e7 && log_f(hi) > peak - 760.0) hi *= 2.0;
        auto r = integrate_log(log_f, 0.0, hi, opt);
        if (!r.converged)
            fail("quadrature-not-converged", "ml weight quadrature did not converge");
        return r.log_value;
    }

    double weight(long k, double t) const { return std::exp(log_weight(k, t)); }

    // m_0 .. m_kmax
    std::vector<double> weights_upto(double t, long k_max) const {
        std::vector<double> w(static_cast<size_t>(k_max) + 1);
        for (long k = 0; k <= k_max; ++k) w[static_cast<size_t>(k)] = weight(k, t);
        return w;
    }

    // Upper bound on sum_{k > K} m_k(t): Wright mass beyond K/t^alpha plus a
    // Chernoff bound on the Poisson upper tail below it.
    double tail_bound(long K, double t) const {
        double ta = std::pow(t, alpha());
        double edge = static_cast<double>(K) / ta;
        auto log_f = [&](double s) {
            if (s <= 0.0) return neg_inf;
            double lam = s * ta;
            double lw = wright_->log_value(s);
            if (lam >= static_cast<double>(K)) return lw;
            double ratio = static_cast<double>(K) / lam;
            double chern = -lam * (ratio * std::log(ratio) - ratio + 1.0);
            return lw + chern;
        };
        QuadOptions opt;
        opt.rel_tol = 1e-6;
        opt.max_panels = 1200;
        opt.breakpoints = {0.25 * edge, 0.5 * edge, 0.75 * edge, edge, 1.5 * edge, 2.0 * edge};
        double hi = std::max(4.0 * edge, 8.0);
        while (hi < 1e7 && log_f(hi) > -760.0) hi *= 2.0;
        auto r = integrate_log(log_f, 0.0, hi, opt);
        return std::exp(r.log_value);
    }

private:
    std::shared_ptr<const WrightDensity> wright_;
};

}  // namespace fracheat
