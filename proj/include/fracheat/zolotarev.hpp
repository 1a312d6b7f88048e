#pragma once

#include <cmath>

#include "fracheat/common.hpp"
#include "fracheat/gammafn.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

// Zolotarev's integral representation for the one-sided alpha-stable law with
// Laplace transform exp(-lambda^alpha):
//
//   g_alpha(z) = a/(1-a) z^{-1/(1-a)} (1/pi) int_0^pi A(phi) e^{-A(phi) w} dphi
//   P(S <= z)  =               (1/pi) int_0^pi        e^{-A(phi) w} dphi
//
// with w = z^{-a/(1-a)} and
//   A(phi) = [sin(a phi)/sin(phi)]^{a/(1-a)} sin((1-a) phi)/sin(phi).
//
// A is increasing from A(0+) = (1-a) a^{a/(1-a)} to +infinity at pi, which
// also underlies Kanter's sampler S = (A(pi U)/E)^{(1-a)/a}.

inline double log_zolotarev_A(double alpha, double phi) {
    if (phi <= 0.0)
        return std::log1p(-alpha) + alpha / (1.0 - alpha) * std::log(alpha);
    double ls = std::log(std::sin(phi));
    double la = std::log(std::sin(alpha * phi));
    double lb = std::log(std::sin((1.0 - alpha) * phi));
    return alpha / (1.0 - alpha) * (la - ls) + (lb - ls);
}

namespace detail {

// For large w the integrand e^{-A(phi) w} collapses onto phi = 0 with width
// ~ (w A(0))^{-1/2}; seed panels there so the adaptive splitter is not left
// hunting for a spike ten orders below the default breakpoints.
inline QuadOptions zolotarev_breakpoints(double alpha, double w, double rel_tol) {
    QuadOptions opt;
    opt.rel_tol = rel_tol;
    opt.max_panels = 4000;
    opt.breakpoints = {1e-12, 1e-9, 1e-6, 1e-4, 1e-2, 0.1, 0.3, 0.7, 1.2, 1.8, 2.4, 2.9,
                       pi - 0.2,  pi - 0.05, pi - 1e-2, pi - 1e-3, pi - 1e-4, pi - 1e-6,
                       pi - 1e-8, pi - 1e-10, pi - 1e-12};
    double a0 = (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha));  // A(0)
    double scale = w * a0;
    if (scale > 4.0) {
        double phi_star = 1.0 / std::sqrt(scale);
        for (double c : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0}) {
            double b = phi_star * c;
            if (b < 2.0) opt.breakpoints.push_back(b);
        }
    }
    if (scale < 1.0) {
        // small w: the e-folding A(pi-u) w = 1 happens at u* = sin(a pi) w^{1-a}
        // with relative width ~ (1-a)
        double u_star = sin_pi(alpha) * std::pow(w, 1.0 - alpha);
        u_star = std::min(std::max(u_star, 1e-13), 3.0);
        double step = std::exp(3.0 * (1.0 - alpha));
        double u = u_star / (step * step * step);
        for (int j = -3; j <= 3; ++j, u *= step)
            if (u < 3.0) opt.breakpoints.push_back(pi - u);
    }
    return opt;
}

}  // namespace detail

// log g_alpha(z), machine accurate for any z > 0 (value may be ~ e^{-10^6}).
inline double stable_log_density_integral(double alpha, double z, double rel_tol = 1e-12) {
    if (!(z > 0.0)) fail_validation("nonpositive-argument", "stable density needs z > 0");
    double w = std::pow(z, -alpha / (1.0 - alpha));
    auto log_f = [&](double phi) {
        double la = log_zolotarev_A(alpha, phi);
        double a = std::exp(la);
        double damp = w * a;  // +inf is fine: the integrand vanishes there
        return std::isfinite(damp) ? la - damp : neg_inf;
    };
    auto r = integrate_log(log_f, 0.0, pi, detail::zolotarev_breakpoints(alpha, w, rel_tol));
    return std::log(alpha / (1.0 - alpha)) - std::log(z) / (1.0 - alpha)
         + r.log_value - std::log(pi);
}

// P(S <= z) for the same law.
inline double stable_cdf_integral(double alpha, double z, double rel_tol = 1e-10) {
    if (!(z > 0.0)) return 0.0;
    double w = std::pow(z, -alpha / (1.0 - alpha));
    auto f = [&](double phi) {
        double a = std::exp(log_zolotarev_A(alpha, phi));
        double damp = w * a;
        return std::isfinite(damp) ? std::exp(-damp) : 0.0;
    };
    auto opt = detail::zolotarev_breakpoints(alpha, w, rel_tol);
    opt.abs_tol = 1e-14;
    auto r = integrate(f, 0.0, pi, opt);
    return std::min(1.0, std::max(0.0, r.value / pi));
}

}  // namespace fracheat
