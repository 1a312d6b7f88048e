#pragma once

#include <cmath>
#include <cstdio>
#include <functional>

#include "fracheat/cumulant.hpp"
#include "fracheat/frac_params.hpp"

namespace fracheat {

struct NewtonSettings {
    double grad_tol = 1e-12;
    int max_iter = 100;
};

struct LegendreResult {
    double I = 0.0;
    Vec3 gamma{};
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
};

// I(v) = max_gamma (gamma.v - L(gamma)) by Newton with backtracking.
// The maximizer gamma* satisfies grad L(gamma*) = v, and grad I(v) = gamma*
// by the envelope theorem.
inline LegendreResult legendre(const Cumulant& L, const Vec3& v,
                               const NewtonSettings& settings = {},
                               const Vec3* warm_start = nullptr) {
    int d = L.dim();
    for (int i = 0; i < d; ++i)
        if (std::abs(v[i]) >= L.max_drift()[i])
            fail("no-convergence", "Legendre transform: |v| reaches the kernel support bound");

    Vec3 gamma = warm_start ? *warm_start : Vec3{};

    auto residual_norm = [&](const Vec3& g, const Cumulant::Eval& e) {
        double rn = 0.0;
        for (int i = 0; i < d; ++i) rn += (v[i] - e.grad[i]) * (v[i] - e.grad[i]);
        (void)g;
        return std::sqrt(rn);
    };

    LegendreResult res;
    Cumulant::Eval e = L.full(gamma);
    double rn = residual_norm(gamma, e);
    for (int it = 0; it < settings.max_iter; ++it) {
        res.iterations = it;
        res.grad_norm = rn;
        if (rn <= settings.grad_tol) {
            res.converged = true;
            break;
        }
        Vec3 r{};
        for (int i = 0; i < d; ++i) r[i] = v[i] - e.grad[i];
        Vec3 step = e.hess.solve(r);
        // damped step accepted on residual decrease (grad L monotone, so a
        // short enough step always reduces the residual)
        double scale = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls) {
            Vec3 trial = gamma;
            for (int i = 0; i < d; ++i) trial[i] += scale * step[i];
            Cumulant::Eval et = L.full(trial);
            double rt = residual_norm(trial, et);
            if (rt < rn) {
                gamma = trial;
                e = et;
                rn = rt;
                moved = true;
                break;
            }
            scale *= 0.5;
        }
        if (!moved) break;  // stagnated at evaluation noise
    }
    res.grad_norm = rn;
    res.converged = rn <= std::max(settings.grad_tol, 1e-14 * (1.0 + norm(d, v)));
    if (!res.converged) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3e", rn);
        fail("no-convergence",
             std::string("Legendre Newton did not converge; gradient norm ") + buf);
    }
    res.gamma = gamma;
    res.I = std::max(0.0, dot(d, gamma, v) - L.value(gamma));
    return res;
}

// Spec-facing bundle: a cumulant plus frozen solver settings.
class RateFunction {
public:
    explicit RateFunction(std::shared_ptr<const Cumulant> L, NewtonSettings settings = {})
        : L_(std::move(L)), settings_(settings) {}

    const Cumulant& cumulant() const { return *L_; }

    LegendreResult transform(const Vec3& v, const Vec3* warm = nullptr) const {
        return legendre(*L_, v, settings_, warm);
    }

    double I(const Vec3& v) const { return transform(v).I; }
    Vec3 grad_I(const Vec3& v) const { return transform(v).gamma; }

private:
    std::shared_ptr<const Cumulant> L_;
    NewtonSettings settings_;
};

namespace detail {

// Scale v by xi, staying inside the Legendre domain.
inline Vec3 scaled(const Vec3& v, double xi) {
    return {v[0] * xi, v[1] * xi, v[2] * xi};
}

inline double xi_equation(const Cumulant& L, const Vec3& v, double xi, Vec3* warm) {
    LegendreResult lr = legendre(L, scaled(v, xi), {}, warm);
    if (warm) *warm = lr.gamma;
    double w_dot_grad = 0.0;
    for (int i = 0; i < L.dim(); ++i) w_dot_grad += xi * v[i] * lr.gamma[i];
    return std::log(xi) - (lr.I - w_dot_grad);
}

}  // namespace detail

// Unique root of log(xi) = I(xi v) - xi v . grad I(xi v) on (0, inf).
inline double xi_v(const Cumulant& L, const Vec3& v) {
    int d = L.dim();
    double vmax = 0.0;
    for (int i = 0; i < d; ++i) vmax = std::max(vmax, std::abs(v[i]) / L.max_drift()[i]);
    if (vmax == 0.0) fail_validation("degenerate-argument", "xi_v requires v != 0");
    double xi_cap = 0.999999 / vmax;  // xi v must stay inside the support

    Vec3 warm{};
    auto f = [&](double xi) { return detail::xi_equation(L, v, xi, &warm); };

    double lo = std::min(0.5, 0.5 * xi_cap), hi = std::min(2.0, 0.9 * xi_cap);
    double flo = f(lo), fhi = f(hi);
    int guard = 0;
    while (flo * fhi > 0.0) {
        if (++guard > 40) fail("bracket-not-found", "xi_v: no sign change in [1e-8, 1e8]");
        if (std::abs(flo) < std::abs(fhi)) {
            lo /= 4.0;
            if (lo < 1e-8) fail("bracket-not-found", "xi_v: lower bracket limit reached");
            flo = f(lo);
        } else {
            hi = std::min(hi * 4.0, 0.999 * xi_cap);
            fhi = f(hi);
            if (hi >= 0.999 * xi_cap - 1e-12 && flo * fhi > 0.0)
                fail("bracket-not-found", "xi_v: upper bracket limit reached");
        }
    }
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, lo); ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if (flo * fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

// Phi(v) = 1 - (1/xi_v)(1 + log xi_v - I(xi_v v)); Phi(0) = 0.
inline double phi(const Cumulant& L, const Vec3& v) {
    double n = norm(L.dim(), v);
    if (n == 0.0) return 0.0;
    double xi = xi_v(L, v);
    LegendreResult lr = legendre(L, detail::scaled(v, xi));
    return 1.0 - (1.0 + std::log(xi) - lr.I) / xi;
}

struct BigFResult {
    double F = 0.0;    // min F_v
    double eta = 0.0;  // argmin
};

// F_v(eta) = c2(alpha) eta^{1/(1-alpha)} + Phi(v/eta) eta, minimized over
// eta > 0 by golden-section bracketing plus a derivative bisection polish.
inline BigFResult big_f(const Cumulant& L, const FracParams& fp, const Vec3& v) {
    int d = L.dim();
    double vmax = 0.0;
    for (int i = 0; i < d; ++i) vmax = std::max(vmax, std::abs(v[i]) / L.max_drift()[i]);
    if (vmax == 0.0) fail_validation("degenerate-argument", "big_f requires v != 0");

    double c2 = fp.c2();
    double ex = 1.0 / (1.0 - fp.alpha);
    auto F = [&](double eta) {
        Vec3 w{};
        for (int i = 0; i < d; ++i) w[i] = v[i] / eta;
        return c2 * std::pow(eta, ex) + phi(L, w) * eta;
    };

    double eta_lo = vmax * (1.0 + 1e-7);  // Phi needs v/eta inside the support
    // Bracket the minimum: F -> +inf at both ends.
    double b = std::max(2.0 * eta_lo, norm(d, v));
    double a = std::max(eta_lo, 0.5 * b), c = 2.0 * b;
    double Fa = F(a), Fb = F(b), Fc = F(c);
    int guard = 0;
    while (!(Fb < Fa && Fb < Fc)) {
        if (++guard > 80) fail("minimizer-at-boundary", "big_f: could not bracket the minimum");
        if (Fa <= Fb) {
            c = b; Fc = Fb;
            b = a; Fb = Fa;
            a = std::max(eta_lo, 0.5 * (a - eta_lo) + eta_lo);
            if (std::abs(a - eta_lo) < 1e-14 * eta_lo) a = eta_lo * (1.0 + 1e-12);
            Fa = F(a);
        } else {
            a = b; Fa = Fb;
            b = c; Fb = Fc;
            c *= 2.0;
            Fc = F(c);
        }
    }
    const double gr = 0.6180339887498949;
    while ((c - a) > 1e-10 * b) {
        double x = (b - a > c - b) ? b - gr * (b - a) : b + gr * (c - b);
        double Fx = F(x);
        if (Fx < Fb) {
            if (x < b) { c = b; } else { a = b; }
            b = x;
            Fb = Fx;
        } else {
            if (x < b) { a = x; Fa = Fx; } else { c = x; Fc = Fx; }
        }
    }
    // Derivative bisection polish on [a, c].
    auto dF = [&](double eta) {
        double step = 1e-6 * eta;
        return (F(eta + step) - F(eta - step)) / (2.0 * step);
    };
    double lo = a, hi = c;
    double dlo = dF(lo), dhi = dF(hi);
    if (dlo < 0.0 && dhi > 0.0) {
        for (int it = 0; it < 100 && (hi - lo) > 1e-12 * b; ++it) {
            double mid = 0.5 * (lo + hi);
            double dm = dF(mid);
            if (dm < 0.0) { lo = mid; dlo = dm; } else { hi = mid; dhi = dm; }
        }
        b = 0.5 * (lo + hi);
        Fb = F(b);
    }
    return {Fb, b};
}

// Closed-form moderate-deviation constant
// K_v = (2-alpha) alpha^{alpha/(2-alpha)} ((1/2)(sigma^{-1} v, v))^{1/(2-alpha)}.
inline double k_v(double alpha, const SymMat& sigma, const Vec3& v) {
    FracParams fp(alpha);
    double q = 0.5 * sigma.inv_quad(v);
    if (!(q > 0.0)) fail_validation("degenerate-argument", "k_v requires v != 0");
    return fp.c3() * std::pow(q, 1.0 / (2.0 - alpha));
}

// Exponent of t in the moderate-deviation regime, (2 beta - alpha)/(2 - alpha).
inline double moderate_exponent(double alpha, double beta) {
    if (!(beta > 0.5 * alpha) || !(beta < 1.0))
        fail_validation("parameter-out-of-range", "moderate regime needs beta in (alpha/2, 1)");
    return (2.0 * beta - alpha) / (2.0 - alpha);
}

}  // namespace fracheat
