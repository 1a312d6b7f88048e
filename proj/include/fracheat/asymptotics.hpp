#pragma once

#include <string>
#include <vector>

#include "fracheat/rate.hpp"
#include "fracheat/subordination.hpp"

namespace fracheat {

// Gaussian profile of the local limit theorem,
//   Psi(v,s) = (det sigma)^{-1/2} (2 pi s)^{-d/2} exp(-(sigma^{-1} v, v)/(2s)).
// The 1/2 in the exponent is forced by matching k^{d/2} a^{*k}(sqrt k v); the
// printed form without it does not reproduce a^{*k} and is not used.
inline double psi_profile(const Vec3& v, double s, const SymMat& sigma) {
    if (!(s > 0.0)) fail_validation("nonpositive-argument", "psi requires s > 0");
    double det = sigma.det();
    if (!(det > 0.0)) fail("singular-sigma", "psi requires positive definite sigma");
    int d = sigma.d;
    return std::pow(det, -0.5) * std::pow(2.0 * pi * s, -0.5 * d)
         * std::exp(-0.5 * sigma.inv_quad(v) / s);
}

inline double log_psi_profile(const Vec3& v, double s, const SymMat& sigma) {
    int d = sigma.d;
    return -0.5 * std::log(sigma.det()) - 0.5 * d * std::log(2.0 * pi * s)
         - 0.5 * sigma.inv_quad(v) / s;
}

// Normal-deviation limit constant int_0^inf W_alpha(s) Psi(v,s) ds.
// For d = 1 the s -> 0 endpoint is integrable even at v = 0 (s^{-1/2}); for
// d >= 2 it diverges at v = 0 and the operation rejects that input.
inline double normal_limit_constant(const WrightDensity& wright, const Vec3& v,
                                    const SymMat& sigma) {
    int d = sigma.d;
    double vn = 0.0;
    for (int i = 0; i < d; ++i) vn += v[i] * v[i];
    if (d >= 2 && vn == 0.0)
        fail("divergent-at-origin", "int W Psi ds diverges at v = 0 for d >= 2");
    // substitute s = u^2: the d = 1, v = 0 integrand becomes flat at 0
    auto f = [&](double u) {
        double s = u * u;
        if (s <= 0.0) return 0.0;
        return wright.value(s) * psi_profile(v, s, sigma) * 2.0 * u;
    };
    double s_hi = 1.0;
    while (wright.log_value(s_hi) > -80.0 && s_hi < 1e8) s_hi *= 1.5;
    QuadOptions opt;
    opt.rel_tol = 1e-10;
    opt.breakpoints = {1e-4, 1e-2, 0.1, 0.3, 0.6, 1.0, 1.5, 2.0, 3.0, 4.0};
    auto r = integrate(f, 0.0, std::sqrt(s_hi), opt);
    if (!r.converged) fail("quadrature-not-converged", "normal limit constant quadrature failed");
    return r.value;
}

// ---------------------------------------------------------------------------
// Regime taxonomy
// ---------------------------------------------------------------------------

enum class Regime { Bounded, Subnormal, Normal, Moderate, Large, ExtraLarge };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::Bounded: return "bounded";
        case Regime::Subnormal: return "subnormal";
        case Regime::Normal: return "normal";
        case Regime::Moderate: return "moderate";
        case Regime::Large: return "large";
        case Regime::ExtraLarge: return "extra-large";
    }
    return "?";
}

// Classification thresholds are explicit, never hidden constants.
struct RegimeThresholds {
    double x0_steps = 4.0;  // Bounded: |x| <= x0_steps lattice steps
    double rho0 = 4.0;      // band half-width ratio for Normal and Large
};

struct Classification {
    Regime regime;
    double beta = 0.0;  // Moderate only: log|x| / log t
};

// Deterministic total assignment by |x| against t^{alpha/2}, t^beta, t.
inline Classification classify(double x_norm, double x_steps_norm, double t, double alpha,
                               const RegimeThresholds& th = {}) {
    if (!(t > 0.0)) fail_validation("nonpositive-argument", "classify requires t > 0");
    Classification c{Regime::Bounded, 0.0};
    if (x_steps_norm <= th.x0_steps) return c;
    double t_half = std::pow(t, 0.5 * alpha);
    double rho_t = std::max(std::log(t), 1.0);
    if (x_norm < t_half / rho_t) {
        c.regime = Regime::Subnormal;
        return c;
    }
    if (x_norm <= t_half * th.rho0) {
        c.regime = Regime::Normal;
        return c;
    }
    if (x_norm < t / th.rho0) {
        c.regime = Regime::Moderate;
        c.beta = std::log(x_norm) / std::log(t);
        return c;
    }
    if (x_norm <= t * th.rho0) {
        c.regime = Regime::Large;
        return c;
    }
    c.regime = Regime::ExtraLarge;
    return c;
}

// ---------------------------------------------------------------------------
// Predictions (large-time forms, one per regime)
// ---------------------------------------------------------------------------

struct Prediction {
    Regime regime;
    // p ~ amplitude * t^{power} * (log factor), or log p ~ -rate * scale(t)
    std::string form;          // human-readable functional form
    double power_of_t = 0.0;   // Bounded/Subnormal/Normal power laws
    double log_factor = 0.0;   // d = 2 log t (or log(t^alpha/|x|^2)) coefficient flag
    double amplitude = 0.0;    // Normal regime: int W Psi; others 0 (undetermined c's)
    double rate = 0.0;         // Moderate: K_v; Large: F(v); ExtraLarge: fitted c+
    double t_exponent = 0.0;   // Moderate: (2b-a)/(2-a); Large: 1
    bool upper_bound_only = false;
};

// The regime forms with every constant pulled from the public rate-function
// and special-function operations.
class Predictor {
public:
    Predictor(std::shared_ptr<const Cumulant> cumulant, double alpha,
              std::shared_ptr<const WrightDensity> wright)
        : L_(std::move(cumulant)), alpha_(alpha), fp_(alpha), wright_(std::move(wright)) {
        sigma_ = covariance(L_->kernel()).sigma;
    }

    const SymMat& sigma() const { return sigma_; }

    Prediction predict_bounded(int d) const {
        Prediction p{};
        p.regime = Regime::Bounded;
        if (d == 1) {
            p.power_of_t = -0.5 * alpha_;
            p.form = "t^{-alpha/2}";
        } else if (d == 2) {
            p.power_of_t = -alpha_;
            p.log_factor = 1.0;
            p.form = "t^{-alpha} log t";
        } else {
            p.power_of_t = -alpha_;
            p.form = "t^{-alpha}";
        }
        return p;
    }

    Prediction predict_subnormal(int d, double x_norm, double t) const {
        Prediction p{};
        p.regime = Regime::Subnormal;
        if (d == 1) {
            p.power_of_t = -0.5 * alpha_;
            p.form = "t^{-alpha/2}";
        } else if (d == 2) {
            p.power_of_t = -alpha_;
            p.log_factor = std::log(std::pow(t, alpha_) / (x_norm * x_norm));
            p.form = "t^{-alpha} log(t^alpha/|x|^2)";
        } else {
            p.power_of_t = -alpha_;
            p.amplitude = std::pow(x_norm, 2.0 - d);
            p.form = "t^{-alpha} |x|^{2-d}";
        }
        return p;
    }

    Prediction predict_normal(const Vec3& v) const {
        Prediction p{};
        p.regime = Regime::Normal;
        int d = L_->dim();
        p.power_of_t = -0.5 * d * alpha_;
        p.amplitude = normal_limit_constant(*wright_, v, sigma_);
        p.form = "t^{-d alpha/2} int W Psi";
        return p;
    }

    Prediction predict_moderate(const Vec3& v, double beta) const {
        Prediction p{};
        p.regime = Regime::Moderate;
        p.rate = k_v(alpha_, sigma_, v);
        p.t_exponent = moderate_exponent(alpha_, beta);
        p.form = "exp(-K_v t^{(2b-a)/(2-a)})";
        return p;
    }

    Prediction predict_large(const Vec3& v) const {
        Prediction p{};
        p.regime = Regime::Large;
        p.rate = big_f(*L_, fp_, v).F;
        p.t_exponent = 1.0;
        p.form = "exp(-F(v) t)";
        return p;
    }

    // Upper bound only; the constant is fitted downstream, never predicted.
    Prediction predict_extra_large(double tail_p) const {
        Prediction p{};
        p.regime = Regime::ExtraLarge;
        p.upper_bound_only = true;
        p.t_exponent = (tail_p - 1.0) / tail_p;
        p.form = "p <= exp(-c |x| (log|x/t|)^{(p-1)/p})";
        return p;
    }

private:
    std::shared_ptr<const Cumulant> L_;
    double alpha_;
    FracParams fp_;
    std::shared_ptr<const WrightDensity> wright_;
    SymMat sigma_;
};

// ---------------------------------------------------------------------------
// Verification reports
// ---------------------------------------------------------------------------

struct RegimeSample {
    double t = 0.0;
    double x_norm = 0.0;
    double computed = 0.0;      // p or log p
    double predicted = 0.0;
    bool log_domain = false;
    std::string route;          // "series", "quadrature", "log"
};

struct RegimeReport {
    Regime regime = Regime::Bounded;
    std::string criterion;
    std::vector<RegimeSample> samples;
    double fitted_exponent = 0.0;
    double fitted_constant = 0.0;
    double final_gap = 0.0;     // relative gap at the largest t
    bool monotone_trend = false;
    bool pass = false;
    std::string detail;
};

// Least-squares slope of log y against log t.
inline double loglog_slope(const std::vector<double>& ts, const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t n = ts.size();
    for (size_t i = 0; i < n; ++i) {
        double lx = std::log(ts[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double dn = static_cast<double>(n);
    return (sxy - sx * sy / dn) / (sxx - sx * sx / dn);
}

}  // namespace fracheat
