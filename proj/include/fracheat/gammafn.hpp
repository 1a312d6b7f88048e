#pragma once

#include <cmath>

#include "fracheat/common.hpp"

namespace fracheat {

// sin(pi*x) with exact argument reduction, accurate near integer x where the
// naive std::sin(pi*x) loses all digits.
inline double sin_pi(double x) {
    double r = x - 2.0 * std::round(0.5 * x);  // r in [-1, 1], sin(pi x) = sin(pi r)
    if (r > 0.5) r = 1.0 - r;
    if (r < -0.5) r = -1.0 - r;
    return std::sin(pi * r);
}

// 1/Gamma(x) for any real x; exactly 0 at the poles x = 0, -1, -2, ...
inline double rec_gamma(double x) {
    if (x > 0.0) {
        if (x > 170.0) return std::exp(-std::lgamma(x));
        return 1.0 / std::tgamma(x);
    }
    if (x == std::floor(x)) return 0.0;
    // Reflection: 1/Gamma(x) = Gamma(1-x) sin(pi x) / pi.
    double s = sin_pi(x);
    double lg = std::lgamma(1.0 - x);
    // Gamma(1-x) can overflow for very negative x; keep it in logs.
    double mag = lg + std::log(std::abs(s) / pi);
    return std::copysign(std::exp(mag), s);
}

// log|1/Gamma(x)| and its sign, for series terms assembled in log space.
struct LogRecGamma {
    double log_abs;
    int sign;  // 0 when 1/Gamma(x) == 0 (pole)
};

inline LogRecGamma log_rec_gamma(double x) {
    if (x > 0.0) return {-std::lgamma(x), 1};
    if (x == std::floor(x)) return {neg_inf, 0};
    double s = sin_pi(x);
    return {std::lgamma(1.0 - x) + std::log(std::abs(s) / pi), s > 0 ? 1 : -1};
}

}  // namespace fracheat
