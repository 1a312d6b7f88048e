#pragma once

#include <cmath>

#include "fracheat/common.hpp"

namespace fracheat {

// Caputo order alpha in (0,1) plus the constants derived from it.  The
// constants are always recomputed from alpha, never stored separately.
struct FracParams {
    double alpha;

    explicit FracParams(double a) : alpha(a) {
        if (!(a > 0.0) || !(a < 1.0))
            fail_validation("alpha-out-of-range", "alpha must lie in (0,1)");
    }

    // (2 pi a (1-a))^{-1/2}, prefactor of the small-s stable asymptotics
    double K_alpha() const { return 1.0 / std::sqrt(2.0 * pi * alpha * (1.0 - alpha)); }

    // (1-a) a^{a/(1-a)}, stretched-exponential rate of the Wright tail
    double c2() const { return (1.0 - alpha) * std::pow(alpha, alpha / (1.0 - alpha)); }

    // (2-a) a^{a/(2-a)}, moderate-deviation constant factor
    double c3() const { return (2.0 - alpha) * std::pow(alpha, alpha / (2.0 - alpha)); }

    // K_alpha a^{a/(2(1-a))}, prefactor of the Wright tail (derived by
    // substituting the small-s stable branch into the transform identity)
    double c1() const { return K_alpha() * std::pow(alpha, alpha / (2.0 * (1.0 - alpha))); }
};

}  // namespace fracheat
