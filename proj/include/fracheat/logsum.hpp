#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "fracheat/common.hpp"

namespace fracheat {

// log(e^a + e^b) without overflow; -inf is the additive identity.
inline double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double hi = std::max(a, b), lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

// Streaming log-sum-exp: keeps the running maximum and a rescaled mantissa.
class LogAccumulator {
public:
    void add(double log_term) {
        if (log_term == neg_inf) return;
        if (!have_) {
            max_ = log_term;
            mant_ = 1.0;
            have_ = true;
            return;
        }
        if (log_term <= max_) {
            mant_ += std::exp(log_term - max_);
        } else {
            mant_ = mant_ * std::exp(max_ - log_term) + 1.0;
            max_ = log_term;
        }
    }

    // log of the accumulated sum; -inf when empty.
    double log_value() const { return have_ ? max_ + std::log(mant_) : neg_inf; }
    bool empty() const { return !have_; }

private:
    bool have_ = false;
    double max_ = neg_inf;
    double mant_ = 0.0;
};

inline double log_sum_exp(std::span<const double> terms) {
    LogAccumulator acc;
    for (double t : terms) acc.add(t);
    return acc.log_value();
}

}  // namespace fracheat
