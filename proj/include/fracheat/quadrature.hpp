#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "fracheat/common.hpp"
#include "fracheat/logsum.hpp"

namespace fracheat {

// Gauss-Kronrod 7-15 nodes on [-1,1]: abscissa, Gauss weight (0 for the
// Kronrod-only nodes), Kronrod weight.
inline constexpr double gk15_nodes[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529},
};

struct QuadOptions {
    double rel_tol = 1e-10;
    double abs_tol = 0.0;
    int max_panels = 8000;
    std::vector<double> breakpoints;  // optional interior seed points
};

struct QuadResult {
    double value = 0.0;
    double abs_error = 0.0;
    int panels = 0;
    bool converged = false;
};

namespace detail {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel eval_panel(F&& f, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double f0 = f(mid);
    double g7 = gk15_nodes[0][1] * f0;
    double k15 = gk15_nodes[0][2] * f0;
    for (int i = 1; i < 8; ++i) {
        double dx = half * gk15_nodes[i][0];
        double fi = f(mid + dx) + f(mid - dx);
        g7 += gk15_nodes[i][1] * fi;
        k15 += gk15_nodes[i][2] * fi;
    }
    g7 *= half;
    k15 *= half;
    double err = std::abs(k15 - g7);
    // standard sharpened estimate: (200 |K-G|)^{3/2} scaled back
    double scaled = 200.0 * err;
    if (scaled < 1.0) err = scaled * std::sqrt(scaled) / 200.0;
    return {a, b, k15, err};
}

}  // namespace detail

template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
    std::priority_queue<detail::Panel> queue;
    std::vector<double> edges{a};
    for (double x : opt.breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());

    double total = 0.0, total_err = 0.0;
    for (size_t i = 0; i + 1 < edges.size(); ++i) {
        auto p = detail::eval_panel(f, edges[i], edges[i + 1]);
        total += p.value;
        total_err += p.error;
        queue.push(p);
    }
    int n = static_cast<int>(queue.size());
    while (n < opt.max_panels) {
        if (total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) break;
        detail::Panel worst = queue.top();
        queue.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {  // interval exhausted at double precision
            queue.push({worst.a, worst.b, worst.value, 0.0});
            total_err -= worst.error;
            continue;
        }
        auto l = detail::eval_panel(f, worst.a, mid);
        auto r = detail::eval_panel(f, mid, worst.b);
        total += l.value + r.value - worst.value;
        total_err += l.error + r.error - worst.error;
        queue.push(l);
        queue.push(r);
        n += 1;
    }
    bool ok = total_err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(total)) + 1e-300;
    return {total, total_err, n, ok};
}

// ---------------------------------------------------------------------------
// Log-domain adaptive quadrature for nonnegative integrands given as log f.
// Panel sums and error estimates are accumulated by log-sum-exp, so the
// result is meaningful even when the integral is ~ e^{-10^4}.
// ---------------------------------------------------------------------------

struct LogQuadResult {
    double log_value = neg_inf;
    double log_abs_error = neg_inf;
    int panels = 0;
    bool converged = false;
};

namespace detail {

struct LogPanel {
    double a, b, log_value, log_error;
    bool operator<(const LogPanel& o) const { return log_error < o.log_error; }
};

template <class F>
LogPanel eval_log_panel(F&& logf, double a, double b) {
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double lhalf = std::log(half);
    LogAccumulator g7, k15;
    double l0 = logf(mid);
    g7.add(l0 + std::log(gk15_nodes[0][1]) + lhalf);
    k15.add(l0 + std::log(gk15_nodes[0][2]) + lhalf);
    for (int i = 1; i < 8; ++i) {
        double dx = half * gk15_nodes[i][0];
        double lp = logf(mid + dx), lm = logf(mid - dx);
        double li = log_add(lp, lm);
        if (gk15_nodes[i][1] > 0.0) g7.add(li + std::log(gk15_nodes[i][1]) + lhalf);
        k15.add(li + std::log(gk15_nodes[i][2]) + lhalf);
    }
    double lk = k15.log_value(), lg = g7.log_value();
    double lerr;
    if (lk == neg_inf && lg == neg_inf)
        lerr = neg_inf;
    else if (lg == neg_inf)
        lerr = lk;
    else {
        double diff = lg - lk;
        lerr = (std::abs(diff) < 2e-16) ? lk + std::log(2e-16)
                                        : lk + std::log(std::abs(std::expm1(diff)));
    }
    return {a, b, lk, lerr};
}

}  // namespace detail

template <class F>
LogQuadResult integrate_log(F&& logf, double a, double b, const QuadOptions& opt = {}) {
    std::priority_queue<detail::LogPanel> queue;
    std::vector<double> edges{a};
    for (double x : opt.breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());

    for (size_t i = 0; i + 1 < edges.size(); ++i)
        queue.push(detail::eval_log_panel(logf, edges[i], edges[i + 1]));

    int n = static_cast<int>(queue.size());
    auto totals = [&queue]() {
        LogAccumulator v, e;
        auto copy = queue;
        while (!copy.empty()) {
            v.add(copy.top().log_value);
            e.add(copy.top().log_error);
            copy.pop();
        }
        return std::pair<double, double>(v.log_value(), e.log_value());
    };

    double log_goal = std::log(opt.rel_tol);
    int since_check = 0, stalls = 0;
    double prev_le = pos_inf;
    while (n < opt.max_panels) {
        if (since_check == 0) {  // totals() walks the heap, so check in batches
            auto [lv, le] = totals();
            if (le == neg_inf || le <= lv + log_goal) break;
            // splitting cannot beat the per-panel rounding floor; stop once
            // the estimate stops improving
            if (le > prev_le - 0.05) {
                if (++stalls >= 3) break;
            } else {
                stalls = 0;
            }
            prev_le = le;
        }
        since_check = (since_check + 1) % 8;
        detail::LogPanel worst = queue.top();
        queue.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            queue.push({worst.a, worst.b, worst.log_value, neg_inf});
            continue;
        }
        queue.push(detail::eval_log_panel(logf, worst.a, mid));
        queue.push(detail::eval_log_panel(logf, mid, worst.b));
        n += 1;
    }
    auto [lv, le] = totals();
    return {lv, le, n, le == neg_inf || le <= lv + log_goal};
}

}  // namespace fracheat
