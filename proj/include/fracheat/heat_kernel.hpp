#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <vector>

#include "fracheat/convolution.hpp"
#include "fracheat/rate.hpp"

namespace fracheat {

// ---------------------------------------------------------------------------
// Poisson window control
// ---------------------------------------------------------------------------

struct WindowPolicy {
    double multiplier = 3.0;       // window half-width m * t^{3/4}
    double tail_tol = 1e-10;       // allowed Chernoff bound on dropped weight
    double small_t_cutoff = 25.0;  // below this t sum the full range instead
    double small_t_tail = 1e-14;
    bool auto_extend = true;       // grow m when the bound fails; else error
};

struct KWindow {
    long lo = 1, hi = 1;
    double log_tail = neg_inf;  // Chernoff bound on the dropped Poisson weight
};

// log of the Chernoff bound exp(-t h(k/t)) for either Poisson tail.
inline double poisson_chernoff_log(double t, double k) {
    if (k <= 0.0) return 0.0;
    double r = k / t;
    return -t * (r * std::log(r) - r + 1.0);
}

inline KWindow poisson_window(double t, const WindowPolicy& pol) {
    KWindow w;
    if (t <= pol.small_t_cutoff) {
        w.lo = 1;
        double hi = std::max(4.0, t + 10.0 * std::sqrt(t) + 10.0);
        while (poisson_chernoff_log(t, hi) > std::log(pol.small_t_tail)) hi *= 1.5;
        w.hi = static_cast<long>(std::ceil(hi));
        w.log_tail = poisson_chernoff_log(t, static_cast<double>(w.hi));
        return w;
    }
    double m = pol.multiplier;
    for (int attempt = 0;; ++attempt) {
        double half = m * std::pow(t, 0.75);
        long lo = std::max(1L, static_cast<long>(std::floor(t - half)));
        long hi = static_cast<long>(std::ceil(t + half));
        double tail_hi = poisson_chernoff_log(t, static_cast<double>(hi));
        double tail_lo = lo > 1 ? poisson_chernoff_log(t, static_cast<double>(lo)) : neg_inf;
        double tail = log_add(tail_hi, tail_lo);
        if (tail <= std::log(pol.tail_tol)) {
            w.lo = lo;
            w.hi = hi;
            w.log_tail = tail;
            return w;
        }
        if (!pol.auto_extend || attempt >= 40)
            fail("window-too-small",
                 "Poisson window tail bound exceeds tolerance; raise the window multiplier");
        m *= 1.3;
    }
}

// ---------------------------------------------------------------------------
// Scaled Poisson weights: w_k(t) = e^{-t} t^k / k! handled around the mode so
// t ~ 10^4 costs one lgamma and O(width) multiplies, with no under/overflow.
// Calls f(k, w_scaled); the true weight is w_scaled * exp(log_scale).
// ---------------------------------------------------------------------------

template <class F>
inline double for_poisson_weights(double t, long k_lo, long k_hi, F&& f) {
    long anchor = std::clamp(static_cast<long>(t), k_lo, k_hi);
    double log_scale = anchor * std::log(t) - t - std::lgamma(static_cast<double>(anchor) + 1.0);
    double w = 1.0;
    for (long k = anchor; k <= k_hi; ++k) {
        if (k > anchor) w *= t / static_cast<double>(k);
        if (w < 1e-320) break;
        f(k, w);
    }
    w = 1.0;
    for (long k = anchor - 1; k >= k_lo; --k) {
        w *= static_cast<double>(k + 1) / t;
        if (w < 1e-320) break;
        f(k, w);
    }
    return log_scale;
}

// Window half-extent (in steps) that holds a^{*k} up to k_max with dropped
// mass far below the audit budget, plus whatever probe offsets need covering.
inline Idx3 recommended_window_half(const DensityGrid& kernel, long k_max,
                                    const Vec3& extra_phys = {}) {
    KernelMoments mom = covariance(kernel);
    Idx3 half{};
    for (int i = 0; i < kernel.dim(); ++i) {
        double spread = 8.5 * std::sqrt(mom.sigma.at(i, i) * static_cast<double>(k_max));
        half[i] = static_cast<int>(std::ceil((spread + extra_phys[i]) / kernel.spacing()))
                + kernel.half_extent()[i] + 4;
    }
    return half;
}

// ---------------------------------------------------------------------------
// Gaussian/Legendre preview of log of the k-th series term; this never feeds
// a reported value, it only locates saddles and sizes windows and tilts.
// ---------------------------------------------------------------------------

class TermPreview {
public:
    TermPreview(std::shared_ptr<const Cumulant> L, const Vec3& x) : L_(std::move(L)), x_(x) {
        int d = L_->dim();
        k_min_ = 1;
        for (int i = 0; i < d; ++i) {
            double reach = L_->max_drift()[i];
            if (std::abs(x_[i]) > 0.0)
                k_min_ = std::max(k_min_, static_cast<long>(std::ceil(std::abs(x_[i]) / reach - 1e-12)));
        }
    }

    long k_min_support() const { return k_min_; }
    const Vec3& x() const { return x_; }

    // log a^{*k}(x) estimate by the local limit theorem around the tilted walk
    double log_ak_estimate(double k) const {
        int d = L_->dim();
        Vec3 w{};
        double clip = 1.0;
        for (int i = 0; i < d; ++i) {
            w[i] = x_[i] / k;
            clip = std::min(clip, 0.999999 * L_->max_drift()[i] / std::max(std::abs(w[i]), 1e-300));
        }
        if (clip < 1.0)
            for (int i = 0; i < d; ++i) w[i] *= clip;
        LegendreResult lr = legendre(*L_, w, {}, warm_ ? &warm_gamma_ : nullptr);
        warm_gamma_ = lr.gamma;
        warm_ = true;
        Cumulant::Eval e = L_->full(lr.gamma);
        double log_det = std::log(std::max(e.hess.det(), 1e-300));
        return -k * lr.I - 0.5 * d * std::log(2.0 * pi * k) - 0.5 * log_det;
    }

    double log_term(double k, double tau) const {
        return k * std::log(tau) - tau - std::lgamma(k + 1.0) + log_ak_estimate(k);
    }

    // Window of k whose estimated terms lie within `cutoff` nats of the best.
    KWindow window(double tau, double cutoff, long k_cap) const {
        long lo = k_min_, hi = std::max(k_cap, lo + 1);
        // coarse geometric probe, then local refinement around the best k
        double best = neg_inf;
        long k_star = lo;
        long n_probe = 48;
        for (long i = 0; i <= n_probe; ++i) {
            double frac = static_cast<double>(i) / n_probe;
            long k = lo + static_cast<long>((std::pow(static_cast<double>(hi - lo + 1), frac) - 1.0));
            double lt = log_term(static_cast<double>(k), tau);
            if (lt > best) {
                best = lt;
                k_star = k;
            }
        }
        for (int it = 0; it < 60; ++it) {
            long step = std::max(1L, k_star / 16);
            double up = k_star + step <= hi ? log_term(static_cast<double>(k_star + step), tau) : neg_inf;
            double dn = k_star - step >= lo ? log_term(static_cast<double>(k_star - step), tau) : neg_inf;
            if (up > best) { k_star += step; best = up; }
            else if (dn > best) { k_star -= step; best = dn; }
            else if (step == 1) break;
        }
        auto expand = [&](long from, int dir) {
            long k = from, step = 1;
            while (true) {
                long nk = k + dir * step;
                if (nk < lo || nk > hi) return dir < 0 ? std::max(lo, k - step) : std::min(hi, k + step);
                if (log_term(static_cast<double>(nk), tau) < best - cutoff) {
                    if (step == 1) return nk;
                    step = 1;
                    continue;
                }
                k = nk;
                step *= 2;
            }
        };
        KWindow w;
        w.lo = expand(k_star, -1);
        w.hi = expand(k_star, +1);
        w.log_tail = best - cutoff;  // everything outside is at least this deep
        return w;
    }

private:
    std::shared_ptr<const Cumulant> L_;
    Vec3 x_;
    long k_min_ = 1;
    mutable Vec3 warm_gamma_{};
    mutable bool warm_ = false;
};

// ---------------------------------------------------------------------------
// Exact log a^{*k}(x) tables via exponential tilting.  One tilt cannot keep
// the whole k range representable in doubles, so the range is split into
// segments whose within-segment tilt mismatch stays under `budget` nats.
// ---------------------------------------------------------------------------

struct LogPowerTable {
    Idx3 x{};
    long k_lo = 1;
    std::vector<double> log_ak;  // index k - k_lo

    double at(long k) const {
        if (k < k_lo || k >= k_lo + static_cast<long>(log_ak.size())) return neg_inf;
        return log_ak[static_cast<size_t>(k - k_lo)];
    }
    long k_hi() const { return k_lo + static_cast<long>(log_ak.size()) - 1; }
};

namespace detail {

struct TiltSegment {
    long k1, k2;
    Vec3 gamma{};
    double log_norm;
};

// D_gamma(k) = k (I(x/k) - gamma.(x/k) + L(gamma)) >= 0: the nats by which the
// gamma-tilted walk misses a^{*k}(x)'s own saddle.
inline double tilt_mismatch(const Cumulant& L, const TermPreview& pv, const Vec3& x,
                            const Vec3& gamma, double L_gamma, double k) {
    int d = L.dim();
    Vec3 w{};
    double clip = 1.0;
    for (int i = 0; i < d; ++i) {
        w[i] = x[i] / k;
        clip = std::min(clip, 0.999999 * L.max_drift()[i] / std::max(std::abs(w[i]), 1e-300));
    }
    if (clip < 1.0)
        for (int i = 0; i < d; ++i) w[i] *= clip;
    LegendreResult lr = legendre(L, w);
    (void)pv;
    return k * (lr.I - dot(d, gamma, w) + L_gamma);
}

inline Vec3 tilt_at(const Cumulant& L, const Vec3& x, double k) {
    int d = L.dim();
    Vec3 w{};
    double clip = 1.0;
    for (int i = 0; i < d; ++i) {
        w[i] = x[i] / k;
        clip = std::min(clip, 0.999999 * L.max_drift()[i] / std::max(std::abs(w[i]), 1e-300));
    }
    if (clip < 1.0)
        for (int i = 0; i < d; ++i) w[i] *= clip;
    return legendre(L, w).gamma;
}

}  // namespace detail

// Build log a^{*k}(x) for k in [k_lo, k_hi] with segmented tilts.
inline LogPowerTable build_log_power_table(const DensityGrid& kernel,
                                           std::shared_ptr<const Cumulant> L,
                                           const Idx3& x_steps, long k_lo, long k_hi,
                                           double budget = 20.0,
                                           double discard_budget = 1e-8) {
    int d = kernel.dim();
    double h = kernel.spacing();
    Vec3 x{};
    for (int i = 0; i < d; ++i) x[i] = x_steps[i] * h;

    TermPreview pv(L, x);
    k_lo = std::max(k_lo, pv.k_min_support());
    LogPowerTable table;
    table.x = x_steps;
    table.k_lo = k_lo;
    if (k_lo > k_hi) return table;
    table.log_ak.assign(static_cast<size_t>(k_hi - k_lo + 1), neg_inf);

    // --- segmentation ---
    std::vector<detail::TiltSegment> segments;
    long k1 = k_lo;
    while (k1 <= k_hi) {
        // largest anchor khat >= k1 such that the tilt at khat still covers k1
        long khat = k1;
        {
            long lo = k1, hi = k_hi;
            while (lo < hi) {
                long mid = lo + (hi - lo + 1) / 2;
                Vec3 g = detail::tilt_at(*L, x, static_cast<double>(mid));
                double Lg = L->value(g);
                double D = detail::tilt_mismatch(*L, pv, x, g, Lg, static_cast<double>(k1));
                if (D <= budget) lo = mid; else hi = mid - 1;
            }
            khat = lo;
        }
        Vec3 gamma = detail::tilt_at(*L, x, static_cast<double>(khat));
        double Lg = L->value(gamma);
        // furthest k2 >= khat the same tilt still covers
        long k2 = khat;
        {
            long lo = khat, hi = k_hi;
            while (lo < hi) {
                long mid = lo + (hi - lo + 1) / 2;
                double D = detail::tilt_mismatch(*L, pv, x, gamma, Lg, static_cast<double>(mid));
                if (D <= budget) lo = mid; else hi = mid - 1;
            }
            k2 = lo;
        }
        k2 = std::max(k2, k1);
        segments.push_back({k1, k2, gamma, 0.0});
        k1 = k2 + 1;
    }

    // --- per-segment tilted scans ---
    for (auto& seg : segments) {
        TiltedKernel tk = make_tilted(kernel, seg.gamma);
        seg.log_norm = tk.log_norm;
        Cumulant::Eval e = L->full(seg.gamma);
        Idx3 half{};
        size_t cells = 1;
        for (int i = 0; i < d; ++i) {
            double drift = std::abs(e.grad[i]) * static_cast<double>(seg.k2);
            double spread = 8.0 * std::sqrt(std::max(e.hess.at(i, i), 0.0) * static_cast<double>(seg.k2));
            double ext = std::max(std::abs(x[i]), drift) + spread;
            half[i] = static_cast<int>(std::ceil(ext / h)) + kernel.half_extent()[i] + 4;
            cells *= static_cast<size_t>(2 * half[i] + 1);
        }
        if (cells > DensityGrid::max_cells)
            fail("overflow-of-extent", "tilted power scan exceeds the memory budget");
        try {
            PowerScan scan(tk.grid, half, StepMethod::fft);
            scan.discard_budget = discard_budget;
            scan.run(seg.k2, [&](const PowerScan::View& view) {
                if (view.k < seg.k1) return;
                double v = view.value_at(x_steps);
                double lv = v > 0.0 ? static_cast<double>(view.k) * seg.log_norm - dot(d, seg.gamma, x)
                                      + std::log(v)
                                    : neg_inf;
                table.log_ak[static_cast<size_t>(view.k - table.k_lo)] = lv;
            });
        } catch (const Error& err) {
            if (std::string(err.code()) == "window-discard-budget")
                fail("tilt-out-of-range", "tilted walk escaped the scan window");
            throw;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// HeatKernelEvaluator: q(x,t) = sum_k e^{-t} t^k/k! a^{*k}(x).
// Immutable after the prepare_* build phase; evaluation methods are const.
// ---------------------------------------------------------------------------

class HeatKernelEvaluator {
public:
    struct Options {
        WindowPolicy window;
        double discard_budget = 1e-8;
        double log_segment_budget = 20.0;
    };

    HeatKernelEvaluator(std::shared_ptr<const DensityGrid> kernel, const Idx3& window_half,
                        Options opt, std::shared_ptr<const Cumulant> cumulant = nullptr)
        : a_(std::move(kernel)), half_(window_half), opt_(opt), cumulant_(std::move(cumulant)) {
        a_sup_ = 0.0;
        for (double v : a_->values()) a_sup_ = std::max(a_sup_, v);
    }

    HeatKernelEvaluator(std::shared_ptr<const DensityGrid> kernel, const Idx3& window_half)
        : HeatKernelEvaluator(std::move(kernel), window_half, Options{}) {}

    const DensityGrid& kernel() const { return *a_; }
    const Idx3& window_half() const { return half_; }
    const Options& options() const { return opt_; }
    std::shared_ptr<const Cumulant> cumulant() const { return cumulant_; }
    long prepared_k_max() const { return k_max_; }

    // ---- build phase ----

    void register_probe(const Idx3& x) {
        if (!probes_.count(x)) probes_[x] = {};
    }

    // One stepwise scan: probe tables, the center column, and power-of-two
    // checkpoint grids for cold evaluations.
    void prepare(long k_max) {
        if (k_max <= k_max_ && !probes_dirty_()) return;
        k_max = std::max(k_max, k_max_);
        for (auto& [x, col] : probes_) col.assign(static_cast<size_t>(k_max), 0.0);
        center_.assign(static_cast<size_t>(k_max), 0.0);
        checkpoints_.clear();
        PowerScan scan(*a_, half_);
        scan.discard_budget = opt_.discard_budget;
        Idx3 origin{};
        scan.run(k_max, [&](const PowerScan::View& view) {
            size_t i = static_cast<size_t>(view.k - 1);
            center_[i] = view.value_at(origin);
            for (auto& [x, col] : probes_) col[i] = view.value_at(x);
            if ((view.k & (view.k - 1)) == 0) checkpoints_.emplace_back(view.k, view.extract());
        });
        k_max_ = k_max;
    }

    void prepare_probes(const std::vector<Idx3>& pts, long k_max) {
        for (const Idx3& x : pts) register_probe(x);
        prepare(k_max);
    }

    void prepare_log_probe(const Idx3& x, long k_lo, long k_hi) {
        if (!cumulant_) fail_validation("missing-cumulant", "log route needs a cumulant evaluator");
        auto it = log_probes_.find(x);
        if (it != log_probes_.end() && it->second.k_lo <= std::max(k_lo, 1L) &&
            it->second.k_hi() >= k_hi)
            return;
        log_probes_[x] = build_log_power_table(*a_, cumulant_, x, k_lo, k_hi,
                                               opt_.log_segment_budget, opt_.discard_budget);
    }

    // ---- q evaluation ----

    struct QResult {
        double value = 0.0;
        double remainder_bound = 0.0;
        KWindow window;
    };

    QResult q_eval_detailed(const Idx3& x, double t) const {
        if (!(t > 0.0)) fail_validation("nonpositive-argument", "q_eval requires t > 0");
        KWindow w = poisson_window(t, opt_.window);
        QResult r;
        r.window = w;
        r.remainder_bound = std::exp(w.log_tail) * a_sup_;
        auto probe = probes_.find(x);
        if (probe != probes_.end() && k_max_ >= w.hi) {
            r.value = weighted_sum(t, w, probe->second);
            return r;
        }
        if (static_cast<long>(center_.size()) >= w.hi && is_origin(x)) {
            r.value = weighted_sum(t, w, center_);
            return r;
        }
        r.value = cold_eval(x, t, w);
        return r;
    }

    double q_eval(const Idx3& x, double t) const { return q_eval_detailed(x, t).value; }

    // Windowed sum over a probe column, window clamped to the table.  If the
    // clamp would cut off non-negligible Poisson weight the table was sized
    // too small and this is an error, not a silent truncation.
    double q_from_table(const Idx3& x, double t, const KWindow& w) const {
        auto probe = probes_.find(x);
        if (probe == probes_.end())
            fail("probe-not-prepared", "q_from_table: probe was not registered");
        KWindow cw = w;
        if (cw.hi > k_max_) {
            if (poisson_chernoff_log(t, static_cast<double>(k_max_)) >
                std::log(opt_.window.tail_tol))
                fail("window-too-small", "probe table ends inside the Poisson window");
            cw.hi = k_max_;
        }
        return weighted_sum(t, cw, probe->second);
    }

    // log q by log-sum-exp over the full prepared log table.
    double q_log_eval(const Idx3& x, double t) const {
        auto it = log_probes_.find(x);
        if (it == log_probes_.end())
            fail("probe-not-prepared", "q_log_eval: call prepare_log_probe first");
        const LogPowerTable& tab = it->second;
        if (!(t > 0.0)) fail_validation("nonpositive-argument", "q_log_eval requires t > 0");
        LogAccumulator acc;
        double log_t = std::log(t);
        long k0 = tab.k_lo;
        double log_w = k0 * log_t - t - std::lgamma(static_cast<double>(k0) + 1.0);
        for (long k = k0; k <= tab.k_hi(); ++k) {
            if (k > k0) log_w += log_t - std::log(static_cast<double>(k));
            double la = tab.at(k);
            if (la != neg_inf) acc.add(log_w + la);
        }
        return acc.log_value();
    }

    const LogPowerTable* log_table(const Idx3& x) const {
        auto it = log_probes_.find(x);
        return it == log_probes_.end() ? nullptr : &it->second;
    }

    // a^{*k}(x), k = 1..prepared_k_max, for a registered probe.
    const std::vector<double>* probe_column(const Idx3& x) const {
        auto it = probes_.find(x);
        return it == probes_.end() ? nullptr : &it->second;
    }

    // a^{*k}(0) column (always collected by prepare).
    const std::vector<double>& center_column() const { return center_; }

    // Full q(.,t) grid via one scan (or the probe cache when wide enough).
    DensityGrid q_grid(double t) const {
        KWindow w = poisson_window(t, opt_.window);
        DensityGrid out(a_->dim(), a_->spacing(), half_);
        PowerScan scan(*a_, half_);
        scan.discard_budget = opt_.discard_budget;
        std::vector<double> weights(static_cast<size_t>(w.hi) + 1, 0.0);
        double log_scale = for_poisson_weights(t, w.lo, w.hi, [&](long k, double ws) {
            weights[static_cast<size_t>(k)] = ws;
        });
        double scale = std::exp(log_scale);
        scan.run(w.hi, [&](const PowerScan::View& view) {
            if (view.k < w.lo) return;
            double wk = weights[static_cast<size_t>(view.k)] * scale;
            if (wk <= 0.0) return;
            view.for_each([&](const Idx3& xi, double v) {
                out.ref(xi) += wk * v;
            });
        });
        out.set_mass(out.measured_mass());
        return out;
    }

private:
    bool probes_dirty_() const {
        for (const auto& [x, col] : probes_)
            if (static_cast<long>(col.size()) < k_max_) return true;
        return false;
    }

    bool is_origin(const Idx3& x) const {
        for (int i = 0; i < a_->dim(); ++i)
            if (x[i] != 0) return false;
        return true;
    }

    double weighted_sum(double t, const KWindow& w, const std::vector<double>& col) const {
        if (w.lo > w.hi) return 0.0;
        KahanSum s;
        double log_scale = for_poisson_weights(t, w.lo, std::min<long>(w.hi, col.size()),
                                               [&](long k, double ws) {
            s.add(ws * col[static_cast<size_t>(k - 1)]);
        });
        double scale = std::exp(log_scale);
        return scale > 0.0 ? s.value() * scale : 0.0;
    }

    double cold_eval(const Idx3& x, double t, const KWindow& w) const {
        // start from the nearest cached checkpoint below the window
        const DensityGrid* start = nullptr;
        long k0 = 1;
        for (const auto& [k, g] : checkpoints_) {
            if (k <= w.lo && k > k0) {
                k0 = k;
                start = &g;
            }
        }
        KahanSum s;
        std::vector<double> weights(static_cast<size_t>(w.hi) + 1, 0.0);
        double log_scale = for_poisson_weights(t, w.lo, w.hi, [&](long k, double ws) {
            weights[static_cast<size_t>(k)] = ws;
        });
        auto visit = [&](const PowerScan::View& view) {
            if (view.k < w.lo) return;
            s.add(weights[static_cast<size_t>(view.k)] * view.value_at(x));
        };
        if (start) {
            PowerScan scan(*a_, half_, *start, k0);
            scan.discard_budget = opt_.discard_budget;
            scan.run(w.hi, visit);
        } else {
            PowerScan scan(*a_, half_);
            scan.discard_budget = opt_.discard_budget;
            scan.run(w.hi, visit);
        }
        double scale = std::exp(log_scale);
        return scale > 0.0 ? s.value() * scale : 0.0;
    }

    std::shared_ptr<const DensityGrid> a_;
    Idx3 half_;
    Options opt_;
    std::shared_ptr<const Cumulant> cumulant_;
    double a_sup_ = 0.0;
    long k_max_ = 0;
    std::map<Idx3, std::vector<double>> probes_;
    std::map<Idx3, LogPowerTable> log_probes_;
    std::vector<double> center_;
    std::vector<std::pair<long, DensityGrid>> checkpoints_;
};

// ---------------------------------------------------------------------------
// Two-sided Gaussian band for q:
//   c1 s^{-d/2} exp(-c2 |x|^2/s) <= q(x,s) <= c3 s^{-d/2} exp(-c4 |x|^2/s).
// A single exponent c is fitted by least squares on y = log q + (d/2) log s
// against u = |x|^2/s; the envelopes then give c1, c3 (and c2 = c4 = c, which
// satisfies the required c2 >= c4).
// ---------------------------------------------------------------------------

struct GaussianBandReport {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    bool pass = false;
    double onset_s = 0.0;     // smallest s from which the fitted band holds
    double band_ratio = 0.0;  // c3/c1, looseness of the band
    int samples = 0;
};

inline GaussianBandReport gaussian_band_check(HeatKernelEvaluator& ev,
                                              const std::vector<double>& s_list,
                                              const std::vector<Idx3>& x_list) {
    const DensityGrid& a = ev.kernel();
    int d = a.dim();
    double h = a.spacing();
    for (const Idx3& x : x_list) {
        Vec3 xp{};
        for (int i = 0; i < d; ++i) xp[i] = x[i] * h;
        for (double s : s_list)
            if (norm(d, xp) > s)
                fail("region-violation", "gaussian band check requires |x| <= s");
    }
    double s_max = *std::max_element(s_list.begin(), s_list.end());
    KWindow w = poisson_window(s_max, ev.options().window);
    ev.prepare_probes(x_list, w.hi);

    struct Sample { double s, u, y; };
    std::vector<Sample> samples;
    for (double s : s_list) {
        for (const Idx3& x : x_list) {
            double q = ev.q_eval(x, s);
            double lq;
            if (q > 1e-290) {
                lq = std::log(q);
            } else {
                KWindow ws = poisson_window(s, ev.options().window);
                ev.prepare_log_probe(x, 1, ws.hi);
                lq = ev.q_log_eval(x, s);
            }
            Vec3 xp{};
            for (int i = 0; i < d; ++i) xp[i] = x[i] * h;
            double u = dot(d, xp, xp) / s;
            samples.push_back({s, u, lq + 0.5 * d * std::log(s)});
        }
    }

    GaussianBandReport rep;
    rep.samples = static_cast<int>(samples.size());
    double su = 0, sy = 0, suu = 0, suy = 0;
    for (const Sample& sm : samples) {
        su += sm.u;
        sy += sm.y;
        suu += sm.u * sm.u;
        suy += sm.u * sm.y;
    }
    double n = static_cast<double>(samples.size());
    double var = suu - su * su / n;
    double c = var > 0.0 ? -(suy - su * sy / n) / var : 0.0;
    rep.c2 = rep.c4 = c;
    double lo = pos_inf, hi = neg_inf;
    for (const Sample& sm : samples) {
        lo = std::min(lo, sm.y + c * sm.u);
        hi = std::max(hi, sm.y + c * sm.u);
    }
    rep.c1 = std::exp(lo);
    rep.c3 = std::exp(hi);
    rep.band_ratio = std::exp(hi - lo);
    rep.pass = c > 0.0 && std::isfinite(rep.c1) && rep.c1 > 0.0 && std::isfinite(rep.c3);

    // onset: smallest s from which every sample at s' >= s sits inside the band
    std::vector<double> sorted_s = s_list;
    std::sort(sorted_s.begin(), sorted_s.end());
    rep.onset_s = sorted_s.back();
    for (auto it = sorted_s.rbegin(); it != sorted_s.rend(); ++it) {
        bool ok = true;
        for (const Sample& sm : samples)
            if (sm.s >= *it && (sm.y + c * sm.u < lo - 1e-9 || sm.y + c * sm.u > hi + 1e-9))
                ok = false;
        if (!ok) break;
        rep.onset_s = *it;
    }
    return rep;
}

}  // namespace fracheat
