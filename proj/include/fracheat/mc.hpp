#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "fracheat/grid.hpp"
#include "fracheat/zolotarev.hpp"

namespace fracheat {

// ---------------------------------------------------------------------------
// Philox4x32-10 counter-based generator: identical (seed, stream, counter)
// always reproduces the same draw, and distinct streams are independent, so
// sampling parallelizes with no coordination and byte-identical results.
// ---------------------------------------------------------------------------

class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream) {
        key0_ = static_cast<std::uint32_t>(seed) ^ 0x243F6A88u;
        key1_ = static_cast<std::uint32_t>(seed >> 32)
              ^ static_cast<std::uint32_t>(stream * 0x9E3779B97F4A7C15ull >> 32);
        key0_ ^= static_cast<std::uint32_t>(stream);
    }

    std::array<std::uint32_t, 4> block(std::uint64_t sample, std::uint32_t draw_block) const {
        std::uint32_t c0 = static_cast<std::uint32_t>(sample);
        std::uint32_t c1 = static_cast<std::uint32_t>(sample >> 32);
        std::uint32_t c2 = draw_block;
        std::uint32_t c3 = 0x5851F42Du;
        std::uint32_t k0 = key0_, k1 = key1_;
        for (int round = 0; round < 10; ++round) {
            std::uint64_t p0 = 0xD2511F53ull * c0;
            std::uint64_t p1 = 0xCD9E8D57ull * c2;
            std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            c0 = hi1 ^ c1 ^ k0;
            c1 = lo1;
            c2 = hi0 ^ c3 ^ k1;
            c3 = lo0;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }

    // uniform in (0,1), 53-bit resolution; draw indexes are per sample
    double uniform(std::uint64_t sample, std::uint32_t draw) const {
        auto b = block(sample, draw >> 1);
        std::uint64_t bits = (draw & 1)
            ? (static_cast<std::uint64_t>(b[2]) << 32) | b[3]
            : (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
        return (static_cast<double>(bits >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double exponential(std::uint64_t sample, std::uint32_t draw) const {
        return -std::log(uniform(sample, draw));
    }

private:
    std::uint32_t key0_, key1_;
};

// Poisson sampler: product inversion for small means, Hormann's PTRS
// transformed rejection for large ones.  Draws are consumed from the given
// per-sample draw region; the count used is deterministic per counter.
inline long poisson_draw(const RngStream& rng, std::uint64_t sample, std::uint32_t draw_base,
                         double lambda) {
    if (lambda <= 0.0) return 0;
    if (lambda < 10.0) {
        double limit = std::exp(-lambda);
        double prod = 1.0;
        for (long k = 0; k < 512; ++k) {
            prod *= rng.uniform(sample, draw_base + static_cast<std::uint32_t>(k));
            if (prod <= limit) return k;
        }
        fail("rng-budget-exceeded", "poisson inversion exceeded its draw budget");
    }
    double b = 0.931 + 2.53 * std::sqrt(lambda);
    double a = -0.059 + 0.02483 * b;
    double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    double v_r = 0.9277 - 3.6224 / (b - 2.0);
    double log_lambda = std::log(lambda);
    for (int attempt = 0; attempt < 256; ++attempt) {
        double U = rng.uniform(sample, draw_base + 2 * attempt) - 0.5;
        double V = rng.uniform(sample, draw_base + 2 * attempt + 1);
        double us = 0.5 - std::abs(U);
        long k = static_cast<long>(std::floor((2.0 * a / us + b) * U + lambda + 0.43));
        if (us >= 0.07 && V <= v_r) return k;
        if (k < 0 || (us < 0.013 && V > us)) continue;
        double lhs = std::log(V * inv_alpha / (a / (us * us) + b));
        double rhs = k * log_lambda - lambda - std::lgamma(static_cast<double>(k) + 1.0);
        if (lhs <= rhs) return k;
    }
    fail("rng-budget-exceeded", "poisson rejection exceeded its attempt budget");
}

// ---------------------------------------------------------------------------
// Samplers for the subordination stack
// ---------------------------------------------------------------------------

// Kanter's sampler for the one-sided alpha-stable law (LT e^{-lambda^a}):
// S = (A(pi U)/E)^{(1-a)/a}, computed in logs so extreme draws survive.
inline double sample_stable_one(const RngStream& rng, double alpha, std::uint64_t i,
                                std::uint32_t draw_base = 0) {
    double U = rng.uniform(i, draw_base);
    double E = rng.exponential(i, draw_base + 1);
    double logA = log_zolotarev_A(alpha, pi * U);
    return std::exp((1.0 - alpha) / alpha * (logA - std::log(E)));
}

inline std::vector<double> sample_stable(double alpha, std::size_t n, const RngStream& rng) {
    if (!(alpha > 0.0) || !(alpha < 1.0))
        fail_validation("alpha-out-of-range", "stable sampler needs alpha in (0,1)");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = sample_stable_one(rng, alpha, i);
    return out;
}

// V_t = (t / S_1)^alpha in distribution (self-similarity of the inverse).
inline double sample_inverse_subordinator_one(const RngStream& rng, double alpha, double t,
                                              std::uint64_t i, std::uint32_t draw_base = 0) {
    double U = rng.uniform(i, draw_base);
    double E = rng.exponential(i, draw_base + 1);
    double logA = log_zolotarev_A(alpha, pi * U);
    double logS = (1.0 - alpha) / alpha * (logA - std::log(E));
    return std::exp(alpha * (std::log(t) - logS));
}

inline std::vector<double> sample_inverse_subordinator(double alpha, double t, std::size_t n,
                                                       const RngStream& rng) {
    if (!(t > 0.0)) fail_validation("nonpositive-argument", "inverse subordinator needs t > 0");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = sample_inverse_subordinator_one(rng, alpha, t, i);
    return out;
}

// Lattice sampler for the step kernel by inverse CDF over the flattened grid,
// so the draws follow exactly the discretized a used everywhere else.
class KernelSampler {
public:
    explicit KernelSampler(std::shared_ptr<const DensityGrid> a) : a_(std::move(a)) {
        cdf_.reserve(a_->size());
        double run = 0.0;
        for (double v : a_->values()) {
            run += v;
            cdf_.push_back(run);
        }
        total_ = run;
    }

    Idx3 draw(const RngStream& rng, std::uint64_t sample, std::uint32_t draw_index) const {
        double u = rng.uniform(sample, draw_index) * total_;
        size_t idx = std::lower_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin();
        if (idx >= cdf_.size()) idx = cdf_.size() - 1;
        return a_->unindex(idx);
    }

private:
    std::shared_ptr<const DensityGrid> a_;
    std::vector<double> cdf_;
    double total_ = 0.0;
};

struct TimechangedSample {
    std::size_t atom_count = 0;       // draws with zero jumps: the surviving atom
    std::vector<Idx3> positions;      // lattice endpoints of the remaining draws
};

// Y = X_{V_t}: draw r ~ V_t, N ~ Poisson(r), then N kernel jumps.
inline TimechangedSample sample_timechanged(double alpha, double t, std::size_t n,
                                            const RngStream& rng, const KernelSampler& kernel,
                                            int d) {
    TimechangedSample out;
    out.positions.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double r = sample_inverse_subordinator_one(rng, alpha, t, i, 0);
        long jumps = poisson_draw(rng, i, 2, r);
        if (jumps == 0) {
            out.atom_count += 1;
            continue;
        }
        Idx3 pos{};
        for (long j = 0; j < jumps; ++j) {
            Idx3 step = kernel.draw(rng, i, 1536 + static_cast<std::uint32_t>(j));
            for (int k = 0; k < d; ++k) pos[k] += step[k];
        }
        out.positions.push_back(pos);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Empirical densities and calibration statistics
// ---------------------------------------------------------------------------

struct EmpiricalDensity {
    std::vector<double> edges;    // bin edges, size = bins + 1
    std::vector<std::size_t> counts;
    std::vector<double> heights;  // density estimate per bin
    std::vector<double> stderrs;  // standard error of each height
    std::size_t n_total = 0;      // includes out-of-range draws

    static EmpiricalDensity from_samples(const std::vector<double>& xs, double lo, double hi,
                                         int bins) {
        EmpiricalDensity e;
        e.n_total = xs.size();
        e.edges.resize(bins + 1);
        for (int b = 0; b <= bins; ++b)
            e.edges[b] = lo + (hi - lo) * static_cast<double>(b) / bins;
        e.counts.assign(bins, 0);
        for (double x : xs) {
            if (x < lo || x >= hi) continue;
            int b = static_cast<int>((x - lo) / (hi - lo) * bins);
            b = std::clamp(b, 0, bins - 1);
            e.counts[static_cast<size_t>(b)] += 1;
        }
        e.finalize();
        return e;
    }

    void finalize() {
        heights.resize(counts.size());
        stderrs.resize(counts.size());
        double n = static_cast<double>(n_total);
        for (size_t b = 0; b < counts.size(); ++b) {
            double width = edges[b + 1] - edges[b];
            double phat = static_cast<double>(counts[b]) / n;
            heights[b] = phat / width;
            stderrs[b] = std::sqrt(std::max(phat * (1.0 - phat), 1e-300) / n) / width;
        }
    }

    // in-range mass integrates to exactly sum(counts)/n
    double integral() const {
        double s = 0.0;
        for (size_t b = 0; b < counts.size(); ++b) s += heights[b] * (edges[b + 1] - edges[b]);
        return s;
    }
};

// Kolmogorov-Smirnov distance of sorted draws against a CDF, evaluated on a
// quantile mesh (mesh slack ~ 1/mesh_points, far below the critical values
// used at the calibration sizes).
template <class Cdf>
double ks_distance(std::vector<double> xs, Cdf&& cdf, int mesh_points = 4096) {
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (int m = 0; m <= mesh_points; ++m) {
        size_t i = static_cast<size_t>(std::min<double>(
            n - 1.0, std::round(m * (n - 1.0) / mesh_points)));
        double x = xs[i];
        double F = cdf(x);
        double lo = static_cast<double>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
        double hi = static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
        d = std::max({d, std::abs(F - lo), std::abs(hi - F)});
    }
    return d;
}

// 1% critical value of the KS statistic (asymptotic).
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace fracheat
