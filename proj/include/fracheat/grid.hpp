#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fracheat/common.hpp"

namespace fracheat {

// Lattice kernel family a(x) ~ exp(-b |x|^p), truncated to the box
// [-R, R]^d and sampled with spacing h.  p > 1 gives the super-exponential
// decay every estimate downstream relies on.
struct KernelSpec {
    int d = 1;
    double p = 2.0;      // tail exponent
    double b = 1.0;      // tail rate
    double R = 8.0;      // cutoff radius (box half-width)
    double h = 1.0 / 16; // lattice spacing
    std::string shape = "exp(-b|x|^p)";

    void validate() const {
        if (d < 1 || d > 3) fail_validation("dimension-out-of-range", "d must be 1, 2 or 3");
        if (!(p > 1.0)) fail_validation("tail-exponent-out-of-range", "p must exceed 1");
        if (!(b > 0.0)) fail_validation("tail-rate-out-of-range", "b must be positive");
        if (!(R > 0.0) || !(h > 0.0)) fail_validation("bad-lattice", "R and h must be positive");
        double steps = R / h;
        if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
            fail_validation("bad-lattice", "R/h must be an integer");
    }

    int steps_per_axis() const { return static_cast<int>(std::round(R / h)); }
    bool separable() const { return p == 2.0; }
};

// A nonnegative function sampled on the uniform lattice h*Z^d restricted to a
// centered box.  `values` are density values: mass = h^d * sum(values).
// With `log_domain` set, values hold natural logs (-inf encodes zero).
class DensityGrid {
public:
    DensityGrid() = default;
    DensityGrid(int d, double h, const Idx3& half_extent, bool log_domain = false)
        : d_(d), h_(h), half_(half_extent), log_(log_domain) {
        size_t n = 1;
        for (int i = 0; i < d_; ++i) {
            if (half_[i] < 0) fail_validation("bad-lattice", "negative extent");
            n *= static_cast<size_t>(2 * half_[i] + 1);
        }
        if (n > max_cells) fail("overflow-of-extent", "requested grid exceeds the memory budget");
        values_.assign(n, log_ ? neg_inf : 0.0);
    }

    static constexpr size_t max_cells = size_t(1) << 28;  // ~2 GiB of doubles

    int dim() const { return d_; }
    double spacing() const { return h_; }
    const Idx3& half_extent() const { return half_; }
    int axis_size(int i) const { return 2 * half_[i] + 1; }
    bool log_domain() const { return log_; }
    size_t size() const { return values_.size(); }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }

    double mass() const { return mass_; }
    void set_mass(double m) { mass_ = m; }

    double cell_volume() const {
        double v = 1.0;
        for (int i = 0; i < d_; ++i) v *= h_;
        return v;
    }

    bool contains(const Idx3& x) const {
        for (int i = 0; i < d_; ++i)
            if (x[i] < -half_[i] || x[i] > half_[i]) return false;
        return true;
    }

    size_t index(const Idx3& x) const {
        size_t idx = 0;
        for (int i = 0; i < d_; ++i) idx = idx * static_cast<size_t>(2 * half_[i] + 1)
                                           + static_cast<size_t>(x[i] + half_[i]);
        return idx;
    }

    Idx3 unindex(size_t idx) const {
        Idx3 x{};
        for (int i = d_ - 1; i >= 0; --i) {
            size_t n = static_cast<size_t>(2 * half_[i] + 1);
            x[i] = static_cast<int>(idx % n) - half_[i];
            idx /= n;
        }
        return x;
    }

    double at(const Idx3& x) const {
        if (!contains(x)) return log_ ? neg_inf : 0.0;
        return values_[index(x)];
    }

    double& ref(const Idx3& x) { return values_[index(x)]; }

    Vec3 point(const Idx3& x) const {
        Vec3 v{};
        for (int i = 0; i < d_; ++i) v[i] = x[i] * h_;
        return v;
    }

    double sum() const {
        KahanSum s;
        for (double v : values_) s.add(v);
        return s.value();
    }

    double measured_mass() const { return cell_volume() * sum(); }

    template <class F>
    void for_each(F&& f) const {
        for (size_t i = 0; i < values_.size(); ++i) f(unindex(i), values_[i]);
    }

private:
    int d_ = 1;
    double h_ = 1.0;
    Idx3 half_{};
    bool log_ = false;
    double mass_ = 0.0;
    std::vector<double> values_;
};

// Second moments of a unit-mass grid.
struct KernelMoments {
    SymMat sigma;
    Vec3 mean{};
};

// Sample exp(-b|x|^p) on the lattice and renormalize to unit mass.
// The truncated tail must be negligible before renormalization.
inline DensityGrid build_kernel(const KernelSpec& spec) {
    spec.validate();
    int n = spec.steps_per_axis();
    if (2 * n + 1 < 16)
        fail("spacing-too-coarse", "fewer than 16 lattice nodes per axis");
    if (std::exp(-spec.b * std::pow(spec.R, spec.p)) >= 1e-14)
        fail("cutoff-too-small", "exp(-b R^p) >= 1e-14: tail truncation not negligible");

    // 1-D truncated-tail estimate: int_R^inf e^{-b r^p} dr <= e^{-b R^p}/(b p R^{p-1}),
    // against a crude lower bound for the kept mass.  Union bound over axes.
    double tail_1d = std::exp(-spec.b * std::pow(spec.R, spec.p)) / (spec.b * spec.p * std::pow(spec.R, spec.p - 1.0));
    double kept_1d_lb = spec.h;  // at least the central cell, value 1 at x=0
    if (spec.d * tail_1d / kept_1d_lb > 1e-10)
        fail("cutoff-too-small", "truncated tail mass above 1e-10 before renormalization");

    Idx3 half{};
    for (int i = 0; i < spec.d; ++i) half[i] = n;
    DensityGrid g(spec.d, spec.h, half);
    KahanSum total;
    for (size_t i = 0; i < g.size(); ++i) {
        Idx3 x = g.unindex(i);
        double r2 = 0.0;
        for (int k = 0; k < spec.d; ++k) {
            double xi = x[k] * spec.h;
            r2 += xi * xi;
        }
        double v = std::exp(-spec.b * std::pow(std::sqrt(r2), spec.p));
        g.values()[i] = v;
        total.add(v);
    }
    double norm = total.value() * g.cell_volume();
    for (double& v : g.values()) v /= norm;
    g.set_mass(1.0);
    return g;
}

// sigma_ij = h^d sum x_i x_j a(x); the mean must vanish (symmetric kernels).
inline KernelMoments covariance(const DensityGrid& a) {
    if (a.log_domain()) fail_validation("log-domain-input", "covariance expects a linear-domain grid");
    int d = a.dim();
    double vol = a.cell_volume();
    std::array<KahanSum, 3> mean;
    std::array<std::array<KahanSum, 3>, 3> second;
    a.for_each([&](const Idx3& xi, double v) {
        Vec3 x = a.point(xi);
        for (int i = 0; i < d; ++i) {
            mean[i].add(x[i] * v);
            for (int j = 0; j < d; ++j) second[i][j].add(x[i] * x[j] * v);
        }
    });
    KernelMoments m;
    m.sigma.d = d;
    double mean_norm = 0.0;
    for (int i = 0; i < d; ++i) {
        m.mean[i] = mean[i].value() * vol;
        mean_norm += m.mean[i] * m.mean[i];
    }
    if (std::sqrt(mean_norm) > 1e-10)
        fail("asymmetric-input", "kernel mean exceeds 1e-10; covariance expects symmetric input");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m.sigma.at(i, j) = second[i][j].value() * vol;
    return m;
}

}  // namespace fracheat
