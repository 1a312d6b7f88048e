#pragma once

#include <memory>
#include <vector>

#include "fracheat/grid.hpp"
#include "fracheat/logsum.hpp"

namespace fracheat {

// Cumulant L(gamma) = log( h^d sum_x a(x) e^{gamma.x} ) of a lattice kernel.
// Always finite for compactly supported a; evaluated with a shifted softmax
// so arbitrarily large tilts stay representable.
class Cumulant {
public:
    explicit Cumulant(std::shared_ptr<const DensityGrid> a) : a_(std::move(a)) {
        const DensityGrid& g = *a_;
        if (g.log_domain()) fail_validation("log-domain-input", "Cumulant expects a linear grid");
        d_ = g.dim();
        log_vol_ = d_ * std::log(g.spacing());
        nodes_.reserve(g.size());
        g.for_each([&](const Idx3& xi, double v) {
            if (v > 0.0) nodes_.push_back({g.point(xi), std::log(v)});
        });
        for (int i = 0; i < d_; ++i)
            max_drift_[i] = g.half_extent()[i] * g.spacing();
    }

    int dim() const { return d_; }
    const DensityGrid& kernel() const { return *a_; }
    std::shared_ptr<const DensityGrid> kernel_ptr() const { return a_; }

    // Largest attainable |grad L| per axis (the support half-width).
    const Vec3& max_drift() const { return max_drift_; }

    double value(const Vec3& gamma) const {
        double m = neg_inf;
        for (const Node& n : nodes_) m = std::max(m, n.log_a + dot(d_, gamma, n.x));
        KahanSum s;
        for (const Node& n : nodes_) s.add(std::exp(n.log_a + dot(d_, gamma, n.x) - m));
        return m + std::log(s.value()) + log_vol_;
    }

    struct Eval {
        double L;
        Vec3 grad{};
        SymMat hess;
    };

    Eval full(const Vec3& gamma) const {
        double m = neg_inf;
        for (const Node& n : nodes_) m = std::max(m, n.log_a + dot(d_, gamma, n.x));
        KahanSum s;
        std::array<KahanSum, 3> sx;
        std::array<std::array<KahanSum, 3>, 3> sxx;
        for (const Node& n : nodes_) {
            double w = std::exp(n.log_a + dot(d_, gamma, n.x) - m);
            s.add(w);
            for (int i = 0; i < d_; ++i) {
                sx[i].add(w * n.x[i]);
                for (int j = i; j < d_; ++j) sxx[i][j].add(w * n.x[i] * n.x[j]);
            }
        }
        Eval e;
        double z = s.value();
        e.L = m + std::log(z) + log_vol_;
        e.hess.d = d_;
        for (int i = 0; i < d_; ++i) e.grad[i] = sx[i].value() / z;
        for (int i = 0; i < d_; ++i)
            for (int j = i; j < d_; ++j) {
                double c = sxx[i][j].value() / z - e.grad[i] * e.grad[j];
                e.hess.at(i, j) = c;
                e.hess.at(j, i) = c;
            }
        return e;
    }

private:
    struct Node {
        Vec3 x;
        double log_a;
    };

    std::shared_ptr<const DensityGrid> a_;
    int d_ = 1;
    double log_vol_ = 0.0;
    Vec3 max_drift_{};
    std::vector<Node> nodes_;
};

}  // namespace fracheat
