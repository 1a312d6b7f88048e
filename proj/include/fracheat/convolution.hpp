#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "fracheat/fft.hpp"
#include "fracheat/grid.hpp"
#include "fracheat/logsum.hpp"

namespace fracheat {

// ---------------------------------------------------------------------------
// Ring layout: lattice point x in [-H, H]^d lives at buffer index
// (x mod F) per axis with F >= 2H+1.  Circular convolution on the ring is
// exact linear convolution as long as the true support of the result fits.
// ---------------------------------------------------------------------------

// How a scan advances cur -> cur * a.
//  * fft: frequency-domain product; fastest, but tail values sit on an
//    absolute rounding floor (~1e-16 of the peak).
//  * direct: positive summation in space; ~4x slower in 1-D but keeps
//    relative accuracy all the way into the super-exponential tails.
enum class StepMethod { fft, direct };

// Repeated convolution with a fixed small kernel on a fixed-size ring,
// re-windowed to the data box after every step.  This is the workhorse for
// a, a*a, a^{*3}, ... sweeps.
class RingConvolver {
public:
    RingConvolver(const DensityGrid& kernel, const Idx3& data_half,
                  StepMethod method = StepMethod::fft)
        : d_(kernel.dim()), h_(kernel.spacing()), data_half_(data_half),
          kernel_half_(kernel.half_extent()),
          method_(method == StepMethod::direct && kernel.dim() == 1 ? StepMethod::direct
                                                                    : StepMethod::fft) {
        if (method_ == StepMethod::direct) {
            int n = kernel_half_[0];
            kernel_vals_.resize(static_cast<size_t>(2 * n + 1));
            for (int j = -n; j <= n; ++j)
                kernel_vals_[static_cast<size_t>(j + n)] = h_ * kernel.at({j, 0, 0});
            size_t nbox = static_cast<size_t>(2 * data_half_[0] + 1);
            cur_.assign(nbox, 0.0);
            scratch_.assign(nbox, 0.0);
            probe_ = DensityGrid(1, h_, data_half_);
            return;
        }
        init_fft(kernel);
    }

private:
    void init_fft(const DensityGrid& kernel) {
        Idx3 shape{1, 1, 1};
        for (int i = 0; i < d_; ++i)
            shape[i] = next_smooth(2 * (data_half_[i] + kernel_half_[i]) + 1);
        shape_ = shape;
        size_t cells = 1;
        for (int i = 0; i < d_; ++i) cells *= static_cast<size_t>(shape_[i]);
        if (cells > DensityGrid::max_cells)
            fail("overflow-of-extent", "convolution ring exceeds the memory budget");
        dft_ = std::make_unique<RealDft>(d_, shape_);
        kernel_hat_.resize(dft_->complex_size());
        load_ring(kernel);
        dft_->forward();
        // density convolution (f*g)(x) = h^d sum_y f(y) g(x-y): fold the cell
        // volume into the cached kernel spectrum
        double scale = dft_->normalization();
        for (int i = 0; i < d_; ++i) scale *= h_;
        const std::complex<double>* spec = dft_->complex_data();
        for (size_t i = 0; i < kernel_hat_.size(); ++i) kernel_hat_[i] = spec[i] * scale;
        cur_.assign(dft_->real_size(), 0.0);
        probe_ = DensityGrid(d_, h_, data_half_);
        keep_.assign(cur_.size(), 0);
        for (size_t i = 0; i < probe_.size(); ++i) keep_[ring_index(probe_.unindex(i))] = 1;
    }

public:
    int dim() const { return d_; }
    double spacing() const { return h_; }
    const Idx3& data_half() const { return data_half_; }
    StepMethod method() const { return method_; }

    // cur := grid values (grid must fit inside the data box)
    void load(const DensityGrid& g) {
        for (int i = 0; i < d_; ++i)
            if (g.half_extent()[i] > data_half_[i])
                fail("overflow-of-extent", "start grid exceeds the scan window");
        std::fill(cur_.begin(), cur_.end(), 0.0);
        if (method_ == StepMethod::direct) {
            g.for_each([&](const Idx3& x, double v) { cur_[box_index(x)] = v; });
        } else {
            g.for_each([&](const Idx3& x, double v) { cur_[ring_index(x)] = v; });
        }
        discarded_ = 0.0;
    }

    // cur := cur * kernel (one linear convolution), then re-window: mass
    // outside the data box is measured, accumulated and zeroed.
    void step() {
        if (method_ == StepMethod::direct) {
            step_direct();
            return;
        }
        double* in = dft_->real_data();
        std::copy(cur_.begin(), cur_.end(), in);
        dft_->forward();
        std::complex<double>* spec = dft_->complex_data();
        for (size_t i = 0; i < kernel_hat_.size(); ++i) spec[i] *= kernel_hat_[i];
        dft_->backward();
        std::copy(in, in + cur_.size(), cur_.begin());
        discarded_ += rewindow();
    }

    double value_at(const Idx3& x) const {
        for (int i = 0; i < d_; ++i)
            if (x[i] < -data_half_[i] || x[i] > data_half_[i]) return 0.0;
        return method_ == StepMethod::direct ? cur_[box_index(x)] : cur_[ring_index(x)];
    }

    // cumulative mass (h^d scale) dropped by re-windowing so far
    double discarded_mass() const { return discarded_; }

    double mass() const {
        KahanSum s;
        for (double v : cur_) s.add(v);
        double vol = 1.0;
        for (int i = 0; i < d_; ++i) vol *= h_;
        return s.value() * vol;
    }

    DensityGrid extract() const {
        DensityGrid out(d_, h_, data_half_);
        for (size_t i = 0; i < out.size(); ++i) out.values()[i] = value_at(out.unindex(i));
        out.set_mass(out.measured_mass());
        return out;
    }

    template <class F>
    void for_each_in_window(F&& f) const {
        if (method_ == StepMethod::direct) {
            for (size_t i = 0; i < cur_.size(); ++i)
                f(Idx3{static_cast<int>(i) - data_half_[0], 0, 0}, cur_[i]);
            return;
        }
        for (size_t i = 0; i < probe_.size(); ++i) {
            Idx3 x = probe_.unindex(i);
            f(x, cur_[ring_index(x)]);
        }
    }

private:
    size_t ring_index(const Idx3& x) const {
        size_t idx = 0;
        for (int i = 0; i < d_; ++i) {
            int xi = x[i] < 0 ? x[i] + shape_[i] : x[i];
            idx = idx * static_cast<size_t>(shape_[i]) + static_cast<size_t>(xi);
        }
        return idx;
    }

    size_t box_index(const Idx3& x) const {
        return static_cast<size_t>(x[0] + data_half_[0]);
    }

    void load_ring(const DensityGrid& g) {
        double* in = dft_->real_data();
        std::fill(in, in + dft_->real_size(), 0.0);
        g.for_each([&](const Idx3& x, double v) { in[ring_index(x)] = v; });
    }

    // 1-D spatial convolution: all summands nonnegative, so tail values keep
    // full relative accuracy (no transform noise floor).
    void step_direct() {
        int N = 2 * data_half_[0] + 1;
        int n = kernel_half_[0];
        std::fill(scratch_.begin(), scratch_.end(), 0.0);
        double mass_before = 0.0;
        for (double v : cur_) mass_before += v;
        for (int j = -n; j <= n; ++j) {
            double w = kernel_vals_[static_cast<size_t>(j + n)];
            if (w == 0.0) continue;
            int i_lo = std::max(0, j), i_hi = std::min(N, N + j);
            const double* src = cur_.data();
            double* dst = scratch_.data();
            for (int i = i_lo; i < i_hi; ++i) dst[i] += w * src[i - j];
        }
        cur_.swap(scratch_);
        double mass_after = 0.0;
        for (double v : cur_) mass_after += v;
        discarded_ += (mass_before - mass_after) * h_;
    }

    double rewindow() {
        double vol = 1.0;
        for (int i = 0; i < d_; ++i) vol *= h_;
        KahanSum out;
        for (size_t i = 0; i < cur_.size(); ++i) {
            if (!keep_[i]) {
                out.add(cur_[i]);
                cur_[i] = 0.0;
            }
        }
        return out.value() * vol;
    }

    int d_;
    double h_;
    Idx3 data_half_, kernel_half_, shape_{1, 1, 1};
    StepMethod method_ = StepMethod::fft;
    std::unique_ptr<RealDft> dft_;
    std::vector<std::complex<double>> kernel_hat_;
    std::vector<double> kernel_vals_;  // direct mode, h-scaled
    std::vector<double> cur_;
    std::vector<double> scratch_;
    std::vector<char> keep_;
    DensityGrid probe_;
    double discarded_ = 0.0;
};

// One-shot linear convolution of two grids (zero-padded, exact support),
// optionally cropped to `window_half` with the dropped mass reported.
inline DensityGrid convolve(const DensityGrid& a, const DensityGrid& b,
                            const Idx3* window_half = nullptr,
                            double* discarded = nullptr) {
    if (a.dim() != b.dim() || a.spacing() != b.spacing())
        fail_validation("grid-mismatch", "convolve: dimension/spacing mismatch");
    int d = a.dim();
    Idx3 full{};
    for (int i = 0; i < d; ++i) full[i] = a.half_extent()[i] + b.half_extent()[i];
    Idx3 shape{1, 1, 1};
    for (int i = 0; i < d; ++i) shape[i] = next_smooth(2 * full[i] + 1);
    size_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= static_cast<size_t>(shape[i]);
    if (cells > DensityGrid::max_cells)
        fail("overflow-of-extent", "requested convolution exceeds the memory budget");

    RealDft dft(d, shape);
    auto ring_index = [&](const Idx3& x) {
        size_t idx = 0;
        for (int i = 0; i < d; ++i) {
            int xi = x[i] < 0 ? x[i] + shape[i] : x[i];
            idx = idx * static_cast<size_t>(shape[i]) + static_cast<size_t>(xi);
        }
        return idx;
    };

    std::vector<std::complex<double>> a_hat(dft.complex_size());
    double* in = dft.real_data();
    std::fill(in, in + dft.real_size(), 0.0);
    a.for_each([&](const Idx3& x, double v) { in[ring_index(x)] = v; });
    dft.forward();
    std::copy(dft.complex_data(), dft.complex_data() + dft.complex_size(), a_hat.begin());

    std::fill(in, in + dft.real_size(), 0.0);
    b.for_each([&](const Idx3& x, double v) { in[ring_index(x)] = v; });
    dft.forward();
    std::complex<double>* spec = dft.complex_data();
    double scale = dft.normalization() * a.cell_volume();
    for (size_t i = 0; i < a_hat.size(); ++i) spec[i] *= a_hat[i] * scale;
    dft.backward();

    Idx3 out_half = full;
    if (window_half) {
        for (int i = 0; i < d; ++i) out_half[i] = std::min(full[i], (*window_half)[i]);
    }
    DensityGrid out(d, a.spacing(), out_half);
    for (size_t i = 0; i < out.size(); ++i) out.values()[i] = in[ring_index(out.unindex(i))];
    if (discarded) {
        KahanSum dropped;
        DensityGrid probe(d, a.spacing(), full);
        for (size_t i = 0; i < probe.size(); ++i) {
            Idx3 x = probe.unindex(i);
            bool inside = true;
            for (int k = 0; k < d; ++k) inside = inside && std::abs(x[k]) <= out_half[k];
            if (!inside) dropped.add(in[ring_index(x)]);
        }
        *discarded = dropped.value() * out.cell_volume();
    }
    out.set_mass(out.measured_mass());
    return out;
}

struct PowerOptions {
    std::optional<Idx3> window_half;     // re-window target; absent = full support
    double discard_budget = 1e-8;        // abort when cumulative dropped mass exceeds this
};

// a^{*k} by frequency-domain repeated squaring (ceil(log2 k) squarings),
// re-windowed after every product per the discard budget.
inline DensityGrid convolution_power(const DensityGrid& a, long k,
                                     const PowerOptions& opt = {}) {
    if (k < 1) fail_validation("bad-power", "convolution power requires k >= 1");
    if (std::abs(a.mass() - 1.0) > 1e-9)
        fail_validation("not-normalized", "convolution_power expects unit mass");
    if (k == 1) return a;

    const Idx3* win = opt.window_half ? &*opt.window_half : nullptr;
    double total_dropped = 0.0;
    auto checked = [&](const DensityGrid& x, const DensityGrid& y) {
        double dropped = 0.0;
        DensityGrid r = convolve(x, y, win, &dropped);
        total_dropped += dropped;
        if (total_dropped > opt.discard_budget)
            fail("window-discard-budget", "re-windowing dropped more than the allowed mass");
        return r;
    };

    DensityGrid base = a;
    std::optional<DensityGrid> acc;
    long bits = k;
    while (bits > 0) {
        if (bits & 1) acc = acc ? checked(*acc, base) : base;
        bits >>= 1;
        if (bits > 0) base = checked(base, base);
    }
    return *acc;
}

// log a^{*k}(x) = k L(gamma) - gamma.x + log (a_gamma)^{*k}(x).
// The tilted kernel a_gamma(x) = a(x) exp(gamma.x - L(gamma)) is renormalized
// exactly, so the identity holds for any gamma; gamma = grad I(x/k) gives the
// best conditioning.  `L_gamma` is the cumulant value at gamma.
struct TiltedKernel {
    DensityGrid grid;   // a_gamma, unit mass
    Vec3 gamma{};
    double log_norm;    // log of the exact lattice normalizer == L(gamma) up to rounding
};

inline TiltedKernel make_tilted(const DensityGrid& a, const Vec3& gamma) {
    int d = a.dim();
    TiltedKernel t;
    t.gamma = gamma;
    DensityGrid g(d, a.spacing(), a.half_extent());
    LogAccumulator lse;
    a.for_each([&](const Idx3& xi, double v) {
        if (v <= 0.0) return;
        Vec3 x = a.point(xi);
        lse.add(std::log(v) + dot(d, gamma, x));
    });
    double log_vol = d * std::log(a.spacing());
    t.log_norm = lse.log_value() + log_vol;
    a.for_each([&](const Idx3& xi, double v) {
        if (v <= 0.0) return;
        Vec3 x = a.point(xi);
        g.ref(xi) = std::exp(std::log(v) + dot(d, gamma, x) - t.log_norm);
    });
    g.set_mass(1.0);
    t.grid = std::move(g);
    return t;
}

inline DensityGrid tilted_convolution_power(const DensityGrid& a, long k, const Vec3& gamma,
                                            double L_gamma, const PowerOptions& opt = {}) {
    TiltedKernel tk = make_tilted(a, gamma);
    if (std::abs(tk.grid.measured_mass() - 1.0) > 1e-9)
        fail("tilt-out-of-range", "tilted kernel mass deviates from 1 after renormalization");
    DensityGrid pw = convolution_power(tk.grid, k, opt);
    int d = a.dim();
    DensityGrid out(d, a.spacing(), pw.half_extent(), /*log_domain=*/true);
    pw.for_each([&](const Idx3& xi, double v) {
        Vec3 x = pw.point(xi);
        out.ref(xi) = v > 0.0 ? k * L_gamma - dot(d, gamma, x) + std::log(v) : neg_inf;
    });
    out.set_mass(pw.mass());
    return out;
}

// ---------------------------------------------------------------------------
// Stepwise scan k = 1..k_max over convolution powers.  The visitor sees each
// power through a light view; extract values, accumulate weighted sums, or
// snapshot checkpoints as needed.
// ---------------------------------------------------------------------------

class PowerScan {
public:
    struct View {
        const RingConvolver& conv;
        long k;
        double value_at(const Idx3& x) const { return conv.value_at(x); }
        DensityGrid extract() const { return conv.extract(); }
        double discarded_mass() const { return conv.discarded_mass(); }
        template <class F>
        void for_each(F&& f) const { conv.for_each_in_window(std::forward<F>(f)); }
    };

    static StepMethod default_method(const DensityGrid& kernel) {
        return kernel.dim() == 1 ? StepMethod::direct : StepMethod::fft;
    }

    PowerScan(const DensityGrid& kernel, const Idx3& data_half)
        : PowerScan(kernel, data_half, default_method(kernel)) {}

    PowerScan(const DensityGrid& kernel, const Idx3& data_half, StepMethod method)
        : conv_(kernel, data_half, method) {
        conv_.load(kernel);
        k_ = 1;
    }

    // Continue an existing power: cur := start (= kernel^{*k0}).
    PowerScan(const DensityGrid& kernel, const Idx3& data_half, const DensityGrid& start, long k0)
        : conv_(kernel, data_half, default_method(kernel)) {
        conv_.load(start);
        k_ = k0;
    }

    long k() const { return k_; }
    View view() const { return {conv_, k_}; }

    void advance() {
        conv_.step();
        k_ += 1;
        if (conv_.discarded_mass() > discard_budget)
            fail("window-discard-budget", "power scan dropped more than the allowed mass");
    }

    double discard_budget = 1e-8;

    // Run the visitor for every k in [k(), k_max].
    template <class Visitor>
    void run(long k_max, Visitor&& visit) {
        while (true) {
            visit(view());
            if (k_ >= k_max) break;
            advance();
        }
    }

private:
    RingConvolver conv_;
    long k_ = 0;
};

}  // namespace fracheat
