#pragma once

#include <fftw3.h>

#include <complex>
#include <memory>
#include <mutex>

#include "fracheat/common.hpp"

namespace fracheat {

namespace detail {

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;  // FFTW planning is not thread-safe; execution is
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace detail

// Smallest 2,3,5,7-smooth integer >= n (efficient FFTW sizes).
inline int next_smooth(int n) {
    if (n < 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        for (int f : {2, 3, 5, 7})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

// d-dimensional real-to-complex FFT pair on fixed-size owned buffers.
class RealDft {
public:
    RealDft(int d, const Idx3& shape) : d_(d), shape_(shape) {
        n_real_ = 1;
        for (int i = 0; i < d_; ++i) n_real_ *= static_cast<size_t>(shape_[i]);
        n_complex_ = n_real_ / static_cast<size_t>(shape_[d_ - 1])
                   * static_cast<size_t>(shape_[d_ - 1] / 2 + 1);
        real_.reset(fftw_alloc_real(n_real_));
        complex_.reset(fftw_alloc_complex(n_complex_));
        int dims[3] = {shape_[0], shape_[1], shape_[2]};
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c(d_, dims, real_.get(), complex_.get(), FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r(d_, dims, complex_.get(), real_.get(), FFTW_ESTIMATE);
        if (!fwd_ || !bwd_) fail("fft-plan-failed", "FFTW plan creation failed");
    }

    ~RealDft() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        if (fwd_) fftw_destroy_plan(fwd_);
        if (bwd_) fftw_destroy_plan(bwd_);
    }

    RealDft(const RealDft&) = delete;
    RealDft& operator=(const RealDft&) = delete;

    size_t real_size() const { return n_real_; }
    size_t complex_size() const { return n_complex_; }
    double* real_data() { return real_.get(); }
    std::complex<double>* complex_data() {
        return reinterpret_cast<std::complex<double>*>(complex_.get());
    }
    double normalization() const { return 1.0 / static_cast<double>(n_real_); }

    void forward() { fftw_execute(fwd_); }
    void backward() { fftw_execute(bwd_); }  // unnormalized, destroys complex buffer

private:
    int d_;
    Idx3 shape_;
    size_t n_real_ = 0, n_complex_ = 0;
    std::unique_ptr<double[], detail::FftwFree> real_;
    std::unique_ptr<fftw_complex[], detail::FftwFree> complex_;
    fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

}  // namespace fracheat
