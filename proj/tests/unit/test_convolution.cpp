#include <gtest/gtest.h>

#include "fracheat/convolution.hpp"
#include "fracheat/cumulant.hpp"
#include "fracheat/rate.hpp"

using namespace fracheat;

namespace {

std::shared_ptr<const DensityGrid> default_kernel() {
    static auto a = std::make_shared<const DensityGrid>(build_kernel(KernelSpec{}));
    return a;
}

}  // namespace

TEST(ConvolutionPower, IdentityAtOne) {
    auto a = default_kernel();
    DensityGrid a1 = convolution_power(*a, 1);
    ASSERT_EQ(a1.size(), a->size());
    for (size_t i = 0; i < a1.size(); ++i) EXPECT_EQ(a1.values()[i], a->values()[i]);
}

TEST(ConvolutionPower, CovarianceScalesLinearly) {
    auto a = default_kernel();
    for (long k : {2L, 7L, 16L}) {
        DensityGrid ak = convolution_power(*a, k);
        KernelMoments m = covariance(ak);
        EXPECT_NEAR(m.sigma.at(0, 0) / (0.5 * k), 1.0, 1e-6) << "k=" << k;
        EXPECT_NEAR(ak.measured_mass(), 1.0, 1e-9);
    }
}

TEST(ConvolutionPower, LocalLimitAtFifty) {
    auto a = default_kernel();
    long k = 50;
    DensityGrid ak = convolution_power(*a, k);
    double sigma = 0.5, sk = std::sqrt(static_cast<double>(k));
    double sup = 0.0;
    ak.for_each([&](const Idx3& xi, double v) {
        double vv = xi[0] * ak.spacing() / sk;
        double psi = std::exp(-vv * vv / (2.0 * sigma)) / std::sqrt(2.0 * pi * sigma);
        sup = std::max(sup, std::abs(sk * v - psi));
    });
    EXPECT_LT(sup, 0.01);
}

TEST(ConvolutionPower, SemigroupPointwise) {
    auto a = default_kernel();
    DensityGrid a3 = convolution_power(*a, 3);
    DensityGrid a4 = convolution_power(*a, 4);
    DensityGrid a7 = convolution_power(*a, 7);
    DensityGrid a34 = convolve(a3, a4);
    ASSERT_EQ(a34.half_extent()[0], a7.half_extent()[0]);
    double worst = 0.0;
    a7.for_each([&](const Idx3& x, double v) { worst = std::max(worst, std::abs(v - a34.at(x))); });
    EXPECT_LT(worst, 1e-10);
}

TEST(ConvolutionPower, MassConservationAcrossK) {
    auto a = default_kernel();
    PowerScan scan(*a, recommended_window_half(*a, 64));
    scan.run(64, [&](const PowerScan::View& view) {
        if (view.k % 16 == 0 || view.k < 3) {
            DensityGrid g = view.extract();
            EXPECT_NEAR(g.measured_mass(), 1.0, 1e-9) << "k=" << view.k;
        }
    });
    EXPECT_LT(scan.view().discarded_mass(), 1e-10);
}

TEST(ConvolutionPower, SymmetryExactOnLattice) {
    auto a = default_kernel();
    DensityGrid a8 = convolution_power(*a, 8);
    for (int i = 1; i <= a8.half_extent()[0]; i += 37)
        EXPECT_EQ(a8.at({i, 0, 0}), a8.at({-i, 0, 0}));
}

TEST(ConvolutionPower, WindowBudgetAborts) {
    auto a = default_kernel();
    PowerOptions opt;
    opt.window_half = Idx3{32, 0, 0};  // 2 physical units: far too tight for k=64
    opt.discard_budget = 1e-8;
    EXPECT_THROW(convolution_power(*a, 64, opt), Error);
}

TEST(DirectAndFftStepsAgree, BulkValues) {
    auto a = default_kernel();
    Idx3 half = recommended_window_half(*a, 32);
    PowerScan direct(*a, half, StepMethod::direct);
    PowerScan fft(*a, half, StepMethod::fft);
    for (int i = 0; i < 31; ++i) {
        direct.advance();
        fft.advance();
    }
    for (int x : {0, 13, 160, 400}) {
        double vd = direct.view().value_at({x, 0, 0});
        double vf = fft.view().value_at({x, 0, 0});
        if (vd > 1e-12) EXPECT_NEAR(vf / vd, 1.0, 1e-9) << "x=" << x;
    }
}

TEST(TiltedPower, ZeroTiltMatchesPlain) {
    auto a = default_kernel();
    Cumulant L(a);
    DensityGrid lg = tilted_convolution_power(*a, 6, {0, 0, 0}, L.value({0, 0, 0}));
    DensityGrid plain = convolution_power(*a, 6);
    plain.for_each([&](const Idx3& x, double v) {
        if (v > 1e-290) EXPECT_NEAR(lg.at(x), std::log(v), 1e-9);
    });
}

TEST(TiltedPower, TiltInvarianceAcrossGammas) {
    auto a = default_kernel();
    Cumulant L(a);
    long k = 24;
    DensityGrid g1 = tilted_convolution_power(*a, k, {0.8, 0, 0}, L.value({0.8, 0, 0}));
    DensityGrid g2 = tilted_convolution_power(*a, k, {1.7, 0, 0}, L.value({1.7, 0, 0}));
    DensityGrid plain = convolution_power(*a, k);
    int checked = 0;
    plain.for_each([&](const Idx3& x, double v) {
        if (v > 1e-250 && std::abs(x[0]) % 29 == 0) {
            EXPECT_NEAR(g1.at(x) - g2.at(x), 0.0, 1e-6) << "x=" << x[0];
            if (v > 1e-280) EXPECT_NEAR(g1.at(x), std::log(v), 1e-6);
            ++checked;
        }
    });
    EXPECT_GT(checked, 10);
}

TEST(TiltedPower, CramerDecayMatchesRateFunction) {
    // log a^{*k}(x) ~ -k I(x/k): trend check at x/k = 0.5
    auto a = default_kernel();
    Cumulant L(a);
    double I = legendre(L, {0.5, 0, 0}).I;
    double prev_rel = 1.0;
    for (long k : {50L, 100L, 200L}) {
        int steps = static_cast<int>(std::lround(0.5 * k / a->spacing()));
        Vec3 gamma = legendre(L, {0.5, 0, 0}).gamma;
        PowerOptions opt;
        opt.window_half = Idx3{steps + 2200, 0, 0};
        DensityGrid lg = tilted_convolution_power(*a, k, gamma, L.value(gamma), opt);
        double rel = std::abs(-lg.at({steps, 0, 0}) / (k * I) - 1.0);
        EXPECT_LT(rel, prev_rel * 1.05);  // improving (or flat) with k
        prev_rel = rel;
        if (k == 200) EXPECT_LT(rel, 0.05);
    }
}

TEST(TiltedKernel, MassRenormalizedExactly) {
    auto a = default_kernel();
    TiltedKernel tk = make_tilted(*a, {2.5, 0, 0});
    EXPECT_NEAR(tk.grid.measured_mass(), 1.0, 1e-12);
    Cumulant L(a);
    EXPECT_NEAR(tk.log_norm, L.value({2.5, 0, 0}), 1e-12);
}
