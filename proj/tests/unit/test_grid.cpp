#include <gtest/gtest.h>

#include "fracheat/grid.hpp"
#include "fracheat/quadrature.hpp"

using namespace fracheat;

namespace {

// quadrature oracle for the second moment of the density ~ exp(-b|x|^p)
double moment_oracle(double b, double p) {
    QuadOptions opt;
    opt.rel_tol = 1e-13;
    opt.breakpoints = {0.5, 1.0, 2.0, 4.0};
    auto num = integrate([&](double x) { return x * x * std::exp(-b * std::pow(x, p)); },
                         0.0, 12.0, opt);
    auto den = integrate([&](double x) { return std::exp(-b * std::pow(x, p)); }, 0.0, 12.0, opt);
    return num.value / den.value;
}

}  // namespace

TEST(BuildKernel, NormalizationIdentity) {
    KernelSpec spec;  // d=1, p=2, b=1, R=8, h=1/16
    DensityGrid a = build_kernel(spec);
    EXPECT_NEAR(a.measured_mass(), 1.0, 1e-13);
    // value at 0 is 1/(h * sum of exp(-x^2) over nodes)
    KahanSum s;
    for (int i = -a.half_extent()[0]; i <= a.half_extent()[0]; ++i) {
        double x = i * spec.h;
        s.add(std::exp(-x * x));
    }
    EXPECT_NEAR(a.at({0, 0, 0}), 1.0 / (spec.h * s.value()), 1e-12);
}

TEST(BuildKernel, ExactSymmetry) {
    KernelSpec spec;
    spec.p = 2.5;
    spec.b = 0.7;
    DensityGrid a = build_kernel(spec);
    for (int i = 1; i <= a.half_extent()[0]; ++i)
        EXPECT_EQ(a.at({i, 0, 0}), a.at({-i, 0, 0}));
}

TEST(BuildKernel, CovarianceMatchesQuadratureOracle) {
    KernelSpec spec;
    DensityGrid a = build_kernel(spec);
    KernelMoments m = covariance(a);
    double oracle = moment_oracle(1.0, 2.0);  // = 0.5 for the Gaussian shape
    EXPECT_NEAR(oracle, 0.5, 1e-10);
    EXPECT_NEAR(m.sigma.at(0, 0), oracle, 1e-6);
    EXPECT_EQ(m.mean[0], 0.0);
}

TEST(BuildKernel, NonGaussianShapeCovariance) {
    KernelSpec spec;
    spec.p = 3.0;
    spec.b = 0.5;
    DensityGrid a = build_kernel(spec);
    KernelMoments m = covariance(a);
    EXPECT_NEAR(m.sigma.at(0, 0), moment_oracle(0.5, 3.0), 1e-6);
}

TEST(BuildKernel, RejectsBadSpecs) {
    KernelSpec coarse;
    coarse.h = 4.0;
    coarse.R = 8.0;  // 5 nodes per axis
    EXPECT_THROW(build_kernel(coarse), Error);

    KernelSpec small_cutoff;
    small_cutoff.R = 4.0;  // exp(-16) ~ 1e-7 tail
    EXPECT_THROW(build_kernel(small_cutoff), Error);

    KernelSpec bad_p;
    bad_p.p = 1.0;
    EXPECT_THROW(build_kernel(bad_p), Error);

    KernelSpec bad_grid;
    bad_grid.h = 0.3;  // R/h not integral
    EXPECT_THROW(build_kernel(bad_grid), Error);
}

TEST(Covariance, IsotropicD2) {
    KernelSpec spec;
    spec.d = 2;
    spec.h = 0.5;
    DensityGrid a = build_kernel(spec);
    KernelMoments m = covariance(a);
    EXPECT_NEAR(m.sigma.at(0, 0), m.sigma.at(1, 1), 1e-14);
    EXPECT_NEAR(m.sigma.at(0, 1), 0.0, 1e-12);
}

TEST(DensityGrid, IndexRoundTrip) {
    DensityGrid g(3, 0.5, {3, 4, 5});
    for (size_t i = 0; i < g.size(); i += 7) {
        Idx3 x = g.unindex(i);
        EXPECT_EQ(g.index(x), i);
        EXPECT_TRUE(g.contains(x));
    }
    EXPECT_FALSE(g.contains({4, 0, 0}));
    EXPECT_EQ(g.at({4, 0, 0}), 0.0);
}
