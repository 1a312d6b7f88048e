#include <gtest/gtest.h>

#include "fracheat/mittag_leffler.hpp"
#include "fracheat/stable.hpp"
#include "fracheat/wright.hpp"

using namespace fracheat;

// alpha = 1/2 closed forms used as oracles throughout:
//   g(s)   = s^{-3/2} e^{-1/(4s)} / (2 sqrt(pi))
//   E(z)   = e^{z^2} erfc(-z)   for  E_{1/2}(z), z <= 0
namespace {
double g_half(double s) { return std::pow(s, -1.5) * std::exp(-0.25 / s) / (2.0 * std::sqrt(pi)); }
double e_half(double x) { return std::exp(x * x) * std::erfc(x); }
}  // namespace

TEST(StableDensity, HalfClosedForm) {
    StableDensity g(0.5);
    for (double s : {0.05, 0.2, 1.0, 3.0, 30.0})
        EXPECT_NEAR(g.value(s) / g_half(s), 1.0, 1e-9) << "s=" << s;
    EXPECT_NEAR(g.value(1.0), 0.219695644733861, 1e-9);
}

TEST(StableDensity, IntegratesToOne) {
    for (double alpha : {0.3, 0.5, 0.7}) {
        StableDensity g(alpha);
        QuadOptions opt;
        opt.rel_tol = 1e-11;
        opt.breakpoints = {1e-3, 0.01, 0.1, 0.5, 1.0, 2.0, 4.0};
        double X = 8.0;
        auto head = integrate([&](double s) { return s > 0 ? g.value(s) : 0.0; }, 0.0, X, opt);
        auto tail = integrate(
            [&](double u) {
                if (u <= 0.0) return 0.0;
                double s = X * std::pow(u, -1.0 / alpha);
                return g.value(s) * X / alpha * std::pow(u, -1.0 / alpha - 1.0);
            },
            0.0, 1.0, opt);
        EXPECT_NEAR(head.value + tail.value, 1.0, 1e-8) << "alpha=" << alpha;
    }
}

TEST(StableDensity, LargeSPowerLaw) {
    // s^{3/2} g_{1/2}(s) -> 1/(2 sqrt(pi)) with O(1/s) leftovers
    StableDensity g(0.5);
    double limit = 1.0 / (2.0 * std::sqrt(pi));
    double prev = pos_inf;
    for (double s : {10.0, 100.0, 1000.0}) {
        double gap = std::abs(std::pow(s, 1.5) * g.value(s) / limit - 1.0);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
    EXPECT_NEAR(std::pow(1e6, 1.5) * g.value(1e6), limit, 1e-3 * limit);
}

TEST(StableDensity, BranchOverlapAgreement) {
    for (double alpha : {0.3, 0.5, 0.7, 0.9}) {
        StableDensity g(alpha);
        EXPECT_LE(g.overlap_disagreement(), g.policy().tol) << "alpha=" << alpha;
        double s = g.switchover();
        EXPECT_NEAR(g.series_value(s * 1.1) / std::exp(g.integral_log(s * 1.1)), 1.0, 1e-9);
    }
}

TEST(StableDensity, SmallSAsymptoticIsLeadingOrder) {
    // the Eq-(g) branch approaches the exact integral as s -> 0
    StableDensity g(0.3);
    double prev = pos_inf;
    for (double s : {0.2, 0.05, 0.01}) {
        double rel = std::abs(std::exp(g.asympt_small_log(s) - g.integral_log(s)) - 1.0);
        EXPECT_LT(rel, prev);
        prev = rel;
    }
}

TEST(StableDensity, RejectsNonpositive) {
    StableDensity g(0.4);
    EXPECT_THROW(g.value(0.0), Error);
    EXPECT_THROW(g.value(-1.0), Error);
}

TEST(WrightDensity, ZeroValueAndHalfForm) {
    for (double alpha : {0.3, 0.5, 0.7}) {
        WrightDensity w(alpha);
        EXPECT_NEAR(w.value(0.0), rec_gamma(1.0 - alpha), 1e-14) << "alpha=" << alpha;
    }
    WrightDensity wh(0.5);
    for (double s : {0.3, 1.0, 2.5, 6.0})
        EXPECT_NEAR(wh.value(s), std::exp(-s * s / 4.0) / std::sqrt(pi), 1e-10) << s;
}

TEST(WrightDensity, SeriesVsTransformOnOverlap) {
    WrightDensity w(0.5);
    for (double s : {0.5, 1.0, 2.0})
        EXPECT_NEAR(w.series_value(s) / w.transform_value(s), 1.0, 1e-8);
    // transform through g's own branch map agrees as well
    for (double s : {0.5, 1.0, 2.0})
        EXPECT_NEAR(w.transform_via_branches(s) / w.transform_value(s), 1.0, 1e-8);
}

TEST(WrightDensity, TailLawTrend) {
    // log W / s^{1/(1-a)} -> -c2(a), monotone through {5, 10, 20}
    for (double alpha : {0.4, 0.6}) {
        WrightDensity w(alpha);
        double c2 = FracParams(alpha).c2();
        double prev = pos_inf;
        for (double s : {5.0, 10.0, 20.0}) {
            double ratio = -w.log_value(s) / std::pow(s, 1.0 / (1.0 - alpha));
            double gap = std::abs(ratio / c2 - 1.0);
            EXPECT_LT(gap, prev) << "alpha=" << alpha << " s=" << s;
            prev = gap;
        }
    }
}

TEST(WrightDensity, NearOneAlphaUsable) {
    WrightDensity w(0.99);
    // unit mass survives even where the series is useless
    QuadOptions opt;
    opt.rel_tol = 1e-10;
    opt.breakpoints = {0.25, 0.5, 0.75, 0.9, 1.0, 1.05, 1.1};
    auto r = integrate([&](double s) { return s >= 0 ? w.value(s) : 0.0; }, 0.0, 1.3, opt);
    EXPECT_NEAR(r.value, 1.0, 1e-7);
    // density concentrates near 1
    EXPECT_GT(w.value(1.0), 1.0);
    EXPECT_LT(w.value(0.3), 0.1);
}

TEST(InverseSubordinator, TwoRouteIdentity) {
    WrightDensity w(0.5);
    const StableDensity& g = w.stable();
    for (double t : {1.0, 10.0}) {
        for (double rr : {0.3, 1.0, 2.0}) {
            double via_w = inverse_subordinator_density(w, t, rr);
            double via_g = inverse_subordinator_density_via_stable(g, t, rr);
            EXPECT_NEAR(via_w / via_g, 1.0, 1e-10) << "t=" << t << " r=" << rr;
        }
    }
    // G_1 = W exactly
    for (double rr : {0.2, 0.7, 1.8})
        EXPECT_NEAR(inverse_subordinator_density(w, 1.0, rr), w.value(rr), 1e-12);
}

TEST(InverseSubordinator, IntegratesToOne) {
    WrightDensity w(0.5);
    for (double t : {1.0, 10.0}) {
        double ta = std::pow(t, 0.5);
        QuadOptions opt;
        opt.rel_tol = 1e-10;
        for (double b : {0.25, 0.5, 1.0, 2.0, 4.0}) opt.breakpoints.push_back(b * ta);
        auto r = integrate([&](double rr) {
            return rr > 0 ? inverse_subordinator_density(w, t, rr) : 0.0;
        }, 0.0, 60.0 * ta, opt);
        EXPECT_NEAR(r.value, 1.0, 1e-8) << "t=" << t;
    }
}

TEST(MittagLeffler, ClosedFormHalf) {
    MittagLeffler e(0.5);
    EXPECT_EQ(e(0.0), 1.0);
    for (double x : {0.1, 1.0, 2.0, 4.0, 6.0, 12.0, 40.0})
        EXPECT_NEAR(e(-x) / e_half(x), 1.0, 1e-9) << "x=" << x;
    EXPECT_NEAR(e(-1.0), 0.4275835761558070, 1e-9);
}

TEST(MittagLeffler, AsymptoticLimitAndMonotonicity) {
    for (double alpha : {0.3, 0.5, 0.7}) {
        MittagLeffler e(alpha);
        // -z E(z) -> 1/Gamma(1-a)
        double target = rec_gamma(1.0 - alpha);
        EXPECT_NEAR(1e6 * e(-1e6) / target, 1.0, 1e-4) << alpha;
        double prev = 1.0 + 1e-15;
        for (double x : {0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0}) {
            double v = e(-x);
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, prev);
            prev = v;
        }
    }
}

TEST(MittagLeffler, BranchesAgreeOnOverlap) {
    MittagLeffler e(0.5);
    for (double x : {4.5, 5.0, 6.0}) {
        double t_err = 0.0, a_err = 0.0;
        double tv = e.taylor(-x, &t_err);
        double av = e.asymptotic(-x, &a_err);
        if (t_err < 1e-8 * tv && a_err < 1e-8 * av)
            EXPECT_NEAR(tv / av, 1.0, 1e-7) << "x=" << x;
    }
    EXPECT_THROW(e(1.0), Error);
}

TEST(FracParamsConstants, DerivedValues) {
    FracParams fp(0.5);
    EXPECT_NEAR(fp.K_alpha(), 1.0 / std::sqrt(0.5 * pi), 1e-15);
    EXPECT_NEAR(fp.c2(), 0.25, 1e-15);
    EXPECT_NEAR(fp.c3(), 1.5 * std::pow(0.5, 1.0 / 3.0), 1e-15);
    // c1 is K_a a^{a/(2(1-a))}: the Wright tail prefactor at alpha=1/2 is 1/sqrt(pi)
    EXPECT_NEAR(fp.c1(), 1.0 / std::sqrt(pi), 1e-15);
    EXPECT_THROW(FracParams(1.0), Error);
    EXPECT_THROW(FracParams(0.0), Error);
}
