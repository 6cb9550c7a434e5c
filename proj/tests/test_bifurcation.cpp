#include <gtest/gtest.h>

#include <cmath>

#include <lpseries/bifurcation.hpp>

using namespace lpseries;

namespace {

const SolutionSet<double>& center9() {
    static const SolutionSet<double> s = [] {
        BuildOptions o;
        o.mask = AmplitudeMask::center();
        return build<double>(kSunEarthMu, Point::L1, 9, o);
    }();
    return s;
}

const BifurcationSlice& se_l1() {
    static const BifurcationSlice b = third_order_constants<double>(kSunEarthMu, Point::L1);
    return b;
}

}  // namespace

TEST(ThirdOrderConstants, SignPatternAtL1) {
    for (double mu : {kSunEarthMu, kEarthMoonMu, 0.1, 0.3, 0.5}) {
        const auto b = third_order_constants<double>(mu, Point::L1);
        EXPECT_GT(b.l[6], 0) << mu;
        EXPECT_LT(b.l[7], 0) << mu;
        EXPECT_LT(b.l[8], 0) << mu;
        EXPECT_EQ(b.a4_alpha2, 0.0);
        EXPECT_GT(b.freq_gap, 0);
    }
}

// l7 < 0 everywhere, but l8 > 0 at L2 and L3, and l6 < 0 at L3 for small mu.
TEST(ThirdOrderConstants, SignsAtL2AndL3) {
    for (double mu : {kSunEarthMu, kEarthMoonMu, 0.1, 0.3}) {
        const auto b2 = third_order_constants<double>(mu, Point::L2);
        const auto b3 = third_order_constants<double>(mu, Point::L3);
        EXPECT_GT(b2.l[6], 0);
        EXPECT_LT(b2.l[7], 0);
        EXPECT_GT(b2.l[8], 0);
        EXPECT_LT(b3.l[7], 0);
        EXPECT_GT(b3.l[8], 0);
    }
    EXPECT_LT(third_order_constants<double>(kEarthMoonMu, Point::L3).l[6], 0);
    EXPECT_GT(third_order_constants<double>(0.3, Point::L3).l[6], 0);
}

// In the Hill limit L1 and L2 become mirror images, so their constants agree.
TEST(ThirdOrderConstants, HillLimitSymmetry) {
    const auto a = third_order_constants<double>(1e-9, Point::L1);
    const auto b = third_order_constants<double>(1e-9, Point::L2);
    for (int k = 1; k <= 8; ++k) EXPECT_NEAR(a.l[k], b.l[k], 2e-2 * std::abs(a.l[6])) << "l" << k;
    EXPECT_NEAR(a.freq_gap, b.freq_gap, 1e-3);
    EXPECT_GT(a.l[8], 0);
}

TEST(ThirdOrderConstants, GapIsFrequencyDifference) {
    const auto& b = se_l1();
    const auto lc = frequencies(make_params<double>(kSunEarthMu, Point::L1, 4));
    EXPECT_NEAR(b.freq_gap, lc.omega0 * lc.omega0 - lc.nu0 * lc.nu0, 1e-14);
}

// The quadratic rebuilt from l1..l8 reproduces the order-3 Delta polynomial.
TEST(ThirdOrderConstants, QuadraticMatchesDeltaSlice) {
    const auto s = build<double>(kSunEarthMu, Point::L1, 3);
    const auto b = third_order_constants(s);
    const std::array<double, 4> al{0.11, 0.07, 0.2, -0.3};
    const auto q = b.quadratic(al);
    const auto p = s.delta.at_amplitudes(al);
    ASSERT_EQ(p.degree(), 4);
    EXPECT_NEAR(p[0], q.c, 1e-15);
    EXPECT_NEAR(p[2], q.b, 1e-15);
    EXPECT_NEAR(p[4], q.a, 1e-15);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_EQ(p[3], 0.0);
}

TEST(ThirdOrderConstants, CenterMaskAndOrderChecks) {
    const auto b = third_order_constants(center9());
    EXPECT_EQ(b.l[2], 0.0);
    EXPECT_EQ(b.l[5], 0.0);
    EXPECT_EQ(b.l[8], 0.0);
    EXPECT_DOUBLE_EQ(b.l[6], se_l1().l[6]);
    EXPECT_THROW(third_order_constants(center9().truncated(2)), std::invalid_argument);
}

TEST(Classify, HyperboloidAtBifurcationAmplitude) {
    const auto& b = se_l1();
    const double a1 = std::sqrt(b.freq_gap / b.l[6]);
    EXPECT_EQ(classify_critical(b, {a1, 0, 0, 0}, 1e-10), CriticalCase::hyperboloid_c0);
    EXPECT_EQ(classify_critical(b, {0, 0, 0, 0}), CriticalCase::no_root);
    EXPECT_EQ(classify_critical(b, {0.3, 0, 0, 0}), CriticalCase::generic);
}

TEST(Classify, ParaboloidWhenQuarticTermVanishes) {
    const auto& b = se_l1();
    const double a1 = 0.1, a34 = -b.l[1] * a1 * a1 / b.l[2];
    const auto q = b.quadratic({a1, 0, a34, 1});
    ASSERT_LT(q.b * q.c, 0);
    EXPECT_EQ(classify_critical(b, {a1, 0, a34, 1}, 1e-10), CriticalCase::paraboloid_a0);
}

// Double root: move alpha3 alpha4 until D = 0 with b < 0 and c > 0.
TEST(Classify, DiscriminantZero) {
    const auto& b = se_l1();
    const double a1 = 0.2;
    auto D = [&](double p) { return b.quadratic({a1, 0, p, 1}).D(); };
    const double p0 = -b.l[3] * a1 * a1 / b.l[5];  // b = 0 here
    ASSERT_LT(D(p0) * D(0), 0);
    const double p = bisect<double>(p0, 0.0, D, 200);
    const auto q = b.quadratic({a1, 0, p, 1});
    ASSERT_GT(-q.b / (2 * q.a), 0);
    EXPECT_EQ(classify_critical(b, {a1, 0, p, 1}, 1e-10), CriticalCase::discriminant_D0);
    EXPECT_EQ(analytic_root_count(b, {a1, 0, 0.9 * p, 1}), 4);
    EXPECT_EQ(analytic_root_count(b, {a1, 0, 1.1 * p, 1}), 0);
}

TEST(RootCount, AnalyticAgreesWithScan) {
    RootCountGrid g;
    g.n1 = g.n2 = g.n34 = 8;
    const auto cells = solution_count_map(se_l1(), g);
    ASSERT_EQ(cells.size(), 512u);
    int agree = 0;
    for (const auto& c : cells) agree += c.analytic == c.bruteforce;
    EXPECT_GE(agree, 505);
    EXPECT_EQ(analytic_root_count(se_l1(), {0, 0, 0, 0}), 0);
}

TEST(PolynomialRoots, RealNonnegativeWithMultiplicity) {
    // (u - 1)(u - 4)(u + 2)
    std::vector<std::complex<double>> rej;
    auto r = nonnegative_real_roots({8, -6, -3, 1}, &rej);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(r[0].first, 1, 1e-13);
    EXPECT_NEAR(r[1].first, 4, 1e-13);
    ASSERT_EQ(rej.size(), 1u);
    EXPECT_NEAR(rej[0].real(), -2, 1e-12);
    // (u - 2)^2 (u^2 + 1)
    r = nonnegative_real_roots({4, -4, 5, -4, 1}, nullptr);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_NEAR(r[0].first, 2, 1e-6);
    EXPECT_EQ(r[0].second, 2);
    r = nonnegative_real_roots({0, 0, 3}, nullptr);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].first, 0.0);
    EXPECT_EQ(r[0].second, 2);
}

TEST(SolveEta, ZeroAmplitudes) {
    const auto r = solve_eta(center9(), {0, 0, 0, 0});
    EXPECT_TRUE(r.roots.empty());
    EXPECT_EQ(r.label, CriticalCase::no_root);
    EXPECT_TRUE(r.eta_zero_admissible);
    EXPECT_THROW(r.positive_root(), MathDomainError);
}

TEST(SolveEta, HaloRootSymmetricAndAccurate) {
    const auto r = solve_eta(center9(), {0.16, 0.02, 0, 0});
    ASSERT_FALSE(r.roots.empty());
    ASSERT_EQ(r.roots.size() % 2, 0u);
    for (std::size_t k = 0; k < r.roots.size(); ++k) EXPECT_EQ(r.roots[k], -r.roots[r.roots.size() - 1 - k]);
    EXPECT_LT(r.max_backsubstitution, 1e-10);
    EXPECT_NEAR(r.positive_root(), 1.4556, 2e-2);
    for (double e : r.roots) EXPECT_NEAR(r.delta.eval(e) / detail::poly_scale(r.delta.coeffs(), e), 0, 1e-10);
}

// Below the bifurcation amplitude the order-9 equation has no nonzero root.
TEST(SolveEta, TrivialOnlyForSmallPlanarAmplitude) {
    const auto r = solve_eta(center9(), {1e-3, 0, 0, 0});
    EXPECT_TRUE(r.roots.empty());
    EXPECT_EQ(r.label, CriticalCase::trivial_only);
}

TEST(SolveEta, RejectsBadInput) {
    EXPECT_THROW(solve_eta(center9(), {NAN, 0, 0, 0}), std::invalid_argument);
    EXPECT_THROW(solve_eta(center9().truncated(2), {0.1, 0, 0, 0}), std::invalid_argument);
}
