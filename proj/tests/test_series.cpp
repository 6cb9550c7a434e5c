#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <lpseries/series.hpp>

using namespace lpseries;

namespace {

TrigExpSeries<double> random_series(std::mt19937& rng, int max_order, int terms) {
    std::uniform_int_distribution<int> amp(0, 3), harm(-3, 3);
    std::uniform_real_distribution<double> val(-1, 1);
    TrigExpSeries<double> s;
    for (int t = 0; t < terms; ++t) {
        MultiIndex idx{amp(rng), amp(rng), amp(rng), amp(rng), harm(rng), harm(rng)};
        if (idx.order() > max_order) continue;
        s.add(idx, EtaPoly<double>{val(rng), 0, val(rng)}, EtaPoly<double>{val(rng), val(rng)});
    }
    return s;
}

struct Point4 {
    std::array<double, 4> a;
    double eta, t1, t2, t3;
};

double at(const TrigExpSeries<double>& s, const Point4& p) { return eval_series(s, p.a, p.eta, p.t1, p.t2, p.t3); }

}  // namespace

TEST(EtaPoly, Arithmetic) {
    EtaPoly<double> a{1, 2}, b{0, 0, 3};
    EXPECT_EQ((a * b).coeffs(), (std::vector<double>{0, 0, 3, 6}));
    EXPECT_EQ((a + b).coeffs(), (std::vector<double>{1, 2, 3}));
    EXPECT_TRUE((a - a).empty());
    EXPECT_EQ(a.shifted(2).coeffs(), (std::vector<double>{0, 0, 1, 2}));
    EXPECT_EQ(b.divided_by_eta().coeffs(), (std::vector<double>{0, 3}));
    EXPECT_DOUBLE_EQ(b.eval(2.0), 12.0);
    EXPECT_EQ(b.degree(), 2);
    EXPECT_EQ(EtaPoly<double>{}.degree(), -1);
}

TEST(MultiIndex, KeyRoundTrip) {
    const MultiIndex idx{3, 1, 2, 0, -5, 7};
    EXPECT_EQ(MultiIndex::from_key(idx.key()), idx);
    EXPECT_EQ(idx.order(), 6);
    EXPECT_EQ(idx.exponent(), 2);
    EXPECT_FALSE(idx.canonical());
}

TEST(TrigExpSeries, CanonicalizationPreservesValue) {
    TrigExpSeries<double> s;
    s.add(MultiIndex{1, 0, 0, 0, -1, 2}, EtaPoly<double>{0.5}, EtaPoly<double>{0.25});
    ASSERT_EQ(s.size(), 1u);
    const auto idx = s.slice(1)[0].index();
    EXPECT_TRUE(idx.canonical());
    const Point4 p{{0.7, 0, 0, 0}, 0, 0.3, -1.1, 0};
    const double direct = 0.7 * (0.5 * std::cos(-0.3 - 2.2) + 0.25 * std::sin(-0.3 - 2.2));
    EXPECT_NEAR(at(s, p), direct, 1e-15);
}

TEST(TrigExpSeries, ZeroHarmonicDropsSine) {
    TrigExpSeries<double> s;
    s.add(MultiIndex{0, 0, 1, 1, 0, 0}, EtaPoly<double>{1}, EtaPoly<double>{5});
    EXPECT_TRUE(s.slice(2)[0].s.empty());
}

TEST(TrigExpSeries, AddCancels) {
    TrigExpSeries<double> s;
    s.add(MultiIndex{1, 0, 0, 0, 1, 0}, EtaPoly<double>{1}, {});
    s.add(MultiIndex{1, 0, 0, 0, 1, 0}, EtaPoly<double>{-1}, {});
    EXPECT_EQ(s.size(), 0u);
}

// Product of series must agree with the pointwise product of their values.
TEST(TrigExpSeries, MultiplyMatchesPointwiseProduct) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 5; ++trial) {
        const auto a = random_series(rng, 4, 30), b = random_series(rng, 4, 30);
        const auto c = multiply(a, b, 8, 16);
        for (int k = 0; k < 5; ++k) {
            const Point4 p{{0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng)}, u(rng), 3 * u(rng), 3 * u(rng),
                           u(rng)};
            const double lhs = at(c, p), rhs = at(a, p) * at(b, p);
            EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(rhs)));
        }
    }
}

TEST(TrigExpSeries, MultiplyTruncatesByOrder) {
    TrigExpSeries<double> a;
    a.add(MultiIndex{1, 0, 0, 0, 1, 0}, EtaPoly<double>{1}, {});
    const auto sq = multiply(a, a, 1);
    EXPECT_EQ(sq.size(), 0u);
    const auto sq2 = multiply(a, a, 2);
    // cos^2 = 1/2 + cos(2t)/2
    ASSERT_EQ(sq2.slice(2).size(), 2u);
    EXPECT_DOUBLE_EQ(sq2.slice(2)[0].c[0], 0.5);
}

TEST(TrigExpSeries, DifferentiateMatchesFiniteDifference) {
    std::mt19937 rng(11);
    const auto s = random_series(rng, 5, 40);
    const Point4 p{{0.3, 0.2, 0.1, 0.4}, 0.7, 0.4, 1.3, 0.2};
    const double h = 1e-5;
    auto shift = [&](int which, double d) {
        Point4 q = p;
        (which == 0 ? q.t1 : which == 1 ? q.t2 : q.t3) += d;
        return at(s, q);
    };
    const Angle angles[] = {Angle::theta1, Angle::theta2, Angle::theta3};
    for (int w = 0; w < 3; ++w) {
        const double fd = (shift(w, h) - shift(w, -h)) / (2 * h);
        EXPECT_NEAR(at(differentiate(s, angles[w]), p), fd, 1e-7);
    }
}

TEST(TrigExpSeries, TruncatedAndEquality) {
    std::mt19937 rng(3);
    const auto s = random_series(rng, 6, 50);
    const auto t = s.truncated(3);
    EXPECT_LE(t.max_order(), 3);
    EXPECT_TRUE(t == s.truncated(3));
    EXPECT_FALSE(t == s);
    EXPECT_TRUE((t + TrigExpSeries<double>{}) == t);
}

TEST(AmplitudeSeries, MultiplyAndEval) {
    AmplitudeSeries<double> a, b;
    a.set(amp_key(0, 0, 0, 0), EtaPoly<double>{2});
    a.set(amp_key(2, 0, 0, 0), EtaPoly<double>{1, 0, 3});
    b.set(amp_key(0, 2, 0, 0), EtaPoly<double>{-1});
    const auto c = multiply(a, b, 4);
    const std::array<double, 4> al{0.3, 0.4, 0, 0};
    const double eta = 0.9;
    EXPECT_NEAR(c.eval(al, eta), a.eval(al, eta) * b.eval(al, eta), 1e-15);
    EXPECT_EQ(multiply(a, b, 2).size(), 1u);
    EXPECT_EQ(c.max_order(), 4);
    const auto poly = c.at_amplitudes(al);
    EXPECT_NEAR(poly.eval(eta), c.eval(al, eta), 1e-15);
    EXPECT_EQ(c.truncated(2).size(), 1u);
}
