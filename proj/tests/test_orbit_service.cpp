#include <gtest/gtest.h>

#include <cmath>

#include <lpseries/orbit_service.hpp>

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

const SolutionSet<double>& full7() {
    static const SolutionSet<double> s = build<double>(kSunEarthMu, Point::L1, 7);
    return s;
}

OrbitSpec spec(double a1, double a2, double a3 = 0, double a4 = 0, double eta = 0) {
    OrbitSpec s;
    s.alpha = {a1, a2, a3, a4};
    s.eta = eta;
    return s;
}

}  // namespace

TEST(Classify, SignLattice) {
    EXPECT_EQ(classify(spec(0, 0)).label(), "libration_point");
    EXPECT_EQ(classify(spec(0.1, 0)).label(), "planar_lyapunov");
    EXPECT_EQ(classify(spec(0, 0.1)).label(), "vertical_lyapunov");
    EXPECT_EQ(classify(spec(0.1, 0, 0, 0, 1.2)).label(), "halo_northern");
    EXPECT_EQ(classify(spec(0.1, 0, 0, 0, -1.2)).label(), "halo_southern");
    EXPECT_EQ(classify(spec(0.1, 0.2, 0, 0, 1.2)).label(), "quasihalo");
    EXPECT_EQ(classify(spec(0, 0, 0, 0, 2)).label(), "bifurcated_libration_point");
    EXPECT_EQ(classify(spec(0, 0.1, 0, 0, 2)).label(), "bifurcated_vertical");
    EXPECT_EQ(classify(spec(0.1, 0.2, 1e-3)).label(), "unstable_manifold:lissajous");
    EXPECT_EQ(classify(spec(0.1, 0.2, 0, 1e-3)).label(), "stable_manifold:lissajous");
    EXPECT_EQ(classify(spec(0.1, 0, 1e-3, -1e-3)).label(), "transit:planar_lyapunov");
    EXPECT_EQ(classify(spec(0.1, 0, 1e-3, 1e-3)).label(), "non_transit:planar_lyapunov");
}

TEST(Classify, SecondTypeHaloUsesLargeRoot) {
    const auto sl = third_order_constants(full7());
    const std::array<double, 4> al{0.16, 0, 0, 0};
    const auto q = sl.quadratic(al);
    const double sq = std::sqrt(q.D());
    double u1 = (-q.b - sq) / (2 * q.a), u2 = (-q.b + sq) / (2 * q.a);
    if (u1 > u2) std::swap(u1, u2);
    ASSERT_GT(u1, 0);
    EXPECT_EQ(classify(spec(0.16, 0, 0, 0, std::sqrt(u1)), sl).center, CenterClass::halo_northern);
    EXPECT_EQ(classify(spec(0.16, 0, 0, 0, -std::sqrt(u2)), sl).center, CenterClass::second_type_halo_southern);
}

TEST(Frequencies, ZeroAmplitudeGivesLinearValues) {
    const auto f = scalar_frequencies(center9(), spec(0, 0));
    EXPECT_DOUBLE_EQ(f.omega, center9().lin.omega0);
    EXPECT_DOUBLE_EQ(f.nu, center9().lin.nu0);
    EXPECT_DOUBLE_EQ(f.lambda, center9().lin.lambda0);
}

TEST(Trajectory, ZeroAmplitudeSitsAtThePoint) {
    const auto pts = sample_trajectory(center9(), spec(0, 0), {0.0, 1.0, 5.0});
    for (const auto& s : pts) {
        EXPECT_DOUBLE_EQ(s.r[0], center9().params.x_point());
        EXPECT_EQ(s.r[1], 0.0);
        EXPECT_EQ(s.r[2], 0.0);
        for (double v : s.v) EXPECT_EQ(v, 0.0);
    }
}

TEST(Trajectory, PlanarOrbitStaysInPlane) {
    std::vector<double> ts;
    for (int k = 0; k < 50; ++k) ts.push_back(0.13 * k);
    for (const auto& s : sample_trajectory(center9(), spec(0.1, 0), ts)) {
        EXPECT_LT(std::abs(s.r[2]), 1e-14);
        EXPECT_LT(std::abs(s.v[2]), 1e-14);
    }
}

// z -> -z maps (eta, phi2) to (-eta, phi2 + pi); for halos alpha2 = 0 and the phase drops out.
TEST(Trajectory, EtaSignMirrorsZ) {
    std::vector<double> ts;
    for (int k = 0; k < 40; ++k) ts.push_back(0.17 * k);
    for (double a2 : {0.0, 0.02}) {
        const double eta = solve_eta(center9(), {0.16, a2, 0, 0}).positive_root();
        auto sp = spec(0.16, a2, 0, 0, eta), sm = spec(0.16, a2, 0, 0, -eta);
        sp.phi1 = sm.phi1 = 0.3;
        sp.phi2 = -0.7;
        sm.phi2 = a2 == 0 ? 5.0 : -0.7 + M_PI;
        const auto a = sample_trajectory(center9(), sp, ts), b = sample_trajectory(center9(), sm, ts);
        for (std::size_t k = 0; k < ts.size(); ++k) {
            EXPECT_NEAR(a[k].r[0], b[k].r[0], 1e-12);
            EXPECT_NEAR(a[k].r[1], b[k].r[1], 1e-12);
            EXPECT_NEAR(a[k].r[2], -b[k].r[2], 1e-12);
        }
    }
}

TEST(CompiledOrbit, VelocityMatchesFiniteDifference) {
    auto s = spec(0.1, 0.05, 1e-3, -2e-3);
    s.phi1 = 0.4;
    const CompiledOrbit<double> orb(full7(), s);
    const double t = 1.3, h = 1e-5;
    std::array<double, 3> rp, rm, r, v, a, vp, vm;
    orb.eval(t + h, rp, &vp);
    orb.eval(t - h, rm, &vm);
    orb.eval(t, r, &v, &a);
    for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(v[c], (rp[c] - rm[c]) / (2 * h), 1e-9);
        EXPECT_NEAR(a[c], (vp[c] - vm[c]) / (2 * h), 1e-9);
    }
}

// A small-amplitude series solution satisfies the local equations of motion.
TEST(CompiledOrbit, SatisfiesEquationsOfMotion) {
    const CompiledOrbit<double> orb(center9(), spec(0.01, 0.01));
    for (double t : {0.0, 0.9, 3.3}) {
        State6<double> st;
        st.frame = Frame::local;
        std::array<double, 3> acc;
        orb.eval(t, st.r, &st.v, &acc);
        const auto f = eom_rhs(orb.params(), st);
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(acc[c], f[c], 1e-12);
    }
}

TEST(Admissibility, RejectsOffSurfaceEta) {
    EXPECT_THROW(sample_trajectory(center9(), spec(0.16, 0, 0, 0, 0.5), {0.0}), MathDomainError);
    EXPECT_THROW(sample_trajectory(center9(), spec(0.1, 0, 1e-3, 0), {0.0}), std::invalid_argument);
    auto s = spec(0.1, 0);
    s.order = 10;
    EXPECT_THROW(check_admissible(center9(), s), std::invalid_argument);
    EXPECT_THROW(sample_trajectory(center9(), spec(0.1, 0), {NAN}), std::invalid_argument);
}

TEST(Admissibility, TruncatedOrderUsesItsOwnRoot) {
    auto s = spec(0.16, 0.02);
    s.order = 5;
    s.eta = solve_eta(center9().truncated(5), s.alpha).positive_root();
    EXPECT_NO_THROW(check_admissible(center9(), s));
}

TEST(Manifold, BranchSelection) {
    EXPECT_EQ(parse_branch("stable-"), Branch::stable_minus);
    EXPECT_THROW(parse_branch("up"), std::invalid_argument);
    const auto c = spec(0.1, 0.05);
    EXPECT_EQ(manifold_branch(full7(), c, Branch::unstable_plus, 0.0).alpha, c.alpha);
    const auto u = manifold_branch(full7(), c, Branch::unstable_minus, 1e-3);
    EXPECT_EQ(u.alpha[2], -1e-3);
    EXPECT_EQ(classify(u).branch, BranchClass::unstable_manifold);
    EXPECT_THROW(manifold_branch(full7(), u, Branch::stable_plus, 1e-3), std::invalid_argument);
    EXPECT_THROW(manifold_branch(full7(), c, Branch::stable_plus, -1.0), std::invalid_argument);
}

TEST(Manifold, QuasihaloBranchStaysAdmissible) {
    auto c = spec(0.16, 0.02);
    c.eta = solve_eta(full7(), c.alpha).positive_root();
    const auto s = manifold_branch(full7(), c, Branch::stable_minus, 1e-3);
    EXPECT_EQ(s.alpha[3], -1e-3);
    EXPECT_GT(s.eta, 0);
    EXPECT_NEAR(s.eta, c.eta, 1e-2);
    EXPECT_NO_THROW(check_admissible(full7(), s));
    const auto r = delta_residual(full7(), s);
    EXPECT_LT(std::abs(r.value), 1e-10 * r.scale);
}
