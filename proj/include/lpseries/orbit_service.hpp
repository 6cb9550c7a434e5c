#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "bifurcation.hpp"
#include "crtbp_model.hpp"
#include "lp_constructor.hpp"

namespace lpseries {

struct OrbitSpec {
    std::array<double, 4> alpha{};
    double phi1 = 0, phi2 = 0;
    double eta = 0;
    int order = 0;  // 0: full built order

    double& alpha1() { return alpha[0]; }
    double& alpha2() { return alpha[1]; }
    double& alpha3() { return alpha[2]; }
    double& alpha4() { return alpha[3]; }
};

enum class CenterClass {
    libration_point,
    bifurcated_libration_point,
    planar_lyapunov,
    vertical_lyapunov,
    bifurcated_vertical,
    lissajous,
    halo_northern,
    halo_southern,
    second_type_halo_northern,
    second_type_halo_southern,
    quasihalo,
};

enum class BranchClass { center, unstable_manifold, stable_manifold, transit, non_transit };

inline std::string to_string(CenterClass c) {
    switch (c) {
        case CenterClass::libration_point: return "libration_point";
        case CenterClass::bifurcated_libration_point: return "bifurcated_libration_point";
        case CenterClass::planar_lyapunov: return "planar_lyapunov";
        case CenterClass::vertical_lyapunov: return "vertical_lyapunov";
        case CenterClass::bifurcated_vertical: return "bifurcated_vertical";
        case CenterClass::lissajous: return "lissajous";
        case CenterClass::halo_northern: return "halo_northern";
        case CenterClass::halo_southern: return "halo_southern";
        case CenterClass::second_type_halo_northern: return "second_type_halo_northern";
        case CenterClass::second_type_halo_southern: return "second_type_halo_southern";
        case CenterClass::quasihalo: return "quasihalo";
    }
    return "?";
}

inline std::string to_string(BranchClass b) {
    switch (b) {
        case BranchClass::center: return "center";
        case BranchClass::unstable_manifold: return "unstable_manifold";
        case BranchClass::stable_manifold: return "stable_manifold";
        case BranchClass::transit: return "transit";
        case BranchClass::non_transit: return "non_transit";
    }
    return "?";
}

struct OrbitClass {
    CenterClass center = CenterClass::libration_point;
    BranchClass branch = BranchClass::center;

    std::string label() const {
        return branch == BranchClass::center ? to_string(center) : to_string(branch) + ":" + to_string(center);
    }
    bool operator==(const OrbitClass&) const = default;
};

// Table 1 mapping over the sign lattice of (alpha, eta).
inline OrbitClass classify(const OrbitSpec& s) {
    const bool a1 = s.alpha[0] != 0, a2 = s.alpha[1] != 0, e = s.eta != 0;
    OrbitClass c;
    if (!a1 && !a2)
        c.center = e ? CenterClass::bifurcated_libration_point : CenterClass::libration_point;
    else if (!a1)
        c.center = e ? CenterClass::bifurcated_vertical : CenterClass::vertical_lyapunov;
    else if (!a2)
        c.center = !e ? CenterClass::planar_lyapunov
                      : (s.eta > 0 ? CenterClass::halo_northern : CenterClass::halo_southern);
    else
        c.center = e ? CenterClass::quasihalo : CenterClass::lissajous;
    const double a3 = s.alpha[2], a4 = s.alpha[3];
    if (a3 == 0 && a4 == 0)
        c.branch = BranchClass::center;
    else if (a4 == 0)
        c.branch = BranchClass::unstable_manifold;
    else if (a3 == 0)
        c.branch = BranchClass::stable_manifold;
    else
        c.branch = a3 * a4 < 0 ? BranchClass::transit : BranchClass::non_transit;
    return c;
}

// Halo refinement: a halo eta whose square sits on the large root of the
// third-order equation belongs to the second-type family.
inline OrbitClass classify(const OrbitSpec& s, const BifurcationSlice& slice) {
    OrbitClass c = classify(s);
    if (c.center != CenterClass::halo_northern && c.center != CenterClass::halo_southern) return c;
    const auto q = slice.quadratic(s.alpha);
    if (q.a == 0 || q.D() < 0) return c;
    const double sq = std::sqrt(q.D());
    double u1 = (-q.b - sq) / (2 * q.a), u2 = (-q.b + sq) / (2 * q.a);
    if (std::abs(u1) > std::abs(u2)) std::swap(u1, u2);
    const double u = s.eta * s.eta;
    auto dist = [&](double r) { return r > 0 ? std::abs(std::log(u / r)) : INFINITY; };
    if (dist(u2) < dist(u1))
        c.center = s.eta > 0 ? CenterClass::second_type_halo_northern : CenterClass::second_type_halo_southern;
    return c;
}

struct DeltaResidual {
    double value = 0;
    double scale = 0;
};

template <class T>
DeltaResidual delta_residual(const SolutionSet<T>& sol, const OrbitSpec& s) {
    DeltaResidual r;
    const int n = s.order > 0 ? s.order : sol.order;
    for (const auto& [k, v] : sol.delta.terms()) {
        if (amp_order(k) > n - 1) continue;
        const auto a = amp_unpack(k);
        double amp = 1;
        for (int c = 0; c < 4; ++c) amp *= std::pow(s.alpha[c], a[c]);
        double ep = 1;
        for (int d = 0; d <= v.degree(); ++d, ep *= s.eta) {
            const double t = double(v[d]) * amp * ep;
            r.value += t;
            r.scale += std::abs(t);
        }
    }
    return r;
}

template <class T>
void check_admissible(const SolutionSet<T>& sol, const OrbitSpec& s, double rel_tol = 1e-8) {
    for (double a : s.alpha)
        if (!std::isfinite(a)) throw std::invalid_argument("amplitudes must be finite");
    if (!std::isfinite(s.eta) || !std::isfinite(s.phi1) || !std::isfinite(s.phi2))
        throw std::invalid_argument("phases and eta must be finite");
    if (s.order < 0 || s.order > sol.order) throw std::invalid_argument("orbit order outside the built range");
    for (int c = 0; c < 4; ++c)
        if (s.alpha[c] != 0 && !sol.mask.active[c])
            throw std::invalid_argument("amplitude " + std::to_string(c + 1) + " is not in the built series");
    if (s.eta == 0) return;
    const auto r = delta_residual(sol, s);
    if (!(std::abs(r.value) < rel_tol * r.scale))
        throw MathDomainError("inadmissible orbit: eta*Delta != 0 (|Delta| = " + std::to_string(std::abs(r.value)) +
                              ")");
}

template <class T = double>
struct Frequencies {
    T omega, nu, lambda;
};

template <class T>
Frequencies<T> scalar_frequencies(const SolutionSet<T>& sol, const OrbitSpec& s, bool check = true) {
    if (check)
        check_admissible(sol, s);
    else if (s.order < 0 || s.order > sol.order)
        throw std::invalid_argument("orbit order outside the built range");
    const int n = s.order > 0 ? s.order : sol.order;
    std::array<T, 4> a;
    for (int c = 0; c < 4; ++c) a[c] = T(s.alpha[c]);
    const T e(s.eta);
    Frequencies<T> f{sol.omega.truncated(n - 1).eval(a, e), sol.nu.truncated(n - 1).eval(a, e),
                     sol.lambda.truncated(n - 1).eval(a, e)};
    return f;
}

// The series collapsed at fixed (alpha, eta) into harmonics
//   Re(z exp(i(p th1 + q th2))) exp(e th3),  z = C - iS,
// so that positions and time derivatives cost one table build per instant.
template <class T = double>
class CompiledOrbit {
public:
    struct Entry {
        int p, q, e;
        Cplx<T> z;
    };

    // check = false evaluates off the eta Delta = 0 surface (residual studies).
    CompiledOrbit(const SolutionSet<T>& sol, const OrbitSpec& spec, bool check = true)
        : params_(sol.params), spec_(spec) {
        const int n = spec.order > 0 ? spec.order : sol.order;
        auto f = scalar_frequencies(sol, spec, check);
        omega_ = f.omega;
        nu_ = f.nu;
        lambda_ = f.lambda;
        std::array<T, 4> a;
        for (int c = 0; c < 4; ++c) a[c] = T(spec.alpha[c]);
        const auto pw = amplitude_powers(a, std::max(n, 0));
        const T eta(spec.eta);
        for (int c = 0; c < 3; ++c) {
            std::map<std::tuple<int, int, int>, Cplx<T>> acc;
            const auto& ser = sol.coord(c);
            for (int o = 0; o <= std::min(n, ser.max_order()); ++o)
                for (const auto& t : ser.slice(o)) {
                    const auto idx = t.index();
                    const T amp = pw[0][idx.i] * pw[1][idx.j] * pw[2][idx.k] * pw[3][idx.m];
                    if (amp == T(0)) continue;
                    auto& z = acc[{idx.p, idx.q, idx.exponent()}];
                    z = z + Cplx<T>(t.c.eval(eta) * amp, -t.s.eval(eta) * amp);
                }
            for (const auto& [k, z] : acc) {
                if (z.re == T(0) && z.im == T(0)) continue;
                const auto [p, q, e] = k;
                entries_[c].push_back({p, q, e, z});
                pmax_ = std::max(pmax_, p);
                qmax_ = std::max(qmax_, std::abs(q));
                emax_ = std::max(emax_, std::abs(e));
            }
        }
    }

    const SystemParamsT<T>& params() const { return params_; }
    const OrbitSpec& spec() const { return spec_; }
    T omega() const { return omega_; }
    T nu() const { return nu_; }
    T lambda() const { return lambda_; }
    const std::vector<Entry>& entries(int c) const { return entries_[c]; }

    // Local-frame position, velocity and acceleration at time t.
    void eval(const T& t, std::array<T, 3>& r, std::array<T, 3>* v = nullptr, std::array<T, 3>* acc = nullptr) const {
        using std::cos;
        using std::exp;
        using std::sin;
        const T th1 = omega_ * t + T(spec_.phi1), th2 = nu_ * t + T(spec_.phi2), th3 = lambda_ * t;
        if (emax_ > 0 && abs_of(T(emax_) * th3) > T(700)) throw MathDomainError("exponential overflow in series");
        std::vector<Cplx<T>> e1(pmax_ + 1), e2(2 * qmax_ + 1);
        std::vector<T> ex(2 * emax_ + 1);
        const Cplx<T> u1(cos(th1), sin(th1)), u2(cos(th2), sin(th2));
        e1[0] = Cplx<T>(T(1));
        for (int p = 1; p <= pmax_; ++p) e1[p] = e1[p - 1] * u1;
        e2[qmax_] = Cplx<T>(T(1));
        for (int q = 1; q <= qmax_; ++q) {
            e2[qmax_ + q] = e2[qmax_ + q - 1] * u2;
            e2[qmax_ - q] = Cplx<T>(e2[qmax_ + q].re, -e2[qmax_ + q].im);
        }
        ex[emax_] = T(1);
        if (emax_ > 0) {
            const T g = exp(th3), gi = exp(-th3);
            for (int e = 1; e <= emax_; ++e) {
                ex[emax_ + e] = ex[emax_ + e - 1] * g;
                ex[emax_ - e] = ex[emax_ - e + 1] * gi;
            }
        }
        for (int c = 0; c < 3; ++c) {
            T pos(0), vel(0), ac(0);
            for (const auto& en : entries_[c]) {
                const Cplx<T> w = en.z * (e1[en.p] * e2[qmax_ + en.q]) * ex[emax_ + en.e];
                pos += w.re;
                if (v || acc) {
                    const Cplx<T> sfac(T(en.e) * lambda_, T(en.p) * omega_ + T(en.q) * nu_);
                    const Cplx<T> dw = w * sfac;
                    vel += dw.re;
                    if (acc) ac += (dw * sfac).re;
                }
            }
            r[c] = pos;
            if (v) (*v)[c] = vel;
            if (acc) (*acc)[c] = ac;
        }
    }

    State6<T> state(const T& t, Frame frame = Frame::local) const {
        State6<T> s;
        s.frame = Frame::local;
        eval(t, s.r, &s.v);
        return frame == Frame::local ? s : synodic_from_local(params_, s);
    }

private:
    SystemParamsT<T> params_;
    OrbitSpec spec_;
    T omega_{}, nu_{}, lambda_{};
    std::array<std::vector<Entry>, 3> entries_;
    int pmax_ = 0, qmax_ = 0, emax_ = 0;
};

template <class T>
std::vector<State6<T>> sample_trajectory(const SolutionSet<T>& sol, const OrbitSpec& spec,
                                         const std::vector<double>& t_grid, Frame frame = Frame::synodic) {
    for (double t : t_grid)
        if (!std::isfinite(t)) throw std::invalid_argument("time grid must be finite");
    CompiledOrbit<T> orb(sol, spec);
    std::vector<State6<T>> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) out.push_back(orb.state(T(t), frame));
    return out;
}

enum class Branch { unstable_plus, unstable_minus, stable_plus, stable_minus };

inline Branch parse_branch(const std::string& s) {
    if (s == "unstable+") return Branch::unstable_plus;
    if (s == "unstable-") return Branch::unstable_minus;
    if (s == "stable+") return Branch::stable_plus;
    if (s == "stable-") return Branch::stable_minus;
    throw std::invalid_argument("unknown branch '" + s + "'");
}

// Stable branches are meant to be propagated backward in time.
inline bool branch_is_backward(Branch b) { return b == Branch::stable_plus || b == Branch::stable_minus; }

template <class T>
OrbitSpec manifold_branch(const SolutionSet<T>& sol, const OrbitSpec& center, Branch b, double epsilon) {
    if (center.alpha[2] != 0 || center.alpha[3] != 0)
        throw std::invalid_argument("center spec must have alpha3 = alpha4 = 0");
    if (!(epsilon >= 0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be finite and >= 0");
    OrbitSpec s = center;
    if (epsilon == 0) return s;
    const double sgn = (b == Branch::unstable_plus || b == Branch::stable_plus) ? 1.0 : -1.0;
    s.alpha[branch_is_backward(b) ? 3 : 2] = sgn * epsilon;
    if (center.eta != 0) {
        const auto rep = solve_eta(sol.truncated(s.order > 0 ? s.order : sol.order), s.alpha);
        double best = NAN;
        for (double r : rep.roots)
            if ((r > 0) == (center.eta > 0) && (std::isnan(best) || std::abs(r - center.eta) < std::abs(best - center.eta)))
                best = r;
        if (std::isnan(best)) throw MathDomainError("no admissible eta root at the perturbed amplitudes");
        s.eta = best;
    }
    return s;
}

}  // namespace lpseries
