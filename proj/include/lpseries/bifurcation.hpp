#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

#include "lp_constructor.hpp"

namespace lpseries {

enum class CriticalCase { no_root, trivial_only, hyperboloid_c0, paraboloid_a0, discriminant_D0, generic };

inline std::string to_string(CriticalCase c) {
    switch (c) {
        case CriticalCase::no_root: return "no_root";
        case CriticalCase::trivial_only: return "trivial_only";
        case CriticalCase::hyperboloid_c0: return "hyperboloid_c0";
        case CriticalCase::paraboloid_a0: return "paraboloid_a0";
        case CriticalCase::discriminant_D0: return "discriminant_D0";
        case CriticalCase::generic: return "generic";
    }
    return "?";
}

// Third-order bifurcation equation a*eta^4 + b*eta^2 + c = 0 with
//   a = l1 a1^2 + l2 a3 a4,  b = l3 a1^2 + l4 a2^2 + l5 a3 a4,
//   c = l6 a1^2 + l7 a2^2 + l8 a3 a4 - (w0^2 - n0^2).
struct BifurcationSlice {
    std::array<double, 9> l{};  // l[1]..l[8]
    double freq_gap = 0;        // w0^2 - n0^2
    double a4_alpha2 = 0;       // eta^4 coefficient of d0200, zero by structure
    int order = 0;

    struct Quadratic {
        double a, b, c, sa, sb, sc;  // coefficients and absolute scales
        double D() const { return b * b - 4 * a * c; }
    };

    Quadratic quadratic(const std::array<double, 4>& al) const {
        const double a1 = al[0] * al[0], a2 = al[1] * al[1], a34 = al[2] * al[3];
        Quadratic q;
        q.a = l[1] * a1 + l[2] * a34;
        q.b = l[3] * a1 + l[4] * a2 + l[5] * a34;
        q.c = l[6] * a1 + l[7] * a2 + l[8] * a34 - freq_gap;
        q.sa = std::abs(l[1] * a1) + std::abs(l[2] * a34);
        q.sb = std::abs(l[3] * a1) + std::abs(l[4] * a2) + std::abs(l[5] * a34);
        q.sc = std::abs(l[6] * a1) + std::abs(l[7] * a2) + std::abs(l[8] * a34) + std::abs(freq_gap);
        return q;
    }
};

template <class T>
BifurcationSlice third_order_constants(const SolutionSet<T>& s) {
    if (s.order < 3) throw std::invalid_argument("bifurcation slice needs order >= 3");
    auto need = [&](int i, int j, int k, int m) {
        const AmpKey key = amp_key(i, j, k, m);
        if (!s.delta.contains(key)) throw std::runtime_error("delta series lacks the third-order entries");
        return s.delta.get(key);
    };
    const auto d0000 = need(0, 0, 0, 0);
    const auto d2000 = need(2, 0, 0, 0);
    const auto d0200 = need(0, 2, 0, 0);
    BifurcationSlice b;
    b.order = s.order;
    b.l[1] = double(d2000[4]);
    b.l[3] = double(d2000[2]);
    b.l[6] = double(d2000[0]);
    b.l[4] = double(d0200[2]);
    b.l[7] = double(d0200[0]);
    b.a4_alpha2 = double(d0200[4]);
    if (s.mask.active[2] && s.mask.active[3]) {
        const auto d0011 = need(0, 0, 1, 1);
        b.l[2] = double(d0011[4]);
        b.l[5] = double(d0011[2]);
        b.l[8] = double(d0011[0]);
    }
    b.freq_gap = -double(d0000[0]);
    return b;
}

// Same constants without requiring the hyperbolic amplitudes in the build mask:
// the d0011 entries only depend on the linear data and the order-2 terms.
template <class T>
BifurcationSlice third_order_constants(T mu, Point point) {
    auto p = make_params<T>(mu, point, 5);
    return third_order_constants(build<T>(p, 3, BuildOptions{}));
}

inline CriticalCase classify_critical(const BifurcationSlice& sl, const std::array<double, 4>& al,
                                      double rel_tol = 1e-12) {
    if (al[0] == 0 && al[1] == 0 && al[2] == 0 && al[3] == 0) return CriticalCase::no_root;
    const auto q = sl.quadratic(al);
    if (std::abs(q.c) <= rel_tol * q.sc && q.a != 0 && q.D() > 0 && -q.b / q.a > 0)
        return CriticalCase::hyperboloid_c0;
    if (std::abs(q.a) <= rel_tol * std::max(q.sa, 1e-300) && q.b * q.c < 0) return CriticalCase::paraboloid_a0;
    const double sD = q.sb * q.sb + 4 * q.sa * q.sc;
    if (q.a != 0 && std::abs(q.D()) <= rel_tol * sD && -q.b / (2 * q.a) > 0) return CriticalCase::discriminant_D0;
    return CriticalCase::generic;
}

// Number of nonzero real eta roots of the third-order equation from its
// coefficients (0, 2 or 4).
inline int analytic_root_count(const BifurcationSlice& sl, const std::array<double, 4>& al) {
    const auto q = sl.quadratic(al);
    int n = 0;
    if (q.a == 0) {
        if (q.b != 0 && -q.c / q.b > 0) n = 1;
    } else {
        const double D = q.D();
        if (D > 0) {
            const double sq = std::sqrt(D);
            // stable quadratic roots
            const double t = -0.5 * (q.b + std::copysign(sq, q.b));
            const double u1 = t / q.a, u2 = t != 0 ? q.c / t : -q.b / q.a;
            n = (u1 > 0) + (u2 > 0);
        } else if (D == 0) {
            n = (-q.b / (2 * q.a) > 0) ? 1 : 0;
        }
    }
    return 2 * n;
}

// Sign-change scan of the third-order equation over 0 < eta <= eta_max.
inline int bruteforce_root_count(const BifurcationSlice& sl, const std::array<double, 4>& al, double eta_max = 100,
                                 double step = 1e-3) {
    const auto q = sl.quadratic(al);
    auto f = [&](double e) {
        const double u = e * e;
        return (q.a * u + q.b) * u + q.c;
    };
    const long n = std::lround(eta_max / step);
    int count = 0;
    double prev = f(step);
    if (prev == 0) ++count;
    for (long k = 2; k <= n; ++k) {
        const double cur = f(k * step);
        if (cur == 0)
            ++count;
        else if (prev != 0 && (cur < 0) != (prev < 0))
            ++count;
        prev = cur;
    }
    return 2 * count;
}

struct RootCountCell {
    double alpha1, alpha2, alpha34;
    int analytic, bruteforce;
};

struct RootCountGrid {
    double a1_lo = 0, a1_hi = 0.5;
    double a2_lo = 0, a2_hi = 1.0;
    double a34_lo = -0.5, a34_hi = 0.5;
    int n1 = 50, n2 = 50, n34 = 50;
};

// alpha3 alpha4 enters only as a product; the cell uses alpha3 = p, alpha4 = 1.
inline std::vector<RootCountCell> solution_count_map(const BifurcationSlice& sl, const RootCountGrid& g,
                                                     bool with_bruteforce = true) {
    auto node = [](double lo, double hi, int n, int k) { return n <= 1 ? lo : lo + (hi - lo) * k / (n - 1); };
    std::vector<RootCountCell> out;
    out.reserve(std::size_t(g.n1) * g.n2 * g.n34);
    for (int i = 0; i < g.n1; ++i)
        for (int j = 0; j < g.n2; ++j)
            for (int k = 0; k < g.n34; ++k) {
                RootCountCell c{node(g.a1_lo, g.a1_hi, g.n1, i), node(g.a2_lo, g.a2_hi, g.n2, j),
                                node(g.a34_lo, g.a34_hi, g.n34, k), 0, -1};
                const std::array<double, 4> al{c.alpha1, c.alpha2, c.alpha34, 1.0};
                c.analytic = analytic_root_count(sl, al);
                if (with_bruteforce) c.bruteforce = bruteforce_root_count(sl, al);
                out.push_back(c);
            }
    return out;
}

struct EtaSolutionReport {
    std::array<double, 4> alpha{};
    std::vector<double> roots;  // sorted, symmetric about 0, nonzero
    std::vector<int> multiplicities;
    CriticalCase label = CriticalCase::generic;
    double discriminant = 0;
    bool eta_zero_admissible = true;
    double max_backsubstitution = 0;  // max |Delta(eta)| / scale over reported roots
    std::vector<std::complex<double>> rejected_u;  // complex or negative roots in u = eta^2
    EtaPoly<double> delta;  // Delta(eta) at the amplitudes

    // k-th smallest positive root.
    double positive_root(std::size_t k = 0) const {
        std::size_t seen = 0;
        for (double r : roots)
            if (r > 0 && seen++ == k) return r;
        throw MathDomainError("no admissible nonzero eta root");
    }
};

namespace detail {

inline double poly_scale(const std::vector<double>& c, double x) {
    double s = 0, p = 1;
    for (double v : c) {
        s += std::abs(v) * p;
        p *= std::abs(x);
    }
    return s;
}

inline double horner(const std::vector<double>& c, double x) {
    double r = 0;
    for (std::size_t d = c.size(); d-- > 0;) r = r * x + c[d];
    return r;
}

inline double horner_prime(const std::vector<double>& c, double x) {
    double r = 0;
    for (std::size_t d = c.size(); d-- > 1;) r = r * x + double(d) * c[d];
    return r;
}

}  // namespace detail

// Real nonnegative roots of an ascending-coefficient polynomial, with
// multiplicities; rejected roots are appended to `rejected`.
inline std::vector<std::pair<double, int>> nonnegative_real_roots(std::vector<double> c,
                                                                  std::vector<std::complex<double>>* rejected) {
    while (!c.empty() && c.back() == 0) c.pop_back();
    std::vector<std::pair<double, int>> out;
    if (c.size() <= 1) return out;
    // factor out u = 0
    std::size_t z = 0;
    while (z < c.size() && c[z] == 0) ++z;
    if (z > 0) {
        out.push_back({0.0, int(z)});
        c.erase(c.begin(), c.begin() + z);
    }
    std::vector<std::complex<double>> roots;
    if (c.size() == 2) {
        roots.push_back(-c[0] / c[1]);
    } else if (c.size() > 2) {
        Eigen::VectorXd v(c.size());
        for (std::size_t k = 0; k < c.size(); ++k) v[k] = c[k];
        Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(v);
        for (Eigen::Index k = 0; k < solver.roots().size(); ++k) roots.push_back(solver.roots()[k]);
    }
    std::vector<double> real;
    for (auto r : roots) {
        const double mag = std::max(1.0, std::abs(r));
        if (std::abs(r.imag()) > 1e-7 * mag) {
            if (rejected) rejected->push_back(r);
            continue;
        }
        double u = r.real();
        for (int it = 0; it < 8; ++it) {
            const double d = detail::horner_prime(c, u);
            if (d == 0) break;
            const double step = detail::horner(c, u) / d;
            if (!std::isfinite(step)) break;
            u -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(u))) break;
        }
        if (u < -1e-14) {
            if (rejected) rejected->push_back(u);
            continue;
        }
        real.push_back(std::max(u, 0.0));
    }
    std::sort(real.begin(), real.end());
    for (double u : real) {
        if (!out.empty() && std::abs(u - out.back().first) <= 1e-6 * std::max(1.0, u))
            ++out.back().second;
        else
            out.push_back({u, 1});
    }
    return out;
}

template <class T>
EtaSolutionReport solve_eta(const SolutionSet<T>& s, const std::array<double, 4>& alpha) {
    if (s.order < 3) throw std::invalid_argument("solve_eta needs order >= 3");
    for (double a : alpha)
        if (!std::isfinite(a)) throw std::invalid_argument("amplitudes must be finite");
    EtaSolutionReport r;
    r.alpha = alpha;
    std::array<T, 4> at;
    for (int k = 0; k < 4; ++k) at[k] = T(alpha[k]);
    const auto poly = s.delta.at_amplitudes(at);
    std::vector<double> pc;
    for (const auto& v : poly.coeffs()) pc.push_back(double(v));
    r.delta = EtaPoly<double>(pc);
    // even polynomial: coefficients in u = eta^2
    std::vector<double> uc;
    for (std::size_t d = 0; d < pc.size(); d += 2) uc.push_back(pc[d]);
    const auto u_roots = nonnegative_real_roots(uc, &r.rejected_u);
    std::vector<std::pair<double, int>> pos;
    for (auto [u, m] : u_roots) {
        if (u <= 0) continue;
        double e = std::sqrt(u);
        // polish in eta directly
        for (int it = 0; it < 6; ++it) {
            const double d = detail::horner_prime(pc, e);
            if (d == 0) break;
            const double st = detail::horner(pc, e) / d;
            if (!std::isfinite(st) || std::abs(st) > 1e-3 * e) break;
            e -= st;
        }
        pos.push_back({e, m});
        r.max_backsubstitution =
            std::max(r.max_backsubstitution, std::abs(detail::horner(pc, e)) / detail::poly_scale(pc, e));
    }
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
        r.roots.push_back(-it->first);
        r.multiplicities.push_back(it->second);
    }
    for (auto [e, m] : pos) {
        r.roots.push_back(e);
        r.multiplicities.push_back(m);
    }
    const bool zero_alpha = alpha[0] == 0 && alpha[1] == 0 && alpha[2] == 0 && alpha[3] == 0;
    const auto sl = third_order_constants(s);
    r.discriminant = sl.quadratic(alpha).D();
    r.label = classify_critical(sl, alpha);
    if (zero_alpha)
        r.label = CriticalCase::no_root;
    else if (r.roots.empty())
        r.label = CriticalCase::trivial_only;
    return r;
}

}  // namespace lpseries
