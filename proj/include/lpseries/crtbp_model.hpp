#pragma once

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "numeric.hpp"

namespace lpseries {

enum class Point { L1, L2, L3 };
enum class Frame { synodic, local };

inline std::string to_string(Point p) {
    switch (p) {
        case Point::L1: return "L1";
        case Point::L2: return "L2";
        case Point::L3: return "L3";
    }
    return "?";
}

inline Point parse_point(const std::string& s) {
    if (s == "L1" || s == "l1") return Point::L1;
    if (s == "L2" || s == "l2") return Point::L2;
    if (s == "L3" || s == "l3") return Point::L3;
    throw std::invalid_argument("unknown libration point '" + s + "'");
}

inline constexpr double kSunEarthMu = 3.040423398444176e-6;
inline constexpr double kEarthMoonMu = 1.215058191870689e-2;

template <class T = double>
struct SystemParamsT {
    T mu;
    Point point;
    T gamma;
    std::vector<T> c;  // c[n] for n = 0..n_max, entries 0 and 1 unused
    int n_max;

    // Orientation of the local x axis relative to synodic X.
    int sign() const { return point == Point::L3 ? 1 : -1; }

    T x_point() const {
        switch (point) {
            case Point::L1: return mu - 1 + gamma;
            case Point::L2: return mu - 1 - gamma;
            case Point::L3: return mu + gamma;
        }
        return T(0);
    }
};

using SystemParams = SystemParamsT<double>;

template <class T>
T euler_quintic(T mu, Point point, T g) {
    switch (point) {
        case Point::L1:
            return ((((g - (3 - mu)) * g + (3 - 2 * mu)) * g - mu) * g + 2 * mu) * g - mu;
        case Point::L2:
            return ((((g + (3 - mu)) * g + (3 - 2 * mu)) * g - mu) * g - 2 * mu) * g - mu;
        case Point::L3:
            return ((((g + (2 + mu)) * g + (1 + 2 * mu)) * g - (1 - mu)) * g - 2 * (1 - mu)) * g -
                   (1 - mu);
    }
    return T(0);
}

template <class T>
T euler_quintic_prime(T mu, Point point, T g) {
    switch (point) {
        case Point::L1:
            return (((5 * g - 4 * (3 - mu)) * g + 3 * (3 - 2 * mu)) * g - 2 * mu) * g + 2 * mu;
        case Point::L2:
            return (((5 * g + 4 * (3 - mu)) * g + 3 * (3 - 2 * mu)) * g - 2 * mu) * g - 2 * mu;
        case Point::L3:
            return (((5 * g + 4 * (2 + mu)) * g + 3 * (1 + 2 * mu)) * g - 2 * (1 - mu)) * g -
                   2 * (1 - mu);
    }
    return T(0);
}

template <class T>
T legendre_coefficient(T mu, Point point, T gamma, int n) {
    using std::pow;
    T g3 = gamma * gamma * gamma;
    T sgn_n = (n % 2 == 0) ? T(1) : T(-1);
    switch (point) {
        case Point::L1:
            return (mu + sgn_n * (1 - mu) * pow(gamma / (1 - gamma), n + 1)) / g3;
        case Point::L2:
            return (sgn_n * mu + sgn_n * (1 - mu) * pow(gamma / (1 + gamma), n + 1)) / g3;
        case Point::L3:
            return sgn_n * (1 - mu + mu * pow(gamma / (1 + gamma), n + 1)) / g3;
    }
    return T(0);
}

template <class T = double>
SystemParamsT<T> make_params(T mu, Point point, int n_max) {
    if (!(mu > 0) || mu > T(0.5)) throw std::invalid_argument("mass ratio must lie in (0, 0.5]");
    if (n_max < 2) throw std::invalid_argument("n_max must be at least 2");
    auto f = [&](const T& g) { return euler_quintic(mu, point, g); };
    T lo(0), hi(1);
    if ((f(lo) < 0) == (f(hi) < 0)) throw MathDomainError("quintic root not bracketed in (0,1)");
    T g = bisect<T>(lo, hi, f, 400);
    for (int it = 0; it < 4; ++it) {
        T d = euler_quintic_prime(mu, point, g);
        if (d == T(0)) break;
        g -= f(g) / d;
    }
    SystemParamsT<T> p;
    p.mu = mu;
    p.point = point;
    p.gamma = g;
    p.n_max = n_max;
    p.c.assign(n_max + 1, T(0));
    for (int n = 2; n <= n_max; ++n) p.c[n] = legendre_coefficient(mu, point, g, n);
    if (!(p.c[2] > 1)) throw MathDomainError("c2 <= 1: degenerate linear type");
    return p;
}

template <class T = double>
struct LinearConstants {
    T omega0, nu0, lambda0, kappa1, kappa2, kappa3;
};

template <class T>
LinearConstants<T> frequencies(const SystemParamsT<T>& p) {
    using std::sqrt;
    const T c2 = p.c[2];
    if (!(c2 > 1)) throw MathDomainError("c2 <= 1: degenerate linear type");
    const T root = sqrt(9 * c2 * c2 - 8 * c2);
    LinearConstants<T> k;
    k.omega0 = sqrt((2 - c2 + root) / 2);
    k.lambda0 = sqrt((c2 - 2 + root) / 2);
    k.nu0 = sqrt(c2);
    const T w2 = k.omega0 * k.omega0, l2 = k.lambda0 * k.lambda0;
    k.kappa1 = -(w2 + 1 + 2 * c2) / (2 * k.omega0);
    k.kappa2 = (l2 - 1 - 2 * c2) / (2 * k.lambda0);
    k.kappa3 = (c2 - w2) / (c2 + l2);
    return k;
}

template <class T = double>
struct State6 {
    std::array<T, 3> r{};
    std::array<T, 3> v{};
    Frame frame = Frame::synodic;
};

template <class T>
State6<T> synodic_from_local(const SystemParamsT<T>& p, const State6<T>& s) {
    if (s.frame != Frame::local) throw std::invalid_argument("expected a local-frame state");
    const T sg = T(p.sign()) * p.gamma;
    State6<T> o;
    o.frame = Frame::synodic;
    o.r = {sg * s.r[0] + p.x_point(), sg * s.r[1], p.gamma * s.r[2]};
    o.v = {sg * s.v[0], sg * s.v[1], p.gamma * s.v[2]};
    return o;
}

template <class T>
State6<T> local_from_synodic(const SystemParamsT<T>& p, const State6<T>& s) {
    if (s.frame != Frame::synodic) throw std::invalid_argument("expected a synodic-frame state");
    const T sg = T(p.sign()) * p.gamma;
    State6<T> o;
    o.frame = Frame::local;
    o.r = {(s.r[0] - p.x_point()) / sg, s.r[1] / sg, s.r[2] / p.gamma};
    o.v = {s.v[0] / sg, s.v[1] / sg, s.v[2] / p.gamma};
    return o;
}

template <class T>
T potential_omega(const SystemParamsT<T>& p, const std::array<T, 3>& r) {
    using std::sqrt;
    const T mu = p.mu;
    T r1 = sqrt((r[0] - mu) * (r[0] - mu) + r[1] * r[1] + r[2] * r[2]);
    T r2 = sqrt((r[0] - mu + 1) * (r[0] - mu + 1) + r[1] * r[1] + r[2] * r[2]);
    if (r1 == T(0) || r2 == T(0)) throw MathDomainError("collision with a primary");
    return (r[0] * r[0] + r[1] * r[1]) / 2 + (1 - mu) / r1 + mu / r2 + mu * (1 - mu) / 2;
}

template <class T>
std::array<T, 3> potential_omega_gradient(const SystemParamsT<T>& p, const std::array<T, 3>& r) {
    using std::sqrt;
    const T mu = p.mu;
    const T dx1 = r[0] - mu, dx2 = r[0] - mu + 1;
    const T yz = r[1] * r[1] + r[2] * r[2];
    const T r1s = dx1 * dx1 + yz, r2s = dx2 * dx2 + yz;
    if (r1s == T(0) || r2s == T(0)) throw MathDomainError("collision with a primary");
    const T q1 = (1 - mu) / (r1s * sqrt(r1s));
    const T q2 = mu / (r2s * sqrt(r2s));
    return {r[0] - q1 * dx1 - q2 * dx2, r[1] - (q1 + q2) * r[1], -(q1 + q2) * r[2]};
}

template <class T>
std::array<T, 3> eom_rhs(const SystemParamsT<T>& p, const State6<T>& s) {
    if (s.frame == Frame::synodic) {
        auto g = potential_omega_gradient(p, s.r);
        return {2 * s.v[1] + g[0], -2 * s.v[0] + g[1], g[2]};
    }
    auto syn = synodic_from_local(p, s);
    auto g = potential_omega_gradient(p, syn.r);
    const T sg = T(p.sign()) * p.gamma;
    return {2 * s.v[1] + g[0] / sg, -2 * s.v[0] + g[1] / sg, g[2] / p.gamma};
}

template <class T>
T jacobi_constant(const SystemParamsT<T>& p, const State6<T>& s) {
    if (s.frame != Frame::synodic) throw std::invalid_argument("Jacobi constant needs a synodic state");
    return 2 * potential_omega(p, s.r) - (s.v[0] * s.v[0] + s.v[1] * s.v[1] + s.v[2] * s.v[2]);
}

// Gradient of sum_{n=3}^{n_max} c_n rho^n P_n(x/rho) at a numeric local point.
template <class T>
std::array<T, 3> legendre_gradient(const SystemParamsT<T>& p, const std::array<T, 3>& r, int n_max = -1) {
    if (n_max < 0) n_max = p.n_max;
    const T x = r[0];
    const T rho2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
    // tk[k] = rho^k P_k(x/rho); rk[j] from the y-derivative recurrence
    std::vector<T> tk(n_max + 1), rk(n_max + 1);
    tk[0] = 1;
    if (n_max >= 1) tk[1] = x;
    for (int k = 2; k <= n_max; ++k)
        tk[k] = (T(2 * k - 1) / k) * x * tk[k - 1] - (T(k - 1) / k) * rho2 * tk[k - 2];
    rk[0] = -1;
    if (n_max >= 1) rk[1] = -3 * x;
    for (int j = 2; j + 2 <= n_max; ++j) {
        const int n = j + 2;
        const T a = T(2 * n - 1) / n, b = T(n - 1) / n;
        rk[j] = a * x * rk[j - 1] - b * rho2 * rk[j - 2] - 2 * b * tk[j];
    }
    T gx(0), s(0);
    for (int k = 2; k + 1 <= n_max; ++k) gx += p.c[k + 1] * T(k + 1) * tk[k];
    for (int j = 1; j + 2 <= n_max; ++j) s += p.c[j + 2] * rk[j];
    return {gx, r[1] * s, r[2] * s};
}

}  // namespace lpseries
