#pragma once

#include <algorithm>
#include <initializer_list>
#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "crtbp_model.hpp"
#include "legendre.hpp"
#include "series.hpp"

namespace lpseries {

// Amplitudes allowed to appear. Dropping an amplitude is exact for the
// corresponding subfamily: no term carrying it ever feeds back into others.
struct AmplitudeMask {
    std::array<bool, 4> active{true, true, true, true};

    static AmplitudeMask all() { return {}; }
    static AmplitudeMask center() { return {{true, true, false, false}}; }
    static AmplitudeMask unstable() { return {{true, true, true, false}}; }

    bool allows(int i, int j, int k, int m) const {
        return (i == 0 || active[0]) && (j == 0 || active[1]) && (k == 0 || active[2]) && (m == 0 || active[3]);
    }
    bool operator==(const AmplitudeMask&) const = default;
};

struct BuildOptions {
    AmplitudeMask mask;
    std::size_t max_terms = 20'000'000;
    // Relative drop threshold quoted for binary64; scaled by the working epsilon.
    double zero_threshold = 1e-16;
    // Near-resonance guard for the generic solve.
    double det_threshold = 1e-10;
};

struct BuildDiagnostics {
    double case1_inconsistency = 0;  // |yr| mismatch between the two in-plane rows
    double case2_inconsistency = 0;  // imaginary part of the degenerate z row
    double eta_division_residue = 0; // constant term dropped when dividing by eta
    double lambda_mismatch = 0;      // Case 3 vs Case 4 estimates of the same lambda entry
    bool degree_cap_hit = false;
};

template <class T = double>
struct SolutionSet {
    SystemParamsT<T> params;
    LinearConstants<T> lin;
    TrigExpSeries<T> x, y, z;
    AmplitudeSeries<T> omega, nu, lambda, delta;
    int order = 0;
    AmplitudeMask mask;
    BuildDiagnostics diag;

    int degree_cap() const { return default_degree_cap<T>(order); }

    // Identical to a build stopped at order n.
    SolutionSet truncated(int n) const {
        if (n > order) throw std::invalid_argument("cannot truncate above the built order");
        SolutionSet r = *this;
        r.x = x.truncated(n);
        r.y = y.truncated(n);
        r.z = z.truncated(n);
        r.omega = omega.truncated(n - 1);
        r.nu = nu.truncated(n - 1);
        r.lambda = lambda.truncated(n - 1);
        r.delta = delta.truncated(n - 1);
        r.order = n;
        return r;
    }

    const TrigExpSeries<T>& coord(int c) const { return c == 0 ? x : (c == 1 ? y : z); }
};

// Per-equation order-n known terms, cos/sin form, sorted by key.
template <class T = double>
struct OrderRHS {
    int order = 0;
    std::array<std::vector<Term<T>>, 3> rows;
};

template <class T>
SolutionSet<T> initialize_linear(const SystemParamsT<T>& params, const AmplitudeMask& mask = {}) {
    SolutionSet<T> s;
    s.params = params;
    s.lin = frequencies(params);
    s.mask = mask;
    s.order = 1;
    const auto& k = s.lin;
    const EtaPoly<T> one{T(1)}, eta{T(0), T(1)};
    if (mask.active[0]) {
        MultiIndex a{1, 0, 0, 0, 1, 0};
        s.x.add(a, one, {});
        s.y.add(a, {}, EtaPoly<T>{k.kappa1});
        s.z.add(a, eta, {});
    }
    if (mask.active[1]) s.z.add(MultiIndex{0, 1, 0, 0, 0, 1}, one, {});
    if (mask.active[2]) {
        MultiIndex a{0, 0, 1, 0, 0, 0};
        s.x.add(a, one, {});
        s.y.add(a, EtaPoly<T>{k.kappa2}, {});
        s.z.add(a, eta * k.kappa3, {});
    }
    if (mask.active[3]) {
        MultiIndex a{0, 0, 0, 1, 0, 0};
        s.x.add(a, one, {});
        s.y.add(a, EtaPoly<T>{-k.kappa2}, {});
        s.z.add(a, eta * k.kappa3, {});
    }
    s.omega.set(0, EtaPoly<T>{k.omega0});
    s.nu.set(0, EtaPoly<T>{k.nu0});
    s.lambda.set(0, EtaPoly<T>{k.lambda0});
    s.delta.set(0, EtaPoly<T>{k.nu0 * k.nu0 - k.omega0 * k.omega0});
    return s;
}

namespace detail {

template <class T>
struct FreqProducts {
    AmplitudeSeries<T> w2, n2, l2, wn, wl, nl;
};

template <class T>
FreqProducts<T> freq_products(const SolutionSet<T>& s, int n) {
    FreqProducts<T> f;
    f.w2 = multiply(s.omega, s.omega, n);
    f.n2 = multiply(s.nu, s.nu, n);
    f.l2 = multiply(s.lambda, s.lambda, n);
    f.wn = multiply(s.omega, s.nu, n);
    f.wl = multiply(s.omega, s.lambda, n);
    f.nl = multiply(s.nu, s.lambda, n);
    return f;
}

template <class T>
struct OpPolys {
    EtaPoly<T> g, h, dre, dim;
};

}  // namespace detail

// Order-n slice of the left-hand sides
//   D^2 x - 2 D y - (1 + 2 c2) x,  D^2 y + 2 D x + (c2 - 1) y,  D^2 z + c2 z - eta Delta x
// with D = omega d/dtheta1 + nu d/dtheta2 + lambda d/dtheta3, using whatever is stored.
template <class T>
std::array<std::vector<Term<T>>, 3> lhs_slice(const SolutionSet<T>& s, int n) {
    const int cap = s.degree_cap() + 2;
    const auto fp = detail::freq_products(s, n);
    std::array<TermAccumulator<T>, 3> acc{TermAccumulator<T>(cap), TermAccumulator<T>(cap), TermAccumulator<T>(cap)};
    const T c2 = s.params.c[2];

    // Amplitude indices present in any frequency series, grouped by order.
    std::map<int, std::vector<AmpKey>> by_order;
    {
        std::vector<AmpKey> keys;
        const std::initializer_list<const AmplitudeSeries<T>*> all = {&fp.w2, &fp.n2, &fp.l2, &fp.wn,    &fp.wl,
                                                                      &fp.nl, &s.omega, &s.nu, &s.lambda, &s.delta};
        for (const auto* a : all)
            for (const auto& [k, v] : a->terms()) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
        for (auto k : keys) by_order[amp_order(k)].push_back(k);
    }

    const Key zero = zero_harmonic();
    for (auto& [oa, keys] : by_order) {
        const int ob = n - oa;
        if (ob < 0) continue;
        for (AmpKey a : keys) {
            const EtaPoly<T> w2 = fp.w2.get(a), n2 = fp.n2.get(a), l2 = fp.l2.get(a);
            const EtaPoly<T> wn = fp.wn.get(a), wl = fp.wl.get(a), nl = fp.nl.get(a);
            const EtaPoly<T> om = s.omega.get(a), nu = s.nu.get(a), la = s.lambda.get(a);
            const EtaPoly<T> de = s.delta.get(a).shifted(1);
            std::unordered_map<Key, detail::OpPolys<T>> cache;
            auto ops = [&](const MultiIndex& idx) -> const detail::OpPolys<T>& {
                const Key ck = (harmonic_bits(idx.key()) << 16) | Key(idx.exponent() + 128);
                auto it = cache.find(ck);
                if (it != cache.end()) return it->second;
                const T p(idx.p), q(idx.q), e(idx.exponent());
                detail::OpPolys<T> o;
                o.g = w2 * (-p * p) + wn * (-2 * p * q) + n2 * (-q * q) + l2 * (e * e);
                o.h = wl * (2 * e * p) + nl * (2 * e * q);
                o.dre = la * e;
                o.dim = om * p + nu * q;
                return cache.emplace(ck, std::move(o)).first->second;
            };
            // (a + i b) applied to the term, written back in cos/sin form.
            auto apply = [&](TermAccumulator<T>& ac, Key key, const EtaPoly<T>& re, const EtaPoly<T>& im,
                             const Term<T>& t, const T& f) {
                auto sl = ac.slot(key);
                ac.add_product(ac.cos_block(sl), re, t.c, f);
                ac.add_product(ac.cos_block(sl), im, t.s, f);
                if (harmonic_bits(key) != zero) {
                    ac.add_product(ac.sin_block(sl), re, t.s, f);
                    ac.add_product(ac.sin_block(sl), im, t.c, -f);
                }
            };
            for (int v = 0; v < 3; ++v) {
                for (const auto& t : s.coord(v).slice(ob)) {
                    const auto idx = t.index();
                    const auto& o = ops(idx);
                    const Key key = make_key(AmpKey(t.key >> 16) + a, harmonic_bits(t.key));
                    apply(acc[v], key, o.g, o.h, t, T(1));
                    if (v == 0) {
                        apply(acc[1], key, o.dre, o.dim, t, T(2));
                        if (!de.empty()) {
                            auto sl = acc[2].slot(key);
                            acc[2].add_product(acc[2].cos_block(sl), de, t.c, T(-1));
                            if (harmonic_bits(key) != zero) acc[2].add_product(acc[2].sin_block(sl), de, t.s, T(-1));
                        }
                    } else if (v == 1) {
                        apply(acc[0], key, o.dre, o.dim, t, T(-2));
                    }
                }
            }
        }
    }
    const T lin[3] = {-(1 + 2 * c2), c2 - 1, c2};
    for (int v = 0; v < 3; ++v)
        for (const auto& t : s.coord(v).slice(n)) acc[v].add(t.key, t.c, t.s, lin[v]);
    return {acc[0].finish(), acc[1].finish(), acc[2].finish()};
}

namespace detail {

template <class T>
std::vector<Term<T>> subtract_rows(const std::vector<Term<T>>& a, const std::vector<Term<T>>& b, int cap) {
    TermAccumulator<T> acc(cap);
    for (const auto& t : a) acc.add(t.key, t.c, t.s, T(1));
    for (const auto& t : b) acc.add(t.key, t.c, t.s, T(-1));
    return acc.finish();
}

}  // namespace detail

template <class T = double>
class LpBuilder {
public:
    LpBuilder(const SystemParamsT<T>& params, int target_order, BuildOptions opt = {})
        : opt_(opt), target_(target_order), rec_(params, default_degree_cap<T>(target_order) + 2) {
        if (target_order < 1) throw std::invalid_argument("order must be at least 1");
        if (target_order > 60) throw std::invalid_argument("order above 60 is not supported");
        if (params.n_max < target_order + 2)
            throw std::invalid_argument("Legendre table too short: need n_max >= order + 2");
        sol_ = initialize_linear(params, opt.mask);
        sol_.order = 1;
        sol_.params = params;
        cap_ = default_degree_cap<T>(target_order);
        for (int n = 0; n <= 1; ++n) {
            auto g = rec_.gradient_slice(sol_.x, sol_.y, sol_.z, n);
            for (int c = 0; c < 3; ++c) phi_[c].set_slice(n, std::move(g[c]));
            rec_.finish(sol_.x, n);
        }
    }

    const SolutionSet<T>& solution() const { return sol_; }
    SolutionSet<T> take() { return std::move(sol_); }
    int target() const { return target_; }
    const std::array<TrigExpSeries<T>, 3>& potential() const { return phi_; }

    OrderRHS<T> assemble_rhs(int n) {
        if (n != sol_.order + 1) throw std::logic_error("assemble_rhs: solution not complete through n-1");
        auto g = rec_.gradient_slice(sol_.x, sol_.y, sol_.z, n);
        for (int c = 0; c < 3; ++c) phi_[c].set_slice(n, g[c]);
        auto k = lhs_slice(sol_, n);
        OrderRHS<T> r;
        r.order = n;
        for (int c = 0; c < 3; ++c) r.rows[c] = detail::subtract_rows(g[c], k[c], cap_ + 2);
        return r;
    }

    void solve_order(int n, const OrderRHS<T>& rhs);

    void step() {
        const int n = sol_.order + 1;
        auto rhs = assemble_rhs(n);
        solve_order(n, rhs);
    }

    void run() {
        while (sol_.order < target_) step();
    }

    // Order-n slice of the full residual (left minus right) of the coupled equations.
    std::array<std::vector<Term<T>>, 3> symbolic_residual(int n) const {
        if (n > sol_.order) throw std::invalid_argument("residual order above built order");
        auto k = lhs_slice(sol_, n);
        std::array<std::vector<Term<T>>, 3> r;
        for (int c = 0; c < 3; ++c) r[c] = detail::subtract_rows(k[c], phi_[c].slice(n), cap_ + 2);
        return r;
    }

private:
    BuildOptions opt_;
    int target_;
    int cap_ = 0;
    SolutionSet<T> sol_;
    LegendreRecurrence<T> rec_;
    std::array<TrigExpSeries<T>, 3> phi_;
};

template <class T>
void LpBuilder<T>::solve_order(int n, const OrderRHS<T>& rhs) {
    using std::sqrt;
    if (n != sol_.order + 1 || rhs.order != n) throw std::logic_error("solve_order: order mismatch");
    const int W = cap_ + 1;
    const auto& L = sol_.lin;
    const T c2 = sol_.params.c[2];
    const T w0 = L.omega0, n0 = L.nu0, l0 = L.lambda0, k1 = L.kappa1, k2 = L.kappa2, k3 = L.kappa3;
    const T d0 = n0 * n0 - w0 * w0;
    auto& dg = sol_.diag;

    // Right-hand sides in complex form (re = cos, im = -sin), dense in eta-degree.
    struct Slot {
        std::array<std::vector<T>, 6> r;  // xr xi yr yi zr zi
        std::array<std::vector<T>, 6> u;  // solution, same layout
    };
    std::map<Key, Slot> slots;
    auto slot = [&](Key key) -> Slot& {
        auto it = slots.find(key);
        if (it != slots.end()) return it->second;
        Slot s;
        for (auto& v : s.r) v.assign(W + 1, T(0));
        for (auto& v : s.u) v.assign(W + 1, T(0));
        return slots.emplace(key, std::move(s)).first->second;
    };
    for (int v = 0; v < 3; ++v) {
        for (const auto& t : rhs.rows[v]) {
            auto& s = slot(t.key);
            const auto& cc = t.c.coeffs();
            const auto& sc = t.s.coeffs();
            if (int(cc.size()) > W + 1 || int(sc.size()) > W + 1) dg.degree_cap_hit = true;
            for (std::size_t d = 0; d < cc.size() && int(d) <= W; ++d) s.r[2 * v][d] = cc[d];
            for (std::size_t d = 0; d < sc.size() && int(d) <= W; ++d) s.r[2 * v + 1][d] = -sc[d];
        }
    }

    AmplitudeSeries<T> d_new, w_new, n_new, l_new;
    auto assign_once = [&](AmplitudeSeries<T>& target, AmpKey k, const std::vector<T>& v, const char* what) {
        EtaPoly<T> p(v);
        if (p.empty()) return;
        if (target.contains(k)) throw std::logic_error(std::string("duplicate assignment of ") + what);
        target.set(k, std::move(p));
    };

    // Case 1 first: it fixes the delta entries consumed by Cases 3 and 4.
    const T a22w = -w0 * w0 + c2 - 1;
    const T m1 = -2 * (w0 + k1), m2 = 2 * (w0 * k1 + 1);
    const T det1 = 2 * w0 * m2 - m1 * a22w;
    if (abs_of(det1) < T(opt_.det_threshold) * std::max(abs_of(m2), abs_of(a22w)))
        throw MathDomainError("singular frequency-correction system (case p=1, q=0)");
    const T zc1 = c2 - w0 * w0;
    for (auto& [key, s] : slots) {
        const auto idx = MultiIndex::from_key(key);
        if (!(idx.p == 1 && idx.q == 0 && idx.k == idx.m)) continue;
        std::vector<T> wv(W + 1, T(0)), dv(W + 1, T(0));
        T zmax(0), ymax(0);
        for (int d = 0; d <= W; ++d) {
            const T rxr = s.r[0][d], rxi = s.r[1][d], ryr = s.r[2][d], ryi = s.r[3][d];
            // -2 w0 yr = rxi ; a22 yr = ryr
            const T yr = (-2 * w0 * rxi + a22w * ryr) / (4 * w0 * w0 + a22w * a22w);
            dg.case1_inconsistency = std::max(dg.case1_inconsistency,
                                              static_cast<double>(abs_of(-2 * w0 * yr - rxi) + abs_of(a22w * yr - ryr)));
            // 2 w0 yi + m1 w' = rxr ; a22 yi + m2 w' = ryi
            const T yi = (rxr * m2 - m1 * ryi) / det1;
            const T wp = (2 * w0 * ryi - a22w * rxr) / det1;
            s.u[2][d] = yr;
            s.u[3][d] = yi;
            s.u[5][d] = s.r[5][d] / zc1;
            wv[d] = wp;
            ymax = std::max(ymax, abs_of(yr) + abs_of(yi));
            zmax = std::max(zmax, abs_of(s.r[4][d]));
        }
        // -eta (2 w0 w' + d') = t_re
        dg.eta_division_residue = std::max(
            dg.eta_division_residue, static_cast<double>(zmax > T(0) ? abs_of(s.r[4][0]) / zmax : T(0)));
        for (int d = 0; d < W; ++d) dv[d] = -s.r[4][d + 1] - 2 * w0 * wv[d];
        const AmpKey ak = amp_key(idx.i - 1, idx.j, idx.k, idx.m);
        assign_once(w_new, ak, wv, "omega");
        assign_once(d_new, ak, dv, "delta");
        (void)ymax;
    }

    // Case 2: in-plane solve at s = i nu0, nu correction from the degenerate z row.
    const Cplx<T> s2(T(0), n0);
    const Cplx<T> s2sq = s2 * s2;
    const Inverse2<T> inv2(s2sq - Cplx<T>(1 + 2 * c2), s2 * T(-2), s2 * T(2), s2sq + Cplx<T>(c2 - 1));
    for (auto& [key, s] : slots) {
        const auto idx = MultiIndex::from_key(key);
        if (!(idx.p == 0 && idx.q == 1 && idx.k == idx.m)) continue;
        std::vector<T> nv(W + 1, T(0));
        for (int d = 0; d <= W; ++d) {
            const Cplx<T> rx(s.r[0][d], s.r[1][d]), ry(s.r[2][d], s.r[3][d]);
            const Cplx<T> X = inv2.m[0][0] * rx + inv2.m[0][1] * ry;
            const Cplx<T> Y = inv2.m[1][0] * rx + inv2.m[1][1] * ry;
            s.u[0][d] = X.re;
            s.u[1][d] = X.im;
            s.u[2][d] = Y.re;
            s.u[3][d] = Y.im;
        }
        for (int d = 0; d <= W; ++d) {
            const T xr = d > 0 ? s.u[0][d - 1] : T(0);
            const T xi = d > 0 ? s.u[1][d - 1] : T(0);
            nv[d] = -(s.r[4][d] + d0 * xr) / (2 * n0);
            dg.case2_inconsistency = std::max(dg.case2_inconsistency, static_cast<double>(abs_of(s.r[5][d] + d0 * xi)));
        }
        assign_once(n_new, amp_key(idx.i, idx.j - 1, idx.k, idx.m), nv, "nu");
    }

    // Cases 3 and 4: need every index fed by a delta entry, even with zero rhs.
    for (const auto& [ak, v] : d_new.terms()) {
        auto a = amp_unpack(ak);
        if (sol_.mask.active[2]) slot(make_key(amp_key(a[0], a[1], a[2] + 1, a[3]), zero_harmonic()));
        if (sol_.mask.active[3]) slot(make_key(amp_key(a[0], a[1], a[2], a[3] + 1), zero_harmonic()));
    }
    const T zl = l0 * l0 + c2;
    for (int e : {1, -1}) {
        const T sg(e);
        // [-2 e l0, 2(l0 - k2)] [Y]   [rx]
        // [l0^2+c2-1, 2 e (k2 l0 + 1)] [l'] = [ry]
        const T a11 = -2 * sg * l0, a12 = 2 * (l0 - k2), a21 = l0 * l0 + c2 - 1, a22 = 2 * sg * (k2 * l0 + 1);
        const T det = a11 * a22 - a12 * a21;
        if (abs_of(det) < T(opt_.det_threshold) * std::max(abs_of(a11 * a22), abs_of(a12 * a21)))
            throw MathDomainError("singular hyperbolic frequency-correction system");
        for (auto& [key, s] : slots) {
            const auto idx = MultiIndex::from_key(key);
            if (!(idx.harmonic_zero() && idx.exponent() == e)) continue;
            const AmpKey ak = e > 0 ? amp_key(idx.i, idx.j, idx.m, idx.m) : amp_key(idx.i, idx.j, idx.k, idx.k);
            const EtaPoly<T> dp = d_new.get(ak);
            std::vector<T> lv(W + 1, T(0));
            for (int d = 0; d <= W; ++d) {
                const T rx = s.r[0][d], ry = s.r[2][d];
                s.u[2][d] = (rx * a22 - a12 * ry) / det;
                lv[d] = (a11 * ry - a21 * rx) / det;
            }
            for (int d = 0; d <= W; ++d) {
                T t = s.r[4][d];
                if (d > 0) t += -2 * l0 * k3 * lv[d - 1] + dp[d - 1];
                s.u[4][d] = t / zl;
            }
            EtaPoly<T> lp(lv);
            if (lp.empty()) continue;
            if (l_new.contains(ak)) {
                const auto prev = l_new.get(ak);
                const T scale = std::max(prev.max_abs(), lp.max_abs());
                dg.lambda_mismatch = std::max(dg.lambda_mismatch, static_cast<double>((prev - lp).max_abs() / scale));
            } else {
                l_new.set(ak, std::move(lp));
            }
        }
    }

    // Everything else: nonsingular complex 2x2 plus the z row.
    for (auto& [key, s] : slots) {
        const auto idx = MultiIndex::from_key(key);
        const bool c1 = idx.p == 1 && idx.q == 0 && idx.k == idx.m;
        const bool c2s = idx.p == 0 && idx.q == 1 && idx.k == idx.m;
        const bool c34 = idx.harmonic_zero() && (idx.exponent() == 1 || idx.exponent() == -1);
        if (c1 || c2s || c34) continue;
        const Cplx<T> sv(T(idx.exponent()) * l0, T(idx.p) * w0 + T(idx.q) * n0);
        const Cplx<T> sq = sv * sv;
        const Cplx<T> a = sq - Cplx<T>(1 + 2 * c2), b = sv * T(-2), c = sv * T(2), dd = sq + Cplx<T>(c2 - 1);
        const Inverse2<T> inv(a, b, c, dd);
        const T mnorm = std::max({a.abs(), b.abs(), c.abs(), dd.abs()});
        if (inv.det.abs() < T(opt_.det_threshold) * mnorm * mnorm)
            throw MathDomainError("near-resonant in-plane system at order " + std::to_string(n) + " index (" +
                                  std::to_string(idx.i) + "," + std::to_string(idx.j) + "," +
                                  std::to_string(idx.k) + "," + std::to_string(idx.m) + ") p=" +
                                  std::to_string(idx.p) + " q=" + std::to_string(idx.q));
        const Cplx<T> zden = sq + Cplx<T>(c2);
        if (zden.abs() < T(opt_.det_threshold) * std::max(sq.abs(), c2))
            throw MathDomainError("near-resonant vertical system at order " + std::to_string(n));
        for (int d = 0; d <= W; ++d) {
            const Cplx<T> rx(s.r[0][d], s.r[1][d]), ry(s.r[2][d], s.r[3][d]);
            const Cplx<T> X = inv.m[0][0] * rx + inv.m[0][1] * ry;
            const Cplx<T> Y = inv.m[1][0] * rx + inv.m[1][1] * ry;
            s.u[0][d] = X.re;
            s.u[1][d] = X.im;
            s.u[2][d] = Y.re;
            s.u[3][d] = Y.im;
        }
        for (int d = 0; d <= W; ++d) {
            Cplx<T> t(s.r[4][d], s.r[5][d]);
            if (d > 0) t = t + Cplx<T>(s.u[0][d - 1], s.u[1][d - 1]) * d0;
            const Cplx<T> Z = t / zden;
            s.u[4][d] = Z.re;
            s.u[5][d] = Z.im;
        }
        if (idx.harmonic_zero()) {
            for (int v = 0; v < 3; ++v) std::fill(s.u[2 * v + 1].begin(), s.u[2 * v + 1].end(), T(0));
        }
    }

    // Collect, prune per (coordinate, eta-degree), store.
    const T thr = T(opt_.zero_threshold * eps_ratio<T>());
    std::array<std::vector<Term<T>>, 3> out;
    for (int v = 0; v < 3; ++v) {
        std::vector<T> mx(W + 1, T(0));
        for (const auto& [key, s] : slots)
            for (int d = 0; d <= W; ++d)
                mx[d] = std::max(mx[d], std::max(abs_of(s.u[2 * v][d]), abs_of(s.u[2 * v + 1][d])));
        for (auto& m : mx) m *= thr;
        for (const auto& [key, s] : slots) {
            Term<T> t;
            t.key = key;
            std::vector<T> cc(s.u[2 * v].begin(), s.u[2 * v].end());
            std::vector<T> sc(W + 1);
            for (int d = 0; d <= W; ++d) sc[d] = -s.u[2 * v + 1][d];
            t.c = EtaPoly<T>(std::move(cc));
            t.s = EtaPoly<T>(std::move(sc));
            t.c.prune(mx);
            t.s.prune(mx);
            if (MultiIndex::from_key(key).harmonic_zero()) t.s = EtaPoly<T>{};
            if (t.c.empty() && t.s.empty()) continue;
            out[v].push_back(std::move(t));
        }
    }
    sol_.x.set_slice(n, std::move(out[0]));
    sol_.y.set_slice(n, std::move(out[1]));
    sol_.z.set_slice(n, std::move(out[2]));
    for (const auto& [k, v] : w_new.terms()) sol_.omega.set(k, v);
    for (const auto& [k, v] : n_new.terms()) sol_.nu.set(k, v);
    for (const auto& [k, v] : l_new.terms()) sol_.lambda.set(k, v);
    for (const auto& [k, v] : d_new.terms()) sol_.delta.set(k, v);
    sol_.order = n;
    rec_.finish(sol_.x, n);

    if (sol_.x.size() + sol_.y.size() + sol_.z.size() > opt_.max_terms)
        throw std::length_error("series term count exceeds the configured limit at order " + std::to_string(n));
}

template <class T>
SolutionSet<T> build(const SystemParamsT<T>& params, int order, BuildOptions opt = {}) {
    LpBuilder<T> b(params, order, opt);
    b.run();
    return b.take();
}

// Convenience: parameters sized for the requested order.
template <class T = double>
SolutionSet<T> build(T mu, Point point, int order, BuildOptions opt = {}) {
    return build(make_params<T>(mu, point, order + 2), order, opt);
}

// Free-standing assembly for an externally held solution; recomputes the
// Legendre recurrence from scratch.
template <class T>
OrderRHS<T> assemble_rhs(const SolutionSet<T>& s, int n) {
    if (n != s.order + 1) throw std::invalid_argument("assemble_rhs: solution not complete through n-1");
    auto phi = potential_gradient(s.x, s.y, s.z, s.params, n);
    auto k = lhs_slice(s, n);
    OrderRHS<T> r;
    r.order = n;
    for (int c = 0; c < 3; ++c) r.rows[c] = detail::subtract_rows(phi[c].slice(n), k[c], s.degree_cap() + 4);
    return r;
}

// Full residual slice recomputed from the series alone.
template <class T>
std::array<std::vector<Term<T>>, 3> symbolic_residual(const SolutionSet<T>& s, int n) {
    auto phi = potential_gradient(s.x, s.y, s.z, s.params, n);
    auto k = lhs_slice(s, n);
    std::array<std::vector<Term<T>>, 3> r;
    for (int c = 0; c < 3; ++c) r[c] = detail::subtract_rows(k[c], phi[c].slice(n), s.degree_cap() + 4);
    return r;
}

struct StructureReport {
    bool classical_parity = true;  // p = i, q = j (mod 2)
    bool remark_parity = true;     // p = i + j, q = k + m (mod 2)
    bool eta_parity = true;        // x, y: eta-parity j; z: j + 1; frequencies and delta even
    bool time_reversal = true;     // k = m: x, z cos-only, y sin-only
    bool frequency_indices = true; // frequency and delta indices (even, even, c, c)
    int max_eta_degree_excess = -1000;  // max over entries of degree - 2*order
};

// Entries below rel_tol times the largest coefficient of the same coordinate
// and order count as zero.
template <class T>
StructureReport verify_structure(const SolutionSet<T>& s, double rel_tol = 1e-10) {
    StructureReport r;
    auto nz = [](const EtaPoly<T>& p, int d, const T& tol) { return abs_of(p[d]) > tol; };
    for (int v = 0; v < 3; ++v) {
        const auto& ser = s.coord(v);
        for (int n = 0; n <= ser.max_order(); ++n) {
            T big(0);
            for (const auto& t : ser.slice(n)) big = std::max({big, t.c.max_abs(), t.s.max_abs()});
            const T tol = big * T(rel_tol);
            for (const auto& t : ser.slice(n)) {
                const auto idx = t.index();
                bool any = false;
                for (const auto* poly : {&t.c, &t.s})
                    for (int d = 0; d <= poly->degree(); ++d) any = any || nz(*poly, d, tol);
                if (!any) continue;
                if ((idx.p - idx.i) % 2 != 0 || (idx.q - idx.j) % 2 != 0) r.classical_parity = false;
                if ((idx.p - idx.i - idx.j) % 2 != 0 || (idx.q - idx.k - idx.m) % 2 != 0) r.remark_parity = false;
                const int par = (v == 2) ? (idx.j + 1) % 2 : idx.j % 2;
                int deg = -1;
                for (const auto* poly : {&t.c, &t.s})
                    for (int d = 0; d <= poly->degree(); ++d)
                        if (nz(*poly, d, tol)) {
                            deg = std::max(deg, d);
                            if (d % 2 != par) r.eta_parity = false;
                        }
                if (idx.k == idx.m) {
                    const auto& wrong = v == 1 ? t.c : t.s;
                    for (int d = 0; d <= wrong.degree(); ++d)
                        if (nz(wrong, d, tol)) r.time_reversal = false;
                }
                const int lim = v == 2 ? 2 * idx.order() - 1 : 2 * idx.order() - 2;
                r.max_eta_degree_excess = std::max(r.max_eta_degree_excess, deg - lim);
            }
        }
    }
    const std::initializer_list<const AmplitudeSeries<T>*> freq = {&s.omega, &s.nu, &s.lambda, &s.delta};
    for (const auto* a : freq) {
        T big(0);
        for (const auto& [k, v] : a->terms()) big = std::max(big, v.max_abs());
        const T tol = big * T(rel_tol);
        for (const auto& [k, v] : a->terms()) {
            auto u = amp_unpack(k);
            if (v.max_abs() <= tol) continue;
            if (u[0] % 2 || u[1] % 2 || u[2] != u[3]) r.frequency_indices = false;
            for (int d = 0; d <= v.degree(); ++d)
                if (nz(v, d, tol) && d % 2) r.eta_parity = false;
            r.max_eta_degree_excess = std::max(r.max_eta_degree_excess, v.degree() - 2 * amp_order(k));
        }
    }
    return r;
}

}  // namespace lpseries
