#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "eta_poly.hpp"

namespace lpseries {

// Packed layout, most significant first: i j k m (p+128) (q+128), 8 bits each.
// The amplitude part (i,j,k,m) is key >> 16 and doubles as the AmplitudeSeries key.
using Key = std::uint64_t;
using AmpKey = std::uint32_t;

struct MultiIndex {
    int i = 0, j = 0, k = 0, m = 0, p = 0, q = 0;

    int order() const { return i + j + k + m; }
    int exponent() const { return k - m; }
    bool harmonic_zero() const { return p == 0 && q == 0; }
    bool canonical() const { return p > 0 || (p == 0 && q >= 0); }

    Key key() const {
        return (Key(i) << 40) | (Key(j) << 32) | (Key(k) << 24) | (Key(m) << 16) |
               (Key(p + 128) << 8) | Key(q + 128);
    }
    static MultiIndex from_key(Key key) {
        MultiIndex r;
        r.i = int((key >> 40) & 0xFF);
        r.j = int((key >> 32) & 0xFF);
        r.k = int((key >> 24) & 0xFF);
        r.m = int((key >> 16) & 0xFF);
        r.p = int((key >> 8) & 0xFF) - 128;
        r.q = int(key & 0xFF) - 128;
        return r;
    }
    AmpKey amp_key() const { return AmpKey(key() >> 16); }

    auto operator<=>(const MultiIndex&) const = default;
};

inline AmpKey amp_key(int i, int j, int k, int m) {
    return (AmpKey(i) << 24) | (AmpKey(j) << 16) | (AmpKey(k) << 8) | AmpKey(m);
}
inline std::array<int, 4> amp_unpack(AmpKey a) {
    return {int(a >> 24), int((a >> 16) & 0xFF), int((a >> 8) & 0xFF), int(a & 0xFF)};
}
inline int amp_order(AmpKey a) {
    auto v = amp_unpack(a);
    return v[0] + v[1] + v[2] + v[3];
}
inline Key harmonic_bits(Key key) { return key & 0xFFFF; }
inline Key make_key(AmpKey a, Key harmonic) { return (Key(a) << 16) | harmonic; }
inline Key harmonic_key(int p, int q) { return (Key(p + 128) << 8) | Key(q + 128); }
inline Key zero_harmonic() { return harmonic_key(0, 0); }

template <class T>
std::tuple<MultiIndex, EtaPoly<T>, EtaPoly<T>> canonicalize(MultiIndex idx, EtaPoly<T> c, EtaPoly<T> s) {
    if (!idx.canonical()) {
        idx.p = -idx.p;
        idx.q = -idx.q;
        s = -s;
    }
    if (idx.harmonic_zero()) s = EtaPoly<T>{};
    return {idx, std::move(c), std::move(s)};
}

template <class T = double>
struct Term {
    Key key = 0;
    EtaPoly<T> c;
    EtaPoly<T> s;

    MultiIndex index() const { return MultiIndex::from_key(key); }
};

// Dense per-key blocks of (cos, sin) coefficients up to a fixed eta-degree cap.
template <class T = double>
class TermAccumulator {
public:
    explicit TermAccumulator(int cap_degree) : cap_(cap_degree), width_(cap_degree + 1) {}

    int cap() const { return cap_; }
    bool cap_exceeded() const { return cap_hit_; }
    std::size_t size() const { return keys_.size(); }

    std::size_t slot(Key key) {
        auto [it, inserted] = where_.try_emplace(key, keys_.size());
        if (inserted) {
            keys_.push_back(key);
            data_.resize(data_.size() + 2 * width_, T(0));
        }
        return it->second;
    }
    T* cos_block(std::size_t s) { return data_.data() + s * 2 * width_; }
    T* sin_block(std::size_t s) { return data_.data() + s * 2 * width_ + width_; }

    void add_poly(T* out, const EtaPoly<T>& a, const T& f) {
        const auto& c = a.coeffs();
        const int n = std::min<int>(int(c.size()), width_);
        if (int(c.size()) > width_) cap_hit_ = true;
        for (int d = 0; d < n; ++d) out[d] += f * c[d];
    }

    void add_product(T* out, const EtaPoly<T>& a, const EtaPoly<T>& b, const T& f) {
        const auto& ca = a.coeffs();
        const auto& cb = b.coeffs();
        const int na = int(ca.size()), nb = int(cb.size());
        if (na == 0 || nb == 0) return;
        if (na + nb - 2 > cap_) cap_hit_ = true;
        for (int i = 0; i < na && i < width_; ++i) {
            if (ca[i] == T(0)) continue;
            const T fa = f * ca[i];
            const int lim = std::min(nb, width_ - i);
            T* o = out + i;
            for (int j = 0; j < lim; ++j) o[j] += fa * cb[j];
        }
    }

    void add(Key key, const EtaPoly<T>& c, const EtaPoly<T>& s, const T& f) {
        auto sl = slot(key);
        add_poly(cos_block(sl), c, f);
        if (harmonic_bits(key) != zero_harmonic()) add_poly(sin_block(sl), s, f);
    }

    // Sorted, trimmed terms; empty entries removed.
    std::vector<Term<T>> finish() const {
        std::vector<std::size_t> order(keys_.size());
        for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });
        std::vector<Term<T>> out;
        out.reserve(order.size());
        for (auto n : order) {
            const T* cb = data_.data() + n * 2 * width_;
            Term<T> t;
            t.key = keys_[n];
            t.c = EtaPoly<T>(std::vector<T>(cb, cb + width_));
            if (harmonic_bits(t.key) != zero_harmonic())
                t.s = EtaPoly<T>(std::vector<T>(cb + width_, cb + 2 * width_));
            if (t.c.empty() && t.s.empty()) continue;
            out.push_back(std::move(t));
        }
        return out;
    }

private:
    int cap_;
    int width_;
    bool cap_hit_ = false;
    std::unordered_map<Key, std::size_t> where_;
    std::vector<Key> keys_;
    std::vector<T> data_;
};

// Accumulates f * a * b, product-to-sum on the harmonics.
template <class T>
void multiply_terms(TermAccumulator<T>& acc, const Term<T>& a, const Term<T>& b, const T& f) {
    const Key ha = harmonic_bits(a.key), hb = harmonic_bits(b.key);
    const AmpKey amp = AmpKey(a.key >> 16) + AmpKey(b.key >> 16);
    const Key zero = zero_harmonic();
    if (hb == zero) {
        auto sl = acc.slot(make_key(amp, ha));
        acc.add_product(acc.cos_block(sl), a.c, b.c, f);
        if (ha != zero) acc.add_product(acc.sin_block(sl), a.s, b.c, f);
        return;
    }
    if (ha == zero) {
        auto sl = acc.slot(make_key(amp, hb));
        acc.add_product(acc.cos_block(sl), a.c, b.c, f);
        acc.add_product(acc.sin_block(sl), a.c, b.s, f);
        return;
    }
    const int pa = int((ha >> 8) & 0xFF) - 128, qa = int(ha & 0xFF) - 128;
    const int pb = int((hb >> 8) & 0xFF) - 128, qb = int(hb & 0xFF) - 128;
    const T h = f / 2;
    {
        auto sl = acc.slot(make_key(amp, harmonic_key(pa + pb, qa + qb)));
        T* cb = acc.cos_block(sl);
        T* sb = acc.sin_block(sl);
        acc.add_product(cb, a.c, b.c, h);
        acc.add_product(cb, a.s, b.s, -h);
        acc.add_product(sb, a.c, b.s, h);
        acc.add_product(sb, a.s, b.c, h);
    }
    int p = pa - pb, q = qa - qb;
    T sg = h;
    if (p < 0 || (p == 0 && q < 0)) {
        p = -p;
        q = -q;
        sg = -h;
    }
    auto sl = acc.slot(make_key(amp, harmonic_key(p, q)));
    T* cb = acc.cos_block(sl);
    acc.add_product(cb, a.c, b.c, h);
    acc.add_product(cb, a.s, b.s, h);
    if (p != 0 || q != 0) {
        T* sb = acc.sin_block(sl);
        acc.add_product(sb, a.s, b.c, sg);
        acc.add_product(sb, a.c, b.s, -sg);
    }
}

template <class T = double>
class TrigExpSeries {
public:
    using term_type = Term<T>;

    int max_order() const { return int(slices_.size()) - 1; }

    const std::vector<Term<T>>& slice(int n) const {
        static const std::vector<Term<T>> empty;
        if (n < 0 || n >= int(slices_.size())) return empty;
        return slices_[n];
    }

    void set_slice(int n, std::vector<Term<T>> terms) {
        if (n >= int(slices_.size())) slices_.resize(n + 1);
        slices_[n] = std::move(terms);
    }

    std::size_t size() const {
        std::size_t s = 0;
        for (const auto& sl : slices_) s += sl.size();
        return s;
    }
    bool empty() const { return size() == 0; }

    const Term<T>* find(Key key) const {
        const int n = MultiIndex::from_key(key).order();
        const auto& sl = slice(n);
        auto it = std::lower_bound(sl.begin(), sl.end(), key, [](const Term<T>& t, Key k) { return t.key < k; });
        if (it == sl.end() || it->key != key) return nullptr;
        return &*it;
    }
    const Term<T>* find(const MultiIndex& idx) const { return find(idx.key()); }

    // Adds a term (canonicalized) to the series.
    void add(const MultiIndex& idx, const EtaPoly<T>& c, const EtaPoly<T>& s) {
        auto [ci, cc, cs] = canonicalize(idx, c, s);
        const int n = ci.order();
        if (n >= int(slices_.size())) slices_.resize(n + 1);
        auto& sl = slices_[n];
        const Key key = ci.key();
        auto it = std::lower_bound(sl.begin(), sl.end(), key, [](const Term<T>& t, Key k) { return t.key < k; });
        if (it != sl.end() && it->key == key) {
            it->c += cc;
            it->s += cs;
            if (it->c.empty() && it->s.empty()) sl.erase(it);
        } else if (!cc.empty() || !cs.empty()) {
            sl.insert(it, Term<T>{key, std::move(cc), std::move(cs)});
        }
    }

    TrigExpSeries truncated(int n) const {
        TrigExpSeries r;
        for (int o = 0; o <= std::min(n, max_order()); ++o) r.set_slice(o, slices_[o]);
        return r;
    }

    template <class F>
    void for_each(F&& f) const {
        for (const auto& sl : slices_)
            for (const auto& t : sl) f(t);
    }

    friend bool operator==(const TrigExpSeries& a, const TrigExpSeries& b) {
        const int n = std::max(a.max_order(), b.max_order());
        for (int o = 0; o <= n; ++o) {
            const auto& sa = a.slice(o);
            const auto& sb = b.slice(o);
            if (sa.size() != sb.size()) return false;
            for (std::size_t t = 0; t < sa.size(); ++t)
                if (sa[t].key != sb[t].key || !(sa[t].c == sb[t].c) || !(sa[t].s == sb[t].s)) return false;
        }
        return true;
    }

private:
    std::vector<std::vector<Term<T>>> slices_;
};

template <class T>
TrigExpSeries<T> operator+(const TrigExpSeries<T>& a, const TrigExpSeries<T>& b) {
    TrigExpSeries<T> r = a;
    b.for_each([&](const Term<T>& t) { r.add(t.index(), t.c, t.s); });
    return r;
}

template <class T>
void accumulate_product(TermAccumulator<T>& acc, const std::vector<Term<T>>& a, const std::vector<Term<T>>& b,
                        const T& f) {
    for (const auto& ta : a)
        for (const auto& tb : b) multiply_terms(acc, ta, tb, f);
}

// Order-n slice of f * a * b.
template <class T>
void accumulate_product_slice(TermAccumulator<T>& acc, const TrigExpSeries<T>& a, const TrigExpSeries<T>& b,
                              int n, const T& f) {
    for (int oa = 0; oa <= n; ++oa) {
        const auto& sa = a.slice(oa);
        const auto& sb = b.slice(n - oa);
        if (sa.empty() || sb.empty()) continue;
        accumulate_product(acc, sa, sb, f);
    }
}

template <class T>
int default_degree_cap(int max_order) {
    return 2 * std::max(max_order, 1);
}

template <class T>
TrigExpSeries<T> multiply(const TrigExpSeries<T>& a, const TrigExpSeries<T>& b, int max_order,
                          int degree_cap = -1) {
    if (degree_cap < 0) degree_cap = default_degree_cap<T>(max_order);
    TrigExpSeries<T> r;
    for (int n = 0; n <= max_order; ++n) {
        TermAccumulator<T> acc(degree_cap);
        accumulate_product_slice(acc, a, b, n, T(1));
        r.set_slice(n, acc.finish());
    }
    return r;
}

enum class Angle { theta1, theta2, theta3 };

template <class T>
TrigExpSeries<T> differentiate(const TrigExpSeries<T>& s, Angle which) {
    TrigExpSeries<T> r;
    for (int n = 0; n <= s.max_order(); ++n) {
        std::vector<Term<T>> out;
        for (const auto& t : s.slice(n)) {
            const auto idx = t.index();
            Term<T> d;
            d.key = t.key;
            if (which == Angle::theta3) {
                const T e(idx.exponent());
                d.c = t.c * e;
                d.s = t.s * e;
            } else {
                const T f(which == Angle::theta1 ? idx.p : idx.q);
                d.c = t.s * f;
                d.s = t.c * (-f);
            }
            if (idx.harmonic_zero()) d.s = EtaPoly<T>{};
            if (!d.c.empty() || !d.s.empty()) out.push_back(std::move(d));
        }
        r.set_slice(n, std::move(out));
    }
    return r;
}

// Powers alpha_r^e for e up to n.
template <class U>
std::array<std::vector<U>, 4> amplitude_powers(const std::array<U, 4>& alpha, int n) {
    std::array<std::vector<U>, 4> pw;
    for (int r = 0; r < 4; ++r) {
        pw[r].assign(n + 1, U(1));
        for (int e = 1; e <= n; ++e) pw[r][e] = pw[r][e - 1] * alpha[r];
    }
    return pw;
}

template <class T, class U>
U eval_series(const TrigExpSeries<T>& s, const std::array<U, 4>& alpha, const U& eta, const U& th1, const U& th2,
              const U& th3) {
    using std::cos;
    using std::exp;
    using std::sin;
    const auto pw = amplitude_powers(alpha, std::max(s.max_order(), 0));
    U total(0);
    s.for_each([&](const Term<T>& t) {
        const auto idx = t.index();
        const U amp = pw[0][idx.i] * pw[1][idx.j] * pw[2][idx.k] * pw[3][idx.m];
        if (amp == U(0)) return;
        const U ang = U(idx.p) * th1 + U(idx.q) * th2;
        U v = t.c.eval(eta) * cos(ang);
        if (!t.s.empty()) v += t.s.eval(eta) * sin(ang);
        if (idx.exponent() != 0) v *= exp(U(idx.exponent()) * th3);
        total += v * amp;
    });
    return total;
}

template <class T = double>
class AmplitudeSeries {
public:
    using map_type = std::map<AmpKey, EtaPoly<T>>;

    const map_type& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    EtaPoly<T> get(AmpKey k) const {
        auto it = terms_.find(k);
        return it == terms_.end() ? EtaPoly<T>{} : it->second;
    }
    EtaPoly<T> get(int i, int j, int k, int m) const { return get(amp_key(i, j, k, m)); }
    bool contains(AmpKey k) const { return terms_.count(k) != 0; }

    void set(AmpKey k, EtaPoly<T> v) {
        if (v.empty())
            terms_.erase(k);
        else
            terms_[k] = std::move(v);
    }
    void add(AmpKey k, const EtaPoly<T>& v) {
        auto& e = terms_[k];
        e += v;
        if (e.empty()) terms_.erase(k);
    }

    int max_order() const {
        int n = -1;
        for (const auto& [k, v] : terms_) n = std::max(n, amp_order(k));
        return n;
    }

    AmplitudeSeries truncated(int n) const {
        AmplitudeSeries r;
        for (const auto& [k, v] : terms_)
            if (amp_order(k) <= n) r.terms_.emplace(k, v);
        return r;
    }

    template <class U>
    U eval(const std::array<U, 4>& alpha, const U& eta) const {
        const auto pw = amplitude_powers(alpha, std::max(max_order(), 0));
        U total(0);
        for (const auto& [k, v] : terms_) {
            auto a = amp_unpack(k);
            const U amp = pw[0][a[0]] * pw[1][a[1]] * pw[2][a[2]] * pw[3][a[3]];
            if (amp == U(0)) continue;
            total += v.eval(eta) * amp;
        }
        return total;
    }

    // Collapses the amplitudes, keeping eta symbolic.
    EtaPoly<T> at_amplitudes(const std::array<T, 4>& alpha) const {
        const auto pw = amplitude_powers(alpha, std::max(max_order(), 0));
        EtaPoly<T> r;
        for (const auto& [k, v] : terms_) {
            auto a = amp_unpack(k);
            const T amp = pw[0][a[0]] * pw[1][a[1]] * pw[2][a[2]] * pw[3][a[3]];
            if (amp == T(0)) continue;
            r += v * amp;
        }
        return r;
    }

    friend AmplitudeSeries multiply(const AmplitudeSeries& a, const AmplitudeSeries& b, int max_order) {
        AmplitudeSeries r;
        for (const auto& [ka, va] : a.terms_)
            for (const auto& [kb, vb] : b.terms_) {
                if (amp_order(ka) + amp_order(kb) > max_order) continue;
                r.add(ka + kb, va * vb);
            }
        return r;
    }
    friend AmplitudeSeries operator+(AmplitudeSeries a, const AmplitudeSeries& b) {
        for (const auto& [k, v] : b.terms_) a.add(k, v);
        return a;
    }
    friend AmplitudeSeries operator*(AmplitudeSeries a, const T& s) {
        for (auto& [k, v] : a.terms_) v *= s;
        return a;
    }
    friend bool operator==(const AmplitudeSeries& a, const AmplitudeSeries& b) { return a.terms_ == b.terms_; }

private:
    map_type terms_;
};

}  // namespace lpseries
