#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <vector>

#include "numeric.hpp"

namespace lpseries {

// Real polynomial in the coupling coefficient eta; c[d] multiplies eta^d.
template <class T = double>
class EtaPoly {
public:
    EtaPoly() = default;
    EtaPoly(std::initializer_list<T> init) : c_(init) { trim(); }
    explicit EtaPoly(std::vector<T> coeffs) : c_(std::move(coeffs)) { trim(); }

    static EtaPoly constant(const T& v) { return EtaPoly({v}); }
    static EtaPoly monomial(int deg, const T& v) {
        std::vector<T> c(deg + 1, T(0));
        c[deg] = v;
        return EtaPoly(std::move(c));
    }

    const std::vector<T>& coeffs() const { return c_; }
    std::vector<T>& coeffs() { return c_; }
    bool empty() const { return c_.empty(); }
    int degree() const { return static_cast<int>(c_.size()) - 1; }
    T operator[](int d) const { return d < static_cast<int>(c_.size()) ? c_[d] : T(0); }

    void trim() {
        while (!c_.empty() && c_.back() == T(0)) c_.pop_back();
    }

    void set(int d, const T& v) {
        if (d >= static_cast<int>(c_.size())) c_.resize(d + 1, T(0));
        c_[d] = v;
        trim();
    }

    EtaPoly& operator+=(const EtaPoly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
        for (std::size_t d = 0; d < o.c_.size(); ++d) c_[d] += o.c_[d];
        trim();
        return *this;
    }
    EtaPoly& operator-=(const EtaPoly& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), T(0));
        for (std::size_t d = 0; d < o.c_.size(); ++d) c_[d] -= o.c_[d];
        trim();
        return *this;
    }
    EtaPoly& operator*=(const T& s) {
        for (auto& v : c_) v *= s;
        trim();
        return *this;
    }

    friend EtaPoly operator+(EtaPoly a, const EtaPoly& b) { return a += b; }
    friend EtaPoly operator-(EtaPoly a, const EtaPoly& b) { return a -= b; }
    friend EtaPoly operator*(EtaPoly a, const T& s) { return a *= s; }
    friend EtaPoly operator*(const T& s, EtaPoly a) { return a *= s; }
    EtaPoly operator-() const {
        EtaPoly r = *this;
        for (auto& v : r.c_) v = -v;
        return r;
    }

    friend EtaPoly operator*(const EtaPoly& a, const EtaPoly& b) {
        if (a.empty() || b.empty()) return {};
        std::vector<T> r(a.c_.size() + b.c_.size() - 1, T(0));
        for (std::size_t i = 0; i < a.c_.size(); ++i) {
            if (a.c_[i] == T(0)) continue;
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        }
        return EtaPoly(std::move(r));
    }

    bool operator==(const EtaPoly& o) const { return c_ == o.c_; }

    // Multiply by eta^k.
    EtaPoly shifted(int k) const {
        if (empty()) return {};
        std::vector<T> r(k, T(0));
        r.insert(r.end(), c_.begin(), c_.end());
        return EtaPoly(std::move(r));
    }

    // Divide by eta, discarding the constant term (caller checks it is negligible).
    EtaPoly divided_by_eta() const {
        if (c_.size() <= 1) return {};
        return EtaPoly(std::vector<T>(c_.begin() + 1, c_.end()));
    }

    template <class U>
    U eval(const U& eta) const {
        U r(0);
        for (std::size_t d = c_.size(); d-- > 0;) r = r * eta + U(c_[d]);
        return r;
    }

    T max_abs() const {
        T m(0);
        for (const auto& v : c_) m = std::max(m, abs_of(v));
        return m;
    }

    // Drops coefficients whose magnitude is below tol[d].
    void prune(const std::vector<T>& tol) {
        for (std::size_t d = 0; d < c_.size(); ++d)
            if (d < tol.size() && abs_of(c_[d]) < tol[d]) c_[d] = T(0);
        trim();
    }

private:
    std::vector<T> c_;
};

}  // namespace lpseries
