#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lpseries {

// Resonance, singular geometry, missing roots.
class MathDomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class T>
inline T eps_of() { return std::numeric_limits<T>::epsilon(); }

// Ratio of the working epsilon to the binary64 epsilon; used to scale
// thresholds that are quoted for double.
template <class T>
inline double eps_ratio() {
    return static_cast<double>(eps_of<T>()) / std::numeric_limits<double>::epsilon();
}

template <class T>
inline T abs_of(const T& v) {
    using std::abs;
    return abs(v);
}

template <class T>
struct Cplx {
    T re{0};
    T im{0};

    Cplx() = default;
    Cplx(T r, T i = T(0)) : re(std::move(r)), im(std::move(i)) {}

    Cplx operator+(const Cplx& o) const { return {re + o.re, im + o.im}; }
    Cplx operator-(const Cplx& o) const { return {re - o.re, im - o.im}; }
    Cplx operator-() const { return {-re, -im}; }
    Cplx operator*(const Cplx& o) const { return {re * o.re - im * o.im, re * o.im + im * o.re}; }
    Cplx operator*(const T& s) const { return {re * s, im * s}; }
    Cplx operator/(const Cplx& o) const {
        T d = o.re * o.re + o.im * o.im;
        return {(re * o.re + im * o.im) / d, (im * o.re - re * o.im) / d};
    }
    T norm2() const { return re * re + im * im; }
    T abs() const {
        using std::sqrt;
        return sqrt(norm2());
    }
};

// Dense Gaussian elimination with partial pivoting, row-major n x n.
template <class T>
std::vector<T> solve_dense(std::vector<T> a, std::vector<T> b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        T best = abs_of(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            T v = abs_of(a[r * n + col]);
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == T(0)) throw MathDomainError("singular linear system");
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a[piv * n + c], a[col * n + c]);
            std::swap(b[piv], b[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            T f = a[r * n + col] / a[col * n + col];
            if (f == T(0)) continue;
            for (std::size_t c = col; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    std::vector<T> x(n);
    for (std::size_t r = n; r-- > 0;) {
        T s = b[r];
        for (std::size_t c = r + 1; c < n; ++c) s -= a[r * n + c] * x[c];
        x[r] = s / a[r * n + r];
    }
    return x;
}

// Complex 2x2 inverse; det is returned so callers can test conditioning.
template <class T>
struct Inverse2 {
    Cplx<T> m[2][2];
    Cplx<T> det;

    Inverse2() = default;
    Inverse2(const Cplx<T>& a, const Cplx<T>& b, const Cplx<T>& c, const Cplx<T>& d) {
        det = a * d - b * c;
        m[0][0] = d / det;
        m[0][1] = -b / det;
        m[1][0] = -c / det;
        m[1][1] = a / det;
    }
};

template <class T>
T bisect(T lo, T hi, const auto& f, int iters = 200) {
    T flo = f(lo);
    for (int it = 0; it < iters; ++it) {
        T mid = (lo + hi) / 2;
        if (mid == lo || mid == hi) break;
        T fm = f(mid);
        if ((fm < 0) == (flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return (lo + hi) / 2;
}

}  // namespace lpseries
