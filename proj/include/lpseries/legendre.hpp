#pragma once

#include <array>
#include <vector>

#include "crtbp_model.hpp"
#include "series.hpp"

namespace lpseries {

// Incremental evaluation of the gradient of sum_{n>=3} c_n rho^n P_n(x/rho)
// composed with coordinate series, one amplitude order at a time.
//   T_k = rho^k P_k(x/rho),  dT_{k+1}/dx = (k+1) T_k,
//   dT_{j+2}/dy = y R_j,     dT_{j+2}/dz = z R_j.
template <class T = double>
class LegendreRecurrence {
public:
    using Slice = std::vector<Term<T>>;

    LegendreRecurrence(const SystemParamsT<T>& params, int degree_cap) : c_(params.c), cap_(degree_cap) {}

    // Order-n slices of (dPhi/dx, dPhi/dy, dPhi/dz). Needs x, y, z through order n-1
    // and finish() called for every order below n.
    std::array<Slice, 3> gradient_slice(const TrigExpSeries<T>& x, const TrigExpSeries<T>& y,
                                        const TrigExpSeries<T>& z, int n) {
        {
            TermAccumulator<T> acc(cap_);
            accumulate_product_slice(acc, x, x, n, T(1));
            accumulate_product_slice(acc, y, y, n, T(1));
            accumulate_product_slice(acc, z, z, n, T(1));
            rho2_.set_slice(n, acc.finish());
        }
        if (int(tk_.size()) <= n) tk_.resize(n + 1);
        for (int k = 2; k <= n; ++k) {
            const T a = T(2 * k - 1) / k, b = T(k - 1) / k;
            TermAccumulator<T> acc(cap_);
            accumulate_product_slice(acc, x, k == 2 ? x : tk_[k - 1], n, a);
            if (k == 2)
                add_slice(acc, rho2_.slice(n), -b);
            else
                accumulate_product_slice(acc, rho2_, k == 3 ? x : tk_[k - 2], n, -b);
            tk_[k].set_slice(n, acc.finish());
        }
        std::array<Slice, 3> out;
        {
            TermAccumulator<T> acc(cap_);
            for (int k = 2; k <= n; ++k) add_slice(acc, tk_[k].slice(n), coef(k + 1) * T(k + 1));
            out[0] = acc.finish();
        }
        {
            TermAccumulator<T> acc(cap_);
            accumulate_product_slice(acc, y, s_, n, T(1));
            out[1] = acc.finish();
        }
        {
            TermAccumulator<T> acc(cap_);
            accumulate_product_slice(acc, z, s_, n, T(1));
            out[2] = acc.finish();
        }
        return out;
    }

    // Call once x is complete through order n.
    void finish(const TrigExpSeries<T>& x, int n) {
        if (int(rk_.size()) <= std::max(n, 1)) rk_.resize(std::max(n, 1) + 1);
        {
            Slice r1 = x.slice(n);
            for (auto& t : r1) {
                t.c *= T(-3);
                t.s *= T(-3);
            }
            rk_[1].set_slice(n, std::move(r1));
        }
        for (int j = 2; j <= n; ++j) {
            const int nn = j + 2;
            const T a = T(2 * nn - 1) / nn, b = T(nn - 1) / nn;
            TermAccumulator<T> acc(cap_);
            accumulate_product_slice(acc, x, rk_[j - 1], n, a);
            if (j == 2)
                add_slice(acc, rho2_.slice(n), b);  // R_0 = -1
            else
                accumulate_product_slice(acc, rho2_, rk_[j - 2], n, -b);
            add_slice(acc, tk_.size() > std::size_t(j) ? tk_[j].slice(n) : Slice{}, T(-2) * b);
            rk_[j].set_slice(n, acc.finish());
        }
        TermAccumulator<T> acc(cap_);
        for (int j = 1; j <= n; ++j) add_slice(acc, rk_[j].slice(n), coef(j + 2));
        s_.set_slice(n, acc.finish());
    }

    const TrigExpSeries<T>& rho2() const { return rho2_; }

private:
    T coef(int n) const { return n < int(c_.size()) ? c_[n] : T(0); }

    static void add_slice(TermAccumulator<T>& acc, const Slice& s, const T& f) {
        for (const auto& t : s) acc.add(t.key, t.c, t.s, f);
    }

    std::vector<T> c_;
    int cap_;
    TrigExpSeries<T> rho2_;
    std::vector<TrigExpSeries<T>> tk_;
    std::vector<TrigExpSeries<T>> rk_;
    TrigExpSeries<T> s_;
};

// Gradient of the Legendre sum composed with complete series, truncated at max_order.
template <class T>
std::array<TrigExpSeries<T>, 3> potential_gradient(const TrigExpSeries<T>& x, const TrigExpSeries<T>& y,
                                                   const TrigExpSeries<T>& z, const SystemParamsT<T>& params,
                                                   int max_order) {
    if (params.n_max < max_order + 1) throw std::invalid_argument("Legendre table shorter than max_order + 1");
    const auto xt = x.truncated(max_order), yt = y.truncated(max_order), zt = z.truncated(max_order);
    LegendreRecurrence<T> rec(params, default_degree_cap<T>(max_order) + 2);
    std::array<TrigExpSeries<T>, 3> out;
    for (int n = 0; n <= max_order; ++n) {
        auto g = rec.gradient_slice(xt, yt, zt, n);
        for (int c = 0; c < 3; ++c) out[c].set_slice(n, std::move(g[c]));
        rec.finish(xt, n);
    }
    return out;
}

}  // namespace lpseries
