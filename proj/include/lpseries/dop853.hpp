#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "numeric.hpp"

namespace lpseries {

// Dormand-Prince 8(5,3) with 7th-order dense output, tableau as published by
// Hairer and Wanner.
namespace dop853 {

inline constexpr int kStages = 12;
inline constexpr int kStagesExtended = 16;
inline constexpr int kInterpolatorPower = 7;

inline constexpr double C[16] = {
    0.0,
    0.05260015195876773,
    0.0789002279381516,
    0.1183503419072274,
    0.2816496580927726,
    0.3333333333333333,
    0.25,
    0.3076923076923077,
    0.6512820512820513,
    0.6,
    0.8571428571428571,
    1.0,
    1.0,
    0.1,
    0.2,
    0.7777777777777778};

inline constexpr double A[16][16] = {
    {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.05260015195876773, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.0197250569845379, 0.0591751709536137, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.02958758547680685, 0.0, 0.08876275643042054, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.03709200011850479, 0.0, 0.0, 0.17038392571223998, 0.10726203044637328, -0.015319437748624402, 0.008273789163814023, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.6241109587160757, 0.0, 0.0, -3.3608926294469414, -0.868219346841726, 27.59209969944671, 20.154067550477894, -43.48988418106996, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.47766253643826434, 0.0, 0.0, -2.4881146199716677, -0.590290826836843, 21.230051448181193, 15.279233632882423, -33.28821096898486, -0.020331201708508627, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {-0.9371424300859873, 0.0, 0.0, 5.186372428844064, 1.0914373489967295, -8.149787010746927, -18.52006565999696, 22.739487099350505, 2.4936055526796523, -3.0467644718982196, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0},
    {2.273310147516538, 0.0, 0.0, -10.53449546673725, -2.0008720582248625, -17.9589318631188, 27.94888452941996, -2.8589982771350235, -8.87285693353063, 12.360567175794303, 0.6433927460157636, 0.0, 0.0, 0.0, 0.0, 0.0},
    {0.054293734116568765, 0.0, 0.0, 0.0, 0.0, 4.450312892752409, 1.8915178993145003, -5.801203960010585, 0.3111643669578199, -0.1521609496625161, 0.20136540080403034, 0.04471061572777259, 0.0, 0.0, 0.0, 0.0},
    {0.056167502283047954, 0.0, 0.0, 0.0, 0.0, 0.0, 0.25350021021662483, -0.2462390374708025, -0.12419142326381637, 0.15329179827876568, 0.00820105229563469, 0.007567897660545699, -0.008298, 0.0, 0.0, 0.0},
    {0.03183464816350214, 0.0, 0.0, 0.0, 0.0, 0.028300909672366776, 0.053541988307438566, -0.05492374857139099, 0.0, 0.0, -0.00010834732869724932, 0.0003825710908356584, -0.00034046500868740456, 0.1413124436746325, 0.0, 0.0},
    {-0.42889630158379194, 0.0, 0.0, 0.0, 0.0, -4.697621415361164, 7.683421196062599, 4.06898981839711, 0.3567271874552811, 0.0, 0.0, 0.0, -0.0013990241651590145, 2.9475147891527724, -9.15095847217987, 0.0}};

inline constexpr double B[12] = {
    0.054293734116568765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    0.3111643669578199,
    -0.1521609496625161,
    0.20136540080403034,
    0.04471061572777259};

inline constexpr double E3[13] = {
    -0.18980075407240762,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    -0.4226823213237919,
    -0.1521609496625161,
    0.20136540080403034,
    0.02265179219836082,
    0.0};

inline constexpr double E5[13] = {
    0.01312004499419488,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.2251564463762044,
    -0.4957589496572502,
    1.6643771824549864,
    -0.35032884874997366,
    0.3341791187130175,
    0.08192320648511571,
    -0.022355307863886294,
    0.0};

inline constexpr double D[4][16] = {
    {-8.428938276109013, 0.0, 0.0, 0.0, 0.0, 0.5667149535193777, -3.0689499459498917, 2.38466765651207, 2.117034582445028, -0.871391583777973, 2.2404374302607883, 0.6315787787694688, -0.08899033645133331, 18.148505520854727, -9.194632392478356, -4.436036387594894},
    {10.427508642579134, 0.0, 0.0, 0.0, 0.0, 242.28349177525817, 165.20045171727028, -374.5467547226902, -22.113666853125306, 7.733432668472264, -30.674084731089398, -9.332130526430229, 15.697238121770845, -31.139403219565178, -9.35292435884448, 35.81684148639408},
    {19.985053242002433, 0.0, 0.0, 0.0, 0.0, -387.0373087493518, -189.17813819516758, 527.8081592054236, -11.57390253995963, 6.8812326946963, -1.0006050966910838, 0.7777137798053443, -2.778205752353508, -60.19669523126412, 84.32040550667716, 11.99229113618279},
    {-25.69393346270375, 0.0, 0.0, 0.0, 0.0, -154.18974869023643, -231.5293791760455, 357.6391179106141, 93.40532418362432, -37.45832313645163, 104.0996495089623, 29.8402934266605, -43.53345659001114, 96.32455395918828, -39.17726167561544, -149.72683625798564}};

}  // namespace dop853

struct IntegratorConfig {
    double rtol = 1e-12;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 10'000'000;

    void validate() const {
        if (!(rtol >= 1e-14 && rtol <= 1e-6) || !(atol >= 1e-14 && atol <= 1e-6))
            throw std::invalid_argument("integrator tolerances must lie in [1e-14, 1e-6]");
        if (!(max_step > 0)) throw std::invalid_argument("max_step must be positive");
    }
};

class StepSizeUnderflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <std::size_t N>
struct DenseSegment {
    using Vec = std::array<double, N>;
    double t_old = 0, t_new = 0;
    Vec y_old{};
    std::array<Vec, dop853::kInterpolatorPower> F{};

    Vec operator()(double t) const {
        const double h = t_new - t_old;
        const double x = h == 0 ? 0 : (t - t_old) / h;
        Vec y{};
        for (int i = 0; i < dop853::kInterpolatorPower; ++i) {
            const auto& f = F[dop853::kInterpolatorPower - 1 - i];
            for (std::size_t k = 0; k < N; ++k) {
                y[k] += f[k];
                y[k] *= (i % 2 == 0) ? x : 1 - x;
            }
        }
        for (std::size_t k = 0; k < N; ++k) y[k] += y_old[k];
        return y;
    }
};

template <std::size_t N, class Rhs>
class Dop853 {
public:
    using Vec = std::array<double, N>;

    Dop853(Rhs f, double t0, const Vec& y0, double t_bound, IntegratorConfig cfg = {})
        : f_(std::move(f)), t_(t0), y_(y0), t_bound_(t_bound), cfg_(cfg) {
        cfg_.validate();
        dir_ = t_bound >= t0 ? 1.0 : -1.0;
        fy_ = f_(t_, y_);
        h_abs_ = initial_step();
    }

    double t() const { return t_; }
    const Vec& y() const { return y_; }
    bool finished() const { return dir_ * (t_ - t_bound_) >= 0; }

    // Takes one accepted step and fills the dense segment for it.
    void step() {
        using std::abs;
        using std::pow;
        if (finished()) return;
        if (++steps_ > cfg_.max_steps) throw StepSizeUnderflow("maximum number of steps exceeded");
        const double min_step = 10 * abs(std::nextafter(t_, dir_ * std::numeric_limits<double>::infinity()) - t_);
        double h_abs = std::clamp(h_abs_, min_step, cfg_.max_step);
        bool rejected = false;
        for (;;) {
            if (h_abs < min_step) throw StepSizeUnderflow("step size underflow");
            double h = h_abs * dir_;
            double t_new = t_ + h;
            if (dir_ * (t_new - t_bound_) > 0) t_new = t_bound_;
            h = t_new - t_;
            h_abs = abs(h);
            rk_step(h);
            double err = error_norm(h);
            if (err < 1) {
                double factor = err == 0 ? kMaxFactor : std::min(kMaxFactor, kSafety * pow(err, -1.0 / 8.0));
                if (rejected) factor = std::min(1.0, factor);
                h_abs_ = h_abs * factor;
                y_old_ = y_;
                f_old_ = fy_;
                t_old_ = t_;
                t_ = t_new;
                y_ = y_new_;
                fy_ = K_[kStages];
                h_prev_ = h;
                build_dense();
                return;
            }
            h_abs *= std::max(kMinFactor, kSafety * pow(err, -1.0 / 8.0));
            rejected = true;
        }
    }

    const DenseSegment<N>& dense() const { return seg_; }

private:
    static constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10;
    static constexpr int kStages = dop853::kStages;

    double rms(const Vec& v) const {
        double s = 0;
        for (auto x : v) s += x * x;
        return std::sqrt(s / N);
    }

    double initial_step() {
        using std::abs;
        Vec sc, a, b;
        for (std::size_t k = 0; k < N; ++k) {
            sc[k] = cfg_.atol + abs(y_[k]) * cfg_.rtol;
            a[k] = y_[k] / sc[k];
            b[k] = fy_[k] / sc[k];
        }
        const double d0 = rms(a), d1 = rms(b);
        const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        Vec y1;
        for (std::size_t k = 0; k < N; ++k) y1[k] = y_[k] + h0 * dir_ * fy_[k];
        const Vec f1 = f_(t_ + h0 * dir_, y1);
        for (std::size_t k = 0; k < N; ++k) a[k] = (f1[k] - fy_[k]) / sc[k];
        const double d2 = rms(a) / h0;
        const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                       : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
        return std::min({100 * h0, h1, cfg_.max_step});
    }

    void rk_step(double h) {
        K_[0] = fy_;
        for (int s = 1; s < kStages; ++s) {
            Vec yy = y_;
            for (int j = 0; j < s; ++j) {
                const double a = dop853::A[s][j];
                if (a == 0) continue;
                for (std::size_t k = 0; k < N; ++k) yy[k] += h * a * K_[j][k];
            }
            K_[s] = f_(t_ + dop853::C[s] * h, yy);
        }
        y_new_ = y_;
        for (int j = 0; j < kStages; ++j) {
            const double b = dop853::B[j];
            if (b == 0) continue;
            for (std::size_t k = 0; k < N; ++k) y_new_[k] += h * b * K_[j][k];
        }
        K_[kStages] = f_(t_ + h, y_new_);
    }

    double error_norm(double h) const {
        using std::abs;
        double e5 = 0, e3 = 0;
        for (std::size_t k = 0; k < N; ++k) {
            const double sc = cfg_.atol + std::max(abs(y_[k]), abs(y_new_[k])) * cfg_.rtol;
            double a5 = 0, a3 = 0;
            for (int j = 0; j <= kStages; ++j) {
                a5 += dop853::E5[j] * K_[j][k];
                a3 += dop853::E3[j] * K_[j][k];
            }
            a5 /= sc;
            a3 /= sc;
            e5 += a5 * a5;
            e3 += a3 * a3;
        }
        if (e5 == 0 && e3 == 0) return 0;
        const double denom = e5 + 0.01 * e3;
        return abs(h) * e5 / std::sqrt(denom * N);
    }

    void build_dense() {
        const double h = h_prev_;
        for (int s = kStages + 1; s < dop853::kStagesExtended; ++s) {
            Vec yy = y_old_;
            for (int j = 0; j < s; ++j) {
                const double a = dop853::A[s][j];
                if (a == 0) continue;
                for (std::size_t k = 0; k < N; ++k) yy[k] += h * a * K_[j][k];
            }
            K_[s] = f_(t_old_ + dop853::C[s] * h, yy);
        }
        seg_.t_old = t_old_;
        seg_.t_new = t_;
        seg_.y_old = y_old_;
        for (std::size_t k = 0; k < N; ++k) {
            const double dy = y_[k] - y_old_[k];
            seg_.F[0][k] = dy;
            seg_.F[1][k] = h * f_old_[k] - dy;
            seg_.F[2][k] = 2 * dy - h * (fy_[k] + f_old_[k]);
            for (int r = 0; r < 4; ++r) {
                double s = 0;
                for (int j = 0; j < dop853::kStagesExtended; ++j) s += dop853::D[r][j] * K_[j][k];
                seg_.F[3 + r][k] = h * s;
            }
        }
    }

    Rhs f_;
    double t_, t_old_ = 0;
    Vec y_, y_old_{}, fy_, f_old_{}, y_new_{};
    double t_bound_, dir_ = 1, h_abs_ = 0, h_prev_ = 0;
    IntegratorConfig cfg_;
    std::size_t steps_ = 0;
    std::array<Vec, dop853::kStagesExtended> K_{};
    DenseSegment<N> seg_;
};

template <std::size_t N>
class DenseTrajectory {
public:
    using Vec = std::array<double, N>;

    void push(const DenseSegment<N>& s) { segs_.push_back(s); }
    const std::vector<DenseSegment<N>>& segments() const { return segs_; }
    double t_begin() const { return segs_.empty() ? 0 : segs_.front().t_old; }
    double t_end() const { return segs_.empty() ? 0 : segs_.back().t_new; }

    Vec operator()(double t) const {
        if (segs_.empty()) throw std::out_of_range("empty trajectory");
        const bool fwd = segs_.front().t_new >= segs_.front().t_old;
        auto it = std::lower_bound(segs_.begin(), segs_.end(), t, [fwd](const DenseSegment<N>& s, double v) {
            return fwd ? s.t_new < v : s.t_new > v;
        });
        if (it == segs_.end()) --it;
        return (*it)(t);
    }

private:
    std::vector<DenseSegment<N>> segs_;
};

}  // namespace lpseries
