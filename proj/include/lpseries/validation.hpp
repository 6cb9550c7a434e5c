#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "bifurcation.hpp"
#include "dop853.hpp"
#include "orbit_service.hpp"

namespace lpseries {

using Vec6 = std::array<double, 6>;

inline Vec6 pack(const State6<double>& s) { return {s.r[0], s.r[1], s.r[2], s.v[0], s.v[1], s.v[2]}; }

inline State6<double> unpack(const Vec6& y, Frame frame = Frame::synodic) {
    State6<double> s;
    s.frame = frame;
    s.r = {y[0], y[1], y[2]};
    s.v = {y[3], y[4], y[5]};
    return s;
}

struct SynodicRhs {
    const SystemParams* p;
    Vec6 operator()(double, const Vec6& y) const {
        const auto g = potential_omega_gradient(*p, std::array<double, 3>{y[0], y[1], y[2]});
        return {y[3], y[4], y[5], 2 * y[4] + g[0], -2 * y[3] + g[1], g[2]};
    }
};

using SynodicIntegrator = Dop853<6, SynodicRhs>;

inline void check_state(const State6<double>& s) {
    if (s.frame != Frame::synodic) throw std::invalid_argument("integration expects a synodic state");
    for (int k = 0; k < 3; ++k)
        if (!std::isfinite(s.r[k]) || !std::isfinite(s.v[k])) throw std::invalid_argument("non-finite state");
}

// Dense trajectory of the synodic equations over [t0, t1]; t1 < t0 integrates backward.
inline DenseTrajectory<6> integrate(const SystemParams& params, const State6<double>& state0, double t0, double t1,
                                    const IntegratorConfig& cfg = {}) {
    check_state(state0);
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw std::invalid_argument("time span must be finite");
    DenseTrajectory<6> traj;
    SynodicIntegrator it(SynodicRhs{&params}, t0, pack(state0), t1, cfg);
    while (!it.finished()) {
        it.step();
        traj.push(it.dense());
    }
    return traj;
}

struct DivergenceOptions {
    IntegratorConfig integrator;
    double horizon = 10;
    int samples_per_step = 8;
    bool backward = false;
};

struct DivergenceRecord {
    double alpha1 = 0, alpha2 = 0;
    int order = 0;
    double eta = 0;
    double span = 0;        // synodic position error metric
    double span_local = 0;  // same threshold applied in local units
    double threshold = 1e-6;
    double jacobi_drift = 0;  // max |C(t) - C(0)| / max(1, |C(0)|)
    bool reached_horizon = false;
    std::string note;
};

namespace detail {

// First time err(t) > thr on (a, b], given err(a) <= thr; NaN if none among samples.
inline double first_crossing(const std::function<double(double)>& err, double a, double b, double thr, int samples) {
    double prev = a;
    for (int k = 1; k <= samples; ++k) {
        const double t = a + (b - a) * k / samples;
        if (err(t) > thr) {
            double lo = prev, hi = t;
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                (err(mid) > thr ? hi : lo) = mid;
            }
            return hi;
        }
        prev = t;
    }
    return NAN;
}

}  // namespace detail

// Integrates from the series state at t = 0 and returns the first time the
// position error reaches the threshold.
inline DivergenceRecord divergence_time(const CompiledOrbit<double>& orb, double threshold = 1e-6,
                                 const DivergenceOptions& opt = {}) {
    if (!(threshold > 0)) throw std::invalid_argument("threshold must be positive");
    if (!(opt.horizon > 0)) throw std::invalid_argument("horizon must be positive");
    const SystemParams& params = orb.params();
    DivergenceRecord rec;
    rec.alpha1 = orb.spec().alpha[0];
    rec.alpha2 = orb.spec().alpha[1];
    rec.eta = orb.spec().eta;
    rec.threshold = threshold;
    const double dir = opt.backward ? -1.0 : 1.0;
    const double gamma = double(params.gamma);
    auto series_pos = [&](double t) {
        State6<double> s = orb.state(t, Frame::synodic);
        return s.r;
    };
    const State6<double> s0 = orb.state(0.0, Frame::synodic);
    const double c0 = jacobi_constant(params, s0);
    const double cscale = std::max(1.0, std::abs(c0));
    SynodicIntegrator it(SynodicRhs{&params}, 0.0, pack(s0), dir * opt.horizon, opt.integrator);
    std::optional<double> span, span_local;
    const DenseSegment<6>* seg = nullptr;
    auto err = [&](double t) {
        const Vec6 y = (*seg)(t);
        std::array<double, 3> r;
        try {
            r = series_pos(t);
        } catch (const MathDomainError&) {
            return std::numeric_limits<double>::infinity();
        }
        const double dx = y[0] - r[0], dy = y[1] - r[1], dz = y[2] - r[2];
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    };
    const std::function<double(double)> errf = err;
    try {
        while (!it.finished() && !(span && span_local)) {
            it.step();
            seg = &it.dense();
            rec.jacobi_drift = std::max(rec.jacobi_drift, std::abs(jacobi_constant(params, unpack(it.y())) - c0) / cscale);
            const double a = seg->t_old, b = seg->t_new;
            if (!span_local) {
                const double t = detail::first_crossing(errf, a, b, threshold * gamma, opt.samples_per_step);
                if (!std::isnan(t)) span_local = std::abs(t);
            }
            if (!span) {
                const double t = detail::first_crossing(errf, a, b, threshold, opt.samples_per_step);
                if (!std::isnan(t)) span = std::abs(t);
            }
        }
    } catch (const StepSizeUnderflow& e) {
        rec.note = e.what();
    } catch (const MathDomainError& e) {
        rec.note = e.what();
    }
    const double reached = std::abs(it.t());
    rec.reached_horizon = !span && it.finished();
    rec.span = span.value_or(reached);
    rec.span_local = span_local.value_or(reached);
    return rec;
}

inline int thread_count() {
    if (const char* env = std::getenv("LPSERIES_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs f(i) for i in [0, n) on a pool; results land by index so output is deterministic.
template <class F>
void parallel_for(std::size_t n, F&& f, int threads = thread_count()) {
    threads = std::max(1, std::min<int>(threads, int(n)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; !failed && (i = next++) < n;) {
                try {
                    f(i);
                } catch (...) {
                    if (!failed.exchange(true)) failure = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

enum class ManifoldFamily { lissajous, quasihalo };

inline ManifoldFamily parse_family(const std::string& s) {
    if (s == "lissajous") return ManifoldFamily::lissajous;
    if (s == "quasihalo") return ManifoldFamily::quasihalo;
    throw std::invalid_argument("unknown family '" + s + "'");
}

struct DivergenceGrid {
    int n1 = 40, n2 = 40;
    double a1_max = 0.3, a2_max = 0.3;
    double alpha3 = 0.001, alpha4 = 0;
    double threshold = 1e-6;
    DivergenceOptions options;

    // Cell centres, so no cell sits on a coordinate plane.
    double a1(int i) const { return a1_max * (i + 0.5) / n1; }
    double a2(int j) const { return a2_max * (j + 0.5) / n2; }
};

// Spec for one cell of the manifold protocol; quasihalo cells take the
// smallest positive eta root and return nullopt when none exists.
template <class T>
std::optional<OrbitSpec> protocol_spec(const SolutionSet<T>& sol, ManifoldFamily fam, double a1, double a2,
                                       double a3, double a4) {
    OrbitSpec s;
    s.alpha = {a1, a2, a3, a4};
    if (fam == ManifoldFamily::quasihalo) {
        const auto rep = solve_eta(sol, s.alpha);
        bool found = false;
        for (double r : rep.roots)
            if (r > 0) {
                s.eta = r;
                found = true;
                break;
            }
        if (!found) return std::nullopt;
    }
    return s;
}

inline std::vector<DivergenceRecord> divergence_grid(const SolutionSet<double>& sol, ManifoldFamily fam,
                                              const DivergenceGrid& g, int threads = thread_count()) {
    std::vector<DivergenceRecord> out(std::size_t(g.n1) * g.n2);
    parallel_for(
        out.size(),
        [&](std::size_t idx) {
            const int i = int(idx / g.n2), j = int(idx % g.n2);
            DivergenceRecord rec;
            rec.alpha1 = g.a1(i);
            rec.alpha2 = g.a2(j);
            rec.threshold = g.threshold;
            rec.order = sol.order;
            const auto spec = protocol_spec(sol, fam, rec.alpha1, rec.alpha2, g.alpha3, g.alpha4);
            if (!spec) {
                rec.note = "no eta root";
            } else {
                try {
                    CompiledOrbit<double> orb(sol, *spec);
                    rec = divergence_time(orb, g.threshold, g.options);
                    rec.order = sol.order;
                } catch (const MathDomainError& e) {
                    rec.note = e.what();
                }
            }
            out[idx] = rec;
        },
        threads);
    return out;
}

struct ResidualScaling {
    std::vector<double> epsilons;
    std::vector<double> residuals;
    double slope = 0;
};

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("slope needs at least two points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Max over one theta1 period of the residual of the local equations of motion
//   x'' - 2y' - (1+2c2)x = dPhi/dx,  y'' + 2x' + (c2-1)y = dPhi/dy,
//   z'' + c2 z = dPhi/dz + eta Delta x,
// with Phi the Legendre sum to degree legendre_degree. The eta Delta x term is
// what the coupled series solves; it vanishes on admissible orbits.
template <class T>
T eom_residual(const SolutionSet<T>& sol, const OrbitSpec& spec, int samples = 64, int legendre_degree = 60) {
    const auto& p0 = sol.params;
    const auto pl = make_params<T>(p0.mu, p0.point, legendre_degree);
    const T c2 = p0.c[2];
    const int n = spec.order > 0 ? spec.order : sol.order;
    std::array<T, 4> a;
    for (int c = 0; c < 4; ++c) a[c] = T(spec.alpha[c]);
    const T eta(spec.eta);
    const T delta = spec.eta == 0 ? T(0) : sol.delta.truncated(n - 1).eval(a, eta);
    // residual of the modified system, so no admissibility gate
    CompiledOrbit<T> orb(sol, spec, false);
    using std::sqrt;
    const T period = T(2 * M_PI) / orb.omega();
    T worst(0);
    for (int k = 0; k < samples; ++k) {
        const T t = period * T(k) / T(samples);
        std::array<T, 3> r, v, acc;
        orb.eval(t, r, &v, &acc);
        const auto g = legendre_gradient(pl, r, legendre_degree);
        const T rx = acc[0] - 2 * v[1] - (1 + 2 * c2) * r[0] - g[0];
        const T ry = acc[1] + 2 * v[0] + (c2 - 1) * r[1] - g[1];
        const T rz = acc[2] + c2 * r[2] - g[2] - eta * delta * r[0];
        worst = std::max(worst, T(sqrt(rx * rx + ry * ry + rz * rz)));
    }
    return worst;
}

// eta_fixed: hold eta at this value for every epsilon (the residual then
// includes the eta Delta x coupling term).
template <class T>
ResidualScaling residual_scaling(const SolutionSet<T>& sol, const std::array<double, 4>& direction,
                                 const std::vector<double>& epsilons, double eta_fixed = 0, int order = 0) {
    double norm = 0;
    for (double d : direction) norm += d * d;
    if (!(norm > 0)) throw std::invalid_argument("direction must be nonzero");
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
        if (!(epsilons[k] >= 1e-4)) throw std::invalid_argument("epsilons must be >= 1e-4");
        if (k > 0 && !(epsilons[k] < epsilons[k - 1])) throw std::invalid_argument("epsilons must decrease");
    }
    ResidualScaling out;
    out.epsilons = epsilons;
    for (double e : epsilons) {
        OrbitSpec s;
        for (int c = 0; c < 4; ++c) s.alpha[c] = e * direction[c] / norm;
        s.eta = eta_fixed;
        s.order = order;
        out.residuals.push_back(double(eom_residual(sol, s)));
    }
    out.slope = loglog_slope(out.epsilons, out.residuals);
    return out;
}

}  // namespace lpseries
