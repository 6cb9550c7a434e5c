#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <lpseries/lpseries.hpp>

using namespace lpseries;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string num(double v) { return detail::fmt17(v); }

double system_mu(const std::string& sys) {
    if (sys == "sun-earth") return kSunEarthMu;
    if (sys == "earth-moon") return kEarthMoonMu;
    throw UsageError("unknown system '" + sys + "' (sun-earth or earth-moon)");
}

AmplitudeMask parse_mask(const std::string& m) {
    if (m == "all") return AmplitudeMask::all();
    if (m == "center") return AmplitudeMask::center();
    if (m == "unstable") return AmplitudeMask::unstable();
    throw UsageError("unknown mask '" + m + "'");
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        write_text_atomic(path, text);
}

SolutionSet<double> load(const std::string& path, int order) {
    auto s = read_coefficients(path);
    if (order > 0) {
        if (order > s.order) throw UsageError("--order exceeds the order stored in " + path);
        s = s.truncated(order);
    }
    return s;
}

std::array<double, 4> to_alpha(const std::vector<double>& v) {
    if (v.size() != 4) throw UsageError("--alpha takes four values");
    return {v[0], v[1], v[2], v[3]};
}

struct BuildArgs {
    std::string system, point = "L1", mask = "all", out;
    std::optional<double> mu;
    int order = 0, nmax = 0;
};

int cmd_build(const BuildArgs& a) {
    if (a.order < 1) throw UsageError("--order must be >= 1");
    double mu;
    if (a.mu)
        mu = *a.mu;
    else if (!a.system.empty())
        mu = system_mu(a.system);
    else
        throw UsageError("give --system or --mu");
    const int nmax = a.nmax > 0 ? a.nmax : a.order + 2;
    if (nmax < a.order + 2) throw UsageError("--nmax must be >= order + 2");
    BuildOptions opt;
    opt.mask = parse_mask(a.mask);
    const auto params = make_params<double>(mu, parse_point(a.point), nmax);
    const auto s = build<double>(params, a.order, opt);
    write_coefficients(a.out, s);
    std::cerr << "order " << s.order << ": " << s.x.size() << " x, " << s.y.size() << " y, " << s.z.size()
              << " z terms -> " << a.out << "\n";
    return 0;
}

struct EtaArgs {
    std::string coef, out;
    std::vector<double> alpha;
    int order = 0;
    bool grid = false;
    int n = 50;
    std::vector<double> a1{0, 0.5}, a2{0, 1.0}, a34{-0.5, 0.5};
};

int cmd_eta(const EtaArgs& a) {
    const auto s = load(a.coef, a.order);
    if (a.grid) {
        RootCountGrid g;
        g.a1_lo = a.a1.at(0), g.a1_hi = a.a1.at(1);
        g.a2_lo = a.a2.at(0), g.a2_hi = a.a2.at(1);
        g.a34_lo = a.a34.at(0), g.a34_hi = a.a34.at(1);
        g.n1 = g.n2 = g.n34 = a.n;
        const auto sl = third_order_constants(s);
        const auto cells = solution_count_map(sl, g);
        std::ostringstream o;
        o << "alpha1,alpha2,alpha3alpha4,root_count,bruteforce_count\n";
        std::size_t agree = 0;
        for (const auto& c : cells) {
            o << num(c.alpha1) << "," << num(c.alpha2) << "," << num(c.alpha34) << "," << c.analytic << ","
              << c.bruteforce << "\n";
            agree += c.analytic == c.bruteforce;
        }
        emit(a.out, o.str());
        std::cerr << "agreement " << agree << "/" << cells.size() << "\n";
        return 0;
    }
    const auto rep = solve_eta(s, to_alpha(a.alpha));
    std::ostringstream o;
    o << "alpha " << num(rep.alpha[0]) << " " << num(rep.alpha[1]) << " " << num(rep.alpha[2]) << " "
      << num(rep.alpha[3]) << "\n";
    o << "order " << s.order << "\n";
    o << "case " << to_string(rep.label) << "\n";
    o << "discriminant " << num(rep.discriminant) << "\n";
    if (rep.roots.empty()) {
        o << "no nonzero roots; eta = 0 admissible\n";
    } else {
        o << "eta = 0 admissible; nonzero roots:\n";
        for (std::size_t k = 0; k < rep.roots.size(); ++k)
            o << "  [" << k << "] " << num(rep.roots[k]) << " multiplicity " << rep.multiplicities[k] << "\n";
        o << "max relative |Delta| at roots " << num(rep.max_backsubstitution) << "\n";
    }
    if (!rep.rejected_u.empty()) o << "rejected u = eta^2 roots: " << rep.rejected_u.size() << "\n";
    emit(a.out, o.str());
    return 0;
}

struct OrbitArgs {
    std::string coef, out, frame = "synodic", manifold;
    std::vector<double> alpha{0, 0, 0, 0};
    double phi1 = 0, phi2 = 0, t0 = 0, t1 = 6.283185307179586, epsilon = 1e-3;
    std::optional<double> eta;
    std::optional<int> root_index;
    int order = 0, samples = 200;
};

std::string trajectory_csv(const SolutionSet<double>& s, const OrbitSpec& spec, const OrbitArgs& a, bool backward) {
    const Frame frame = a.frame == "local" ? Frame::local : Frame::synodic;
    const bool still = spec.alpha == std::array<double, 4>{} && spec.eta == 0;
    std::vector<double> ts;
    const int n = still ? 1 : std::max(a.samples, 2);
    for (int k = 0; k < n; ++k) {
        const double t = n == 1 ? a.t0 : a.t0 + (a.t1 - a.t0) * k / (n - 1);
        ts.push_back(backward ? -t : t);
    }
    const auto states = sample_trajectory(s, spec, ts, frame);
    const auto f = scalar_frequencies(s, spec);
    std::ostringstream o;
    o << "# alpha=" << num(spec.alpha[0]) << " " << num(spec.alpha[1]) << " " << num(spec.alpha[2]) << " "
      << num(spec.alpha[3]) << " phi1=" << num(spec.phi1) << " phi2=" << num(spec.phi2) << " eta=" << num(spec.eta)
      << " order=" << (spec.order > 0 ? spec.order : s.order) << "\n";
    o << "# class=" << classify(spec, third_order_constants(s)).label() << " frame=" << a.frame
      << " omega=" << num(f.omega) << " nu=" << num(f.nu) << " lambda=" << num(f.lambda) << "\n";
    o << "t,x,y,z,vx,vy,vz\n";
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto& st = states[k];
        o << num(ts[k]) << "," << num(st.r[0]) << "," << num(st.r[1]) << "," << num(st.r[2]) << "," << num(st.v[0])
          << "," << num(st.v[1]) << "," << num(st.v[2]) << "\n";
    }
    return o.str();
}

int cmd_orbit(const OrbitArgs& a) {
    if (a.frame != "synodic" && a.frame != "local") throw UsageError("--frame is synodic or local");
    if (a.eta && a.root_index) throw UsageError("give --eta or --root-index, not both");
    const auto s = load(a.coef, 0);
    OrbitSpec spec;
    spec.alpha = to_alpha(a.alpha);
    spec.phi1 = a.phi1;
    spec.phi2 = a.phi2;
    spec.order = a.order;
    if (a.eta) spec.eta = *a.eta;
    if (a.root_index) {
        const auto rep = solve_eta(a.order > 0 ? s.truncated(a.order) : s, spec.alpha);
        if (*a.root_index < 0 || std::size_t(*a.root_index) >= rep.roots.size())
            throw MathDomainError("root index " + std::to_string(*a.root_index) + " out of range (" +
                                  std::to_string(rep.roots.size()) + " nonzero roots)");
        spec.eta = rep.roots[*a.root_index];
    }
    if (a.manifold.empty()) {
        emit(a.out, trajectory_csv(s, spec, a, false));
        return 0;
    }
    if (a.manifold != "unstable" && a.manifold != "stable") throw UsageError("--manifold is unstable or stable");
    if (a.out.empty() || a.out == "-") throw UsageError("--manifold writes two files; give -o");
    const bool stable = a.manifold == "stable";
    for (bool plus : {true, false}) {
        const Branch b = stable ? (plus ? Branch::stable_plus : Branch::stable_minus)
                                : (plus ? Branch::unstable_plus : Branch::unstable_minus);
        const auto bs = manifold_branch(s, spec, b, a.epsilon);
        std::string path = a.out;
        const auto dot = path.rfind('.');
        const std::string tag = plus ? ".plus" : ".minus";
        path = dot == std::string::npos ? path + tag : path.substr(0, dot) + tag + path.substr(dot);
        write_text_atomic(path, trajectory_csv(s, bs, a, stable));
        std::cerr << "wrote " << path << "\n";
    }
    return 0;
}

struct ValidateArgs {
    std::vector<std::string> coef;
    std::vector<int> orders;
    std::string family = "lissajous", out;
    int grid = 40;
    double amax = 0.3, threshold = 1e-6, horizon = 10, rtol = 1e-12, atol = 1e-12, alpha3 = 1e-3;
    std::vector<double> cell;
    bool residual = false;
    std::vector<double> direction{1, 1, 0, 0};
    std::vector<double> epsilons{1e-2, 5e-3, 2.5e-3};
    double eta = 0;
};

std::vector<SolutionSet<double>> load_all(const ValidateArgs& a) {
    if (a.coef.empty()) throw UsageError("give at least one --coef");
    std::vector<SolutionSet<double>> out;
    if (!a.orders.empty()) {
        if (a.coef.size() != 1) throw UsageError("--orders truncates a single --coef file");
        const auto s = load(a.coef[0], 0);
        for (int n : a.orders) {
            if (n < 1 || n > s.order) throw UsageError("order " + std::to_string(n) + " not available");
            out.push_back(s.truncated(n));
        }
    } else {
        for (const auto& c : a.coef) out.push_back(load(c, 0));
    }
    return out;
}

int cmd_validate(const ValidateArgs& a) {
    const auto sets = load_all(a);
    std::ostringstream o;
    if (a.residual) {
        o << "order,slope,residuals\n";
        for (const auto& s : sets) {
            std::array<double, 4> dir;
            if (a.direction.size() != 4) throw UsageError("--direction takes four values");
            for (int c = 0; c < 4; ++c) dir[c] = a.direction[c];
            const auto r = residual_scaling(s, dir, a.epsilons, a.eta);
            o << s.order << "," << num(r.slope);
            for (double v : r.residuals) o << "," << num(v);
            o << "\n";
        }
        emit(a.out, o.str());
        return 0;
    }
    DivergenceGrid g;
    g.n1 = g.n2 = a.grid;
    g.a1_max = g.a2_max = a.amax;
    g.alpha3 = a.alpha3;
    g.threshold = a.threshold;
    g.options.horizon = a.horizon;
    g.options.integrator.rtol = a.rtol;
    g.options.integrator.atol = a.atol;
    g.options.integrator.validate();
    const auto fam = parse_family(a.family);
    if (!a.cell.empty()) {
        if (a.cell.size() != 2) throw UsageError("--cell takes alpha1 alpha2");
        o << "order,alpha1,alpha2,eta,span,span_local,threshold,jacobi_drift,reached_horizon,note\n";
        for (const auto& s : sets) {
            DivergenceRecord r;
            r.alpha1 = a.cell[0];
            r.alpha2 = a.cell[1];
            r.threshold = a.threshold;
            const auto spec = protocol_spec(s, fam, a.cell[0], a.cell[1], a.alpha3, 0.0);
            if (spec)
                r = divergence_time(CompiledOrbit<double>(s, *spec), a.threshold, g.options);
            else
                r.note = "no eta root";
            o << s.order << "," << num(r.alpha1) << "," << num(r.alpha2) << "," << num(r.eta) << "," << num(r.span)
              << "," << num(r.span_local) << "," << num(r.threshold) << "," << num(r.jacobi_drift) << ","
              << r.reached_horizon << "," << r.note << "\n";
        }
        emit(a.out, o.str());
        return 0;
    }
    std::vector<std::vector<DivergenceRecord>> grids;
    o << "order,alpha1,alpha2,eta,span,span_local,threshold,jacobi_drift,reached_horizon,note\n";
    for (const auto& s : sets) {
        grids.push_back(divergence_grid(s, fam, g));
        for (const auto& r : grids.back())
            o << s.order << "," << num(r.alpha1) << "," << num(r.alpha2) << "," << num(r.eta) << "," << num(r.span)
              << "," << num(r.span_local) << "," << num(r.threshold) << "," << num(r.jacobi_drift) << ","
              << r.reached_horizon << "," << r.note << "\n";
    }
    emit(a.out, o.str());
    for (std::size_t k = 1; k < grids.size(); ++k) {
        std::size_t better = 0;
        for (std::size_t c = 0; c < grids[k].size(); ++c) better += grids[k][c].span >= grids[k - 1][c].span;
        std::cerr << "order " << sets[k].order << " vs " << sets[k - 1].order << ": span not shorter on " << better
                  << "/" << grids[k].size() << " cells (" << double(better) / grids[k].size() << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-order Lindstedt-Poincare series near the collinear points of the CRTBP"};
    app.require_subcommand(1);

    BuildArgs ba;
    auto* b = app.add_subcommand("build", "build a series and write the coefficient file");
    b->add_option("--system", ba.system, "sun-earth or earth-moon");
    b->add_option("--mu", ba.mu, "mass ratio");
    b->add_option("--point", ba.point, "L1, L2 or L3");
    b->add_option("--order", ba.order, "truncation order")->required();
    b->add_option("--nmax", ba.nmax, "Legendre degree (default order + 2)");
    b->add_option("--mask", ba.mask, "amplitudes kept: all, center or unstable");
    b->add_option("-o,--output", ba.out, "coefficient file")->required();

    EtaArgs ea;
    auto* e = app.add_subcommand("eta", "solve the bifurcation equation");
    e->add_option("--coef", ea.coef, "coefficient file")->required();
    e->add_option("--alpha", ea.alpha, "alpha1 alpha2 alpha3 alpha4")->expected(4);
    e->add_option("--order", ea.order, "truncate to this order");
    e->add_flag("--grid", ea.grid, "root-count map of the third-order equation");
    e->add_option("--n", ea.n, "grid nodes per axis");
    e->add_option("--a1", ea.a1, "alpha1 range")->expected(2);
    e->add_option("--a2", ea.a2, "alpha2 range")->expected(2);
    e->add_option("--a34", ea.a34, "alpha3*alpha4 range")->expected(2);
    e->add_option("-o,--output", ea.out, "output file (default stdout)");

    OrbitArgs oa;
    auto* o = app.add_subcommand("orbit", "sample a trajectory of the series");
    o->add_option("--coef", oa.coef, "coefficient file")->required();
    o->add_option("--alpha", oa.alpha, "alpha1 alpha2 alpha3 alpha4")->expected(4);
    o->add_option("--phi1", oa.phi1);
    o->add_option("--phi2", oa.phi2);
    o->add_option("--eta", oa.eta, "coupling coefficient");
    o->add_option("--root-index", oa.root_index, "index into the sorted nonzero eta roots");
    o->add_option("--order", oa.order, "truncation order");
    o->add_option("--t0", oa.t0);
    o->add_option("--t1", oa.t1);
    o->add_option("--samples", oa.samples);
    o->add_option("--frame", oa.frame, "synodic or local");
    o->add_option("--manifold", oa.manifold, "unstable or stable: write both branches");
    o->add_option("--epsilon", oa.epsilon, "manifold amplitude");
    o->add_option("-o,--output", oa.out, "CSV file (default stdout)");

    ValidateArgs va;
    auto* v = app.add_subcommand("validate", "compare series against numerical integration");
    v->add_option("--coef", va.coef, "coefficient file(s)")->required();
    v->add_option("--orders", va.orders, "truncation orders of a single file");
    v->add_option("--family", va.family, "lissajous or quasihalo");
    v->add_option("--grid", va.grid, "cells per axis");
    v->add_option("--amax", va.amax, "upper amplitude of the grid");
    v->add_option("--alpha3", va.alpha3);
    v->add_option("--threshold", va.threshold);
    v->add_option("--horizon", va.horizon);
    v->add_option("--rtol", va.rtol);
    v->add_option("--atol", va.atol);
    v->add_option("--cell", va.cell, "single cell alpha1 alpha2")->expected(2);
    v->add_flag("--residual", va.residual, "residual scaling table");
    v->add_option("--direction", va.direction)->expected(4);
    v->add_option("--epsilons", va.epsilons);
    v->add_option("--eta", va.eta, "eta held fixed in residual mode");
    v->add_option("-o,--output", va.out, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? 0 : 2;
    }
    try {
        if (b->parsed()) return cmd_build(ba);
        if (e->parsed()) {
            if (!ea.grid && ea.alpha.empty()) throw UsageError("give --alpha or --grid");
            return cmd_eta(ea);
        }
        if (o->parsed()) return cmd_orbit(oa);
        if (v->parsed()) return cmd_validate(va);
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& err) {
        std::cerr << "usage error: " << err.what() << "\n";
        return 2;
    } catch (const MathDomainError& err) {
        std::cerr << "math domain error: " << err.what() << "\n";
        return 3;
    } catch (const IoError& err) {
        std::cerr << "i/o error: " << err.what() << "\n";
        return 4;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return 1;
    }
    return 2;
}
