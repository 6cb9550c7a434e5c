#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <unistd.h>

#include "lp_constructor.hpp"

namespace lpseries {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("bad number '" + s + "' in " + ctx);
    return v;
}

inline int parse_int(const std::string& s, const std::string& ctx) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw IoError("bad integer '" + s + "' in " + ctx);
    return v;
}

}  // namespace detail

inline std::string format_coefficients(const SolutionSet<double>& s) {
    std::ostringstream o;
    o << "#crtbp-series v1\n";
    o << "mu=" << detail::fmt17(s.params.mu) << "\n";
    o << "point=" << to_string(s.params.point) << "\n";
    o << "order=" << s.order << "\n";
    o << "nmax=" << s.params.n_max << "\n";
    const char* names[3] = {"x", "y", "z"};
    for (int c = 0; c < 3; ++c)
        s.coord(c).for_each([&](const Term<double>& t) {
            const auto idx = t.index();
            const std::string head = std::string(names[c]) + " " + std::to_string(idx.i) + " " + std::to_string(idx.j) +
                                     " " + std::to_string(idx.k) + " " + std::to_string(idx.m) + " " +
                                     std::to_string(idx.p) + " " + std::to_string(idx.q);
            for (int d = 0; d <= t.c.degree(); ++d)
                if (t.c[d] != 0) o << head << " c " << d << " " << detail::fmt17(t.c[d]) << "\n";
            for (int d = 0; d <= t.s.degree(); ++d)
                if (t.s[d] != 0) o << head << " s " << d << " " << detail::fmt17(t.s[d]) << "\n";
        });
    const std::pair<const char*, const AmplitudeSeries<double>*> freq[] = {
        {"omega", &s.omega}, {"nu", &s.nu}, {"lambda", &s.lambda}, {"delta", &s.delta}};
    for (const auto& [name, ser] : freq)
        for (const auto& [k, v] : ser->terms()) {
            const auto a = amp_unpack(k);
            for (int d = 0; d <= v.degree(); ++d)
                if (v[d] != 0)
                    o << name << " " << a[0] << " " << a[1] << " " << a[2] << " " << a[3] << " 0 0 - " << d << " "
                      << detail::fmt17(v[d]) << "\n";
        }
    return o.str();
}

// Writes through a temporary file and renames it over the target.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open " + tmp.string() + " for writing");
        f << text;
        f.flush();
        if (!f) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw IoError("cannot rename onto " + path.string());
    }
}

inline void write_coefficients(const std::filesystem::path& path, const SolutionSet<double>& s) {
    write_text_atomic(path, format_coefficients(s));
}

inline SolutionSet<double> parse_coefficients(std::istream& in, const std::string& name = "<stream>") {
    std::string line;
    int lineno = 0;
    auto ctx = [&] { return name + ":" + std::to_string(lineno); };
    auto next = [&](std::string& out) {
        while (std::getline(in, out)) {
            ++lineno;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (!out.empty()) return true;
        }
        return false;
    };
    if (!next(line) || line != "#crtbp-series v1") throw IoError(name + ": missing '#crtbp-series v1' header");
    auto field = [&](const std::string& key) {
        if (!next(line) || line.rfind(key + "=", 0) != 0) throw IoError(ctx() + ": expected '" + key + "='");
        return line.substr(key.size() + 1);
    };
    const double mu = detail::parse_double(field("mu"), ctx());
    Point point;
    try {
        point = parse_point(field("point"));
    } catch (const std::invalid_argument& e) {
        throw IoError(ctx() + ": " + e.what());
    }
    const int order = detail::parse_int(field("order"), ctx());
    const int nmax = detail::parse_int(field("nmax"), ctx());
    if (order < 1 || nmax < 2) throw IoError(name + ": invalid order/nmax");
    SolutionSet<double> s;
    s.params = make_params<double>(mu, point, nmax);
    s.lin = frequencies(s.params);
    s.order = order;
    s.mask.active = {false, false, false, false};
    std::map<Key, std::pair<std::vector<double>, std::vector<double>>> coords[3];
    std::map<AmpKey, std::vector<double>> freqs[4];
    auto put = [](std::vector<double>& v, int d, double x) {
        if (int(v.size()) <= d) v.resize(d + 1, 0.0);
        v[d] = x;
    };
    while (next(line)) {
        std::istringstream ls(line);
        std::string var, part, tok[6], deg, val;
        ls >> var;
        for (auto& t : tok) ls >> t;
        ls >> part >> deg >> val;
        std::string extra;
        if (!ls || (ls >> extra)) throw IoError(ctx() + ": malformed entry");
        int f[6];
        for (int k = 0; k < 6; ++k) {
            f[k] = detail::parse_int(tok[k], ctx());
            if (k < 4 && (f[k] < 0 || f[k] > 255)) throw IoError(ctx() + ": index out of range");
            if (k >= 4 && (f[k] < -127 || f[k] > 127)) throw IoError(ctx() + ": harmonic out of range");
        }
        const int d = detail::parse_int(deg, ctx());
        if (d < 0 || d > 255) throw IoError(ctx() + ": eta degree out of range");
        const double x = detail::parse_double(val, ctx());
        int c = var == "x" ? 0 : var == "y" ? 1 : var == "z" ? 2 : -1;
        if (c >= 0) {
            if (part != "c" && part != "s") throw IoError(ctx() + ": part must be c or s");
            const MultiIndex idx{f[0], f[1], f[2], f[3], f[4], f[5]};
            if (!idx.canonical()) throw IoError(ctx() + ": non-canonical harmonic");
            auto& e = coords[c][idx.key()];
            put(part == "c" ? e.first : e.second, d, x);
            for (int a = 0; a < 4; ++a)
                if (f[a]) s.mask.active[a] = true;
            continue;
        }
        const int fi = var == "omega" ? 0 : var == "nu" ? 1 : var == "lambda" ? 2 : var == "delta" ? 3 : -1;
        if (fi < 0) throw IoError(ctx() + ": unknown variable '" + var + "'");
        if (part != "-" || f[4] != 0 || f[5] != 0) throw IoError(ctx() + ": frequency lines use p=q=0 and part '-'");
        put(freqs[fi][amp_key(f[0], f[1], f[2], f[3])], d, x);
    }
    TrigExpSeries<double>* ser[3] = {&s.x, &s.y, &s.z};
    for (int c = 0; c < 3; ++c)
        for (auto& [k, e] : coords[c])
            ser[c]->add(MultiIndex::from_key(k), EtaPoly<double>(e.first), EtaPoly<double>(e.second));
    AmplitudeSeries<double>* fs[4] = {&s.omega, &s.nu, &s.lambda, &s.delta};
    for (int fi = 0; fi < 4; ++fi)
        for (auto& [k, v] : freqs[fi]) fs[fi]->set(k, EtaPoly<double>(v));
    return s;
}

inline SolutionSet<double> read_coefficients(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    return parse_coefficients(f, path.string());
}

}  // namespace lpseries
