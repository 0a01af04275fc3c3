#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "mgk/errors.hpp"
#include "mgk/morse/expr.hpp"
#include "mgk/morse/sphere.hpp"

namespace mgk::morse {

struct Tolerances {
    double crit = 1e-10;
    double nd = 1e-8;
    double sol = 1e-9;
    double jac = 1e-7;
    double dedup = 1e-5;
    double ms = 1e-6;
};

struct IntegratorConfig {
    double rtol = 1e-11;
    double atol = 1e-12;
    double max_t = 200;
    double switch_radius = 2.0;
    std::size_t max_steps = 1'000'000;
};

struct SolverConfig {
    int grid_density = 6;
    std::vector<std::uint64_t> seeds = {1, 2};
    Tolerances tol;
    // Screening trajectories are integrated this long, with this accuracy.
    double screen_t = 10;
    double screen_step = 0.04;
    // Seeds whose curves pass within this ambient distance start Newton.
    double screen_radius = 0.25;
    int threads = 0;
};

struct CriticalPoint {
    std::string name;
    Point p;
    int index = 0;
    double value = 0;
    Mat3 hessian = Mat3::Zero();
};

template <bool H>
std::array<JetT<H>, 4> ambient_jets(const Point& p) {
    std::array<JetT<H>, 3> x;
    for (int i = 0; i < 3; ++i) x[i] = JetT<H>::variable(p.x(i), i);
    auto r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    auto one = JetT<H>::constant(1);
    auto inv = reciprocal(one + r2);
    std::array<JetT<H>, 4> X;
    for (int i = 0; i < 3; ++i) X[i] = 2.0 * (x[i] * inv);
    X[3] = (r2 - one) * inv;
    if (p.chart == 1) {
        X[2] = -X[2];
        X[3] = -X[3];
    }
    return X;
}

// A smooth function on S^3, either one expression in the ambient
// coordinates X1..X4 or one expression per chart in x, y, z.
class MorseFunction {
public:
    std::string name;
    std::vector<CriticalPoint> critical;

    static MorseFunction ambient(const std::string& expr, std::string name = "") {
        MorseFunction f;
        f.name = std::move(name);
        f.ambient_ = Expr::parse(expr, {"X1", "X2", "X3", "X4"});
        return f;
    }

    static MorseFunction charts(const std::string& north, const std::string& south, std::string name = "") {
        MorseFunction f;
        f.name = std::move(name);
        f.per_chart_ = true;
        f.chart_[0] = Expr::parse(north, {"x", "y", "z"});
        f.chart_[1] = Expr::parse(south, {"x", "y", "z"});
        return f;
    }

    bool per_chart() const { return per_chart_; }
    const Expr& ambient_expr() const { return ambient_; }
    const Expr& chart_expr(int c) const { return chart_[c]; }

    template <bool H>
    JetT<H> jet(const Point& p) const {
        if (per_chart_) {
            std::array<JetT<H>, 3> x;
            for (int i = 0; i < 3; ++i) x[i] = JetT<H>::variable(p.x(i), i);
            return chart_[p.chart].template eval<JetT<H>>(std::span<const JetT<H>>(x));
        }
        auto X = ambient_jets<H>(p);
        return ambient_.template eval<JetT<H>>(std::span<const JetT<H>>(X));
    }

    double value(const Point& p) const { return jet<false>(p).v; }

    Vec3 gradient(const Point& p) const {
        auto j = jet<false>(p);
        return {j.g[0], j.g[1], j.g[2]};
    }

    Mat3 hessian(const Point& p) const {
        auto j = jet<true>(p);
        Mat3 h;
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k) h(i, k) = j.hess(i, k);
        return h;
    }

    const CriticalPoint& critical_point(const std::string& n) const {
        for (const auto& c : critical)
            if (c.name == n) return c;
        throw InconsistentInput("no critical point named " + n);
    }

private:
    bool per_chart_ = false;
    Expr ambient_;
    std::array<Expr, 2> chart_;
};

// -grad f for the round metric 4|dx|^2/(1+|x|^2)^2, in chart coordinates.
inline Vec3 flow_field(const MorseFunction& f, const Point& p) {
    double c = std::pow(1 + p.x.squaredNorm(), 2) / 4;
    return -c * f.gradient(p);
}

// The field and its derivative.
inline void flow_field(const MorseFunction& f, const Point& p, Vec3& v, Mat3& dv) {
    auto j = f.jet<true>(p);
    double s = 1 + p.x.squaredNorm(), c = s * s / 4;
    Vec3 g(j.g[0], j.g[1], j.g[2]);
    v = -c * g;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) dv(i, k) = -(s * p.x(k) * g(i) + c * j.hess(i, k));
}

inline int morse_index(const Mat3& h) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(h);
    int n = 0;
    for (int i = 0; i < 3; ++i) n += es.eigenvalues()(i) < 0;
    return n;
}

// Unstable eigenvectors (negative Hessian eigenvalues, ascending), each with
// its largest component positive; `flip` reverses the first one.
inline Eigen::MatrixXd unstable_basis(const CriticalPoint& cp, bool flip = false) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(cp.hessian);
    Eigen::MatrixXd u(3, cp.index);
    for (int i = 0; i < cp.index; ++i) {
        Vec3 v = es.eigenvectors().col(i);
        Eigen::Index k;
        v.cwiseAbs().maxCoeff(&k);
        if (v(k) < 0) v = -v;
        u.col(i) = v;
    }
    if (flip && cp.index > 0) u.col(0) *= -1;
    return u;
}

inline Eigen::MatrixXd stable_basis(const CriticalPoint& cp) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(cp.hessian);
    Eigen::MatrixXd s(3, 3 - cp.index);
    for (int i = cp.index; i < 3; ++i) {
        Vec3 v = es.eigenvectors().col(i);
        Eigen::Index k;
        v.cwiseAbs().maxCoeff(&k);
        if (v(k) < 0) v = -v;
        s.col(i - cp.index) = v;
    }
    return s;
}

// Newton on grad f = 0 from a seed; nullopt when it does not converge.
inline std::optional<Point> newton_critical(const MorseFunction& f, Point p, double tol) {
    for (int it = 0; it < 60; ++it) {
        p = preferred(p);
        Vec3 g = f.gradient(p);
        if (g.norm() < tol) return p;
        Vec3 step = f.hessian(p).fullPivLu().solve(-g);
        if (!step.allFinite()) return std::nullopt;
        if (step.norm() > 0.5) step *= 0.5 / step.norm();
        p.x += step;
    }
    return std::nullopt;
}

inline void name_critical_points(std::vector<CriticalPoint>& cps) {
    std::sort(cps.begin(), cps.end(), [](const auto& a, const auto& b) {
        return a.index != b.index ? a.index < b.index : a.value < b.value;
    });
    std::map<int, int> seen;
    for (auto& c : cps)
        if (c.name.empty()) c.name = "c" + std::to_string(c.index) + "_" + std::to_string(seen[c.index]++);
}

inline CriticalPoint make_critical(const MorseFunction& f, const Point& p0) {
    CriticalPoint c;
    c.p = preferred(p0);
    c.value = f.value(c.p);
    c.hessian = f.hessian(c.p);
    c.index = morse_index(c.hessian);
    return c;
}

// Multi-start Newton over a seed grid, deduplicated in ambient coordinates.
inline std::vector<CriticalPoint> find_critical_points(const MorseFunction& f, const Tolerances& tol,
                                                       int density = 4) {
    std::vector<CriticalPoint> out;
    for (const auto& s : seed_grid(density, 0x5eed)) {
        auto p = newton_critical(f, s, tol.crit * 1e-2);
        if (!p) continue;
        bool dup = false;
        for (const auto& c : out) dup = dup || distance(c.p, *p) < 1e-6;
        if (!dup) out.push_back(make_critical(f, *p));
    }
    name_critical_points(out);
    return out;
}

inline void validate_critical_points(const MorseFunction& f, const Tolerances& tol) {
    for (const auto& c : f.critical) {
        double g = f.gradient(c.p).norm();
        if (g > tol.crit)
            throw InconsistentInput(f.name + ": gradient " + std::to_string(g) + " at critical point " + c.name);
        if (std::abs(c.hessian.determinant()) <= tol.nd)
            throw InconsistentInput(f.name + ": degenerate critical point " + c.name);
    }
    for (std::size_t i = 0; i < f.critical.size(); ++i)
        for (std::size_t j = i + 1; j < f.critical.size(); ++j)
            if (std::abs(f.critical[i].value - f.critical[j].value) < 1e-9)
                throw InconsistentInput(f.name + ": critical values of " + f.critical[i].name + " and " +
                                        f.critical[j].name + " coincide");
}

// (1 - s) a + s b, built from the source expressions of a and b.
inline MorseFunction blend(const MorseFunction& a, const MorseFunction& b, double s) {
    auto mix = [s](const Expr& x, const Expr& y) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", s);
        return "(1 - " + std::string(buf) + ")*(" + x.source() + ") + " + buf + "*(" + y.source() + ")";
    };
    if (a.per_chart() != b.per_chart()) throw InconsistentInput("cannot blend ambient and per-chart functions");
    if (a.per_chart())
        return MorseFunction::charts(mix(a.chart_expr(0), b.chart_expr(0)), mix(a.chart_expr(1), b.chart_expr(1)),
                                     a.name);
    return MorseFunction::ambient(mix(a.ambient_expr(), b.ambient_expr()), a.name);
}

// -f, whose flow is the flow of f run backwards.
inline MorseFunction negated(const MorseFunction& f) {
    auto neg = [](const Expr& x) { return "-(" + x.source() + ")"; };
    if (f.per_chart()) return MorseFunction::charts(neg(f.chart_expr(0)), neg(f.chart_expr(1)), f.name);
    return MorseFunction::ambient(neg(f.ambient_expr()), f.name);
}

struct MorseSystem {
    std::vector<MorseFunction> functions;
    IntegratorConfig integrator;
    SolverConfig solver;

    const MorseFunction& function(int i) const { return functions.at(i); }
    std::size_t size() const { return functions.size(); }

    // Fill in missing critical point tables and check all of them.
    void prepare() {
        for (auto& f : functions) {
            if (f.critical.empty())
                f.critical = find_critical_points(f, solver.tol);
            else
                name_critical_points(f.critical);
            validate_critical_points(f, solver.tol);
        }
    }
};

namespace detail {

template <class T>
T toml_get(const toml::table& t, const std::string& key, const std::string& where, T fallback) {
    auto node = t.get(key);
    if (!node) return fallback;
    if constexpr (std::is_same_v<T, double>) {
        if (auto v = node->value<double>()) return *v;
    } else if constexpr (std::is_same_v<T, int>) {
        if (auto v = node->value<std::int64_t>()) return static_cast<int>(*v);
    } else if constexpr (std::is_same_v<T, std::string>) {
        if (auto v = node->value<std::string>()) return *v;
    }
    throw ParseError("bad value for key '" + where + key + "'");
}

inline void check_keys(const toml::table& t, const std::vector<std::string>& allowed, const std::string& where) {
    for (const auto& [k, v] : t)
        if (std::find(allowed.begin(), allowed.end(), std::string(k.str())) == allowed.end())
            throw ParseError("unknown key '" + where + std::string(k.str()) + "'");
}

}  // namespace detail

inline MorseSystem system_from_toml(const toml::table& root) {
    using detail::check_keys;
    using detail::toml_get;
    MorseSystem sys;
    check_keys(root, {"metric", "integrator", "solver", "functions"}, "");
    if (auto m = root["metric"].as_table()) {
        check_keys(*m, {"kind"}, "metric.");
        auto kind = toml_get<std::string>(*m, "kind", "metric.", "round");
        if (kind != "round") throw ParseError("key 'metric.kind': only \"round\" is supported");
    }
    if (auto t = root["integrator"].as_table()) {
        check_keys(*t, {"rtol", "atol", "max_t", "switch_radius"}, "integrator.");
        auto& c = sys.integrator;
        c.rtol = toml_get(*t, "rtol", "integrator.", c.rtol);
        c.atol = toml_get(*t, "atol", "integrator.", c.atol);
        c.max_t = toml_get(*t, "max_t", "integrator.", c.max_t);
        c.switch_radius = toml_get(*t, "switch_radius", "integrator.", c.switch_radius);
    }
    if (auto t = root["solver"].as_table()) {
        check_keys(*t,
                   {"grid_density", "seeds", "screen_t", "screen_step", "screen_radius", "tol_crit", "tol_nd",
                    "tol_sol", "tol_jac", "r_dedup", "tol_ms", "threads"},
                   "solver.");
        auto& s = sys.solver;
        s.grid_density = toml_get(*t, "grid_density", "solver.", s.grid_density);
        s.screen_t = toml_get(*t, "screen_t", "solver.", s.screen_t);
        s.screen_step = toml_get(*t, "screen_step", "solver.", s.screen_step);
        s.screen_radius = toml_get(*t, "screen_radius", "solver.", s.screen_radius);
        s.threads = toml_get(*t, "threads", "solver.", s.threads);
        s.tol.crit = toml_get(*t, "tol_crit", "solver.", s.tol.crit);
        s.tol.nd = toml_get(*t, "tol_nd", "solver.", s.tol.nd);
        s.tol.sol = toml_get(*t, "tol_sol", "solver.", s.tol.sol);
        s.tol.jac = toml_get(*t, "tol_jac", "solver.", s.tol.jac);
        s.tol.dedup = toml_get(*t, "r_dedup", "solver.", s.tol.dedup);
        s.tol.ms = toml_get(*t, "tol_ms", "solver.", s.tol.ms);
        if (auto seeds = t->get("seeds")) {
            auto arr = seeds->as_array();
            if (!arr || arr->empty()) throw ParseError("bad value for key 'solver.seeds'");
            s.seeds.clear();
            for (const auto& v : *arr) {
                auto x = v.value<std::int64_t>();
                if (!x) throw ParseError("bad value for key 'solver.seeds'");
                s.seeds.push_back(static_cast<std::uint64_t>(*x));
            }
        }
    }
    auto fns = root["functions"].as_array();
    if (!fns || fns->empty()) throw ParseError("missing key 'functions'");
    int k = 0;
    for (const auto& node : *fns) {
        ++k;
        std::string where = "functions[" + std::to_string(k) + "].";
        auto t = node.as_table();
        if (!t) throw ParseError("bad value for key 'functions'");
        check_keys(*t, {"name", "expr", "north", "south", "critical_points"}, where);
        auto name = toml_get<std::string>(*t, "name", where, "f" + std::to_string(k));
        MorseFunction f;
        try {
            if (t->contains("expr")) {
                f = MorseFunction::ambient(toml_get<std::string>(*t, "expr", where, ""), name);
            } else if (t->contains("north") && t->contains("south")) {
                f = MorseFunction::charts(toml_get<std::string>(*t, "north", where, ""),
                                          toml_get<std::string>(*t, "south", where, ""), name);
            } else {
                throw ParseError("missing key '" + where + "expr'");
            }
        } catch (const ParseError& e) {
            throw ParseError(std::string(e.what()).find("key '") != std::string::npos
                                 ? e.what()
                                 : "key '" + where + "expr': " + e.what());
        }
        if (auto cps = t->get("critical_points")) {
            auto arr = cps->as_array();
            if (!arr) throw ParseError("bad value for key '" + where + "critical_points'");
            for (const auto& c : *arr) {
                auto ct = c.as_table();
                std::string cw = where + "critical_points.";
                if (!ct) throw ParseError("bad value for key '" + cw + "'");
                check_keys(*ct, {"chart", "x", "index", "name"}, cw);
                Point p;
                p.chart = toml_get(*ct, "chart", cw, 0);
                auto xs = ct->get("x") ? ct->get("x")->as_array() : nullptr;
                if (!xs || xs->size() != 3 || (p.chart != 0 && p.chart != 1))
                    throw ParseError("bad value for key '" + cw + "x'");
                for (int i = 0; i < 3; ++i) {
                    auto v = (*xs)[i].value<double>();
                    if (!v) throw ParseError("bad value for key '" + cw + "x'");
                    p.x(i) = *v;
                }
                auto cp = make_critical(f, p);
                cp.name = toml_get<std::string>(*ct, "name", cw, "");
                int declared = toml_get(*ct, "index", cw, cp.index);
                if (declared != cp.index)
                    throw InconsistentInput(name + ": declared index " + std::to_string(declared) +
                                            " but Hessian gives " + std::to_string(cp.index));
                f.critical.push_back(cp);
            }
        }
        sys.functions.push_back(std::move(f));
    }
    return sys;
}

inline MorseSystem load_system(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ParseError("config file not found: " + path.string());
    toml::table t;
    try {
        t = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ParseError(path.string() + ": " + std::string(e.description()));
    }
    auto sys = system_from_toml(t);
    sys.prepare();
    return sys;
}

inline nlohmann::json to_json(const Point& p) {
    auto X = to_ambient(p);
    return {{"chart", p.chart}, {"coords", {p.x(0), p.x(1), p.x(2)}}, {"ambient", {X(0), X(1), X(2), X(3)}}};
}

inline nlohmann::json to_json(const CriticalPoint& c) {
    auto j = to_json(c.p);
    j["name"] = c.name;
    j["index"] = c.index;
    j["value"] = c.value;
    return j;
}

}  // namespace mgk::morse
