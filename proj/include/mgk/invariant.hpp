#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgk/morse.hpp"
#include "mgk/trace.hpp"

namespace mgk {

enum class Provenance { Computed, Supplied };

// Integer moduli counts keyed by labelled graph (sign folded into the count).
struct CountsVector {
    std::map<LabeledGraph, long long> counts;
    Provenance provenance = Provenance::Supplied;

    void add(const LabeledGraph& g, long long c) {
        LabeledGraph k = g;
        if (k.sign < 0) c = -c;
        k.sign = 1;
        counts[k] += c;
    }

    std::map<LabeledGraph, Rational> rational() const {
        std::map<LabeledGraph, Rational> out;
        for (const auto& [g, c] : counts)
            if (c != 0) out.emplace(g, Rational(static_cast<long>(c)));
        return out;
    }
};

// Checks #M_{(d+d')Γ} = 0 for every Σ graph Γ; keys absent from `c` count 0.
inline void validate_counts(const CountsVector& c, int n, int m, const Complexes& cs) {
    auto k = build_count_constraints(n, m, cs);
    std::vector<std::string> bad;
    for (const auto& [g, v] : c.counts)
        if (v != 0 && !k.index.contains(g)) bad.push_back("unknown graph " + to_json(g).dump());
    std::vector<Rational> x(k.variables.size());
    for (const auto& [g, v] : c.counts) {
        auto it = k.index.find(g);
        if (it != k.index.end()) x[it->second] = Rational(static_cast<long>(v));
    }
    for (std::size_t r = 0; r < k.rows.size(); ++r) {
        Rational s = 0;
        for (const auto& [col, a] : k.rows[r]) s += a * x[col];
        if (s != 0) bad.push_back(to_json(k.sources[r]).dump());
    }
    if (!bad.empty()) throw InvalidCounts(std::to_string(bad.size()) + " constraint(s) violated", bad);
}

// Z = Σ_Γ Tr_g[[Γ]] · #M_Γ projected to A_{n,m}.
inline GraphVector assemble_z(const CountsVector& c, const TraceAssignment& t, QuotientSpace& a, int n, int m,
                              bool check = true) {
    if (check) validate_counts(c, n, m, t.complexes);
    return pair_with_counts(t, a, c.rational());
}

// Coordinates of a projected class against the reduced basis of `a`.
inline std::vector<Rational> class_coordinates(const QuotientSpace& a, const GraphVector& cls) {
    std::vector<Rational> out;
    for (const auto& b : a.reduced_basis()) {
        auto it = cls.terms.find(b);
        out.push_back(it == cls.terms.end() ? Rational(0) : it->second);
    }
    return out;
}

struct Z23Report {
    morse::GraphCount geometric;       // the Θ graph with all edges 1 -> 2
    std::vector<LabeledGraph> labelings;  // every relabelling, sign relative to it
    std::vector<long long> labeling_counts;
    CountsVector per_graph;
    GraphVector cls;
    std::vector<LabeledGraph> basis;
    std::vector<Rational> coords;

    nlohmann::json to_json() const {
        nlohmann::json j;
        auto c = nlohmann::json::array();
        for (const auto& x : coords) c.push_back(mgk::to_string(x));
        j["class_coords"] = c;
        auto b = nlohmann::json::array();
        for (const auto& g : basis) b.push_back(mgk::to_json(g));
        j["basis"] = b;
        nlohmann::json pg = nlohmann::json::object();
        for (const auto& [g, v] : per_graph.counts) pg[graph_key(g)] = v;
        j["per_graph"] = pg;
        auto l = nlohmann::json::array();
        for (std::size_t i = 0; i < labelings.size(); ++i)
            l.push_back({{"graph", graph_key(labelings[i])}, {"sign", labelings[i].sign}, {"count", labeling_counts[i]}});
        j["labelings"] = l;
        j["geometric_count"] = geometric.count;
        auto s = nlohmann::json::array();
        for (const auto& x : geometric.solutions) s.push_back(morse::to_json(x));
        j["solutions"] = s;
        j["anomaly"] = nullptr;
        return j;
    }

    // Compact text key: "n|label:src>dst,..." with class letters for non-compact edges.
    static std::string graph_key(const LabeledGraph& g) {
        std::string k = std::to_string(g.n) + "|";
        for (std::size_t i = 0; i < g.edges.size(); ++i) {
            const auto& e = g.edges[i];
            if (i) k += ",";
            k += std::to_string(e.label) + ":" + std::to_string(e.src) + ">" + std::to_string(e.dst);
            if (e.cls != EdgeClass::Compact) k += std::string("/") + class_name(e.cls);
        }
        return k;
    }
};

// Principal term of Z_{2,3} for three perfect Morse functions: the reduced
// complexes vanish, so only compact Θ graphs contribute. One geometric count
// of the Θ graph is re-signed for each of its relabellings.
inline Z23Report z23_pipeline(const morse::MorseSystem& sys) {
    for (std::size_t i = 0; i < sys.size(); ++i)
        if (sys.function(static_cast<int>(i)).critical.size() != 2)
            throw InconsistentInput("function " + std::to_string(i + 1) + " is not a perfect Morse function");
    Z23Report r;
    auto theta = morse::theta_graph();
    r.geometric = morse::count_graph_flows(sys, theta);
    r.labelings = enumerate_labelings(theta);
    r.per_graph.provenance = Provenance::Computed;
    std::map<LabeledGraph, long long> seen;
    for (const auto& h : r.labelings) {
        long long c = h.sign * r.geometric.count;
        r.labeling_counts.push_back(c);
        LabeledGraph k = h;
        k.sign = 1;
        auto [it, fresh] = seen.emplace(k, c);
        if (!fresh && it->second != c) throw WellDefinednessViolation("relabellings disagree on " + r.graph_key(k));
    }
    for (const auto& [g, c] : seen) r.per_graph.add(g, c);
    auto a = build_star_relations(2, 3);
    TraceAssignment t;
    r.cls = assemble_z(r.per_graph, t, a, 2, 3);
    r.basis = a.reduced_basis();
    r.coords = class_coordinates(a, r.cls);
    return r;
}

// One labelling of Θ counted geometrically. An edge whose declared direction
// is opposite to the underlying flow carries -f, whose flow from the new
// source retraces the flow of f into it; `swapped` realises the labelling
// with the two vertices exchanged instead.
struct LabelingCheck {
    LabeledGraph graph;
    bool swapped = false;
    long long expected = 0;
    long long geometric = 0;
    bool ok() const { return expected == geometric; }
};

inline std::vector<LabelingCheck> check_labelings(const morse::MorseSystem& sys, const Z23Report& r,
                                                  std::uint64_t seed) {
    std::map<std::pair<LabeledGraph, bool>, long long> cache;
    std::vector<LabelingCheck> out;
    for (std::size_t i = 0; i < r.labelings.size(); ++i) {
        LabeledGraph h = r.labelings[i];
        h.sign = 1;
        for (bool swapped : {false, true}) {
            auto [it, fresh] = cache.try_emplace({h, swapped}, 0);
            if (fresh) {
                morse::MorseSystem s;
                s.integrator = sys.integrator;
                s.solver = sys.solver;
                for (const auto& e : h.edges) {
                    const auto& f = sys.function(e.label - 1);
                    bool forward = (e.src == 1) != swapped;
                    s.functions.push_back(forward ? f : morse::negated(f));
                }
                long long c = 0;
                for (const auto& x : morse::ThetaSolver(s, h).solve_grid(seed)) c += x.sign;
                it->second = c;
            }
            out.push_back({h, swapped, r.labeling_counts[i], it->second});
        }
    }
    return out;
}

// ---- chamber continuation ----

struct ChamberEvent {
    double s = 0;
    std::string kind;
    std::string detail;
};

struct ChamberReport {
    std::vector<ChamberEvent> events;
    Z23Report start, end;
    std::size_t steps = 0;
    bool same_class = false;
    bool bifurcation_free() const { return events.empty(); }

    nlohmann::json to_json() const {
        auto ev = nlohmann::json::array();
        for (const auto& e : events) ev.push_back({{"s", e.s}, {"kind", e.kind}, {"detail", e.detail}});
        return {{"events", ev},
                {"steps", steps},
                {"same_class", same_class},
                {"start", start.to_json()},
                {"end", end.to_json()}};
    }
};

inline morse::MorseSystem interpolate(const morse::MorseSystem& a, const morse::MorseSystem& b, double s) {
    if (a.size() != b.size()) throw InconsistentInput("systems have different numbers of functions");
    morse::MorseSystem out;
    out.integrator = a.integrator;
    out.solver = a.solver;
    for (std::size_t i = 0; i < a.size(); ++i) out.functions.push_back(morse::blend(a.functions[i], b.functions[i], s));
    return out;
}

// Follows f_s = (1-s) a + s b at the given step, tracking critical points and
// Θ solutions by Newton continuation. Reported events: critical points that
// degenerate, move off, or appear; Θ solutions that are lost, become
// singular, flip sign, escape towards t = 0 or t = ∞, merge, or fail to match
// the independent count at s = 1.
inline ChamberReport chamber_check(const morse::MorseSystem& a, const morse::MorseSystem& b, double step = 1e-3) {
    using namespace morse;
    ChamberReport rep;
    rep.start = z23_pipeline(a);
    rep.end = z23_pipeline(b);
    rep.same_class = rep.start.coords == rep.end.coords;

    const auto& tol = a.solver.tol;
    auto theta = theta_graph();
    std::vector<std::vector<CriticalPoint>> crit;
    for (const auto& f : a.functions) crit.push_back(f.critical);
    std::vector<FlowSolution> sols = rep.start.geometric.solutions;
    auto event = [&](double s, std::string kind, std::string detail) {
        rep.events.push_back({s, std::move(kind), std::move(detail)});
    };

    int n = static_cast<int>(std::ceil(1 / step - 1e-9));
    MorseSystem cur;
    for (int j = 1; j <= n && rep.events.empty(); ++j) {
        double s = std::min(1.0, j * step);
        cur = j == n ? b : interpolate(a, b, s);
        ++rep.steps;
        for (std::size_t k = 0; k < cur.size(); ++k) {
            auto& f = cur.functions[k];
            std::vector<CriticalPoint> next;
            for (const auto& c : crit[k]) {
                auto p = newton_critical(f, c.p, tol.crit * 1e-2);
                if (!p || distance(*p, c.p) > 0.05) {
                    event(s, "critical point lost", "function " + std::to_string(k + 1) + " " + c.name);
                    continue;
                }
                auto c2 = make_critical(f, *p);
                c2.name = c.name;
                if (std::abs(c2.hessian.determinant()) <= tol.nd || c2.index != c.index)
                    event(s, "degenerate critical point", "function " + std::to_string(k + 1) + " " + c.name);
                next.push_back(c2);
            }
            if (find_critical_points(f, tol, 3).size() != crit[k].size())
                event(s, "critical points created", "function " + std::to_string(k + 1));
            crit[k] = next;
            f.critical = next;
        }
        if (!rep.events.empty()) break;

        ThetaSolver solver(cur, theta);
        std::vector<FlowSolution> next;
        for (const auto& x : sols) {
            std::array<double, 3> lt;
            for (int k = 0; k < 3; ++k) lt[k] = std::log(x.times[k]);
            std::optional<FlowSolution> y;
            try {
                y = solver.refine({x.x, x.y}, lt);
            } catch (const NonGeneric& e) {
                event(s, "singular solution", e.what());
                continue;
            }
            if (!y || distance(y->x, x.x) > 0.05 || distance(y->y, x.y) > 0.05) {
                event(s, "solution lost", nlohmann::json(to_json(x)).dump());
                continue;
            }
            if (y->sign != x.sign) event(s, "solution changed sign", nlohmann::json(to_json(*y)).dump());
            double tmin = std::min({y->times[0], y->times[1], y->times[2]});
            double tmax = std::max({y->times[0], y->times[1], y->times[2]});
            if (tmin < 1e-3 || tmax > cur.integrator.max_t / 2)
                event(s, "solution escaping", nlohmann::json(to_json(*y)).dump());
            for (const auto& z : next)
                if (solver.same(z, *y)) event(s, "solutions merged", nlohmann::json(to_json(*y)).dump());
            next.push_back(*y);
        }
        sols = std::move(next);
    }
    if (rep.events.empty()) {
        ThetaSolver solver(b, theta);
        ThetaSolver::sort_solutions(sols);
        if (!solver.agree(sols, rep.end.geometric.solutions))
            event(1, "solution set mismatch",
                  std::to_string(sols.size()) + " tracked, " + std::to_string(rep.end.geometric.solutions.size()) +
                      " counted at the end");
    }
    return rep;
}

}  // namespace mgk
