#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mgk/graph.hpp"
#include "mgk/linalg.hpp"

namespace mgk {

// ---- differentials ----

// Contract compact edge `label` = (u, v) into u. The merged vertex keeps u's
// position; the sign is (-1)^{v-1} from i(∂/∂v). nullopt if a loop appears.
inline std::optional<LabeledGraph> contract(const LabeledGraph& g, int label) {
    const Edge& e = g.edge(label);
    if (e.cls != EdgeClass::Compact) throw MalformedGraph("only compact edges contract");
    const int u = e.src, v = e.dst;
    auto map = [&](int w) {
        if (w == v) w = u;
        return w > v ? w - 1 : w;
    };
    LabeledGraph out;
    out.n = g.n - 1;
    out.sign = g.sign * ((v - 1) % 2 == 0 ? 1 : -1);
    for (const auto& f : g.edges) {
        if (f.label == label) continue;
        Edge h = f;
        h.src = map(f.src);
        h.dst = map(f.dst);
        if (h.src == h.dst) return std::nullopt;
        out.edges.push_back(std::move(h));
    }
    return out;
}

inline GraphVector differential_d(const GraphVector& v) {
    GraphVector out;
    for (const auto& [g, c] : v.terms)
        for (const auto& e : g.edges)
            if (e.cls == EdgeClass::Compact)
                if (auto h = contract(g, e.label)) out.add(*h, c);
    return out;
}

namespace detail {

inline LabeledGraph replace_edge(const LabeledGraph& g, int label, EdgeClass cls, std::vector<std::string> colors) {
    LabeledGraph h = g;
    Edge& e = h.edge(label);
    e.cls = cls;
    e.colors = std::move(colors);
    return h;
}

inline int parity_sign(int k) { return k % 2 == 0 ? 1 : -1; }

// Shared shape of d' and d'' on a separated edge: insert a break on the
// input side at colors r with d(r) = d(p) + in_shift and on the output side
// at colors s with d(s) = d(q) + out_shift, the latter with sign (-1)^{d(p)-d(s)}.
inline void break_separated(GraphVector& out, const LabeledGraph& g, const Edge& e, const BasedChainComplex& c,
                            const Rational& coef, int in_shift, int out_shift) {
    const auto& p = e.colors[0];
    const auto& q = e.colors[1];
    const int dp = c.degree_of(p), dq = c.degree_of(q);
    const int dr = dp + in_shift, ds = dq + out_shift;
    if (dr >= 0 && dr <= c.max_degree())
        for (const auto& r : c.basis(dr))
            out.add(replace_edge(g, e.label, EdgeClass::SeparatedBrokenIn, {p, r, q}), coef);
    if (ds >= 0 && ds <= c.max_degree())
        for (const auto& s : c.basis(ds))
            out.add(replace_edge(g, e.label, EdgeClass::SeparatedBrokenOut, {p, s, q}), coef * parity_sign(dp - ds));
}

}  // namespace detail

inline GraphVector differential_dprime(const GraphVector& v, const Complexes& cs) {
    GraphVector out;
    for (const auto& [g, coef] : v.terms)
        for (const auto& e : g.edges) {
            if (e.cls == EdgeClass::Compact) {
                const auto& c = complex_for(cs, e.label);
                for (const auto& b : c.bases())
                    for (const auto& r : b)
                        out.add(detail::replace_edge(g, e.label, EdgeClass::Separated, {r, r}), -coef);
            } else if (e.cls == EdgeClass::Separated) {
                const auto& c = complex_for(cs, e.label);
                for (const auto& x : e.colors)
                    if (!c.contains(x)) throw MalformedGraph("unknown basis element '" + x + "'");
                detail::break_separated(out, g, e, c, coef, -1, +1);
            }
        }
    return out;
}

inline GraphVector differential_dsecond(const GraphVector& v, const Complexes& cs) {
    GraphVector out;
    for (const auto& [g, coef] : v.terms)
        for (const auto& e : g.edges)
            if (e.cls == EdgeClass::Separated) {
                const auto& c = complex_for(cs, e.label);
                for (const auto& x : e.colors)
                    if (!c.contains(x)) throw MalformedGraph("unknown basis element '" + x + "'");
                detail::break_separated(out, g, e, c, coef, 0, 0);
            }
    return out;
}

// ∂-relation and C-relation: broken pieces are absorbed into incidence
// coefficients, and a broken edge at r is the separated edge colored (r, r).
// The result only has compact and separated edges.
inline GraphVector reduce_broken(const GraphVector& v, const Complexes& cs) {
    GraphVector out;
    for (const auto& [g, coef] : v.terms) {
        GraphVector cur = single(g, coef);
        for (const auto& e : g.edges) {
            if (e.cls == EdgeClass::Compact || e.cls == EdgeClass::Separated) continue;
            GraphVector next;
            for (const auto& [h, c] : cur.terms) {
                const Edge& f = h.edge(e.label);
                const auto& cx = complex_for(cs, e.label);
                switch (f.cls) {
                    case EdgeClass::Broken:
                        next.add(detail::replace_edge(h, f.label, EdgeClass::Separated, {f.colors[0], f.colors[0]}), c);
                        break;
                    case EdgeClass::SeparatedBrokenIn: {
                        Rational k = cx.incidence(f.colors[0], f.colors[1]);
                        next.add(detail::replace_edge(h, f.label, EdgeClass::Separated, {f.colors[1], f.colors[2]}),
                                 c * k);
                        break;
                    }
                    case EdgeClass::SeparatedBrokenOut: {
                        Rational k = cx.incidence(f.colors[1], f.colors[2]);
                        next.add(detail::replace_edge(h, f.label, EdgeClass::Separated, {f.colors[0], f.colors[1]}),
                                 c * k);
                        break;
                    }
                    default: next.add(h, c);
                }
            }
            cur = std::move(next);
        }
        out.add(cur);
    }
    return out;
}

// ---- quotient spaces ----

// Ambient coordinates are graph keys registered on first use. A normalizer
// rewrites a single graph as a combination of keys (label change, ∂/C
// reduction); relations are then reduced to echelon form.
class QuotientSpace {
public:
    using Normalizer = std::function<GraphVector(const LabeledGraph&)>;

    explicit QuotientSpace(Normalizer norm = nullptr) : norm_(std::move(norm)) {}

    std::size_t column(const LabeledGraph& key) {
        auto [it, fresh] = index_.try_emplace(key, keys_.size());
        if (fresh) keys_.push_back(key);
        return it->second;
    }

    void register_ambient(const LabeledGraph& g) {
        for (const auto& [k, c] : normalize(g).terms) ambient_.insert(column(k));
    }

    const GraphVector& normalize(const LabeledGraph& g) {
        auto it = cache_.find(g);
        if (it != cache_.end()) return it->second;
        LabeledGraph k = g;
        k.sign = 1;
        GraphVector v = norm_ ? norm_(k) : single(k);
        return cache_.emplace(std::move(k), std::move(v)).first->second;
    }

    SparseVec coordinates(const GraphVector& v) {
        SparseVec out;
        for (const auto& [g, c0] : v.terms) {
            Rational c = g.sign == 1 ? c0 : Rational(-c0);
            for (const auto& [k, kc] : normalize(g).terms) {
                SparseVec one{{column(k), c * kc}};
                axpy(out, 1, one);
            }
        }
        return out;
    }

    bool add_relation(const GraphVector& row) {
        relations_.push_back(row);
        return echelon_.add(coordinates(row));
    }

    SparseVec project_coords(const GraphVector& v) { return echelon_.normal_form(coordinates(v)); }

    GraphVector project(const GraphVector& v) {
        GraphVector out;
        for (const auto& [c, x] : project_coords(v)) out.add(keys_[c], x);
        return out;
    }

    bool is_zero(const GraphVector& v) { return project_coords(v).empty(); }

    // Non-pivot ambient keys, in registration order.
    std::vector<LabeledGraph> reduced_basis() const {
        std::vector<LabeledGraph> out;
        for (auto c : ambient_)
            if (!echelon_.is_pivot(c)) out.push_back(keys_[c]);
        return out;
    }
    std::size_t dimension() const { return reduced_basis().size(); }
    std::size_t rank() const { return echelon_.rank(); }
    const std::vector<GraphVector>& relations() const { return relations_; }
    const LabeledGraph& key(std::size_t c) const { return keys_.at(c); }

private:
    Normalizer norm_;
    std::map<LabeledGraph, std::size_t> index_;
    std::vector<LabeledGraph> keys_;
    std::set<std::size_t> ambient_;
    Echelon echelon_;
    std::vector<GraphVector> relations_;
    std::map<LabeledGraph, GraphVector> cache_;
};

inline GraphVector label_change_normalize(const LabeledGraph& g) {
    auto c = canonical_form(g);
    if (c.zero) return {};
    return single(c.graph, c.sign);
}

// Graphs indexing the universal cycle: trivalent, every edge of degree 1.
inline std::vector<LabeledGraph> cycle_graphs(int n, int m, const Complexes& cs) {
    return enumerate_graphs(n, m, std::vector<int>(m, 1), cs, true);
}

// (*)-relation rows: for each contracted graph Γ', d*Γ' = Σ_Γ coef_Γ'(dΓ) Γ.
inline std::vector<GraphVector> star_rows(const std::vector<LabeledGraph>& graphs) {
    std::map<LabeledGraph, GraphVector> rows;
    for (const auto& g : graphs)
        for (const auto& [h, c] : differential_d(single(g)).terms) rows[h].add(g, c);
    std::vector<GraphVector> out;
    for (auto& [h, r] : rows)
        if (!r.empty()) out.push_back(std::move(r));
    return out;
}

// ξ-relation rows over all Γ(p,q)_i with d(p) = d(q).
inline std::vector<GraphVector> build_xi_relations(int n, int m, const Complexes& cs) {
    std::vector<GraphVector> out;
    for (int i = 1; i <= m && i <= static_cast<int>(cs.size()); ++i) {
        std::vector<int> eta(m, 1);
        eta[i - 1] = 0;
        const auto& c = cs[i - 1];
        for (const auto& g : enumerate_graphs(n, m, eta, cs, true)) {
            const Edge& e = g.edge(i);
            const auto& p = e.colors[0];
            const auto& q = e.colors[1];
            const int dp = c.degree_of(p), dq = c.degree_of(q);
            GraphVector row;
            if (dq + 1 <= c.max_degree())
                for (const auto& x : c.basis(dq + 1))
                    row.add(detail::replace_edge(g, i, EdgeClass::Separated, {x, q}), c.incidence(x, p));
            if (dp - 1 >= 0)
                for (const auto& y : c.basis(dp - 1))
                    row.add(detail::replace_edge(g, i, EdgeClass::Separated, {p, y}), c.incidence(q, y));
            if (p == q) row.add(detail::replace_edge(g, i, EdgeClass::Compact, {}), -1);
            if (!row.empty()) out.push_back(std::move(row));
        }
    }
    return out;
}

// A_{n,m}(C⃗), modulo the (*)-relation and label change, and optionally ξ.
// With empty complexes this is the uncolored A_{n,m}.
inline QuotientSpace build_star_relations(int n, int m, const Complexes& cs = {}, bool with_xi = false) {
    QuotientSpace q(label_change_normalize);
    auto graphs = cycle_graphs(n, m, cs);
    for (const auto& g : graphs) q.register_ambient(g);
    for (const auto& r : star_rows(graphs)) q.add_relation(r);
    if (with_xi)
        for (const auto& r : build_xi_relations(n, m, cs)) q.add_relation(r);
    return q;
}

inline std::vector<LabeledGraph> sigma_graphs(int n, int m, const Complexes& cs) {
    std::vector<LabeledGraph> out;
    for (int i = 0; i < m; ++i) {
        std::vector<int> eta(m, 1);
        eta[i] = 2;
        auto gs = enumerate_graphs(n, m, eta, cs, false);
        out.insert(out.end(), gs.begin(), gs.end());
    }
    return out;
}

inline void check_h_degrees(const LabeledGraph& g, const Complexes& cs) {
    for (const auto& e : g.edges) {
        if (e.cls == EdgeClass::Compact) continue;
        if (degree_of_edge(e, cs) > 2) throw InvalidDegree("edge " + std::to_string(e.label) + " has degree above 2");
    }
}

// H_n(C⃗): ∂- and C-relations through the normalizer, plus (d+d')-images of
// Σ(1,...,1) graphs. With sigma = false this is I_n(C⃗).
inline QuotientSpace build_h_space(int n, int m, const Complexes& cs, bool sigma = true) {
    QuotientSpace q([cs](const LabeledGraph& g) {
        check_h_degrees(g, cs);
        return reduce_broken(single(g), cs);
    });
    if (sigma)
        for (const auto& g : sigma_graphs(n, m, cs)) {
            auto v = single(g);
            GraphVector row = differential_d(v);
            row.add(differential_dprime(v, cs));
            q.add_relation(row);
        }
    return q;
}

inline SparseVec h_n_reduce(QuotientSpace& h, const GraphVector& v) { return h.project_coords(v); }

// Σ_k L_k ⊗ R_k = 0 in L/ℓ ⊗ R/ρ. Returns the offending right-hand keys.
inline std::vector<LabeledGraph> tensor_nonzero(QuotientSpace& left, QuotientSpace& right,
                                                const std::vector<std::pair<GraphVector, GraphVector>>& terms) {
    std::map<std::size_t, GraphVector> by_right;
    for (const auto& [l, r] : terms)
        for (const auto& [c, x] : right.project_coords(r)) by_right[c].add(l, x);
    std::vector<LabeledGraph> bad;
    for (const auto& [c, l] : by_right)
        if (!left.is_zero(l)) bad.push_back(right.key(c));
    return bad;
}

// (d + d') applied to a vector.
inline GraphVector total_differential(const GraphVector& v, const Complexes& cs) {
    GraphVector out = differential_d(v);
    out.add(differential_dprime(v, cs));
    return out;
}

struct UniversalCycle {
    std::vector<LabeledGraph> graphs;  // Σ [Γ] ⊗ Γ over these
};

inline UniversalCycle universal_cycle(int n, int m, const Complexes& cs = {}) { return {cycle_graphs(n, m, cs)}; }

struct LemmaReport {
    bool passed = true;
    std::vector<LabeledGraph> counterexamples;
};

// ⟨(1⊗(d+d'))γ̃⟩ = 0 in A(C⃗)/ξ ⊗ H_n(C⃗).
inline LemmaReport verify_dg_zero(int n, int m, const Complexes& cs) {
    auto a = build_star_relations(n, m, cs, true);
    auto h = build_h_space(n, m, cs, true);
    std::vector<std::pair<GraphVector, GraphVector>> terms;
    for (const auto& g : universal_cycle(n, m, cs).graphs) terms.emplace_back(single(g), total_differential(single(g), cs));
    LemmaReport r;
    r.counterexamples = tensor_nonzero(a, h, terms);
    r.passed = r.counterexamples.empty();
    return r;
}

}  // namespace mgk
