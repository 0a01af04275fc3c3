#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "mgk/complex.hpp"

namespace mgk {

// h^(i) for edge label i at index i-1, together with the complexes they act on.
struct TraceAssignment {
    Complexes complexes;
    std::vector<GradedEndomorphism> maps;
};

// Separated edges become compact edges between the same black vertices.
// nullopt when that creates a self-loop.
inline std::optional<LabeledGraph> smooth(const LabeledGraph& g) {
    LabeledGraph out = g;
    for (auto& e : out.edges) {
        if (e.cls == EdgeClass::Separated) {
            if (e.colors.size() != 2) throw MalformedGraph("separated edge without a white pair");
            e.cls = EdgeClass::Compact;
            e.colors.clear();
        } else if (e.cls != EdgeClass::Compact) {
            throw MalformedGraph("smoothing needs compact or separated edges");
        }
        if (e.src == e.dst) return std::nullopt;
    }
    return out;
}

// (Π h^(i)_{q_i p_i}, Smooth Γ); the scalar is 0 when smoothing makes a loop.
inline std::pair<Rational, std::optional<LabeledGraph>> trace(const TraceAssignment& t, const LabeledGraph& g) {
    Rational s = 1;
    for (const auto& e : g.edges) {
        if (e.cls != EdgeClass::Separated) continue;
        const auto& c = complex_for(t.complexes, e.label);
        if (e.label < 1 || e.label > static_cast<int>(t.maps.size()))
            throw DegreeError("no endomorphism for edge " + std::to_string(e.label));
        const auto& h = t.maps[e.label - 1];
        if (h.degree != degree_of_edge(e, t.complexes))
            throw DegreeError("edge " + std::to_string(e.label) + " has degree " +
                              std::to_string(degree_of_edge(e, t.complexes)) + " but h has degree " +
                              std::to_string(h.degree));
        s *= h.entry(c, e.colors[1], e.colors[0]);
        if (s == 0) break;
    }
    auto sm = smooth(g);
    if (!sm) return {0, std::nullopt};
    return {s, sm};
}

inline GraphVector trace(const TraceAssignment& t, const GraphVector& v) {
    GraphVector out;
    for (const auto& [g, c] : v.terms) {
        auto [s, h] = trace(t, g);
        if (h && s != 0) out.add(*h, c * s);
    }
    return out;
}

// Tr on a class of A_{n,m}(C⃗)/ξ, landing in A_{n,m}. Every relation row of
// the source is traced first; a nonzero image means the assignment does not
// descend to the quotient.
inline GraphVector trace_on_class(const TraceAssignment& t, const QuotientSpace& source, QuotientSpace& target,
                                  const GraphVector& cls) {
    for (std::size_t k = 0; k < source.relations().size(); ++k)
        if (!target.is_zero(trace(t, source.relations()[k])))
            throw WellDefinednessViolation("relation row " + std::to_string(k) + " has nonzero trace");
    return target.project(trace(t, cls));
}

// Pairs the traced universal cycle with counts: Σ_Γ c(Γ) Tr[Γ] over the
// degree-(1,...,1) graphs, projected.
inline GraphVector pair_with_counts(const TraceAssignment& t, QuotientSpace& a,
                                    const std::map<LabeledGraph, Rational>& counts) {
    GraphVector z;
    for (const auto& [g, c] : counts) {
        if (c == 0) continue;
        bool cycle = true;
        for (const auto& e : g.edges)
            if (e.cls != EdgeClass::Compact && (e.cls != EdgeClass::Separated || degree_of_edge(e, t.complexes) != 1))
                cycle = false;
        if (!cycle) continue;
        auto [s, h] = trace(t, g);
        if (h && s != 0) z.add(*h, c * s);
    }
    return a.project(z);
}

// Linear constraints #M_{(d+d')Γ} = 0 over Σ(1,...,1) graphs Γ, with
// variables the ∂/C-reduced graph keys. Cycle graphs are always variables.
struct CountConstraints {
    std::vector<LabeledGraph> variables;
    std::map<LabeledGraph, std::size_t> index;
    std::vector<LabeledGraph> sources;  // the Σ graph behind each row
    std::vector<SparseVec> rows;

    std::size_t var(const LabeledGraph& g) {
        auto [it, fresh] = index.try_emplace(g, variables.size());
        if (fresh) variables.push_back(g);
        return it->second;
    }
};

inline CountConstraints build_count_constraints(int n, int m, const Complexes& cs) {
    CountConstraints k;
    for (const auto& g : cycle_graphs(n, m, cs)) k.var(g);
    for (const auto& s : sigma_graphs(n, m, cs)) {
        GraphVector img = reduce_broken(total_differential(single(s), cs), cs);
        SparseVec row;
        for (const auto& [g, c] : img.terms) axpy(row, c, SparseVec{{k.var(g), 1}});
        if (row.empty()) continue;
        k.rows.push_back(std::move(row));
        k.sources.push_back(s);
    }
    return k;
}

// Random element of the kernel: free variables drawn from {-3..3}, pivot
// variables solved by back substitution on the sparse echelon form.
inline std::map<LabeledGraph, Rational> sample_counts(const CountConstraints& k, std::mt19937_64& rng) {
    Echelon ech;
    for (const auto& r : k.rows) ech.add(r);
    std::uniform_int_distribution<int> coef(-3, 3);
    std::vector<Rational> x(k.variables.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!ech.is_pivot(i)) x[i] = coef(rng);
    const auto& rows = ech.rows();
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) {
        Rational v = 0;
        for (const auto& [c, a] : it->second)
            if (c != it->first) v -= a * x[c];
        x[it->first] = v;
    }
    std::map<LabeledGraph, Rational> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] != 0) out.emplace(k.variables[i], x[i]);
    return out;
}

struct ClosednessReport {
    bool cycle_ok = true;      // ⟨(1⊗(d+d'))Tr'γ̃⟩ = 0
    bool pairing_ok = true;    // equal pairings on every sampled kernel vector
    std::vector<LabeledGraph> cycle_counterexamples;
    std::vector<std::map<LabeledGraph, Rational>> pairing_counterexamples;
    bool passed() const { return cycle_ok && pairing_ok; }
};

inline ClosednessReport verify_tr_closedness(int n, int m, const Complexes& cs, const std::vector<GradedEndomorphism>& g1,
                                             const std::vector<GradedEndomorphism>& g2, std::mt19937_64& rng,
                                             int samples = 5) {
    ClosednessReport rep;
    TraceAssignment t1{cs, g1}, t2{cs, g2};
    auto a = build_star_relations(n, m);
    auto h = build_h_space(n, m, cs, true);
    std::vector<std::pair<GraphVector, GraphVector>> terms;
    for (const auto& g : cycle_graphs(n, m, cs)) {
        auto [s, sm] = trace(t1, g);
        if (!sm || s == 0) continue;
        terms.emplace_back(single(*sm, s), total_differential(single(g), cs));
    }
    rep.cycle_counterexamples = tensor_nonzero(a, h, terms);
    rep.cycle_ok = rep.cycle_counterexamples.empty();

    auto k = build_count_constraints(n, m, cs);
    for (int s = 0; s < samples; ++s) {
        auto counts = sample_counts(k, rng);
        if (!(pair_with_counts(t1, a, counts) == pair_with_counts(t2, a, counts))) {
            rep.pairing_ok = false;
            rep.pairing_counterexamples.push_back(counts);
        }
    }
    return rep;
}

}  // namespace mgk
