#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mgk/chain.hpp"
#include "mgk/errors.hpp"
#include "mgk/rational.hpp"

namespace mgk {

// Separated(p,q): p sits on the input white vertex (feeding dst), q on the
// output white vertex (fed by src). The broken-separated variants carry an
// extra color in the middle: SeparatedBrokenIn = {p, r, q} with the segment
// p -> r on the input side, SeparatedBrokenOut = {p, s, q} with s -> q on the
// output side.
enum class EdgeClass { Compact, Separated, Broken, SeparatedBrokenIn, SeparatedBrokenOut };

inline const char* class_name(EdgeClass c) {
    switch (c) {
        case EdgeClass::Compact: return "compact";
        case EdgeClass::Separated: return "separated";
        case EdgeClass::Broken: return "broken";
        case EdgeClass::SeparatedBrokenIn: return "separated_broken_in";
        case EdgeClass::SeparatedBrokenOut: return "separated_broken_out";
    }
    return "?";
}

inline EdgeClass class_from_name(const std::string& s) {
    for (auto c : {EdgeClass::Compact, EdgeClass::Separated, EdgeClass::Broken, EdgeClass::SeparatedBrokenIn,
                   EdgeClass::SeparatedBrokenOut})
        if (s == class_name(c)) return c;
    throw MalformedGraph("unknown edge class '" + s + "'");
}

inline std::size_t color_count(EdgeClass c) {
    switch (c) {
        case EdgeClass::Compact: return 0;
        case EdgeClass::Separated: return 2;
        case EdgeClass::Broken: return 1;
        default: return 3;
    }
}

struct Edge {
    int label = 0;
    int src = 0;
    int dst = 0;
    EdgeClass cls = EdgeClass::Compact;
    std::vector<std::string> colors;

    auto tie() const { return std::tie(label, src, dst, cls, colors); }
    friend bool operator==(const Edge& a, const Edge& b) { return a.tie() == b.tie(); }
    friend bool operator<(const Edge& a, const Edge& b) { return a.tie() < b.tie(); }
};

// Black vertices are 1..n. Edges are kept sorted by label; labels are
// distinct but need not be contiguous (contraction omits one). `sign`
// relates the orientation to the canonical one dv_1∧…∧dv_n∧(de⁺∧de⁻)…
struct LabeledGraph {
    int n = 0;
    std::vector<Edge> edges;
    int sign = 1;

    void sort_edges() {
        std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.label < b.label; });
    }

    const Edge& edge(int label) const {
        for (const auto& e : edges)
            if (e.label == label) return e;
        throw MalformedGraph("no edge labelled " + std::to_string(label));
    }
    Edge& edge(int label) { return const_cast<Edge&>(std::as_const(*this).edge(label)); }

    bool all_compact() const {
        return std::all_of(edges.begin(), edges.end(), [](const Edge& e) { return e.cls == EdgeClass::Compact; });
    }

    // Ordering ignores the sign: keys are sign-folded.
    friend bool operator<(const LabeledGraph& a, const LabeledGraph& b) {
        return std::tie(a.n, a.edges) < std::tie(b.n, b.edges);
    }
    friend bool operator==(const LabeledGraph& a, const LabeledGraph& b) {
        return a.n == b.n && a.edges == b.edges && a.sign == b.sign;
    }
};

// C^(i) for edge label i lives at index i-1.
using Complexes = std::vector<BasedChainComplex>;

inline const BasedChainComplex& complex_for(const Complexes& cs, int label) {
    if (label < 1 || label > static_cast<int>(cs.size()))
        throw MalformedGraph("no complex for edge label " + std::to_string(label));
    return cs[label - 1];
}

inline int degree_of_edge(const Edge& e, const Complexes& cs = {}) {
    if (e.colors.size() != color_count(e.cls)) throw MalformedGraph("edge " + std::to_string(e.label) + " has wrong colors");
    auto d = [&](const std::string& x) { return complex_for(cs, e.label).degree_of(x); };
    switch (e.cls) {
        case EdgeClass::Compact: return 1;
        case EdgeClass::Separated: return d(e.colors[0]) - d(e.colors[1]);
        case EdgeClass::Broken: return 0;
        default: return d(e.colors[0]) - d(e.colors[2]) - 1;
    }
}

inline std::vector<int> valences(const LabeledGraph& g) {
    std::vector<int> v(g.n + 1, 0);
    for (const auto& e : g.edges) {
        ++v.at(e.src);
        ++v.at(e.dst);
    }
    return v;
}

// Separated and broken edges fused back into plain edges.
inline LabeledGraph closure(const LabeledGraph& g) {
    LabeledGraph c = g;
    for (auto& e : c.edges) {
        e.cls = EdgeClass::Compact;
        e.colors.clear();
    }
    return c;
}

inline bool is_connected(const LabeledGraph& g) {
    if (g.n == 0) return true;
    std::vector<int> parent(g.n + 1);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& e : g.edges) parent[find(e.src)] = find(e.dst);
    int root = find(1);
    for (int v = 2; v <= g.n; ++v)
        if (find(v) != root) return false;
    return true;
}

inline bool has_self_loop(const LabeledGraph& g) {
    return std::any_of(g.edges.begin(), g.edges.end(), [](const Edge& e) { return e.src == e.dst; });
}

// Structural checks; colors are checked when complexes are supplied.
inline void validate(const LabeledGraph& g, const Complexes* cs = nullptr) {
    if (g.n < 0) throw MalformedGraph("negative vertex count");
    if (g.sign != 1 && g.sign != -1) throw MalformedGraph("sign must be ±1");
    std::set<int> labels;
    for (const auto& e : g.edges) {
        if (!labels.insert(e.label).second) throw MalformedGraph("duplicate edge label " + std::to_string(e.label));
        if (e.src < 1 || e.src > g.n || e.dst < 1 || e.dst > g.n)
            throw MalformedGraph("edge " + std::to_string(e.label) + " has an endpoint out of range");
        if (e.src == e.dst) throw MalformedGraph("edge " + std::to_string(e.label) + " is a self-loop");
        if (e.colors.size() != color_count(e.cls))
            throw MalformedGraph("edge " + std::to_string(e.label) + " has wrong number of colors");
        if (cs)
            for (const auto& x : e.colors)
                if (!complex_for(*cs, e.label).contains(x))
                    throw MalformedGraph("color '" + x + "' not in complex " + std::to_string(e.label));
    }
    if (!std::is_sorted(g.edges.begin(), g.edges.end(),
                        [](const Edge& a, const Edge& b) { return a.label < b.label; }))
        throw MalformedGraph("edges must be sorted by label");
}

// ---- canonical form under the label change relation ----

struct Canonical {
    LabeledGraph graph;  // sign +1
    int sign = 1;        // graph-with-input-orientation = sign · canonical
    bool zero = false;   // an odd symmetry: the class is zero
};

inline int permutation_sign(const std::vector<int>& p) {
    int s = 1;
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = i + 1; j < p.size(); ++j)
            if (p[i] > p[j]) s = -s;
    return s;
}

// Apply vertex relabelling v -> perm[v-1]+1, orient compact edges from
// smaller to larger endpoint and hand out the compact labels in sorted
// endpoint order. Non-compact edges keep their labels. Returns the sign of
// the change of orientation relative to the input.
inline LabeledGraph relabel_normalized(const LabeledGraph& g, const std::vector<int>& perm, int& sign) {
    LabeledGraph out;
    out.n = g.n;
    sign = permutation_sign(perm);
    std::vector<int> compact_labels;
    std::vector<Edge> compact;
    for (const auto& e : g.edges) {
        Edge f = e;
        f.src = perm[e.src - 1] + 1;
        f.dst = perm[e.dst - 1] + 1;
        if (e.cls == EdgeClass::Compact) {
            if (f.src > f.dst) {
                std::swap(f.src, f.dst);
                sign = -sign;
            }
            compact_labels.push_back(e.label);
            compact.push_back(f);
        } else {
            out.edges.push_back(f);
        }
    }
    std::sort(compact.begin(), compact.end(),
              [](const Edge& a, const Edge& b) { return std::tie(a.src, a.dst) < std::tie(b.src, b.dst); });
    std::sort(compact_labels.begin(), compact_labels.end());
    for (std::size_t i = 0; i < compact.size(); ++i) {
        compact[i].label = compact_labels[i];
        out.edges.push_back(compact[i]);
    }
    out.sort_edges();
    return out;
}

// Minimal representative over vertex permutations, compact-edge reversals and
// permutations of the labels carried by compact edges.
inline Canonical canonical_form(const LabeledGraph& g) {
    validate(g);
    std::vector<int> perm(g.n);
    std::iota(perm.begin(), perm.end(), 0);
    Canonical best;
    bool have = false;
    do {
        int s = 0;
        LabeledGraph cand = relabel_normalized(g, perm, s);
        if (!have || cand < best.graph) {
            best.graph = cand;
            best.sign = s;
            best.zero = false;
            have = true;
        } else if (!(best.graph < cand) && s != best.sign) {
            best.zero = true;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    best.sign *= g.sign;
    best.graph.sign = 1;
    return best;
}

// ---- enumeration ----

// All labelled graphs of type (n, m, eta) over the given complexes, one per
// distinct (src, dst, class, colors) assignment to the labels 1..m. Empty
// complexes mean all-compact graphs (eta must then be all 1).
inline std::vector<LabeledGraph> enumerate_graphs(int n, int m, const std::vector<int>& eta, const Complexes& cs,
                                                  bool trivalent_only) {
    std::vector<LabeledGraph> out;
    if (n < 1 || m < 1 || static_cast<int>(eta.size()) != m) return out;
    struct Option {
        EdgeClass cls;
        std::vector<std::string> colors;
    };
    std::vector<std::vector<Option>> options(m);
    for (int i = 0; i < m; ++i) {
        if (eta[i] == 1) options[i].push_back({EdgeClass::Compact, {}});
        if (static_cast<int>(cs.size()) > i) {
            const auto& c = cs[i];
            for (int dp = 0; dp <= c.max_degree(); ++dp) {
                int dq = dp - eta[i];
                if (dq < 0 || dq > c.max_degree()) continue;
                for (const auto& p : c.basis(dp))
                    for (const auto& q : c.basis(dq)) options[i].push_back({EdgeClass::Separated, {p, q}});
            }
        }
    }
    std::vector<int> val(n + 1, 0);
    LabeledGraph g;
    g.n = n;
    auto rec = [&](auto&& self, int i) -> void {
        if (i == m) {
            for (int v = 1; v <= n; ++v)
                if (trivalent_only ? val[v] != 3 : val[v] < 3) return;
            if (!is_connected(g)) return;
            out.push_back(g);
            return;
        }
        for (int u = 1; u <= n; ++u)
            for (int v = 1; v <= n; ++v) {
                if (u == v) continue;
                if (trivalent_only && (val[u] >= 3 || val[v] >= 3)) continue;
                ++val[u];
                ++val[v];
                for (const auto& o : options[i]) {
                    g.edges.push_back(Edge{i + 1, u, v, o.cls, o.colors});
                    self(self, i + 1);
                    g.edges.pop_back();
                }
                --val[u];
                --val[v];
            }
    };
    rec(rec, 0);
    std::sort(out.begin(), out.end());
    return out;
}

inline std::vector<LabeledGraph> enumerate_graphs(int n, int m, bool trivalent_only = true) {
    return enumerate_graphs(n, m, std::vector<int>(m, 1), {}, trivalent_only);
}

// Every relabelling of g: vertex permutations, edge-label permutations and
// orientation choices of compact edges (n!·m!·2^c entries). Each entry
// carries the sign of its orientation relative to the canonical one of the
// labelled graph it produces.
inline std::vector<LabeledGraph> enumerate_labelings(const LabeledGraph& g) {
    std::vector<LabeledGraph> out;
    std::vector<int> vp(g.n);
    std::iota(vp.begin(), vp.end(), 0);
    std::vector<int> labels;
    for (const auto& e : g.edges) labels.push_back(e.label);
    std::vector<std::size_t> compact;
    for (std::size_t k = 0; k < g.edges.size(); ++k)
        if (g.edges[k].cls == EdgeClass::Compact) compact.push_back(k);
    do {
        std::vector<int> lp = labels;
        std::sort(lp.begin(), lp.end());
        do {
            for (unsigned mask = 0; mask < (1u << compact.size()); ++mask) {
                LabeledGraph h;
                h.n = g.n;
                int s = g.sign * permutation_sign(vp);
                for (std::size_t k = 0; k < g.edges.size(); ++k) {
                    Edge e = g.edges[k];
                    e.label = lp[k];
                    e.src = vp[g.edges[k].src - 1] + 1;
                    e.dst = vp[g.edges[k].dst - 1] + 1;
                    h.edges.push_back(e);
                }
                for (std::size_t b = 0; b < compact.size(); ++b)
                    if (mask >> b & 1u) {
                        std::swap(h.edges[compact[b]].src, h.edges[compact[b]].dst);
                        s = -s;
                    }
                h.sort_edges();
                h.sign = s;
                out.push_back(h);
            }
        } while (std::next_permutation(lp.begin(), lp.end()));
    } while (std::next_permutation(vp.begin(), vp.end()));
    return out;
}

// ---- vectors ----

// Formal Q-combination of labelled graphs with canonical orientation.
struct GraphVector {
    std::map<LabeledGraph, Rational> terms;

    void add(const LabeledGraph& g, const Rational& c) {
        if (c == 0) return;
        LabeledGraph k = g;
        Rational v = g.sign == 1 ? c : Rational(-c);
        k.sign = 1;
        auto [it, fresh] = terms.try_emplace(std::move(k), 0);
        it->second += v;
        if (it->second == 0) terms.erase(it);
    }
    void add(const GraphVector& o, const Rational& c = 1) {
        for (const auto& [g, v] : o.terms) add(g, c * v);
    }
    bool empty() const { return terms.empty(); }
    std::size_t size() const { return terms.size(); }

    friend bool operator==(const GraphVector& a, const GraphVector& b) { return a.terms == b.terms; }
};

inline GraphVector single(const LabeledGraph& g, const Rational& c = 1) {
    GraphVector v;
    v.add(g, c);
    return v;
}

// ---- JSON ----

inline nlohmann::json to_json(const LabeledGraph& g) {
    nlohmann::json j;
    j["n"] = g.n;
    auto edges = nlohmann::json::array();
    auto rho = nlohmann::json::array();
    nlohmann::json colors = nlohmann::json::object();
    int white = g.n;
    for (const auto& e : g.edges) {
        edges.push_back({{"label", e.label}, {"src", e.src}, {"dst", e.dst}, {"class", class_name(e.cls)}});
        if (!e.colors.empty()) colors[std::to_string(e.label)] = e.colors;
        if (e.cls == EdgeClass::Separated || e.cls == EdgeClass::SeparatedBrokenIn ||
            e.cls == EdgeClass::SeparatedBrokenOut) {
            rho.push_back({white + 1, white + 2});
            white += 2;
        }
    }
    j["edges"] = edges;
    j["rho"] = rho;
    j["colors"] = colors;
    j["sign"] = g.sign;
    return j;
}

inline LabeledGraph graph_from_json(const nlohmann::json& j) {
    try {
        LabeledGraph g;
        g.n = j.at("n").get<int>();
        g.sign = j.value("sign", 1);
        nlohmann::json colors = j.value("colors", nlohmann::json::object());
        std::size_t separated = 0;
        for (const auto& je : j.at("edges")) {
            Edge e;
            e.label = je.at("label").get<int>();
            e.src = je.at("src").get<int>();
            e.dst = je.at("dst").get<int>();
            e.cls = class_from_name(je.value("class", std::string("compact")));
            auto key = std::to_string(e.label);
            if (colors.contains(key)) e.colors = colors[key].get<std::vector<std::string>>();
            if (e.cls == EdgeClass::Separated || e.cls == EdgeClass::SeparatedBrokenIn ||
                e.cls == EdgeClass::SeparatedBrokenOut)
                ++separated;
            g.edges.push_back(std::move(e));
        }
        if (j.contains("rho") && j["rho"].size() != separated)
            throw MalformedGraph("rho must pair one input with one output per separated edge");
        g.sort_edges();
        validate(g);
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw MalformedGraph(std::string("graph JSON: ") + e.what());
    }
}

inline nlohmann::json to_json(const GraphVector& v) {
    auto arr = nlohmann::json::array();
    for (const auto& [g, c] : v.terms) arr.push_back({{"coef", to_string(c)}, {"graph", to_json(g)}});
    return arr;
}

}  // namespace mgk
