#include <gtest/gtest.h>

#include <set>

#include "mgk/graph.hpp"
#include "mgk/random.hpp"

using namespace mgk;

namespace {

LabeledGraph theta(int o1 = 1, int o2 = 1, int o3 = 1) {
    LabeledGraph g;
    g.n = 2;
    int o[3] = {o1, o2, o3};
    for (int i = 0; i < 3; ++i)
        g.edges.push_back(o[i] > 0 ? Edge{i + 1, 1, 2, EdgeClass::Compact, {}} : Edge{i + 1, 2, 1, EdgeClass::Compact, {}});
    return g;
}

}  // namespace

TEST(Graph, EdgeDegrees) {
    Complexes cs{elementary_complex(0, "p", "q")};
    EXPECT_EQ(degree_of_edge(Edge{1, 1, 2, EdgeClass::Compact, {}}), 1);
    EXPECT_EQ(degree_of_edge(Edge{1, 1, 2, EdgeClass::Separated, {"p", "p"}}, cs), 0);
    EXPECT_EQ(degree_of_edge(Edge{1, 1, 2, EdgeClass::Broken, {"p"}}, cs), 0);
    BasedChainComplex c({{"a"}, {"b"}, {"c"}, {"d"}}, {Matrix(1, 1), Matrix(1, 1), Matrix(1, 1)});
    Complexes cs2{c};
    EXPECT_EQ(degree_of_edge(Edge{1, 1, 2, EdgeClass::SeparatedBrokenIn, {"d", "c", "b"}}, cs2), 1);
    EXPECT_THROW(degree_of_edge(Edge{1, 1, 2, EdgeClass::Separated, {"p"}}, cs), MalformedGraph);
}

TEST(Graph, ThetaCanonical) {
    auto c = canonical_form(theta());
    EXPECT_EQ(c.sign, 1);
    EXPECT_FALSE(c.zero);
    EXPECT_EQ(c.graph, theta());
}

TEST(Graph, VertexSwapIsOdd) {
    // swapping the vertex labels of Θ reverses every edge
    LabeledGraph g = theta(-1, -1, -1);
    auto c = canonical_form(g);
    EXPECT_EQ(c.graph, theta());
    // relabelling (−1) times three reversals (−1)^3 relative to this graph's canonical orientation
    EXPECT_EQ(c.sign, -1);
    int s = 0;
    auto swapped = relabel_normalized(theta(), {1, 0}, s);
    EXPECT_EQ(swapped, theta());
}

TEST(Graph, EdgeReversalIsOdd) {
    EXPECT_EQ(canonical_form(theta(-1, 1, 1)).sign, -1);
    EXPECT_EQ(canonical_form(theta(-1, -1, 1)).sign, 1);
}

TEST(Graph, EdgeLabelSwapIsEven) {
    LabeledGraph g;
    g.n = 4;
    g.edges = {{1, 1, 2, EdgeClass::Compact, {}}, {2, 1, 3, EdgeClass::Compact, {}}, {3, 1, 4, EdgeClass::Compact, {}},
               {4, 2, 3, EdgeClass::Compact, {}}, {5, 3, 4, EdgeClass::Compact, {}}, {6, 2, 4, EdgeClass::Compact, {}}};
    LabeledGraph h = g;
    std::swap(h.edges[0].label, h.edges[1].label);
    h.sort_edges();
    auto cg = canonical_form(g), ch = canonical_form(h);
    EXPECT_EQ(cg.graph, ch.graph);
    EXPECT_EQ(cg.sign, ch.sign);
}

TEST(Graph, CanonicalIdempotent) {
    for (const auto& g : enumerate_graphs(4, 6)) {
        auto c = canonical_form(g);
        if (c.zero) continue;
        auto c2 = canonical_form(c.graph);
        EXPECT_EQ(c2.sign, 1);
        EXPECT_EQ(c2.graph, c.graph);
    }
}

TEST(Graph, ThetaEnumeration) {
    auto gs = enumerate_graphs(2, 3);
    // 2^3 orientations; each labelled graph arises from |Aut Θ| = 12 labelings
    EXPECT_EQ(gs.size(), 8u);
    auto ls = enumerate_labelings(theta());
    EXPECT_EQ(ls.size(), 96u);
    std::map<LabeledGraph, int> mult;
    for (const auto& l : ls) ++mult[l];
    EXPECT_EQ(mult.size(), 8u);
    for (const auto& [g, k] : mult) EXPECT_EQ(k, 12);
    for (const auto& g : gs) EXPECT_EQ(mult.count(g), 1u);
}

TEST(Graph, LabelingSignsMatchCanonicalForm) {
    for (const auto& l : enumerate_labelings(theta())) {
        // each labelling carries the orientation pushed forward from Θ
        auto c = canonical_form(l);
        EXPECT_EQ(c.graph, theta());
        EXPECT_EQ(c.sign, 1);
    }
}

TEST(Graph, SingleVertexEmpty) { EXPECT_TRUE(enumerate_graphs(1, 1, false).empty()); }

TEST(Graph, FourSixCount) {
    auto gs = enumerate_graphs(4, 6);
    // K4 (24 automorphisms) and the necklace (16): 4!·6!·2^6 · (1/24 + 1/16)
    EXPECT_EQ(gs.size(), 115200u);
    for (std::size_t k = 0; k < gs.size(); k += 997)
        for (int v = 1; v <= 4; ++v) EXPECT_EQ(valences(gs[k])[v], 3);
}

TEST(Graph, EnumerationClosedUnderReversal) {
    auto gs = enumerate_graphs(2, 3);
    std::set<LabeledGraph> keys(gs.begin(), gs.end());
    EXPECT_EQ(keys.size(), gs.size());
    for (auto g : gs) {
        std::swap(g.edges[1].src, g.edges[1].dst);
        EXPECT_EQ(keys.count(g), 1u);
    }
}

TEST(Graph, Closure) {
    EXPECT_EQ(closure(theta()), theta());
    Complexes cs{elementary_complex(0), elementary_complex(0), elementary_complex(0)};
    LabeledGraph g = theta();
    g.edges[0].cls = EdgeClass::Separated;
    g.edges[0].colors = {"p", "q"};
    EXPECT_EQ(closure(g), theta());
    // two separated edges whose closure joins otherwise disjoint pieces
    LabeledGraph h;
    h.n = 4;
    h.edges = {{1, 1, 3, EdgeClass::Separated, {"p", "q"}}, {2, 2, 4, EdgeClass::Separated, {"p", "q"}}};
    EXPECT_FALSE(is_connected(closure(h)));
    h.edges.push_back({3, 3, 2, EdgeClass::Compact, {}});
    EXPECT_TRUE(is_connected(closure(h)));
}

TEST(Graph, RejectsLoops) {
    LabeledGraph g{2, {{1, 1, 1, EdgeClass::Compact, {}}}, 1};
    EXPECT_THROW(validate(g), MalformedGraph);
    LabeledGraph s{2, {{1, 2, 2, EdgeClass::Separated, {"p", "q"}}}, 1};
    EXPECT_THROW(validate(s), MalformedGraph);
}

TEST(Graph, ColoredEnumerationDegrees) {
    Complexes cs(3, elementary_complex(0));
    auto gs = enumerate_graphs(2, 3, {1, 1, 1}, cs, true);
    // per edge: compact or separated (p,q), two orientations each: 4^3
    EXPECT_EQ(gs.size(), 64u);
    for (const auto& g : gs)
        for (const auto& e : g.edges) EXPECT_EQ(degree_of_edge(e, cs), 1);
}

TEST(Graph, JsonRoundTrip) {
    LabeledGraph g = theta();
    g.edges[1].cls = EdgeClass::Separated;
    g.edges[1].colors = {"p", "q"};
    g.sign = -1;
    auto j = to_json(g);
    EXPECT_EQ(j["rho"].size(), 1u);
    EXPECT_EQ(graph_from_json(j), g);
}
