#include <gtest/gtest.h>

#include "mgk/complex.hpp"
#include "mgk/random.hpp"

using namespace mgk;

namespace {

LabeledGraph theta() {
    return LabeledGraph{2,
                        {{1, 1, 2, EdgeClass::Compact, {}}, {2, 1, 2, EdgeClass::Compact, {}},
                         {3, 1, 2, EdgeClass::Compact, {}}},
                        1};
}

}  // namespace

TEST(Complex, ThetaIsClosed) {
    for (const auto& g : enumerate_graphs(2, 3)) EXPECT_TRUE(differential_d(single(g)).empty());
}

TEST(Complex, ContractionSign) {
    // path-like piece of a (4,6) graph: contract edge 1 = (2,3)
    LabeledGraph g{4,
                   {{1, 2, 3, EdgeClass::Compact, {}}, {2, 1, 2, EdgeClass::Compact, {}}, {3, 1, 3, EdgeClass::Compact, {}},
                    {4, 1, 4, EdgeClass::Compact, {}}, {5, 2, 4, EdgeClass::Compact, {}}, {6, 3, 4, EdgeClass::Compact, {}}},
                   1};
    auto h = contract(g, 1);
    ASSERT_TRUE(h);
    // vertex 3 is removed: i(∂/∂v_3) gives (+1); 4 becomes 3
    EXPECT_EQ(h->sign, 1);
    EXPECT_EQ(h->n, 3);
    EXPECT_EQ(h->edge(3).dst, 2);
    EXPECT_EQ(h->edge(6).src, 2);
    EXPECT_EQ(h->edge(6).dst, 3);
    auto r = contract(g, 2);  // (1,2): removes vertex 2, sign −1
    ASSERT_TRUE(r);
    EXPECT_EQ(r->sign, -1);
}

TEST(Complex, DSquaredFourSix) {
    auto gs = enumerate_graphs(4, 6);
    Rng rng(42);
    for (int t = 0; t < 200; ++t) {
        const auto& g = gs[std::uniform_int_distribution<std::size_t>(0, gs.size() - 1)(rng)];
        EXPECT_TRUE(differential_d(differential_d(single(g))).empty());
    }
}

TEST(Complex, DPrimeCompactZeroComplex) {
    Complexes cs(3, BasedChainComplex::zero(1));
    EXPECT_TRUE(differential_dprime(single(theta()), cs).empty());
}

TEST(Complex, DPrimeCompactElementary) {
    Complexes cs{elementary_complex(0), BasedChainComplex::zero(1), BasedChainComplex::zero(1)};
    auto v = differential_dprime(single(theta()), cs);
    ASSERT_EQ(v.size(), 2u);
    for (const auto& [g, c] : v.terms) {
        EXPECT_EQ(c, -1);
        EXPECT_EQ(g.edge(1).cls, EdgeClass::Separated);
        EXPECT_EQ(g.edge(1).colors[0], g.edge(1).colors[1]);
    }
}

TEST(Complex, DPrimeSeparatedElementary) {
    // ∂p = 2q; separated (p, q) has degree 1
    BasedChainComplex c({{"q"}, {"p"}}, {[] { Matrix m(1, 1); m(0, 0) = 2; return m; }()});
    Complexes cs{c, BasedChainComplex::zero(1), BasedChainComplex::zero(1)};
    LabeledGraph g = theta();
    g.edges[0] = {1, 1, 2, EdgeClass::Separated, {"p", "q"}};
    auto v = differential_dprime(single(g), cs);
    ASSERT_EQ(v.size(), 2u);
    auto red = reduce_broken(v, cs);
    // input side: ∂_{pq}·Γ(q,q); output side: (−1)^{1−1} ∂_{pq}·Γ(p,p)
    LabeledGraph qq = g, pp = g;
    qq.edges[0].colors = {"q", "q"};
    pp.edges[0].colors = {"p", "p"};
    GraphVector want;
    want.add(qq, 2);
    want.add(pp, 2);
    EXPECT_EQ(red, want);
}

TEST(Complex, DSecond) {
    EXPECT_TRUE(differential_dsecond(single(theta()), Complexes(3, elementary_complex(0))).empty());
    BasedChainComplex c({{"q", "s"}, {"p"}}, {Matrix(2, 1)});
    Complexes cs{c, BasedChainComplex::zero(1), BasedChainComplex::zero(1)};
    LabeledGraph g = theta();
    g.edges[0] = {1, 1, 2, EdgeClass::Separated, {"p", "q"}};
    auto v = differential_dsecond(single(g), cs);
    int in = 0, out = 0;
    for (const auto& [h, k] : v.terms) {
        if (h.edge(1).cls == EdgeClass::SeparatedBrokenIn) {
            ++in;
            EXPECT_EQ(k, 1);
        } else {
            ++out;
            EXPECT_EQ(k, -1);  // (−1)^{d(p)−d(s)} with d(p) − d(s) = 1
        }
    }
    EXPECT_EQ(in, 1);
    EXPECT_EQ(out, 2);
}

TEST(Complex, CRelation) {
    Complexes cs(3, elementary_complex(0));
    LabeledGraph b = theta();
    b.edges[2] = {3, 1, 2, EdgeClass::Broken, {"q"}};
    LabeledGraph s = theta();
    s.edges[2] = {3, 1, 2, EdgeClass::Separated, {"q", "q"}};
    EXPECT_EQ(reduce_broken(single(b), cs), single(s));
}

TEST(Complex, ATwoThree) {
    auto a = build_star_relations(2, 3);
    EXPECT_EQ(a.rank(), 0u);
    EXPECT_EQ(a.dimension(), 1u);
    LabeledGraph swapped = theta();
    std::swap(swapped.edges[0].label, swapped.edges[1].label);
    swapped.sort_edges();
    EXPECT_EQ(a.project(single(swapped)), a.project(single(theta())));
    EXPECT_FALSE(a.is_zero(single(theta())));
}

TEST(Complex, AFourSix) {
    auto a = build_star_relations(4, 6);
    // connected trivalent Jacobi diagrams of degree 2 span a line
    EXPECT_EQ(a.dimension(), 1u);
    for (const auto& r : a.relations()) EXPECT_TRUE(a.is_zero(r));
}

TEST(Complex, XiRows) {
    Complexes zero(3, BasedChainComplex::zero(1));
    EXPECT_TRUE(build_xi_relations(2, 3, zero).empty());
    Complexes cs{elementary_complex(0), BasedChainComplex::zero(1), BasedChainComplex::zero(1)};
    auto rows = build_xi_relations(2, 3, cs);
    // Γ(q,q)_1: ∂_{pq}[Γ(p,q)] − [Γ(∅,∅)]; Γ(p,p)_1: ∂_{pq}[Γ(p,q)] − [Γ(∅,∅)]
    for (const auto& r : rows) {
        EXPECT_EQ(r.size(), 2u);
        for (const auto& [g, c] : r.terms) {
            if (g.edge(1).cls == EdgeClass::Compact) EXPECT_EQ(c, -1);
            else EXPECT_EQ(c, 1);
        }
    }
    EXPECT_EQ(rows.size(), 2u * 8u);
}

TEST(Complex, ProjectionIdempotent) {
    Complexes cs(3, elementary_complex(0));
    auto a = build_star_relations(2, 3, cs, true);
    for (const auto& g : cycle_graphs(2, 3, cs)) {
        auto p = a.project(single(g));
        EXPECT_EQ(a.project(p), p);
    }
}

TEST(Complex, SigmaImagesVanishInH) {
    Rng rng(5);
    Complexes cs{random_acyclic_complex(rng, 6, 3, "a"), random_acyclic_complex(rng, 6, 3, "b"),
                 elementary_complex(1)};
    auto h = build_h_space(2, 3, cs);
    auto sig = sigma_graphs(2, 3, cs);
    for (std::size_t k = 0; k < sig.size(); k += 7)
        EXPECT_TRUE(h.is_zero(total_differential(single(sig[k]), cs)));
}

TEST(Complex, HDegreeCheck) {
    BasedChainComplex c({{"a"}, {"b"}, {"c"}, {"d"}}, {Matrix(1, 1), Matrix(1, 1), Matrix(1, 1)});
    Complexes cs(3, c);
    auto h = build_h_space(2, 3, cs, false);
    LabeledGraph g = theta();
    g.edges[0] = {1, 1, 2, EdgeClass::Separated, {"d", "a"}};
    EXPECT_THROW(h.project(single(g)), InvalidDegree);
}

TEST(Complex, LemmaDgElementary) {
    for (int i = 0; i < 3; ++i) {
        Complexes cs(3, elementary_complex(i));
        EXPECT_TRUE(verify_dg_zero(2, 3, cs).passed) << i;
    }
}

TEST(Complex, LemmaDgRandom) {
    Rng rng(17);
    Complexes cs{random_acyclic_complex(rng, 6, 3, "a"), random_acyclic_complex(rng, 6, 3, "b"),
                 random_acyclic_complex(rng, 6, 3, "c")};
    EXPECT_TRUE(verify_dg_zero(2, 3, cs).passed);
}

TEST(Complex, LemmaDgFailsWithoutXi) {
    Complexes cs(3, elementary_complex(0));
    auto a = build_star_relations(2, 3, cs, false);
    auto h = build_h_space(2, 3, cs, true);
    std::vector<std::pair<GraphVector, GraphVector>> terms;
    for (const auto& g : cycle_graphs(2, 3, cs)) terms.emplace_back(single(g), total_differential(single(g), cs));
    EXPECT_FALSE(tensor_nonzero(a, h, terms).empty());
}
