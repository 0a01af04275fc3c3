// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "mgk/complex.hpp"
#include "mgk/invariant.hpp"
#include "mgk/morse.hpp"
#include "mgk/random.hpp"
#include "mgk/trace.hpp"

using namespace mgk;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (limit_s > 0 && secs > limit_s) {
        r.ok = false;
        r.detail += " (over the " + std::to_string(static_cast<int>(limit_s)) + " s budget)";
    }
    if (!r.ok) ++failures;
    std::printf("%s %2d %-28s %8.1fs  %s\n", r.ok ? "PASS" : "FAIL", id, name.c_str(), secs, r.detail.c_str());
    std::fflush(stdout);
}

LabeledGraph theta() {
    return LabeledGraph{2,
                        {{1, 1, 2, EdgeClass::Compact, {}}, {2, 1, 2, EdgeClass::Compact, {}},
                         {3, 1, 2, EdgeClass::Compact, {}}},
                        1};
}

Complexes random_triple(Rng& rng, int max_generators, bool nonzero) {
    Complexes cs;
    for (char p : {'a', 'b', 'c'}) {
        auto c = random_acyclic_complex(rng, max_generators, 3, std::string(1, p));
        while (nonzero && c.total_size() == 0) c = random_acyclic_complex(rng, max_generators, 3, std::string(1, p));
        cs.push_back(c);
    }
    return cs;
}

std::vector<GradedEndomorphism> propagators(Rng& rng, const Complexes& cs) {
    std::vector<GradedEndomorphism> g;
    for (const auto& c : cs) g.push_back(random_propagator(rng, c));
    return g;
}

fs::path config(const std::string& name) { return fs::path(MGK_SOURCE_DIR) / "configs" / name; }

std::string str(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
}

Outcome d_squared() {
    std::size_t n23 = 0, n46 = 0;
    for (const auto& h : enumerate_labelings(theta())) {
        if (!differential_d(differential_d(single(h))).empty()) return {false, "d^2 != 0 on a (2,3) labelling"};
        ++n23;
    }
    auto gs = enumerate_graphs(4, 6);
    Rng rng(1);
    std::uniform_int_distribution<std::size_t> pick(0, gs.size() - 1);
    for (int i = 0; i < 1000; ++i) {
        if (!differential_d(differential_d(single(gs[pick(rng)]))).empty())
            return {false, "d^2 != 0 on a (4,6) sample"};
        ++n46;
    }
    return {true, std::to_string(n23) + " labellings of G(2,3), " + std::to_string(n46) + " samples of G(4,6)"};
}

Outcome lemma_dg() {
    int runs = 0;
    for (int i = 0; i < 3; ++i) {
        if (!verify_dg_zero(2, 3, Complexes(3, elementary_complex(i))).passed)
            return {false, "elementary complexes in degree " + std::to_string(i)};
        ++runs;
    }
    if (!verify_dg_zero(2, 3, {elementary_complex(0, "p", "q", 3), elementary_complex(1, "r", "s", 3),
                              elementary_complex(2, "u", "v", 3)})
             .passed)
        return {false, "mixed elementary complexes"};
    ++runs;
    Rng rng(2);
    auto cs = random_triple(rng, 6, true);
    if (!verify_dg_zero(2, 3, cs).passed) return {false, "random acyclic complexes"};
    ++runs;
    return {true, std::to_string(runs) + " complex triples"};
}

Outcome lemma_xi() {
    Rng rng(3);
    auto cs = random_triple(rng, 6, true);
    auto a = build_star_relations(2, 3);
    auto rows = build_xi_relations(2, 3, cs);
    for (int s = 0; s < 20; ++s) {
        TraceAssignment t{cs, propagators(rng, cs)};
        for (const auto& r : rows)
            if (!a.is_zero(trace(t, r))) return {false, "nonzero trace in sample " + std::to_string(s)};
    }
    return {true, std::to_string(rows.size()) + " rows x 20 propagator choices"};
}

Outcome lemma_pairing() {
    Rng rng(4);
    auto cs = random_triple(rng, 6, true);
    auto a = build_star_relations(2, 3);
    auto k = build_count_constraints(2, 3, cs);
    for (int s = 0; s < 20; ++s) {
        auto counts = sample_counts(k, rng);
        auto z1 = pair_with_counts({cs, propagators(rng, cs)}, a, counts);
        auto z2 = pair_with_counts({cs, propagators(rng, cs)}, a, counts);
        if (!(z1 == z2)) return {false, "classes differ in sample " + std::to_string(s)};
    }
    return {true, "20 samples, " + std::to_string(k.variables.size()) + " count variables"};
}

Outcome propagator_solver() {
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        auto c = random_acyclic_complex(rng, 20);
        if (!is_propagator(solve_propagator(c), c)) return {false, "acyclic case " + std::to_string(i)};
    }
    for (int i = 0; i < 100; ++i) {
        auto c = random_complex(rng, detail::uniform(rng, 0, 8), detail::uniform(rng, 1, 4));
        try {
            solve_propagator(c);
            return {false, "no certificate for case " + std::to_string(i)};
        } catch (const NoSolution& e) {
            if (e.homology != c.homology()) return {false, "wrong certificate for case " + std::to_string(i)};
        }
    }
    return {true, "100 acyclic, 100 non-acyclic"};
}

Outcome handle_slides() {
    Rng rng(6);
    int done = 0, hgh = 0;
    while (done < 100) {
        auto c = random_acyclic_complex(rng, 14);
        auto h = random_rank_one(rng, c);
        if (!h) continue;
        ++done;
        auto c2 = handle_slide_boundary(c, *h);
        auto d = GradedEndomorphism::boundary(c);
        auto d2 = GradedEndomorphism::boundary(c2);
        auto one = GradedEndomorphism::identity(c);
        if (!compose(d2, d2).is_zero()) return {false, "d'd' != 0"};
        if (!(compose(d2, one - *h) == compose(one - *h, d))) return {false, "d'(1-h) != (1-h)d"};
        auto g = solve_propagator(c);
        auto g2 = transport_propagator(g, *h);
        if (!is_propagator(g2, c2)) return {false, "g' is not a propagator"};
        if (compose(*h, compose(g, *h)).is_zero()) {
            ++hgh;
            if (!(g2 - g == compose(g, *h) - compose(*h, g))) return {false, "g' - g != gh - hg"};
        }
    }
    return {true, "100 slides, " + std::to_string(hgh) + " with hgh = 0"};
}

Outcome flatness() {
    using morse::sigma_epsilon;
    double u = 1e-4, h = 5e-5;
    auto s = [](double v) { return sigma_epsilon(v, 1); };
    double d1 = (s(u + h) - s(u - h)) / (2 * h);
    double d2 = (s(u + h) - 2 * s(u) + s(u - h)) / (h * h);
    double d3 = (s(u + 2 * h) - 2 * s(u + h) + 2 * s(u - h) - s(u - 2 * h)) / (2 * h * h * h);
    double series = std::abs(morse::tau_series(0.25, 1, 30) - morse::tau_epsilon(0.25, 1));
    bool ok = std::abs(s(u)) < 1e-6 && std::abs(d1) < 1e-4 && std::abs(d2) < 1e-4 && std::abs(d3) < 1e-4 &&
              series < 1e-10;
    return {ok, "sigma " + str(s(u)) + ", derivatives " + str(d1) + " " + str(d2) + " " + str(d3) +
                    ", series error " + str(series)};
}

Outcome theta_reproducible() {
    auto sys = morse::load_system(config("theta.toml"));
    auto base = morse::count_theta_flows(sys);  // throws Unresolved if the two seed grids disagree
    auto fine = sys;
    fine.integrator.rtol /= 2;
    fine.integrator.atol /= 2;
    fine.solver.tol.sol /= 2;
    auto again = morse::count_theta_flows(fine);
    double worst = 0;
    for (const auto& s : base.solutions) worst = std::max(worst, s.residual);
    for (const auto& s : again.solutions) worst = std::max(worst, s.residual);
    bool same = again.count == base.count &&
                morse::ThetaSolver(fine, morse::theta_graph()).agree(base.solutions, again.solutions);
    bool ok = same && worst <= 1e-9 && !base.solutions.empty();
    return {ok, "count " + std::to_string(base.count) + " from " + std::to_string(base.solutions.size()) +
                    " solution(s); halved tolerances give " + std::to_string(again.count) + "; max residual " +
                    str(worst)};
}

Outcome sign_covariance() {
    auto sys = morse::load_system(config("theta.toml"));
    auto r = z23_pipeline(sys);
    for (std::size_t i = 0; i < r.labelings.size(); ++i)
        if (r.labeling_counts[i] != r.labelings[i].sign * r.geometric.count) return {false, "report sign mismatch"};
    auto checks = check_labelings(sys, r, sys.solver.seeds.front());
    int bad = 0;
    std::string first;
    for (const auto& c : checks)
        if (!c.ok()) {
            if (!bad++)
                first = Z23Report::graph_key(c.graph) + (c.swapped ? " (swapped)" : "") + " expected " +
                        std::to_string(c.expected) + " got " + std::to_string(c.geometric);
        }
    if (bad) return {false, std::to_string(bad) + " mismatches, first " + first};
    return {true, std::to_string(r.labelings.size()) + " labellings, " + std::to_string(checks.size()) +
                      " geometric realisations"};
}

Outcome chamber() {
    auto a = morse::load_system(config("theta.toml"));
    auto b = morse::load_system(config("theta_nearby.toml"));
    auto rep = chamber_check(a, b, 1e-3);
    std::string d = std::to_string(rep.steps) + " steps, counts " + std::to_string(rep.start.geometric.count) +
                    " -> " + std::to_string(rep.end.geometric.count);
    if (!rep.bifurcation_free())
        d += ", event at s = " + str(rep.events.front().s) + ": " + rep.events.front().kind;
    return {rep.bifurcation_free() && rep.same_class, d};
}

}  // namespace

int main() {
    criterion(1, "d^2 = 0", 60, d_squared);
    criterion(2, "<(1 x (d+d'))gamma> = 0", 300, lemma_dg);
    criterion(3, "trace of xi rows", 0, lemma_xi);
    criterion(4, "pairing independence", 0, lemma_pairing);
    criterion(5, "propagator solver", 0, propagator_solver);
    criterion(6, "handle-slide algebra", 0, handle_slides);
    criterion(7, "sigma flatness", 0, flatness);
    criterion(8, "theta count reproducible", 600, theta_reproducible);
    criterion(9, "sign covariance", 0, sign_covariance);
    criterion(10, "chamber invariance", 0, chamber);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
