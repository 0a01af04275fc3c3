// mgk: command line front end.
//
// Exit status: 0 success, 1 failed verification or computation, 2 usage or
// input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "mgk/complex.hpp"
#include "mgk/invariant.hpp"
#include "mgk/morse.hpp"
#include "mgk/random.hpp"
#include "mgk/trace.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgk;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised by verification commands that ran but found a counterexample.
struct Failed {};

struct Globals {
    std::uint64_t seed = 1;
    std::string out;
    std::optional<double> tol_crit, tol_nd, tol_sol, tol_jac, r_dedup, tol_ms;
    std::string argv_text;
};

Globals G;

void write_atomic(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text << std::flush;
        return;
    }
    fs::path p(path);
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw UsageError("cannot write " + tmp.string());
        f << text;
        if (!f.flush()) throw UsageError("cannot write " + tmp.string());
    }
    fs::rename(tmp, p);
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot read " + path);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw UsageError(path + ": " + e.what());
    }
}

void emit(const json& j) { write_atomic(G.out, j.dump(2) + "\n"); }

void emit_lines(const std::vector<json>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.dump() + "\n";
    write_atomic(G.out, s);
}

std::string reproduce() { return G.argv_text; }

morse::MorseSystem load_config(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("config file not found: " + path);
    toml::table t;
    try {
        t = toml::parse_file(path);
    } catch (const toml::parse_error& e) {
        throw mgk::ParseError(path + ": " + std::string(e.description()));
    }
    auto sys = morse::system_from_toml(t);
    auto& tol = sys.solver.tol;
    if (G.tol_crit) tol.crit = *G.tol_crit;
    if (G.tol_nd) tol.nd = *G.tol_nd;
    if (G.tol_sol) tol.sol = *G.tol_sol;
    if (G.tol_jac) tol.jac = *G.tol_jac;
    if (G.r_dedup) tol.dedup = *G.r_dedup;
    if (G.tol_ms) tol.ms = *G.tol_ms;
    sys.prepare();
    return sys;
}

// A single complex is used for every label; an array gives one per label.
Complexes load_complexes(const std::string& path, int m) {
    auto j = read_json(path);
    Complexes cs;
    if (j.is_array()) {
        for (const auto& c : j) cs.push_back(complex_from_json(c));
        if (static_cast<int>(cs.size()) != m)
            throw UsageError(path + ": expected " + std::to_string(m) + " complexes, found " +
                             std::to_string(cs.size()));
    } else {
        cs.assign(m, complex_from_json(j));
    }
    return cs;
}

Complexes random_complexes(Rng& rng, int m, int max_generators) {
    Complexes cs;
    for (int i = 0; i < m; ++i)
        cs.push_back(random_acyclic_complex(rng, max_generators, 3, std::string(1, char('a' + i))));
    return cs;
}

std::vector<GradedEndomorphism> random_propagators(Rng& rng, const Complexes& cs) {
    std::vector<GradedEndomorphism> g;
    for (const auto& c : cs) g.push_back(random_propagator(rng, c));
    return g;
}

std::vector<GraphVector> read_graph_lines(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<GraphVector> out;
    std::string line;
    int k = 0;
    while (std::getline(in, line)) {
        ++k;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = json::parse(line);
            GraphVector v;
            if (j.is_array()) {
                for (const auto& t : j) v.add(graph_from_json(t.at("graph")), Rational(t.at("coef").get<std::string>()));
            } else {
                v.add(graph_from_json(j), 1);
            }
            out.push_back(std::move(v));
        } catch (const json::exception& e) {
            throw UsageError(path + ":" + std::to_string(k) + ": " + e.what());
        }
    }
    return out;
}

std::pair<int, int> parse_space(const std::string& s) {
    if (s == "a23") return {2, 3};
    if (s == "a46") return {4, 6};
    throw UsageError("unknown space '" + s + "' (expected a23 or a46)");
}

json graphs_json(const std::vector<LabeledGraph>& gs) {
    auto a = json::array();
    for (const auto& g : gs) a.push_back(to_json(g));
    return a;
}

// ---- commands ----

void cmd_graphs_enumerate(int n, int m, bool all) {
    std::vector<json> rows;
    for (const auto& g : enumerate_graphs(n, m, !all)) rows.push_back(to_json(g));
    emit_lines(rows);
}

void cmd_graphs_labelings(const std::string& in) {
    std::vector<json> rows;
    for (const auto& v : read_graph_lines(in))
        for (const auto& [g, c] : v.terms)
            for (const auto& h : enumerate_labelings(g)) rows.push_back(to_json(h));
    emit_lines(rows);
}

void cmd_gc_apply(const std::string& op, const std::string& in, const std::string& complexes, int m) {
    Complexes cs;
    if (!complexes.empty()) cs = load_complexes(complexes, m);
    std::vector<json> rows;
    for (const auto& v : read_graph_lines(in)) {
        GraphVector r = op == "d" ? differential_d(v) : op == "dprime" ? differential_dprime(v, cs)
                                                                       : differential_dsecond(v, cs);
        rows.push_back(to_json(r));
    }
    emit_lines(rows);
}

void cmd_gc_verify_d2(int n, int m, int samples) {
    auto gs = enumerate_graphs(n, m);
    Rng rng(G.seed);
    std::vector<LabeledGraph> bad;
    std::size_t checked = 0;
    auto check = [&](const LabeledGraph& g) {
        ++checked;
        if (!differential_d(differential_d(single(g))).empty()) bad.push_back(g);
    };
    if (samples <= 0 || static_cast<std::size_t>(samples) >= gs.size()) {
        for (const auto& g : gs) check(g);
    } else {
        std::uniform_int_distribution<std::size_t> pick(0, gs.size() - 1);
        for (int i = 0; i < samples; ++i) check(gs[pick(rng)]);
    }
    json r{{"passed", bad.empty()},
           {"n", n},
           {"m", m},
           {"seed", G.seed},
           {"graphs", gs.size()},
           {"checked", checked},
           {"counterexamples", graphs_json(bad)}};
    if (!bad.empty()) r["reproduce"] = reproduce();
    emit(r);
    if (!bad.empty()) throw Failed{};
}

void cmd_gc_quotient(const std::string& space) {
    auto [n, m] = parse_space(space);
    auto a = build_star_relations(n, m);
    std::vector<json> rows;
    for (const auto& g : a.reduced_basis()) rows.push_back(to_json(g));
    emit_lines(rows);
}

void cmd_prop_solve(const std::string& path) {
    auto c = complex_from_json(read_json(path));
    try {
        emit(to_json(solve_propagator(c)));
    } catch (const NoSolution& e) {
        emit({{"error", e.what()}, {"homology", e.homology}, {"reproduce", reproduce()}});
        throw Failed{};
    }
}

void cmd_prop_check(const std::string& complex, const std::string& prop) {
    auto c = complex_from_json(read_json(complex));
    auto g = endomorphism_from_json(read_json(prop), c);
    bool ok = is_propagator(g, c);
    json r{{"passed", ok}};
    if (!ok) {
        auto d = GradedEndomorphism::boundary(c);
        r["defect"] = to_json(compose(d, g) + compose(g, d) - GradedEndomorphism::identity(c));
        r["reproduce"] = reproduce();
    }
    emit(r);
    if (!ok) throw Failed{};
}

void cmd_verify(const std::string& lemma, int n, int m, const std::string& complex, int samples) {
    Rng rng(G.seed);
    Complexes cs = complex.empty() ? random_complexes(rng, m, 6) : load_complexes(complex, m);
    json r{{"lemma", lemma}, {"n", n}, {"m", m}, {"seed", G.seed}};
    json cex = json::array();
    if (lemma == "lemma-2-1") {
        auto rep = verify_dg_zero(n, m, cs);
        for (const auto& g : rep.counterexamples) cex.push_back(to_json(g));
    } else if (lemma == "lemma-2-2") {
        auto a = build_star_relations(n, m);
        auto rows = build_xi_relations(n, m, cs);
        for (int s = 0; s < samples; ++s) {
            TraceAssignment t{cs, random_propagators(rng, cs)};
            for (std::size_t k = 0; k < rows.size(); ++k)
                if (!a.is_zero(trace(t, rows[k]))) cex.push_back({{"sample", s}, {"row", to_json(rows[k])}});
        }
        r["rows"] = rows.size();
    } else if (lemma == "lemma-2-3") {
        for (int s = 0; s < samples; ++s) {
            auto g1 = random_propagators(rng, cs), g2 = random_propagators(rng, cs);
            auto rep = verify_tr_closedness(n, m, cs, g1, g2, rng, 1);
            for (const auto& g : rep.cycle_counterexamples) cex.push_back({{"sample", s}, {"cycle", to_json(g)}});
            for (const auto& c : rep.pairing_counterexamples) {
                json counts = json::array();
                for (const auto& [g, v] : c) counts.push_back({{"graph", to_json(g)}, {"count", to_string(v)}});
                cex.push_back({{"sample", s}, {"counts", counts}});
            }
        }
    } else {
        throw UsageError("unknown lemma '" + lemma + "'");
    }
    r["complexes"] = json::array();
    for (const auto& c : cs) r["complexes"].push_back(to_json(c));
    r["passed"] = cex.empty();
    r["counterexamples"] = cex;
    if (!cex.empty()) r["reproduce"] = reproduce();
    emit(r);
    if (!cex.empty()) throw Failed{};
}

void cmd_flow_count(const std::string& config, const std::string& report) {
    auto sys = load_config(config);
    auto c = morse::count_theta_flows(sys);
    json sols = json::array();
    for (const auto& s : c.solutions) sols.push_back(morse::to_json(s));
    json r{{"count", c.count}, {"solutions", sols}, {"seeds", sys.solver.seeds},
           {"grid_density", sys.solver.grid_density}};
    if (!report.empty()) G.out = report;
    emit(r);
}

void cmd_flow_critical(const std::string& config) {
    auto sys = load_config(config);
    json r = json::array();
    for (std::size_t i = 0; i < sys.size(); ++i) {
        json cps = json::array();
        for (const auto& c : sys.functions[i].critical) cps.push_back(morse::to_json(c));
        r.push_back({{"function", sys.functions[i].name}, {"critical_points", cps}});
    }
    emit(r);
}

void cmd_flow_complex(const std::string& config, int index) {
    auto sys = load_config(config);
    if (index < 1 || index > static_cast<int>(sys.size())) throw UsageError("--function out of range");
    emit(to_json(morse::morse_complex(sys, index - 1)));
}

void cmd_invariant_z(int k, const std::string& config) {
    if (k != 1) throw UsageError("the geometric pipeline is available for k = 1 only; use 'invariant assemble'");
    emit(z23_pipeline(load_config(config)).to_json());
}

void cmd_invariant_assemble(const std::string& counts_path, const std::string& complexes, int k) {
    int n = 2 * k, m = 3 * k;
    auto j = read_json(counts_path);
    const json& arr = j.is_object() ? j.at("counts") : j;
    CountsVector counts;
    for (const auto& e : arr) counts.add(graph_from_json(e.at("graph")), e.at("count").get<long long>());
    Complexes cs;
    if (!complexes.empty()) cs = load_complexes(complexes, m);
    std::vector<GradedEndomorphism> g;
    for (const auto& c : cs) g.push_back(solve_propagator(c));
    auto a = build_star_relations(n, m);
    GraphVector cls;
    try {
        cls = assemble_z(counts, {cs, g}, a, n, m);
    } catch (const InvalidCounts& e) {
        emit({{"error", e.what()}, {"violated", e.rows}, {"reproduce", reproduce()}});
        throw Failed{};
    }
    json coords = json::array();
    for (const auto& x : class_coordinates(a, cls)) coords.push_back(to_string(x));
    json pg = json::object();
    for (const auto& [h, v] : counts.counts) pg[Z23Report::graph_key(h)] = v;
    emit({{"class_coords", coords}, {"basis", graphs_json(a.reduced_basis())}, {"per_graph", pg}, {"anomaly", nullptr}});
}

void cmd_invariant_labelings(const std::string& config) {
    auto sys = load_config(config);
    auto r = z23_pipeline(sys);
    auto checks = check_labelings(sys, r, sys.solver.seeds.front());
    json rows = json::array();
    bool ok = true;
    for (const auto& c : checks) {
        ok = ok && c.ok();
        rows.push_back({{"graph", Z23Report::graph_key(c.graph)},
                        {"swapped", c.swapped},
                        {"expected", c.expected},
                        {"geometric", c.geometric}});
    }
    json out{{"passed", ok}, {"geometric_count", r.geometric.count}, {"labelings", rows}};
    if (!ok) out["reproduce"] = reproduce();
    emit(out);
    if (!ok) throw Failed{};
}

void cmd_invariant_chamber(const std::string& from, const std::string& to, double step) {
    auto rep = chamber_check(load_config(from), load_config(to), step);
    auto j = rep.to_json();
    bool ok = rep.bifurcation_free() && rep.same_class;
    j["passed"] = ok;
    if (!ok) j["reproduce"] = reproduce();
    emit(j);
    if (!ok) throw Failed{};
}

int run(int argc, char** argv) {
    for (int i = 0; i < argc; ++i) G.argv_text += (i ? " " : "") + std::string(argv[i]);

    CLI::App app{"Graph complexes, propagators and Morse flow counts"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", G.seed, "seed for all sampling");
    app.add_option("--out", G.out, "output file (default stdout)");
    app.add_option("--tol-crit", G.tol_crit);
    app.add_option("--tol-nd", G.tol_nd);
    app.add_option("--tol-sol", G.tol_sol);
    app.add_option("--tol-jac", G.tol_jac);
    app.add_option("--r-dedup", G.r_dedup);
    app.add_option("--tol-ms", G.tol_ms);

    int n = 2, m = 3, k = 1, samples = 0, index = 1;
    bool all = false;
    std::string in, complexes, config, report, space, counts, to, prop;
    double step = 1e-3;
    std::function<void()> action;

    auto graphs = app.add_subcommand("graphs", "enumerate graphs")->require_subcommand(1);
    auto ge = graphs->add_subcommand("enumerate", "admissible graphs, one JSON object per line");
    ge->add_option("--n", n)->required();
    ge->add_option("--m", m)->required();
    ge->add_flag("--trivalent", "trivalent only (default)");
    ge->add_flag("--all", all, "every valence >= 3");
    ge->callback([&] { action = [&] { cmd_graphs_enumerate(n, m, all); }; });
    auto gl = graphs->add_subcommand("labelings", "all labellings of the input graphs, with signs");
    gl->add_option("--in", in)->required();
    gl->callback([&] { action = [&] { cmd_graphs_labelings(in); }; });

    auto gc = app.add_subcommand("gc", "graph complex operations")->require_subcommand(1);
    for (std::string op : {"d", "dprime", "dsecond"}) {
        auto s = gc->add_subcommand(op, "apply to every line of --in");
        s->add_option("--in", in)->required();
        s->add_option("--complexes", complexes, "Morse complexes (JSON)");
        s->add_option("--m", m);
        s->callback([&, op] { action = [&, op] { cmd_gc_apply(op, in, complexes, m); }; });
    }
    auto d2 = gc->add_subcommand("verify-d2", "check d∘d = 0");
    d2->add_option("--n", n)->required();
    d2->add_option("--m", m)->required();
    d2->add_option("--samples", samples, "0 checks every graph");
    d2->callback([&] { action = [&] { cmd_gc_verify_d2(n, m, samples); }; });
    auto gq = gc->add_subcommand("quotient", "reduced basis of a graph space");
    gq->add_option("--space", space)->required();
    gq->callback([&] { action = [&] { cmd_gc_quotient(space); }; });

    auto pr = app.add_subcommand("prop", "combinatorial propagators")->require_subcommand(1);
    auto ps = pr->add_subcommand("solve", "solve ∂g + g∂ = 1");
    ps->add_option("--complex", complexes)->required();
    ps->callback([&] { action = [&] { cmd_prop_solve(complexes); }; });
    auto pc = pr->add_subcommand("check", "check a propagator");
    pc->add_option("--complex", complexes)->required();
    pc->add_option("--g", prop)->required();
    pc->callback([&] { action = [&] { cmd_prop_check(complexes, prop); }; });

    auto ve = app.add_subcommand("verify", "machine checks of the algebraic lemmas")->require_subcommand(1);
    const std::pair<std::string, std::string> lemmas[] = {
        {"lemma-2-1", "(d+d') of the universal cycle vanishes in A/xi (x) H"},
        {"lemma-2-2", "xi relations have zero trace"},
        {"lemma-2-3", "pairing with counts is independent of the propagators"}};
    for (const auto& entry : lemmas) {
        std::string lemma = entry.first;
        auto s = ve->add_subcommand(lemma, entry.second);
        s->add_option("--n", n);
        s->add_option("--m", m);
        s->add_option("--complex", complexes, "complex JSON (default: random acyclic from --seed)");
        s->add_option("--samples", samples, "propagator samples")->default_val(20);
        s->callback([&, lemma] { action = [&, lemma] { cmd_verify(lemma, n, m, complexes, samples); }; });
    }

    auto fl = app.add_subcommand("flow", "gradient flows on S^3")->require_subcommand(1);
    auto fc = fl->add_subcommand("count-theta", "signed count of Θ flow graphs");
    fc->add_option("--config", config)->required();
    fc->add_option("--report", report);
    fc->callback([&] { action = [&] { cmd_flow_count(config, report); }; });
    auto fp = fl->add_subcommand("critical", "critical points of every function");
    fp->add_option("--config", config)->required();
    fp->callback([&] { action = [&] { cmd_flow_critical(config); }; });
    auto fm = fl->add_subcommand("morse-complex", "Morse complex of one function");
    fm->add_option("--config", config)->required();
    fm->add_option("--function", index, "1-based index");
    fm->callback([&] { action = [&] { cmd_flow_complex(config, index); }; });

    auto inv = app.add_subcommand("invariant", "principal term Z")->require_subcommand(1);
    auto iz = inv->add_subcommand("z", "Z_{2,3} from three perfect Morse functions");
    iz->add_option("--k", k)->default_val(1);
    iz->add_option("--config", config)->required();
    iz->callback([&] { action = [&] { cmd_invariant_z(k, config); }; });
    auto ia = inv->add_subcommand("assemble", "Z from supplied counts");
    ia->add_option("--counts", counts)->required();
    ia->add_option("--complexes", complexes);
    ia->add_option("--k", k)->default_val(1);
    ia->callback([&] { action = [&] { cmd_invariant_assemble(counts, complexes, k); }; });
    auto il = inv->add_subcommand("labelings", "geometric count of every labelling of Θ");
    il->add_option("--config", config)->required();
    il->callback([&] { action = [&] { cmd_invariant_labelings(config); }; });
    auto ic = inv->add_subcommand("chamber", "follow the linear path between two configs");
    ic->add_option("--config", config)->required();
    ic->add_option("--to", to)->required();
    ic->add_option("--step", step)->default_val(1e-3);
    ic->callback([&] { action = [&] { cmd_invariant_chamber(config, to, step); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        action();
    } catch (const Failed&) {
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "mgk: " << e.what() << "\n";
        return 2;
    } catch (const mgk::ParseError& e) {
        std::cerr << "mgk: " << e.what() << "\n";
        return 2;
    } catch (const mgk::MalformedGraph& e) {
        std::cerr << "mgk: " << e.what() << "\n";
        return 2;
    } catch (const mgk::DimensionError& e) {
        std::cerr << "mgk: " << e.what() << "\n";
        return 2;
    } catch (const mgk::InconsistentInput& e) {
        std::cerr << "mgk: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "mgk: bad JSON input: " << e.what() << "\n";
        return 2;
    } catch (const mgk::Error& e) {
        std::cerr << "mgk: " << e.what() << "\n";
        json r{{"error", e.what()}, {"reproduce", reproduce()}};
        if (auto* ic = dynamic_cast<const InvalidCounts*>(&e)) r["violated"] = ic->rows;
        emit(r);
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
