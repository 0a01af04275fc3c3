#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mgk/graph.hpp"
#include "mgk/morse/flow.hpp"

namespace mgk::morse {

struct FlowSolution {
    Point x, y;  // black vertices 1 and 2
    std::array<double, 3> times{};
    int sign = 0;
    double residual = 0;
    double jacobian_det = 0;
};

struct GraphCount {
    int count = 0;
    std::vector<FlowSolution> solutions;
};

inline int thread_count(const SolverConfig& cfg) {
    if (cfg.threads > 0) return cfg.threads;
    if (const char* e = std::getenv("MGK_THREADS")) {
        int n = std::atoi(e);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Flow moduli of a graph with two black vertices and three compact edges:
// x_1, x_2 in S^3 and t_1, t_2, t_3 > 0 with Phi^{t_k}_{f_k}(x_src) = x_dst
// for the edge labelled k. Unknowns are u = (x_1, x_2, s_1, s_2, s_3) with
// t_k = e^{s_k}; the defect of edge k is D_k = x_dst - Phi^{t_k}_{f_k}(x_src)
// in the chart of x_dst, stacked in label order. The sign of a solution is
// sign det dD/du; chart changes are orientation preserving and t -> log t is
// increasing, so this does not depend on the charts used.
class ThetaSolver {
public:
    ThetaSolver(const MorseSystem& sys, const LabeledGraph& g) : sys_(sys) {
        if (g.n != 2 || g.edges.size() != 3) throw MalformedGraph("flow counting needs two vertices and three edges");
        if (sys.size() < 3) throw InconsistentInput("flow counting needs three functions");
        for (const auto& e : g.edges) {
            if (e.cls != EdgeClass::Compact) throw MalformedGraph("flow counting needs compact edges");
            if (e.src == e.dst) throw MalformedGraph("self-loop");
            if (e.label < 1 || e.label > 3) throw MalformedGraph("edge labels must be 1..3");
            edges_[e.label - 1] = {e.src - 1, e.dst - 1};
        }
        // Functions whose gradients are everywhere parallel give a degenerate system.
        auto probe = seed_grid(2, 0);
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                bool parallel = true;
                for (const auto& p : probe) {
                    Vec3 u = sys.function(a).gradient(p), v = sys.function(b).gradient(p);
                    if (u.cross(v).squaredNorm() > 1e-18 * u.squaredNorm() * v.squaredNorm()) {
                        parallel = false;
                        break;
                    }
                }
                if (parallel)
                    throw NonGeneric("functions " + std::to_string(a + 1) + " and " + std::to_string(b + 1) +
                                     " have parallel gradients");
            }
    }

    // Solutions found from one seed grid, deduplicated and sorted.
    std::vector<FlowSolution> solve_grid(std::uint64_t seed) const {
        auto seeds = seed_grid(sys_.solver.grid_density, seed);
        int nt = thread_count(sys_.solver);
        std::vector<std::vector<Candidate>> parts(nt);
        std::vector<std::future<void>> jobs;
        for (int w = 0; w < nt; ++w)
            jobs.push_back(std::async(std::launch::async, [&, w] {
                for (std::size_t i = w; i < seeds.size(); i += nt)
                    for (int root : {0, 1}) screen(seeds[i], root, 2 * i + root, parts[w]);
            }));
        for (auto& j : jobs) j.get();
        std::vector<Candidate> cands;
        for (auto& p : parts) cands.insert(cands.end(), p.begin(), p.end());
        std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
            return a.defect != b.defect ? a.defect < b.defect : a.order < b.order;
        });
        std::vector<FlowSolution> sols;
        for (const auto& c : cands) {
            bool near = false;
            for (const auto& s : sols)
                near = near || (distance(s.x, c.x) < 0.02 && distance(s.y, c.y) < 0.02);
            if (near) continue;
            if (auto s = newton(c)) {
                bool dup = false;
                for (const auto& t : sols) dup = dup || same(t, *s);
                if (!dup) sols.push_back(*s);
            }
        }
        sort_solutions(sols);
        return sols;
    }

    bool same(const FlowSolution& a, const FlowSolution& b) const {
        double r = sys_.solver.tol.dedup;
        if (distance(a.x, b.x) > r || distance(a.y, b.y) > r) return false;
        for (int k = 0; k < 3; ++k)
            if (std::abs(a.times[k] - b.times[k]) > r * std::max(1.0, a.times[k])) return false;
        return true;
    }

    static void sort_solutions(std::vector<FlowSolution>& s) {
        std::sort(s.begin(), s.end(), [](const FlowSolution& a, const FlowSolution& b) {
            Vec4 A = to_ambient(a.x), B = to_ambient(b.x);
            for (int i = 0; i < 4; ++i)
                if (A(i) != B(i)) return A(i) < B(i);
            return a.times < b.times;
        });
    }

    // Runs every configured seed grid; they must agree.
    GraphCount count() const {
        std::vector<std::vector<FlowSolution>> runs;
        for (auto seed : sys_.solver.seeds) runs.push_back(solve_grid(seed));
        for (std::size_t r = 1; r < runs.size(); ++r)
            if (!agree(runs[0], runs[r]))
                throw Unresolved("seed grids " + std::to_string(sys_.solver.seeds[0]) + " and " +
                                 std::to_string(sys_.solver.seeds[r]) + " found " +
                                 std::to_string(runs[0].size()) + " and " + std::to_string(runs[r].size()) +
                                 " solutions");
        GraphCount out;
        out.solutions = runs.empty() ? std::vector<FlowSolution>{} : runs[0];
        for (const auto& s : out.solutions) out.count += s.sign;
        return out;
    }

    bool agree(const std::vector<FlowSolution>& a, const std::vector<FlowSolution>& b) const {
        if (a.size() != b.size()) return false;
        for (const auto& s : a) {
            bool hit = false;
            for (const auto& t : b) hit = hit || (same(s, t) && s.sign == t.sign);
            if (!hit) return false;
        }
        return true;
    }

    // Defects and Jacobian at (x1, x2, s).
    struct Eval {
        Eigen::Matrix<double, 9, 1> defect;
        Eigen::Matrix<double, 9, 9> jac;
        double residual = 0;  // max ambient distance between ends
    };

    Eval evaluate(const std::array<Point, 2>& x, const std::array<double, 3>& s, bool with_jac = true,
                  const IntegratorConfig* cfg = nullptr) const {
        Eval ev;
        ev.jac.setZero();
        for (int k = 0; k < 3; ++k) {
            auto [src, dst] = edges_[k];
            FlowIntegrator fi(sys_.function(k), cfg ? *cfg : sys_.integrator);
            double t = std::exp(s[k]);
            FlowResult r = with_jac ? fi.flow_with_jacobian(x[src], t) : FlowResult{fi.flow(x[src], t), t};
            int ch = x[dst].chart;
            Point end = in_chart(r.end, ch);
            ev.defect.segment<3>(3 * k) = x[dst].x - end.x;
            ev.residual = std::max(ev.residual, distance(x[dst], r.end));
            if (!with_jac) continue;
            Mat3 c = chart_change(r.end, ch);
            ev.jac.block<3, 3>(3 * k, 3 * dst) += Mat3::Identity();
            ev.jac.block<3, 3>(3 * k, 3 * src) -= c * r.jacobian;
            ev.jac.block<3, 1>(3 * k, 6 + k) = -t * (c * flow_field(sys_.function(k), r.end));
        }
        return ev;
    }

    std::optional<FlowSolution> refine(std::array<Point, 2> x, std::array<double, 3> s) const { return newton_from(x, s); }

private:
    struct Candidate {
        Point x, y;
        std::array<double, 3> t{};
        double defect = 0;
        std::size_t order = 0;
    };

    struct Sample {
        double t;
        Vec4 X;
    };

    // Curve of edge k starting from a guess for vertex `root`, flowing forward
    // along edges that leave it and backward along the others. Fixed classical
    // Runge-Kutta steps; accuracy only needs to beat the screening radius.
    std::vector<Sample> curve(int k, const Point& start, int root) const {
        const auto& f = sys_.function(k);
        double dir = edges_[k].first == root ? 1 : -1, h = sys_.solver.screen_step;
        int n = static_cast<int>(std::ceil(sys_.solver.screen_t / h));
        std::vector<Sample> out;
        out.reserve(n + 1);
        Point p = start;
        auto field = [&](const Vec3& x) { return Vec3(dir * flow_field(f, Point{p.chart, x})); };
        out.push_back({0, to_ambient(p)});
        for (int i = 1; i <= n; ++i) {
            Vec3 k1 = field(p.x), k2 = field(p.x + h / 2 * k1), k3 = field(p.x + h / 2 * k2),
                 k4 = field(p.x + h * k3);
            p.x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            if (!p.x.allFinite()) throw IntegrationFailure("screening curve diverged");
            if (p.x.norm() > sys_.integrator.switch_radius) p = other_chart(p);
            out.push_back({i * h, to_ambient(p)});
        }
        return out;
    }

    void screen(const Point& seed, int root, std::size_t tag, std::vector<Candidate>& out) const {
        std::array<std::vector<Sample>, 3> c;
        try {
            for (int k = 0; k < 3; ++k) c[k] = curve(k, seed, root);
        } catch (const IntegrationFailure&) {
            return;
        }
        // Every curve passes through the seed at t = 0. Matches against the
        // first sample after it are that trivial meeting, not a local minimum.
        const double tmin = sys_.solver.screen_step / 2, rad = sys_.solver.screen_radius;
        auto nearest = [&](const std::vector<Sample>& cv, const Vec4& X, double& best) {
            std::size_t bi = 0;
            best = 1e300;
            for (std::size_t j = 0; j < cv.size(); ++j) {
                if (cv[j].t < tmin) continue;
                double d = (cv[j].X - X).squaredNorm();
                if (d < best) best = d, bi = j;
            }
            best = std::sqrt(best);
            return bi;
        };
        std::vector<double> D(c[0].size(), 1e300);
        std::vector<std::array<std::size_t, 2>> J(c[0].size());
        for (std::size_t i = 0; i < c[0].size(); ++i) {
            if (c[0][i].t < tmin) continue;
            double d1, d2;
            J[i][0] = nearest(c[1], c[0][i].X, d1);
            J[i][1] = nearest(c[2], c[0][i].X, d2);
            if (i == 1 || J[i][0] == 1 || J[i][1] == 1) continue;
            D[i] = std::max(d1, d2);
        }
        for (std::size_t i = 0; i < D.size(); ++i) {
            if (D[i] > rad) continue;
            if (i > 0 && D[i - 1] < D[i]) continue;
            if (i + 1 < D.size() && D[i + 1] <= D[i]) continue;
            Candidate cd;
            cd.x = seed;
            cd.y = from_ambient(c[0][i].X);
            if (root == 1) std::swap(cd.x, cd.y);
            cd.t = {c[0][i].t, c[1][J[i][0]].t, c[2][J[i][1]].t};
            cd.defect = D[i];
            cd.order = tag * c[0].size() + i;
            out.push_back(cd);
        }
    }

    std::optional<FlowSolution> newton(const Candidate& c) const {
        std::array<Point, 2> x = {preferred(c.x), preferred(c.y)};
        std::array<double, 3> s;
        for (int k = 0; k < 3; ++k) s[k] = std::log(c.t[k]);
        return newton_from(x, s);
    }

    std::optional<FlowSolution> newton_from(std::array<Point, 2> x, std::array<double, 3> s) const {
        const auto& tol = sys_.solver.tol;
        // Candidates come from curves of length screen_t; roots far beyond it are not
        // what a candidate points at.
        const double smin = std::log(1e-4),
                     smax = std::log(std::min(sys_.integrator.max_t, 3 * sys_.solver.screen_t));
        try {
            // Levenberg-Marquardt on D / (t_1 + t_2 + t_3). The scaling keeps the
            // roots and their Jacobian signs but removes the spurious root at
            // x_1 = x_2, t = 0 that attracts iterations from rough guesses.
            auto scaled = [](const Eval& e, const std::array<double, 3>& sv, Eigen::Matrix<double, 9, 9>& j) {
                double tsum = 0;
                Eigen::Matrix<double, 1, 9> dt = Eigen::Matrix<double, 1, 9>::Zero();
                for (int k = 0; k < 3; ++k) tsum += dt(6 + k) = std::exp(sv[k]);
                j = e.jac / tsum - e.defect * dt / (tsum * tsum);
                return Eigen::Matrix<double, 9, 1>(e.defect / tsum);
            };
            // Far from a root the flows are integrated loosely.
            IntegratorConfig rough = sys_.integrator;
            rough.rtol = std::max(rough.rtol, 1e-7);
            rough.atol = std::max(rough.atol, 1e-8);
            const IntegratorConfig* cfg = &rough;
            Eval ev = evaluate(x, s, true, cfg);
            Eigen::Matrix<double, 9, 9> jf;
            Eigen::Matrix<double, 9, 1> fv = scaled(ev, s, jf);
            double mu = 1e-3;
            for (int it = 0; it < 100 && (cfg || ev.residual >= tol.sol * 0.1); ++it) {
                if (cfg && ev.residual < 1e-5) {
                    cfg = nullptr;
                    ev = evaluate(x, s);
                    fv = scaled(ev, s, jf);
                    continue;
                }
                // Runs that have not closed in on a root by now are heading for a
                // local minimum of the defect.
                if (it == 40 && ev.residual > 1e-3) return std::nullopt;
                Eigen::Matrix<double, 9, 9> a = jf.transpose() * jf;
                Eigen::Matrix<double, 9, 1> g = jf.transpose() * fv;
                bool improved = false;
                for (int tries = 0; tries < 12 && !improved; ++tries) {
                    Eigen::Matrix<double, 9, 9> m = a;
                    m.diagonal() += mu * a.diagonal().cwiseMax(1e-12);
                    Eigen::Matrix<double, 9, 1> du = m.ldlt().solve(-g);
                    if (!du.allFinite()) return std::nullopt;
                    std::array<Point, 2> xn = x;
                    std::array<double, 3> sn = s;
                    for (int v = 0; v < 2; ++v) xn[v] = preferred({x[v].chart, x[v].x + du.segment<3>(3 * v)});
                    bool ok = true;
                    for (int k = 0; k < 3; ++k) {
                        sn[k] = s[k] + du(6 + k);
                        ok = ok && sn[k] > smin && sn[k] < smax;
                    }
                    if (ok) {
                        Eval en = evaluate(xn, sn, true, cfg);
                        Eigen::Matrix<double, 9, 9> jn;
                        Eigen::Matrix<double, 9, 1> fn = scaled(en, sn, jn);
                        if (fn.norm() < fv.norm()) {
                            x = xn, s = sn, ev = en, fv = fn, jf = jn, improved = true;
                            mu = std::max(mu / 10, 1e-12);
                            continue;
                        }
                    }
                    mu *= 10;
                }
                if (!improved) return std::nullopt;
            }
            if (ev.residual > tol.sol) return std::nullopt;
            double det = ev.jac.determinant();
            if (std::abs(det) < tol.jac)
            {
                std::ostringstream msg;
                msg << "singular flow Jacobian (det " << det << ") at x = " << to_ambient(x[0]).transpose()
                    << ", t = " << std::exp(s[0]) << " " << std::exp(s[1]) << " " << std::exp(s[2]);
                throw NonGeneric(msg.str());
            }
            FlowSolution out;
            out.x = x[0];
            out.y = x[1];
            for (int k = 0; k < 3; ++k) out.times[k] = std::exp(s[k]);
            out.sign = det > 0 ? 1 : -1;
            out.residual = ev.residual;
            out.jacobian_det = det;
            return out;
        } catch (const IntegrationFailure&) {
            return std::nullopt;
        }
    }

    const MorseSystem& sys_;
    std::array<std::pair<int, int>, 3> edges_{};
};

// The Theta graph with all three edges from vertex 1 to vertex 2.
inline LabeledGraph theta_graph() {
    LabeledGraph g;
    g.n = 2;
    for (int k = 1; k <= 3; ++k) g.edges.push_back({k, 1, 2, EdgeClass::Compact, {}});
    return g;
}

inline GraphCount count_graph_flows(const MorseSystem& sys, const LabeledGraph& g) { return ThetaSolver(sys, g).count(); }

inline GraphCount count_theta_flows(const MorseSystem& sys) { return count_graph_flows(sys, theta_graph()); }

inline nlohmann::json to_json(const FlowSolution& s) {
    return {{"x", to_json(s.x)},         {"y", to_json(s.y)},           {"times", s.times},
            {"sign", s.sign},           {"residual", s.residual},      {"jacobian_det", s.jacobian_det}};
}

}  // namespace mgk::morse
