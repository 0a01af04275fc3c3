#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <toml.hpp>

#include "mgk/morse.hpp"

using namespace mgk;
using namespace mgk::morse;

namespace {

MorseSystem single(const std::string& expr) {
    MorseSystem sys;
    sys.functions.push_back(MorseFunction::ambient(expr, "f"));
    sys.prepare();
    return sys;
}

Point random_point(std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Vec4 X;
    for (int i = 0; i < 4; ++i) X(i) = nd(rng);
    return from_ambient(X.normalized());
}

MorseSystem theta_config() {
    return load_system(std::filesystem::path(MGK_SOURCE_DIR) / "configs" / "theta.toml");
}

}  // namespace

TEST(Flow, ZeroTime) {
    auto sys = single("X4 + 0.3*X1*X2");
    Point x{0, Vec3(0.3, -0.2, 0.5)};
    EXPECT_LT(distance(flow(sys, 0, x, 0), x), 1e-15);
}

TEST(Flow, CriticalPointIsFixed) {
    // the poles are exact zeros of the height gradient
    auto h = single("X4");
    for (int chart : {0, 1}) {
        Point p{chart, Vec3::Zero()};
        for (double t : {0.5, 5.0, 40.0}) EXPECT_EQ(distance(flow(h, 0, p, t), p), 0);
    }
    // located points are zeros up to tol_crit, which unstable directions amplify
    auto sys = single("X4 - 1.2*X1*X4 + 0.5*X2^2 - 0.5*X3^2");
    for (const auto& c : sys.function(0).critical)
        for (double t : {0.5, 2.0}) EXPECT_LT(distance(flow(sys, 0, c.p, t), c.p), 1e-8) << c.name;
}

TEST(Flow, HeightFunctionClosedForm) {
    // in the chart centred at the minimum the flow of the height function is x e^{-t}
    auto sys = single("X4");
    Point x{0, Vec3(0.4, -0.7, 0.2)};
    for (double t : {0.1, 1.0, 3.0, 7.5}) {
        auto y = in_chart(flow(sys, 0, x, t), 0);
        EXPECT_LT((y.x - x.x * std::exp(-t)).norm(), 1e-10) << t;
    }
    Point far{1, Vec3(0.1, 0.05, -0.2)};
    Point south{0, Vec3::Zero()};
    EXPECT_LT(distance(flow(sys, 0, far, 50), south), 1e-11);
}

TEST(Flow, Semigroup) {
    auto sys = single("X4 + 0.6*(cos(2*X4+1.2)*X1 - sin(2*X4+1.2)*X3) + 0.11*X2");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(0, 10);
    double tol = 10 * sys.integrator.rtol;
    for (int i = 0; i < 10; ++i) {
        auto x = random_point(rng);
        double s = ut(rng), t = ut(rng);
        auto a = flow(sys, 0, x, s + t);
        auto b = flow(sys, 0, flow(sys, 0, x, s), t);
        EXPECT_LT(distance(a, b), tol);
    }
}

TEST(Flow, FunctionDecreases) {
    auto sys = single("X4 + 0.4*X1*X2 + 0.3*X3");
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        auto x = random_point(rng);
        const auto& f = sys.function(0);
        double v = f.value(x);
        for (double t : {0.01, 0.5, 2.0}) {
            double w = f.value(flow(sys, 0, x, t));
            EXPECT_LT(w, v);
            v = w;
        }
    }
}

TEST(Flow, GradientMatchesFiniteDifferences) {
    auto f = MorseFunction::ambient("X4 + 0.6*(cos(3*X4+0.3)*X1 - sin(3*X4+0.3)*X2) + 0.2*X3*X1");
    for (int chart : {0, 1}) {
        Point p{chart, Vec3(0.3, -0.4, 0.25)};
        auto g = f.gradient(p);
        auto h = f.hessian(p);
        double e = 1e-6;
        for (int i = 0; i < 3; ++i) {
            Point a = p, b = p;
            a.x(i) += e;
            b.x(i) -= e;
            EXPECT_NEAR(g(i), (f.value(a) - f.value(b)) / (2 * e), 1e-7);
            Vec3 dg = (f.gradient(a) - f.gradient(b)) / (2 * e);
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(h(k, i), dg(k), 1e-6);
        }
    }
}

TEST(MorseComplex, PerfectFunction) {
    auto sys = single("X4");
    auto c = morse_complex(sys, 0);
    ASSERT_EQ(sys.function(0).critical.size(), 2u);
    for (const auto& m : c.boundaries())
        for (std::size_t r = 0; r < m.rows(); ++r)
            for (std::size_t s = 0; s < m.cols(); ++s) EXPECT_EQ(m(r, s), 0);
    EXPECT_EQ(c.homology(), (std::vector<std::size_t>{1, 0, 0, 1}));
    auto r = reduced_complex(c, "c3_0", "c0_0");
    EXPECT_EQ(r.total_size(), 0u);
    EXPECT_TRUE(r.is_acyclic());
}

TEST(MorseComplex, CancelingPair) {
    auto sys = single("X4 - 1.2*X1*X4 + 0.5*X2^2 - 0.5*X3^2");
    ASSERT_EQ(sys.function(0).critical.size(), 4u);
    auto c = morse_complex(sys, 0);
    EXPECT_EQ(abs(c.incidence("c2_0", "c1_0")), 1);
    EXPECT_EQ(c.incidence("c1_0", "c0_0"), 0);
    EXPECT_EQ(c.incidence("c3_0", "c2_0"), 0);
    for (int k = 0; k + 2 <= c.max_degree(); ++k) {
        auto dd = c.boundary(k) * c.boundary(k + 1);
        for (std::size_t r = 0; r < dd.rows(); ++r)
            for (std::size_t s = 0; s < dd.cols(); ++s) EXPECT_EQ(dd(r, s), 0);
    }
    EXPECT_EQ(c.homology(), (std::vector<std::size_t>{1, 0, 0, 1}));
    auto r = reduced_complex(c, "c3_0", "c0_0");
    EXPECT_EQ(r.total_size(), 2u);
    EXPECT_EQ(abs(r.incidence("c2_0", "c1_0")), 1);
    EXPECT_TRUE(r.is_acyclic());
}

TEST(Gluing, ClosedForm) {
    EXPECT_NEAR(tau_epsilon(0.25, 1), 2 * (std::atan(-4.0 / 3) + std::numbers::pi), 1e-14);
    EXPECT_NEAR(tau_epsilon(0.25, 1), 4.4286, 1e-4);
    // smooth across u = eps^2
    EXPECT_NEAR(tau_epsilon(1 - 1e-9, 1), tau_epsilon(1 + 1e-9, 1), 1e-8);
    EXPECT_NEAR(tau_epsilon(1, 1), std::numbers::pi / 2, 1e-15);
}

TEST(Gluing, Series) {
    for (double eps : {0.5, 1.0, 2.0}) {
        double u = eps * eps / 4;
        EXPECT_NEAR(tau_series(u, eps, 30), tau_epsilon(u, eps), 1e-10 * tau_epsilon(u, eps));
    }
    EXPECT_THROW(tau_series(1.0, 1.0, 30), DomainError);
    EXPECT_THROW(tau_series(2.0, 1.0, 30), DomainError);
    EXPECT_THROW(tau_epsilon(0, 1), DomainError);
    EXPECT_THROW(tau_epsilon(1, -1), DomainError);
}

TEST(Gluing, SigmaIsFlat) {
    EXPECT_EQ(sigma_epsilon(0, 1), 0);
    EXPECT_EQ(sigma_epsilon(-0.5, 1), 0);
    double u = 1e-4, h = 5e-5;
    auto s = [](double v) { return sigma_epsilon(v, 1); };
    EXPECT_LT(s(u), 1e-6);
    EXPECT_LT(std::abs((s(u + h) - s(u - h)) / (2 * h)), 1e-4);
    EXPECT_LT(std::abs((s(u + h) - 2 * s(u) + s(u - h)) / (h * h)), 1e-4);
    EXPECT_LT(std::abs((s(u + 2 * h) - 2 * s(u + h) + 2 * s(u - h) - s(u - 2 * h)) / (2 * h * h * h)), 1e-4);
    EXPECT_GT(s(1), 0);
    EXPECT_LT(s(0.01), s(0.1));
}

TEST(Config, BadKeyIsNamed) {
    auto t = toml::parse(R"(
[solver]
grid_density = 4
tol_sool = 1e-9
[[functions]]
expr = "X4"
)");
    try {
        system_from_toml(t);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("solver.tol_sool"), std::string::npos) << e.what();
    }
    EXPECT_THROW(system_from_toml(toml::parse("[[functions]]\nexpr = \"X4 +\"\n")), ParseError);
    EXPECT_THROW(load_system("/nonexistent/system.toml"), ParseError);
}

TEST(Theta, ParallelGradientsAreNonGeneric) {
    MorseSystem sys;
    sys.functions.push_back(MorseFunction::ambient("X4 + 0.4*X1*X2 + 0.3*X3"));
    sys.functions.push_back(MorseFunction::ambient("X4 + 0.4*X1*X2 + 0.3*X3 + 2"));
    sys.functions.push_back(MorseFunction::ambient("X4 + 0.25*X1"));
    sys.prepare();
    EXPECT_THROW(count_theta_flows(sys), NonGeneric);
}

TEST(Theta, SolutionsSatisfyTheSystem) {
    auto sys = theta_config();
    sys.solver.grid_density = 3;
    ThetaSolver ts(sys, theta_graph());
    auto sols = ts.solve_grid(sys.solver.seeds[0]);
    ASSERT_FALSE(sols.empty());
    for (const auto& s : sols) {
        EXPECT_LE(s.residual, sys.solver.tol.sol);
        EXPECT_GE(std::abs(s.jacobian_det), sys.solver.tol.jac);
        for (int k = 0; k < 3; ++k) {
            EXPECT_GT(s.times[k], 0);
            EXPECT_LT(distance(flow(sys, k, s.x, s.times[k]), s.y), 10 * sys.solver.tol.sol);
        }
    }
}
