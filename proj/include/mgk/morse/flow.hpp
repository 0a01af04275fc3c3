#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "mgk/errors.hpp"
#include "mgk/morse/system.hpp"

namespace mgk::morse {

struct FlowResult {
    Point end;
    double time = 0;
    // D(flow) from the start chart to the chart of `end`; identity unless
    // variational equations were requested.
    Mat3 jacobian = Mat3::Identity();
};

// Integrates x' = dir * (-grad f) with adaptive Fehlberg 7(8) steps, moving to
// the other chart whenever |x| exceeds the switch radius.
class FlowIntegrator {
public:
    FlowIntegrator(const MorseFunction& f, IntegratorConfig cfg, double dir = 1) : f_(f), cfg_(cfg), dir_(dir) {}

    double direction() const { return dir_; }

    Point flow(const Point& p, double t) const { return run<false>(p, t, 0, nullptr).end; }

    FlowResult flow_with_jacobian(const Point& p, double t) const { return run<true>(p, t, 0, nullptr); }

    // Calls `visit(t, point)` after every accepted step (and at t = 0);
    // integration stops early when it returns true. Steps are capped at max_dt.
    FlowResult trace(const Point& p, double t, double max_dt,
                     const std::function<bool(double, const Point&)>& visit) const {
        return run<false>(p, t, max_dt, &visit);
    }

private:
    template <bool Var>
    FlowResult run(const Point& p0, double T, double max_dt,
                   const std::function<bool(double, const Point&)>* visit) const {
        using namespace boost::numeric::odeint;
        constexpr std::size_t N = Var ? 12 : 3;
        using State = std::array<double, N>;

        FlowResult res;
        if (T < 0) throw DomainError("negative flow time");
        Point p = p0;
        State s{};
        for (int i = 0; i < 3; ++i) s[i] = p.x(i);
        if constexpr (Var)
            for (int i = 0; i < 3; ++i) s[3 + 4 * i] = 1;  // row-major identity

        int chart = p.chart;
        auto rhs = [&](const State& y, State& dy, double) {
            Point q{chart, Vec3(y[0], y[1], y[2])};
            if constexpr (Var) {
                Vec3 v;
                Mat3 dv;
                flow_field(f_, q, v, dv);
                for (int i = 0; i < 3; ++i) dy[i] = dir_ * v(i);
                for (int i = 0; i < 3; ++i)
                    for (int k = 0; k < 3; ++k) {
                        double acc = 0;
                        for (int l = 0; l < 3; ++l) acc += dv(i, l) * y[3 + 3 * l + k];
                        dy[3 + 3 * i + k] = dir_ * acc;
                    }
            } else {
                Vec3 v = flow_field(f_, q);
                for (int i = 0; i < 3; ++i) dy[i] = dir_ * v(i);
            }
        };

        auto stepper = make_controlled(cfg_.atol, cfg_.rtol, runge_kutta_fehlberg78<State>());
        double t = 0, dt = 1e-2;
        if (visit && (*visit)(0, p)) return finish<Var>(s, chart, 0);
        std::size_t steps = 0;
        while (t < T) {
            if (++steps > cfg_.max_steps) throw IntegrationFailure("step limit reached at t = " + std::to_string(t));
            double h = std::min(dt, T - t);
            if (max_dt > 0) h = std::min(h, max_dt);
            double h_try = h;
            auto r = stepper.try_step(rhs, s, t, h_try);
            if (r == fail) {
                dt = h_try;
                if (dt < 1e-14) throw IntegrationFailure("step size underflow at t = " + std::to_string(t));
                continue;
            }
            // h_try is now the suggested next step; a capped step says little about larger ones.
            dt = h_try < h ? h_try : std::max(dt, h_try);
            for (double v : s)
                if (!std::isfinite(v)) throw IntegrationFailure("non-finite state at t = " + std::to_string(t));
            Vec3 x(s[0], s[1], s[2]);
            if (x.norm() > cfg_.switch_radius) {
                Vec3 y = transition(x);
                if constexpr (Var) {
                    Mat3 j = transition_jacobian(x), m;
                    for (int i = 0; i < 3; ++i)
                        for (int k = 0; k < 3; ++k) m(i, k) = s[3 + 3 * i + k];
                    m = j * m;
                    for (int i = 0; i < 3; ++i)
                        for (int k = 0; k < 3; ++k) s[3 + 3 * i + k] = m(i, k);
                }
                for (int i = 0; i < 3; ++i) s[i] = y(i);
                chart = 1 - chart;
            }
            if (visit && (*visit)(t, Point{chart, Vec3(s[0], s[1], s[2])})) return finish<Var>(s, chart, t);
        }
        return finish<Var>(s, chart, t);
    }

    template <bool Var, class State>
    static FlowResult finish(const State& s, int chart, double t) {
        FlowResult r;
        r.end = {chart, Vec3(s[0], s[1], s[2])};
        r.time = t;
        if constexpr (Var)
            for (int i = 0; i < 3; ++i)
                for (int k = 0; k < 3; ++k) r.jacobian(i, k) = s[3 + 3 * i + k];
        return r;
    }

    const MorseFunction& f_;
    IntegratorConfig cfg_;
    double dir_;
};

inline Point flow(const MorseSystem& sys, int i, const Point& x, double t) {
    return FlowIntegrator(sys.function(i), sys.integrator).flow(x, t);
}

// Map a tangent vector at p into the chart `chart`.
inline Mat3 chart_change(const Point& p, int chart) {
    return p.chart == chart ? Mat3::Identity() : transition_jacobian(p.x);
}

}  // namespace mgk::morse
