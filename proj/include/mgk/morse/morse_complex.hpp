#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "mgk/chain.hpp"
#include "mgk/morse/flow.hpp"

namespace mgk::morse {

// Signed trajectory count between critical points of adjacent index.
//
// At a point y of a trajectory from p (index k+1) to q (index k) the sign is
//     eps = sign det [ beta ; alpha ; df_y ]
// (rows, chart coordinates at y), where
//   beta  = coorientation of D_p: normals n_j with (w_1..w_{k+1}, n_1..) a
//           positive frame, w the transported orientation frame of D_p;
//           for k+1 = 3 beta is empty and the sign of (w) multiplies eps,
//   alpha = coorientation of A_q: the orientation frame u_i of D_q at q,
//           read as covectors <u_i, .> and pulled back along the flow,
//   df_y  = the differential of f at y.
// This is o*(D_p) ^ o*(A_q) ^ df compared against the orientation of S^3.
struct Trajectory {
    std::string from, to;
    int sign = 0;
    Point y;
    double det = 0;
};

struct ShootingOptions {
    double offset = 1e-6;
    double arrive = 1e-4;
    // Radius of the start circles for the index 2 -> 1 scan.
    double circle = 1e-3;
    int scan = 48;
};

namespace detail {

struct Shot {
    int target = -1;  // index into critical list, -1 if none reached
    double time = 0;
    double mid_time = -1;  // first time f crosses `level`
};

// Flow from x until it comes within `arrive` of a critical point whose index
// passes `accept`; also records when f first crosses `level`.
template <class Accept>
Shot shoot(const MorseFunction& f, const FlowIntegrator& fi, const Point& x, double level, double max_t,
           double arrive, Accept accept) {
    Shot s;
    double d = fi.direction();
    fi.trace(x, max_t, 0.25, [&](double t, const Point& p) {
        if (s.mid_time < 0 && d * (f.value(p) - level) <= 0) s.mid_time = t;
        if (t == 0) return false;
        for (std::size_t c = 0; c < f.critical.size(); ++c) {
            if (!accept(f.critical[c])) continue;
            if (distance(p, f.critical[c].p) < arrive) {
                s.target = static_cast<int>(c);
                s.time = t;
                return true;
            }
        }
        return false;
    });
    return s;
}

inline Point offset_point(const CriticalPoint& c, const Vec3& dir, double delta) {
    return {c.p.chart, c.p.x + delta * dir};
}

// Start point on a two-dimensional (un)stable eigenplane. Axis j is scaled by
// eps^(|l_j|/|l_min|) so that the linearised flow turns the ellipse into a
// round circle, which keeps the swept level curve evenly sampled.
inline Point ellipse_point(const CriticalPoint& c, const Eigen::MatrixXd& basis, double th, double eps) {
    Eigen::Vector2d rate;
    for (int j = 0; j < 2; ++j) rate(j) = std::abs(Vec3(basis.col(j)).dot(c.hessian * Vec3(basis.col(j))));
    double lmin = rate.minCoeff();
    Vec3 u = std::pow(eps, rate(0) / lmin) * std::cos(th) * basis.col(0) +
             std::pow(eps, rate(1) / lmin) * std::sin(th) * basis.col(1);
    return {c.p.chart, c.p.x + u};
}

// Complement rows of w (3 x r) so that (w, normals) is positively oriented.
inline Eigen::MatrixXd conormals(const Eigen::MatrixXd& w) {
    Eigen::MatrixXd beta(3 - w.cols(), 3);
    if (w.cols() == 2) {
        beta.row(0) = Vec3(w.col(0)).cross(Vec3(w.col(1))).transpose();
    } else if (w.cols() == 1) {
        Vec3 a = w.col(0);
        Vec3 e = std::abs(a(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        Vec3 n1 = a.cross(e).normalized();
        Vec3 n2 = a.cross(n1);
        beta.row(0) = n1.transpose();
        beta.row(1) = n2.transpose();
    }
    return beta;
}

inline double sign_det(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& alpha, const Vec3& df, double extra) {
    Mat3 m;
    int r = 0;
    for (int i = 0; i < beta.rows(); ++i) m.row(r++) = beta.row(i).normalized();
    for (int i = 0; i < alpha.rows(); ++i) m.row(r++) = alpha.row(i).normalized();
    m.row(r) = df.normalized().transpose();
    return extra * m.determinant();
}

}  // namespace detail

class MorseComplexBuilder {
public:
    MorseComplexBuilder(const MorseSystem& sys, int i, std::map<std::string, int> orientations = {},
                        ShootingOptions opt = {})
        : f_(sys.function(i)), cfg_(sys.integrator), tol_(sys.solver.tol), flips_(std::move(orientations)),
          opt_(opt) {}

    Eigen::MatrixXd orientation(const CriticalPoint& c) const {
        auto it = flips_.find(c.name);
        return unstable_basis(c, it != flips_.end() && it->second < 0);
    }

    // All trajectories from index k+1 to index k.
    std::vector<Trajectory> trajectories(int k) const {
        if (k == 0) return forward_pairs(k);
        if (k == 2) return backward_pairs();
        return scanned_pairs(opt_.scan);
    }

    // Index-1 to index-2 trajectories counted with a coarser and a finer scan.
    std::pair<std::vector<Trajectory>, std::vector<Trajectory>> scan_cross_check() const {
        return {scanned_pairs(opt_.scan), scanned_pairs(opt_.scan * 3 / 2 + 1)};
    }

    BasedChainComplex build() const {
        std::vector<std::vector<std::string>> basis(4);
        for (const auto& c : f_.critical) basis.at(c.index).push_back(c.name);
        std::vector<Matrix> bd;
        for (int k = 0; k < 3; ++k) {
            Matrix m(basis[k].size(), basis[k + 1].size());
            if (!basis[k].empty() && !basis[k + 1].empty()) {
                auto ts = trajectories(k);
                if (k == 1) {
                    auto alt = scanned_pairs(opt_.scan * 3 / 2 + 1);
                    if (tally(alt) != tally(ts))
                        throw Unresolved(f_.name + ": index 2 -> 1 counts differ between scan resolutions");
                }
                for (const auto& t : ts) {
                    auto r = std::find(basis[k].begin(), basis[k].end(), t.to) - basis[k].begin();
                    auto c = std::find(basis[k + 1].begin(), basis[k + 1].end(), t.from) - basis[k + 1].begin();
                    m(r, c) += t.sign;
                }
            }
            bd.push_back(std::move(m));
        }
        return BasedChainComplex(basis, bd);
    }

private:
    static std::map<std::pair<std::string, std::string>, int> tally(const std::vector<Trajectory>& ts) {
        std::map<std::pair<std::string, std::string>, int> m;
        for (const auto& t : ts) m[{t.from, t.to}] += t.sign;
        return m;
    }

    int find_index(const std::string& name) const {
        for (std::size_t c = 0; c < f_.critical.size(); ++c)
            if (f_.critical[c].name == name) return static_cast<int>(c);
        return -1;
    }

    // Sign at the point reached from `start` after t1, given the frame w0 of
    // D_p at start and the time t2 on to the neighbourhood of q.
    Trajectory forward_sign(const CriticalPoint& p, const CriticalPoint& q, const Point& start,
                            const Eigen::MatrixXd& w0, double t1, double t2) const {
        FlowIntegrator fi(f_, cfg_);
        auto r1 = fi.flow_with_jacobian(start, t1);
        auto r2 = fi.flow_with_jacobian(r1.end, t2);
        Mat3 m2 = chart_change(r2.end, q.p.chart) * r2.jacobian;
        Eigen::MatrixXd w = r1.jacobian * w0;
        Eigen::MatrixXd alpha = orientation(q).transpose() * m2;
        double extra = w.cols() == 3 ? (Mat3(w).determinant() > 0 ? 1 : -1) : 1;
        double d = detail::sign_det(detail::conormals(w), alpha, f_.gradient(r1.end), extra);
        if (std::abs(d) < tol_.ms) throw NonGeneric(f_.name + ": " + p.name + " -> " + q.name + " is not transverse");
        return {p.name, q.name, d > 0 ? 1 : -1, r1.end, d};
    }

    std::vector<Trajectory> forward_pairs(int k) const {
        std::vector<Trajectory> out;
        FlowIntegrator fi(f_, cfg_);
        for (const auto& p : f_.critical) {
            if (p.index != k + 1) continue;
            Eigen::MatrixXd w0 = orientation(p);
            for (double s : {1.0, -1.0}) {
                Vec3 u = s * w0.col(0);
                Point x = detail::offset_point(p, u, opt_.offset);
                auto shot = detail::shoot(f_, fi, x, 0, cfg_.max_t, opt_.arrive,
                                          [&](const CriticalPoint& c) { return c.index < p.index; });
                if (shot.target < 0) throw IntegrationFailure(f_.name + ": trajectory from " + p.name + " did not settle");
                const auto& q = f_.critical[shot.target];
                if (q.index != k) continue;
                double mid = mid_time(fi, x, p, q, shot.time);
                out.push_back(forward_sign(p, q, x, w0, mid, shot.time - mid));
            }
        }
        return out;
    }

    double mid_time(const FlowIntegrator& fi, const Point& x, const CriticalPoint& p, const CriticalPoint& q,
                    double limit) const {
        auto s = detail::shoot(f_, fi, x, (p.value + q.value) / 2, limit, 0,
                               [](const CriticalPoint&) { return false; });
        return s.mid_time > 0 ? s.mid_time : limit / 2;
    }

    // Index 3 -> 2: shoot from q up its one-dimensional stable manifold.
    std::vector<Trajectory> backward_pairs() const {
        std::vector<Trajectory> out;
        FlowIntegrator up(f_, cfg_, -1);
        for (const auto& q : f_.critical) {
            if (q.index != 2) continue;
            Vec3 v = stable_basis(q).col(0);
            for (double s : {1.0, -1.0}) {
                Point z0 = detail::offset_point(q, s * v, opt_.offset);
                auto shot = detail::shoot(f_, up, z0, 0, cfg_.max_t, opt_.arrive,
                                          [&](const CriticalPoint& c) { return c.index > q.index; });
                if (shot.target < 0) throw IntegrationFailure(f_.name + ": trajectory from " + q.name + " did not settle");
                const auto& p = f_.critical[shot.target];
                if (p.index != 3) continue;
                auto ms = detail::shoot(f_, up, z0, (p.value + q.value) / 2, shot.time, 0,
                                        [](const CriticalPoint&) { return false; });
                double t1 = ms.mid_time > 0 ? ms.mid_time : shot.time / 2;
                auto r = up.flow_with_jacobian(z0, t1);
                // Forward flow y -> z0 has Jacobian r.jacobian^{-1}.
                Mat3 m2 = r.jacobian.inverse();
                Eigen::MatrixXd alpha = orientation(q).transpose() * m2;
                double extra = Mat3(orientation(p)).determinant() > 0 ? 1 : -1;
                double d = detail::sign_det(Eigen::MatrixXd(0, 3), alpha, f_.gradient(r.end), extra);
                if (std::abs(d) < tol_.ms)
                    throw NonGeneric(f_.name + ": " + p.name + " -> " + q.name + " is not transverse");
                out.push_back({p.name, q.name, d > 0 ? 1 : -1, r.end, d});
            }
        }
        return out;
    }

    // Point where the flow line from x crosses the level c, with the time
    // taken; nullopt if it settles before reaching c.
    std::optional<std::pair<Point, double>> to_level(const FlowIntegrator& fi, const Point& x, double c) const {
        double d = fi.direction();
        Point prev = x;
        double tprev = 0;
        bool crossed = false;
        fi.trace(x, cfg_.max_t, 0.25, [&](double t, const Point& p) {
            if (t > 0 && d * (f_.value(p) - c) <= 0) return crossed = true;
            prev = p;
            tprev = t;
            return false;
        });
        if (!crossed) return std::nullopt;
        double tau = 0;
        Point y = prev;
        for (int it = 0; it < 8; ++it) {
            double g = f_.value(y) - c;
            Vec3 grad = f_.gradient(y);
            double rate = -d * std::pow(1 + y.x.squaredNorm(), 2) / 4 * grad.squaredNorm();
            double step = -g / rate;
            tau += step;
            if (tau < 0) tau = 0;
            y = fi.flow(prev, tau);
            if (std::abs(step) < 1e-15) break;
        }
        return std::make_pair(y, tprev + tau);
    }

    // Index 2 -> 1: on the level halfway between p and q, intersect the curve
    // swept by D_p (flowing down from p's unstable circle) with the curve swept
    // by A_q (flowing up from q's stable circle).
    std::vector<Trajectory> scanned_pairs(int n) const {
        std::vector<Trajectory> out;
        FlowIntegrator down(f_, cfg_), up(f_, cfg_, -1);
        for (const auto& p : f_.critical) {
            if (p.index != 2) continue;
            Eigen::MatrixXd wp = orientation(p);
            for (const auto& q : f_.critical) {
                if (q.index != 1 || q.value >= p.value) continue;
                Eigen::MatrixXd sq = stable_basis(q);
                double c = (p.value + q.value) / 2;
                auto from_p = [&](double th) { return detail::ellipse_point(p, wp, th, opt_.circle); };
                auto from_q = [&](double ph) { return detail::ellipse_point(q, sq, ph, opt_.circle); };
                auto curve = [&](const FlowIntegrator& fi, auto start) {
                    std::vector<std::optional<Vec4>> pts(n);
                    for (int j = 0; j < n; ++j)
                        if (auto r = to_level(fi, start(2 * M_PI * j / n), c)) pts[j] = to_ambient(r->first);
                    return pts;
                };
                auto c1 = curve(down, from_p), c2 = curve(up, from_q);
                auto residual = [&](double th, double ph) -> std::optional<Vec4> {
                    auto a = to_level(down, from_p(th), c);
                    auto b = to_level(up, from_q(ph), c);
                    if (!a || !b) return std::nullopt;
                    return Vec4(to_ambient(a->first) - to_ambient(b->first));
                };
                std::vector<double> found;
                double h = 2 * M_PI / n;
                for (int i = 0; i < n; ++i) {
                    const auto &a0 = c1[i], &a1 = c1[(i + 1) % n];
                    if (!a0 || !a1) continue;
                    for (int j = 0; j < n; ++j) {
                        const auto &b0 = c2[j], &b1 = c2[(j + 1) % n];
                        if (!b0 || !b1) continue;
                        auto [s, u, dist] = segment_distance(*a0, *a1, *b0, *b1);
                        double scale = (*a1 - *a0).norm() + (*b1 - *b0).norm();
                        if (dist > 0.25 * scale) continue;
                        // Gauss-Newton on (theta, phi).
                        double th = (i + s) * h, ph = (j + u) * h;
                        bool ok = false;
                        for (int it = 0; it < 30; ++it) {
                            auto r = residual(th, ph);
                            if (!r) break;
                            if (r->norm() < 1e-10) {
                                ok = true;
                                break;
                            }
                            const double e = 1e-7;
                            auto rt = residual(th + e, ph), rp = residual(th, ph + e);
                            if (!rt || !rp) break;
                            Eigen::Matrix<double, 4, 2> J;
                            J.col(0) = (*rt - *r) / e;
                            J.col(1) = (*rp - *r) / e;
                            Eigen::Vector2d step = J.colPivHouseholderQr().solve(-*r);
                            th += step(0);
                            ph += step(1);
                        }
                        if (!ok) continue;
                        th = std::fmod(std::fmod(th, 2 * M_PI) + 2 * M_PI, 2 * M_PI);
                        bool dup = false;
                        for (double t : found) {
                            double dd = std::abs(t - th);
                            dup = dup || std::min(dd, 2 * M_PI - dd) < 1e-6;
                        }
                        if (dup) continue;
                        found.push_back(th);
                        auto a = to_level(down, from_p(th), c);
                        auto b = to_level(up, from_q(ph), c);
                        auto r1 = down.flow_with_jacobian(from_p(th), a->second);
                        auto r2 = up.flow_with_jacobian(from_q(ph), b->second);
                        Point y = r1.end;
                        // Frames at y, in y's chart.
                        Eigen::MatrixXd w = r1.jacobian * wp;
                        Mat3 back = chart_change(r2.end, y.chart) * r2.jacobian;
                        Eigen::MatrixXd alpha = orientation(q).transpose() * back.inverse();
                        double det = detail::sign_det(detail::conormals(w), alpha, f_.gradient(y), 1);
                        if (std::abs(det) < tol_.ms)
                            throw NonGeneric(f_.name + ": " + p.name + " -> " + q.name + " is not transverse");
                        out.push_back({p.name, q.name, det > 0 ? 1 : -1, y, det});
                    }
                }
            }
        }
        return out;
    }

    // Closest points of segments [a0,a1] and [b0,b1]: (s, u, distance).
    static std::tuple<double, double, double> segment_distance(const Vec4& a0, const Vec4& a1, const Vec4& b0,
                                                               const Vec4& b1) {
        Vec4 d1 = a1 - a0, d2 = b1 - b0, r = a0 - b0;
        double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r), c = d1.dot(r), b = d1.dot(d2);
        double den = a * e - b * b, s = 0, u = 0;
        s = den > 1e-300 ? std::clamp((b * f - c * e) / den, 0.0, 1.0) : 0.0;
        u = e > 0 ? (b * s + f) / e : 0.0;
        if (u < 0) {
            u = 0;
            s = a > 0 ? std::clamp(-c / a, 0.0, 1.0) : 0.0;
        } else if (u > 1) {
            u = 1;
            s = a > 0 ? std::clamp((b - c) / a, 0.0, 1.0) : 0.0;
        }
        return {s, u, (a0 + s * d1 - b0 - u * d2).norm()};
    }

    const MorseFunction& f_;
    IntegratorConfig cfg_;
    Tolerances tol_;
    std::map<std::string, int> flips_;
    ShootingOptions opt_;
};

inline BasedChainComplex morse_complex(const MorseSystem& sys, int i, std::map<std::string, int> orientations = {}) {
    return MorseComplexBuilder(sys, i, std::move(orientations)).build();
}

inline BasedChainComplex reduced_complex(const BasedChainComplex& c, const std::string& a, const std::string& b) {
    return quotient_complex(c, a, b);
}

}  // namespace mgk::morse
