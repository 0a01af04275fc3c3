#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace mgk::morse {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

// S^3 = R^3 u {inf} twice. Chart 0 is stereographic projection from
// (0,0,0,1); chart 1 composes projection from (0,0,0,-1) with the reflection
// of the third coordinate, so the transition x -> rho x/|x|^2 preserves
// orientation and is its own inverse.
struct Point {
    int chart = 0;
    Vec3 x = Vec3::Zero();
};

inline Vec4 to_ambient(const Point& p) {
    double r2 = p.x.squaredNorm(), d = 1 + r2;
    Vec4 X;
    X << 2 * p.x(0) / d, 2 * p.x(1) / d, 2 * p.x(2) / d, (r2 - 1) / d;
    if (p.chart == 1) {
        X(2) = -X(2);
        X(3) = -X(3);
    }
    return X;
}

inline Vec3 transition(const Vec3& x) {
    Vec3 y = x / x.squaredNorm();
    y(2) = -y(2);
    return y;
}

// d(transition)/dx.
inline Mat3 transition_jacobian(const Vec3& x) {
    double r2 = x.squaredNorm();
    Mat3 j = Mat3::Identity() / r2 - 2 * x * x.transpose() / (r2 * r2);
    j.row(2) *= -1;
    return j;
}

inline Point other_chart(const Point& p) { return {1 - p.chart, transition(p.x)}; }

inline Point in_chart(const Point& p, int chart) { return p.chart == chart ? p : other_chart(p); }

// The chart in which the point lies inside the unit ball.
inline Point preferred(const Point& p) { return p.x.squaredNorm() > 1 ? other_chart(p) : p; }

inline Point from_ambient(const Vec4& X0) {
    Vec4 X = X0.normalized();
    if (X(3) <= 0) return {0, X.head<3>() / (1 - X(3))};
    Vec3 z(X(0), X(1), -X(2));
    return {1, z / (1 + X(3))};
}

inline double distance(const Point& a, const Point& b) { return (to_ambient(a) - to_ambient(b)).norm(); }

// Points on the boundary of the cube [-1,1]^4 on a grid with `density`
// cells per edge, pushed to the sphere, then rotated by a random orthogonal
// matrix drawn from `seed`.
inline std::vector<Point> seed_grid(int density, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::Matrix4d g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = nd(rng);
    Eigen::HouseholderQR<Eigen::Matrix4d> qr(g);
    Eigen::Matrix4d rot = qr.householderQ();
    std::vector<Point> out;
    int n = density;
    for (int axis = 0; axis < 4; ++axis)
        for (int sgn : {-1, 1})
            for (int a = 0; a < n; ++a)
                for (int b = 0; b < n; ++b)
                    for (int c = 0; c < n; ++c) {
                        std::array<double, 3> u = {-1 + (2 * a + 1.0) / n, -1 + (2 * b + 1.0) / n,
                                                   -1 + (2 * c + 1.0) / n};
                        Vec4 X;
                        int k = 0;
                        for (int i = 0; i < 4; ++i) X(i) = i == axis ? sgn : u[k++];
                        out.push_back(from_ambient(rot * X));
                    }
    return out;
}

}  // namespace mgk::morse
