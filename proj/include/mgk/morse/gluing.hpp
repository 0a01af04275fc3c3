#pragma once

#include <cmath>
#include <numbers>

#include "mgk/errors.hpp"

namespace mgk::morse {

// tau_eps(u) = (atan(2 eps sqrt(u) / (u - eps^2)) + pi) / sqrt(u), with the
// arctangent continued across u = eps^2 so that tau is smooth on u > 0.
inline double tau_epsilon(double u, double eps) {
    if (!(u > 0) || !(eps > 0)) throw DomainError("tau_epsilon needs u > 0 and eps > 0");
    double r = std::sqrt(u);
    return std::atan2(2 * eps * r, u - eps * eps) / r;
}

// Partial sum pi/sqrt(u) - 2 sum_{k<terms} (-1)^k u^k / ((2k+1) eps^(2k+1)),
// convergent for 0 < u < eps^2.
inline double tau_series(double u, double eps, int terms) {
    if (!(eps > 0)) throw DomainError("tau_series needs eps > 0");
    if (!(u > 0) || u >= eps * eps) throw DomainError("tau_series needs 0 < u < eps^2");
    double sum = 0, q = 1 / eps, x = u / (eps * eps);
    for (int k = 0; k < terms; ++k) {
        sum += (k % 2 ? -q : q) / (2 * k + 1);
        q *= x;
    }
    return std::numbers::pi / std::sqrt(u) - 2 * sum;
}

// exp(-tau_eps(u)) for u > 0 and 0 otherwise; flat at u = 0.
inline double sigma_epsilon(double u, double eps) { return u > 0 ? std::exp(-tau_epsilon(u, eps)) : 0.0; }

}  // namespace mgk::morse
