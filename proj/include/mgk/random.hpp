#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mgk/chain.hpp"

namespace mgk {

using Rng = std::mt19937_64;

namespace detail {

inline int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Random unimodular integer matrix together with its inverse.
inline std::pair<Matrix, Matrix> random_unimodular(Rng& rng, std::size_t n, int ops) {
    Matrix a = Matrix::identity(n), inv = Matrix::identity(n);
    if (n == 0) return {a, inv};
    for (int t = 0; t < ops; ++t) {
        std::size_t i = uniform(rng, 0, static_cast<int>(n) - 1);
        std::size_t j = uniform(rng, 0, static_cast<int>(n) - 1);
        if (i == j) {
            // negate row i
            for (std::size_t c = 0; c < n; ++c) a(i, c) = -a(i, c);
            for (std::size_t r = 0; r < n; ++r) inv(r, i) = -inv(r, i);
            continue;
        }
        int c = uniform(rng, 1, 2) * (uniform(rng, 0, 1) ? 1 : -1);
        // a <- (I + c E_ij) a ; inv <- inv (I - c E_ij)
        for (std::size_t k = 0; k < n; ++k) a(i, k) += c * a(j, k);
        for (std::size_t r = 0; r < n; ++r) inv(r, j) -= c * inv(r, i);
    }
    return {a, inv};
}

}  // namespace detail

// Random complex with `pairs` cancelling pairs and `extra` homology classes,
// in degrees 0..max_degree, disguised by a unimodular change of basis.
inline BasedChainComplex random_complex(Rng& rng, int pairs, int extra, int max_degree = 3,
                                        const std::string& prefix = "e") {
    std::vector<std::vector<std::string>> basis(max_degree + 1);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> links(max_degree);
    int counter = 0;
    auto fresh = [&] { return prefix + std::to_string(counter++); };
    for (int t = 0; t < pairs && max_degree > 0; ++t) {
        int i = detail::uniform(rng, 0, max_degree - 1);
        basis[i + 1].push_back(fresh());
        basis[i].push_back(fresh());
        links[i].emplace_back(basis[i].size() - 1, basis[i + 1].size() - 1);
    }
    for (int t = 0; t < extra; ++t) basis[detail::uniform(rng, 0, max_degree)].push_back(fresh());
    std::vector<Matrix> a, ainv;
    for (int k = 0; k <= max_degree; ++k) {
        auto [m, mi] = detail::random_unimodular(rng, basis[k].size(), 3 * static_cast<int>(basis[k].size()));
        a.push_back(m);
        ainv.push_back(mi);
    }
    std::vector<Matrix> bd;
    for (int k = 0; k < max_degree; ++k) {
        Matrix d(basis[k].size(), basis[k + 1].size());
        for (auto [r, c] : links[k]) d(r, c) = 1;
        bd.push_back(a[k] * d * ainv[k + 1]);
    }
    return BasedChainComplex(basis, bd);
}

inline BasedChainComplex random_acyclic_complex(Rng& rng, int max_generators, int max_degree = 3,
                                                const std::string& prefix = "e") {
    int pairs = detail::uniform(rng, 0, max_generators / 2);
    return random_complex(rng, pairs, 0, max_degree, prefix);
}

// Elementary complex p -> q with q in degree i.
inline BasedChainComplex elementary_complex(int i, const std::string& p = "p", const std::string& q = "q",
                                            int max_degree = -1) {
    return direct_sum_with_elementary(BasedChainComplex::zero(std::max(max_degree, i + 1)), i, p, q);
}

// g + ∂'k for a random sparse integer k of degree 2: another propagator.
inline GradedEndomorphism perturb_propagator(Rng& rng, const BasedChainComplex& c, const GradedEndomorphism& g,
                                             int density = 2) {
    auto k = GradedEndomorphism::zero(c, 2);
    for (auto& b : k.blocks)
        for (std::size_t r = 0; r < b.rows(); ++r)
            for (std::size_t s = 0; s < b.cols(); ++s)
                if (detail::uniform(rng, 0, density) == 0) b(r, s) = detail::uniform(rng, -2, 2);
    return g + boundary_prime(k, c);
}

inline GradedEndomorphism random_propagator(Rng& rng, const BasedChainComplex& c) {
    return perturb_propagator(rng, c, solve_propagator(c));
}

// h(p) = ±q for distinct p, q of the same degree; nullopt if no degree has two generators.
inline std::optional<GradedEndomorphism> random_rank_one(Rng& rng, const BasedChainComplex& c) {
    std::vector<int> degrees;
    for (int k = 0; k <= c.max_degree(); ++k)
        if (c.size(k) >= 2) degrees.push_back(k);
    if (degrees.empty()) return std::nullopt;
    int k = degrees[detail::uniform(rng, 0, static_cast<int>(degrees.size()) - 1)];
    int n = static_cast<int>(c.size(k));
    int p = detail::uniform(rng, 0, n - 1);
    int q = detail::uniform(rng, 0, n - 2);
    if (q >= p) ++q;
    auto h = GradedEndomorphism::zero(c, 0);
    h.blocks[k](q, p) = detail::uniform(rng, 0, 1) ? 1 : -1;
    return h;
}

}  // namespace mgk
