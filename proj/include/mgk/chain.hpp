#pragma once

#include <nlohmann/json.hpp>

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mgk/errors.hpp"
#include "mgk/linalg.hpp"
#include "mgk/rational.hpp"

namespace mgk {

// Finitely based chain complex over Q. boundary[k] maps C_{k+1} -> C_k:
// rows are indexed by basis(k), columns by basis(k+1), and the entry at
// (r, p) is the coefficient of r in the boundary of p.
class BasedChainComplex {
public:
    BasedChainComplex() = default;

    BasedChainComplex(std::vector<std::vector<std::string>> basis, std::vector<Matrix> boundary)
        : basis_(std::move(basis)), boundary_(std::move(boundary)) {
        if (basis_.empty()) basis_.resize(1);
        validate();
    }

    // Complex with empty bases in degrees 0..max_degree.
    static BasedChainComplex zero(int max_degree = 0) {
        std::vector<std::vector<std::string>> b(max_degree + 1);
        std::vector<Matrix> d(max_degree);
        return BasedChainComplex(b, d);
    }

    int max_degree() const { return static_cast<int>(basis_.size()) - 1; }
    std::size_t size(int k) const {
        return k < 0 || k > max_degree() ? 0 : basis_[k].size();
    }
    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& b : basis_) n += b.size();
        return n;
    }
    const std::vector<std::string>& basis(int k) const { return basis_.at(k); }
    const std::vector<std::vector<std::string>>& bases() const { return basis_; }

    // Boundary C_{k+1} -> C_k; zero matrix of the right shape out of range.
    Matrix boundary(int k) const {
        if (k < 0 || k >= max_degree()) return Matrix(size(k), size(k + 1));
        return boundary_[k];
    }
    const std::vector<Matrix>& boundaries() const { return boundary_; }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    // (degree, position) of a basis element.
    std::pair<int, std::size_t> locate(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw MalformedGraph("unknown basis element '" + name + "'");
        return it->second;
    }
    int degree_of(const std::string& name) const { return locate(name).first; }

    // Incidence coefficient of r in the boundary of p.
    Rational incidence(const std::string& p, const std::string& r) const {
        auto [dp, ip] = locate(p);
        auto [dr, ir] = locate(r);
        if (dr != dp - 1) return 0;
        return boundary_[dr](ir, ip);
    }

    // Dimensions of homology per degree.
    std::vector<std::size_t> homology() const {
        std::vector<std::size_t> rk(basis_.size() + 1, 0);
        for (int k = 0; k < max_degree(); ++k) rk[k] = rank(boundary_[k]);
        std::vector<std::size_t> h(basis_.size());
        for (int k = 0; k <= max_degree(); ++k) {
            std::size_t in = k >= 1 ? rk[k - 1] : 0;  // rank of C_k -> C_{k-1}
            std::size_t out = rk[k];                 // rank of C_{k+1} -> C_k
            h[k] = size(k) - in - out;
        }
        return h;
    }

    bool is_acyclic() const {
        for (auto x : homology())
            if (x != 0) return false;
        return true;
    }

    friend bool operator==(const BasedChainComplex& a, const BasedChainComplex& b) {
        return a.basis_ == b.basis_ && a.boundary_ == b.boundary_;
    }

private:
    void validate() {
        if (boundary_.size() != basis_.size() - 1)
            throw DimensionError("expected " + std::to_string(basis_.size() - 1) + " boundary matrices");
        for (int k = 0; k < max_degree(); ++k) {
            const Matrix& m = boundary_[k];
            // an empty matrix is accepted for any pair of sizes that has a zero side
            if (m.rows() * m.cols() == 0 && size(k) * size(k + 1) == 0) {
                boundary_[k] = Matrix(size(k), size(k + 1));
                continue;
            }
            if (m.rows() != size(k) || m.cols() != size(k + 1))
                throw DimensionError("boundary " + std::to_string(k) + " has wrong shape");
        }
        for (int k = 0; k + 1 < max_degree(); ++k)
            if (!(boundary_[k] * boundary_[k + 1]).is_zero())
                throw InconsistentInput("boundary does not square to zero at degree " + std::to_string(k + 2));
        index_.clear();
        for (int k = 0; k <= max_degree(); ++k)
            for (std::size_t i = 0; i < basis_[k].size(); ++i)
                if (!index_.emplace(basis_[k][i], std::make_pair(k, i)).second)
                    throw DuplicateBasisName(basis_[k][i]);
    }

    std::vector<std::vector<std::string>> basis_;
    std::vector<Matrix> boundary_;
    std::map<std::string, std::pair<int, std::size_t>> index_;
};

// Homogeneous endomorphism of degree k. blocks[i] maps C_i -> C_{i+k}, with
// rows indexed by basis(i+k) and columns by basis(i).
struct GradedEndomorphism {
    int degree = 0;
    std::vector<Matrix> blocks;

    static GradedEndomorphism zero(const BasedChainComplex& c, int k) {
        GradedEndomorphism f{k, {}};
        for (int i = 0; i <= c.max_degree(); ++i) f.blocks.emplace_back(c.size(i + k), c.size(i));
        return f;
    }
    static GradedEndomorphism identity(const BasedChainComplex& c) {
        GradedEndomorphism f{0, {}};
        for (int i = 0; i <= c.max_degree(); ++i) f.blocks.push_back(Matrix::identity(c.size(i)));
        return f;
    }
    static GradedEndomorphism boundary(const BasedChainComplex& c) {
        GradedEndomorphism f{-1, {}};
        for (int i = 0; i <= c.max_degree(); ++i) f.blocks.push_back(c.boundary(i - 1));
        return f;
    }

    bool is_zero() const {
        for (const auto& b : blocks)
            if (!b.is_zero()) return false;
        return true;
    }

    // Coefficient of p in f(q).
    Rational entry(const BasedChainComplex& c, const std::string& q, const std::string& p) const {
        auto [dq, iq] = c.locate(q);
        auto [dp, ip] = c.locate(p);
        if (dp != dq + degree) return 0;
        return blocks.at(dq)(ip, iq);
    }
    void set_entry(const BasedChainComplex& c, const std::string& q, const std::string& p, const Rational& v) {
        auto [dq, iq] = c.locate(q);
        auto [dp, ip] = c.locate(p);
        if (dp != dq + degree) throw DegreeError("entry " + q + " -> " + p + " has the wrong degree");
        blocks.at(dq)(ip, iq) = v;
    }

    friend bool operator==(const GradedEndomorphism& a, const GradedEndomorphism& b) {
        return a.degree == b.degree && a.blocks == b.blocks;
    }
};

inline void check_same_shape(const GradedEndomorphism& a, const GradedEndomorphism& b) {
    if (a.degree != b.degree || a.blocks.size() != b.blocks.size())
        throw DimensionError("endomorphisms of different degree or shape");
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        if (a.blocks[i].rows() != b.blocks[i].rows() || a.blocks[i].cols() != b.blocks[i].cols())
            throw DimensionError("endomorphism block shape mismatch");
}

inline GradedEndomorphism operator+(GradedEndomorphism a, const GradedEndomorphism& b) {
    check_same_shape(a, b);
    for (std::size_t i = 0; i < a.blocks.size(); ++i) a.blocks[i] += b.blocks[i];
    return a;
}
inline GradedEndomorphism operator-(GradedEndomorphism a, const GradedEndomorphism& b) {
    check_same_shape(a, b);
    for (std::size_t i = 0; i < a.blocks.size(); ++i) a.blocks[i] -= b.blocks[i];
    return a;
}
inline GradedEndomorphism operator*(const Rational& s, GradedEndomorphism a) {
    for (auto& b : a.blocks) b *= s;
    return a;
}

// Composite a∘b.
inline GradedEndomorphism compose(const GradedEndomorphism& a, const GradedEndomorphism& b) {
    if (a.blocks.size() != b.blocks.size()) throw DimensionError("compose: different complexes");
    const int n = static_cast<int>(a.blocks.size());
    auto size = [&](int j) -> std::size_t { return j < 0 || j >= n ? 0 : b.blocks[j].cols(); };
    GradedEndomorphism c{a.degree + b.degree, {}};
    for (int i = 0; i < n; ++i) {
        int mid = i + b.degree;
        if (mid < 0 || mid >= n)
            c.blocks.emplace_back(size(i + c.degree), size(i));
        else
            c.blocks.push_back(a.blocks[mid] * b.blocks[i]);
    }
    return c;
}

inline void check_on(const GradedEndomorphism& f, const BasedChainComplex& c) {
    if (static_cast<int>(f.blocks.size()) != c.max_degree() + 1)
        throw DimensionError("endomorphism has the wrong number of blocks");
    for (int i = 0; i <= c.max_degree(); ++i)
        if (f.blocks[i].rows() != c.size(i + f.degree) || f.blocks[i].cols() != c.size(i))
            throw DimensionError("endomorphism block " + std::to_string(i) + " has the wrong shape");
}

// ∂∘f + (-1)^{k+1} f∘∂
inline GradedEndomorphism boundary_prime(const GradedEndomorphism& f, const BasedChainComplex& c) {
    check_on(f, c);
    auto d = GradedEndomorphism::boundary(c);
    auto a = compose(d, f);
    auto b = compose(f, d);
    return (f.degree % 2 == 0) ? a - b : a + b;
}

inline bool is_propagator(const GradedEndomorphism& g, const BasedChainComplex& c) {
    return g.degree == 1 && boundary_prime(g, c) == GradedEndomorphism::identity(c);
}

inline void require_acyclic(const BasedChainComplex& c) {
    auto h = c.homology();
    for (auto x : h)
        if (x != 0) {
            std::string s;
            for (std::size_t k = 0; k < h.size(); ++k)
                if (h[k]) s += " H_" + std::to_string(k) + "=" + std::to_string(h[k]);
            throw NoSolution("complex is not acyclic:" + s, h);
        }
}

// Propagator g with ∂g + g∂ = id, solved degree by degree from the bottom:
// ∂_i g_i = id - g_{i-1} ∂_{i-1}, free variables set to zero.
inline GradedEndomorphism solve_propagator(const BasedChainComplex& c) {
    require_acyclic(c);
    auto g = GradedEndomorphism::zero(c, 1);
    for (int i = 0; i < c.max_degree(); ++i) {
        Matrix rhs = Matrix::identity(c.size(i));
        if (i > 0) rhs -= g.blocks[i - 1] * c.boundary(i - 1);
        auto x = solve(c.boundary(i), rhs);
        if (!x) throw NoSolution("propagator system inconsistent", c.homology());
        g.blocks[i] = *x;
    }
    if (!is_propagator(g, c)) throw NoSolution("propagator residual nonzero", c.homology());
    return g;
}

// h of degree 2 with ∂h - h∂ = g - g2.
inline GradedEndomorphism solve_homotopy(const BasedChainComplex& c, const GradedEndomorphism& g,
                                         const GradedEndomorphism& g2) {
    check_on(g, c);
    check_on(g2, c);
    auto e = g - g2;
    if (!boundary_prime(e, c).is_zero()) throw InconsistentInput("g - g2 is not a cycle");
    require_acyclic(c);
    auto h = GradedEndomorphism::zero(c, 2);
    for (int i = 0; i + 2 <= c.max_degree(); ++i) {
        Matrix rhs = e.blocks[i];
        if (i > 0) rhs += h.blocks[i - 1] * c.boundary(i - 1);
        auto x = solve(c.boundary(i + 1), rhs);
        if (!x) throw InconsistentInput("homotopy system inconsistent at degree " + std::to_string(i));
        h.blocks[i] = *x;
    }
    if (!(boundary_prime(h, c) == e)) throw InconsistentInput("homotopy residual nonzero");
    return h;
}

// New boundary ∂ + ∂h - h∂. Requires h² = 0 and h∂h = 0, which together make
// the new boundary equal to (1-h)∂(1+h).
inline BasedChainComplex handle_slide_boundary(const BasedChainComplex& c, const GradedEndomorphism& h) {
    check_on(h, c);
    if (h.degree != 0) throw InvalidHomotopy("h must have degree 0");
    if (!compose(h, h).is_zero()) throw InvalidHomotopy("h is not square-zero");
    auto d = GradedEndomorphism::boundary(c);
    if (!compose(h, compose(d, h)).is_zero()) throw InvalidHomotopy("h∂h is nonzero");
    auto dn = d + compose(d, h) - compose(h, d);
    std::vector<Matrix> bd;
    for (int k = 0; k < c.max_degree(); ++k) bd.push_back(dn.blocks[k + 1]);
    return BasedChainComplex(c.bases(), bd);
}

// (1-h) g (1+h)
inline GradedEndomorphism transport_propagator(const GradedEndomorphism& g, const GradedEndomorphism& h) {
    if (h.degree != 0) throw InvalidHomotopy("h must have degree 0");
    auto gh = compose(g, h);
    auto hg = compose(h, g);
    return g + gh - hg - compose(h, gh);
}

// Adjoins p in degree i+1 and q in degree i with ∂p = q.
inline BasedChainComplex direct_sum_with_elementary(const BasedChainComplex& c, int i, const std::string& p,
                                                    const std::string& q) {
    if (i < 0) throw InvalidDegree("elementary pair needs degree >= 0");
    if (p == q || c.contains(p) || c.contains(q)) throw DuplicateBasisName(c.contains(p) ? p : q);
    int top = std::max(c.max_degree(), i + 1);
    std::vector<std::vector<std::string>> basis(top + 1);
    for (int k = 0; k <= c.max_degree(); ++k) basis[k] = c.basis(k);
    basis[i + 1].push_back(p);
    basis[i].push_back(q);
    std::vector<Matrix> bd;
    for (int k = 0; k < top; ++k) {
        Matrix m(basis[k].size(), basis[k + 1].size());
        Matrix old = c.boundary(k);
        for (std::size_t r = 0; r < old.rows(); ++r)
            for (std::size_t s = 0; s < old.cols(); ++s) m(r, s) = old(r, s);
        if (k == i) m(basis[k].size() - 1, basis[k + 1].size() - 1) = 1;
        bd.push_back(std::move(m));
    }
    return BasedChainComplex(basis, bd);
}

// Re-expresses f on a complex whose bases extend those of f's complex,
// filling new rows and columns with zeros.
inline GradedEndomorphism embed(const GradedEndomorphism& f, const BasedChainComplex& from,
                                const BasedChainComplex& to) {
    auto out = GradedEndomorphism::zero(to, f.degree);
    for (int i = 0; i <= from.max_degree(); ++i) {
        int j = i + f.degree;
        if (j < 0 || j > from.max_degree()) continue;
        for (std::size_t a = 0; a < from.size(i); ++a)
            for (std::size_t b = 0; b < from.size(j); ++b) {
                const Rational& v = f.blocks[i](b, a);
                if (v != 0) out.set_entry(to, from.basis(i)[a], from.basis(j)[b], v);
            }
    }
    return out;
}

// g ⊕ g^elem on the complex returned by direct_sum_with_elementary.
inline GradedEndomorphism extend_propagator(const GradedEndomorphism& g, const BasedChainComplex& from,
                                            const BasedChainComplex& to, const std::string& p,
                                            const std::string& q) {
    auto out = embed(g, from, to);
    out.set_entry(to, q, p, 1);
    return out;
}

// C/<a,b> for a top generator a and a degree-0 generator b.
inline BasedChainComplex quotient_complex(const BasedChainComplex& c, const std::string& a, const std::string& b) {
    auto [da, ia] = c.locate(a);
    auto [db, ib] = c.locate(b);
    if (da != c.max_degree() || db != 0) throw InvalidDegree("a must be top degree and b degree 0");
    if (da == 1) {
        for (std::size_t r = 0; r < c.size(0); ++r)
            if (r != ib && c.boundary(0)(r, ia) != 0) throw InconsistentInput("<a,b> is not a subcomplex");
    } else if (da > 0 && !c.boundary(da - 1).is_zero()) {
        Matrix m = c.boundary(da - 1);
        for (std::size_t r = 0; r < m.rows(); ++r)
            if (m(r, ia) != 0) throw InconsistentInput("<a,b> is not a subcomplex");
    }
    std::vector<std::vector<std::string>> basis = c.bases();
    basis[da].erase(basis[da].begin() + ia);
    basis[db].erase(basis[db].begin() + ib);
    std::vector<Matrix> bd;
    for (int k = 0; k < c.max_degree(); ++k) {
        Matrix old = c.boundary(k);
        Matrix m(basis[k].size(), basis[k + 1].size());
        for (std::size_t r = 0, rr = 0; r < old.rows(); ++r) {
            if (k == db && r == ib) continue;
            for (std::size_t s = 0, ss = 0; s < old.cols(); ++s) {
                if (k + 1 == da && s == ia) continue;
                m(rr, ss++) = old(r, s);
            }
            ++rr;
        }
        bd.push_back(std::move(m));
    }
    BasedChainComplex q(basis, bd);
    require_acyclic(q);
    return q;
}

// ---- JSON ----

inline nlohmann::json matrix_to_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(to_string(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    if (!j.is_array()) throw ParseError("matrix must be an array of rows");
    if (j.size() != rows && !(rows * cols == 0 && j.empty())) throw DimensionError("matrix row count mismatch");
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) throw DimensionError("matrix column count mismatch");
        for (std::size_t c = 0; c < cols; ++c) {
            const auto& x = j[r][c];
            m(r, c) = x.is_string() ? parse_rational(x.get<std::string>()) : Rational(x.get<long>());
        }
    }
    return m;
}

inline nlohmann::json to_json(const BasedChainComplex& c) {
    nlohmann::json j;
    j["max_degree"] = c.max_degree();
    j["basis"] = c.bases();
    auto bd = nlohmann::json::array();
    for (int k = 0; k < c.max_degree(); ++k) bd.push_back(matrix_to_json(c.boundary(k)));
    j["boundary"] = bd;
    return j;
}

inline BasedChainComplex complex_from_json(const nlohmann::json& j) {
    try {
        int d = j.at("max_degree").get<int>();
        auto basis = j.at("basis").get<std::vector<std::vector<std::string>>>();
        if (static_cast<int>(basis.size()) != d + 1) throw DimensionError("basis length must be max_degree+1");
        std::vector<Matrix> bd;
        const auto& jb = j.at("boundary");
        if (static_cast<int>(jb.size()) != d) throw DimensionError("boundary length must be max_degree");
        for (int k = 0; k < d; ++k) bd.push_back(matrix_from_json(jb[k], basis[k].size(), basis[k + 1].size()));
        return BasedChainComplex(basis, bd);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("complex JSON: ") + e.what());
    }
}

inline nlohmann::json to_json(const GradedEndomorphism& f) {
    nlohmann::json j;
    j["degree"] = f.degree;
    auto b = nlohmann::json::array();
    for (const auto& m : f.blocks) b.push_back(matrix_to_json(m));
    j["blocks"] = b;
    return j;
}

inline GradedEndomorphism endomorphism_from_json(const nlohmann::json& j, const BasedChainComplex& c) {
    try {
        auto f = GradedEndomorphism::zero(c, j.at("degree").get<int>());
        const auto& b = j.at("blocks");
        if (b.size() != f.blocks.size()) throw DimensionError("wrong number of blocks");
        for (std::size_t i = 0; i < b.size(); ++i)
            f.blocks[i] = matrix_from_json(b[i], f.blocks[i].rows(), f.blocks[i].cols());
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("endomorphism JSON: ") + e.what());
    }
}

}  // namespace mgk
