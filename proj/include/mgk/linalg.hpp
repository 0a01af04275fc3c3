#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "mgk/errors.hpp"
#include "mgk/rational.hpp"

namespace mgk {

// Dense row-major matrix over Q.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rational& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    bool is_zero() const {
        return std::all_of(data_.begin(), data_.end(), [](const Rational& x) { return x == 0; });
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    Matrix& operator+=(const Matrix& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(const Rational& s) {
        for (auto& x : data_) x *= s;
        return *this;
    }
    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const Rational& s) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= Rational(-1); }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw DimensionError("matrix product shape mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i)
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const Rational& x = a(i, k);
                if (x == 0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j)
                    if (b(k, j) != 0) c(i, j) += x * b(k, j);
            }
        return c;
    }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

private:
    void check_same(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionError("matrix shape mismatch");
    }

    std::size_t rows_ = 0, cols_ = 0;
    std::vector<Rational> data_;
};

// Reduced row echelon form in place; returns pivot columns. Pivots are
// chosen as the first nonzero entry in column order, so results are
// deterministic.
inline std::vector<std::size_t> rref(Matrix& m) {
    std::vector<std::size_t> pivots;
    std::size_t r = 0;
    for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
        std::size_t p = r;
        while (p < m.rows() && m(p, c) == 0) ++p;
        if (p == m.rows()) continue;
        if (p != r)
            for (std::size_t j = 0; j < m.cols(); ++j) std::swap(m(p, j), m(r, j));
        Rational inv = 1 / m(r, c);
        for (std::size_t j = c; j < m.cols(); ++j) m(r, j) *= inv;
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i == r || m(i, c) == 0) continue;
            Rational f = m(i, c);
            for (std::size_t j = c; j < m.cols(); ++j)
                if (m(r, j) != 0) m(i, j) -= f * m(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

inline std::size_t rank(Matrix m) { return rref(m).size(); }

// Solve A X = B with free variables set to zero. Returns nullopt if inconsistent.
inline std::optional<Matrix> solve(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("solve: row mismatch");
    Matrix aug(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) aug(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols(); ++j) aug(i, a.cols() + j) = b(i, j);
    }
    auto piv = rref(aug);
    Matrix x(a.cols(), b.cols());
    for (std::size_t r = 0; r < piv.size(); ++r) {
        if (piv[r] >= a.cols()) return std::nullopt;
        for (std::size_t j = 0; j < b.cols(); ++j) x(piv[r], j) = aug(r, a.cols() + j);
    }
    return x;
}

// Basis of the right null space, one vector per free column.
inline std::vector<std::vector<Rational>> nullspace(Matrix m) {
    auto piv = rref(m);
    std::vector<bool> is_piv(m.cols(), false);
    for (auto c : piv) is_piv[c] = true;
    std::vector<std::vector<Rational>> basis;
    for (std::size_t f = 0; f < m.cols(); ++f) {
        if (is_piv[f]) continue;
        std::vector<Rational> v(m.cols());
        v[f] = 1;
        for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m(r, f);
        basis.push_back(std::move(v));
    }
    return basis;
}

// Sparse vector keyed by column index, ordered.
using SparseVec = std::map<std::size_t, Rational>;

inline void axpy(SparseVec& y, const Rational& a, const SparseVec& x) {
    for (const auto& [c, v] : x) {
        auto [it, fresh] = y.try_emplace(c, 0);
        it->second += a * v;
        if (it->second == 0) y.erase(it);
    }
}

// Incremental echelon basis of a row space. Every stored row has a distinct
// leading column normalized to 1; normal_form reduces in ascending column
// order, which gives a unique representative modulo the span.
class Echelon {
public:
    // Returns true if the row was independent of the current span.
    bool add(SparseVec row) {
        reduce(row);
        if (row.empty()) return false;
        Rational inv = 1 / row.begin()->second;
        for (auto& [c, v] : row) v *= inv;
        std::size_t lead = row.begin()->first;
        rows_.emplace(lead, std::move(row));
        return true;
    }

    void reduce(SparseVec& v) const {
        auto it = v.begin();
        while (it != v.end()) {
            auto p = rows_.find(it->first);
            if (p == rows_.end()) {
                ++it;
                continue;
            }
            std::size_t c = it->first;
            Rational f = it->second;
            axpy(v, -f, p->second);
            it = v.upper_bound(c);
        }
    }

    SparseVec normal_form(SparseVec v) const {
        reduce(v);
        return v;
    }

    bool is_pivot(std::size_t c) const { return rows_.count(c) != 0; }
    std::size_t rank() const { return rows_.size(); }
    const std::map<std::size_t, SparseVec>& rows() const { return rows_; }

private:
    std::map<std::size_t, SparseVec> rows_;
};

}  // namespace mgk
