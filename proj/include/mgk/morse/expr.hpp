#pragma once

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "mgk/errors.hpp"

namespace mgk::morse {

// Value, gradient and (optionally) packed Hessian in three variables.
// Hessian layout: 00 01 02 11 12 22.
template <bool Hess>
struct JetT {
    double v = 0;
    std::array<double, 3> g{};
    std::array<double, 6> h{};

    static JetT constant(double c) {
        JetT j;
        j.v = c;
        return j;
    }
    static JetT variable(double x, int i) {
        JetT j;
        j.v = x;
        j.g[i] = 1;
        return j;
    }
    double hess(int i, int k) const {
        static constexpr int idx[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
        return h[idx[i][k]];
    }
};

using Grad = JetT<false>;
using Jet = JetT<true>;

namespace detail {
inline constexpr int pi_[6] = {0, 0, 0, 1, 1, 2};
inline constexpr int pk_[6] = {0, 1, 2, 1, 2, 2};
}  // namespace detail

// f(a) given f, f', f''.
template <bool H>
JetT<H> chain(const JetT<H>& a, double f0, double f1, double f2) {
    JetT<H> r;
    r.v = f0;
    for (int i = 0; i < 3; ++i) r.g[i] = f1 * a.g[i];
    if constexpr (H)
        for (int s = 0; s < 6; ++s) r.h[s] = f1 * a.h[s] + f2 * a.g[detail::pi_[s]] * a.g[detail::pk_[s]];
    return r;
}

template <bool H>
JetT<H> operator+(JetT<H> a, const JetT<H>& b) {
    a.v += b.v;
    for (int i = 0; i < 3; ++i) a.g[i] += b.g[i];
    if constexpr (H)
        for (int s = 0; s < 6; ++s) a.h[s] += b.h[s];
    return a;
}

template <bool H>
JetT<H> operator-(JetT<H> a) {
    a.v = -a.v;
    for (auto& x : a.g) x = -x;
    if constexpr (H)
        for (auto& x : a.h) x = -x;
    return a;
}

template <bool H>
JetT<H> operator-(const JetT<H>& a, const JetT<H>& b) {
    return a + (-b);
}

template <bool H>
JetT<H> operator*(const JetT<H>& a, const JetT<H>& b) {
    JetT<H> r;
    r.v = a.v * b.v;
    for (int i = 0; i < 3; ++i) r.g[i] = a.g[i] * b.v + a.v * b.g[i];
    if constexpr (H)
        for (int s = 0; s < 6; ++s) {
            int i = detail::pi_[s], k = detail::pk_[s];
            r.h[s] = a.h[s] * b.v + a.v * b.h[s] + a.g[i] * b.g[k] + a.g[k] * b.g[i];
        }
    return r;
}

template <bool H>
JetT<H> operator*(double c, JetT<H> a) {
    a.v *= c;
    for (auto& x : a.g) x *= c;
    if constexpr (H)
        for (auto& x : a.h) x *= c;
    return a;
}

template <bool H>
JetT<H> reciprocal(const JetT<H>& a) {
    double i = 1 / a.v;
    return chain(a, i, -i * i, 2 * i * i * i);
}

template <bool H>
JetT<H> operator/(const JetT<H>& a, const JetT<H>& b) {
    return a * reciprocal(b);
}

// Scalar math dispatch so Expr::eval works for double and jets alike.
inline double apply_fn(int fn, double x);
template <bool H>
JetT<H> apply_fn(int fn, const JetT<H>& a);

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, PowInt, Pow, Fn };

enum Fn { Sin, Cos, Tan, Exp, Log, Sqrt, Atan, Sinh, Cosh, Tanh };

inline double apply_fn(int fn, double x) {
    switch (fn) {
        case Sin: return std::sin(x);
        case Cos: return std::cos(x);
        case Tan: return std::tan(x);
        case Exp: return std::exp(x);
        case Log: return std::log(x);
        case Sqrt: return std::sqrt(x);
        case Atan: return std::atan(x);
        case Sinh: return std::sinh(x);
        case Cosh: return std::cosh(x);
        case Tanh: return std::tanh(x);
    }
    return 0;
}

template <bool H>
JetT<H> apply_fn(int fn, const JetT<H>& a) {
    double x = a.v;
    switch (fn) {
        case Sin: return chain(a, std::sin(x), std::cos(x), -std::sin(x));
        case Cos: return chain(a, std::cos(x), -std::sin(x), -std::cos(x));
        case Tan: {
            double t = std::tan(x), s = 1 + t * t;
            return chain(a, t, s, 2 * t * s);
        }
        case Exp: {
            double e = std::exp(x);
            return chain(a, e, e, e);
        }
        case Log: return chain(a, std::log(x), 1 / x, -1 / (x * x));
        case Sqrt: {
            double r = std::sqrt(x);
            return chain(a, r, 0.5 / r, -0.25 / (r * x));
        }
        case Atan: {
            double d = 1 / (1 + x * x);
            return chain(a, std::atan(x), d, -2 * x * d * d);
        }
        case Sinh: return chain(a, std::sinh(x), std::cosh(x), std::sinh(x));
        case Cosh: return chain(a, std::cosh(x), std::sinh(x), std::cosh(x));
        case Tanh: {
            double t = std::tanh(x), s = 1 - t * t;
            return chain(a, t, s, -2 * t * s);
        }
    }
    return a;
}

template <class T>
T make_const(double c) {
    if constexpr (std::is_same_v<T, double>)
        return c;
    else
        return T::constant(c);
}

template <class T>
T int_power(const T& a, int n) {
    if (n < 0) {
        if constexpr (std::is_same_v<T, double>)
            return 1 / int_power(a, -n);
        else
            return reciprocal(int_power(a, -n));
    }
    T r = make_const<T>(1);
    T b = a;
    while (n) {
        if (n & 1) r = r * b;
        n >>= 1;
        if (n) b = b * b;
    }
    return r;
}

// Arithmetic expression over named variables, stored in evaluation order.
// Grammar: sums, products, unary minus, right-associative '^', calls to
// sin cos tan exp log sqrt atan sinh cosh tanh, the constant pi.
class Expr {
public:
    struct Node {
        Op op;
        int a = -1, b = -1;
        double value = 0;
        int index = 0;
    };

    Expr() = default;

    static Expr parse(std::string_view src, std::vector<std::string> vars) {
        Expr e;
        e.vars_ = std::move(vars);
        e.source_ = std::string(src);
        Parser p{src, e};
        e.root_ = p.expr();
        p.skip();
        if (p.pos != src.size()) p.fail("unexpected '" + std::string(1, src[p.pos]) + "'");
        return e;
    }

    const std::string& source() const { return source_; }
    const std::vector<std::string>& variables() const { return vars_; }
    bool empty() const { return nodes_.empty(); }

    template <class T>
    T eval(std::span<const T> x) const {
        thread_local std::vector<T> buf;
        buf.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node& n = nodes_[i];
            switch (n.op) {
                case Op::Const: buf[i] = make_const<T>(n.value); break;
                case Op::Var: buf[i] = x[n.index]; break;
                case Op::Add: buf[i] = buf[n.a] + buf[n.b]; break;
                case Op::Sub: buf[i] = buf[n.a] - buf[n.b]; break;
                case Op::Mul: buf[i] = buf[n.a] * buf[n.b]; break;
                case Op::Div: buf[i] = buf[n.a] / buf[n.b]; break;
                case Op::Neg: buf[i] = -buf[n.a]; break;
                case Op::PowInt: buf[i] = int_power(buf[n.a], n.index); break;
                case Op::Pow:
                    buf[i] = apply_fn(Exp, buf[n.b] * apply_fn(Log, buf[n.a]));
                    break;
                case Op::Fn: buf[i] = apply_fn(n.index, buf[n.a]); break;
            }
        }
        return buf[root_];
    }

private:
    int push(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    struct Parser {
        std::string_view s;
        Expr& e;
        std::size_t pos = 0;

        [[noreturn]] void fail(const std::string& msg) {
            throw ParseError("expression '" + std::string(s) + "' at " + std::to_string(pos) + ": " + msg);
        }
        void skip() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }
        bool eat(char c) {
            skip();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }
        int expr() {
            int l = term();
            for (;;) {
                if (eat('+'))
                    l = e.push({Op::Add, l, term()});
                else if (eat('-'))
                    l = e.push({Op::Sub, l, term()});
                else
                    return l;
            }
        }
        int term() {
            int l = unary();
            for (;;) {
                if (eat('*'))
                    l = e.push({Op::Mul, l, unary()});
                else if (eat('/'))
                    l = e.push({Op::Div, l, unary()});
                else
                    return l;
            }
        }
        int unary() {
            if (eat('-')) return e.push({Op::Neg, unary()});
            if (eat('+')) return unary();
            return power();
        }
        int power() {
            int base = primary();
            if (!eat('^')) return base;
            int ex = unary();
            const Node& n = e.nodes_[ex];
            if (n.op == Op::Const && n.value == std::round(n.value) && std::abs(n.value) < 64) {
                Node p{Op::PowInt, base};
                p.index = static_cast<int>(n.value);
                return e.push(p);
            }
            return e.push({Op::Pow, base, ex});
        }
        int primary() {
            skip();
            if (pos >= s.size()) fail("unexpected end");
            if (eat('(')) {
                int r = expr();
                if (!eat(')')) fail("missing ')'");
                return r;
            }
            char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                double v = 0;
                auto [ptr, ec] = std::from_chars(s.data() + pos, s.data() + s.size(), v);
                if (ec != std::errc()) fail("bad number");
                pos = ptr - s.data();
                Node n{Op::Const};
                n.value = v;
                return e.push(n);
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t b = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_')) ++pos;
                std::string id(s.substr(b, pos - b));
                static const char* fns[] = {"sin", "cos", "tan", "exp", "log", "sqrt", "atan", "sinh", "cosh", "tanh"};
                for (int f = 0; f < 10; ++f)
                    if (id == fns[f]) {
                        if (!eat('(')) fail("expected '(' after " + id);
                        int a = expr();
                        if (!eat(')')) fail("missing ')'");
                        Node n{Op::Fn, a};
                        n.index = f;
                        return e.push(n);
                    }
                if (id == "pi") {
                    Node n{Op::Const};
                    n.value = M_PI;
                    return e.push(n);
                }
                for (std::size_t v = 0; v < e.vars_.size(); ++v)
                    if (e.vars_[v] == id) {
                        Node n{Op::Var};
                        n.index = static_cast<int>(v);
                        return e.push(n);
                    }
                pos = b;
                fail("unknown identifier '" + id + "'");
            }
            fail("unexpected '" + std::string(1, c) + "'");
        }
    };

    std::vector<std::string> vars_;
    std::string source_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace mgk::morse
