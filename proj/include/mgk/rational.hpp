#pragma once

#include <gmpxx.h>

#include <string>

#include "mgk/errors.hpp"

namespace mgk {

using Rational = mpq_class;

// Always "p/q", including integers ("3/1"), so serialized matrices are uniform.
inline std::string to_string(const Rational& x) {
    return x.get_num().get_str() + "/" + x.get_den().get_str();
}

inline Rational parse_rational(const std::string& s) {
    Rational r;
    if (s.empty() || r.set_str(s, 10) != 0) throw ParseError("bad rational '" + s + "'");
    if (r.get_den() == 0) throw ParseError("zero denominator in '" + s + "'");
    r.canonicalize();
    return r;
}

inline int sgn(const Rational& x) { return ::sgn(x); }

}  // namespace mgk
