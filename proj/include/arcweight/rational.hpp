#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <stdexcept>
#include <string>

namespace arcweight {

/// Exact rational coefficient type. boost keeps values in lowest terms with a
/// positive denominator, which is the canonical form every module relies on.
/// Expression templates are off so values behave like plain numbers with
/// std::min/max, auto, and friends.
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;
using Rational =
    boost::multiprecision::number<boost::multiprecision::backends::rational_adaptor<
                                      boost::multiprecision::cpp_int_backend<>>,
                                  boost::multiprecision::et_off>;

inline Rational rat(long long n, long long d = 1) { return Rational(n, d); }

inline Rational abs_rat(const Rational& r) { return r < 0 ? Rational(-r) : r; }

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Parses "n", "-n" or "n/d" exactly; anything else (floats included) throws.
inline Rational parse_rational(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty rational literal");
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            if (s.find('.') != std::string::npos || s.find('e') != std::string::npos ||
                s.find('E') != std::string::npos)
                throw std::invalid_argument("float literal");
            return Rational(BigInt(s));
        }
        BigInt num(s.substr(0, slash));
        BigInt den(s.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator");
        return Rational(num, den);
    } catch (const std::runtime_error&) {
        throw std::invalid_argument("not an integer-fraction literal: '" + s + "'");
    }
}

/// Serializes as "n" or "n/d" (den > 0), the wire form used everywhere.
inline std::string format_rational(const Rational& r) {
    std::string s = numerator(r).str();
    if (denominator(r) != 1) s += "/" + denominator(r).str();
    return s;
}

inline Rational pow_rat(const Rational& r, unsigned e) {
    Rational acc(1), base = r;
    while (e) {
        if (e & 1u) acc *= base;
        base *= base;
        e >>= 1u;
    }
    return acc;
}

/// |r|^(1/root) in floating point; the exact radicand travels alongside in reports.
inline double rational_root(const Rational& r, unsigned root) {
    if (root == 0) throw std::invalid_argument("zeroth root");
    double num = numerator(r).convert_to<double>();
    double den = denominator(r).convert_to<double>();
    return std::pow(std::fabs(num / den), 1.0 / static_cast<double>(root));
}

}  // namespace arcweight
