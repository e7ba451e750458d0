#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <boost/rational.hpp>

namespace tocheck {

using Rational = boost::rational<std::int64_t>;

std::int64_t floor_of(const Rational& x);
std::int64_t ceil_of(const Rational& x);
inline bool is_integral(const Rational& x) { return x.denominator() == 1; }

// "7" for integers, "7/2" otherwise; the inverse of parse_rational.
std::string to_string(const Rational& x);

// Accepts "p", "-p" and "p/q"; throws std::invalid_argument otherwise.
Rational parse_rational(std::string_view text);

}  // namespace tocheck
