#include "tocheck/rational.hpp"

#include <charconv>
#include <stdexcept>

namespace tocheck {

std::int64_t floor_of(const Rational& x) {
  std::int64_t n = x.numerator();
  std::int64_t d = x.denominator();  // always positive
  std::int64_t q = n / d;
  if (n % d != 0 && n < 0) --q;
  return q;
}

std::int64_t ceil_of(const Rational& x) {
  std::int64_t f = floor_of(x);
  return is_integral(x) ? f : f + 1;
}

std::string to_string(const Rational& x) {
  if (x.denominator() == 1) return std::to_string(x.numerator());
  return std::to_string(x.numerator()) + "/" + std::to_string(x.denominator());
}

namespace {

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw std::invalid_argument("not a rational number: '" + std::string(s) + "'");
  return v;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    auto dot = text.find('.');
    if (dot == std::string_view::npos) return Rational(parse_int(text));
    // Decimal notation such as 0.25.
    const std::string_view frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 12 || frac.front() == '-' || frac.front() == '+')
      throw std::invalid_argument("not a rational number: '" + std::string(text) + "'");
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::string_view whole = text.substr(0, dot);
    const bool negative = !whole.empty() && whole.front() == '-';
    const std::int64_t w = (whole.empty() || whole == "-") ? 0 : parse_int(whole);
    const std::int64_t f = parse_int(frac);
    const std::int64_t mag = (w < 0 ? -w : w) * scale + f;
    return Rational(negative ? -mag : mag, scale);
  }
  std::int64_t d = parse_int(text.substr(slash + 1));
  if (d == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
  return Rational(parse_int(text.substr(0, slash)), d);
}

}  // namespace tocheck
