#include "eprk/numeric.hpp"

#include <cctype>
#include <sstream>

namespace eprk {

namespace {

Integer pow10(unsigned k) {
  Integer r = 1;
  for (unsigned i = 0; i < k; ++i) r *= 10;
  return r;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return false;
  return true;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  if (s.empty()) throw InputError("empty rational literal");

  bool negative = false;
  std::string_view body = s;
  if (body.front() == '+' || body.front() == '-') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }

  Rational value;
  if (auto slash = body.find('/'); slash != std::string_view::npos) {
    auto num = body.substr(0, slash);
    auto den = body.substr(slash + 1);
    if (!all_digits(num) || !all_digits(den))
      throw InputError("malformed rational literal '" + std::string(text) + "'");
    Integer d{std::string(den)};
    if (d == 0) throw InputError("zero denominator in '" + std::string(text) + "'");
    value = Rational(Integer(std::string(num)), d);
  } else {
    std::string_view mantissa = body;
    long exponent = 0;
    if (auto e = body.find_first_of("eE"); e != std::string_view::npos) {
      mantissa = body.substr(0, e);
      auto exp_text = body.substr(e + 1);
      bool exp_negative = false;
      if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
        exp_negative = exp_text.front() == '-';
        exp_text.remove_prefix(1);
      }
      if (!all_digits(exp_text) || exp_text.size() > 6)
        throw InputError("malformed exponent in '" + std::string(text) + "'");
      exponent = std::stol(std::string(exp_text));
      if (exp_negative) exponent = -exponent;
    }
    std::string digits;
    long frac_len = 0;
    if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
      auto ip = mantissa.substr(0, dot);
      auto fp = mantissa.substr(dot + 1);
      if ((!ip.empty() && !all_digits(ip)) || (!fp.empty() && !all_digits(fp)) ||
          (ip.empty() && fp.empty()))
        throw InputError("malformed decimal literal '" + std::string(text) + "'");
      digits = std::string(ip) + std::string(fp);
      frac_len = static_cast<long>(fp.size());
    } else {
      if (!all_digits(mantissa))
        throw InputError("malformed number '" + std::string(text) + "'");
      digits = std::string(mantissa);
    }
    Integer n{digits};
    long shift = exponent - frac_len;
    if (shift >= 0)
      value = Rational(n * pow10(static_cast<unsigned>(shift)));
    else
      value = Rational(n, pow10(static_cast<unsigned>(-shift)));
  }
  return negative ? Rational(-value) : value;
}

std::string to_decimal(const Real& x, unsigned digits) {
  // In scientific form the stream precision counts digits after the point.
  return x.str(static_cast<std::streamsize>(digits > 0 ? digits - 1 : 0), std::ios_base::scientific);
}

std::string to_string(const Rational& q) {
  std::ostringstream out;
  out << q;
  return out.str();
}

Integer factorial(unsigned n) {
  Integer r = 1;
  for (unsigned k = 2; k <= n; ++k) r *= k;
  return r;
}

}  // namespace eprk
