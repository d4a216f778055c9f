#pragma once

// Scalar types shared by every module: exact rationals (GMP) for polynomial
// identities and variable-precision binary floats (MPFR) for everything that
// depends on quadrature nodes.

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eprk {

using Rational =
    boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                  boost::multiprecision::et_off>;
using Integer =
    boost::multiprecision::number<boost::multiprecision::gmp_int,
                                  boost::multiprecision::et_off>;
using Real =
    boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>,
                                  boost::multiprecision::et_off>;

using RationalVec = std::vector<Rational>;
using RealVec = std::vector<Real>;

inline constexpr unsigned kDefaultPrecisionDigits = 50;

// Malformed input, dimension mismatch, violated preconditions.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Quadrature construction rejected (complex, repeated or misplaced nodes).
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Working precision too low to make the requested decision.
class PrecisionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A consistency check that can only fail through a programming error.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Sets the MPFR default precision (decimal digits) and restores the previous
// value on scope exit. The default is process-wide in this Boost version, so
// the setting is only written when it actually changes; parallel jobs must
// agree on one precision.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned digits)
      : saved_(Real::default_precision()) {
    if (digits != saved_) Real::default_precision(digits);
  }
  ~PrecisionScope() {
    if (Real::default_precision() != saved_) Real::default_precision(saved_);
  }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_;
};

inline unsigned current_precision_digits() { return Real::default_precision(); }

inline Real to_real(const Rational& q) {
  return Real(boost::multiprecision::numerator(q)) /
         Real(boost::multiprecision::denominator(q));
}

// 10^(-k) in the current precision.
inline Real pow10_neg(int k) { return boost::multiprecision::pow(Real(10), -k); }

// Accepts "n", "n/d", and decimal forms such as "-0.125" or "5e9"; the
// result is the exact rational value of the literal.
Rational parse_rational(std::string_view text);

// Decimal string with `digits` significant digits (scientific form).
std::string to_decimal(const Real& x, unsigned digits);

// "n/d" or "n" when the denominator is 1.
std::string to_string(const Rational& q);

Integer factorial(unsigned n);

}  // namespace eprk
