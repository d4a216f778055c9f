#pragma once

#include "eprk/numeric.hpp"

#include <string>
#include <utility>
#include <vector>

namespace eprk {

// Exact univariate polynomial, coefficient k belongs to x^k. Trailing zeros
// are trimmed so the zero polynomial has no coefficients and degree -1.
class UniPoly {
 public:
  UniPoly() = default;
  explicit UniPoly(RationalVec coeffs);
  UniPoly(std::initializer_list<Rational> coeffs);

  static UniPoly constant(const Rational& a);
  static UniPoly monomial(unsigned k, const Rational& a = 1);

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  bool is_zero() const { return c_.empty(); }
  const RationalVec& coeffs() const { return c_; }
  Rational coeff(std::size_t k) const { return k < c_.size() ? c_[k] : Rational(0); }
  Rational leading() const { return c_.empty() ? Rational(0) : c_.back(); }
  bool is_monic() const { return !c_.empty() && c_.back() == 1; }

  UniPoly derivative() const;
  // Antiderivative vanishing at 0.
  UniPoly antiderivative() const;
  Rational integral01() const;

  Rational eval(const Rational& x) const;
  Real eval(const Real& x) const;
  double eval(double x) const;

  UniPoly& operator+=(const UniPoly& o);
  UniPoly& operator-=(const UniPoly& o);
  UniPoly& operator*=(const Rational& a);

  friend bool operator==(const UniPoly&, const UniPoly&) = default;

  std::string str() const;

 private:
  void trim();
  RationalVec c_;
};

UniPoly operator+(UniPoly a, const UniPoly& b);
UniPoly operator-(UniPoly a, const UniPoly& b);
UniPoly operator-(const UniPoly& a);
UniPoly operator*(const UniPoly& a, const UniPoly& b);
UniPoly operator*(const Rational& s, UniPoly a);

// Euclidean division; throws InputError on a zero divisor.
std::pair<UniPoly, UniPoly> divmod(const UniPoly& a, const UniPoly& b);
UniPoly gcd(UniPoly a, UniPoly b);

// Monic rescaling; throws InputError on zero.
UniPoly make_monic(const UniPoly& p);

}  // namespace eprk
