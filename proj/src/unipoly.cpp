#include "eprk/unipoly.hpp"

#include <sstream>

namespace eprk {

UniPoly::UniPoly(RationalVec coeffs) : c_(std::move(coeffs)) { trim(); }

UniPoly::UniPoly(std::initializer_list<Rational> coeffs) : c_(coeffs) { trim(); }

UniPoly UniPoly::constant(const Rational& a) { return UniPoly(RationalVec{a}); }

UniPoly UniPoly::monomial(unsigned k, const Rational& a) {
  RationalVec c(k + 1, Rational(0));
  c[k] = a;
  return UniPoly(std::move(c));
}

void UniPoly::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

UniPoly UniPoly::derivative() const {
  if (c_.size() <= 1) return {};
  RationalVec d(c_.size() - 1);
  for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * static_cast<long>(k);
  return UniPoly(std::move(d));
}

UniPoly UniPoly::antiderivative() const {
  if (c_.empty()) return {};
  RationalVec a(c_.size() + 1, Rational(0));
  for (std::size_t k = 0; k < c_.size(); ++k) a[k + 1] = c_[k] / static_cast<long>(k + 1);
  return UniPoly(std::move(a));
}

Rational UniPoly::integral01() const {
  Rational s = 0;
  for (std::size_t k = 0; k < c_.size(); ++k) s += c_[k] / static_cast<long>(k + 1);
  return s;
}

Rational UniPoly::eval(const Rational& x) const {
  Rational r = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
  return r;
}

Real UniPoly::eval(const Real& x) const {
  Real r = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + to_real(*it);
  return r;
}

double UniPoly::eval(double x) const {
  double r = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + it->convert_to<double>();
  return r;
}

UniPoly& UniPoly::operator+=(const UniPoly& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), Rational(0));
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
  trim();
  return *this;
}

UniPoly& UniPoly::operator-=(const UniPoly& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), Rational(0));
  for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
  trim();
  return *this;
}

UniPoly& UniPoly::operator*=(const Rational& a) {
  for (auto& x : c_) x *= a;
  trim();
  return *this;
}

std::string UniPoly::str() const {
  if (c_.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (std::size_t k = c_.size(); k-- > 0;) {
    if (c_[k] == 0) continue;
    if (!first) out << " + ";
    first = false;
    out << "(" << c_[k] << ")";
    if (k >= 1) out << "x";
    if (k >= 2) out << "^" << k;
  }
  return out.str();
}

UniPoly operator+(UniPoly a, const UniPoly& b) { return a += b; }
UniPoly operator-(UniPoly a, const UniPoly& b) { return a -= b; }
UniPoly operator-(const UniPoly& a) { return Rational(-1) * a; }
UniPoly operator*(const Rational& s, UniPoly a) { return a *= s; }

UniPoly operator*(const UniPoly& a, const UniPoly& b) {
  if (a.is_zero() || b.is_zero()) return {};
  const auto& x = a.coeffs();
  const auto& y = b.coeffs();
  RationalVec c(x.size() + y.size() - 1, Rational(0));
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) c[i + j] += x[i] * y[j];
  return UniPoly(std::move(c));
}

std::pair<UniPoly, UniPoly> divmod(const UniPoly& a, const UniPoly& b) {
  if (b.is_zero()) throw InputError("polynomial division by zero");
  RationalVec r = a.coeffs();
  const int db = b.degree();
  const Rational lead = b.leading();
  if (a.degree() < db) return {UniPoly{}, a};
  RationalVec q(static_cast<std::size_t>(a.degree() - db + 1), Rational(0));
  for (int k = a.degree(); k >= db; --k) {
    Rational f = r[k] / lead;
    q[k - db] = f;
    if (f == 0) continue;
    for (int j = 0; j <= db; ++j) r[k - db + j] -= f * b.coeffs()[j];
  }
  return {UniPoly(std::move(q)), UniPoly(std::move(r))};
}

UniPoly gcd(UniPoly a, UniPoly b) {
  while (!b.is_zero()) {
    auto r = divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return a.is_zero() ? a : make_monic(a);
}

UniPoly make_monic(const UniPoly& p) {
  if (p.is_zero()) throw InputError("cannot normalize the zero polynomial");
  return Rational(1) / p.leading() * p;
}

}  // namespace eprk
